#include <doctest.h>

#include "evolab/error.hpp"
#include "evolab/families.hpp"
#include "evolab/operator.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace evolab;

namespace {

Expr P(std::string_view s, int d = 1) { return parse(s, d); }

RadialDriftParams radial_defaults()
{
    RadialDriftParams p;
    p.omega = P("1");
    p.c1 = P("0.5");
    p.c = P("1");
    p.b = {P("-x1*(1+x1^2)^2")};
    return p;
}

ConfiningDriftParams confining_defaults()
{
    ConfiningDriftParams p;
    p.b = P("-1");
    p.q_matrix = {P("1")};
    p.c = P("(1+x1^2)^2");
    p.c_j = 1.0;
    return p;
}

// Independent application of A by central differences on the value only.
double fd_apply(const OperatorSpec& op, const Expr& psi, double t, std::vector<double> x, double h)
{
    const int d = op.dim();
    auto f = [&](const std::vector<double>& y) { return eval(psi, t, y); };
    const double f0 = f(x);
    double acc = 0.0;
    for (int i = 0; i < d; ++i) {
        auto xp = x;
        auto xm = x;
        xp[i] += h;
        xm[i] -= h;
        const double dii = (f(xp) - 2.0 * f0 + f(xm)) / (h * h);
        const double di = (f(xp) - f(xm)) / (2.0 * h);
        acc += eval(op.q(i, i), t, x) * dii + eval(op.b(i), t, x) * di;
        for (int j = i + 1; j < d; ++j) {
            auto pp = x, pm = x, mp = x, mm = x;
            pp[i] += h; pp[j] += h;
            pm[i] += h; pm[j] -= h;
            mp[i] -= h; mp[j] += h;
            mm[i] -= h; mm[j] -= h;
            const double dij = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h * h);
            acc += 2.0 * eval(op.q(i, j), t, x) * dij;
        }
    }
    return acc - eval(op.c(), t, x) * f0;
}

}  // namespace

TEST_SUITE("operator") {

TEST_CASE("apply on reference operators")
{
    const auto heat = heat_operator(2);
    const TestFunction sq("x1^2", 2);
    CHECK(apply(heat, sq, 0.3, std::vector<double>{0.7, -2.0}) == 2.0);

    Coefficients k;
    k.dim = 1;
    k.q = {P("1")};
    k.b = {P("0")};
    k.c = P("2.5");
    const OperatorSpec potential(k, 2.5, 1.0, {0.0, 1.0});
    CHECK(apply(potential, TestFunction("1", 1), 0.5, std::vector<double>{1.3}) == -2.5);
    CHECK_THROWS_AS(apply(potential, TestFunction("1", 1), 2.0, std::vector<double>{0.0}), ParameterError);
}

TEST_CASE("radial drift family applied to 1+x^2")
{
    const auto op = radial_drift_family(radial_defaults());
    const TestFunction phi("1+x1^2", 1);
    for (double x : {-3.0, -0.5, 0.0, 1.0, 2.5}) {
        const double w = 1.0 + x * x;
        const double expected = 2.0 - 2.0 * x * x * w * w - w;
        CHECK(apply(op, phi, 0.2, std::vector<double>{x}) == doctest::Approx(expected).epsilon(1e-13));
        CHECK(apply(op, phi, 0.2, std::vector<double>{x}) ==
              doctest::Approx(fd_apply(op, P("1+x1^2"), 0.2, {x}, 1e-4)).epsilon(1e-5));
    }
    CHECK(op.declared_c0() == 1.0);
    CHECK(op.declared_eta0() == 1.0);
}

TEST_CASE("apply agrees with finite differences on family instances")
{
    RadialDriftParams r2 = radial_defaults();
    r2.dim = 2;
    r2.k = 1;
    r2.m = 1;
    r2.l = 4;
    r2.omega = P("2+sin(t)");
    r2.c1 = P("0.5");
    r2.c = P("1+0.5*cos(x1*x2)", 2);
    r2.b = {P("-x1*(1+r^2)^4", 2), P("-x2*(1+r^2)^4", 2)};

    ConfiningDriftParams c2 = confining_defaults();
    c2.dim = 2;
    c2.m = 1.0;
    c2.r = 1.0;
    c2.q = 2.0;
    c2.b = P("-1-t");
    c2.q_matrix = {P("2", 2), P("0.5*sin(x1)", 2), P("2", 2)};
    c2.c = P("(1+r^2)^2", 2);

    const std::vector<OperatorSpec> ops{radial_drift_family(radial_defaults()), radial_drift_family(r2),
                                        confining_drift_family(confining_defaults()),
                                        confining_drift_family(c2)};
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::uniform_real_distribution<double> ut(0.0, 1.0);
    for (const auto& op : ops) {
        const int d = op.dim();
        const Expr psi = d == 1 ? P("exp(-x1^2/4)+x1") : P("exp(-(x1^2+x2^2)/4)+x1*x2", 2);
        const TestFunction tf(psi, d);
        for (int k = 0; k < 100; ++k) {
            std::vector<double> x(static_cast<std::size_t>(d));
            for (double& v : x) {
                v = u(rng);
            }
            const double t = ut(rng);
            const double exact = apply(op, tf, t, x);
            const double fd = fd_apply(op, psi, t, x, 1e-4);
            CHECK(std::abs(exact - fd) <= 1e-5 * std::max(1.0, std::abs(exact)));
        }
    }
}

TEST_CASE("beta and its divergence")
{
    const auto heat = heat_operator(1);
    CHECK(print(beta(heat)[0]) == "0");
    CHECK(print(div_beta(heat)) == "0");

    Coefficients k;
    k.dim = 1;
    k.q = {P("1+x1^2")};
    k.b = {P("0")};
    k.c = P("0");
    const OperatorSpec op(k, 0.0, 1.0, {0.0, 1.0});
    CHECK(eval(beta(op)[0], 0.0, std::vector<double>{1.5}) == -3.0);
    CHECK(eval(div_beta(op), 0.0, std::vector<double>{1.5}) == -2.0);

    Coefficients cubic;
    cubic.dim = 2;
    cubic.q = {P("1", 2), P("0", 2), P("1", 2)};
    cubic.b = {P("-x1^3", 2), P("-x2^3", 2)};
    cubic.c = P("0", 2);
    const OperatorSpec op2(cubic, 0.0, 1.0, {0.0, 1.0});
    std::vector<double> x{0.5, -2.0};
    CHECK(eval(div_beta(op2), 0.0, x) == doctest::Approx(-3.0 * 0.25 - 3.0 * 4.0));

    ConfiningDriftParams p = confining_defaults();
    p.m = 1.0;
    p.r = 1.0;
    p.q = 3.0;
    p.c = P("(1+x1^2)^3");
    const auto ex = confining_drift_family(p);
    const Expr b1 = beta(ex)[0];
    for (double xv : {-1.0, 0.3, 2.0}) {
        const double expected = -xv * (1 + xv * xv) - 2.0 * xv;
        CHECK(eval(b1, 0.5, std::vector<double>{xv}) == doctest::Approx(expected).epsilon(1e-14));
        const double h = 1e-5;
        const double fd = (eval(ex.q(0, 0), 0.5, std::vector<double>{xv + h}) -
                           eval(ex.q(0, 0), 0.5, std::vector<double>{xv - h})) / (2 * h);
        CHECK(eval(ex.b(0), 0.5, std::vector<double>{xv}) - fd ==
              doctest::Approx(eval(b1, 0.5, std::vector<double>{xv})).epsilon(1e-6));
    }
}

TEST_CASE("radial drift family constraints")
{
    auto p = radial_defaults();
    p.k = 2;
    CHECK_NOTHROW(radial_drift_family(p));
    p.k = 0;
    p.m = 3;
    p.l = 4;
    CHECK_THROWS_AS(radial_drift_family(p), ParameterError);

    auto weak = radial_defaults();
    weak.b = {P("-x1")};
    CHECK_THROWS_AS(radial_drift_family(weak), ParameterError);

    auto vanishing = radial_defaults();
    vanishing.omega = P("t");
    CHECK_THROWS_AS(radial_drift_family(vanishing), ParameterError);
}

TEST_CASE("confining drift family clauses")
{
    const auto p = confining_defaults();
    const auto cl = confining_clauses(p);
    CHECK(cl.drift_nonpositive);
    CHECK(cl.strict_drift);
    CHECK(cl.integrability);
    CHECK_NOTHROW(confining_drift_family(p));
    CHECK(confining_drift_family(p).declared_c0() == 1.0);

    auto q = confining_defaults();
    q.m = 2.0;
    q.r = 0.0;
    q.q = 1.0;
    q.c = P("1+x1^2");
    CHECK_FALSE(confining_clauses(q).strict_potential);
    try {
        confining_drift_family(q);
        FAIL("expected rejection");
    } catch (const ParameterError& e) {
        CHECK(std::string(e.what()).find("(iv") != std::string::npos);
    }

    auto up = confining_defaults();
    up.b = P("1");
    try {
        confining_drift_family(up);
        FAIL("expected rejection");
    } catch (const ParameterError& e) {
        CHECK(std::string(e.what()).find("(i)") != std::string::npos);
    }
}

TEST_CASE("family constructors are deterministic")
{
    const auto a = confining_drift_family(confining_defaults());
    const auto b = confining_drift_family(confining_defaults());
    CHECK(print(a.q(0, 0)) == print(b.q(0, 0)));
    CHECK(print(a.b(0)) == print(b.b(0)));
    CHECK(print(a.c()) == print(b.c()));
}

TEST_CASE("sampled validation of declared constants")
{
    const Lattice lattice(1, {0.0, 1.0});
    CHECK(validate(radial_drift_family(radial_defaults()), lattice).ok);

    Coefficients k;
    k.dim = 1;
    k.q = {P("1")};
    k.b = {P("0")};
    k.c = P("x1^2");
    CHECK(validate(OperatorSpec(k, 0.0, 1.0, {0.0, 1.0}), lattice).ok);
    CHECK_FALSE(validate(OperatorSpec(k, 0.5, 1.0, {0.0, 1.0}), lattice).ok);
    CHECK_FALSE(validate(OperatorSpec(k, 0.0, 2.0, {0.0, 1.0}), lattice).ok);
}

}
