#include <doctest.h>

#include "evolab/error.hpp"
#include "evolab/families.hpp"
#include "evolab/hypotheses.hpp"

#include <cmath>
#include <vector>

using namespace evolab;

namespace {

Expr P(std::string_view s, int d = 1) { return parse(s, d); }

OperatorSpec radial_default()
{
    RadialDriftParams p;
    p.omega = P("1");
    p.c1 = P("0.5");
    p.c = P("1");
    p.b = {P("-x1*(1+x1^2)^2")};
    return radial_drift_family(p);
}

OperatorSpec confining_default()
{
    ConfiningDriftParams p;
    p.b = P("-1");
    p.q_matrix = {P("1")};
    p.c = P("(1+x1^2)^2");
    return confining_drift_family(p);
}

OperatorSpec raw(std::string_view q, std::string_view b, std::string_view c, double c0)
{
    Coefficients k;
    k.dim = 1;
    k.q = {P(q)};
    k.b = {P(b)};
    k.c = P(c);
    return OperatorSpec(k, c0, 1.0, {0.0, 1.0});
}

OperatorSpec outward() { return raw("1", "x1*abs(x1)^2", "0", 0.0); }

OperatorSpec remark(int q)
{
    const std::string c = "(t^2+1)*(1+r^2)^" + std::to_string(q);
    return raw("1", "-((t^2+2)/(t^2+1))*(2+sin(r^4))*x1", c, 1.0);
}

const Sampling S{};

}  // namespace

TEST_SUITE("hypotheses") {

TEST_CASE("lyapunov function")
{
    for (int d : {1, 2}) {
        const auto heat = heat_operator(d);
        const TestFunction phi("1+r^2", d);
        const auto rep = check_lyapunov(heat, phi, S);
        CHECK(rep.pass);
        CHECK(rep.constant("lambda") == doctest::Approx(2.0 * d));
        CHECK(std::abs(rep.worst_margin) <= 1e-12);
        const auto minus_c = check_lyapunov_minus_c(heat, phi, S);
        CHECK(minus_c.constant("lambda") == rep.constant("lambda"));
        CHECK(minus_c.worst_margin == rep.worst_margin);
    }
    const TestFunction phi("1+x1^2", 1);
    const auto ex = check_lyapunov(radial_default(), phi, S);
    CHECK(ex.pass);
    CHECK(std::abs(ex.worst_margin) <= 1e-12);
    CHECK(check_lyapunov_minus_c(radial_default(), phi, S).pass);
    CHECK_FALSE(check_lyapunov(outward(), phi, S).pass);
    CHECK_FALSE(check_lyapunov_minus_c(outward(), phi, S).pass);

    CHECK_THROWS_AS(check_lyapunov(heat_operator(1), TestFunction("x1", 1), S), ParameterError);
    CHECK_THROWS_AS(check_lyapunov(heat_operator(1), TestFunction("2+sin(x1)", 1), S), ParameterError);
}

TEST_CASE("bounded function W")
{
    const auto heat = heat_operator(1);
    const TestFunction one("1", 1);
    const auto zero = check_W(heat, one, 0.0, 1.0, S);
    CHECK(zero.pass);
    CHECK(zero.worst_margin == 0.0);
    const auto minus = check_W(heat, one, 1.0, 1.0, S);
    CHECK_FALSE(minus.pass);
    CHECK(minus.worst_margin == -1.0);

    const TestFunction w("1+1/(1+x1^2)", 1);
    const std::vector<double> radii{0.0, 0.5, 1.0, 2.0, 4.0, 8.0};
    const auto fit = fit_W_radius(radial_default(), w, 0.0, radii, S);
    REQUIRE(fit.has_value());
    CHECK(fit->pass);
    CHECK_FALSE(check_W(radial_default(), w, 0.0, 0.0, S).pass);

    CHECK_THROWS_AS(check_W(heat, TestFunction("1+x1^2", 1), 0.0, 1.0, S), ParameterError);
    CHECK_THROWS_AS(check_W(heat, TestFunction("-1", 1), 0.0, 1.0, S), ParameterError);
}

TEST_CASE("comparison function h")
{
    const TestFunction phi("1+x1^2", 1);
    const auto fit = check_h(radial_default(), phi, S, 3);
    CHECK(fit.pass);
    CHECK(fit.constant("gamma") > 0.0);
    CHECK(std::isfinite(fit.constant("C_prime")));
    CHECK(fit.constant("C_prime") >= 0.0);

    CHECK_FALSE(check_h(heat_operator(1), phi, S, 3).pass);
    CHECK_FALSE(check_h(heat_operator(1), phi, S, 2, HForm{0.1, 0.0, 2}).pass);

    // C' one below the largest A phi + phi^l forces a margin of -1 at the argmax
    const auto heat = heat_operator(1);
    const Lattice lattice(1, S.interval, S.lattice);
    double top = -1e300;
    for (const auto& e : shell_profile(lattice, [&](double t, std::span<const double> x) {
             return apply(heat, phi, t, x) + power(phi.value(t, x), 2);
         })) {
        top = std::max(top, e.max);
    }
    const auto forced = check_h(heat, phi, S, 2, HForm{1.0, top - 1.0, 2});
    CHECK_FALSE(forced.pass);
    CHECK(forced.worst_margin == doctest::Approx(-1.0).epsilon(1e-9));

    CHECK_THROWS_AS(check_h(heat, phi, S, 1), ParameterError);
    CHECK_THROWS_AS(check_h(heat, phi, S, 2, HForm{-1.0, 0.0, 2}), ParameterError);
}

TEST_CASE("divergence condition")
{
    CHECK(lp_exponent(0.0, 2.0, 0.0) == 0.0);
    CHECK(lp_exponent(3.0, 3.0, -3.0) == 3.0);

    const auto rep = check_div(confining_default(), S, 2.0);
    CHECK(rep.pass);
    CHECK(std::isfinite(rep.constant("K")));
    // c + div beta = x^4 - x^2, sampled at step 0.5
    CHECK(rep.constant("K") == doctest::Approx(0.1875));
    CHECK(rep.constant("K_p") == doctest::Approx((0.1875 - 1.0) / 2.0));
    CHECK(std::abs(rep.worst_margin) <= 1e-12);

    // the oscillating drift makes div beta swing like r^4, beyond what c absorbs
    CHECK_FALSE(check_div(remark(2), S, 2.0).pass);
    CHECK_FALSE(check_div(raw("1", "-x1^3", "0", 0.0), S, 2.0).pass);
}

TEST_CASE("drift compensation")
{
    const auto zero = check_drift_compensation(raw("1", "0", "x1^2", 0.0), S, 2.0);
    CHECK(zero.pass);
    CHECK(zero.constant("K_prime") == 0.0);

    const auto q2 = check_drift_compensation(remark(2), S, 2.0);
    CHECK(q2.pass);
    CHECK(std::isfinite(q2.constant("K_prime")));
    CHECK(q2.constant("K_prime") > 0.0);
    CHECK_FALSE(check_drift_compensation(remark(1), S, 2.0).pass);
    CHECK_THROWS_AS(check_drift_compensation(remark(2), S, 1.0), ParameterError);
}

TEST_CASE("decaying function V")
{
    const TestFunction v("1/(1+x1^2)", 1);
    const auto ex = check_V(confining_default(), v, S);
    CHECK(ex.pass);
    const auto heat_fit = check_V(heat_operator(1), v, S);
    CHECK(heat_fit.pass);
    CHECK(heat_fit.constant("lambda0") > 0.0);
    CHECK_FALSE(check_V(heat_operator(1), v, S, 0.0).pass);

    // A V decreases without bound on the shells
    const auto op = confining_default();
    const Lattice lattice(1, S.interval, S.lattice);
    const auto prof = shell_profile(lattice, [&](double t, std::span<const double> x) { return apply(op, v, t, x); });
    CHECK(prof.back().max < -100.0);
    CHECK(prof.back().max < prof[prof.size() / 2].max);
}

TEST_CASE("bounded A phi")
{
    const TestFunction phi("1+r^2", 2);
    const auto heat = check_bounded_Aphi(heat_operator(2), phi, S);
    CHECK(heat.pass);
    CHECK(heat.constant("M_J") == 4.0);
    const TestFunction phi1("1+x1^2", 1);
    CHECK(check_bounded_Aphi(radial_default(), phi1, S).pass);
    CHECK_FALSE(check_bounded_Aphi(outward(), phi1, S).pass);
}

TEST_CASE("fitted constants put the worst margin at zero")
{
    const TestFunction phi("1+x1^2", 1);
    const TestFunction v("1/(1+x1^2)", 1);
    CHECK(std::abs(check_bounded_Aphi(radial_default(), phi, S).worst_margin) <= 1e-12);
    CHECK(std::abs(check_V(heat_operator(1), v, S).worst_margin) <= 1e-12);
    CHECK(std::abs(check_drift_compensation(remark(2), S, 2.0).worst_margin) <= 1e-12);
}

TEST_CASE("enlarging a constant never breaks a pass")
{
    const TestFunction phi("1+x1^2", 1);
    const TestFunction v("1/(1+x1^2)", 1);
    const auto op = confining_default();
    const double l0 = check_V(op, v, S).constant("lambda0");
    const double k = check_div(op, S, 2.0).constant("K");
    const double m = check_bounded_Aphi(radial_default(), phi, S).constant("M_J");
    for (double extra : {0.0, 1e-6, 0.5, 10.0}) {
        CHECK(check_V(op, v, S, l0 + extra).pass);
        CHECK(check_div(op, S, 2.0, k + extra).pass);
        CHECK(check_bounded_Aphi(radial_default(), phi, S, m + extra).pass);
    }
}

TEST_CASE("minus A phi diverges along the shells")
{
    const auto op = radial_default();
    const TestFunction phi("1+x1^2", 1);
    const Lattice lattice(1, S.interval, S.lattice);
    const auto prof =
        shell_profile(lattice, [&](double t, std::span<const double> x) { return -apply(op, phi, t, x); });
    for (std::size_t k = 1; k < prof.size(); ++k) {
        if (prof[k - 1].radius >= 2.0) {
            CHECK(prof[k].min > prof[k - 1].min);
        }
    }
}

TEST_CASE("reports are reproducible")
{
    const TestFunction phi("1+x1^2", 1);
    const auto a = check_h(radial_default(), phi, S, 3).serialize();
    const auto b = check_h(radial_default(), phi, S, 3).serialize();
    CHECK(a == b);
    CHECK(a.find("condition=h") == 0);
    CHECK(a.find('\n') == std::string::npos);
}

}
