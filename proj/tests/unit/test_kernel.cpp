#include <doctest.h>

#include "evolab/error.hpp"
#include "evolab/families.hpp"
#include "evolab/kernel.hpp"

#include <cmath>

using namespace evolab;

namespace {

Expr P(std::string_view s, int d = 1) { return parse(s, d); }

OperatorSpec raw1(std::string_view q, std::string_view b, std::string_view c, double c0)
{
    Coefficients k;
    k.dim = 1;
    k.q = {P(q)};
    k.b = {P(b)};
    k.c = P(c);
    return OperatorSpec(k, c0, 1.0, {0.0, 1.0});
}

double normal_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

const Propagator& heat_reference()
{
    static const Propagator p =
        build_propagator(heat_operator(1), {Boundary::Neumann, 1e-3}, Grid(1, 8.0, 801), 0.0, 0.5);
    return p;
}

}  // namespace

TEST_SUITE("kernel") {

TEST_CASE("empty time span gives the identity")
{
    const Grid g(1, 2.0, 21);
    const auto p = build_propagator(heat_operator(1), {Boundary::Neumann, 0.1}, g, 0.3, 0.3);
    CHECK(p.matrix().isIdentity(0.0));
}

TEST_CASE("heat kernel row")
{
    const auto& p = heat_reference();
    const Grid& g = p.grid();
    const std::size_t origin = g.node(400);
    double tv = 0.0;
    double total = 0.0;
    for (std::size_t y = 0; y < g.size(); ++y) {
        const double x = g.point(y)[0];
        total += std::exp(-x * x / 2.0);
    }
    const double row = p.mass(origin);
    for (std::size_t y = 0; y < g.size(); ++y) {
        const double x = g.point(y)[0];
        tv += std::fabs(p.matrix()(static_cast<Eigen::Index>(origin), static_cast<Eigen::Index>(y)) / row
                        - std::exp(-x * x / 2.0) / total);
    }
    CHECK(0.5 * tv <= 2e-3);
    CHECK(p.kernel(origin, origin) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-2));

    CHECK(p.tail_mass(origin, 5.0) == doctest::Approx(2.0 * normal_tail(5.0)).epsilon(0.2));
    CHECK(std::fabs(p.tail_mass(origin, 5.0) - 2.0 * normal_tail(5.0)) <= 1e-7);
    CHECK(p.tail_mass(origin, 8.0) == 0.0);
    CHECK(p.tail_mass(origin, 0.0) ==
          doctest::Approx(p.mass(origin) - p.matrix()(static_cast<Eigen::Index>(origin), static_cast<Eigen::Index>(origin)))
              .epsilon(1e-14));
    CHECK(std::fabs(p.mass(origin) - 1.0) <= 1e-12);
}

TEST_CASE("row sums under a constant potential")
{
    const Grid g(1, 3.0, 61);
    const auto p = build_propagator(raw1("1", "0", "2", 2.0), {Boundary::Neumann, 0.01}, g, 0.0, 0.5);
    const double expected = std::pow(1.02, -50.0);
    for (std::size_t x = 0; x < g.size(); ++x) {
        CHECK(p.mass(x) == doctest::Approx(expected).epsilon(1e-12));
    }
    CHECK(row_sum_bound(2.0, 0.01, 0.0, 0.5) == expected);
    CHECK(row_sum_bound(-1.0, 0.01, 0.0, 0.5) == std::exp(0.5));

    const auto d = build_propagator(heat_operator(1), {Boundary::Dirichlet, 0.01}, g, 0.0, 0.5);
    for (std::size_t x = 0; x < g.size(); ++x) {
        CHECK(d.mass(x) < 1.0);
    }
}

TEST_CASE("evolution law, positivity and consistency")
{
    const Grid g(1, 4.0, 81);
    const auto op = raw1("1+0.5*sin(t)*x1^2/(1+x1^2)", "-x1^3+cos(t)", "x1^2/(1+x1^2)", 0.0);
    for (Boundary bc : {Boundary::Dirichlet, Boundary::Neumann}) {
        const SolveConfig cfg{bc, 0.01};
        const auto full = build_propagator(op, cfg, g, 0.1, 0.7);
        const auto first = build_propagator(op, cfg, g, 0.1, 0.3);
        const auto second = build_propagator(op, cfg, g, 0.3, 0.7);
        const Eigen::MatrixXd product = second.matrix() * first.matrix();
        CHECK((product - full.matrix()).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(full.matrix().minCoeff() >= -1e-14);
        for (std::size_t x = 0; x < g.size(); ++x) {
            CHECK(full.mass(x) <= row_sum_bound(op.declared_c0(), cfg.dt, 0.1, 0.7) + 1e-12);
        }
        const Field f = sample(g, P("exp(-x1^2)*(1+x1)"), 0.1);
        const Field u = solve(op, cfg, f, 0.7);
        const auto pu = full.apply(f.values);
        for (std::size_t k = 0; k < g.size(); ++k) {
            CHECK(pu[k] == doctest::Approx(u.values[k]).epsilon(1e-12).scale(1.0));
        }
    }

    const auto neg = raw1("1", "-x1", "-1+0.5/(1+x1^2)", -1.0);
    const auto pn = build_propagator(neg, {Boundary::Neumann, 0.01}, g, 0.0, 0.5);
    for (std::size_t x = 0; x < g.size(); ++x) {
        CHECK(pn.mass(x) <= std::exp(0.5) + 1e-12);
        CHECK(pn.mass(x) > 1.0);
    }
}

TEST_CASE("tightness and mass diagnostics")
{
    const auto& p = heat_reference();
    const auto prof = tightness_profile(p, 2.0, {1.0, 2.0, 3.0, 4.0, 5.0, 8.0});
    for (std::size_t k = 1; k < prof.size(); ++k) {
        CHECK(prof[k].sup_tail <= prof[k - 1].sup_tail);
    }
    CHECK(prof.back().sup_tail == 0.0);
    // the worst starting point for |y| > 1 is the window edge
    CHECK(std::fabs(p.grid().point(prof.front().argmax)[0]) == doctest::Approx(2.0));
    const auto box = tightness_profile(p, 0.0, {5.0}, TailNorm::Max);
    CHECK(box.front().sup_tail <= prof[4].sup_tail);

    const auto mb = mass_lower_bound_check(p, 2.0);
    CHECK(std::fabs(mb.min_mass - 1.0) <= 1e-12);

    const auto small = build_propagator(heat_operator(1), {Boundary::Dirichlet, 1e-2}, Grid(1, 1.0, 41), 0.0, 1.0);
    CHECK(mass_lower_bound_check(small, 0.5).max_mass < 0.5);
}

TEST_CASE("two-dimensional propagator")
{
    const Grid g(2, 3.0, 21);
    const auto p = build_propagator(heat_operator(2), {Boundary::Neumann, 0.05}, g, 0.0, 0.5);
    const std::size_t origin = g.node(10, 10);
    CHECK(std::fabs(p.mass(origin) - 1.0) <= 1e-12);
    CHECK(p.matrix().minCoeff() >= -1e-14);
    CHECK(p.tail_mass(origin, 1.0) == doctest::Approx(std::exp(-0.5)).epsilon(0.1));
    CHECK_THROWS_AS(build_propagator(heat_operator(2), {Boundary::Neumann, 0.05}, Grid(2, 3.0, 201), 0.0, 0.5),
                    ParameterError);
}

}
