#include <doctest.h>

#include "evolab/error.hpp"
#include "evolab/families.hpp"
#include "evolab/fkmc.hpp"

#include <cmath>
#include <vector>

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

const std::vector<double> origin{0.0};
const std::vector<double> one{1.0};

}  // namespace

TEST_SUITE("fkmc") {

TEST_CASE("martingale under the heat operator")
{
    const auto est = estimate(heat_operator(1), P("x1"), origin, 0.0, 0.5, {20000, 1e-2, 3, 1});
    CHECK(std::fabs(est.mean) <= 3.0 * est.std_error);
    CHECK(est.std_error > 0.0);
    CHECK(est.n_paths == 20000);
    CHECK(est.clip_rate == 0.0);
}

TEST_CASE("deterministic weight for a constant potential")
{
    const auto est = estimate(raw1("1", "0", "1.5", 1.5), P("1"), origin, 0.0, 0.5, {4000, 1e-2, 4, 1});
    CHECK(est.mean == doctest::Approx(std::exp(-0.75)).epsilon(1e-12));
    CHECK(est.std_error <= 1e-12);
}

TEST_CASE("Ornstein-Uhlenbeck mean")
{
    const auto est = estimate(ornstein_uhlenbeck(), P("x1"), one, 0.0, 0.5, {20000, 1e-2, 5, 1});
    // Euler bias: (1 - dt)^steps versus exp(-0.5)
    const double bias = std::fabs(std::pow(1.0 - 1e-2, 50.0) - std::exp(-0.5));
    CHECK(std::fabs(est.mean - std::exp(-0.5)) <= 3.0 * est.std_error + bias + 1e-12);
}

TEST_CASE("time-dependent coefficients are read in reversed time")
{
    // D^2 - t x D applied to x^2: u(1, x) = e^{-1} x^2 + 2 int_0^1 e^{-s^2} ds.
    const auto op = raw1("1", "-t*x1", "0", 0.0);
    McConfig cfg;
    cfg.n_paths = 100000;
    const auto e = estimate(op, P("x1^2"), one, 0.0, 1.0, cfg);
    const double exact = std::exp(-1.0) + std::sqrt(std::acos(-1.0)) * std::erf(1.0);
    CHECK(std::abs(e.mean - exact) <= 3.0 * e.std_error + 5e-3);
}

TEST_CASE("tail probabilities")
{
    const auto heat = heat_operator(1);
    const auto est = tail_mass_mc(heat, origin, 0.0, 0.5, 1.0, {20000, 1e-2, 6, 1});
    CHECK(std::fabs(est.mean - std::erfc(1.0 / std::sqrt(2.0))) <= 3.0 * est.std_error);
    CHECK(tail_mass_mc(heat, origin, 0.0, 0.5, 100.0, {2000, 1e-2, 6, 1}).mean == 0.0);

    const auto killed = tail_mass_mc(raw1("1", "0", "3+x1^2", 3.0), origin, 0.0, 0.5, 0.5, {5000, 1e-2, 7, 1});
    CHECK(killed.mean <= std::exp(-1.5) + 3.0 * killed.std_error);
}

TEST_CASE("seeded runs are reproducible and independent of workers")
{
    const auto op = raw1("1+0.5*sin(x1)", "-x1", "0.1*x1^2", 0.0);
    const McConfig cfg{5000, 1e-2, 42, 1};
    const auto a = estimate(op, P("cos(x1)"), one, 0.0, 0.5, cfg);
    const auto b = estimate(op, P("cos(x1)"), one, 0.0, 0.5, cfg);
    McConfig many = cfg;
    many.workers = 4;
    const auto c = estimate(op, P("cos(x1)"), one, 0.0, 0.5, many);
    CHECK(a.mean == b.mean);
    CHECK(a.std_error == b.std_error);
    CHECK(a.mean == c.mean);
    CHECK(a.std_error == c.std_error);
    McConfig other = cfg;
    other.seed = 43;
    CHECK(estimate(op, P("cos(x1)"), one, 0.0, 0.5, other).mean != a.mean);
}

TEST_CASE("two dimensions with correlated noise")
{
    Coefficients k;
    k.dim = 2;
    k.q = {P("1", 2), P("0.5", 2), P("1", 2)};
    k.b = {P("0", 2), P("0", 2)};
    k.c = P("0", 2);
    const OperatorSpec op(k, 0.0, 0.5, {0.0, 1.0});
    const std::vector<double> x{0.0, 0.0};
    // E[X1 X2] = 2 q12 t
    const auto est = estimate(op, P("x1*x2", 2), x, 0.0, 0.5, {20000, 1e-2, 9, 1});
    CHECK(std::fabs(est.mean - 0.5) <= 3.0 * est.std_error);
}

TEST_CASE("invalid requests")
{
    CHECK_THROWS_AS(estimate(heat_operator(1), P("1"), origin, 0.0, 0.5, {1, 1e-2, 1, 1}), ParameterError);
    CHECK_THROWS_AS(estimate(heat_operator(1), P("1"), origin, 0.0, 0.55, {10, 0.1, 1, 1}), ParameterError);
    CHECK_THROWS_AS(estimate(heat_operator(1), P("1"), std::vector<double>{0.0, 0.0}, 0.0, 0.5, {10, 0.1, 1, 1}),
                    ParameterError);
    CHECK_THROWS_AS(estimate(raw1("1", "0", "log(x1)", 0.0), P("1"), one, 0.0, 0.5, {10, 0.1, 1, 1}),
                    DomainError);
}

}
