#include <doctest.h>

#include "evolab/error.hpp"
#include "evolab/families.hpp"
#include "evolab/harness.hpp"

#include <cmath>
#include <set>

using namespace evolab;

namespace {

Expr P(std::string_view s, int d = 1) { return parse(s, d); }

OperatorSpec radial()
{
    RadialDriftParams p;
    p.omega = P("1");
    p.c1 = P("0.5");
    p.c = P("1");
    p.b = {P("-x1*(1+x1^2)^2")};
    return radial_drift_family(p);
}

OperatorSpec confining()
{
    ConfiningDriftParams p;
    p.b = P("-1");
    p.q_matrix = {P("1")};
    p.c = P("(1+x1^2)^2");
    return confining_drift_family(p);
}

HarnessSetup small(OperatorSpec op)
{
    HarnessSetup s(std::move(op));
    s.points = 401;
    s.mc.n_paths = 4096;
    return s;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("catalog")
{
    const auto& cat = check_catalog();
    CHECK(cat.size() == 11);
    std::set<std::string> ids;
    std::string anchors;
    for (const auto& c : cat) {
        ids.insert(c.id);
        anchors += c.anchor + " ";
    }
    CHECK(ids.size() == cat.size());
    for (const char* a : {"stima-sol", "form-fond", "l_bound", "1_est"})
        CHECK(anchors.find(a) != std::string::npos);
    CHECK(cat.front().id == "supnorm");
    CHECK_FALSE(find_check("nope").has_value());
    Harness h(small(heat_operator(1)));
    CHECK_THROWS_AS(h.run("nope"), ParameterError);
    CHECK_THROWS_AS(h.run_all({"supnorm", "nope"}, 1), ParameterError);
}

TEST_CASE("heat operator passes the sub-Markov and identity checks")
{
    Harness h(small(heat_operator(1)));
    for (const char* id : {"supnorm", "evolution_law", "lp_bound", "not_c0", "kernel_mass",
                           "monotone_dirichlet", "dirichlet_neumann_agree"}) {
        const auto o = h.run(id);
        INFO(o.line());
        CHECK(o.pass);
        CHECK_FALSE(o.skipped);
    }
}

TEST_CASE("constant potential saturates the sup-norm bound")
{
    Coefficients k;
    k.dim = 1;
    k.q = {P("1")};
    k.b = {P("0")};
    k.c = P("1");
    auto s = small(OperatorSpec(k, 1.0, 1.0, {0.0, 1.0}));
    Harness h(s);
    const auto o = h.supnorm();
    CHECK(o.pass);
    // f = 1 gives (1 + dt)^(-500), just above exp(-1/2).
    CHECK(o.measured[0].second == doctest::Approx(std::pow(1.001, -500.0)).epsilon(1e-12));
}

TEST_CASE("evolution law refuses misaligned pairs")
{
    auto s = small(heat_operator(1));
    s.pairs = {{0.0, 0.5004}};
    s.dt = 1e-3;
    const auto o = Harness(s).evolution_law();
    CHECK(o.skipped);
    CHECK_FALSE(o.reason.empty());
}

TEST_CASE("integral identity: empty span and refinement")
{
    Harness h(HarnessSetup{heat_operator(1)});
    CHECK(h.integral_identity().pass);
    CHECK(h.integral_identity_residual(1e-3, 0.2, 0.2, 0.5) == 0.0);
    const double coarse = h.integral_identity_residual(1e-3, 0.0, 0.25, 0.5);
    const double fine = h.integral_identity_residual(5e-4, 0.0, 0.25, 0.5);
    CHECK(coarse / fine >= 1.7);
}

TEST_CASE("L^p bound on the confining instance")
{
    Harness h(small(confining()));
    const auto o = h.lp_bound();
    CHECK(o.pass);
    CHECK(o.reason == "route=div");

    auto one = small(heat_operator(1));
    one.p = 1.0;
    const auto o1 = Harness(one).lp_bound();
    INFO(o1.line());
    CHECK(o1.pass);
    CHECK(o1.value <= 1.0 + 1e-9);
}

TEST_CASE("C0 preservation and its routing")
{
    const auto conf = Harness(small(confining())).c0_preservation();
    CHECK(conf.pass);
    const auto heat = Harness(small(heat_operator(1))).c0_preservation();
    CHECK(heat.pass);
    const auto rad = Harness(small(radial())).c0_preservation();
    CHECK(rad.skipped);
    CHECK(rad.reason.find("not_c0") != std::string::npos);
}

TEST_CASE("radial drift instance: mass bounded below, no decay")
{
    Harness h(small(radial()));
    const auto o = h.not_c0();
    INFO(o.line());
    CHECK(o.pass);
    CHECK(o.value >= 0.05);
    CHECK(h.kernel_mass().pass);
    CHECK(h.monotone_dirichlet().pass);
    CHECK(h.dirichlet_neumann_agree().pass);
    // The confining instance does decay on the outer shell.
    CHECK_FALSE(Harness(small(confining())).not_c0().pass);
}

TEST_CASE("slight bound saturates for the heat operator")
{
    Harness h(small(heat_operator(1)));
    const auto o = h.slight_bound();
    CHECK(o.pass);
    CHECK(std::abs(o.value) <= 1e-3);
    CHECK(o.measured[0].second == doctest::Approx(2.0));

    Coefficients k;
    k.dim = 1;
    k.q = {P("1")};
    k.b = {P("0")};
    k.c = P("-1");
    CHECK(Harness(small(OperatorSpec(k, -1.0, 1.0, {0.0, 1.0}))).slight_bound().skipped);
}

TEST_CASE("Monte Carlo cross-validation")
{
    Harness h(small(ornstein_uhlenbeck()));
    const auto o = h.fk_crossval();
    INFO(o.line());
    CHECK(o.pass);
    CHECK(o.table.rows.size() == 9);
}

TEST_CASE("reruns and worker counts give identical records")
{
    const std::vector<std::string> ids{"supnorm", "kernel_mass", "fk_crossval", "not_c0"};
    Harness a(small(radial()));
    Harness b(small(radial()));
    const auto ra = a.run_all(ids, 1);
    const auto rb = b.run_all(ids, 3);
    REQUIRE(ra.size() == rb.size());
    for (std::size_t i = 0; i < ra.size(); ++i) {
        CHECK(ra[i].id == ids[i]);
        CHECK(ra[i].line() == rb[i].line());
    }
}

TEST_CASE("compactness run and tightness family")
{
    Harness h(small(radial()));
    const auto run = h.compactness();
    CHECK(run.verdict.label() == "consistent-with-compactness");
    const auto fam = h.tightness_family();
    CHECK(fam.pairs == 9);
    CHECK(fam.base_points == 5);
    CHECK(fam.decreasing);
    CHECK(fam.sup_tail.back() < 1e-6);

    const auto refused = Harness(small(heat_operator(1))).compactness();
    CHECK(refused.verdict.label() == "refused");
}

}  // TEST_SUITE
