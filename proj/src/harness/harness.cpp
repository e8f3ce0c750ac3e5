#include "evolab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <random>
#include <thread>

namespace evolab {

namespace {

std::string num(double v, const char* f = "%.12g")
{
    char buf[40];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double euclid(std::span<const double> x)
{
    double s = 0.0;
    for (double v : x)
        s += v * v;
    return std::sqrt(s);
}

std::vector<double> pick(const std::vector<double>& v, const std::vector<std::size_t>& nodes)
{
    std::vector<double> out;
    out.reserve(nodes.size());
    for (std::size_t k : nodes)
        out.push_back(v[k]);
    return out;
}

double sup_abs(const std::vector<double>& v)
{
    double m = 0.0;
    for (double x : v)
        m = std::max(m, std::abs(x));
    return m;
}

/// Nodes with lo <= |x| <= hi.
std::vector<std::size_t> shell_nodes(const Grid& g, double lo, double hi)
{
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double r = euclid(g.point(k));
        if (r >= lo - 1e-12 && r <= hi + 1e-12)
            out.push_back(k);
    }
    return out;
}

std::size_t center_node(const Grid& g)
{
    const int c = (g.points() - 1) / 2;
    return g.dim() == 1 ? g.node(c) : g.node(c, c);
}

/// Discrete L^p norm with cell-volume weights.
double lp_norm(const std::vector<double>& v, double p, double cell)
{
    double s = 0.0;
    for (double x : v)
        s += std::pow(std::abs(x), p);
    return std::pow(s * cell, 1.0 / p);
}

CheckOutcome start(const std::string& id)
{
    CheckOutcome o;
    o.id = id;
    o.anchor = find_check(id)->anchor;
    return o;
}

CheckOutcome skip(CheckOutcome o, std::string reason)
{
    o.skipped = true;
    o.pass = false;
    o.reason = std::move(reason);
    return o;
}

void decide(CheckOutcome& o, double value, const char* relation, double expected, double tol)
{
    o.value = value;
    o.relation = relation;
    o.expected = expected;
    o.tol = tol;
    if (o.relation == "<=")
        o.pass = value <= expected + tol;
    else
        o.pass = value >= expected - tol;
}

/// Boundary maximum of phi times the mass reaching the last tenth of the box.
double clip_bound(const Propagator& p, const std::vector<double>& phi, std::size_t x)
{
    double edge = 0.0;
    for (std::size_t k = 0; k < phi.size(); ++k)
        if (p.grid().on_boundary(k))
            edge = std::max(edge, phi[k]);
    return edge * p.tail_mass(x, 0.9 * p.grid().half_width(), TailNorm::Max);
}

}  // namespace

double HarnessSetup::tolerance(const std::string& check, double fallback) const
{
    const auto it = tolerances.find(check);
    return it == tolerances.end() ? fallback : it->second;
}

std::string CheckOutcome::line() const
{
    std::string s = "check=" + id + " anchor=" + anchor + " status=";
    s += skipped ? "SKIP" : (pass ? "PASS" : "FAIL");
    if (!skipped) {
        s += " value=" + num(value) + " relation=" + relation + " expected=" + num(expected) + " tol=" + num(tol, "%.3g");
        for (const auto& [name, v] : measured)
            s += " " + name + "=" + num(v);
    }
    if (!reason.empty())
        s += " note=\"" + reason + "\"";
    return s;
}

const std::vector<CheckInfo>& check_catalog()
{
    static const std::vector<CheckInfo> catalog{
        {"supnorm", "stima-sol", "sup-norm of G(t,s)f bounded by exp(-c0 (t-s)) |f|"},
        {"evolution_law", "greenkernel", "G(t,r) = G(t,s) G(s,r) on aligned grids"},
        {"integral_identity", "form-fond", "G(t,s1)f - G(t,s0)f + int G(t,.)A f = 0, first order in dt"},
        {"lp_bound", "stima-norma-op-Lp", "L^p growth bounded by exp(K_p (t-s)) or exp(K'_p (t-s))"},
        {"c0_preservation", "C0-invariance", "outer-shell values bounded by the V barrier"},
        {"not_c0", "subsect-consequences", "G(t,s)1 bounded below, no decay on the outer shell"},
        {"monotone_dirichlet", "thm-1.3", "Dirichlet solutions increase along exhausting boxes"},
        {"dirichlet_neumann_agree", "thm-1.3", "Dirichlet and Neumann solutions share the limit"},
        {"kernel_mass", "1_est,l_bound", "row sums bounded above by the decay factor and below on the window"},
        {"slight_bound", "slight_hyp", "G(t,s)phi <= phi + M_J (t-s)"},
        {"fk_crossval", "repres-formula", "solver agrees with Feynman-Kac Monte Carlo"},
    };
    return catalog;
}

std::optional<CheckInfo> find_check(const std::string& id)
{
    for (const auto& c : check_catalog())
        if (c.id == id)
            return c;
    return std::nullopt;
}

std::shared_ptr<const Propagator> PropagatorCache::get(const OperatorSpec& op, const SolveConfig& cfg,
                                                      const Grid& grid, double s, double t)
{
    const std::string key = std::to_string(static_cast<int>(cfg.bc)) + "|" + num(cfg.dt, "%a") + "|" +
                            std::to_string(grid.dim()) + "|" + num(grid.half_width(), "%a") + "|" +
                            std::to_string(grid.points()) + "|" + num(s, "%a") + "|" + num(t, "%a");
    const std::lock_guard lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end())
        it = entries_.emplace(key, std::make_shared<const Propagator>(build_propagator(op, cfg, grid, s, t))).first;
    return it->second;
}

std::shared_ptr<const Propagator> Harness::propagator(Boundary bc, double s, double t)
{
    return cache_.get(setup_.op, {bc, setup_.dt}, setup_.grid(), s, t);
}

std::vector<double> Harness::nodal(const std::string& source, double t) const
{
    return sample(setup_.grid(), setup_.expr(source), t).values;
}

CheckOutcome Harness::supnorm()
{
    auto o = start("supnorm");
    const Grid g = setup_.grid();
    const auto window = window_nodes(g, setup_.window_half);

    std::vector<std::vector<double>> data{nodal(setup_.datum, 0.0), nodal("1", 0.0)};
    std::vector<double> alternating(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
        int parity = 0;
        for (int a = 0; a < g.dim(); ++a)
            parity += g.axis_index(k, a);
        alternating[k] = parity % 2 == 0 ? 1.0 : -1.0;
    }
    data.push_back(std::move(alternating));

    o.table.columns = {"s", "t", "datum", "sup_window", "bound"};
    double worst = -std::numeric_limits<double>::infinity();
    double worst_sup = 0.0;
    double worst_bound = 0.0;
    for (const TimePair& pr : setup_.pairs) {
        const auto p = propagator(Boundary::Neumann, pr.s, pr.t);
        const double decay = std::exp(-setup_.op.declared_c0() * (pr.t - pr.s));
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double sup = sup_abs(pick(p->apply(data[i]), window));
            const double bound = decay * sup_abs(data[i]);
            o.table.rows.push_back({pr.s, pr.t, static_cast<double>(i), sup, bound});
            if (sup - bound > worst) {
                worst = sup - bound;
                worst_sup = sup;
                worst_bound = bound;
            }
        }
    }
    o.measured = {{"sup", worst_sup}, {"bound", worst_bound}};
    decide(o, worst, "<=", 0.0, setup_.tolerance("supnorm", 1e-3));
    return o;
}

CheckOutcome Harness::evolution_law()
{
    auto o = start("evolution_law");
    const Grid g = setup_.grid();
    std::mt19937_64 rng(setup_.random_seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::vector<std::vector<double>> data(5, std::vector<double>(g.size()));
    for (auto& f : data)
        for (double& v : f)
            v = unit(rng);

    o.table.columns = {"r", "s", "t", "datum", "defect"};
    double worst = 0.0;
    for (const TimePair& pr : setup_.pairs) {
        long steps = 0;
        try {
            steps = aligned_steps(pr.s, pr.t, setup_.dt);
        } catch (const ParameterError&) {
            return skip(o, "time pair (" + num(pr.s) + ", " + num(pr.t) + ") is not aligned with dt");
        }
        if (steps < 2)
            return skip(o, "time pair spans fewer than two steps");
        const double mid = pr.s + setup_.dt * static_cast<double>(steps / 2);
        const auto whole = propagator(Boundary::Neumann, pr.s, pr.t);
        const auto late = propagator(Boundary::Neumann, mid, pr.t);
        const auto early = propagator(Boundary::Neumann, pr.s, mid);
        for (std::size_t i = 0; i < data.size(); ++i) {
            const auto direct = whole->apply(data[i]);
            const auto split = late->apply(early->apply(data[i]));
            double d = 0.0;
            for (std::size_t k = 0; k < direct.size(); ++k)
                d = std::max(d, std::abs(direct[k] - split[k]));
            o.table.rows.push_back({pr.s, mid, pr.t, static_cast<double>(i), d});
            worst = std::max(worst, d);
        }
    }
    o.measured = {{"defect", worst}};
    decide(o, worst, "<=", 0.0, setup_.tolerance("evolution_law", 1e-12));
    return o;
}

double Harness::integral_identity_residual(double dt, double s0, double s1, double t)
{
    const Grid g = setup_.grid();
    const OperatorSpec& op = setup_.op;
    const long m = aligned_steps(s0, s1, dt);
    aligned_steps(s1, t, dt);
    const TestFunction f(setup_.expr(setup_.datum), op.dim());

    ImplicitStepper stepper(op, g, {Boundary::Neumann, dt});
    const double shift = stepper.shift();
    auto a_f = [&](double sigma) {
        std::vector<double> out(g.size());
        for (std::size_t k = 0; k < g.size(); ++k)
            out[k] = apply(op, f, sigma, g.point(k), Potential::Include);
        return out;
    };
    // Trapezoid weights; each term carries the factor that undoes the shift
    // over its own remaining span.
    auto weight = [&](long j) {
        const double w = (j == 0 || j == m) ? 0.5 * dt : dt;
        return w * std::exp(shift * (t - (s0 + dt * static_cast<double>(j))));
    };

    Eigen::MatrixXd block(static_cast<Eigen::Index>(g.size()), 3);  // acc, from s0, from s1
    block.setZero();
    const auto f0 = sample(g, f.expr(), s0).values;
    const auto f1 = sample(g, f.expr(), s1).values;
    for (std::size_t k = 0; k < g.size(); ++k) {
        block(static_cast<Eigen::Index>(k), 1) = f0[k] * std::exp(shift * (t - s0));
        block(static_cast<Eigen::Index>(k), 2) = f1[k] * std::exp(shift * (t - s1));
    }
    if (m > 0) {
        const auto g0 = a_f(s0);
        const double w0 = weight(0);
        for (std::size_t k = 0; k < g.size(); ++k)
            block(static_cast<Eigen::Index>(k), 0) = w0 * g0[k];
    }
    Eigen::MatrixXd early = block.leftCols(2);
    for (long j = 1; j <= m; ++j) {
        const double sigma = s0 + dt * static_cast<double>(j);
        stepper.advance(early, sigma);
        const auto gj = a_f(sigma);
        const double wj = weight(j);
        for (std::size_t k = 0; k < g.size(); ++k)
            early(static_cast<Eigen::Index>(k), 0) += wj * gj[k];
    }
    block.leftCols(2) = early;
    const long rest = aligned_steps(s1, t, dt);
    for (long j = 1; j <= rest; ++j)
        stepper.advance(block, s1 + dt * static_cast<double>(j));

    double worst = 0.0;
    for (std::size_t k : window_nodes(g, setup_.window_half)) {
        const auto i = static_cast<Eigen::Index>(k);
        worst = std::max(worst, std::abs(block(i, 2) - block(i, 1) + block(i, 0)));
    }
    return worst;
}

CheckOutcome Harness::integral_identity()
{
    auto o = start("integral_identity");
    const Grid g = setup_.grid();
    const TimePair pr = setup_.pairs.front();
    long steps = 0;
    try {
        steps = aligned_steps(pr.s, pr.t, setup_.dt);
    } catch (const ParameterError&) {
        return skip(o, "time pair is not aligned with dt");
    }
    const double s0 = pr.s;
    const double s1 = pr.s + setup_.dt * static_cast<double>(steps / 2);

    const TestFunction f(setup_.expr(setup_.datum), setup_.dim());
    double scale = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k)
        scale = std::max(scale, std::abs(apply(setup_.op, f, s0, g.point(k), Potential::Include)));
    scale *= s1 - s0;

    const double coarse = integral_identity_residual(setup_.dt, s0, s1, pr.t);
    const double fine = integral_identity_residual(0.5 * setup_.dt, s0, s1, pr.t);
    const double ratio = fine > 0.0 ? coarse / fine : std::numeric_limits<double>::infinity();
    const double factor = setup_.tolerance("integral_identity", 5e-3);
    const double min_ratio = setup_.tolerance("integral_identity_ratio", 1.7);

    o.measured = {{"residual_half_dt", fine}, {"ratio", ratio}, {"scale", scale}, {"s1", s1}};
    o.table.columns = {"dt", "residual"};
    o.table.rows = {{setup_.dt, coarse}, {0.5 * setup_.dt, fine}};
    decide(o, coarse, "<=", factor * scale, 0.0);
    if (coarse > 0.0 && ratio < min_ratio) {
        o.pass = false;
        o.reason = "halving dt improved the residual by " + num(ratio, "%.3g") + " < " + num(min_ratio, "%.3g");
    }
    return o;
}

CheckOutcome Harness::lp_bound()
{
    auto o = start("lp_bound");
    const double p = setup_.p;
    Sampling s = setup_.sampling;
    const auto div = check_div(setup_.op, s, p);
    double exponent = 0.0;
    std::string route;
    if (div.pass) {
        exponent = div.constant("K_p");
        route = "div";
        o.measured.emplace_back("K", div.constant("K"));
    } else if (p > 1.0) {
        const auto dc = check_drift_compensation(setup_.op, s, p);
        if (!dc.pass)
            return skip(o, "neither check_div nor check_drift_compensation passes");
        exponent = dc.constant("K_prime");
        route = "drift_compensation";
    } else {
        return skip(o, "check_div fails and p = 1 admits no drift compensation");
    }
    o.measured.emplace_back("exponent", exponent);
    o.measured.emplace_back("p", p);

    const Grid g = setup_.grid();
    const double cell = std::pow(g.spacing(), g.dim());
    const auto f = nodal(setup_.datum, 0.0);
    const double norm_f = lp_norm(f, p, cell);
    o.table.columns = {"s", "t", "ratio", "bound"};
    double worst = 0.0;
    for (const TimePair& pr : setup_.pairs) {
        const auto pf = propagator(Boundary::Neumann, pr.s, pr.t)->apply(f);
        const double ratio = lp_norm(pf, p, cell) / norm_f;
        const double bound = std::exp(exponent * (pr.t - pr.s));
        o.table.rows.push_back({pr.s, pr.t, ratio, bound});
        worst = std::max(worst, ratio / bound);
    }
    o.reason = "route=" + route;
    decide(o, worst, "<=", 1.0, setup_.tolerance("lp_bound", 1e-3));
    return o;
}

CheckOutcome Harness::c0_preservation()
{
    auto o = start("c0_preservation");
    const TestFunction v(setup_.expr(setup_.v), setup_.dim());
    const auto rep = check_V(setup_.op, v, setup_.sampling);
    if (!rep.pass)
        return skip(o, "check_V fails; routed to not_c0");
    const double lambda0 = rep.constant("lambda0");

    const Grid g = setup_.grid();
    const auto f = nodal(setup_.compact_datum, 0.0);
    // inf of V over the support, widened by one cell so the sampled support
    // covers its closure.
    double delta_v = std::numeric_limits<double>::infinity();
    double sup_f = 0.0;
    double support_radius = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (f[k] != 0.0) {
            support_radius = std::max(support_radius, euclid(g.point(k)));
            sup_f = std::max(sup_f, std::abs(f[k]));
        }
    }
    if (sup_f == 0.0)
        return skip(o, "compact datum vanishes on the grid");
    support_radius += g.spacing();
    for (std::size_t k = 0; k < g.size(); ++k)
        if (euclid(g.point(k)) <= support_radius + 1e-12)
            delta_v = std::min(delta_v, v.value(0.0, g.point(k)));

    const double n = g.half_width();
    const auto shell = shell_nodes(g, 0.8 * n, 0.95 * n);
    o.table.columns = {"s", "t", "shell_max", "bound"};
    double worst = 0.0;
    for (const TimePair& pr : setup_.pairs) {
        const auto u = propagator(Boundary::Neumann, pr.s, pr.t)->apply(f);
        double shell_u = 0.0;
        double shell_v = 0.0;
        for (std::size_t k : shell) {
            shell_u = std::max(shell_u, std::abs(u[k]));
            shell_v = std::max(shell_v, v.value(pr.t, g.point(k)));
        }
        const double bound = std::exp(lambda0 * (pr.t - pr.s)) / delta_v * sup_f * shell_v;
        o.table.rows.push_back({pr.s, pr.t, shell_u, bound});
        worst = std::max(worst, shell_u / bound);
    }
    o.measured = {{"lambda0", lambda0}, {"delta_V", delta_v}};
    decide(o, worst, "<=", 1.0, setup_.tolerance("c0_preservation", 1e-3));
    return o;
}

CheckOutcome Harness::not_c0()
{
    auto o = start("not_c0");
    const Grid g = setup_.grid();
    const TimePair pr = setup_.pairs.front();
    const auto p = propagator(Boundary::Neumann, pr.s, pr.t);

    double min_mass = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < g.size(); ++k)
        min_mass = std::min(min_mass, p->mass(k));
    const std::size_t c = center_node(g);
    const double center = p->mass(c);
    double spread = 1.0;
    for (std::size_t k : shell_nodes(g, 0.8 * g.half_width(), 0.95 * g.half_width())) {
        const double m = p->mass(k);
        spread = std::max({spread, m / center, center / m});
    }

    const auto mc = estimate(setup_.op, parse("1", setup_.dim()), g.point(c), pr.s, pr.t, setup_.mc);
    const double mc_tol = setup_.tolerance("not_c0_mc", 1e-3);
    const double mc_gap = std::abs(mc.mean - center);
    const bool mc_ok = mc_gap <= 3.0 * mc.std_error + mc_tol;

    o.measured = {{"center", center},       {"shell_spread", spread}, {"mc_mean", mc.mean},
                  {"mc_std_error", mc.std_error}, {"mc_gap", mc_gap}};
    o.table.columns = {"x", "mass"};
    for (std::size_t k = 0; k < g.size(); k += std::max<std::size_t>(1, g.size() / 200))
        o.table.rows.push_back({g.point(k)[0], p->mass(k)});
    decide(o, min_mass, ">=", setup_.mass_floor, 0.0);
    if (spread > 2.0) {
        o.pass = false;
        o.reason = "outer-shell mass differs from the center by a factor " + num(spread, "%.3g");
    }
    if (!mc_ok) {
        o.pass = false;
        o.reason = "Monte Carlo mass at the center is off by " + num(mc_gap, "%.3g");
    }
    return o;
}

namespace {

struct DirichletLadder {
    std::vector<double> half_widths;
    std::vector<std::vector<double>> dirichlet;  // window values per box
    std::vector<double> neumann_finest;
};

}  // namespace

static DirichletLadder dirichlet_ladder(const HarnessSetup& setup, const TimePair& pr, bool with_neumann)
{
    const double h = setup.grid().spacing();
    const int n0 = static_cast<int>(std::lround(setup.dirichlet_base_half / h));
    Grid g(setup.dim(), n0 * h, 2 * n0 + 1);
    const Expr f = setup.expr(setup.datum);
    DirichletLadder out;
    for (int i = 0; i <= setup.dirichlet_doublings; ++i) {
        if (i > 0)
            g = g.doubled();
        const Field u = solve(setup.op, {Boundary::Dirichlet, setup.dt}, sample(g, f, pr.s), pr.t);
        out.half_widths.push_back(g.half_width());
        out.dirichlet.push_back(pick(u.values, window_nodes(g, setup.window_half)));
        if (with_neumann && i == setup.dirichlet_doublings) {
            const Field un = solve(setup.op, {Boundary::Neumann, setup.dt}, sample(g, f, pr.s), pr.t);
            out.neumann_finest = pick(un.values, window_nodes(g, setup.window_half));
        }
    }
    return out;
}

CheckOutcome Harness::monotone_dirichlet()
{
    auto o = start("monotone_dirichlet");
    const double tol = setup_.tolerance("monotone_dirichlet", 1e-10);
    const auto ladder = dirichlet_ladder(setup_, setup_.pairs.front(), false);
    o.table.columns = {"n_from", "n_to", "min_increment", "sup_increment"};
    double worst_min = std::numeric_limits<double>::infinity();
    std::vector<double> sups;
    for (std::size_t i = 1; i < ladder.dirichlet.size(); ++i) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        for (std::size_t k = 0; k < ladder.dirichlet[i].size(); ++k) {
            const double d = ladder.dirichlet[i][k] - ladder.dirichlet[i - 1][k];
            lo = std::min(lo, d);
            hi = std::max(hi, std::abs(d));
        }
        o.table.rows.push_back({ladder.half_widths[i - 1], ladder.half_widths[i], lo, hi});
        worst_min = std::min(worst_min, lo);
        sups.push_back(hi);
        o.measured.emplace_back("sup_increment_" + std::to_string(i), hi);
    }
    decide(o, worst_min, ">=", 0.0, tol);
    for (std::size_t i = 1; i < sups.size(); ++i) {
        if (sups[i] > sups[i - 1]) {
            o.pass = false;
            o.reason = "increments grow along the boxes";
        }
    }
    return o;
}

CheckOutcome Harness::dirichlet_neumann_agree()
{
    auto o = start("dirichlet_neumann_agree");
    const auto ladder = dirichlet_ladder(setup_, setup_.pairs.front(), true);
    const auto& d = ladder.dirichlet.back();
    double gap = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k)
        gap = std::max(gap, std::abs(d[k] - ladder.neumann_finest[k]));
    o.measured = {{"n", ladder.half_widths.back()}};
    o.table.columns = {"dirichlet", "neumann"};
    for (std::size_t k = 0; k < d.size(); ++k)
        o.table.rows.push_back({d[k], ladder.neumann_finest[k]});
    decide(o, gap, "<=", 0.0, setup_.tolerance("dirichlet_neumann_agree", 2e-3));
    return o;
}

CheckOutcome Harness::kernel_mass()
{
    auto o = start("kernel_mass");
    const Grid g = setup_.grid();
    o.table.columns = {"s", "t", "max_row_sum", "row_bound", "min_window_mass"};
    double worst_excess = -std::numeric_limits<double>::infinity();
    double min_mass = std::numeric_limits<double>::infinity();
    for (const TimePair& pr : setup_.pairs) {
        const auto p = propagator(Boundary::Neumann, pr.s, pr.t);
        double max_row = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k)
            max_row = std::max(max_row, p->mass(k));
        const double bound = row_sum_bound(setup_.op.declared_c0(), setup_.dt, pr.s, pr.t);
        const auto mb = mass_lower_bound_check(*p, setup_.window_half);
        o.table.rows.push_back({pr.s, pr.t, max_row, bound, mb.min_mass});
        worst_excess = std::max(worst_excess, max_row - bound);
        min_mass = std::min(min_mass, mb.min_mass);
    }
    const double row_tol = setup_.tolerance("kernel_mass", 1e-6);
    o.measured = {{"row_sum_excess", worst_excess}};
    decide(o, min_mass, ">=", setup_.mass_floor, 0.0);
    if (worst_excess > row_tol) {
        o.pass = false;
        o.reason = "a row sum exceeds the decay bound by " + num(worst_excess, "%.3g");
    }
    return o;
}

CheckOutcome Harness::slight_bound()
{
    auto o = start("slight_bound");
    if (setup_.op.declared_c0() < 0.0)
        return skip(o, "requires a nonnegative potential");
    const TestFunction phi(setup_.expr(setup_.phi), setup_.dim());
    const auto rep = check_bounded_Aphi(setup_.op, phi, setup_.sampling);
    if (!rep.pass)
        return skip(o, "check_bounded_Aphi fails");
    const double m_j = rep.constant("M_J");

    const Grid g = setup_.grid();
    const auto window = window_nodes(g, setup_.window_half);
    o.table.columns = {"s", "t", "x", "G_phi", "clip", "bound"};
    double worst = std::numeric_limits<double>::infinity();
    double worst_clip = 0.0;
    for (const TimePair& pr : setup_.pairs) {
        const auto p = propagator(Boundary::Neumann, pr.s, pr.t);
        const auto f = nodal(setup_.phi, pr.s);
        const auto gf = p->apply(f);
        for (std::size_t k : window) {
            const double clip = clip_bound(*p, f, k);
            const double bound = phi.value(pr.t, g.point(k)) + m_j * (pr.t - pr.s);
            worst = std::min(worst, bound - (gf[k] + clip));
            worst_clip = std::max(worst_clip, clip);
            o.table.rows.push_back({pr.s, pr.t, g.point(k)[0], gf[k], clip, bound});
        }
    }
    o.measured = {{"M_J", m_j}, {"clip", worst_clip}};
    decide(o, worst, ">=", 0.0, setup_.tolerance("slight_bound", 1e-3));
    return o;
}

CheckOutcome Harness::fk_crossval()
{
    auto o = start("fk_crossval");
    const Grid g = setup_.grid();
    const TimePair pr = setup_.pairs.front();
    const auto p = propagator(Boundary::Neumann, pr.s, pr.t);
    const Expr f = setup_.expr(setup_.datum);
    const auto u = p->apply(sample(g, f, pr.s).values);

    // Nine window nodes: a line in 1D, a 3x3 block in 2D.
    const int c = (g.points() - 1) / 2;
    const int reach = static_cast<int>(std::floor(setup_.window_half / g.spacing() + 1e-9));
    std::vector<std::size_t> nodes;
    if (g.dim() == 1) {
        for (int i = -4; i <= 4; ++i)
            nodes.push_back(g.node(c + i * reach / 4));
    } else {
        for (int j = -1; j <= 1; ++j)
            for (int i = -1; i <= 1; ++i)
                nodes.push_back(g.node(c + i * reach, c + j * reach));
    }

    const double tol = setup_.tolerance("fk_crossval", 2e-3);
    o.table.columns = {"x", "solver", "mc_mean", "mc_std_error"};
    double worst = -std::numeric_limits<double>::infinity();
    double worst_se = 0.0;
    for (std::size_t k : nodes) {
        const auto est = estimate(setup_.op, f, g.point(k), pr.s, pr.t, setup_.mc);
        o.table.rows.push_back({g.point(k)[0], u[k], est.mean, est.std_error});
        const double excess = std::abs(u[k] - est.mean) - 3.0 * est.std_error;
        if (excess > worst) {
            worst = excess;
            worst_se = est.std_error;
        }
    }
    o.measured = {{"std_error", worst_se}, {"paths", static_cast<double>(setup_.mc.n_paths)}};
    decide(o, worst, "<=", 0.0, tol);
    return o;
}

CheckOutcome Harness::run(const std::string& id)
{
    using Fn = CheckOutcome (Harness::*)();
    static const std::map<std::string, Fn> table{
        {"supnorm", &Harness::supnorm},
        {"evolution_law", &Harness::evolution_law},
        {"integral_identity", &Harness::integral_identity},
        {"lp_bound", &Harness::lp_bound},
        {"c0_preservation", &Harness::c0_preservation},
        {"not_c0", &Harness::not_c0},
        {"monotone_dirichlet", &Harness::monotone_dirichlet},
        {"dirichlet_neumann_agree", &Harness::dirichlet_neumann_agree},
        {"kernel_mass", &Harness::kernel_mass},
        {"slight_bound", &Harness::slight_bound},
        {"fk_crossval", &Harness::fk_crossval},
    };
    const auto it = table.find(id);
    if (it == table.end())
        throw ParameterError("unknown check id '" + id + "'");
    const auto t0 = std::chrono::steady_clock::now();
    CheckOutcome o;
    try {
        o = (this->*(it->second))();
    } catch (const CheckAborted&) {
        throw;
    } catch (const Error& e) {
        throw CheckAborted(id, e.what());
    }
    o.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return o;
}

std::vector<CheckOutcome> Harness::run_all(const std::vector<std::string>& ids, int workers)
{
    for (const auto& id : ids)
        if (!find_check(id))
            throw ParameterError("unknown check id '" + id + "'");
    std::vector<CheckOutcome> out(ids.size());
    std::vector<std::exception_ptr> errors(ids.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < ids.size(); i = next++) {
            try {
                out[i] = run(ids[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int n = std::clamp(workers, 1, static_cast<int>(std::max<std::size_t>(1, ids.size())));
    if (n == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (int i = 0; i < n; ++i)
            pool.emplace_back(work);
    }
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return out;
}

std::vector<ConditionReport> Harness::hypothesis_reports() const
{
    const TestFunction phi(setup_.expr(setup_.phi), setup_.dim());
    const TestFunction w(setup_.expr(setup_.w), setup_.dim());
    const TestFunction v(setup_.expr(setup_.v), setup_.dim());
    const Sampling& s = setup_.sampling;

    std::vector<ConditionReport> out;
    out.push_back(check_lyapunov(setup_.op, phi, s));
    out.push_back(check_lyapunov_minus_c(setup_.op, phi, s));
    auto fit = fit_W_radius(setup_.op, w, setup_.mu, setup_.w_radii, s);
    out.push_back(fit ? *fit : check_W(setup_.op, w, setup_.mu, setup_.w_radii.back(), s));
    out.push_back(check_h(setup_.op, phi, s, setup_.h_exponent));
    out.push_back(check_div(setup_.op, s, setup_.p));
    if (setup_.p > 1.0)
        out.push_back(check_drift_compensation(setup_.op, s, setup_.p));
    out.push_back(check_V(setup_.op, v, s));
    out.push_back(check_bounded_Aphi(setup_.op, phi, s));
    return out;
}

Harness::CompactnessRun Harness::compactness()
{
    const TestFunction phi(setup_.expr(setup_.phi), setup_.dim());
    const TestFunction w(setup_.expr(setup_.w), setup_.dim());
    const Sampling& s = setup_.sampling;

    CompactnessRun run{{check_h(setup_.op, phi, s, setup_.h_exponent),
                        check_W(setup_.op, w, setup_.mu, setup_.w_radii.back(), s),
                        check_lyapunov_minus_c(setup_.op, phi, s)},
                       {}};
    if (auto fit = fit_W_radius(setup_.op, w, setup_.mu, setup_.w_radii, s))
        run.prerequisites.w = *fit;

    CompactnessConfig cfg;
    cfg.delta = setup_.delta;
    cfg.radii = setup_.radii;
    cfg.window_half = setup_.window_half;
    cfg.tol = setup_.tolerance("compactness", 1e-6);
    const TimePair pr = setup_.pairs.front();
    const auto p = propagator(Boundary::Neumann, pr.s, pr.t);
    run.verdict = compactness_diagnostic(setup_.op, phi, run.prerequisites, *p, cfg);
    return run;
}

Harness::TightnessFamily Harness::tightness_family()
{
    const Interval j = setup_.op.interval();
    const double span = j.length();
    const Grid g = setup_.grid();
    const double dt = setup_.dt;
    auto snap = [&](double v) { return j.lo + dt * std::round((v - j.lo) / dt); };

    std::vector<std::size_t> base;
    const int c = (g.points() - 1) / 2;
    const int reach = static_cast<int>(std::floor(setup_.window_half / g.spacing() + 1e-9));
    if (g.dim() == 1) {
        for (int i = -2; i <= 2; ++i)
            base.push_back(g.node(c + i * reach / 2));
    } else {
        base = {g.node(c, c), g.node(c + reach, c), g.node(c - reach, c), g.node(c, c + reach),
                g.node(c, c - reach)};
    }

    TightnessFamily out;
    out.radii = setup_.radii;
    out.sup_tail.assign(out.radii.size(), 0.0);
    out.base_points = static_cast<int>(base.size());
    for (int i = 0; i < 3; ++i) {
        const double s = snap(j.lo + span * i / 4.0);
        for (double gap : {0.125, 0.25, 0.5}) {
            const double t = snap(s + span * gap);
            const auto p = propagator(Boundary::Neumann, s, t);
            ++out.pairs;
            for (std::size_t r = 0; r < out.radii.size(); ++r)
                for (std::size_t x : base)
                    out.sup_tail[r] = std::max(out.sup_tail[r], p->tail_mass(x, out.radii[r]));
        }
    }
    out.decreasing = true;
    for (std::size_t r = 1; r < out.radii.size(); ++r)
        out.decreasing = out.decreasing && out.sup_tail[r] <= out.sup_tail[r - 1];
    return out;
}

}  // namespace evolab
