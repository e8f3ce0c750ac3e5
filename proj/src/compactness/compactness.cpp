#include "evolab/compactness.hpp"

#include "evolab/error.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

namespace evolab {

namespace {

namespace odeint = boost::numeric::odeint;

constexpr double quadrature_tol = 1e-12;
constexpr double bisection_tol = 1e-10;

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace

HFunction::HFunction(double gamma, double c_prime, int l) : gamma_(gamma), c_prime_(c_prime), l_(l)
{
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw ParameterError("h: gamma must be positive, got " + fmt(gamma));
    if (!std::isfinite(c_prime))
        throw ParameterError("h: C' must be finite");
    if (l < 2)
        throw ParameterError("h: exponent l must be at least 2, got " + std::to_string(l));
    root_ = c_prime > 0.0 ? std::pow(c_prime / gamma, 1.0 / l) : 0.0;
}

double HFunction::operator()(double z) const { return gamma_ * power(z, l_) - c_prime_; }

ComparisonTrajectory solve_comparison(const HFunction& h, double c, double y0, double horizon, int samples)
{
    if (!(c > 0.0))
        throw ParameterError("comparison ODE: C must be positive");
    if (!(y0 > 0.0) || !std::isfinite(y0))
        throw ParameterError("comparison ODE: y0 must be positive");
    if (!(horizon > 0.0))
        throw ParameterError("comparison ODE: horizon must be positive");
    if (samples < 2)
        throw ParameterError("comparison ODE: need at least two samples");

    ComparisonTrajectory out;
    out.r.resize(static_cast<std::size_t>(samples));
    for (int i = 0; i < samples; ++i)
        out.r[static_cast<std::size_t>(i)] = horizon * i / (samples - 1);
    out.r.back() = horizon;
    out.y.reserve(out.r.size());

    auto rhs = [&](const double& y, double& dy, double) { dy = -c * h(y); };
    auto observe = [&](const double& y, double r) {
        if (!std::isfinite(y))
            throw NumericError("comparison ODE: non-finite state at r = " + fmt(r));
        if (y < 0.0)
            throw NumericError("comparison ODE: trajectory left [0, inf) at r = " + fmt(r));
        out.y.push_back(y);
    };

    // Start with a step resolving the initial rate so large y0 do not overshoot.
    const double rate = std::abs(c * h(y0));
    const double dt0 = std::min(horizon / (samples - 1), rate > 0.0 ? 1e-3 * y0 / rate : horizon);

    double state = y0;
    auto stepper = odeint::make_dense_output(1e-14, 1e-10, odeint::runge_kutta_dopri5<double>());
    odeint::integrate_times(stepper, rhs, state, out.r.begin(), out.r.end(), dt0, observe);
    if (out.y.size() != out.r.size())
        throw NumericError("comparison ODE: integrator stopped early");
    return out;
}

double tail_integral(const HFunction& h, double m)
{
    if (!(m > h.root()))
        throw ParameterError("tail integral: lower limit must exceed the root of h");
    // z = m / u maps [m, inf) to (0, 1].
    // The denominator h(m) + C'(1 - u^l) avoids cancellation when m is close
    // to the root; 1 - u^l is expanded as (1 - u)(1 + u + .. + u^(l-1)).
    const double at_m = h(m);
    auto integrand = [&](double u) {
        double sum = 0.0;
        double term = 1.0;
        for (int k = 0; k < h.l(); ++k) {
            sum += term;
            term *= u;
        }
        return m * power(u, h.l() - 2) / (at_m + h.c_prime() * (1.0 - u) * sum);
    };
    // Near the root the integrand peaks at u = 1; tanh-sinh clusters there.
    double error = 0.0;
    double l1 = 0.0;
    std::size_t levels = 0;
    boost::math::quadrature::tanh_sinh<double> rule;
    const double value = rule.integrate(integrand, 0.0, 1.0, quadrature_tol, &error, &l1, &levels);
    if (!std::isfinite(value) || error > 1e-10 * std::max(1.0, std::abs(value)))
        throw NumericError("tail integral: quadrature did not converge at M = " + fmt(m) +
                           " (error estimate " + fmt(error) + ")");
    return value;
}

UniformBound uniform_bound(const HFunction& h, double c, double delta)
{
    if (!(c > 0.0) || !(delta > 0.0))
        throw ParameterError("uniform bound: C and delta must be positive");
    const double target = c * delta;

    double lo = h.root();
    if (h.c_prime() < 0.0) {
        double error = 0.0;
        const double head = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
            [&](double z) { return 1.0 / h(z); }, 0.0, 1.0, 30, quadrature_tol, &error);
        const double cap = head + tail_integral(h, 1.0);
        if (target >= cap)
            throw ParameterError("uniform bound: C delta = " + fmt(target) +
                                 " exceeds the finite integral of 1/h over (0, inf)");
    }
    double hi = std::max(1.0, 2.0 * lo);
    for (int k = 0; tail_integral(h, hi) > target; ++k) {
        lo = hi;
        hi *= 2.0;
        if (k > 2000)
            throw NumericError("uniform bound: no upper bracket");
    }

    double mid = hi;
    double value = tail_integral(h, hi);
    for (int iter = 0; iter < 400; ++iter) {
        mid = 0.5 * (lo + hi);
        if (!(mid > h.root()) || mid == lo || mid == hi)
            break;
        value = tail_integral(h, mid);
        if (value > target)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= bisection_tol * hi && std::abs(value - target) <= 0.1 * bisection_tol * std::max(1.0, target))
            break;
    }

    UniformBound out;
    out.m = mid;
    out.residual = value - target;
    out.y_bar = std::max(mid, h.root());
    return out;
}

double phi_infimum_outside(const TestFunction& phi, int dim, double radius)
{
    const double r0 = std::max(radius, 0.0);
    const double reach = 8.0 * std::max(r0, 1.0);
    constexpr int radial_steps = 512;
    const int angles = dim == 1 ? 2 : 64;

    double inf = std::numeric_limits<double>::infinity();
    std::vector<double> x(static_cast<std::size_t>(dim), 0.0);
    for (int k = 0; k <= radial_steps; ++k) {
        const double rho = r0 + (reach - r0) * k / radial_steps;
        for (int a = 0; a < angles; ++a) {
            if (dim == 1) {
                x[0] = a == 0 ? rho : -rho;
            } else {
                const double theta = 2.0 * std::numbers::pi * a / angles;
                x[0] = rho * std::cos(theta);
                x[1] = rho * std::sin(theta);
            }
            inf = std::min(inf, phi.value(0.0, x));
        }
    }
    return inf;
}

std::string CompactnessVerdict::label() const
{
    if (!ran)
        return "refused";
    return consistent ? "consistent-with-compactness" : "inconclusive";
}

CompactnessVerdict compactness_diagnostic(const OperatorSpec& op, const TestFunction& phi,
                                          const CompactnessPrerequisites& prereq, const Propagator& p,
                                          const CompactnessConfig& cfg)
{
    CompactnessVerdict v;
    for (const ConditionReport* r : {&prereq.h, &prereq.w, &prereq.lyapunov_minus_c}) {
        if (!r->pass) {
            v.refused_by = to_string(r->id);
            return v;
        }
    }
    if (prereq.h.id != ConditionId::H || prereq.w.id != ConditionId::W ||
        prereq.lyapunov_minus_c.id != ConditionId::LyapunovMinusC)
        throw ParameterError("compactness diagnostic: prerequisite reports are in the wrong slots");
    if (phi.dim() != op.dim() || p.grid().dim() != op.dim())
        throw ParameterError("compactness diagnostic: dimension mismatch");
    const double span = p.t() - p.s();
    if (span < cfg.delta)
        throw ParameterError("compactness diagnostic: t - s = " + fmt(span) + " is below delta = " + fmt(cfg.delta));
    if (cfg.radii.empty())
        throw ParameterError("compactness diagnostic: no radii");

    const double c0 = op.declared_c0();
    v.shift = c0 < 0.0 ? -c0 : 0.0;
    v.rescale = std::exp(v.shift * span);
    const double shrink = 1.0 / v.rescale;

    v.gamma = prereq.h.constant("gamma");
    v.l = static_cast<int>(prereq.h.constant("l"));
    // The shifted operator satisfies the same inequality with h - c0.
    v.c_prime = std::max(0.0, prereq.h.constant("C_prime") - v.shift);
    const HFunction h(v.gamma, v.c_prime, v.l);

    const auto window = window_nodes(p.grid(), cfg.window_half);
    const MassBound mass = mass_lower_bound_check(p, cfg.window_half);
    v.mass_constant = shrink * mass.min_mass;
    if (!(v.mass_constant > 0.0))
        throw NumericError("compactness diagnostic: measured mass constant is not positive");
    v.bound = uniform_bound(h, v.mass_constant, cfg.delta);

    std::vector<double> nodal(p.grid().size());
    for (std::size_t k = 0; k < nodal.size(); ++k)
        nodal[k] = phi.value(p.s(), p.grid().point(k));
    const auto p_phi = p.apply(nodal);
    v.sup_p_phi = 0.0;
    for (std::size_t k : window)
        v.sup_p_phi = std::max(v.sup_p_phi, shrink * p_phi[k]);

    // phi is only seen inside the box; bound what lies beyond by the mass
    // reaching the last tenth of the box times the boundary value of phi.
    const double clip_radius = 0.9 * p.grid().half_width();
    double boundary_phi = 0.0;
    for (std::size_t k = 0; k < nodal.size(); ++k)
        if (p.grid().on_boundary(k))
            boundary_phi = std::max(boundary_phi, nodal[k]);
    double edge_mass = 0.0;
    for (std::size_t k : window)
        edge_mass = std::max(edge_mass, p.tail_mass(k, clip_radius, TailNorm::Max));
    v.clip_error = boundary_phi * edge_mass;

    const auto profile = tightness_profile(p, cfg.window_half, cfg.radii, cfg.norm);
    v.kernel_side = true;
    bool all_below = true;
    for (const TailRow& row : profile) {
        TailComparison cmp;
        cmp.radius = row.radius;
        cmp.inf_phi = phi_infimum_outside(phi, op.dim(), row.radius);
        cmp.bound = v.rescale * v.bound.y_bar / cmp.inf_phi;
        cmp.kernel_bound = v.rescale * v.sup_p_phi / cmp.inf_phi;
        cmp.measured = row.sup_tail;
        cmp.pass = cmp.measured <= cmp.bound + cfg.tol;
        v.kernel_side = v.kernel_side && cmp.measured <= cmp.kernel_bound + cfg.tol;
        all_below = all_below && cmp.pass;
        v.rows.push_back(cmp);
    }

    v.decays = v.rows.back().measured <= cfg.decay_threshold;
    for (std::size_t i = 1; i < v.rows.size(); ++i)
        if (v.rows[i].radius >= v.rows[i - 1].radius && v.rows[i].measured > v.rows[i - 1].measured + 1e-15)
            v.decays = false;

    v.ran = true;
    v.consistent = all_below && v.decays;
    return v;
}

}  // namespace evolab
