#include "evolab/kernel.hpp"

#include "evolab/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace evolab {

Propagator::Propagator(Grid grid, double s, double t, Boundary bc, Eigen::MatrixXd matrix)
    : grid_(std::move(grid))
    , s_(s)
    , t_(t)
    , bc_(bc)
    , p_(std::move(matrix))
{
    norm2_.resize(grid_.size());
    norm_max_.resize(grid_.size());
    for (std::size_t k = 0; k < grid_.size(); ++k) {
        double s2 = 0.0;
        double m = 0.0;
        for (double v : grid_.point(k)) {
            s2 += v * v;
            m = std::max(m, std::fabs(v));
        }
        norm2_[k] = std::sqrt(s2);
        norm_max_[k] = m;
    }
}

std::vector<double> Propagator::apply(const std::vector<double>& f) const
{
    if (f.size() != grid_.size()) {
        throw ParameterError("datum size does not match the grid");
    }
    const Eigen::Map<const Eigen::VectorXd> v(f.data(), static_cast<Eigen::Index>(f.size()));
    const Eigen::VectorXd out = p_ * v;
    return {out.data(), out.data() + out.size()};
}

double Propagator::mass(std::size_t x) const
{
    return p_.row(static_cast<Eigen::Index>(x)).sum();
}

double Propagator::tail_mass(std::size_t x, double radius, TailNorm norm) const
{
    const auto& n = norm == TailNorm::Euclidean ? norm2_ : norm_max_;
    double s = 0.0;
    for (std::size_t y = 0; y < grid_.size(); ++y) {
        if (n[y] > radius) {
            s += p_(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y));
        }
    }
    return s;
}

double Propagator::kernel(std::size_t x, std::size_t y) const
{
    const double cell = std::pow(grid_.spacing(), grid_.dim());
    return p_(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) / cell;
}

Propagator build_propagator(const OperatorSpec& op, const SolveConfig& cfg, const Grid& grid, double s, double t)
{
    if (!op.interval().contains(s) || !op.interval().contains(t) || !(s <= t)) {
        throw ParameterError("need s <= t inside the operator interval");
    }
    if (grid.size() * grid.size() > max_propagator_entries) {
        throw ParameterError("grid too large for a dense propagator (" + std::to_string(grid.size())
                             + " nodes)");
    }
    const long steps = aligned_steps(s, t, cfg.dt);
    const auto n = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXd p = Eigen::MatrixXd::Identity(n, n);
    ImplicitStepper stepper(op, grid, cfg);
    for (long k = 1; k <= steps; ++k) {
        const double t_next = k == steps ? t : s + static_cast<double>(k) * cfg.dt;
        stepper.advance(p, t_next);
    }
    const double g = stepper.growth_factor(t - s);
    if (g != 1.0) {
        p *= g;
    }
    return Propagator(grid, s, t, cfg.bc, std::move(p));
}

double row_sum_bound(double declared_c0, double dt, double s, double t)
{
    if (declared_c0 >= 0.0) {
        const long steps = aligned_steps(s, t, dt);
        return std::pow(1.0 + declared_c0 * dt, -static_cast<double>(steps));
    }
    return std::exp(-declared_c0 * (t - s));
}

std::vector<std::size_t> window_nodes(const Grid& grid, double half)
{
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        bool inside = true;
        for (double v : grid.point(k)) {
            inside = inside && std::fabs(v) <= half + 1e-12;
        }
        if (inside) {
            out.push_back(k);
        }
    }
    return out;
}

std::vector<TailRow> tightness_profile(const Propagator& p, double window_half, const std::vector<double>& radii,
                                       TailNorm norm)
{
    const auto nodes = window_nodes(p.grid(), window_half);
    std::vector<TailRow> out;
    for (double r : radii) {
        TailRow row{r, -1.0, 0};
        for (std::size_t x : nodes) {
            const double tm = p.tail_mass(x, r, norm);
            if (tm > row.sup_tail) {
                row.sup_tail = tm;
                row.argmax = x;
            }
        }
        row.sup_tail = std::max(row.sup_tail, 0.0);
        out.push_back(row);
    }
    return out;
}

MassBound mass_lower_bound_check(const Propagator& p, double window_half)
{
    MassBound b{std::numeric_limits<double>::infinity(), 0, -std::numeric_limits<double>::infinity()};
    for (std::size_t x : window_nodes(p.grid(), window_half)) {
        const double m = p.mass(x);
        if (m < b.min_mass) {
            b.min_mass = m;
            b.argmin = x;
        }
        b.max_mass = std::max(b.max_mass, m);
    }
    return b;
}

}  // namespace evolab
