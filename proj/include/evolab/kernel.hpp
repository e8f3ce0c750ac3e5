#pragma once

/// Discrete propagator P(t, s) of the implicit scheme. Row x of P is the
/// transition measure g_{t,s}(x, .) sampled on grid cells, so the Green
/// kernel is P / cell volume and every mass or tail quantity is a row sum.

#include "evolab/solver.hpp"

#include <Eigen/Dense>

#include <vector>

namespace evolab {

enum class TailNorm { Euclidean, Max };

/// Largest number of matrix entries build_propagator will allocate.
inline constexpr std::size_t max_propagator_entries = 32'000'000;

class Propagator {
public:
    Propagator(Grid grid, double s, double t, Boundary bc, Eigen::MatrixXd matrix);

    const Grid& grid() const noexcept { return grid_; }
    double s() const noexcept { return s_; }
    double t() const noexcept { return t_; }
    Boundary bc() const noexcept { return bc_; }
    const Eigen::MatrixXd& matrix() const noexcept { return p_; }

    /// P f for nodal samples f.
    std::vector<double> apply(const std::vector<double>& f) const;
    /// Row sum at node x: the image of the constant 1.
    double mass(std::size_t x) const;
    /// Row entries at nodes y with |y| > radius (strictly).
    double tail_mass(std::size_t x, double radius, TailNorm norm = TailNorm::Euclidean) const;
    /// Kernel value g(t, s, x, y): the entry divided by the cell volume.
    double kernel(std::size_t x, std::size_t y) const;

private:
    Grid grid_;
    double s_;
    double t_;
    Boundary bc_;
    Eigen::MatrixXd p_;
    std::vector<double> norm2_;
    std::vector<double> norm_max_;
};

/// Propagates every nodal basis vector through the steps from s to t.
Propagator build_propagator(const OperatorSpec& op, const SolveConfig& cfg, const Grid& grid, double s,
                            double t);

/// The bound on row sums the scheme guarantees: (1 + c0 dt)^(-steps) when
/// c0 >= 0 (the implicit step damps constants by 1/(1 + c0 dt)), and
/// exp(-c0 (t - s)) when c0 < 0 (the shifted scheme rescaled).
double row_sum_bound(double declared_c0, double dt, double s, double t);

/// Nodes of the grid inside the box [-half, half]^d.
std::vector<std::size_t> window_nodes(const Grid& grid, double half);

struct TailRow {
    double radius = 0.0;
    double sup_tail = 0.0;    // sup over window nodes of tail_mass
    std::size_t argmax = 0;   // node attaining it
};

/// sup over x in the window of tail_mass(x, R) for every R in `radii`.
std::vector<TailRow> tightness_profile(const Propagator& p, double window_half, const std::vector<double>& radii,
                                       TailNorm norm = TailNorm::Euclidean);

struct MassBound {
    double min_mass = 0.0;
    std::size_t argmin = 0;
    double max_mass = 0.0;
};

/// Extremes of the row sums over the window.
MassBound mass_lower_bound_check(const Propagator& p, double window_half);

}  // namespace evolab
