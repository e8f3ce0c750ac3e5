#pragma once

/// Implicit finite-difference solver for D_t u = A(t) u on boxes [-n, n]^d,
/// d in {1, 2}, with zero Dirichlet or reflecting (Neumann) boundaries.
///
/// Each step solves (I - dt A_h(t_next)) u_next = u with central second
/// differences, upwind drift and a positive-type cross-derivative stencil, so
/// the system matrix is an M-matrix and positivity holds exactly.

#include "evolab/expr.hpp"
#include "evolab/operator.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <memory>
#include <span>
#include <vector>

namespace evolab {

class Grid {
public:
    Grid(int dim, double half_width, int points);

    int dim() const noexcept { return dim_; }
    double half_width() const noexcept { return half_width_; }
    int points() const noexcept { return points_; }
    double spacing() const noexcept { return spacing_; }
    std::size_t size() const noexcept { return size_; }

    /// Coordinate of grid line i on any axis.
    double coord(int i) const noexcept { return (i - (points_ - 1) / 2) * spacing_; }
    int axis_index(std::size_t node, int axis) const noexcept
    {
        return axis == 0 ? static_cast<int>(node % static_cast<std::size_t>(points_))
                         : static_cast<int>(node / static_cast<std::size_t>(points_));
    }
    std::size_t node(int i, int j = 0) const noexcept
    {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(points_) + static_cast<std::size_t>(i);
    }
    /// Coordinates of node k (lexicographic, axis 0 fastest).
    std::span<const double> point(std::size_t k) const
    {
        return {coords_.data() + k * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
    }
    bool on_boundary(std::size_t k) const noexcept;

    /// Same spacing, twice the half-width.
    Grid doubled() const { return Grid(dim_, 2.0 * half_width_, 2 * (points_ - 1) + 1); }

private:
    int dim_;
    double half_width_;
    int points_;
    double spacing_;
    std::size_t size_;
    std::vector<double> coords_;
};

struct Field {
    Grid grid;
    std::vector<double> values;
    double t = 0.0;

    double sup_norm() const;
};

/// Samples an expression on the grid at time t.
Field sample(const Grid& grid, const Expr& f, double t);

enum class Boundary { Dirichlet, Neumann };

struct SolveConfig {
    Boundary bc = Boundary::Neumann;
    double dt = 1e-3;
};

/// Number of dt-steps between s and t; throws unless (t - s)/dt is an integer
/// to relative accuracy 1e-9.
long aligned_steps(double s, double t, double dt);

/// Reusable implicit-Euler stepper for one (operator, grid, config).
///
/// When declared_c0 < 0 the stepper advances the shifted operator A + c0 I
/// (whose potential is nonnegative); callers rescale by exp(-c0 (t - s)),
/// available as growth_factor().
class ImplicitStepper {
public:
    ImplicitStepper(const OperatorSpec& op, const Grid& grid, SolveConfig cfg);
    ~ImplicitStepper();
    ImplicitStepper(ImplicitStepper&&) noexcept;
    ImplicitStepper& operator=(ImplicitStepper&&) noexcept;

    const Grid& grid() const noexcept { return grid_; }
    const SolveConfig& config() const noexcept { return cfg_; }
    /// Potential shift applied to keep the system an M-matrix (0 when c0 >= 0).
    double shift() const noexcept { return shift_; }
    /// exp(shift * elapsed): the factor that undoes the shift.
    double growth_factor(double elapsed) const;

    /// One step of the shifted scheme ending at t_next, in place.
    void advance(std::vector<double>& u, double t_next);
    /// Same for every column of `block`.
    void advance(Eigen::MatrixXd& block, double t_next);

private:
    void prepare(double t_next);
    void assemble_rows(double t, std::vector<Eigen::Triplet<double>>& out) const;

    OperatorSpec op_;
    Grid grid_;
    SolveConfig cfg_;
    double shift_ = 0.0;
    bool reusable_ = false;
    bool ready_ = false;
    double prepared_t_ = 0.0;
    std::vector<char> pinned_;

    // 1D: tridiagonal LU factors.
    std::vector<double> lower_;
    std::vector<double> pivot_;
    std::vector<double> upper_;

    // 2D: sparse LU.
    std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
};

/// One implicit step from u.t to u.t + dt, rescaled.
Field step(const OperatorSpec& op, const SolveConfig& cfg, const Field& u, double t_from);

/// G_n(t, f.t) f on f's grid.
Field solve(const OperatorSpec& op, const SolveConfig& cfg, const Field& f, double t);

/// Axis-aligned observation box [-half, half]^d.
struct Window {
    double half = 2.0;
};

struct LimitResult {
    Field field;                     // finest solution
    std::vector<double> half_widths; // n for each solve
    std::vector<double> increments;  // sup over K of |u_{2n} - u_n| per doubling
    std::vector<double> min_increments; // min over K of u_{2n} - u_n per doubling
    double n_used = 0.0;

    /// Values of `field` at the nodes inside the window, lexicographic.
    std::vector<double> window_values(const Window& k) const;
};

struct LimitConfig {
    Window window;
    double tol = 1e-4;
    int max_doublings = 5;
};

/// Solves on n0, 2 n0, 4 n0, ... with fixed spacing until two consecutive
/// solutions differ by at most tol on the window. Throws ConvergenceError
/// carrying the increments otherwise.
LimitResult evolution_limit(const OperatorSpec& op, const SolveConfig& cfg, const Grid& base, const Expr& f,
                            double s, double t, const LimitConfig& limit);

/// Sup over the window of |a - b| for fields on grids sharing the spacing.
double window_difference(const Field& a, const Field& b, const Window& k);

}  // namespace evolab
