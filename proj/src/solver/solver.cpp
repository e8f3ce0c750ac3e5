#include "evolab/solver.hpp"

#include "evolab/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace evolab {

Grid::Grid(int dim, double half_width, int points)
    : dim_(dim)
    , half_width_(half_width)
    , points_(points)
{
    if (dim != 1 && dim != 2) {
        throw ParameterError("grids exist for d = 1 and d = 2 only");
    }
    if (points < 3 || points % 2 == 0) {
        throw ParameterError("points per axis must be odd and at least 3");
    }
    if (!(half_width > 0.0)) {
        throw ParameterError("half-width must be positive");
    }
    spacing_ = 2.0 * half_width / (points - 1);
    size_ = dim == 1 ? static_cast<std::size_t>(points) : static_cast<std::size_t>(points) * points;
    coords_.resize(size_ * static_cast<std::size_t>(dim));
    for (std::size_t k = 0; k < size_; ++k) {
        for (int a = 0; a < dim; ++a) {
            coords_[k * static_cast<std::size_t>(dim) + static_cast<std::size_t>(a)] = coord(axis_index(k, a));
        }
    }
}

bool Grid::on_boundary(std::size_t k) const noexcept
{
    for (int a = 0; a < dim_; ++a) {
        const int i = axis_index(k, a);
        if (i == 0 || i == points_ - 1) {
            return true;
        }
    }
    return false;
}

double Field::sup_norm() const
{
    double m = 0.0;
    for (double v : values) {
        m = std::max(m, std::fabs(v));
    }
    return m;
}

Field sample(const Grid& grid, const Expr& f, double t)
{
    const Program prog(expand_radius(f, grid.dim()));
    Field out{grid, std::vector<double>(grid.size()), t};
    for (std::size_t k = 0; k < grid.size(); ++k) {
        out.values[k] = prog(t, grid.point(k));
    }
    return out;
}

long aligned_steps(double s, double t, double dt)
{
    if (!(dt > 0.0)) {
        throw ParameterError("dt must be positive");
    }
    const double ratio = (t - s) / dt;
    const double steps = std::round(ratio);
    if (std::fabs(ratio - steps) > 1e-9 * std::max(1.0, std::fabs(ratio)) || steps < 0.0) {
        std::ostringstream msg;
        msg << "t - s = " << t - s << " is not a nonnegative multiple of dt = " << dt;
        throw ParameterError(msg.str());
    }
    return static_cast<long>(steps);
}

namespace {

int reflect(int i, int n)
{
    if (i < 0) {
        return -i;
    }
    if (i > n - 1) {
        return 2 * (n - 1) - i;
    }
    return i;
}

}  // namespace

ImplicitStepper::ImplicitStepper(const OperatorSpec& op, const Grid& grid, SolveConfig cfg)
    : op_(op)
    , grid_(grid)
    , cfg_(cfg)
{
    if (op.dim() != grid.dim()) {
        throw ParameterError("operator and grid dimensions differ");
    }
    if (!(cfg.dt > 0.0)) {
        throw ParameterError("dt must be positive");
    }
    shift_ = op.declared_c0() < 0.0 ? -op.declared_c0() : 0.0;
    reusable_ = op.time_independent();
    pinned_.assign(grid.size(), 0);
    if (cfg.bc == Boundary::Dirichlet) {
        for (std::size_t k = 0; k < grid.size(); ++k) {
            pinned_[k] = grid.on_boundary(k) ? 1 : 0;
        }
    }
}

ImplicitStepper::~ImplicitStepper() = default;
ImplicitStepper::ImplicitStepper(ImplicitStepper&&) noexcept = default;
ImplicitStepper& ImplicitStepper::operator=(ImplicitStepper&&) noexcept = default;

double ImplicitStepper::growth_factor(double elapsed) const
{
    return shift_ == 0.0 ? 1.0 : std::exp(shift_ * elapsed);
}

// Rows of the system matrix I - dt A_h(t) (identity rows on pinned nodes).
void ImplicitStepper::assemble_rows(double t, std::vector<Eigen::Triplet<double>>& out) const
{
    const int d = grid_.dim();
    const int n = grid_.points();
    const double h = grid_.spacing();
    const double h2 = h * h;
    const double dt = cfg_.dt;
    out.clear();
    out.reserve(grid_.size() * (d == 1 ? 3 : 9));

    for (std::size_t k = 0; k < grid_.size(); ++k) {
        const auto row = static_cast<int>(k);
        if (pinned_[k]) {
            out.emplace_back(row, row, 1.0);
            continue;
        }
        const auto x = grid_.point(k);
        const int i = grid_.axis_index(k, 0);
        const int j = d == 2 ? grid_.axis_index(k, 1) : 0;
        auto at = [&](int di, int dj) {
            return static_cast<int>(grid_.node(reflect(i + di, n), d == 2 ? reflect(j + dj, n) : 0));
        };
        double centre = 0.0;
        auto couple = [&](int di, int dj, double coef) {
            if (coef != 0.0) {
                out.emplace_back(row, at(di, dj), -dt * coef);
            }
        };

        for (int a = 0; a < d; ++a) {
            const double q = op_.q_at(a, a, t, x);
            const double b = op_.b_at(a, t, x);
            const int di = a == 0 ? 1 : 0;
            const int dj = a == 1 ? 1 : 0;
            double plus = q / h2;
            double minus = q / h2;
            centre -= 2.0 * q / h2;
            if (b > 0.0) {
                plus += b / h;
                centre -= b / h;
            } else {
                minus -= b / h;
                centre += b / h;
            }
            couple(di, dj, plus);
            couple(-di, -dj, minus);
        }
        if (d == 2) {
            const double q12 = op_.q_at(0, 1, t, x);
            if (q12 != 0.0) {
                const double q11 = op_.q_at(0, 0, t, x);
                const double q22 = op_.q_at(1, 1, t, x);
                if (q11 < std::fabs(q12) || q22 < std::fabs(q12)) {
                    std::ostringstream msg;
                    msg << "cross term |q12| = " << std::fabs(q12) << " exceeds a diagonal entry at x = (" << x[0]
                        << ", " << x[1] << "); the stencil would lose positivity";
                    throw ParameterError(msg.str());
                }
                // Positive-type stencil along the diagonal matching the sign of q12;
                // the axis couplings it subtracts stay nonnegative by the check above.
                const double w = std::fabs(q12) / h2;
                const int s = q12 > 0.0 ? 1 : -1;
                couple(1, s, w);
                couple(-1, -s, w);
                couple(1, 0, -w);
                couple(-1, 0, -w);
                couple(0, 1, -w);
                couple(0, -1, -w);
                centre += 2.0 * w;
            }
        }
        centre -= op_.c_at(t, x) + shift_;
        out.emplace_back(row, row, 1.0 - dt * centre);
    }
}

void ImplicitStepper::prepare(double t_next)
{
    if (ready_ && (reusable_ || prepared_t_ == t_next)) {
        return;
    }
    std::vector<Eigen::Triplet<double>> rows;
    assemble_rows(t_next, rows);
    const auto size = static_cast<int>(grid_.size());

    if (grid_.dim() == 1) {
        std::vector<double> sub(grid_.size(), 0.0);
        std::vector<double> diag(grid_.size(), 0.0);
        std::vector<double> sup(grid_.size(), 0.0);
        for (const auto& tr : rows) {
            const int r = tr.row();
            const int c = tr.col();
            if (c == r) {
                diag[static_cast<std::size_t>(r)] += tr.value();
            } else if (c == r - 1) {
                sub[static_cast<std::size_t>(r)] += tr.value();
            } else {
                sup[static_cast<std::size_t>(r)] += tr.value();
            }
        }
        lower_.assign(grid_.size(), 0.0);
        pivot_.assign(grid_.size(), 0.0);
        upper_ = sup;
        pivot_[0] = diag[0];
        for (std::size_t k = 1; k < grid_.size(); ++k) {
            lower_[k] = sub[k] / pivot_[k - 1];
            pivot_[k] = diag[k] - lower_[k] * upper_[k - 1];
        }
        for (double p : pivot_) {
            if (!(p > 0.0)) {
                throw NumericError("implicit system lost diagonal dominance");
            }
        }
    } else {
        Eigen::SparseMatrix<double> m(size, size);
        m.setFromTriplets(rows.begin(), rows.end());
        m.makeCompressed();
        lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
        lu_->compute(m);
        if (lu_->info() != Eigen::Success) {
            throw NumericError("sparse factorization of the implicit system failed");
        }
    }
    prepared_t_ = t_next;
    ready_ = true;
}

void ImplicitStepper::advance(std::vector<double>& u, double t_next)
{
    if (u.size() != grid_.size()) {
        throw ParameterError("field size does not match the grid");
    }
    prepare(t_next);
    for (std::size_t k = 0; k < u.size(); ++k) {
        if (pinned_[k]) {
            u[k] = 0.0;
        }
    }
    if (grid_.dim() == 1) {
        const std::size_t n = u.size();
        for (std::size_t k = 1; k < n; ++k) {
            u[k] -= lower_[k] * u[k - 1];
        }
        u[n - 1] /= pivot_[n - 1];
        for (std::size_t k = n - 1; k-- > 0;) {
            u[k] = (u[k] - upper_[k] * u[k + 1]) / pivot_[k];
        }
    } else {
        Eigen::Map<Eigen::VectorXd> v(u.data(), static_cast<Eigen::Index>(u.size()));
        Eigen::VectorXd x = lu_->solve(v);
        v = x;
    }
    for (double v : u) {
        if (!std::isfinite(v)) {
            throw NumericError("non-finite value in the solution");
        }
    }
}

void ImplicitStepper::advance(Eigen::MatrixXd& block, double t_next)
{
    if (static_cast<std::size_t>(block.rows()) != grid_.size()) {
        throw ParameterError("block rows do not match the grid");
    }
    prepare(t_next);
    for (std::size_t k = 0; k < grid_.size(); ++k) {
        if (pinned_[k]) {
            block.row(static_cast<Eigen::Index>(k)).setZero();
        }
    }
    if (grid_.dim() == 1) {
        const std::size_t n = grid_.size();
        for (Eigen::Index j = 0; j < block.cols(); ++j) {
            double* u = block.col(j).data();
            for (std::size_t k = 1; k < n; ++k) {
                u[k] -= lower_[k] * u[k - 1];
            }
            u[n - 1] /= pivot_[n - 1];
            for (std::size_t k = n - 1; k-- > 0;) {
                u[k] = (u[k] - upper_[k] * u[k + 1]) / pivot_[k];
            }
        }
    } else {
        Eigen::MatrixXd x = lu_->solve(block);
        block = std::move(x);
    }
    if (!block.allFinite()) {
        throw NumericError("non-finite value in the propagator");
    }
}

Field step(const OperatorSpec& op, const SolveConfig& cfg, const Field& u, double t_from)
{
    const double t_next = t_from + cfg.dt;
    if (!op.interval().contains(t_from) || !op.interval().contains(t_next)) {
        throw ParameterError("step leaves the operator interval");
    }
    ImplicitStepper stepper(op, u.grid, cfg);
    Field out = u;
    stepper.advance(out.values, t_next);
    const double g = stepper.growth_factor(cfg.dt);
    if (g != 1.0) {
        for (double& v : out.values) {
            v *= g;
        }
    }
    out.t = t_next;
    return out;
}

Field solve(const OperatorSpec& op, const SolveConfig& cfg, const Field& f, double t)
{
    const double s = f.t;
    if (!op.interval().contains(s) || !op.interval().contains(t) || !(s <= t)) {
        throw ParameterError("need s <= t inside the operator interval");
    }
    const long steps = aligned_steps(s, t, cfg.dt);
    ImplicitStepper stepper(op, f.grid, cfg);
    Field out = f;
    for (long k = 1; k <= steps; ++k) {
        const double t_next = k == steps ? t : s + static_cast<double>(k) * cfg.dt;
        stepper.advance(out.values, t_next);
    }
    const double g = stepper.growth_factor(t - s);
    if (g != 1.0) {
        for (double& v : out.values) {
            v *= g;
        }
    }
    out.t = t;
    return out;
}

namespace {

// Index offsets from the centre for nodes inside the window.
template <typename F>
void for_window(const Grid& g, const Window& k, F&& f)
{
    const int centre = (g.points() - 1) / 2;
    const auto reach = static_cast<int>(std::floor(k.half / g.spacing() + 1e-9));
    if (reach > centre) {
        throw ParameterError("window is not inside the grid");
    }
    if (g.dim() == 1) {
        for (int o = -reach; o <= reach; ++o) {
            f(o, 0, g.node(centre + o));
        }
    } else {
        for (int oj = -reach; oj <= reach; ++oj) {
            for (int oi = -reach; oi <= reach; ++oi) {
                f(oi, oj, g.node(centre + oi, centre + oj));
            }
        }
    }
}

}  // namespace

double window_difference(const Field& a, const Field& b, const Window& k)
{
    if (a.grid.spacing() != b.grid.spacing() || a.grid.dim() != b.grid.dim()) {
        throw ParameterError("fields do not share a grid spacing");
    }
    const int cb = (b.grid.points() - 1) / 2;
    double m = 0.0;
    for_window(a.grid, k, [&](int oi, int oj, std::size_t node) {
        const std::size_t other = b.grid.dim() == 1 ? b.grid.node(cb + oi) : b.grid.node(cb + oi, cb + oj);
        m = std::max(m, std::fabs(a.values[node] - b.values[other]));
    });
    return m;
}

std::vector<double> LimitResult::window_values(const Window& k) const
{
    std::vector<double> out;
    for_window(field.grid, k, [&](int, int, std::size_t node) { out.push_back(field.values[node]); });
    return out;
}

LimitResult evolution_limit(const OperatorSpec& op, const SolveConfig& cfg, const Grid& base, const Expr& f,
                            double s, double t, const LimitConfig& limit)
{
    if (!(limit.tol > 0.0)) {
        throw ParameterError("tolerance must be positive");
    }
    if (!(limit.window.half < base.half_width())) {
        throw ParameterError("window must lie strictly inside the smallest box");
    }
    LimitResult result{solve(op, cfg, sample(base, f, s), t), {base.half_width()}, {}, {}, base.half_width()};
    Grid grid = base;
    for (int k = 0; k < limit.max_doublings; ++k) {
        grid = grid.doubled();
        Field next = solve(op, cfg, sample(grid, f, s), t);
        const int cb = (grid.points() - 1) / 2;
        double lo = std::numeric_limits<double>::infinity();
        for_window(result.field.grid, limit.window, [&](int oi, int oj, std::size_t node) {
            const std::size_t other = grid.dim() == 1 ? grid.node(cb + oi) : grid.node(cb + oi, cb + oj);
            lo = std::min(lo, next.values[other] - result.field.values[node]);
        });
        const double inc = window_difference(result.field, next, limit.window);
        result.increments.push_back(inc);
        result.min_increments.push_back(lo);
        result.half_widths.push_back(grid.half_width());
        result.field = std::move(next);
        result.n_used = grid.half_width();
        if (inc <= limit.tol) {
            return result;
        }
    }
    std::ostringstream msg;
    msg << "evolution limit did not settle within " << limit.max_doublings << " doublings; increments:";
    for (double inc : result.increments) {
        msg << ' ' << inc;
    }
    throw ConvergenceError(msg.str());
}

}  // namespace evolab
