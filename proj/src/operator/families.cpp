#include "evolab/families.hpp"

#include "evolab/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace evolab {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

Expr one_plus_r2(int dim)
{
    Expr s = Expr::constant(1.0);
    for (int i = 1; i <= dim; ++i) {
        s = s + pow(Expr::variable(Variable::space(i)), Expr::constant(2.0));
    }
    return s;
}

Expr scaled(const Expr& weight, double exponent, const Expr& e)
{
    if (exponent == 0.0) {
        return e;
    }
    Expr w = exponent == 1.0 ? weight : pow(weight, Expr::constant(exponent));
    return w * e;
}

double norm2(std::span<const double> x)
{
    double s = 0.0;
    for (double v : x) {
        s += v * v;
    }
    return s;
}

void require_dims(int dim, const Expr& e, const char* what)
{
    if (!e.valid()) {
        throw ParameterError(std::string("missing parameter ") + what);
    }
    if (max_space_index(e) > dim) {
        throw ParameterError(std::string("parameter ") + what + " uses a coordinate beyond the dimension");
    }
}

}  // namespace

OperatorSpec radial_drift_family(const RadialDriftParams& p, const LatticeSpec& lattice_spec)
{
    if (p.dim < 1) {
        throw ParameterError("dimension must be positive");
    }
    if (p.k < 0 || p.m < 0) {
        throw ParameterError("k and m must be nonnegative integers");
    }
    if (p.l <= std::max(p.m + 2, p.k)) {
        throw ParameterError("l = " + std::to_string(p.l) + " must exceed max(m+2, k) = "
                             + std::to_string(std::max(p.m + 2, p.k)));
    }
    if (p.b.size() != static_cast<std::size_t>(p.dim)) {
        throw ParameterError("drift must have one component per dimension");
    }
    require_dims(0, p.omega, "omega");
    require_dims(0, p.c1, "C1");
    require_dims(p.dim, p.c, "c");
    for (const Expr& bj : p.b) {
        require_dims(p.dim, bj, "b");
    }

    const Lattice lattice(p.dim, p.interval, lattice_spec);
    const Program omega(p.omega);
    const Program c1(p.c1);
    double omega_inf = inf;
    for (double t : lattice.times()) {
        omega_inf = std::min(omega_inf, omega(t, {}));
        if (!(c1(t, {}) > 0.0)) {
            throw ParameterError("C1(t) must be positive on the interval");
        }
    }
    if (!(omega_inf > 0.0)) {
        throw ParameterError("omega must have a positive infimum on the interval");
    }

    std::vector<Program> drift;
    for (const Expr& bj : p.b) {
        drift.emplace_back(expand_radius(bj, p.dim));
    }
    const Program c(expand_radius(p.c, p.dim));
    double c_inf = inf;
    for (double t : lattice.times()) {
        for (std::size_t i = 0; i < lattice.num_points(); ++i) {
            const auto x = lattice.point(i);
            const double w = 1.0 + norm2(x);
            c_inf = std::min(c_inf, c(t, x) * power(w, p.m));
            if (lattice.radius(i) < p.drift_radius) {
                continue;
            }
            double inward = 0.0;
            for (int j = 0; j < p.dim; ++j) {
                inward += drift[static_cast<std::size_t>(j)](t, x) * x[static_cast<std::size_t>(j)];
            }
            const double bound = -c1(t, {}) * power(w, p.l);
            if (inward > bound + 1e-12 * std::fabs(bound)) {
                std::ostringstream msg;
                msg << "drift violates <b,x> <= -C1(t)(1+|x|^2)^" << p.l << " at t=" << t
                    << " |x|=" << lattice.radius(i);
                throw ParameterError(msg.str());
            }
        }
    }

    const Expr weight = one_plus_r2(p.dim);
    Coefficients coeffs;
    coeffs.dim = p.dim;
    const Expr diffusion = scaled(weight, p.k, p.omega);
    coeffs.q.assign(packed_size(p.dim), Expr::constant(0.0));
    for (int i = 0; i < p.dim; ++i) {
        coeffs.q[packed_index(i, i, p.dim)] = diffusion;
    }
    coeffs.b = p.b;
    coeffs.c = scaled(weight, p.m, p.c);

    const double eta0 = p.declared_eta0.value_or(round_down(omega_inf));
    const double c0 = p.declared_c0.value_or(round_down(c_inf));
    return OperatorSpec(std::move(coeffs), c0, eta0, p.interval, "radial_drift", diffusion);
}

std::string ConfiningClauses::describe() const
{
    std::ostringstream s;
    s << "b<=0:" << drift_nonpositive << " c-growth:" << potential_growth << " strict-drift:" << strict_drift
      << " strict-potential:" << strict_potential << " integrability:" << integrability;
    return s.str();
}

namespace {

struct ConfiningSamples {
    ConfiningClauses clauses;
    double b_sup = -inf;
    double c_inf = inf;
    double eig_inf = inf;
};

ConfiningSamples sample_confining(const ConfiningDriftParams& p, const LatticeSpec& lattice_spec)
{
    if (p.dim < 1) {
        throw ParameterError("dimension must be positive");
    }
    if (p.m < 0.0 || p.r < 0.0 || p.q < 0.0 || p.c_j < 0.0) {
        throw ParameterError("m, r, q and C_J must be nonnegative");
    }
    if (p.q_matrix.size() != packed_size(p.dim)) {
        throw ParameterError("diffusion matrix must have d(d+1)/2 packed entries");
    }
    require_dims(0, p.b, "b");
    require_dims(p.dim, p.c, "c");
    for (const Expr& e : p.q_matrix) {
        require_dims(p.dim, e, "Q");
    }

    const Lattice lattice(p.dim, p.interval, lattice_spec);
    const Program b(p.b);
    const Program c(expand_radius(p.c, p.dim));
    std::vector<Program> qm;
    for (const Expr& e : p.q_matrix) {
        qm.emplace_back(expand_radius(e, p.dim));
    }

    ConfiningSamples s;
    for (double t : lattice.times()) {
        s.b_sup = std::max(s.b_sup, b(t, {}));
    }
    bool growth = true;
    Eigen::MatrixXd m(p.dim, p.dim);
    for (double t : lattice.times()) {
        for (std::size_t i = 0; i < lattice.num_points(); ++i) {
            const auto x = lattice.point(i);
            const double cv = c(t, x);
            s.c_inf = std::min(s.c_inf, cv);
            const double floor = p.c_j * power(1.0 + norm2(x), p.q);
            if (cv < floor - 1e-12 * std::max(1.0, std::fabs(floor))) {
                growth = false;
            }
            for (int a = 0; a < p.dim; ++a) {
                for (int bb = 0; bb < p.dim; ++bb) {
                    m(a, bb) = qm[packed_index(a, bb, p.dim)](t, x);
                }
            }
            const double lo = p.dim == 1 ? m(0, 0)
                                         : Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly)
                                               .eigenvalues()
                                               .minCoeff();
            s.eig_inf = std::min(s.eig_inf, lo);
        }
    }
    s.clauses.drift_nonpositive = s.b_sup <= 0.0;
    s.clauses.potential_growth = growth;
    s.clauses.strict_drift = p.r > p.m - 1.0 && s.b_sup < 0.0;
    s.clauses.strict_potential = p.q > p.m - 1.0 && p.c_j > 0.0;
    s.clauses.integrability = p.q > std::max({p.r, p.m - 1.0, 1.0});
    return s;
}

}  // namespace

ConfiningClauses confining_clauses(const ConfiningDriftParams& params, const LatticeSpec& lattice)
{
    return sample_confining(params, lattice).clauses;
}

OperatorSpec confining_drift_family(const ConfiningDriftParams& p, const LatticeSpec& lattice_spec)
{
    const ConfiningSamples s = sample_confining(p, lattice_spec);
    if (!s.clauses.drift_nonpositive) {
        throw ParameterError("clause (i) fails: b(t) <= 0 is violated on the interval");
    }
    if (!s.clauses.potential_growth) {
        throw ParameterError("clause (ii) fails: c >= C_J(1+|x|^2)^q is violated on the lattice");
    }
    if (!(s.eig_inf > 0.0)) {
        throw ParameterError("clause (iii) fails: Q is not uniformly elliptic on the lattice");
    }
    if (!s.clauses.strict_drift && !s.clauses.strict_potential) {
        std::ostringstream msg;
        msg << "clause (iv) fails: neither (iv-a) r > m-1 with b(t) < 0";
        if (!(p.r > p.m - 1.0)) {
            msg << " [r=" << p.r << " <= m-1=" << p.m - 1.0 << "]";
        } else {
            msg << " [sup b = " << s.b_sup << " is not negative]";
        }
        msg << " nor (iv-b) q > m-1 with C_J > 0";
        if (!(p.q > p.m - 1.0)) {
            msg << " [q=" << p.q << " <= m-1=" << p.m - 1.0 << "]";
        } else {
            msg << " [C_J = 0]";
        }
        msg << " holds";
        throw ParameterError(msg.str());
    }

    const Expr weight = one_plus_r2(p.dim);
    Coefficients coeffs;
    coeffs.dim = p.dim;
    for (const Expr& e : p.q_matrix) {
        coeffs.q.push_back(scaled(weight, p.m, e));
    }
    const Expr radial = scaled(weight, p.r, p.b);
    for (int j = 1; j <= p.dim; ++j) {
        coeffs.b.push_back(radial * Expr::variable(Variable::space(j)));
    }
    coeffs.c = p.c;

    const double eta0 = p.declared_eta0.value_or(round_down(s.eig_inf));
    const double c0 = p.declared_c0.value_or(round_down(s.c_inf));
    const Expr eta = scaled(weight, p.m, Expr::constant(eta0));
    return OperatorSpec(std::move(coeffs), c0, eta0, p.interval, "confining_drift", eta);
}

OperatorSpec heat_operator(int dim, Interval interval)
{
    Coefficients coeffs;
    coeffs.dim = dim;
    coeffs.q.assign(packed_size(dim), Expr::constant(0.0));
    for (int i = 0; i < dim; ++i) {
        coeffs.q[packed_index(i, i, dim)] = Expr::constant(1.0);
    }
    coeffs.b.assign(static_cast<std::size_t>(dim), Expr::constant(0.0));
    coeffs.c = Expr::constant(0.0);
    return OperatorSpec(std::move(coeffs), 0.0, 1.0, interval, "heat");
}

OperatorSpec ornstein_uhlenbeck(Interval interval)
{
    Coefficients coeffs;
    coeffs.dim = 1;
    coeffs.q = {Expr::constant(1.0)};
    coeffs.b = {-Expr::variable(Variable::space(1))};
    coeffs.c = Expr::constant(0.0);
    return OperatorSpec(std::move(coeffs), 0.0, 1.0, interval, "ornstein_uhlenbeck");
}

}  // namespace evolab
