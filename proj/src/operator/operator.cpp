#include "evolab/operator.hpp"

#include "evolab/error.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace evolab {

namespace {

std::vector<Program> compile(const std::vector<Expr>& es)
{
    std::vector<Program> out;
    out.reserve(es.size());
    for (const Expr& e : es) {
        out.emplace_back(e);
    }
    return out;
}

bool mentions_time(const Expr& e) { return depends_on(e, Variable::time()); }

void check_dim(const Expr& e, int dim, const char* what)
{
    if (!e.valid()) {
        throw ParameterError(std::string("missing coefficient ") + what);
    }
    if (max_space_index(e) > dim) {
        throw ParameterError(std::string("coefficient ") + what + " uses a coordinate beyond dimension "
                             + std::to_string(dim));
    }
}

}  // namespace

OperatorSpec::OperatorSpec(Coefficients coeffs, double declared_c0, double declared_eta0,
                           Interval interval, std::string name, Expr eta)
    : dim_(coeffs.dim)
    , name_(std::move(name))
    , interval_(interval)
    , declared_c0_(declared_c0)
    , declared_eta0_(declared_eta0)
{
    if (dim_ < 1) {
        throw ParameterError("dimension must be positive");
    }
    if (coeffs.q.size() != packed_size(dim_) || coeffs.b.size() != static_cast<std::size_t>(dim_)) {
        throw ParameterError("coefficient shapes do not match dimension " + std::to_string(dim_));
    }
    if (!(declared_eta0 > 0.0)) {
        throw ParameterError("declared_eta0 must be positive");
    }
    if (!(interval.lo < interval.hi)) {
        throw ParameterError("time interval must satisfy t_min < t_max");
    }
    for (const Expr& e : coeffs.q) {
        check_dim(e, dim_, "q");
        q_.push_back(expand_radius(e, dim_));
    }
    for (const Expr& e : coeffs.b) {
        check_dim(e, dim_, "b");
        b_.push_back(expand_radius(e, dim_));
    }
    check_dim(coeffs.c, dim_, "c");
    c_ = expand_radius(coeffs.c, dim_);
    eta_ = eta.valid() ? expand_radius(eta, dim_) : Expr::constant(declared_eta0);

    q_prog_ = compile(q_);
    b_prog_ = compile(b_);
    c_prog_ = Program(c_);
    eta_prog_ = Program(eta_);

    for (const Expr& e : q_) {
        time_independent_ = time_independent_ && !mentions_time(e);
        constant_diffusion_ = constant_diffusion_ && e.node().kind == ExprNode::Kind::Constant;
    }
    for (const Expr& e : b_) {
        time_independent_ = time_independent_ && !mentions_time(e);
    }
    time_independent_ = time_independent_ && !mentions_time(c_);
}

TestFunction::TestFunction(const Expr& value, int dim)
    : dim_(dim)
    , value_(expand_radius(value, dim))
{
    if (max_space_index(value) > dim) {
        throw ParameterError("test function uses a coordinate beyond dimension " + std::to_string(dim));
    }
    for (int i = 0; i < dim; ++i) {
        grad_.push_back(diff(value_, Variable::space(i + 1)));
    }
    hess_.resize(packed_size(dim));
    for (int i = 0; i < dim; ++i) {
        for (int j = i; j < dim; ++j) {
            hess_[packed_index(i, j, dim)] = diff(grad_[static_cast<std::size_t>(i)], Variable::space(j + 1));
        }
    }
    value_prog_ = Program(value_);
    grad_prog_ = compile(grad_);
    hess_prog_ = compile(hess_);
}

TestFunction::TestFunction(std::string_view source, int dim)
    : TestFunction(parse(source, dim), dim)
{}

double apply(const OperatorSpec& op, const TestFunction& psi, double t, std::span<const double> x,
             Potential potential)
{
    if (!op.interval().contains(t)) {
        throw ParameterError("t = " + std::to_string(t) + " outside the operator interval");
    }
    const int d = op.dim();
    double second = 0.0;
    for (int i = 0; i < d; ++i) {
        second += op.q_at(i, i, t, x) * psi.hessian_at(i, i, t, x);
        for (int j = i + 1; j < d; ++j) {
            second += 2.0 * op.q_at(i, j, t, x) * psi.hessian_at(i, j, t, x);
        }
    }
    double first = 0.0;
    for (int j = 0; j < d; ++j) {
        first += op.b_at(j, t, x) * psi.gradient_at(j, t, x);
    }
    double result = second + first;
    if (potential == Potential::Include) {
        result -= op.c_at(t, x) * psi.value(t, x);
    }
    return result;
}

std::vector<Expr> beta(const OperatorSpec& op)
{
    std::vector<Expr> out;
    const int d = op.dim();
    for (int i = 0; i < d; ++i) {
        Expr acc = op.b(i);
        for (int j = 0; j < d; ++j) {
            Expr dq = diff(op.q(i, j), Variable::space(j + 1));
            if (!(dq.node().kind == ExprNode::Kind::Constant && dq.node().value == 0.0)) {
                acc = acc - dq;
            }
        }
        out.push_back(acc);
    }
    return out;
}

Expr div_beta(const OperatorSpec& op)
{
    const auto bs = beta(op);
    Expr acc;
    for (int i = 0; i < op.dim(); ++i) {
        Expr term = diff(bs[static_cast<std::size_t>(i)], Variable::space(i + 1));
        if (term.node().kind == ExprNode::Kind::Constant && term.node().value == 0.0) {
            continue;
        }
        acc = acc.valid() ? acc + term : term;
    }
    return acc.valid() ? acc : Expr::constant(0.0);
}

Validation validate(const OperatorSpec& op, const Lattice& lattice)
{
    const int d = op.dim();
    Validation v;
    v.ellipticity_margin = std::numeric_limits<double>::infinity();
    v.potential_margin = std::numeric_limits<double>::infinity();
    std::mt19937_64 rng(lattice.spec().seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> normal;
    std::vector<double> xi(static_cast<std::size_t>(d));
    std::ostringstream msg;

    for (double t : lattice.times()) {
        for (std::size_t p = 0; p < lattice.num_points(); ++p) {
            const auto x = lattice.point(p);
            const double eta = op.eta_at(t, x);
            if (eta < op.declared_eta0() * (1.0 - 1e-12) - 1e-12 && v.ok) {
                v.ok = false;
                msg << "ellipticity profile below declared_eta0 at t=" << t << " |x|=" << lattice.radius(p) << "; ";
            }
            for (int k = 0; k < 20; ++k) {
                double norm = 0.0;
                for (double& c : xi) {
                    c = normal(rng);
                    norm += c * c;
                }
                norm = std::sqrt(norm);
                for (double& c : xi) {
                    c /= norm;
                }
                double form = 0.0;
                for (int i = 0; i < d; ++i) {
                    for (int j = 0; j < d; ++j) {
                        form += op.q_at(i, j, t, x) * xi[static_cast<std::size_t>(i)] * xi[static_cast<std::size_t>(j)];
                    }
                }
                const double margin = form - eta;
                v.ellipticity_margin = std::min(v.ellipticity_margin, margin);
                if (margin < -1e-12 - 1e-12 * std::fabs(eta) && v.ok) {
                    v.ok = false;
                    msg << "ellipticity fails at t=" << t << " |x|=" << lattice.radius(p) << "; ";
                }
            }
            const double cm = op.c_at(t, x) - op.declared_c0();
            v.potential_margin = std::min(v.potential_margin, cm);
            if (cm < -1e-12 && v.ok) {
                v.ok = false;
                msg << "potential below declared_c0 at t=" << t << " |x|=" << lattice.radius(p) << "; ";
            }
        }
    }
    v.message = msg.str();
    return v;
}

double round_down(double v)
{
    return std::floor(v * 1e6) / 1e6;
}

}  // namespace evolab
