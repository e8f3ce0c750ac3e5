#pragma once

#include "evolab/expr.hpp"
#include "evolab/lattice.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace evolab {

/// Index of (i, j), i <= j, in a packed upper triangle of a d x d matrix.
constexpr std::size_t packed_index(int i, int j, int d)
{
    if (i > j) {
        std::swap(i, j);
    }
    return static_cast<std::size_t>(i * d - i * (i - 1) / 2 + (j - i));
}

constexpr std::size_t packed_size(int d) { return static_cast<std::size_t>(d * (d + 1) / 2); }

/// Raw coefficients of A(t) = sum q_ij D_ij + sum b_j D_j - c.
struct Coefficients {
    int dim = 1;
    std::vector<Expr> q;  // packed upper triangle
    std::vector<Expr> b;
    Expr c;
};

/// A second-order operator with declared analytic constants. Immutable.
///
/// `r` is expanded into coordinates on construction, so every stored
/// coefficient is differentiable. `eta` is the ellipticity profile
/// (<Q xi, xi> >= eta |xi|^2); it defaults to the constant declared_eta0.
class OperatorSpec {
public:
    OperatorSpec(Coefficients coeffs, double declared_c0, double declared_eta0, Interval interval,
                 std::string name = "custom", Expr eta = {});

    int dim() const noexcept { return dim_; }
    const std::string& name() const noexcept { return name_; }
    const Interval& interval() const noexcept { return interval_; }
    double declared_c0() const noexcept { return declared_c0_; }
    double declared_eta0() const noexcept { return declared_eta0_; }

    const Expr& q(int i, int j) const { return q_[packed_index(i, j, dim_)]; }
    const Expr& b(int j) const { return b_[static_cast<std::size_t>(j)]; }
    const Expr& c() const noexcept { return c_; }
    const Expr& eta() const noexcept { return eta_; }

    double q_at(int i, int j, double t, std::span<const double> x) const
    {
        return q_prog_[packed_index(i, j, dim_)](t, x);
    }
    double b_at(int j, double t, std::span<const double> x) const
    {
        return b_prog_[static_cast<std::size_t>(j)](t, x);
    }
    double c_at(double t, std::span<const double> x) const { return c_prog_(t, x); }
    double eta_at(double t, std::span<const double> x) const { return eta_prog_(t, x); }

    /// No coefficient mentions t.
    bool time_independent() const noexcept { return time_independent_; }
    /// Every q_ij is a literal constant.
    bool constant_diffusion() const noexcept { return constant_diffusion_; }

private:
    int dim_;
    std::string name_;
    Interval interval_;
    double declared_c0_;
    double declared_eta0_;
    std::vector<Expr> q_;
    std::vector<Expr> b_;
    Expr c_;
    Expr eta_;
    std::vector<Program> q_prog_;
    std::vector<Program> b_prog_;
    Program c_prog_;
    Program eta_prog_;
    bool time_independent_ = true;
    bool constant_diffusion_ = true;
};

/// A function of (t, x) with symbolic gradient and Hessian.
class TestFunction {
public:
    TestFunction(const Expr& value, int dim);
    TestFunction(std::string_view source, int dim);

    int dim() const noexcept { return dim_; }
    const Expr& expr() const noexcept { return value_; }
    const Expr& gradient(int i) const { return grad_[static_cast<std::size_t>(i)]; }
    const Expr& hessian(int i, int j) const { return hess_[packed_index(i, j, dim_)]; }

    double value(double t, std::span<const double> x) const { return value_prog_(t, x); }
    double gradient_at(int i, double t, std::span<const double> x) const
    {
        return grad_prog_[static_cast<std::size_t>(i)](t, x);
    }
    double hessian_at(int i, int j, double t, std::span<const double> x) const
    {
        return hess_prog_[packed_index(i, j, dim_)](t, x);
    }

private:
    int dim_;
    Expr value_;
    std::vector<Expr> grad_;
    std::vector<Expr> hess_;
    Program value_prog_;
    std::vector<Program> grad_prog_;
    std::vector<Program> hess_prog_;
};

enum class Potential { Include, Drop };

/// (A(t) psi)(x). With Potential::Drop the -c psi term is omitted (A + c).
double apply(const OperatorSpec& op, const TestFunction& psi, double t, std::span<const double> x,
             Potential potential = Potential::Include);

/// beta_i = b_i - sum_j D_j q_ij.
std::vector<Expr> beta(const OperatorSpec& op);
Expr div_beta(const OperatorSpec& op);

/// Sampled check of the declared constants.
struct Validation {
    bool ok = true;
    double ellipticity_margin = 0.0;  // min <Q xi,xi> - eta |xi|^2 over samples
    double potential_margin = 0.0;    // min c - declared_c0 over samples
    std::string message;
};

Validation validate(const OperatorSpec& op, const Lattice& lattice);

/// Largest multiple of 1e-6 not above v.
double round_down(double v);

}  // namespace evolab
