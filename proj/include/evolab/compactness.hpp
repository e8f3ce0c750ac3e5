#pragma once

/// Comparison ODE y' = -C h(y) for h(z) = gamma z^l - c_prime, its
/// initial-datum-independent bound, and the tail diagnostic built on it.

#include "evolab/hypotheses.hpp"
#include "evolab/kernel.hpp"

#include <string>
#include <vector>

namespace evolab {

class HFunction {
public:
    HFunction(double gamma, double c_prime, int l);
    explicit HFunction(const HForm& form) : HFunction(form.gamma, form.c_prime, form.l) {}

    double gamma() const noexcept { return gamma_; }
    double c_prime() const noexcept { return c_prime_; }
    int l() const noexcept { return l_; }

    double operator()(double z) const;
    /// Positive zero (c_prime / gamma)^(1/l); 0 when c_prime <= 0.
    double root() const noexcept { return root_; }

private:
    double gamma_;
    double c_prime_;
    int l_;
    double root_;
};

struct ComparisonTrajectory {
    std::vector<double> r;
    std::vector<double> y;

    double final_value() const { return y.back(); }
};

/// Integrates y' = -C h(y), y(0) = y0 with an adaptive Dormand-Prince scheme
/// (relative tolerance 1e-10) and reports y at `samples` equispaced r in
/// [0, horizon]. Throws NumericError if y leaves [0, inf).
ComparisonTrajectory solve_comparison(const HFunction& h, double c, double y0, double horizon,
                                      int samples = 101);

/// int_M^inf dz / h(z) for M above the root.
double tail_integral(const HFunction& h, double m);

struct UniformBound {
    double m = 0.0;         // solution of tail_integral(h, M) = C delta
    double y_bar = 0.0;     // max(M, root)
    double residual = 0.0;  // tail_integral(h, M) - C delta
};

/// Bisection for int_M^inf dz/h = C delta.
UniformBound uniform_bound(const HFunction& h, double c, double delta);

/// Reports the three hypothesis checks the diagnostic is conditioned on.
struct CompactnessPrerequisites {
    ConditionReport h;
    ConditionReport w;
    ConditionReport lyapunov_minus_c;
};

struct CompactnessConfig {
    double delta = 0.1;
    std::vector<double> radii{2.0, 3.0, 4.0, 5.0, 6.0};
    double window_half = 2.0;
    double tol = 1e-6;
    /// Largest tail at the outermost radius still counted as decayed.
    double decay_threshold = 1e-3;
    TailNorm norm = TailNorm::Euclidean;
};

struct TailComparison {
    double radius = 0.0;
    double inf_phi = 0.0;        // inf of phi over |y| >= radius
    double bound = 0.0;          // y_bar / inf_phi, rescaled to G
    double kernel_bound = 0.0;   // sup_x (P phi)(x) / inf_phi, rescaled to G
    double measured = 0.0;       // sup over the window of the tail mass of G
    bool pass = false;
};

struct CompactnessVerdict {
    bool ran = false;
    std::string refused_by;      // name of the failed prerequisite
    double gamma = 0.0;
    double c_prime = 0.0;        // after the potential shift, clamped at 0
    int l = 2;
    double shift = 0.0;          // -c0 when c0 < 0
    double rescale = 1.0;        // exp(-c0 (t - s)) when c0 < 0
    double mass_constant = 0.0;  // min over the window of the shifted row sums
    UniformBound bound;
    double sup_p_phi = 0.0;      // sup over the window of the shifted (P phi)
    double clip_error = 0.0;
    bool kernel_side = false;    // every tail <= kernel_bound + tol
    bool decays = false;
    bool consistent = false;
    std::vector<TailComparison> rows;

    /// "consistent-with-compactness", "inconclusive" or "refused".
    std::string label() const;
};

/// Compares the propagator's tail profile with y_bar(delta) / inf_{|y|>=R} phi.
/// With declared_c0 < 0 everything is evaluated for the shifted family
/// exp(c0 (t - s)) G(t, s) with h - c0 and mapped back.
CompactnessVerdict compactness_diagnostic(const OperatorSpec& op, const TestFunction& phi,
                                          const CompactnessPrerequisites& prereq, const Propagator& p,
                                          const CompactnessConfig& cfg);

/// inf of phi over |y| >= radius, sampled radially out to 8 radius.
double phi_infimum_outside(const TestFunction& phi, int dim, double radius);

}  // namespace evolab
