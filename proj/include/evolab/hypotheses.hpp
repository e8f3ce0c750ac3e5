#pragma once

/// Sampled verification of structural conditions on an operator.
///
/// Every check sweeps a Lattice (times x radial shells) over an interval J.
/// Constants are fitted on the inner part of the lattice (|x| <= r_check) and
/// the margin is then evaluated on the whole lattice (|x| <= 2 r_check), so a
/// condition that only holds on a bounded region shows up as a negative margin
/// on the outer shells. A pass means "consistent on the lattice", nothing more.

#include "evolab/lattice.hpp"
#include "evolab/operator.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace evolab {

enum class ConditionId {
    Lyapunov,
    LyapunovMinusC,
    W,
    H,
    Div,
    DriftCompensation,
    V,
    BoundedAphi,
};

std::string to_string(ConditionId id);

inline constexpr double margin_tolerance = 1e-9;

struct ConditionReport {
    ConditionId id = ConditionId::Lyapunov;
    Interval interval;
    bool pass = false;
    std::map<std::string, double> constants;
    double worst_margin = 0.0;
    double worst_t = 0.0;
    std::vector<double> worst_x;
    LatticeSpec lattice;
    std::string note;

    double constant(const std::string& name) const { return constants.at(name); }
    /// One key=value record on a single line.
    std::string serialize() const;
};

/// Where a check samples.
struct Sampling {
    Interval interval{0.0, 1.0};
    LatticeSpec lattice{};
};

/// A x phi <= lambda phi. Fits lambda = max (A phi)/phi unless given.
ConditionReport check_lyapunov(const OperatorSpec& op, const TestFunction& phi, const Sampling& s,
                               std::optional<double> lambda = std::nullopt);
/// Same for A + c (potential dropped).
ConditionReport check_lyapunov_minus_c(const OperatorSpec& op, const TestFunction& phi, const Sampling& s,
                                       std::optional<double> lambda = std::nullopt);

/// A W - mu W >= 0 on |x| >= radius, for a positive bounded W.
ConditionReport check_W(const OperatorSpec& op, const TestFunction& w, double mu, double radius,
                        const Sampling& s);
/// Smallest radius among `candidates` (ascending) for which check_W passes.
std::optional<ConditionReport> fit_W_radius(const OperatorSpec& op, const TestFunction& w, double mu,
                                            std::span<const double> candidates, const Sampling& s);

/// h(z) = gamma z^l - c_prime.
struct HForm {
    double gamma = 1.0;
    double c_prime = 0.0;
    int l = 2;
};

/// A phi <= -h(phi). With `form` unset, fits gamma from the outer shells of the
/// inner lattice (95% of the smallest ratio -A phi / phi^l) and then the least
/// c_prime >= 0 that makes the inner margin nonnegative.
ConditionReport check_h(const OperatorSpec& op, const TestFunction& phi, const Sampling& s, int l,
                        std::optional<HForm> form = std::nullopt);

/// (K - (p-1) c0) / p.
double lp_exponent(double k, double p, double c0);

/// c + div beta >= -K. Fits K = max(0, -min(c + div beta)) unless given;
/// also reports K_p = lp_exponent(K, p, declared_c0).
ConditionReport check_div(const OperatorSpec& op, const Sampling& s, double p,
                          std::optional<double> k = std::nullopt);

/// |beta|^2 / (4 (p-1) eta) - c <= K'. Fits K' = max(0, max of the left side) unless given.
ConditionReport check_drift_compensation(const OperatorSpec& op, const Sampling& s, double p,
                                         std::optional<double> k_prime = std::nullopt);

/// lambda0 V - A V >= 0 for a positive V vanishing at infinity. Fits
/// lambda0 = max(0, max A V / V) unless given.
ConditionReport check_V(const OperatorSpec& op, const TestFunction& v, const Sampling& s,
                        std::optional<double> lambda0 = std::nullopt);

/// A phi <= M_J. Fits M_J = max A phi unless given.
ConditionReport check_bounded_Aphi(const OperatorSpec& op, const TestFunction& phi, const Sampling& s,
                                   std::optional<double> m_j = std::nullopt);

struct ShellExtrema {
    double radius = 0.0;
    double min = 0.0;
    double max = 0.0;
};

/// Per-shell extrema of f(t, x) over all lattice times and directions.
std::vector<ShellExtrema> shell_profile(const Lattice& lattice,
                                        const std::function<double(double, std::span<const double>)>& f);

}  // namespace evolab
