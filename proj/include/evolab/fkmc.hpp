#pragma once

/// Feynman-Kac Monte Carlo: simulates dX = b dt + sigma dB with
/// sigma sigma^T = 2Q by Euler-Maruyama (left-point coefficients) and weights
/// each path by exp(-sum c dt). The estimate of (G(t,s) f)(x) is the mean of
/// weight * f(X) at the end of the path. Since G solves a forward equation the
/// path runs the coefficients backwards: step k uses time t - k dt.
///
/// Paths are processed in fixed blocks of `block_size`; block b draws from a
/// std::mt19937_64 seeded with a hash of (seed, b), and block sums are reduced
/// in block order, so results do not depend on the number of workers.

#include "evolab/operator.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>

namespace evolab {

struct McConfig {
    long n_paths = 100000;
    double dt = 1e-3;
    std::uint64_t seed = 1;
    int workers = 1;
};

struct FkEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    long n_paths = 0;
    std::uint64_t seed = 0;
    /// Fraction of drift increments that hit the length cap sqrt(dt) * 1e3.
    double clip_rate = 0.0;
    std::string rng = "mt19937_64";

    bool reliable() const noexcept { return clip_rate <= 1e-4; }
};

inline constexpr long block_size = 1024;

using PathFunctional = std::function<double(std::span<const double>)>;

FkEstimate estimate(const OperatorSpec& op, const PathFunctional& f, std::span<const double> x, double s, double t,
                    const McConfig& cfg);
FkEstimate estimate(const OperatorSpec& op, const Expr& f, std::span<const double> x, double s, double t,
                    const McConfig& cfg);

/// Weighted probability of |X_t| > radius.
FkEstimate tail_mass_mc(const OperatorSpec& op, std::span<const double> x, double s, double t, double radius,
                        const McConfig& cfg);

}  // namespace evolab
