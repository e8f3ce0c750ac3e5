#include "evolab/lattice.hpp"

#include "evolab/error.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace evolab {

Lattice::Lattice(int dim, Interval interval, LatticeSpec spec)
    : dim_(dim)
    , spec_(spec)
{
    if (dim < 1 || spec.n_times < 1 || spec.shell_step <= 0.0 || spec.r_check <= 0.0) {
        throw ParameterError("invalid lattice specification");
    }
    if (spec.n_times == 1) {
        times_.push_back(interval.lo);
    } else {
        for (int k = 0; k < spec.n_times; ++k) {
            times_.push_back(k + 1 == spec.n_times
                                 ? interval.hi
                                 : interval.lo + interval.length() * k / (spec.n_times - 1));
        }
    }
    const auto n_shells = static_cast<int>(std::llround(2.0 * spec.r_check / spec.shell_step));
    for (int s = 0; s <= n_shells; ++s) {
        radii_.push_back(s * spec.shell_step);
    }

    std::vector<std::vector<double>> directions;
    if (dim == 1) {
        directions = {{1.0}, {-1.0}};
    } else if (dim == 2) {
        for (int a = 0; a < spec.n_directions; ++a) {
            const double theta = 2.0 * std::numbers::pi * a / spec.n_directions;
            directions.push_back({std::cos(theta), std::sin(theta)});
        }
    } else {
        std::mt19937_64 rng(spec.seed);
        std::normal_distribution<double> normal;
        for (int a = 0; a < spec.n_directions; ++a) {
            std::vector<double> v(static_cast<std::size_t>(dim));
            double norm = 0.0;
            do {
                norm = 0.0;
                for (double& vi : v) {
                    vi = normal(rng);
                    norm += vi * vi;
                }
            } while (norm == 0.0);
            norm = std::sqrt(norm);
            for (double& vi : v) {
                vi /= norm;
            }
            directions.push_back(std::move(v));
        }
    }

    coords_.assign(static_cast<std::size_t>(dim), 0.0);
    shell_of_.push_back(0);
    for (std::size_t s = 1; s < radii_.size(); ++s) {
        for (const auto& dir : directions) {
            for (double v : dir) {
                coords_.push_back(radii_[s] * v);
            }
            shell_of_.push_back(s);
        }
    }
}

}  // namespace evolab
