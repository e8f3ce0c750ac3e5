#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace evolab {

struct Interval {
    double lo = 0.0;
    double hi = 1.0;

    bool contains(double t) const noexcept { return t >= lo && t <= hi; }
    double length() const noexcept { return hi - lo; }
};

/// Where the sampling checks look: `n_times` equispaced times in the interval,
/// spherical shells of radius 0, shell_step, ..., 2*r_check, and on each shell
/// +-1 (d=1), `n_directions` equiangular directions (d=2) or `n_directions`
/// seeded random unit vectors (d>=3).
struct LatticeSpec {
    double r_check = 10.0;
    double shell_step = 0.5;
    int n_times = 21;
    int n_directions = 32;
    std::uint64_t seed = 20240531;
};

class Lattice {
public:
    Lattice(int dim, Interval interval, LatticeSpec spec = {});

    int dim() const noexcept { return dim_; }
    const LatticeSpec& spec() const noexcept { return spec_; }
    const std::vector<double>& times() const noexcept { return times_; }
    const std::vector<double>& shell_radii() const noexcept { return radii_; }

    std::size_t num_points() const noexcept { return shell_of_.size(); }
    std::span<const double> point(std::size_t i) const
    {
        return {coords_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
    }
    std::size_t shell(std::size_t i) const { return shell_of_[i]; }
    double radius(std::size_t i) const { return radii_[shell_of_[i]]; }

private:
    int dim_;
    LatticeSpec spec_;
    std::vector<double> times_;
    std::vector<double> radii_;
    std::vector<double> coords_;
    std::vector<std::size_t> shell_of_;
};

}  // namespace evolab
