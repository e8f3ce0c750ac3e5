#pragma once

#include "evolab/lattice.hpp"
#include "evolab/operator.hpp"

#include <optional>
#include <string>
#include <vector>

namespace evolab {

/// omega(t)(1+|x|^2)^k Lap + <b, grad> - c(t,x)(1+|x|^2)^m, with a drift that
/// points inwards at rate C1(t)(1+|x|^2)^l outside B(0, drift_radius).
struct RadialDriftParams {
    int dim = 1;
    int k = 0;
    int m = 0;
    int l = 3;
    Expr omega;             // of t
    Expr c1;                // of t
    Expr c;                 // of (t, x)
    std::vector<Expr> b;    // of (t, x)
    double drift_radius = 1.0;
    Interval interval{0.0, 1.0};
    std::optional<double> declared_c0;
    std::optional<double> declared_eta0;
};

/// (1+|x|^2)^m Tr(Q D^2) + (1+|x|^2)^r b(t) <x, grad> - c(t,x), with b <= 0
/// and c >= c_j (1+|x|^2)^q.
struct ConfiningDriftParams {
    int dim = 1;
    double m = 0.0;
    double r = 1.0;
    double q = 2.0;
    double c_j = 1.0;
    Expr b;                      // of t
    std::vector<Expr> q_matrix;  // packed upper triangle, bounded
    Expr c;                      // of (t, x)
    Interval interval{0.0, 1.0};
    std::optional<double> declared_c0;
    std::optional<double> declared_eta0;
};

/// Which growth clauses a ConfiningDriftParams instance satisfies on its interval.
struct ConfiningClauses {
    bool drift_nonpositive = false;  // b(t) <= 0
    bool potential_growth = false;   // c >= c_j (1+|x|^2)^q on the lattice
    bool strict_drift = false;       // r > m-1 and b(t) < 0
    bool strict_potential = false;   // q > m-1 and c_j > 0
    bool integrability = false;      // q > max(r, m-1, 1)
    std::string describe() const;
};

OperatorSpec radial_drift_family(const RadialDriftParams& params, const LatticeSpec& lattice = {});

ConfiningClauses confining_clauses(const ConfiningDriftParams& params, const LatticeSpec& lattice = {});
OperatorSpec confining_drift_family(const ConfiningDriftParams& params, const LatticeSpec& lattice = {});

/// Constant-coefficient instances used as references.
OperatorSpec heat_operator(int dim, Interval interval = {0.0, 1.0});
/// D^2 - x D in one dimension.
OperatorSpec ornstein_uhlenbeck(Interval interval = {0.0, 1.0});

}  // namespace evolab
