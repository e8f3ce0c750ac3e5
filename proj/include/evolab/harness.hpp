#pragma once

/// Verification checks tying solver, kernel, Monte Carlo and hypothesis
/// outputs to inequalities and identities for the evolution operator. Each
/// check produces one CheckOutcome with the measured quantity, the bound it
/// is compared against and the tolerance used.

#include "evolab/compactness.hpp"
#include "evolab/error.hpp"
#include "evolab/fkmc.hpp"
#include "evolab/hypotheses.hpp"
#include "evolab/kernel.hpp"
#include "evolab/solver.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace evolab {

/// A check hit a fatal error; carries the check id.
class CheckAborted : public NumericError {
public:
    CheckAborted(std::string id, const std::string& what)
        : NumericError("check " + id + " aborted: " + what)
        , id_(std::move(id))
    {}

    const std::string& id() const noexcept { return id_; }

private:
    std::string id_;
};

struct TimePair {
    double s = 0.0;
    double t = 0.5;
};

/// Everything a check needs: the operator, discretization, observation
/// window, test functions and per-check tolerance overrides.
struct HarnessSetup {
    explicit HarnessSetup(OperatorSpec spec) : op(std::move(spec)) { sampling.interval = op.interval(); }

    OperatorSpec op;
    double half_width = 8.0;
    int points = 801;
    double dt = 1e-3;
    double window_half = 2.0;
    std::vector<TimePair> pairs{{0.0, 0.5}};

    std::string datum = "exp(-r^2)";
    std::string compact_datum = "max(0, 1-r^2)^2";
    std::string phi = "1+r^2";
    std::string w = "1+1/(1+r^2)";
    std::string v = "1/(1+r^2)";
    double mu = 0.0;
    std::vector<double> w_radii{0.0, 0.5, 1.0, 2.0, 4.0, 8.0};
    int h_exponent = 3;
    double p = 2.0;
    double delta = 0.1;
    std::vector<double> radii{2.0, 3.0, 4.0, 5.0, 6.0};
    double dirichlet_base_half = 4.0;
    int dirichlet_doublings = 2;
    double mass_floor = 0.05;
    std::uint64_t random_seed = 1;

    McConfig mc{};
    Sampling sampling{};
    std::map<std::string, double> tolerances;

    int dim() const noexcept { return op.dim(); }
    Grid grid() const { return Grid(op.dim(), half_width, points); }
    /// Override from `tolerances`, else `fallback`.
    double tolerance(const std::string& check, double fallback) const;
    Expr expr(const std::string& source) const { return parse(source, op.dim()); }
};

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

struct CheckOutcome {
    std::string id;
    std::string anchor;
    std::vector<std::pair<std::string, double>> measured;
    double value = 0.0;     // the compared quantity
    std::string relation;   // "<=" or ">="
    double expected = 0.0;  // the bound it is compared against
    double tol = 0.0;
    bool pass = false;
    bool skipped = false;
    std::string reason;     // skip reason or failure detail
    double runtime = 0.0;   // seconds; kept out of line()
    CsvTable table;

    /// Deterministic single-line record.
    std::string line() const;
};

struct CheckInfo {
    std::string id;
    std::string anchor;
    std::string summary;
};

/// Every check in run order.
const std::vector<CheckInfo>& check_catalog();
std::optional<CheckInfo> find_check(const std::string& id);

/// Propagators shared between checks, built once per key.
class PropagatorCache {
public:
    std::shared_ptr<const Propagator> get(const OperatorSpec& op, const SolveConfig& cfg, const Grid& grid,
                                          double s, double t);

private:
    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<const Propagator>> entries_;
};

class Harness {
public:
    explicit Harness(HarnessSetup setup) : setup_(std::move(setup)) {}

    const HarnessSetup& setup() const noexcept { return setup_; }

    CheckOutcome supnorm();
    CheckOutcome evolution_law();
    CheckOutcome integral_identity();
    CheckOutcome lp_bound();
    CheckOutcome c0_preservation();
    CheckOutcome not_c0();
    CheckOutcome monotone_dirichlet();
    CheckOutcome dirichlet_neumann_agree();
    CheckOutcome kernel_mass();
    CheckOutcome slight_bound();
    CheckOutcome fk_crossval();

    /// Dispatch by id; throws ParameterError for unknown ids.
    CheckOutcome run(const std::string& id);
    /// Runs `ids` on up to `workers` threads; results keep the order of `ids`.
    std::vector<CheckOutcome> run_all(const std::vector<std::string>& ids, int workers);

    /// Residual sup of the integral identity for one dt, exposed for the
    /// refinement study.
    double integral_identity_residual(double dt, double s0, double s1, double t);

    struct CompactnessRun {
        CompactnessPrerequisites prerequisites;
        CompactnessVerdict verdict;
    };
    /// Every condition check on the configured test functions, in a fixed order.
    std::vector<ConditionReport> hypothesis_reports() const;

    /// Hypothesis checks plus the tail diagnostic on the first time pair.
    CompactnessRun compactness();

    struct TightnessFamily {
        std::vector<double> radii;
        std::vector<double> sup_tail;  // over all pairs and base points
        int pairs = 0;
        int base_points = 0;
        bool decreasing = false;
    };
    /// Tail profile sup over a 3x3 grid of (s, t) pairs and 5 base points.
    TightnessFamily tightness_family();

private:
    std::shared_ptr<const Propagator> propagator(Boundary bc, double s, double t);
    std::vector<double> nodal(const std::string& source, double t) const;

    HarnessSetup setup_;
    PropagatorCache cache_;
};

}  // namespace evolab
