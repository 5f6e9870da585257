#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bsde/driver.hpp"
#include "bsde/drivers.hpp"
#include "bsde/lattice.hpp"

namespace bsde {

struct NamedParams {
    std::string name;
    ParamMap params;
};

struct ExperimentConfig {
    NamedParams driver{"zero", {}};
    NamedParams payoff{"identity", {}};
    NamedParams payoff_alt{"call", {{"strike", 0.0}}};  // X' in the property suite
    double horizon = 1.0;
    int steps = 4;
    std::string mode = "both";  // primal | dual | both | properties | riskmeasure
    double tolerance = 1e-6;
    std::string output;         // report path; empty means no file
    std::string csv;            // per-node dump path; empty means none
    std::uint64_t seed = 0;
    double m = 1.0;
    double lambda = 0.5;
    double y0 = 1.0;            // first normalization candidate
    int controls = 20;          // seeded controls for the weak duality and cocycle residuals
    std::string penalty = "from_driver";
    ParamMap penalty_params;
    std::string penalty_path;

    /// Throws ConfigError when an invariant fails.
    void validate() const;
    nlohmann::json to_json() const;
};

/// Throws ConfigError on malformed input. Missing fields keep their defaults.
ExperimentConfig parse_config(const nlohmann::json& j);

struct PropertyRow {
    std::string name;
    std::string status;  // PASS | FAIL | SKIP
    std::optional<double> lhs;
    std::optional<double> rhs;
    nlohmann::json witness;  // null unless FAIL or SKIP
};

nlohmann::json to_json(const PropertyRow& row);

/// Axioms of the minimal supersolution operator at the root. Inequalities
/// are one-sided with `tol`; equalities are two-sided with 1e-8.
std::vector<PropertyRow> run_properties(const Driver& driver, const LatticeModel& lattice, const NodeFunction& x,
                                        const NodeFunction& x_alt, double m, double lambda, double tol = 1e-8,
                                        double y0 = 1.0);

struct ConvergenceTable {
    std::vector<double> roots;
    double limit_root = 0.0;
    double max_decrease = 0.0;  // largest drop between consecutive roots
    double final_error = 0.0;   // |last root - limit_root|
    bool passed = false;
};

/// Roots along a nodewise nondecreasing sequence X_n and their distance to root(X).
ConvergenceTable run_monotone_convergence(const Driver& driver, const LatticeModel& lattice,
                                          const std::vector<NodeFunction>& sequence, const NodeFunction& limit,
                                          double tol = 1e-6);

struct FatouCheck {
    double lhs = 0.0;  // root of the nodewise liminf
    double rhs = 0.0;  // liminf of the roots
    bool passed = false;
};

/// liminf over the final half of the sequence, nodewise and for the roots.
FatouCheck fatou_probe(const Driver& driver, const LatticeModel& lattice, const std::vector<NodeFunction>& sequence,
                       double tol = 1e-8);

struct ExperimentResult {
    nlohmann::json report;
    std::string csv;
    int exit_code = 0;  // 0 all assertions hold, 1 some failed
};

/// Runs the requested modes. Throws ConfigError on bad driver/payoff names.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Writes report and CSV to the configured paths.
void write_outputs(const ExperimentConfig& config, const ExperimentResult& result);

/// Runs independent experiments concurrently; results keep the input order.
std::vector<ExperimentResult> run_batch(const std::vector<ExperimentConfig>& configs);

/// Report with runtime_ms removed, serialized; equal across repeated runs.
std::string canonical_report(const nlohmann::json& report);

}  // namespace bsde
