#include "bsde/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <random>
#include <sstream>

#include "bsde/conjugate.hpp"
#include "bsde/dual.hpp"
#include "bsde/errors.hpp"
#include "bsde/primal.hpp"
#include "bsde/riskmeasure.hpp"

namespace bsde {

using nlohmann::json;

namespace {

constexpr double kEqualityTol = 1e-8;

NamedParams parse_named(const json& j, const char* field) {
    NamedParams out;
    if (j.is_string()) {
        out.name = j.get<std::string>();
        return out;
    }
    if (!j.is_object() || !j.contains("name")) throw Error(ErrorCode::ConfigError, std::string(field) + ": need a name");
    out.name = j.at("name").get<std::string>();
    if (j.contains("params")) out.params = j.at("params").get<ParamMap>();
    return out;
}

json named_json(const NamedParams& p) { return {{"name", p.name}, {"params", p.params}}; }

double root_of(const Driver& g, const LatticeModel& lattice, const NodeFunction& x) {
    return solve_min_supersolution(g, lattice, x).root();
}

NodeFunction combine(const NodeFunction& a, const NodeFunction& b, double wa, double wb) {
    NodeFunction out(a.level);
    for (size_t j = 0; j < a.size(); ++j) out[j] = wa * a[j] + wb * b[j];
    return out;
}

NodeFunction shifted(const NodeFunction& a, double m) {
    NodeFunction out = a;
    for (double& v : out.values) v += m;
    return out;
}

PropertyRow compare(std::string name, double lhs, double rhs, bool two_sided, double tol, json inputs) {
    double residual = lhs - rhs;
    bool ok = two_sided ? std::abs(residual) <= tol : residual <= tol;
    PropertyRow row{std::move(name), ok ? "PASS" : "FAIL", lhs, rhs, nullptr};
    if (!ok) row.witness = {{"level", 0}, {"node", 0}, {"inputs", std::move(inputs)}, {"residual", residual}};
    return row;
}

PropertyRow skip(std::string name, std::string reason) {
    return {std::move(name), "SKIP", std::nullopt, std::nullopt, {{"reason", std::move(reason)}}};
}

PropertyRow failure(std::string name, const std::string& message) {
    return {std::move(name), "FAIL", std::nullopt, std::nullopt, {{"error", message}}};
}

json number_or_null(std::optional<double> v) {
    if (!v || !std::isfinite(*v)) return nullptr;
    return *v;
}

std::string csv_cell(std::optional<double> v) {
    if (!v) return "";
    std::ostringstream os;
    os << std::setprecision(17) << *v;
    return os.str();
}

}  // namespace

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorCode::ConfigError, m); };
    if (steps < 1) fail("lattice N must be >= 1");
    if (!(horizon > 0)) fail("lattice T must be > 0");
    if (!(tolerance > 0)) fail("tolerance must be > 0");
    static const char* modes[] = {"primal", "dual", "both", "properties", "riskmeasure"};
    if (std::find(std::begin(modes), std::end(modes), mode) == std::end(modes)) fail("unknown mode '" + mode + "'");
    if (!(m >= 0)) fail("m must be >= 0");
    if (!(lambda > 0 && lambda < 1)) fail("lambda must lie in (0, 1)");
    if (controls < 0) fail("controls must be >= 0");
}

json ExperimentConfig::to_json() const {
    return {{"driver", named_json(driver)},
            {"payoff", named_json(payoff)},
            {"payoff_alt", named_json(payoff_alt)},
            {"lattice", {{"T", horizon}, {"N", steps}}},
            {"mode", mode},
            {"tolerance", tolerance},
            {"output", output},
            {"csv", csv},
            {"seed", seed},
            {"properties", {{"m", m}, {"lambda", lambda}, {"y0", y0}}},
            {"controls", controls},
            {"penalty", {{"name", penalty}, {"params", penalty_params}, {"path", penalty_path}}}};
}

ExperimentConfig parse_config(const json& j) {
    ExperimentConfig c;
    try {
        if (!j.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");
        if (j.contains("driver")) c.driver = parse_named(j.at("driver"), "driver");
        if (j.contains("payoff")) c.payoff = parse_named(j.at("payoff"), "payoff");
        if (j.contains("payoff_alt")) c.payoff_alt = parse_named(j.at("payoff_alt"), "payoff_alt");
        if (j.contains("lattice")) {
            const json& l = j.at("lattice");
            if (l.contains("T")) c.horizon = l.at("T").get<double>();
            if (l.contains("N")) c.steps = l.at("N").get<int>();
        }
        if (j.contains("mode")) c.mode = j.at("mode").get<std::string>();
        if (j.contains("tolerance")) c.tolerance = j.at("tolerance").get<double>();
        if (j.contains("output")) c.output = j.at("output").get<std::string>();
        if (j.contains("csv")) c.csv = j.at("csv").get<std::string>();
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("controls")) c.controls = j.at("controls").get<int>();
        if (j.contains("properties")) {
            const json& p = j.at("properties");
            if (p.contains("m")) c.m = p.at("m").get<double>();
            if (p.contains("lambda")) c.lambda = p.at("lambda").get<double>();
            if (p.contains("y0")) c.y0 = p.at("y0").get<double>();
        }
        if (j.contains("penalty")) {
            const json& p = j.at("penalty");
            if (p.is_string()) {
                c.penalty = p.get<std::string>();
            } else {
                c.penalty = p.at("name").get<std::string>();
                if (p.contains("params")) c.penalty_params = p.at("params").get<ParamMap>();
                if (p.contains("path")) c.penalty_path = p.at("path").get<std::string>();
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("config: ") + e.what());
    }
    return c;
}

json to_json(const PropertyRow& row) {
    return {{"name", row.name},
            {"status", row.status},
            {"lhs", number_or_null(row.lhs)},
            {"rhs", number_or_null(row.rhs)},
            {"witness", row.witness}};
}

std::vector<PropertyRow> run_properties(const Driver& driver, const LatticeModel& lattice, const NodeFunction& x,
                                        const NodeFunction& x_alt, double m, double lambda, double tol, double y0) {
    std::vector<PropertyRow> rows;
    auto guarded = [&](const std::string& name, auto&& body) {
        try {
            rows.push_back(body());
        } catch (const Error& e) {
            rows.push_back(failure(name, e.what()));
        }
    };

    std::optional<double> rx, ralt;
    try {
        rx = root_of(driver, lattice, x);
        ralt = root_of(driver, lattice, x_alt);
    } catch (const Error& e) {
        for (const char* name : {"monotonicity", "convexity", "cash_subadditivity", "cash_additivity"})
            rows.push_back(failure(name, e.what()));
    }

    if (rx) {
        guarded("monotonicity", [&] {
            NodeFunction hi = x;
            for (size_t j = 0; j < hi.size(); ++j) hi[j] = std::max(x[j], x_alt[j]);
            return compare("monotonicity", std::max(*rx, *ralt), root_of(driver, lattice, hi), false, tol,
                           {{"root_x", *rx}, {"root_x_alt", *ralt}});
        });
        guarded("convexity", [&] {
            double lhs = root_of(driver, lattice, combine(x, x_alt, lambda, 1.0 - lambda));
            return compare("convexity", lhs, lambda * *rx + (1.0 - lambda) * *ralt, false, tol, {{"lambda", lambda}});
        });
        if (driver.flags.has(Flag::Dec)) {
            guarded("cash_subadditivity", [&] {
                return compare("cash_subadditivity", root_of(driver, lattice, shifted(x, m)), *rx + m, false, tol,
                               {{"m", m}});
            });
        } else {
            rows.push_back(skip("cash_subadditivity", "driver is not DEC"));
        }
        if (driver.flags.has(Flag::YIndependent)) {
            guarded("cash_additivity", [&] {
                return compare("cash_additivity", root_of(driver, lattice, shifted(x, m)), *rx + m, true,
                               kEqualityTol, {{"m", m}});
            });
        } else {
            rows.push_back(skip("cash_additivity", "driver depends on y"));
        }
    }

    std::optional<double> level;
    for (double cand : {y0, 0.0, 1.0, -1.0, 0.5, 2.0, 3.0}) {
        ExtendedReal g0 = driver(0.0, cand, 0.0);
        if (g0.is_finite() && std::abs(g0.value()) <= 1e-14) {
            level = cand;
            break;
        }
    }
    if (level) {
        guarded("normalization", [&] {
            NodeFunction c(lattice.steps(), *level);
            return compare("normalization", root_of(driver, lattice, c), *level, true, kEqualityTol,
                           {{"y", *level}});
        });
    } else {
        rows.push_back(skip("normalization", "no level y with g(y, 0) = 0 found"));
    }
    return rows;
}

ConvergenceTable run_monotone_convergence(const Driver& driver, const LatticeModel& lattice,
                                          const std::vector<NodeFunction>& sequence, const NodeFunction& limit,
                                          double tol) {
    ConvergenceTable out;
    for (const NodeFunction& x : sequence) {
        out.roots.push_back(root_of(driver, lattice, x));
        if (out.roots.size() > 1)
            out.max_decrease = std::max(out.max_decrease, out.roots[out.roots.size() - 2] - out.roots.back());
    }
    out.limit_root = root_of(driver, lattice, limit);
    out.final_error = out.roots.empty() ? 0.0 : std::abs(out.roots.back() - out.limit_root);
    out.passed = out.max_decrease <= tol && out.final_error <= tol;
    return out;
}

FatouCheck fatou_probe(const Driver& driver, const LatticeModel& lattice, const std::vector<NodeFunction>& sequence,
                       double tol) {
    if (sequence.empty()) throw Error(ErrorCode::BadParams, "empty sequence");
    const size_t start = sequence.size() / 2;
    NodeFunction low = sequence[start];
    FatouCheck out;
    out.rhs = std::numeric_limits<double>::infinity();
    for (size_t i = start; i < sequence.size(); ++i) {
        for (size_t j = 0; j < low.size(); ++j) low[j] = std::min(low[j], sequence[i][j]);
        out.rhs = std::min(out.rhs, root_of(driver, lattice, sequence[i]));
    }
    out.lhs = root_of(driver, lattice, low);
    out.passed = out.lhs <= out.rhs + tol;
    return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    const auto started = std::chrono::steady_clock::now();
    config.validate();

    Driver driver;
    NodeFunction x, x_alt;
    LatticeModel lattice(config.horizon, config.steps);
    try {
        driver = catalog_make(config.driver.name, config.driver.params);
        x = make_payoff(lattice, config.payoff.name, config.payoff.params);
        x_alt = make_payoff(lattice, config.payoff_alt.name, config.payoff_alt.params);
    } catch (const Error& e) {
        throw Error(ErrorCode::ConfigError, e.what());
    }

    const std::string& mode = config.mode;
    const bool want_primal = mode == "primal" || mode == "both" || mode == "dual";
    const bool want_dual = mode == "dual" || mode == "both";

    json report = {{"config", config.to_json()},
                   {"primal_root", nullptr},
                   {"dual_root", nullptr},
                   {"gap", nullptr},
                   {"properties", json::array()},
                   {"residuals", {{"cocycle", nullptr}, {"weak_duality", nullptr}, {"doob_meyer", nullptr}}}};
    bool ok = true;
    auto add_row = [&](const PropertyRow& row) {
        if (row.status == "FAIL") ok = false;
        report["properties"].push_back(to_json(row));
    };

    std::optional<SolutionTriple> primal;
    std::optional<DualCertificate> dual_exact;
    try {
        if (want_primal && (mode != "dual" || driver.flags.has(Flag::Pos))) {
            primal = solve_min_supersolution(driver, lattice, x);
            report["primal_root"] = primal->root();
            double worst = verify_supersolution(*primal, driver, lattice, x).worst();
            add_row(compare("supersolution", worst, 0.0, false, config.tolerance, {{"check", "verify_supersolution"}}));
        }
        if (want_dual) {
            const bool restrict = driver.flags.has(Flag::Dec);
            dual_exact = dual_value_dp(driver, lattice, x, restrict, DualMode::ExactDiscrete);
            auto faithful = dual_value_dp(driver, lattice, x, restrict, DualMode::PaperFaithful);
            report["dual_root"] = {{"exact_discrete", dual_exact->root()}, {"paper_faithful", faithful.root()}};

            std::mt19937_64 rng(config.seed);
            DualFunction conj = conjugate_function(driver);
            double cocycle = 0.0, weak = -std::numeric_limits<double>::infinity();
            for (int i = 0; i < config.controls; ++i) {
                Control c = random_control(lattice, conj.domain, rng, restrict);
                NodeFunction r = cocycle_check(driver, lattice, c, 0, lattice.steps() / 2, lattice.steps());
                for (double v : r.values) cocycle = std::max(cocycle, std::abs(v));
                if (primal) {
                    Process lb = dual_lower_bound(driver, lattice, x, c);
                    for (size_t k = 0; k < lb.size(); ++k)
                        for (size_t j = 0; j < lb[k].size(); ++j)
                            if (std::isfinite(lb[k][j])) weak = std::max(weak, lb[k][j] - primal->y[k][j]);
                }
            }
            if (config.controls > 0) {
                report["residuals"]["cocycle"] = cocycle;
                add_row(compare("cocycle", cocycle, 0.0, false, 1e-10, {{"controls", config.controls}}));
                if (primal && std::isfinite(weak)) {
                    report["residuals"]["weak_duality"] = weak;
                    add_row(compare("weak_duality", weak, 0.0, false, config.tolerance,
                                    {{"controls", config.controls}}));
                }
            }
            if (primal) {
                attach_gap(*dual_exact, *primal);
                double gap = primal->root() - dual_exact->root();
                report["gap"] = gap;
                add_row(compare("dual_below_primal", dual_exact->root(), primal->root(), false, config.tolerance,
                                json::object()));
                if (driver.flags.has(Flag::YIndependent))
                    add_row(compare("strong_duality", dual_exact->root(), primal->root(), true, config.tolerance,
                                    json::object()));
            }
        }
        if (mode == "properties") {
            for (const auto& row : run_properties(driver, lattice, x, x_alt, config.m, config.lambda,
                                                  config.tolerance, config.y0))
                add_row(row);
        }
        if (mode == "riskmeasure") {
            ParamMap params = config.penalty_params.empty() && config.penalty == "from_driver"
                                  ? config.driver.params
                                  : config.penalty_params;
            RepresentationSpec spec;
            try {
                spec = representations::by_name(config.penalty, params, config.driver.name, config.penalty_path);
            } catch (const Error& e) {
                throw Error(ErrorCode::ConfigError, e.what());
            }
            VerifyResult v = reconstruct_and_verify(spec, lattice, x);
            report["primal_root"] = v.phi_root;
            report["residuals"]["doob_meyer"] = std::max(v.inequality, std::max(0.0, -v.min_a_increment));
            PropertyRow row{"riskmeasure", v.verdict == Verdict::Fail ? "FAIL" : "PASS", v.phi_root, std::nullopt,
                            {{"verdict", to_string(v.verdict)},
                             {"level", v.worst_level},
                             {"node", v.worst_node},
                             {"inequality", v.inequality},
                             {"equality", v.equality},
                             {"primal_mismatch", number_or_null(v.primal_mismatch)},
                             {"detail", v.detail}}};
            add_row(row);
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigError) throw;
        add_row(failure("execution", e.what()));
    }

    ExperimentResult result;
    if (primal || dual_exact) {
        std::ostringstream csv;
        csv << "level,node,Y,Z,dK,dual_value,gap\n";
        const int n = lattice.steps();
        for (int k = 0; k <= n; ++k)
            for (int j = 0; j <= k; ++j) {
                auto ku = static_cast<size_t>(k), ju = static_cast<size_t>(j);
                std::optional<double> y, z, dk, dv, gap;
                if (primal) {
                    y = primal->y[ku][ju];
                    if (k < n) {
                        z = primal->z[ku][ju];
                        dk = primal->k_increments[ku][ju];
                    }
                }
                if (dual_exact) {
                    dv = dual_exact->value[ku][ju];
                    if (!dual_exact->gap.empty()) gap = dual_exact->gap[ku][ju];
                }
                csv << k << ',' << j << ',' << csv_cell(y) << ',' << csv_cell(z) << ',' << csv_cell(dk) << ','
                    << csv_cell(dv) << ',' << csv_cell(gap) << '\n';
            }
        result.csv = csv.str();
    }
    report["runtime_ms"] =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    result.report = std::move(report);
    result.exit_code = ok ? 0 : 1;
    return result;
}

void write_outputs(const ExperimentConfig& config, const ExperimentResult& result) {
    if (!config.output.empty()) {
        std::ofstream out(config.output);
        if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + config.output);
        out << result.report.dump(2) << '\n';
    }
    if (!config.csv.empty() && !result.csv.empty()) {
        std::ofstream out(config.csv);
        if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + config.csv);
        out << result.csv;
    }
}

std::vector<ExperimentResult> run_batch(const std::vector<ExperimentConfig>& configs) {
    std::vector<std::future<ExperimentResult>> jobs;
    for (const auto& c : configs) jobs.push_back(std::async(std::launch::async, [&c] { return run_experiment(c); }));
    std::vector<ExperimentResult> out;
    for (auto& j : jobs) out.push_back(j.get());
    return out;
}

std::string canonical_report(const json& report) {
    json copy = report;
    copy.erase("runtime_ms");
    return copy.dump(2);
}

}  // namespace bsde
