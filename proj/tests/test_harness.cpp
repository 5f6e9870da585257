#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bsde/drivers.hpp"
#include "bsde/harness.hpp"
#include "test_util.hpp"

using namespace bsde;
using nlohmann::json;

namespace {

const PropertyRow& row(const std::vector<PropertyRow>& rows, const std::string& name) {
    for (const auto& r : rows)
        if (r.name == name) return r;
    throw std::runtime_error("missing row " + name);
}

}  // namespace

TEST(Properties, CashAdditivityForCoherent) {
    LatticeModel l(1.0, 4);
    auto rows = run_properties(catalog_make("coherent_norm", {{"c", 0.5}}), l, make_payoff(l, "identity"),
                               make_payoff(l, "call", {{"strike", 0.0}}), 1.0, 0.5);
    EXPECT_EQ(row(rows, "cash_additivity").status, "PASS");
    EXPECT_NEAR(*row(rows, "cash_additivity").lhs, *row(rows, "cash_additivity").rhs, 1e-8);
    for (const auto& r : rows) EXPECT_NE(r.status, "FAIL") << r.name;
}

TEST(Properties, CashSubadditivityForInverseY) {
    LatticeModel l(1.0, 4);
    NodeFunction x = make_payoff(l, "call", {{"strike", 0.0}, {"offset", 1.0}});
    auto rows = run_properties(catalog_make("inverse_y"), l, x, NodeFunction(4, 1.5), 1.0, 0.5);
    const PropertyRow& r = row(rows, "cash_subadditivity");
    EXPECT_EQ(r.status, "PASS");
    EXPECT_LE(*r.lhs, *r.rhs + 1e-8);
    EXPECT_EQ(row(rows, "cash_additivity").status, "SKIP");
    EXPECT_EQ(row(rows, "normalization").status, "PASS");
}

TEST(Properties, NormalizationForZeroDriver) {
    LatticeModel l(1.0, 3);
    auto rows = run_properties(catalog_make("zero"), l, NodeFunction(3, 3.0), NodeFunction(3, 3.0), 1.0, 0.5, 1e-8, 3.0);
    const PropertyRow& r = row(rows, "normalization");
    EXPECT_EQ(r.status, "PASS");
    EXPECT_NEAR(*r.lhs, 3.0, 1e-8);
    EXPECT_DOUBLE_EQ(*r.rhs, 3.0);
}

TEST(Properties, SkipsWithoutLevel) {
    LatticeModel l(1.0, 2);
    auto rows = run_properties(catalog_make("linear_growth", {{"a", 1.0}, {"b", 0.5}, {"c", 1.0}}), l,
                               make_payoff(l, "identity"), make_payoff(l, "constant", {{"c", 0.0}}), 1.0, 0.5);
    EXPECT_EQ(row(rows, "normalization").status, "SKIP");
    EXPECT_EQ(row(rows, "cash_subadditivity").status, "SKIP");
    EXPECT_FALSE(row(rows, "normalization").witness.is_null());
}

TEST(Properties, FailingRowCarriesWitness) {
    // A driver whose declared DEC flag is false makes cash-subadditivity fail.
    Driver g = catalog_make("linear_growth", {{"a", 0.0}, {"b", 1.0}, {"c", 0.0}});
    g.flags.insert(Flag::Dec);
    LatticeModel l(1.0, 4);
    auto rows = run_properties(g, l, NodeFunction(4, 1.0), NodeFunction(4, 1.0), 1.0, 0.5);
    const PropertyRow& r = row(rows, "cash_subadditivity");
    EXPECT_EQ(r.status, "FAIL");
    ASSERT_TRUE(r.witness.contains("residual"));
    EXPECT_GT(r.witness["residual"].get<double>(), 1e-8);
    EXPECT_TRUE(r.witness.contains("node"));
}

TEST(MonotoneConvergence, ZeroDriverTruncatedCalls) {
    LatticeModel l(1.0, 4);
    NodeFunction x = make_payoff(l, "call", {{"strike", 0.0}});
    std::vector<NodeFunction> seq;
    for (int n = 1; n <= 4; ++n) {
        NodeFunction xn = x;
        for (double& v : xn.values) v = std::min(static_cast<double>(n) * 0.5, v);
        seq.push_back(xn);
    }
    ConvergenceTable t = run_monotone_convergence(catalog_make("zero"), l, seq, x);
    EXPECT_TRUE(t.passed);
    EXPECT_NEAR(t.roots.back(), t.limit_root, 1e-12);
    for (size_t i = 0; i + 1 < t.roots.size(); ++i) EXPECT_LE(t.roots[i], t.roots[i + 1] + 1e-12);
}

TEST(MonotoneConvergence, CoherentShiftedPayoffs) {
    LatticeModel l(1.0, 4);
    Driver g = catalog_make("coherent_norm", {{"c", 0.5}});
    NodeFunction x = make_payoff(l, "identity");
    std::vector<NodeFunction> seq;
    for (int n : {1, 10, 100, 1000, 10000000}) {
        NodeFunction xn = x;
        for (double& v : xn.values) v -= 1.0 / n;
        seq.push_back(xn);
    }
    ConvergenceTable t = run_monotone_convergence(g, l, seq, x, 1e-6);
    EXPECT_TRUE(t.passed) << t.final_error;
    EXPECT_LE(t.max_decrease, 1e-12);
}

TEST(MonotoneConvergence, FatouOnAlternatingSequence) {
    LatticeModel l(1.0, 3);
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<NodeFunction> seq;
    for (int i = 0; i < 10; ++i) {
        NodeFunction xn(3);
        for (double& v : xn.values) v = u(rng) + (i % 2 == 0 ? 0.5 : -0.5);
        seq.push_back(xn);
    }
    for (const Driver& g : {catalog_make("coherent_norm", {{"c", 0.5}}), catalog_make("zero")}) {
        FatouCheck f = fatou_probe(g, l, seq);
        EXPECT_TRUE(f.passed) << f.lhs << " " << f.rhs;
    }
}

TEST(Config, ParseAndDefaults) {
    json j = json::parse(R"({"driver": {"name": "coherent_norm", "params": {"c": 0.5}},
                             "payoff": "identity", "lattice": {"T": 2.0, "N": 6}, "mode": "dual",
                             "seed": 9, "properties": {"m": 2.0}})");
    ExperimentConfig c = parse_config(j);
    EXPECT_EQ(c.driver.name, "coherent_norm");
    EXPECT_DOUBLE_EQ(c.driver.params.at("c"), 0.5);
    EXPECT_EQ(c.payoff.name, "identity");
    EXPECT_DOUBLE_EQ(c.horizon, 2.0);
    EXPECT_EQ(c.steps, 6);
    EXPECT_EQ(c.mode, "dual");
    EXPECT_EQ(c.seed, 9u);
    EXPECT_DOUBLE_EQ(c.m, 2.0);
    EXPECT_DOUBLE_EQ(c.lambda, 0.5);
    EXPECT_NO_THROW(c.validate());
}

TEST(Config, Invalid) {
    EXPECT_BSDE_ERROR(parse_config(json::parse(R"({"lattice": {"N": "x"}})")), ErrorCode::ConfigError);
    EXPECT_BSDE_ERROR(parse_config(json::parse("[1, 2]")), ErrorCode::ConfigError);
    ExperimentConfig c;
    c.steps = 0;
    EXPECT_BSDE_ERROR(c.validate(), ErrorCode::ConfigError);
    c.steps = 2;
    c.mode = "everything";
    EXPECT_BSDE_ERROR(c.validate(), ErrorCode::ConfigError);
    c.mode = "both";
    c.tolerance = 0.0;
    EXPECT_BSDE_ERROR(c.validate(), ErrorCode::ConfigError);
    c.tolerance = 1e-6;
    c.driver.name = "nope";
    EXPECT_BSDE_ERROR(run_experiment(c), ErrorCode::ConfigError);
}

TEST(Experiment, BothModeCoherent) {
    ExperimentConfig c;
    c.driver = {"coherent_norm", {{"c", 0.5}}};
    c.payoff = {"identity", {}};
    c.steps = 5;
    c.mode = "both";
    ExperimentResult r = run_experiment(c);
    EXPECT_EQ(r.exit_code, 0) << r.report.dump(2);
    const json& rep = r.report;
    for (const char* key : {"config", "primal_root", "dual_root", "gap", "properties", "residuals", "runtime_ms"})
        EXPECT_TRUE(rep.contains(key)) << key;
    EXPECT_EQ(rep.size(), 7u);
    EXPECT_NEAR(rep["primal_root"].get<double>(), rep["dual_root"]["exact_discrete"].get<double>(), 1e-6);
    EXPECT_TRUE(rep["dual_root"].contains("paper_faithful"));
    for (const char* key : {"cocycle", "weak_duality", "doob_meyer"}) EXPECT_TRUE(rep["residuals"].contains(key));
    for (const auto& p : rep["properties"])
        for (const char* key : {"name", "status", "lhs", "rhs", "witness"}) EXPECT_TRUE(p.contains(key));
    EXPECT_EQ(r.csv.substr(0, r.csv.find('\n')), "level,node,Y,Z,dK,dual_value,gap");
    EXPECT_EQ(std::count(r.csv.begin(), r.csv.end(), '\n'), 1 + 21);
}

TEST(Experiment, PrimalConstrainedZ) {
    ExperimentConfig c;
    c.driver = {"constrained_z", {}};
    c.payoff = {"identity", {}};
    c.steps = 3;
    c.mode = "primal";
    ExperimentResult r = run_experiment(c);
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_NEAR(r.report["primal_root"].get<double>(), std::sqrt(3.0), 1e-9);
    EXPECT_TRUE(r.report["dual_root"].is_null());
}

TEST(Experiment, RiskmeasureAndProperties) {
    ExperimentConfig c;
    c.driver = {"inverse_y", {}};
    c.payoff = {"call", {{"strike", 0.0}, {"offset", 1.0}}};
    c.payoff_alt = {"constant", {{"c", 1.5}}};
    c.steps = 3;
    c.mode = "riskmeasure";
    ExperimentResult r = run_experiment(c);
    EXPECT_EQ(r.exit_code, 0) << r.report.dump(2);
    EXPECT_FALSE(r.report["residuals"]["doob_meyer"].is_null());
    c.mode = "properties";
    r = run_experiment(c);
    EXPECT_EQ(r.exit_code, 0) << r.report.dump(2);
}

TEST(Experiment, ExitCodes) {
    ExperimentConfig c;
    c.driver = {"linear_growth", {{"a", 1.0}, {"b", 2.0}, {"c", 3.0}}};
    c.payoff = {"identity", {}};
    c.mode = "primal";
    c.steps = 4;
    ExperimentResult ok = run_experiment(c);
    EXPECT_EQ(ok.exit_code, 0);
    c.steps = 2;  // b dt = 1 leaves no supersolution
    ExperimentResult infeasible = run_experiment(c);
    EXPECT_EQ(infeasible.exit_code, 1);
    EXPECT_EQ(infeasible.report["properties"][0]["status"], "FAIL");
    c.driver = {"zero", {}};
    c.mode = "riskmeasure";
    c.penalty = "grid";
    c.penalty_path = "/nonexistent.json";
    EXPECT_BSDE_ERROR(run_experiment(c), ErrorCode::ConfigError);
}

TEST(Experiment, DeterministicAcrossRunsAndBatch) {
    ExperimentConfig c;
    c.driver = {"linear_growth", {{"a", 1.0}, {"b", 2.0}, {"c", 3.0}}};
    c.payoff = {"bounded_step", {{"a", 0.1}}};
    c.mode = "dual";
    c.steps = 4;
    c.seed = 77;
    std::string a = canonical_report(run_experiment(c).report);
    auto batch = run_batch({c, c, c});
    for (const auto& r : batch) EXPECT_EQ(canonical_report(r.report), a);
}
