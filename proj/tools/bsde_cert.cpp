// Runs BSDE certification experiments from a JSON config and writes reports.
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "bsde/errors.hpp"
#include "bsde/harness.hpp"

namespace {

std::string indexed_path(const std::string& path, size_t i) {
    if (path.empty()) return path;
    auto dot = path.find_last_of('.');
    auto slash = path.find_last_of('/');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return path + "_" + std::to_string(i);
    return path.substr(0, dot) + "_" + std::to_string(i) + path.substr(dot);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Minimal supersolution and dual certificate runner"};
    std::string config_path;
    std::optional<std::string> mode, out, csv;
    std::optional<int> steps;
    std::optional<std::uint64_t> seed;
    std::optional<double> tolerance;
    app.add_option("--config", config_path, "experiment config (JSON)")->required();
    app.add_option("--mode", mode, "primal | dual | both | properties | riskmeasure");
    app.add_option("--steps", steps, "lattice steps N");
    app.add_option("--out", out, "report path");
    app.add_option("--csv", csv, "per-node CSV path");
    app.add_option("--seed", seed, "seed for sampled controls");
    app.add_option("--tolerance", tolerance, "assertion tolerance");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    std::vector<bsde::ExperimentConfig> configs;
    try {
        std::ifstream in(config_path);
        if (!in) throw bsde::Error(bsde::ErrorCode::ConfigError, "cannot open " + config_path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw bsde::Error(bsde::ErrorCode::ConfigError, e.what());
        }
        std::vector<nlohmann::json> items;
        if (j.is_object() && j.contains("experiments")) {
            for (const auto& e : j.at("experiments")) items.push_back(e);
        } else {
            items.push_back(j);
        }
        for (size_t i = 0; i < items.size(); ++i) {
            auto c = bsde::parse_config(items[i]);
            if (mode) c.mode = *mode;
            if (steps) c.steps = *steps;
            if (seed) c.seed = *seed;
            if (tolerance) c.tolerance = *tolerance;
            if (out) c.output = items.size() > 1 ? indexed_path(*out, i) : *out;
            if (csv) c.csv = items.size() > 1 ? indexed_path(*csv, i) : *csv;
            c.validate();
            configs.push_back(std::move(c));
        }
    } catch (const bsde::Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }

    int status = 0;
    try {
        auto results = bsde::run_batch(configs);
        for (size_t i = 0; i < results.size(); ++i) {
            bsde::write_outputs(configs[i], results[i]);
            if (configs[i].output.empty()) std::cout << results[i].report.dump(2) << '\n';
            status = std::max(status, results[i].exit_code);
        }
    } catch (const bsde::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return status;
}
