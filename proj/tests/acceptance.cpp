// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bsde/conjugate.hpp"
#include "bsde/drivers.hpp"
#include "bsde/dual.hpp"
#include "bsde/errors.hpp"
#include "bsde/harness.hpp"
#include "bsde/lattice.hpp"
#include "bsde/primal.hpp"
#include "bsde/riskmeasure.hpp"

using namespace bsde;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(3) << std::scientific << v;
    return os.str();
}

int failures = 0;

void report(int id, const std::string& title, double budget_s, const std::function<Outcome()>& body) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool in_time = secs <= budget_s;
    bool ok = o.passed && in_time;
    if (!ok) ++failures;
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << id << ". " << title << ": " << o.detail;
    std::cout << " (" << std::fixed << std::setprecision(2) << secs << " s, budget " << budget_s << " s"
              << (in_time ? "" : ", over budget") << ")" << std::defaultfloat << '\n';
}

NodeFunction positive_part_plus_one(const LatticeModel& l) {
    return make_payoff(l, "call", {{"strike", 0.0}, {"offset", 1.0}});
}

// Smallest supersolution on the 1e-3 grid for y and z, by exhaustive scan.
double grid_oracle_root(const Driver& g, const LatticeModel& l, const NodeFunction& x) {
    constexpr double h = 1e-3;
    const double dt = l.dt(), delta = l.delta();
    std::vector<double> next = x.values;
    for (int k = l.steps() - 1; k >= 0; --k) {
        std::vector<double> cur(static_cast<size_t>(k) + 1);
        for (int j = 0; j <= k; ++j) {
            double up = next[static_cast<size_t>(j) + 1], down = next[static_cast<size_t>(j)];
            auto feasible = [&](double y) {
                long zlo = static_cast<long>(std::ceil((up - y) / delta / h - 1e-9));
                long zhi = static_cast<long>(std::floor((y - down) / delta / h + 1e-9));
                for (long i = zlo; i <= zhi; ++i) {
                    double z = i * h;
                    ExtendedReal gv = g(k * dt, y, z);
                    if (gv.is_infinite()) continue;
                    double lhs = y - gv.value() * dt;
                    if (lhs + z * delta >= up - 1e-12 && lhs - z * delta >= down - 1e-12) return true;
                }
                return false;
            };
            long i = static_cast<long>(std::floor(0.5 * (up + down) / h)) - 1;
            while (!feasible(i * h)) {
                ++i;
                if (i * h > 1e4) throw Error(ErrorCode::Infeasible, "oracle found no feasible grid point");
            }
            cur[static_cast<size_t>(j)] = i * h;
        }
        next = std::move(cur);
    }
    return next[0];
}

}  // namespace

int main() {
    report(1, "strong duality, y-independent drivers", 5.0, [] {
        double worst = 0.0;
        for (double c : {0.25, 0.5, 1.0})
            for (int n : {1, 4, 8}) {
                LatticeModel l(1.0, n);
                Driver g = catalog_make("coherent_norm", {{"c", c}});
                for (const NodeFunction& x : {make_payoff(l, "identity"), make_payoff(l, "call", {{"strike", 0.2}})}) {
                    double p = solve_min_supersolution(g, l, x).root();
                    double d = dual_value_dp(g, l, x, true, DualMode::ExactDiscrete).root();
                    worst = std::max(worst, std::abs(p - d));
                }
            }
        return Outcome{worst <= 1e-6, "max |primal - dual| = " + fmt(worst) + " (tol 1e-6)"};
    });

    report(2, "weak duality at every node", 10.0, [] {
        LatticeModel l(1.0, 6);
        std::mt19937_64 rng(20240601);
        double worst = -1e300;
        struct Case {
            Driver g;
            NodeFunction x;
        };
        std::vector<Case> cases = {
            {catalog_make("coherent_norm", {{"c", 0.5}}), make_payoff(l, "identity")},
            {catalog_make("linear_growth", {{"a", 1.0}, {"b", 2.0}, {"c", 3.0}}), make_payoff(l, "identity")},
            {catalog_make("inverse_y"), positive_part_plus_one(l)},
        };
        for (const Case& c : cases) {
            SolutionTriple y = solve_min_supersolution(c.g, l, c.x);
            DualFunction conj = conjugate_function(c.g);
            for (int i = 0; i < 100; ++i) {
                Control u = random_control(l, conj.domain, rng, c.g.flags.has(Flag::Dec));
                Process lb = dual_lower_bound(c.g, l, c.x, u);
                for (size_t k = 0; k + 1 < lb.size(); ++k)
                    for (size_t j = 0; j < lb[k].size(); ++j)
                        if (std::isfinite(lb[k][j])) worst = std::max(worst, lb[k][j] - y.y[k][j]);
            }
        }
        return Outcome{worst <= 1e-8, "max (lower bound - Y) = " + fmt(worst) + " (tol 1e-8)"};
    });

    report(3, "brute-force minimality oracle", 60.0, [] {
        double worst_beat = -1e300, worst_excess = 0.0;
        std::string where;
        std::vector<Driver> drivers = {
            catalog_make("zero"),
            catalog_make("linear_growth", {{"a", 0.2}, {"b", 0.5}, {"c", 1.0}}),
            catalog_make("coherent_norm", {{"c", 0.5}}),
            catalog_make("inverse_y"),
            catalog_make("quadratic_truncated", {{"gamma", 1.0}, {"n", 2.0}}),
            catalog_make("constrained_z"),
        };
        for (const Driver& g : drivers)
            for (int n : {1, 2, 3}) {
                LatticeModel l(1.0, n);
                NodeFunction x = make_payoff(l, "identity");
                double solver = solve_min_supersolution(g, l, x).root();
                double oracle = grid_oracle_root(g, l, x);
                if (solver - oracle > worst_beat) {
                    worst_beat = solver - oracle;
                    where = g.name + ", N=" + std::to_string(n);
                }
                worst_excess = std::max(worst_excess, oracle - solver);
            }
        bool ok = worst_beat <= 1e-3 && worst_excess <= 1e-2;
        return Outcome{ok, "max (solver - grid oracle) = " + fmt(worst_beat) + " at " + where +
                               " (tol 1e-3); max (oracle - solver) = " + fmt(worst_excess)};
    });

    report(4, "monotone stability under truncation", 10.0, [] {
        LatticeModel l(1.0, 4);
        StabilityRun run = monotone_stability_run(catalog_make("inverse_y"), l, positive_part_plus_one(l),
                                                  {1, 2, 4, 8, 16}, 1e-12);
        double err = std::abs(run.roots.back() - run.untruncated);
        bool ok = run.max_decrease <= 1e-10 && err <= 1e-4;
        std::ostringstream os;
        os << "roots";
        for (double r : run.roots) os << ' ' << std::setprecision(10) << r;
        os << ", untruncated " << std::setprecision(10) << run.untruncated << "; max decrease " << fmt(run.max_decrease)
           << ", |root(16) - limit| = " << fmt(err) << " (tol 1e-4)";
        return Outcome{ok, os.str()};
    });

    report(5, "axiom suite", 10.0, [] {
        LatticeModel l(1.0, 4);
        NodeFunction x = positive_part_plus_one(l);
        NodeFunction x_alt = make_payoff(l, "bounded_step", {{"a", 0.0}, {"offset", 0.5}});
        std::vector<Driver> drivers = {
            catalog_make("zero"),
            catalog_make("coherent_norm", {{"c", 0.5}}),
            catalog_make("linear_growth", {{"a", 0.5}, {"b", 0.0}, {"c", 1.0}}),
            catalog_make("linear_growth", {{"a", 0.2}, {"b", 0.5}, {"c", 1.0}}),
            catalog_make("inverse_y"),
            catalog_make("quadratic_truncated", {{"gamma", 1.0}, {"n", 2.0}}),
            catalog_make("constrained_z"),
        };
        int pass = 0, fail = 0, skipped = 0;
        std::string first_fail;
        for (const Driver& g : drivers)
            for (double m : {0.5, 1.0, 2.0})
                for (double lambda : {0.25, 0.5}) {
                    for (const PropertyRow& r : run_properties(g, l, x, x_alt, m, lambda, 1e-8, 1.0)) {
                        if (r.status == "PASS") ++pass;
                        if (r.status == "SKIP") ++skipped;
                        if (r.status == "FAIL") {
                            ++fail;
                            if (first_fail.empty()) first_fail = g.name + "/" + r.name + " " + r.witness.dump();
                        }
                    }
                }
        std::string detail = std::to_string(pass) + " rows pass, " + std::to_string(fail) + " fail, " +
                             std::to_string(skipped) + " skipped";
        if (!first_fail.empty()) detail += "; first failure " + first_fail;
        return Outcome{fail == 0 && pass > 0, detail};
    });

    report(6, "cocycle identity", 5.0, [] {
        LatticeModel l(1.0, 8);
        std::mt19937_64 rng(7);
        double worst = 0.0;
        for (const Driver& g : {catalog_make("linear_growth", {{"a", 1.0}, {"b", 2.0}, {"c", 3.0}}),
                                catalog_make("coherent_norm", {{"c", 0.5}})}) {
            DualFunction conj = conjugate_function(g);
            for (int i = 0; i < 20; ++i) {
                Control u = random_control(l, conj.domain, rng);
                for (int s = 0; s <= 8; ++s)
                    for (int t = s + 1; t <= 8; ++t)
                        for (int v = t + 1; v <= 8; ++v)
                            for (double r : cocycle_check(g, l, u, s, t, v).values)
                                worst = std::max(worst, std::abs(r));
            }
        }
        return Outcome{worst <= 1e-10, "max |residual| = " + fmt(worst) + " over all s < t < u (tol 1e-10)"};
    });

    report(7, "coherent reduction and positive homogeneity", 5.0, [] {
        LatticeModel l(1.0, 6);
        double reduction = 0.0, homogeneity = 0.0;
        for (const Driver& g : {catalog_make("coherent_norm", {{"c", 0.5}}), catalog_make("inverse_y")}) {
            NodeFunction x = positive_part_plus_one(l);
            reduction = std::max(reduction, coherent_reduction_check(g, l, x));
            double base = dual_value_dp(g, l, x, true, DualMode::ExactDiscrete).root();
            for (double lambda : {0.5, 2.0}) {
                NodeFunction scaled = x;
                for (double& v : scaled.values) v *= lambda;
                double r = dual_value_dp(g, l, scaled, true, DualMode::ExactDiscrete).root();
                homogeneity = std::max(homogeneity, std::abs(r - lambda * base));
            }
        }
        return Outcome{reduction <= 1e-8 && homogeneity <= 1e-8,
                       "reduction gap " + fmt(reduction) + ", homogeneity gap " + fmt(homogeneity) + " (tol 1e-8)"};
    });

    report(8, "representation round trip", 15.0, [] {
        LatticeModel l(1.0, 4);
        NodeFunction x = positive_part_plus_one(l);
        struct Case {
            std::string name;
            ParamMap params;
        };
        std::vector<Case> cases = {{"zero", {}},
                                   {"coherent_norm", {{"c", 0.5}}},
                                   {"linear_growth", {{"a", 0.0}, {"b", 0.0}, {"c", 1.0}}},
                                   {"inverse_y", {}},
                                   {"quadratic_truncated", {{"gamma", 1.0}, {"n", 2.0}}},
                                   {"constrained_z", {}}};
        double trip = 0.0, min_da = 0.0, ineq = 0.0, coherent_eq = 0.0;
        bool verdicts = true;
        std::string bad;
        for (const Case& c : cases) {
            Driver g = catalog_make(c.name, c.params);
            RepresentationSpec spec = representations::from_driver(c.name, c.params);
            double phi = phi_from_representation(spec, l, x).root();
            trip = std::max(trip, std::abs(phi - solve_min_supersolution(g, l, x).root()));
            VerifyResult v = reconstruct_and_verify(spec, l, x);
            min_da = std::min(min_da, v.min_a_increment);
            ineq = std::max(ineq, v.inequality);
            if (v.verdict == Verdict::Fail) {
                verdicts = false;
                bad += " " + c.name + ":" + v.detail;
            }
        }
        for (double c : {0.25, 0.5, 1.0}) {
            VerifyResult v = reconstruct_and_verify(representations::coherent(c), l, make_payoff(l, "identity"));
            coherent_eq = std::max(coherent_eq, v.equality);
            if (v.verdict != Verdict::Solution) {
                verdicts = false;
                bad += " coherent(" + fmt(c) + "):" + to_string(v.verdict);
            }
        }
        bool ok = trip <= 1e-6 && min_da >= -1e-10 && ineq <= 1e-8 && coherent_eq <= 1e-8 && verdicts;
        return Outcome{ok, "round trip " + fmt(trip) + " (tol 1e-6), min dA " + fmt(min_da) + ", max (g dt - dA) " +
                               fmt(ineq) + ", coherent equality " + fmt(coherent_eq) + bad};
    });

    report(9, "mode consistency under refinement", 60.0, [] {
        Driver g = catalog_make("coherent_norm", {{"c", 0.5}});
        std::vector<double> gaps;
        for (int n : {10, 40, 160}) {
            LatticeModel l(1.0, n);
            NodeFunction x = make_payoff(l, "call", {{"strike", 0.2}});
            double e = dual_value_dp(g, l, x, true, DualMode::ExactDiscrete).root();
            double p = dual_value_dp(g, l, x, true, DualMode::PaperFaithful).root();
            gaps.push_back(std::abs(e - p));
        }
        bool ok = gaps[1] <= gaps[0] && gaps[2] <= gaps[1] && gaps[2] <= 0.25 * gaps[0];
        return Outcome{ok, "gaps at N = 10, 40, 160: " + fmt(gaps[0]) + ", " + fmt(gaps[1]) + ", " + fmt(gaps[2])};
    });

    report(10, "determinism of reports", 60.0, [] {
        std::vector<ExperimentConfig> configs;
        auto add = [&](const std::string& driver, ParamMap params, const std::string& mode) {
            ExperimentConfig c;
            c.driver = {driver, std::move(params)};
            c.payoff = {"call", {{"strike", 0.0}, {"offset", 1.0}}};
            c.steps = 5;
            c.mode = mode;
            c.seed = 1234;
            configs.push_back(c);
        };
        add("coherent_norm", {{"c", 0.5}}, "both");
        add("linear_growth", {{"a", 1.0}, {"b", 2.0}, {"c", 3.0}}, "dual");
        add("inverse_y", {}, "properties");
        add("coherent_norm", {{"c", 0.5}}, "riskmeasure");
        add("quadratic_truncated", {{"gamma", 1.0}, {"n", 2.0}}, "primal");
        auto first = run_batch(configs);
        auto second = run_batch(configs);
        int differing = 0;
        for (size_t i = 0; i < configs.size(); ++i) {
            if (canonical_report(first[i].report) != canonical_report(second[i].report)) ++differing;
            if (first[i].csv != second[i].csv) ++differing;
        }
        return Outcome{differing == 0, std::to_string(configs.size()) + " experiments run twice, " +
                                           std::to_string(differing) + " differing outputs"};
    });

    std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criteria fail") << '\n';
    return failures == 0 ? 0 : 1;
}
