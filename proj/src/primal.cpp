#include "bsde/primal.hpp"

#include <algorithm>
#include <cmath>

#include "bsde/drivers.hpp"
#include "bsde/errors.hpp"

namespace bsde {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct NodeProblem {
    const Driver& g;
    double t, dt, delta, v_up, v_down;

    double slack_violation(double y, double z) const {
        ExtendedReal gv = g(t, y, z);
        if (gv.is_infinite()) return kInf;
        return std::max(v_up - y - z * delta, v_down - y + z * delta) + gv.value() * dt;
    }

    // min over z of the worst-branch violation at fixed y.
    numerics::Argmax best_z(double y) const {
        Interval section = g.z_section(t, y);
        if (section.empty()) return {0.0, kInf};
        double z0 = std::clamp((v_up - v_down) / (2.0 * delta), section.lo, section.hi);
        double f0 = slack_violation(y, z0);
        if (section.lo == section.hi || !std::isfinite(f0)) return {z0, f0};
        // g >= 0, so any z beating z0 keeps both affine parts below f0.
        Interval bracket{(v_up - y - f0) / delta, (f0 + y - v_down) / delta};
        bracket = bracket.intersect(section);
        if (bracket.empty()) return {z0, f0};
        numerics::SearchOptions opts{17, 1e-13 * (1.0 + bracket.hi - bracket.lo), 300};
        auto r = numerics::grid_golden_max([&](double z) { return -slack_violation(y, z); }, bracket, opts);
        if (-r.value <= f0) return {r.x, -r.value};
        return {z0, f0};
    }

    bool feasible(double y) const { return best_z(y).value <= 0.0; }
};

}  // namespace

SolutionTriple solve_min_supersolution(const Driver& driver, const LatticeModel& lattice,
                                       const NodeFunction& terminal, double tol) {
    if (!driver.flags.has(Flag::Pos))
        throw Error(ErrorCode::NonPositiveDriver, "driver '" + driver.name + "' does not declare POS");
    if (terminal.level != lattice.steps()) throw Error(ErrorCode::BadParams, "terminal condition must live at level N");
    if (!(tol > 0)) throw Error(ErrorCode::BadParams, "tol must be > 0");

    const int n = lattice.steps();
    SolutionTriple sol;
    sol.y.resize(static_cast<size_t>(n) + 1);
    sol.z.resize(static_cast<size_t>(n));
    sol.k_increments.resize(static_cast<size_t>(n));
    sol.y.back() = terminal;

    for (int k = n - 1; k >= 0; --k) {
        const auto ku = static_cast<size_t>(k);
        const NodeFunction& next = sol.y[ku + 1];
        NodeFunction y(k), z(k), dk(k);
        const double t = k * lattice.dt();
        for (size_t j = 0; j <= ku; ++j) {
            NodeProblem p{driver, t, lattice.dt(), lattice.delta(), next.up(j), next.down(j)};
            const double mean = 0.5 * (p.v_up + p.v_down);
            const double top = std::max(p.v_up, p.v_down);

            // Below the mean no y is feasible for a nonnegative driver.
            double lo = mean - 1.0;
            double hi = kInf;
            std::vector<double> candidates;
            if (driver.growth && driver.growth->b * lattice.dt() < 1.0) {
                const auto& gr = *driver.growth;
                candidates.push_back((std::abs(top) + gr.a * lattice.dt()) / (1.0 - gr.b * lattice.dt()) + 1e-12);
            }
            if (ExtendedReal g0 = driver(t, top, 0.0); g0.is_finite()) candidates.push_back(top + g0.value() * lattice.dt());
            for (int d = 0; d <= 6; ++d) candidates.push_back(top + std::ldexp(1.0, d));
            for (double c : candidates)
                if (c > lo && p.feasible(c)) {
                    hi = c;
                    break;
                }
            if (!std::isfinite(hi))
                throw Error(ErrorCode::Infeasible, "no supersolution value at level " + std::to_string(k) +
                                                       ", node " + std::to_string(j));
            while (hi - lo > tol) {
                double mid = 0.5 * (lo + hi);
                if (mid <= lo || mid >= hi) break;
                (p.feasible(mid) ? hi : lo) = mid;
            }
            auto witness = p.best_z(hi);
            y[j] = hi;
            z[j] = witness.x;
            dk[j] = hi - driver(t, hi, witness.x).value() * lattice.dt() - mean;
        }
        sol.y[ku] = std::move(y);
        sol.z[ku] = std::move(z);
        sol.k_increments[ku] = std::move(dk);
    }
    return sol;
}

double SupersolutionReport::worst() const {
    return std::max({terminal.value, one_step.value, k_negative.value, floor.value});
}

SupersolutionReport verify_supersolution(const SolutionTriple& c, const Driver& driver,
                                         const LatticeModel& lattice, const NodeFunction& terminal) {
    const int n = lattice.steps();
    if (c.y.size() != static_cast<size_t>(n) + 1 || c.z.size() != static_cast<size_t>(n) ||
        c.k_increments.size() != static_cast<size_t>(n))
        throw Error(ErrorCode::BadParams, "candidate shape does not match the lattice");

    SupersolutionReport rep;
    for (int j = 0; j <= n; ++j) rep.terminal.update(terminal[static_cast<size_t>(j)] - c.y.back()[static_cast<size_t>(j)], n, j);

    NodeFunction neg_part(n);
    for (size_t j = 0; j < neg_part.size(); ++j) neg_part[j] = std::max(-terminal[j], 0.0);
    Process floor = conditional_expectations(neg_part);

    for (int k = 0; k <= n; ++k) {
        const auto ku = static_cast<size_t>(k);
        for (size_t j = 0; j <= ku; ++j) {
            rep.floor.update(-floor[ku][j] - c.y[ku][j], k, static_cast<int>(j));
            if (k == n) continue;
            double y = c.y[ku][j], z = c.z[ku][j];
            ExtendedReal g = driver(k * lattice.dt(), y, z);
            double v = kInf;
            if (g.is_finite()) {
                double base = y - g.value() * lattice.dt();
                v = std::max(c.y[ku + 1].up(j) - (base + z * lattice.delta()),
                             c.y[ku + 1].down(j) - (base - z * lattice.delta()));
            }
            rep.one_step.update(v, k, static_cast<int>(j));
            rep.k_negative.update(-c.k_increments[ku][j], k, static_cast<int>(j));
        }
    }
    return rep;
}

StabilityRun monotone_stability_run(const Driver& driver, const LatticeModel& lattice,
                                    const NodeFunction& terminal, const std::vector<int>& levels, double tol) {
    for (Flag f : {Flag::Conv, Flag::Lsc, Flag::Pos})
        if (!driver.flags.has(f))
            throw Error(ErrorCode::BadParams, std::string("monotone stability needs ") + to_string(f));
    StabilityRun run;
    run.levels = levels;
    run.untruncated = solve_min_supersolution(driver, lattice, terminal, tol).root();
    for (size_t i = 0; i < levels.size(); ++i) {
        if (i > 0 && levels[i] <= levels[i - 1])
            throw Error(ErrorCode::BadParams, "truncation levels must be increasing");
        double r = solve_min_supersolution(truncate(driver, levels[i]), lattice, terminal, tol).root();
        if (!run.roots.empty()) run.max_decrease = std::max(run.max_decrease, run.roots.back() - r);
        run.max_excess = std::max(run.max_excess, r - run.untruncated);
        run.roots.push_back(r);
    }
    return run;
}

}  // namespace bsde
