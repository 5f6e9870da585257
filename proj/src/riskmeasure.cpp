#include "bsde/riskmeasure.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>

#include <json.hpp>

#include "bsde/conjugate.hpp"
#include "bsde/errors.hpp"
#include "bsde/primal.hpp"

namespace bsde {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

DualOptions dp_options(const RepresentationSpec& spec, DualMode mode) {
    DualOptions opts;
    opts.mode = mode;
    opts.restrict_beta_nonneg = spec.beta_nonneg;
    return opts;
}

double one_step(DualMode mode, double d, double tilted_next, double penalty, double dt) {
    return mode == DualMode::ExactDiscrete ? d * (tilted_next - penalty * dt) : d * tilted_next - penalty * dt;
}

// Index i with grid[i] <= x <= grid[i+1], or -1 outside.
int locate(const std::vector<double>& grid, double x) {
    if (grid.size() < 2 || x < grid.front() || x > grid.back()) return -1;
    auto it = std::upper_bound(grid.begin(), grid.end(), x);
    int i = static_cast<int>(it - grid.begin()) - 1;
    return std::min(i, static_cast<int>(grid.size()) - 2);
}

}  // namespace

namespace representations {

RepresentationSpec coherent(double c) {
    Driver d = catalog_make("coherent_norm", {{"c", c}});
    return {"coherent", *d.conjugate, true, d};
}

RepresentationSpec worst_case() {
    DualFunction f;
    f.value = [](double, double beta, double) { return beta >= 0.0 ? ExtendedReal(0.0) : ExtendedReal::infinity(); };
    f.domain.beta = [](double) { return Interval{0.0, kInf}; };
    return {"zero", f, true, std::nullopt};
}

RepresentationSpec origin() {
    Driver d = catalog_make("zero");
    return {"origin", *d.conjugate, true, d};
}

RepresentationSpec from_driver(const std::string& name, const ParamMap& params) {
    Driver d = catalog_make(name, params);
    return {"from_driver:" + name, conjugate_function(d), true, d};
}

RepresentationSpec grid_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot open penalty grid " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("penalty grid: ") + e.what());
    }
    auto beta = std::make_shared<std::vector<double>>();
    auto q = std::make_shared<std::vector<double>>();
    auto values = std::make_shared<std::vector<std::vector<double>>>();
    try {
        *beta = j.at("beta").get<std::vector<double>>();
        *q = j.at("q").get<std::vector<double>>();
        for (const auto& row : j.at("values")) {
            std::vector<double> r;
            for (const auto& v : row) r.push_back(v.is_null() ? kInf : v.get<double>());
            values->push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("penalty grid: ") + e.what());
    }
    if (beta->size() < 2 || q->size() < 2 || values->size() != beta->size() ||
        !std::is_sorted(beta->begin(), beta->end()) || !std::is_sorted(q->begin(), q->end()))
        throw Error(ErrorCode::ConfigError, "penalty grid: need sorted axes of size >= 2 and one row per beta");
    for (const auto& r : *values)
        if (r.size() != q->size()) throw Error(ErrorCode::ConfigError, "penalty grid: row length != q size");

    DualFunction f;
    f.value = [beta, q, values](double, double b, double x) {
        int i = locate(*beta, b), k = locate(*q, x);
        if (i < 0 || k < 0) return ExtendedReal::infinity();
        const auto& v = *values;
        double c00 = v[i][k], c01 = v[i][k + 1], c10 = v[i + 1][k], c11 = v[i + 1][k + 1];
        double s = ((*beta)[i + 1] - (*beta)[i]) > 0 ? (b - (*beta)[i]) / ((*beta)[i + 1] - (*beta)[i]) : 0.0;
        double r = ((*q)[k + 1] - (*q)[k]) > 0 ? (x - (*q)[k]) / ((*q)[k + 1] - (*q)[k]) : 0.0;
        auto term = [](double w, double c) { return w == 0.0 ? 0.0 : w * c; };
        double val = term((1 - s) * (1 - r), c00) + term((1 - s) * r, c01) + term(s * (1 - r), c10) + term(s * r, c11);
        return std::isfinite(val) ? ExtendedReal(val) : ExtendedReal::infinity();
    };
    f.domain.q = {q->front(), q->back()};
    f.domain.beta = [lo = beta->front(), hi = beta->back()](double) { return Interval{lo, hi}; };
    return {"grid:" + path, f, true, std::nullopt};
}

RepresentationSpec by_name(const std::string& name, const ParamMap& params, const std::string& driver,
                           const std::string& path) {
    if (name == "coherent") {
        auto it = params.find("c");
        if (it == params.end()) throw Error(ErrorCode::BadParams, "coherent penalty needs c");
        return coherent(it->second);
    }
    if (name == "zero") return worst_case();
    if (name == "origin") return origin();
    if (name == "from_driver") return from_driver(driver, params);
    if (name == "grid") return grid_file(path);
    throw Error(ErrorCode::ConfigError, "unknown penalty '" + name + "'");
}

}  // namespace representations

DualCertificate phi_from_representation(const RepresentationSpec& spec, const LatticeModel& lattice,
                                        const NodeFunction& terminal, DualMode mode) {
    ExtendedReal at_origin = spec.f(0.0, 0.0, 0.0);
    if (at_origin.is_infinite() || std::abs(at_origin.value()) > 1e-12)
        throw Error(ErrorCode::BadParams, "penalty must vanish at the origin");
    return dual_dp(spec.f, lattice, terminal, dp_options(spec, mode));
}

ProbeResult supermartingale_probe(const RepresentationSpec& spec, const LatticeModel& lattice,
                                  const DualCertificate& cert, const std::vector<Control>& controls) {
    const Process& phi = cert.value;
    const double dt = lattice.dt(), delta = lattice.delta();
    const int n = lattice.steps();

    auto residuals = [&](const Control& c, ProbeResult& out, bool equality) {
        c.validate(lattice, false);
        for (int k = 0; k < n; ++k) {
            const auto ku = static_cast<size_t>(k);
            for (size_t j = 0; j <= ku; ++j) {
                double beta = c.beta[ku][j], q = c.q[ku][j];
                if (spec.beta_nonneg && beta < 0.0) continue;
                ExtendedReal pen = spec.f(k * dt, beta, q);
                if (pen.is_infinite()) continue;
                double r = one_step(cert.mode, step_discount(cert.mode, beta, dt),
                                    tilted_step(phi[ku + 1].up(j), phi[ku + 1].down(j), q, delta), pen.value(), dt) -
                           phi[ku][j];
                if (equality) {
                    out.equality = std::max(out.equality, std::abs(r));
                } else if (r > out.violation) {
                    out.violation = r;
                    out.level = k;
                    out.node = static_cast<int>(j);
                }
            }
        }
    };

    std::vector<std::future<ProbeResult>> jobs;
    for (const Control& c : controls)
        jobs.push_back(std::async(std::launch::async, [&, c] {
            ProbeResult r;
            residuals(c, r, false);
            return r;
        }));
    ProbeResult out;
    residuals(cert.policy, out, false);
    residuals(cert.policy, out, true);
    for (auto& job : jobs) {
        ProbeResult r = job.get();
        if (r.violation > out.violation) {
            out.violation = r.violation;
            out.level = r.level;
            out.node = r.node;
        }
    }
    return out;
}

DoobMeyer doob_meyer(const Process& phi, const LatticeModel& lattice) {
    if (phi.size() != static_cast<size_t>(lattice.steps()) + 1)
        throw Error(ErrorCode::BadParams, "phi must have N+1 levels");
    DoobMeyer out;
    for (size_t k = 0; k + 1 < phi.size(); ++k) {
        MartingaleRep rep = martingale_representation(lattice, phi[k + 1]);
        NodeFunction da(static_cast<int>(k)), dm(static_cast<int>(k));
        for (size_t j = 0; j <= k; ++j) {
            da[j] = phi[k][j] - rep.mean[j];
            dm[j] = rep.z[j] * lattice.delta();
            if (da[j] < -1e-9)
                throw Error(ErrorCode::NotSupermartingale, "negative drift " + std::to_string(da[j]) + " at level " +
                                                               std::to_string(k) + ", node " + std::to_string(j));
        }
        out.a_increments.push_back(std::move(da));
        out.m_increments.push_back(std::move(dm));
        out.z.push_back(std::move(rep.z));
    }
    return out;
}

Driver materialize_driver(const RepresentationSpec& spec, const LatticeModel& lattice, const DualOptions& base) {
    DualOptions opts = base;
    opts.restrict_beta_nonneg = spec.beta_nonneg;
    const double bound = lattice.tilt_bound();

    if (spec.source && spec.source->conjugate) {
        const ConjugateDomain& dom = spec.source->conjugate->domain;
        bool tilts_inside = dom.q.bounded() && dom.q.lo >= -bound && dom.q.hi <= bound;
        bool dec = !spec.beta_nonneg || spec.source->flags.has(Flag::Dec);
        if (tilts_inside && dec) return *spec.source;
    }

    const double dt = lattice.dt();
    const Interval q_range = spec.f.domain.q.intersect({-bound, bound});
    DualFunction f = spec.f;
    numerics::SearchOptions search{opts.grid_points, opts.tol, 300};

    Driver g;
    g.name = "materialized:" + spec.name;
    g.eval = [=](double t, double y, double z) {
        auto objective = [&](double q, double u) {
            double beta = beta_from_discount(opts.mode, 1.0 + u, dt);
            ExtendedReal pen = f(t, beta, q);
            if (pen.is_infinite()) return -kInf;
            return -beta * y + q * z - pen.value();
        };
        auto u_range = [&](double q) { return discount_shift_range(f, q, dt, opts); };
        auto best = numerics::nested_max(objective, q_range, u_range, search, search);
        if (!std::isfinite(best.value) || best.value > kConjugateCap) return ExtendedReal::infinity();
        return ExtendedReal(best.value);
    };
    g.flags = {Flag::Conv, Flag::Lsc};
    ExtendedReal f0 = f(0.0, 0.0, 0.0);
    if (f0.is_finite() && f0.value() <= 0.0) g.flags.insert(Flag::Pos);
    if (spec.beta_nonneg) g.flags.insert(Flag::Dec);
    return g;
}

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Supersolution: return "supersolution";
        case Verdict::Solution: return "solution";
        case Verdict::Fail: return "fail";
    }
    return "fail";
}

VerifyResult reconstruct_and_verify(const RepresentationSpec& spec, const LatticeModel& lattice,
                                    const NodeFunction& terminal, bool cross_check_primal) {
    constexpr double kTol = 1e-8;
    VerifyResult out;
    const DualOptions opts = dp_options(spec, DualMode::ExactDiscrete);
    DualCertificate cert = phi_from_representation(spec, lattice, terminal, opts.mode);
    out.phi_root = cert.root();

    DoobMeyer dm;
    try {
        dm = doob_meyer(cert.value, lattice);
    } catch (const Error& e) {
        out.detail = e.what();
        return out;
    }

    Driver g = materialize_driver(spec, lattice, opts);
    const double dt = lattice.dt();
    double worst = -kInf;
    out.min_a_increment = kInf;
    for (size_t k = 0; k < dm.a_increments.size(); ++k) {
        const double t = static_cast<double>(k) * dt;
        for (size_t j = 0; j <= k; ++j) {
            double phi = cert.value[k][j], z = dm.z[k][j], da = dm.a_increments[k][j];
            out.min_a_increment = std::min(out.min_a_increment, da);
            ExtendedReal gv = g(t, phi, z);
            double gdt = gv.is_finite() ? gv.value() * dt : kInf;
            double ineq = gdt - da;
            if (ineq > worst) {
                worst = ineq;
                out.worst_level = static_cast<int>(k);
                out.worst_node = static_cast<int>(j);
            }
            out.equality = std::max(out.equality, std::abs(da - gdt));
            double beta = cert.policy.beta[k][j], q = cert.policy.q[k][j];
            ExtendedReal pen = spec.f(t, beta, q);
            double attained = pen.is_finite() ? -beta * phi + q * z - pen.value() : -kInf;
            double gap = gv.is_finite() ? gv.value() - attained : kInf;
            out.attainment = std::max(out.attainment, gap);
        }
    }
    out.inequality = std::max(worst, 0.0);
    if (dm.a_increments.empty()) out.min_a_increment = 0.0;

    if (cross_check_primal) {
        try {
            out.primal_mismatch = std::abs(solve_min_supersolution(g, lattice, terminal).root() - out.phi_root);
        } catch (const Error& e) {
            out.primal_mismatch = kInf;
            out.detail = std::string("primal cross-check: ") + e.what();
        }
    }

    if (out.min_a_increment < -1e-10 || worst > kTol || out.primal_mismatch > 1e-6) {
        if (out.detail.empty()) out.detail = "dA below g(phi, Z) dt or primal mismatch";
        return out;
    }
    out.verdict = out.equality <= kTol && out.attainment * dt <= kTol ? Verdict::Solution : Verdict::Supersolution;
    return out;
}

}  // namespace bsde
