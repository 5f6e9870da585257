#include "bsde/lattice.hpp"

#include <algorithm>
#include <cmath>

#include "bsde/errors.hpp"

namespace bsde {

LatticeModel::LatticeModel(double horizon, int steps) : horizon_(horizon), steps_(steps) {
    if (!(horizon > 0) || !std::isfinite(horizon))
        throw Error(ErrorCode::BadParams, "horizon must be a positive real");
    if (steps < 1) throw Error(ErrorCode::BadParams, "steps must be >= 1");
    dt_ = horizon / steps;
    delta_ = std::sqrt(dt_);
}

NodeFunction::NodeFunction(int k, std::vector<double> v) : level(k), values(std::move(v)) {
    if (values.size() != static_cast<size_t>(k) + 1)
        throw Error(ErrorCode::BadParams, "node function at level " + std::to_string(k) + " needs " +
                                              std::to_string(k + 1) + " values");
}

Control Control::zero(const LatticeModel& lattice) { return constant(lattice, 0.0, 0.0); }

Control Control::constant(const LatticeModel& lattice, double beta, double q) {
    Control c;
    for (int k = 0; k < lattice.steps(); ++k) {
        c.beta.emplace_back(k, beta);
        c.q.emplace_back(k, q);
    }
    return c;
}

void Control::validate(const LatticeModel& lattice, bool strict) const {
    const auto n = static_cast<size_t>(lattice.steps());
    if (beta.size() != n || q.size() != n) throw Error(ErrorCode::BadParams, "control has wrong number of levels");
    for (size_t k = 0; k < n; ++k) {
        if (beta[k].size() != k + 1 || q[k].size() != k + 1)
            throw Error(ErrorCode::BadParams, "control level " + std::to_string(k) + " has wrong shape");
        for (size_t j = 0; j <= k; ++j) {
            double a = std::abs(q[k][j]) * lattice.delta();
            if (strict ? a >= 1.0 : a > 1.0 + 1e-12)
                throw Error(ErrorCode::TiltOutOfRange,
                            "|q| delta = " + std::to_string(a) + " at level " + std::to_string(k));
            if (requires_beta_nonneg && beta[k][j] < 0)
                throw Error(ErrorCode::BadParams, "negative beta in a control restricted to beta >= 0");
            if (!std::isfinite(beta[k][j])) throw Error(ErrorCode::BadParams, "non-finite beta");
        }
    }
}

NodeFunction tilted_expectation(const LatticeModel& lattice, const NodeFunction& f, const NodeFunction& q) {
    if (f.level != q.level + 1) throw Error(ErrorCode::BadParams, "tilted_expectation: level mismatch");
    NodeFunction out(q.level);
    for (size_t j = 0; j < out.size(); ++j) {
        if (std::abs(q[j]) * lattice.delta() >= 1.0)
            throw Error(ErrorCode::TiltOutOfRange, "|q| delta >= 1 at node " + std::to_string(j));
        out[j] = tilted_step(f.up(j), f.down(j), q[j], lattice.delta());
    }
    return out;
}

NodeFunction expectation(const NodeFunction& f) {
    if (f.level < 1) throw Error(ErrorCode::BadParams, "expectation of a level-0 function");
    NodeFunction out(f.level - 1);
    for (size_t j = 0; j < out.size(); ++j) out[j] = 0.5 * (f.up(j) + f.down(j));
    return out;
}

MartingaleRep martingale_representation(const LatticeModel& lattice, const NodeFunction& f) {
    MartingaleRep rep{expectation(f), NodeFunction(f.level - 1)};
    for (size_t j = 0; j < rep.z.size(); ++j) rep.z[j] = (f.up(j) - f.down(j)) / (2.0 * lattice.delta());
    return rep;
}

double discount_factor(std::span<const double> beta_path, int from, int to, double dt) {
    if (from > to || from < 0 || static_cast<size_t>(to) > beta_path.size())
        throw Error(ErrorCode::BadParams, "discount_factor: bad index range");
    double s = 0.0;
    for (int i = from; i < to; ++i) s += beta_path[static_cast<size_t>(i)];
    return std::exp(-s * dt);
}

Process conditional_expectations(const NodeFunction& terminal) {
    Process out(static_cast<size_t>(terminal.level) + 1);
    out.back() = terminal;
    for (int k = terminal.level - 1; k >= 0; --k) out[static_cast<size_t>(k)] = expectation(out[static_cast<size_t>(k) + 1]);
    return out;
}

DensityControl density_to_control(const LatticeModel& lattice, const NodeFunction& density) {
    if (density.level != lattice.steps()) throw Error(ErrorCode::BadParams, "density must live at level N");
    for (double m : density.values)
        if (!(m > 0)) throw Error(ErrorCode::NotADensity, "density has a nonpositive node");
    Process m = conditional_expectations(density);
    double mean = m[0][0];
    if (mean > 1.0 + 1e-12) throw Error(ErrorCode::NotADensity, "E[M] > 1");

    DensityControl out{mean, Control::zero(lattice)};
    for (int k = 0; k < lattice.steps(); ++k)
        for (size_t j = 0; j <= static_cast<size_t>(k); ++j)
            out.control.q[static_cast<size_t>(k)][j] =
                (m[static_cast<size_t>(k) + 1][j + 1] / m[static_cast<size_t>(k)][j] - 1.0) / lattice.delta();
    return out;
}

NodeFunction density_from_control(const LatticeModel& lattice, double discount_level, const Process& q) {
    // Node probabilities under the tilt and under P; their ratio is the density.
    std::vector<double> tilted{1.0}, plain{1.0};
    for (int k = 0; k < lattice.steps(); ++k) {
        std::vector<double> nt(static_cast<size_t>(k) + 2, 0.0), np(static_cast<size_t>(k) + 2, 0.0);
        for (size_t j = 0; j <= static_cast<size_t>(k); ++j) {
            double p = 0.5 * (1.0 + q[static_cast<size_t>(k)][j] * lattice.delta());
            nt[j + 1] += tilted[j] * p;
            nt[j] += tilted[j] * (1.0 - p);
            np[j + 1] += plain[j] * 0.5;
            np[j] += plain[j] * 0.5;
        }
        tilted.swap(nt);
        plain.swap(np);
    }
    NodeFunction out(lattice.steps());
    for (size_t j = 0; j < out.size(); ++j) out[j] = discount_level * tilted[j] / plain[j];
    return out;
}

namespace {

double opt_param(const ParamMap& p, const std::string& key, double fallback) {
    auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

double req_param(const ParamMap& p, const std::string& key) {
    auto it = p.find(key);
    if (it == p.end()) throw Error(ErrorCode::BadParams, "payoff parameter '" + key + "' missing");
    return it->second;
}

}  // namespace

NodeFunction make_payoff(const LatticeModel& lattice, const std::string& name, const ParamMap& params) {
    const int n = lattice.steps();
    std::function<double(double)> base;
    if (name == "identity") {
        base = [](double w) { return w; };
    } else if (name == "call") {
        double strike = req_param(params, "strike");
        base = [strike](double w) { return std::max(w - strike, 0.0); };
    } else if (name == "bounded_step") {
        double a = req_param(params, "a");
        base = [a](double w) { return w >= a ? 1.0 : 0.0; };
    } else if (name == "constant") {
        double c = req_param(params, "c");
        base = [c](double) { return c; };
    } else if (name == "negative_part_test") {
        base = [](double w) { return -std::abs(w); };
    } else {
        throw Error(ErrorCode::BadParams, "unknown payoff '" + name + "'");
    }
    const double scale = opt_param(params, "scale", 1.0);
    const double offset = opt_param(params, "offset", 0.0);
    NodeFunction x(n);
    for (int j = 0; j <= n; ++j) x[static_cast<size_t>(j)] = scale * base(lattice.w(n, j)) + offset;
    return x;
}

Control random_control(const LatticeModel& lattice, const ConjugateDomain& domain, std::mt19937_64& rng,
                       bool beta_nonneg) {
    const double qmax = 0.9 * lattice.tilt_bound();
    Interval qrange = domain.q.intersect({-qmax, qmax});
    if (qrange.empty()) throw Error(ErrorCode::BadParams, "conjugate domain has no admissible tilt");
    auto draw = [&rng](Interval r) {
        if (r.lo == r.hi) return r.lo;
        return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
    };

    Control c = Control::zero(lattice);
    c.requires_beta_nonneg = beta_nonneg;
    for (int k = 0; k < lattice.steps(); ++k)
        for (size_t j = 0; j <= static_cast<size_t>(k); ++j) {
            for (int attempt = 0;; ++attempt) {
                double q = draw(qrange);
                Interval b = domain.beta(q);
                if (beta_nonneg) b = b.intersect({0.0, b.hi});
                if (!std::isfinite(b.hi)) b.hi = std::max(b.lo, 0.0) + 2.0;
                if (!std::isfinite(b.lo)) b.lo = b.hi - 2.0;
                if (b.empty()) {
                    if (attempt > 100) throw Error(ErrorCode::BadParams, "could not sample a control");
                    continue;
                }
                c.q[static_cast<size_t>(k)][j] = q;
                c.beta[static_cast<size_t>(k)][j] = draw(b);
                break;
            }
        }
    return c;
}

}  // namespace bsde
