#include "bsde/dual.hpp"

#include <algorithm>
#include <cmath>

#include "bsde/conjugate.hpp"
#include "bsde/errors.hpp"

namespace bsde {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kInf = std::numeric_limits<double>::infinity();

double one_step(DualMode mode, double d, double tilted_next, double penalty, double dt) {
    return mode == DualMode::ExactDiscrete ? d * (tilted_next - penalty * dt) : d * tilted_next - penalty * dt;
}

double one_step_penalty(DualMode mode, double d, double tilted_next, double penalty, double dt) {
    return mode == DualMode::ExactDiscrete ? d * (penalty * dt + tilted_next) : penalty * dt + d * tilted_next;
}

void check_window(const LatticeModel& lattice, int from, int to) {
    if (from < 0 || from > to || to > lattice.steps())
        throw Error(ErrorCode::BadParams, "bad time window [" + std::to_string(from) + ", " + std::to_string(to) + "]");
}

}  // namespace

const char* to_string(DualMode mode) {
    return mode == DualMode::ExactDiscrete ? "exact_discrete" : "paper_faithful";
}

double step_discount(DualMode mode, double beta, double dt) {
    return mode == DualMode::ExactDiscrete ? 1.0 / (1.0 + beta * dt) : std::exp(-beta * dt);
}

double beta_from_discount(DualMode mode, double d, double dt) {
    return mode == DualMode::ExactDiscrete ? (1.0 / d - 1.0) / dt : -std::log(d) / dt;
}

Interval discount_shift_range(const DualFunction& f, double q, double dt, const DualOptions& opts) {
    const DualMode mode = opts.mode;
    Interval b = f.domain.beta(q);
    if (opts.restrict_beta_nonneg) b = b.intersect({0.0, kInf});
    if (mode == DualMode::ExactDiscrete) b = b.intersect({-(1.0 - 1e-9) / dt, kInf});
    if (b.empty()) return Interval::none();
    double d_hi = std::isfinite(b.lo) ? step_discount(mode, b.lo, dt) : 1.0 / opts.min_step_discount;
    double d_lo = std::isfinite(b.hi) ? step_discount(mode, b.hi, dt) : opts.min_step_discount;
    d_lo = std::min(d_lo, d_hi);
    if (b.lo == b.hi) d_lo = d_hi;
    // Shifted so that grid ties resolve towards beta = 0.
    return Interval{d_lo - 1.0, d_hi - 1.0};
}

DualCertificate dual_dp(const DualFunction& f, const LatticeModel& lattice, const NodeFunction& terminal,
                        const DualOptions& opts) {
    if (terminal.level != lattice.steps()) throw Error(ErrorCode::BadParams, "terminal condition must live at level N");
    for (double x : terminal.values)
        if (!std::isfinite(x)) throw Error(ErrorCode::BadParams, "terminal condition must be finite");

    const int n = lattice.steps();
    const double dt = lattice.dt(), delta = lattice.delta();
    const DualMode mode = opts.mode;
    const Interval q_range = f.domain.q.intersect({-lattice.tilt_bound(), lattice.tilt_bound()});

    auto u_range = [&](double q) { return discount_shift_range(f, q, dt, opts); };

    DualCertificate cert;
    cert.mode = mode;
    cert.value.resize(static_cast<size_t>(n) + 1);
    cert.value.back() = terminal;
    cert.policy = Control::zero(lattice);
    cert.policy.requires_beta_nonneg = opts.restrict_beta_nonneg;

    numerics::SearchOptions search{opts.grid_points, opts.tol, 300};
    for (int k = n - 1; k >= 0; --k) {
        const auto ku = static_cast<size_t>(k);
        const double t = k * dt;
        const NodeFunction& next = cert.value[ku + 1];
        NodeFunction v(k);
        for (size_t j = 0; j <= ku; ++j) {
            const double up = next.up(j), down = next.down(j);
            auto objective = [&](double q, double u) {
                double d = 1.0 + u;
                double beta = beta_from_discount(mode, d, dt);
                ExtendedReal pen = f(t, beta, q);
                if (pen.is_infinite()) return kNegInf;
                double p = opts.zero_penalty ? 0.0 : pen.value();
                return one_step(mode, d, tilted_step(up, down, q, delta), p, dt);
            };
            auto best = numerics::nested_max(objective, q_range, u_range, search, search);
            if (!std::isfinite(best.value)) {
                if (best.value > 0) throw Error(ErrorCode::UnboundedDual, "infinite one-step value");
                throw Error(ErrorCode::BadParams, "empty dual domain at level " + std::to_string(k));
            }
            if (std::abs(best.value) > 1e12)
                throw Error(ErrorCode::UnboundedDual, "one-step value beyond cap at level " + std::to_string(k));
            v[j] = best.value;
            cert.policy.q[ku][j] = best.outer;
            cert.policy.beta[ku][j] = beta_from_discount(mode, 1.0 + best.inner, dt);
        }
        cert.value[ku] = std::move(v);
    }
    return cert;
}

DualCertificate dual_value_dp(const Driver& driver, const LatticeModel& lattice, const NodeFunction& terminal,
                              bool restrict_beta_nonneg, DualMode mode) {
    if (!driver.flags.has(Flag::Conv) || !driver.flags.has(Flag::Lsc))
        throw Error(ErrorCode::NonConvexDriver, "dual DP needs CONV and LSC");
    DualOptions opts;
    opts.mode = mode;
    opts.restrict_beta_nonneg = restrict_beta_nonneg;
    return dual_dp(conjugate_function(driver), lattice, terminal, opts);
}

void attach_gap(DualCertificate& cert, const SolutionTriple& primal) {
    if (primal.y.size() != cert.value.size()) throw Error(ErrorCode::BadParams, "primal/dual level mismatch");
    cert.gap.clear();
    for (size_t k = 0; k < cert.value.size(); ++k) {
        NodeFunction g(static_cast<int>(k));
        for (size_t j = 0; j <= k; ++j) g[j] = primal.y[k][j] - cert.value[k][j];
        cert.gap.push_back(std::move(g));
    }
}

Process dual_lower_bound(const Driver& driver, const LatticeModel& lattice, const NodeFunction& terminal,
                         const Control& control, DualMode mode) {
    control.validate(lattice, true);
    DualFunction conj = conjugate_function(driver);
    const int n = lattice.steps();
    const double dt = lattice.dt();
    Process out(static_cast<size_t>(n) + 1);
    out.back() = terminal;
    for (int k = n - 1; k >= 0; --k) {
        const auto ku = static_cast<size_t>(k);
        NodeFunction v(k);
        for (size_t j = 0; j <= ku; ++j) {
            double beta = control.beta[ku][j], q = control.q[ku][j];
            ExtendedReal pen = conj(k * dt, beta, q);
            double up = out[ku + 1].up(j), down = out[ku + 1].down(j);
            if (pen.is_infinite() || up == kNegInf || down == kNegInf) {
                v[j] = kNegInf;
                continue;
            }
            v[j] = one_step(mode, step_discount(mode, beta, dt), tilted_step(up, down, q, lattice.delta()),
                            pen.value(), dt);
        }
        out[ku] = std::move(v);
    }
    return out;
}

NodeFunction discounted_conditional(const LatticeModel& lattice, const Control& control, const NodeFunction& y,
                                    int s_index, DualMode mode) {
    check_window(lattice, s_index, y.level);
    NodeFunction g = y;
    for (int k = y.level - 1; k >= s_index; --k) {
        const auto ku = static_cast<size_t>(k);
        NodeFunction prev(k);
        for (size_t j = 0; j <= ku; ++j)
            prev[j] = step_discount(mode, control.beta[ku][j], lattice.dt()) *
                      tilted_step(g.up(j), g.down(j), control.q[ku][j], lattice.delta());
        g = std::move(prev);
    }
    return g;
}

PenaltyValue penalty_alpha(const DualFunction& f, const LatticeModel& lattice, const Control& control, int t_index,
                           int s_index, DualMode mode) {
    check_window(lattice, t_index, s_index);
    control.validate(lattice, false);
    const double dt = lattice.dt();
    NodeFunction p(s_index, 0.0);
    for (int k = s_index - 1; k >= t_index; --k) {
        const auto ku = static_cast<size_t>(k);
        NodeFunction prev(k);
        for (size_t j = 0; j <= ku; ++j) {
            double beta = control.beta[ku][j], q = control.q[ku][j];
            ExtendedReal pen = f(k * dt, beta, q);
            if (pen.is_infinite())
                throw Error(ErrorCode::InfinitePenalty, "control leaves the conjugate domain at level " +
                                                            std::to_string(k) + ", node " + std::to_string(j));
            prev[j] = one_step_penalty(mode, step_discount(mode, beta, dt),
                                       tilted_step(p.up(j), p.down(j), q, lattice.delta()), pen.value(), dt);
        }
        p = std::move(prev);
    }
    PenaltyValue out;
    out.conditional = p;
    out.control = control;
    out.t_index = t_index;
    out.s_index = s_index;
    NodeFunction e = p;
    for (int k = t_index - 1; k >= 0; --k) {
        NodeFunction prev(k);
        for (size_t j = 0; j <= static_cast<size_t>(k); ++j)
            prev[j] = tilted_step(e.up(j), e.down(j), control.q[static_cast<size_t>(k)][j], lattice.delta());
        e = std::move(prev);
    }
    out.value = e[0];
    return out;
}

PenaltyValue penalty_alpha(const Driver& driver, const LatticeModel& lattice, const Control& control, int t_index,
                           int s_index, DualMode mode) {
    return penalty_alpha(conjugate_function(driver), lattice, control, t_index, s_index, mode);
}

NodeFunction cocycle_check(const Driver& driver, const LatticeModel& lattice, const Control& control, int s_index,
                           int t_index, int u_index, DualMode mode) {
    if (!(s_index <= t_index && t_index <= u_index)) throw Error(ErrorCode::BadParams, "cocycle needs s <= t <= u");
    DualFunction conj = conjugate_function(driver);
    auto su = penalty_alpha(conj, lattice, control, s_index, u_index, mode).conditional;
    auto st = penalty_alpha(conj, lattice, control, s_index, t_index, mode).conditional;
    auto tu = penalty_alpha(conj, lattice, control, t_index, u_index, mode).conditional;
    NodeFunction carried = discounted_conditional(lattice, control, tu, s_index, mode);
    NodeFunction r(s_index);
    for (size_t j = 0; j < r.size(); ++j) r[j] = su[j] - st[j] - carried[j];
    return r;
}

double alpha_min(const Driver& driver, const LatticeModel& lattice, const NodeFunction& density) {
    DensityControl dc = density_to_control(lattice, density);
    DualFunction conj = conjugate_function(driver);
    const int n = lattice.steps();
    const double dt = lattice.dt();
    const double budget = std::max(0.0, -std::log(dc.discount_level));  // sum of beta_k dt

    // Node probabilities under the recovered tilt.
    Process prob;
    prob.emplace_back(0, 1.0);
    for (int k = 0; k < n; ++k) {
        NodeFunction nx(k + 1, 0.0);
        for (size_t j = 0; j <= static_cast<size_t>(k); ++j) {
            double p = 0.5 * (1.0 + dc.control.q[static_cast<size_t>(k)][j] * lattice.delta());
            nx[j + 1] += prob.back()[j] * p;
            nx[j] += prob.back()[j] * (1.0 - p);
        }
        prob.push_back(std::move(nx));
    }

    auto objective = [&](const std::vector<double>& beta) {
        double total = 0.0, log_discount = 0.0;
        for (int k = 0; k < n; ++k) {
            const auto ku = static_cast<size_t>(k);
            double e = 0.0;
            for (size_t j = 0; j <= ku; ++j) {
                if (prob[ku][j] == 0.0) continue;
                ExtendedReal g = conj(k * dt, beta[ku], dc.control.q[ku][j]);
                if (g.is_infinite()) return kInf;
                e += prob[ku][j] * g.value();
            }
            total += std::exp(-log_discount) * e * dt;
            log_discount += beta[ku] * dt;
        }
        return total;
    };

    std::vector<double> beta(static_cast<size_t>(n), budget / (n * dt));
    double best = objective(beta);
    numerics::SearchOptions search{9, 1e-13, 200};
    for (int sweep = 0; sweep < 50; ++sweep) {
        bool improved = false;
        for (size_t i = 0; i < beta.size(); ++i)
            for (size_t m = i + 1; m < beta.size(); ++m) {
                // Move s units of rate from m to i, keeping the budget and beta >= 0.
                Interval s_range{-beta[i], beta[m]};
                if (s_range.hi - s_range.lo <= 0) continue;
                auto trial = [&](double s) {
                    auto b = beta;
                    b[i] += s;
                    b[m] -= s;
                    b[i] = std::max(b[i], 0.0);
                    b[m] = std::max(b[m], 0.0);
                    return -objective(b);
                };
                auto r = numerics::grid_golden_max(trial, s_range, search);
                if (-r.value < best - 1e-15 * (1.0 + std::abs(best))) {
                    beta[i] = std::max(beta[i] + r.x, 0.0);
                    beta[m] = std::max(beta[m] - r.x, 0.0);
                    best = objective(beta);
                    improved = true;
                }
            }
        if (!improved) break;
    }
    return best;
}

double coherent_reduction_check(const Driver& driver, const LatticeModel& lattice, const NodeFunction& terminal) {
    if (!driver.flags.has(Flag::PosHom))
        throw Error(ErrorCode::BadParams, "coherent reduction needs a POSHOM driver");
    DualOptions opts;
    opts.restrict_beta_nonneg = driver.flags.has(Flag::Dec);
    DualFunction conj = conjugate_function(driver);
    double full = dual_dp(conj, lattice, terminal, opts).root();
    opts.zero_penalty = true;
    double zeroed = dual_dp(conj, lattice, terminal, opts).root();
    return std::abs(zeroed - full);
}

}  // namespace bsde
