#pragma once

#include "bsde/driver.hpp"
#include "bsde/lattice.hpp"
#include "bsde/primal.hpp"

namespace bsde {

/// One-step discretization of the discounted, tilted dual recursion.
///   ExactDiscrete:  V_k = (E_q[V_{k+1}] - f(beta, q) dt) / (1 + beta dt)
///   PaperFaithful:  V_k = exp(-beta dt) E_q[V_{k+1}] - f(beta, q) dt
/// ExactDiscrete is the node-level Lagrangian dual of the primal program.
enum class DualMode { ExactDiscrete, PaperFaithful };

const char* to_string(DualMode mode);

/// Discount over one step of length dt at rate beta.
double step_discount(DualMode mode, double beta, double dt);

struct DualOptions {
    DualMode mode = DualMode::ExactDiscrete;
    bool restrict_beta_nonneg = false;
    bool zero_penalty = false;      // replace f by 0 on its effective domain
    int grid_points = 17;           // per axis, before golden refinement
    double tol = 1e-12;
    double min_step_discount = 1e-9;  // stands in for beta = +inf on unbounded domains
};

/// Inverse of step_discount.
double beta_from_discount(DualMode mode, double d, double dt);

/// Range of u = d - 1 searched by the DP at tilt q, d the one-step discount.
/// Empty when no admissible beta exists at q.
Interval discount_shift_range(const DualFunction& f, double q, double dt, const DualOptions& opts);

struct DualCertificate {
    Process value;    // N+1 levels
    Control policy;   // argmax per node; |q| delta may reach 1
    DualMode mode = DualMode::ExactDiscrete;
    Process gap;      // primal Y - dual value, filled by attach_gap

    double root() const { return value.front()[0]; }
};

/// Dual dynamic programming with the penalty `f` over (beta, q) in its domain,
/// tilts restricted to |q| delta <= 1. Throws UnboundedDual when a one-step
/// value exceeds the conjugate cap.
DualCertificate dual_dp(const DualFunction& f, const LatticeModel& lattice, const NodeFunction& terminal,
                        const DualOptions& opts);

/// dual_dp with the driver's conjugate as the penalty.
DualCertificate dual_value_dp(const Driver& driver, const LatticeModel& lattice, const NodeFunction& terminal,
                              bool restrict_beta_nonneg, DualMode mode);

/// Fills cert.gap with Y - dual value at every node.
void attach_gap(DualCertificate& cert, const SolutionTriple& primal);

/// E_q[D_{t,T} X | F_t] - alpha_{t,T}(beta, q) along a fixed admissible control,
/// for every level. -inf where the control leaves the conjugate domain.
Process dual_lower_bound(const Driver& driver, const LatticeModel& lattice, const NodeFunction& terminal,
                         const Control& control, DualMode mode = DualMode::ExactDiscrete);

struct PenaltyValue {
    double value = 0.0;        // conditional[0] when t_index == 0, else E_{Q^q}[alpha_{t,s}]
    NodeFunction conditional;  // alpha_{t,s} at every level-t node
    Control control;
    int t_index = 0;
    int s_index = 0;
};

/// Discrete alpha_{t,s}(beta, q): discounted, tilted sum of g*(beta_k, q_k) dt.
/// Throws InfinitePenalty when the control leaves the conjugate domain.
PenaltyValue penalty_alpha(const Driver& driver, const LatticeModel& lattice, const Control& control,
                           int t_index, int s_index, DualMode mode = DualMode::ExactDiscrete);
PenaltyValue penalty_alpha(const DualFunction& f, const LatticeModel& lattice, const Control& control,
                           int t_index, int s_index, DualMode mode = DualMode::ExactDiscrete);

/// alpha_{s,u} - alpha_{s,t} - E_q[D_{s,t} alpha_{t,u} | F_s] at level s.
NodeFunction cocycle_check(const Driver& driver, const LatticeModel& lattice, const Control& control,
                           int s_index, int t_index, int u_index, DualMode mode = DualMode::ExactDiscrete);

/// E_q[D_{s,t} Y | F_s] for Y at level t, discounting along the control.
NodeFunction discounted_conditional(const LatticeModel& lattice, const Control& control, const NodeFunction& y,
                                    int s_index, DualMode mode);

/// Minimal penalty of a terminal density M: the infimum of alpha_{0,T}(beta, q)
/// over deterministic beta >= 0 with D^beta_{0,T} = E[M], q recovered from M.
/// Projected pairwise coordinate descent from the constant profile.
double alpha_min(const Driver& driver, const LatticeModel& lattice, const NodeFunction& density);

/// |root of the dual with penalty forced to 0 on its domain - root of the dual|.
double coherent_reduction_check(const Driver& driver, const LatticeModel& lattice, const NodeFunction& terminal);

}  // namespace bsde
