#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bsde/driver.hpp"
#include "bsde/drivers.hpp"

namespace bsde {

/// Recombining binomial approximation of a one-dimensional Brownian motion on
/// [0, T] with N steps. Node j of level k sits at W = (2j - k) * delta.
class LatticeModel {
public:
    LatticeModel(double horizon, int steps);

    double horizon() const { return horizon_; }
    int steps() const { return steps_; }
    double dt() const { return dt_; }
    double delta() const { return delta_; }
    int dimension() const { return 1; }

    double w(int level, int node) const { return (2.0 * node - level) * delta_; }
    /// Largest admissible |q|; tilts must satisfy |q| * delta < 1.
    double tilt_bound() const { return 1.0 / delta_; }

private:
    double horizon_;
    int steps_;
    double dt_;
    double delta_;
};

/// A random variable measurable w.r.t. the lattice filtration at `level`,
/// one value per node (values.size() == level + 1).
struct NodeFunction {
    int level = 0;
    std::vector<double> values;

    NodeFunction() = default;
    NodeFunction(int k, double fill = 0.0) : level(k), values(static_cast<size_t>(k) + 1, fill) {}
    NodeFunction(int k, std::vector<double> v);

    size_t size() const { return values.size(); }
    double operator[](size_t j) const { return values[j]; }
    double& operator[](size_t j) { return values[j]; }
    double up(size_t j) const { return values[j + 1]; }
    double down(size_t j) const { return values[j]; }
};

/// Adapted process: one NodeFunction per level, levels 0..size()-1.
using Process = std::vector<NodeFunction>;

/// Adapted dual control (beta, q); entry k is chosen at level k and applies on
/// [k dt, (k+1) dt). Both vectors have N entries.
struct Control {
    Process beta;
    Process q;
    bool requires_beta_nonneg = false;

    /// Zero-filled control for the lattice.
    static Control zero(const LatticeModel& lattice);
    static Control constant(const LatticeModel& lattice, double beta, double q);

    /// Throws TiltOutOfRange / BadParams when the invariants fail. With
    /// `strict`, tilts must satisfy |q| delta < 1; otherwise <= 1.
    void validate(const LatticeModel& lattice, bool strict = true) const;
};

/// p_up = (1 + q delta) / 2; result = p_up f_up + (1 - p_up) f_down.
NodeFunction tilted_expectation(const LatticeModel& lattice, const NodeFunction& f, const NodeFunction& q);
NodeFunction expectation(const NodeFunction& f);

/// Tilted one-step expectation at one node with |q| delta <= 1 allowed.
inline double tilted_step(double f_up, double f_down, double q, double delta) {
    double p = 0.5 * (1.0 + q * delta);
    return p * f_up + (1.0 - p) * f_down;
}

struct MartingaleRep {
    NodeFunction mean;
    NodeFunction z;
};

/// f = mean + Z * dW at both branches, dW = +-delta.
MartingaleRep martingale_representation(const LatticeModel& lattice, const NodeFunction& f);

/// exp(-sum_{i=k}^{m-1} beta_i dt) for a deterministic rate path.
double discount_factor(std::span<const double> beta_path, int from, int to, double dt);

/// E[M | F_k] for every level.
Process conditional_expectations(const NodeFunction& terminal);

struct DensityControl {
    double discount_level = 1.0;  // E[M]
    Control control;              // beta zero, q reproducing M / E[M]
};

/// Splits a terminal density M > 0 with E[M] <= 1 into E[M] and the tilt q
/// whose two-point products reproduce M / E[M].
DensityControl density_to_control(const LatticeModel& lattice, const NodeFunction& density);

/// Terminal density E[M] * prod_k (1 +- q_k delta) of a tilt process.
NodeFunction density_from_control(const LatticeModel& lattice, double discount_level, const Process& q);

/// Terminal payoff builders: identity (W_T), call {strike}, bounded_step {a},
/// constant {c}, negative_part_test (-|W_T|). Every form accepts optional
/// {scale, offset}: X = scale * base + offset.
NodeFunction make_payoff(const LatticeModel& lattice, const std::string& name, const ParamMap& params = {});

/// Seeded admissible control drawn from a conjugate domain. Tilts stay within
/// 0.9 of the lattice bound; beta is capped at lo + 2 on unbounded domains.
Control random_control(const LatticeModel& lattice, const ConjugateDomain& domain, std::mt19937_64& rng,
                       bool beta_nonneg = false);

}  // namespace bsde
