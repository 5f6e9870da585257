#pragma once

#include <vector>

#include "bsde/driver.hpp"
#include "bsde/lattice.hpp"

namespace bsde {

/// Discrete supersolution. y has N+1 levels; z and k_increments have N
/// (entry k applies on [k dt, (k+1) dt)). k_increments holds the mean
/// one-step slack, so that Y_k = E[Y_{k+1}] + g(Y_k, Z_k) dt + dK_k.
struct SolutionTriple {
    Process y;
    Process z;
    Process k_increments;

    double root() const { return y.front()[0]; }
};

/// Minimal supersolution by backward induction. At each node the smallest y
/// admitting some z with y - g(y, z) dt + z dW >= Y_next on both branches is
/// found by bisection on y around a golden-section search over z.
/// Throws Infeasible when no finite y works at some node, NonPositiveDriver
/// when the driver does not declare POS.
SolutionTriple solve_min_supersolution(const Driver& driver, const LatticeModel& lattice,
                                       const NodeFunction& terminal, double tol = 1e-9);

struct Violation {
    double value = -std::numeric_limits<double>::infinity();  // worst signed violation, <= 0 is fine
    int level = -1;
    int node = -1;

    void update(double v, int k, int j) {
        if (v > value) *this = {v, k, j};
    }
};

struct SupersolutionReport {
    Violation terminal;   // X - Y_N
    Violation one_step;   // Y_next - (Y - g dt + Z dW), worst branch
    Violation k_negative; // -dK
    Violation floor;      // -E[X^- | F_k] - Y_k

    double worst() const;
};

SupersolutionReport verify_supersolution(const SolutionTriple& candidate, const Driver& driver,
                                         const LatticeModel& lattice, const NodeFunction& terminal);

struct StabilityRun {
    std::vector<int> levels;
    std::vector<double> roots;
    double untruncated = 0.0;
    double max_decrease = 0.0;  // largest drop between consecutive roots
    double max_excess = 0.0;    // largest root above the untruncated value
};

/// Roots of the minimal supersolutions for the truncated drivers g^n, n in levels.
StabilityRun monotone_stability_run(const Driver& driver, const LatticeModel& lattice,
                                    const NodeFunction& terminal, const std::vector<int>& levels,
                                    double tol = 1e-9);

}  // namespace bsde
