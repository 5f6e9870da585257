#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bsde/driver.hpp"
#include "bsde/drivers.hpp"
#include "bsde/dual.hpp"
#include "bsde/lattice.hpp"

namespace bsde {

/// Robust representation: penalty f(beta, q) with f(0, 0) = 0.
struct RepresentationSpec {
    std::string name;
    DualFunction f;
    bool beta_nonneg = true;
    std::optional<Driver> source;  // set when f is a catalog conjugate
};

namespace representations {
/// Indicator of {beta = 0, |q| <= c}.
RepresentationSpec coherent(double c);
/// f = 0 on {beta >= 0} x R.
RepresentationSpec worst_case();
/// Indicator of the origin.
RepresentationSpec origin();
/// f = g* of a catalog driver.
RepresentationSpec from_driver(const std::string& name, const ParamMap& params = {});
/// Tabulated penalty: {"beta": [...], "q": [...], "values": [[...] per beta]},
/// null entries mean +inf. Bilinear inside the grid, +inf outside.
RepresentationSpec grid_file(const std::string& path);
/// Dispatch on "coherent", "zero", "origin", "from_driver", "grid".
RepresentationSpec by_name(const std::string& name, const ParamMap& params = {}, const std::string& driver = {},
                           const std::string& path = {});
}  // namespace representations

/// phi_k(X) = max over controls of the discounted tilted value minus the
/// accumulated penalty, at every level.
DualCertificate phi_from_representation(const RepresentationSpec& spec, const LatticeModel& lattice,
                                        const NodeFunction& terminal, DualMode mode = DualMode::ExactDiscrete);

struct ProbeResult {
    double violation = 0.0;  // largest positive one-step supermartingale residual
    double equality = 0.0;   // largest |one-step residual| along the argmax control
    int level = -1;
    int node = -1;
};

/// One-step supermartingale test of the penalized, discounted phi along each
/// control; the equality residual is taken along cert.policy.
ProbeResult supermartingale_probe(const RepresentationSpec& spec, const LatticeModel& lattice,
                                  const DualCertificate& cert, const std::vector<Control>& controls);

struct DoobMeyer {
    Process m_increments;  // Z_k delta on the up branch, level k
    Process a_increments;  // phi_k - E[phi_{k+1} | F_k]
    Process z;
};

/// Throws NotSupermartingale if some increment of A is below -1e-9.
DoobMeyer doob_meyer(const Process& phi, const LatticeModel& lattice);

/// g(y, z) = sup over the DP's (beta, q) range of -beta y + q z - f(beta, q).
Driver materialize_driver(const RepresentationSpec& spec, const LatticeModel& lattice,
                          const DualOptions& opts = {});

enum class Verdict { Supersolution, Solution, Fail };
const char* to_string(Verdict v);

struct VerifyResult {
    Verdict verdict = Verdict::Fail;
    double min_a_increment = 0.0;    // smallest dA
    double inequality = 0.0;         // max of g(phi, Z) dt - dA
    double equality = 0.0;           // max |dA - g(phi, Z) dt|
    double attainment = 0.0;         // max of g(phi, Z) - value of g's objective at the argmax
    double primal_mismatch = 0.0;    // |phi_0 - minimal supersolution root of g|
    double phi_root = 0.0;
    int worst_level = -1;
    int worst_node = -1;
    std::string detail;
};

/// Builds phi, decomposes it and tests the supersolution and solution
/// inequalities for the materialized g.
VerifyResult reconstruct_and_verify(const RepresentationSpec& spec, const LatticeModel& lattice,
                                    const NodeFunction& terminal, bool cross_check_primal = true);

}  // namespace bsde
