#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bsde/driver.hpp"

namespace bsde {

using ParamMap = std::map<std::string, double>;

/// Catalog of generators, each with exact flags and a closed-form conjugate:
///   zero                       g = 0
///   linear_growth {a, b, c}    g = a + b|y| + c|z|
///   coherent_norm {c}          g = c|z|
///   inverse_y                  g = z^2/y on y > 0, 0 at the origin, +inf else
///   quadratic_truncated {gamma, n}  truncation at level n of gamma z^2 / 2
///   constrained_z              g = 0 if z = 0, +inf else
Driver catalog_make(const std::string& name, const ParamMap& params = {});

std::vector<std::string> catalog_names();

/// g^n(y, z) = sup over |beta| <= n, |q| <= n of { -beta*y + q*z - g*(beta, q) }.
/// The result carries g* restricted to the box as its closed-form conjugate.
Driver truncate(const Driver& driver, int n);

struct GridSpec {
    std::vector<double> y = {-1.0, -0.5, -0.1, 0.0, 0.1, 0.5, 1.0};
    std::vector<double> z = {-1.0, -0.5, -0.1, 0.0, 0.1, 0.5, 1.0};
    double tolerance = 1e-9;
    double t = 0.0;
};

struct FlagWitness {
    double y = 0.0;
    double z = 0.0;
    double residual = 0.0;
    std::string detail;
};

struct FlagCheck {
    Flag flag;
    bool declared = false;
    bool passed = false;
    std::optional<FlagWitness> witness;  // set iff !passed
};

/// Spot-checks every flag on the grid, declared or not.
std::vector<FlagCheck> validate_flags(const Driver& driver, const GridSpec& grid = {});

}  // namespace bsde
