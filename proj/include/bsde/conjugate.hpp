#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "bsde/driver.hpp"

namespace bsde {

/// Point (beta, q) at which to evaluate g*, and the numerical search settings
/// used when no closed form is available.
struct ConjugateQuery {
    double beta = 0.0;
    double q = 0.0;
    double search_radius = 100.0;  // box [-R, R]^2 in (y, z)
    double tolerance = 1e-8;
    int grid_points = 2001;        // coarse grid per axis, step 2R/(grid_points-1)

    void validate() const;
};

struct ConjugateValue {
    ExtendedReal value;
    std::optional<std::pair<double, double>> attained_at;  // (y, z)
    bool is_exact = false;
    bool overflow_warning = false;  // objective still growing at the box edge
};

/// Values above this are reported as +inf.
inline constexpr double kConjugateCap = 1e12;

/// g*(beta, q) = sup_{y,z} { -beta*y + q*z - g(y, z) }.
/// Requires Flag::Conv; uses the closed form when the driver carries one.
ConjugateValue conjugate_eval(const Driver& driver, const ConjugateQuery& query, double t = 0.0);

/// Same transform by box search, skipping the flag check and closed forms.
/// Usable on non-convex probes.
ConjugateValue numerical_conjugate(const Driver& driver, const ConjugateQuery& query,
                                   double t = 0.0);

/// max over samples of |g - g**|, g** from two nested numerical conjugations.
/// `query_grid` configures the inner transform; the outer search runs over
/// the same radius.
double biconjugate_gap(const Driver& driver, const std::vector<std::pair<double, double>>& samples,
                       const ConjugateQuery& query_grid);

/// A maximizer (beta, q) of -beta*y + q*z - g*(beta, q), i.e. an element of
/// the subdifferential of g at (y, z).
std::pair<double, double> subgradient_select(const Driver& driver, double y, double z,
                                             const ConjugateQuery& query = {});

/// The conjugate as a DualFunction: the closed form when present, otherwise
/// a numerical transform (coarse grid) over a detected bounding box.
DualFunction conjugate_function(const Driver& driver, const ConjugateQuery& query = {});

/// Bounding box of the numerically detected effective domain of g*.
ConjugateDomain detect_domain(const Driver& driver, const ConjugateQuery& query, int scan_points = 21);

}  // namespace bsde
