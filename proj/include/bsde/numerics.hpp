#pragma once

#include <functional>
#include <limits>

namespace bsde {

/// Closed interval [lo, hi]; either end may be infinite. Empty when lo > hi.
struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();

    bool empty() const { return lo > hi; }
    bool contains(double x, double slack = 0.0) const { return x >= lo - slack && x <= hi + slack; }
    bool bounded() const { return lo > -std::numeric_limits<double>::infinity() &&
                                  hi < std::numeric_limits<double>::infinity(); }
    Interval intersect(Interval o) const { return {lo > o.lo ? lo : o.lo, hi < o.hi ? hi : o.hi}; }

    static Interval point(double x) { return {x, x}; }
    static Interval whole() { return {}; }
    static Interval none() { return {1.0, -1.0}; }
};

namespace numerics {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Argmax {
    double x = 0.0;
    double value = kNegInf;
};

struct Argmax2 {
    double outer = 0.0;
    double inner = 0.0;
    double value = kNegInf;
};

struct SearchOptions {
    int grid_points = 17;  // per axis, endpoints included
    double tol = 1e-11;    // bracket width at which golden section stops
    int max_iter = 200;
    bool concave = false;  // f known concave: a collinear grid means f is affine
};

/// Maximizes f over the bounded interval: a uniform grid locates the best
/// cell, then golden section refines inside the neighbouring cells. Exact for
/// concave f up to `tol`; for unimodal f as well. f may return -inf off its
/// domain. Ties on the grid go to the point of smallest |x|.
Argmax grid_golden_max(const std::function<double(double)>& f, Interval range,
                       const SearchOptions& opts);

/// max over x in outer, y in inner(x) of f(x, y), by nesting grid_golden_max.
/// inner(x) may return an empty interval (f treated as -inf there).
Argmax2 nested_max(const std::function<double(double, double)>& f, Interval outer,
                   const std::function<Interval(double)>& inner,
                   const SearchOptions& outer_opts, const SearchOptions& inner_opts);

}  // namespace numerics
}  // namespace bsde
