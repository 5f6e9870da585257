#include "bsde/numerics.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace bsde::numerics {

namespace {

constexpr double kInvPhi = 0.6180339887498949;

// Strictly better, or indistinguishable and closer to the origin.
bool better(double v, double x, const Argmax& best) {
    if (v > best.value) {
        double scale = 1.0 + std::abs(best.value);
        if (std::isfinite(best.value) && v - best.value <= 1e-14 * scale)
            return std::abs(x) < std::abs(best.x);
        return true;
    }
    if (v == best.value || (std::isfinite(v) && best.value - v <= 1e-14 * (1.0 + std::abs(v))))
        return std::abs(x) < std::abs(best.x);
    return false;
}

// Grid values on a line, up to rounding.
bool affine(const std::vector<double>& v) {
    const size_t n = v.size();
    double scale = 1.0;
    for (double x : v) {
        if (!std::isfinite(x)) return false;
        scale = std::max(scale, std::abs(x));
    }
    for (size_t i = 1; i + 1 < n; ++i) {
        double chord = v.front() + (v.back() - v.front()) * static_cast<double>(i) / static_cast<double>(n - 1);
        if (std::abs(v[i] - chord) > 1e-14 * scale) return false;
    }
    return true;
}

}  // namespace

Argmax grid_golden_max(const std::function<double(double)>& f, Interval range,
                       const SearchOptions& opts) {
    if (range.empty()) return {};
    if (!range.bounded()) throw std::invalid_argument("grid_golden_max: unbounded interval");
    if (range.hi - range.lo <= opts.tol) {
        double x = range.lo == range.hi ? range.lo : 0.5 * (range.lo + range.hi);
        return {x, f(x)};
    }

    const int n = opts.grid_points < 2 ? 2 : opts.grid_points;
    const double step = (range.hi - range.lo) / (n - 1);
    Argmax best;
    int best_i = -1;
    std::vector<double> values(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        double x = i == n - 1 ? range.hi : range.lo + i * step;
        double v = f(x);
        values[static_cast<size_t>(i)] = v;
        if (best_i < 0 || better(v, x, best)) {
            best = {x, v};
            best_i = i;
        }
    }
    if (opts.concave && n >= 3 && affine(values)) {
        if (range.lo < 0.0 && range.hi > 0.0 && best_i != 0 && best_i != n - 1) return {0.0, f(0.0)};
        return best;
    }
    // Points of the grid that straddle 0 favour the origin on exact ties.
    if (range.lo < 0.0 && range.hi > 0.0) {
        double v0 = f(0.0);
        if (better(v0, 0.0, best)) best = {0.0, v0};
    }
    if (!std::isfinite(best.value) && best.value < 0) return best;

    double a = best_i > 0 ? range.lo + (best_i - 1) * step : range.lo;
    double b = best_i < n - 1 ? range.lo + (best_i + 1) * step : range.hi;
    const double anchor = best.x;
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < opts.max_iter && b - a > opts.tol; ++it) {
        bool keep_left = fc > fd || (fc == fd && std::abs(c - anchor) <= std::abs(d - anchor));
        if (keep_left) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = f(d);
        }
    }
    double xm = 0.5 * (a + b);
    double fm = f(xm);
    for (auto [x, v] : {std::pair{c, fc}, std::pair{d, fd}, std::pair{xm, fm}}) {
        if (v > best.value) best = {x, v};
    }
    return best;
}

Argmax2 nested_max(const std::function<double(double, double)>& f, Interval outer,
                   const std::function<Interval(double)>& inner,
                   const SearchOptions& outer_opts, const SearchOptions& inner_opts) {
    Argmax2 result;
    auto profile = [&](double x) {
        Interval in = inner(x);
        if (in.empty()) return kNegInf;
        auto r = grid_golden_max([&](double y) { return f(x, y); }, in, inner_opts);
        return r.value;
    };
    auto top = grid_golden_max(profile, outer, outer_opts);
    if (!std::isfinite(top.value) && top.value < 0) return result;
    Interval in = inner(top.x);
    auto r = grid_golden_max([&](double y) { return f(top.x, y); }, in, inner_opts);
    result = {top.x, r.x, r.value};
    return result;
}

}  // namespace bsde::numerics
