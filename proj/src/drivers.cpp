#include "bsde/drivers.hpp"

#include <algorithm>
#include <cmath>

#include "bsde/conjugate.hpp"
#include "bsde/errors.hpp"

namespace bsde {

const char* to_string(Flag f) {
    switch (f) {
        case Flag::Pos: return "POS";
        case Flag::Dec: return "DEC";
        case Flag::Conv: return "CONV";
        case Flag::Lsc: return "LSC";
        case Flag::PosHom: return "POSHOM";
        case Flag::YIndependent: return "Y_INDEPENDENT";
    }
    return "?";
}

std::vector<std::string> FlagSet::names() const {
    std::vector<std::string> out;
    for (Flag f : kAllFlags)
        if (has(f)) out.emplace_back(to_string(f));
    return out;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Membership slack for closed-form indicator domains.
double slack(double x) { return 1e-10 * (1.0 + std::abs(x)); }

double sign(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

double param(const ParamMap& params, const std::string& key) {
    auto it = params.find(key);
    if (it == params.end()) throw Error(ErrorCode::BadParams, "missing parameter '" + key + "'");
    if (!std::isfinite(it->second))
        throw Error(ErrorCode::BadParams, "parameter '" + key + "' must be finite");
    return it->second;
}

double nonneg_param(const ParamMap& params, const std::string& key) {
    double v = param(params, key);
    if (v < 0) throw Error(ErrorCode::BadParams, "parameter '" + key + "' must be >= 0");
    return v;
}

Driver make_zero() {
    Driver d;
    d.name = "zero";
    d.eval = [](double, double, double) { return ExtendedReal(0.0); };
    d.conjugate = DualFunction{
        [](double, double beta, double q) {
            return std::abs(beta) <= slack(0) && std::abs(q) <= slack(0) ? ExtendedReal(0.0)
                                                                         : ExtendedReal::infinity();
        },
        {Interval::point(0.0), [](double) { return Interval::point(0.0); }}};
    d.subgradient = [](double, double) { return std::pair{0.0, 0.0}; };
    d.flags = {Flag::Pos, Flag::Dec, Flag::Conv, Flag::Lsc, Flag::PosHom, Flag::YIndependent};
    d.growth = LinearGrowth{0, 0, 0};
    return d;
}

Driver make_linear_growth(double a, double b, double c) {
    Driver d;
    d.name = "linear_growth";
    d.eval = [=](double, double y, double z) { return ExtendedReal(a + b * std::abs(y) + c * std::abs(z)); };
    d.conjugate = DualFunction{
        [=](double, double beta, double q) {
            return std::abs(beta) <= b + slack(b) && std::abs(q) <= c + slack(c) ? ExtendedReal(-a)
                                                                                 : ExtendedReal::infinity();
        },
        {Interval{-c, c}, [=](double) { return Interval{-b, b}; }}};
    d.subgradient = [=](double y, double z) { return std::pair{-b * sign(y), c * sign(z)}; };
    d.flags = {Flag::Conv, Flag::Lsc};
    if (a >= 0) d.flags.insert(Flag::Pos);
    if (b == 0) {
        d.flags.insert(Flag::Dec);
        d.flags.insert(Flag::YIndependent);
    }
    if (a == 0) d.flags.insert(Flag::PosHom);
    d.growth = LinearGrowth{a, b, c};
    return d;
}

Driver make_coherent_norm(double c) {
    Driver d;
    d.name = "coherent_norm";
    d.eval = [=](double, double, double z) { return ExtendedReal(c * std::abs(z)); };
    d.conjugate = DualFunction{
        [=](double, double beta, double q) {
            return std::abs(beta) <= slack(0) && std::abs(q) <= c + slack(c) ? ExtendedReal(0.0)
                                                                             : ExtendedReal::infinity();
        },
        {Interval{-c, c}, [](double) { return Interval::point(0.0); }}};
    d.subgradient = [=](double, double z) { return std::pair{0.0, c * sign(z)}; };
    d.flags = {Flag::Pos, Flag::Dec, Flag::Conv, Flag::Lsc, Flag::PosHom, Flag::YIndependent};
    d.growth = LinearGrowth{0, 0, c};
    return d;
}

Driver make_inverse_y() {
    Driver d;
    d.name = "inverse_y";
    d.eval = [](double, double y, double z) {
        if (y > 0) return ExtendedReal(z * z / y);
        if (y == 0 && z == 0) return ExtendedReal(0.0);
        return ExtendedReal::infinity();
    };
    // Indicator of K = {beta >= q^2/4}.
    d.conjugate = DualFunction{
        [](double, double beta, double q) {
            double edge = 0.25 * q * q;
            return beta >= edge - slack(edge) ? ExtendedReal(0.0) : ExtendedReal::infinity();
        },
        {Interval::whole(), [](double q) { return Interval{0.25 * q * q, kInf}; }}};
    d.z_domain = [](double, double y) {
        if (y > 0) return Interval::whole();
        if (y == 0) return Interval::point(0.0);
        return Interval::none();
    };
    d.subgradient = [](double y, double z) {
        if (y <= 0) return std::pair{0.0, 0.0};
        return std::pair{z * z / (y * y), 2.0 * z / y};
    };
    d.flags = {Flag::Pos, Flag::Dec, Flag::Conv, Flag::Lsc, Flag::PosHom};
    return d;
}

Driver make_quadratic_truncated(double gamma, double n) {
    Driver d;
    d.name = "quadratic_truncated";
    d.eval = [=](double, double, double z) {
        double az = std::abs(z);
        if (gamma * az <= n) return ExtendedReal(0.5 * gamma * z * z);
        return ExtendedReal(n * az - n * n / (2.0 * gamma));
    };
    d.conjugate = DualFunction{
        [=](double, double beta, double q) {
            if (std::abs(beta) <= slack(0) && std::abs(q) <= n + slack(n))
                return ExtendedReal(q * q / (2.0 * gamma));
            return ExtendedReal::infinity();
        },
        {Interval{-n, n}, [](double) { return Interval::point(0.0); }}};
    d.subgradient = [=](double, double z) { return std::pair{0.0, std::clamp(gamma * z, -n, n)}; };
    d.flags = {Flag::Pos, Flag::Dec, Flag::Conv, Flag::Lsc, Flag::YIndependent};
    d.growth = LinearGrowth{0, 0, n};
    return d;
}

Driver make_constrained_z() {
    Driver d;
    d.name = "constrained_z";
    d.eval = [](double, double, double z) { return z == 0 ? ExtendedReal(0.0) : ExtendedReal::infinity(); };
    d.conjugate = DualFunction{
        [](double, double beta, double) {
            return std::abs(beta) <= slack(0) ? ExtendedReal(0.0) : ExtendedReal::infinity();
        },
        {Interval::whole(), [](double) { return Interval::point(0.0); }}};
    d.z_domain = [](double, double) { return Interval::point(0.0); };
    d.subgradient = [](double, double) { return std::pair{0.0, 0.0}; };
    d.flags = {Flag::Pos, Flag::Dec, Flag::Conv, Flag::Lsc, Flag::PosHom, Flag::YIndependent};
    return d;
}

}  // namespace

std::vector<std::string> catalog_names() {
    return {"zero", "linear_growth", "coherent_norm", "inverse_y", "quadratic_truncated", "constrained_z"};
}

Driver catalog_make(const std::string& name, const ParamMap& params) {
    if (name == "zero") return make_zero();
    if (name == "linear_growth")
        return make_linear_growth(param(params, "a"), nonneg_param(params, "b"), nonneg_param(params, "c"));
    if (name == "coherent_norm") return make_coherent_norm(nonneg_param(params, "c"));
    if (name == "inverse_y") return make_inverse_y();
    if (name == "quadratic_truncated") {
        double gamma = param(params, "gamma");
        double n = param(params, "n");
        if (!(gamma > 0) || !(n > 0))
            throw Error(ErrorCode::BadParams, "quadratic_truncated needs gamma > 0 and n > 0");
        return make_quadratic_truncated(gamma, n);
    }
    if (name == "constrained_z") return make_constrained_z();
    throw Error(ErrorCode::UnknownDriver, name);
}

Driver truncate(const Driver& driver, int n) {
    if (n < 1) throw Error(ErrorCode::BadParams, "truncation level must be >= 1");
    if (!driver.flags.has(Flag::Conv) || !driver.flags.has(Flag::Lsc))
        throw Error(ErrorCode::NonConvexDriver, "truncate needs CONV and LSC");

    const double level = n;
    const Interval box{-level, level};
    DualFunction conj = conjugate_function(driver, ConjugateQuery{0, 0, 100.0, 1e-8, 201});
    DualFunction restricted{
        [conj, level](double t, double beta, double q) {
            if (std::abs(beta) > level || std::abs(q) > level) return ExtendedReal::infinity();
            return conj(t, beta, q);
        },
        {conj.domain.q.intersect(box),
         [dom = conj.domain, box](double q) { return dom.beta(q).intersect(box); }}};

    Driver out;
    out.name = driver.name + "^" + std::to_string(n);
    out.eval = [restricted](double t, double y, double z) {
        numerics::SearchOptions opts{9, 1e-13, 200, true};
        auto best = numerics::nested_max(
            [&](double q, double beta) {
                ExtendedReal c = restricted(t, beta, q);
                return c.is_infinite() ? numerics::kNegInf : -beta * y + q * z - c.value();
            },
            restricted.domain.q, restricted.domain.beta, opts, opts);
        if (!std::isfinite(best.value))
            throw Error(ErrorCode::BadParams, "conjugate domain misses the truncation box");
        return ExtendedReal(best.value);
    };
    out.conjugate = restricted;
    for (Flag f : {Flag::Pos, Flag::Dec, Flag::PosHom, Flag::YIndependent})
        if (driver.flags.has(f)) out.flags.insert(f);
    out.flags.insert(Flag::Conv);
    out.flags.insert(Flag::Lsc);
    double at_origin = out.eval(0.0, 0.0, 0.0).value();
    out.growth = LinearGrowth{std::max(0.0, at_origin), level, level};
    return out;
}

namespace {

struct Probe {
    const Driver& g;
    double t;
    double operator()(double y, double z) const { return g(t, y, z).as_double(); }
};

bool close(double a, double b, double tol) {
    if (std::isinf(a) || std::isinf(b)) return a == b;
    return std::abs(a - b) <= tol * (1.0 + std::abs(a) + std::abs(b));
}

void record(std::optional<FlagWitness>& worst, double y, double z, double residual, std::string detail) {
    if (!worst || residual > worst->residual) worst = FlagWitness{y, z, residual, std::move(detail)};
}

}  // namespace

std::vector<FlagCheck> validate_flags(const Driver& driver, const GridSpec& grid) {
    Probe g{driver, grid.t};
    const double tol = grid.tolerance;
    std::vector<FlagCheck> out;

    auto finish = [&](Flag f, std::optional<FlagWitness> w) {
        out.push_back({f, driver.flags.has(f), !w.has_value(), std::move(w)});
    };

    {  // POS
        std::optional<FlagWitness> w;
        for (double y : grid.y)
            for (double z : grid.z)
                if (double v = g(y, z); v < -tol) record(w, y, z, -v, "g < 0");
        finish(Flag::Pos, w);
    }
    {  // DEC
        std::optional<FlagWitness> w;
        for (double z : grid.z)
            for (double y1 : grid.y)
                for (double y2 : grid.y) {
                    if (y1 <= y2) continue;
                    double hi = g(y1, z), lo = g(y2, z);
                    if (std::isinf(lo)) continue;
                    if (std::isinf(hi)) { record(w, y1, z, kInf, "g(y) = inf > g(y') for y > y'"); continue; }
                    if (hi > lo + tol) record(w, y1, z, hi - lo, "g(y, z) > g(y', z) for y > y'");
                }
        finish(Flag::Dec, w);
    }
    {  // CONV, midpoint
        std::optional<FlagWitness> w;
        std::vector<std::pair<double, double>> pts;
        for (double y : grid.y)
            for (double z : grid.z) pts.emplace_back(y, z);
        for (size_t i = 0; i < pts.size(); ++i)
            for (size_t j = i + 1; j < pts.size(); ++j) {
                double a = g(pts[i].first, pts[i].second), b = g(pts[j].first, pts[j].second);
                if (std::isinf(a) || std::isinf(b)) continue;
                double ym = 0.5 * (pts[i].first + pts[j].first), zm = 0.5 * (pts[i].second + pts[j].second);
                double m = g(ym, zm);
                double excess = std::isinf(m) ? kInf : m - 0.5 * (a + b);
                if (excess > tol * (1.0 + std::abs(a) + std::abs(b))) record(w, ym, zm, excess, "midpoint above chord");
            }
        finish(Flag::Conv, w);
    }
    {  // LSC: no downward jump into the point along the 8 grid directions; a
        // continuous slope shrinks 100x between the two offsets, a jump does not
        std::optional<FlagWitness> w;
        const double e1 = 1e-6, e2 = 1e-8;
        for (double y : grid.y)
            for (double z : grid.z) {
                double v = g(y, z);
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dz = -1; dz <= 1; ++dz) {
                        if (dy == 0 && dz == 0) continue;
                        double n1 = g(y + dy * e1, z + dz * e1), n2 = g(y + dy * e2, z + dz * e2);
                        if (std::isinf(v)) {
                            if (std::isfinite(n2) && n2 <= n1) record(w, y, z, kInf, "g = inf but finite nearby");
                        } else if (v - n2 > 1e-6 && v - n2 > 0.5 * (v - n1)) {
                            record(w, y, z, v - n2, "downward jump");
                        }
                    }
            }
        finish(Flag::Lsc, w);
    }
    {  // POSHOM
        std::optional<FlagWitness> w;
        for (double lambda : {0.5, 2.0})
            for (double y : grid.y)
                for (double z : grid.z) {
                    double lhs = g(lambda * y, lambda * z), rhs = lambda * g(y, z);
                    if (!close(lhs, rhs, tol))
                        record(w, y, z, std::isinf(lhs) || std::isinf(rhs) ? kInf : std::abs(lhs - rhs),
                               "g(lambda p) != lambda g(p), lambda = " + std::to_string(lambda));
                }
        finish(Flag::PosHom, w);
    }
    {  // Y_INDEPENDENT
        std::optional<FlagWitness> w;
        for (double z : grid.z)
            for (double y : grid.y) {
                double a = g(grid.y.front(), z), b = g(y, z);
                if (!close(a, b, tol))
                    record(w, y, z, std::isinf(a) || std::isinf(b) ? kInf : std::abs(a - b), "g depends on y");
            }
        finish(Flag::YIndependent, w);
    }
    return out;
}

}  // namespace bsde
