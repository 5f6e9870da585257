#include "bsde/conjugate.hpp"

#include <algorithm>
#include <cmath>

#include "bsde/errors.hpp"

namespace bsde {

namespace {

using numerics::kNegInf;

double finite_or_neg_inf(ExtendedReal g, double affine) {
    return g.is_infinite() ? kNegInf : affine - g.value();
}

ExtendedReal capped(double v) {
    return v > kConjugateCap ? ExtendedReal::infinity() : ExtendedReal(v);
}

}  // namespace

void ConjugateQuery::validate() const {
    if (!(search_radius > 0.0)) throw Error(ErrorCode::BadParams, "search_radius must be > 0");
    if (!(tolerance > 0.0)) throw Error(ErrorCode::BadParams, "tolerance must be > 0");
    if (grid_points < 3) throw Error(ErrorCode::BadParams, "grid_points must be >= 3");
}

ConjugateValue numerical_conjugate(const Driver& driver, const ConjugateQuery& query, double t) {
    query.validate();
    const double r = query.search_radius;
    const Interval box{-r, r};
    numerics::SearchOptions opts{query.grid_points, query.tolerance, 200};

    auto objective = [&](double y, double z) {
        return finite_or_neg_inf(driver(t, y, z), -query.beta * y + query.q * z);
    };
    auto z_range = [&](double y) { return driver.z_section(t, y).intersect(box); };
    auto best = numerics::nested_max(objective, box, z_range, opts, opts);

    if (!std::isfinite(best.value))
        throw Error(ErrorCode::BadParams, "driver '" + driver.name + "' is +inf on the whole search box");

    ConjugateValue out;
    const double step = 2.0 * r / (query.grid_points - 1);
    bool at_edge = std::abs(best.outer) >= r - step || std::abs(best.inner) >= r - step;
    if (at_edge || best.value > kConjugateCap) {
        out.value = ExtendedReal::infinity();
        out.overflow_warning = at_edge;
        return out;
    }
    out.value = ExtendedReal(best.value);
    out.attained_at = std::pair{best.outer, best.inner};
    return out;
}

ConjugateValue conjugate_eval(const Driver& driver, const ConjugateQuery& query, double t) {
    if (!driver.flags.has(Flag::Conv))
        throw Error(ErrorCode::NonConvexDriver, "driver '" + driver.name + "' does not declare CONV");
    query.validate();
    if (driver.conjugate) {
        ConjugateValue out;
        ExtendedReal v = (*driver.conjugate)(t, query.beta, query.q);
        out.value = v.is_infinite() ? v : capped(v.value());
        out.is_exact = true;
        return out;
    }
    return numerical_conjugate(driver, query, t);
}

double biconjugate_gap(const Driver& driver, const std::vector<std::pair<double, double>>& samples,
                       const ConjugateQuery& query_grid) {
    query_grid.validate();
    const double r = query_grid.search_radius;
    const Interval box{-r, r};
    numerics::SearchOptions outer{21, query_grid.tolerance, 200};

    auto conj = [&](double beta, double q) {
        ConjugateQuery inner = query_grid;
        inner.beta = beta;
        inner.q = q;
        return numerical_conjugate(driver, inner).value;
    };

    double worst = 0.0;
    for (auto [y, z] : samples) {
        auto objective = [&](double beta, double q) {
            return finite_or_neg_inf(conj(beta, q), -beta * y + q * z);
        };
        auto best = numerics::nested_max(objective, box, [&](double) { return box; }, outer, outer);
        ExtendedReal g = driver(0.0, y, z);
        double gap;
        if (g.is_infinite())
            gap = std::isfinite(best.value) ? std::numeric_limits<double>::infinity() : 0.0;
        else
            gap = std::abs(g.value() - best.value);
        worst = std::max(worst, gap);
    }
    return worst;
}

ConjugateDomain detect_domain(const Driver& driver, const ConjugateQuery& query, int scan_points) {
    query.validate();
    const double r = query.search_radius;
    const double step = 2.0 * r / (scan_points - 1);
    double blo = r, bhi = -r, qlo = r, qhi = -r;
    bool any = false;
    for (int i = 0; i < scan_points; ++i) {
        double beta = -r + i * step;
        for (int j = 0; j < scan_points; ++j) {
            double q = -r + j * step;
            ConjugateQuery probe = query;
            probe.beta = beta;
            probe.q = q;
            if (numerical_conjugate(driver, probe).value.is_infinite()) continue;
            any = true;
            blo = std::min(blo, beta);
            bhi = std::max(bhi, beta);
            qlo = std::min(qlo, q);
            qhi = std::max(qhi, q);
        }
    }
    if (!any) return {Interval::none(), [](double) { return Interval::none(); }};
    Interval beta_box{std::max(-r, blo - step), std::min(r, bhi + step)};
    Interval q_box{std::max(-r, qlo - step), std::min(r, qhi + step)};
    return {q_box, [beta_box](double) { return beta_box; }};
}

DualFunction conjugate_function(const Driver& driver, const ConjugateQuery& query) {
    if (driver.conjugate) return *driver.conjugate;
    ConjugateDomain domain = detect_domain(driver, query);
    Driver copy = driver;
    ConjugateQuery q0 = query;
    return {[copy, q0](double t, double beta, double q) {
                ConjugateQuery probe = q0;
                probe.beta = beta;
                probe.q = q;
                return numerical_conjugate(copy, probe, t).value;
            },
            domain};
}

std::pair<double, double> subgradient_select(const Driver& driver, double y, double z,
                                             const ConjugateQuery& query) {
    if (!driver.flags.has(Flag::Conv))
        throw Error(ErrorCode::NonConvexDriver, "driver '" + driver.name + "' does not declare CONV");
    ExtendedReal g = driver(0.0, y, z);
    if (g.is_infinite())
        throw Error(ErrorCode::EmptySubgradient, "g is +inf at the requested point");
    if (driver.subgradient) return driver.subgradient(y, z);

    DualFunction conj = conjugate_function(driver, query);
    const Interval box{-query.search_radius, query.search_radius};
    numerics::SearchOptions opts{33, query.tolerance * 1e-2, 200};
    auto objective = [&](double q, double beta) {
        return finite_or_neg_inf(conj(0.0, beta, q), -beta * y + q * z);
    };
    auto best = numerics::nested_max(
        objective, conj.domain.q.intersect(box),
        [&](double q) { return conj.domain.beta(q).intersect(box); }, opts, opts);
    if (!(best.value >= g.value() - 10.0 * query.tolerance))
        throw Error(ErrorCode::EmptySubgradient, "numerical search did not attain g(y, z)");
    return {best.inner, best.outer};
}

}  // namespace bsde
