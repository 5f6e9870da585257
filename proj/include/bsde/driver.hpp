#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bsde/extended_real.hpp"
#include "bsde/numerics.hpp"

namespace bsde {

enum class Flag : unsigned {
    Pos = 1u << 0,
    Dec = 1u << 1,
    Conv = 1u << 2,
    Lsc = 1u << 3,
    PosHom = 1u << 4,
    YIndependent = 1u << 5,
};

inline constexpr Flag kAllFlags[] = {Flag::Pos, Flag::Dec, Flag::Conv,
                                     Flag::Lsc, Flag::PosHom, Flag::YIndependent};

const char* to_string(Flag f);

class FlagSet {
public:
    constexpr FlagSet() = default;
    constexpr FlagSet(std::initializer_list<Flag> flags) {
        for (Flag f : flags) bits_ |= static_cast<unsigned>(f);
    }
    constexpr bool has(Flag f) const { return bits_ & static_cast<unsigned>(f); }
    constexpr void insert(Flag f) { bits_ |= static_cast<unsigned>(f); }
    constexpr void erase(Flag f) { bits_ &= ~static_cast<unsigned>(f); }
    constexpr bool operator==(const FlagSet&) const = default;
    std::vector<std::string> names() const;

private:
    unsigned bits_ = 0;
};

/// Effective domain of a function of (beta, q): q ranges over `q`, and for a
/// given q, beta ranges over `beta(q)`. Outside, the function is +inf.
struct ConjugateDomain {
    Interval q = Interval::whole();
    std::function<Interval(double q)> beta = [](double) { return Interval::whole(); };
};

/// A convex function of the dual variables (beta, q) together with its domain.
/// Drivers carry their conjugate in this form; risk-measure representations
/// carry their penalty in this form.
struct DualFunction {
    std::function<ExtendedReal(double t, double beta, double q)> value;
    ConjugateDomain domain;

    ExtendedReal operator()(double t, double beta, double q) const { return value(t, beta, q); }
};

/// Constants of a bound g(y, z) <= a + b|y| + c|z|.
struct LinearGrowth {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
};

/// Generator g(t, y, z) of the BSDE, d = 1.
struct Driver {
    std::string name;
    std::function<ExtendedReal(double t, double y, double z)> eval;
    std::optional<DualFunction> conjugate;  // closed form, when known
    /// z-section of the effective domain at (t, y); unset means the whole line.
    std::function<Interval(double t, double y)> z_domain;
    /// Exact subgradient (beta, q) at (y, z), when known in closed form.
    std::function<std::pair<double, double>(double y, double z)> subgradient;
    FlagSet flags;
    std::optional<LinearGrowth> growth;

    ExtendedReal operator()(double t, double y, double z) const { return eval(t, y, z); }

    Interval z_section(double t, double y) const {
        return z_domain ? z_domain(t, y) : Interval::whole();
    }
};

}  // namespace bsde
