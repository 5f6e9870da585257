#pragma once

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace bsde {

/// A value in (-inf, +inf]. Generators and conjugates take +inf off their
/// effective domain; the infinite case is carried as a tag, never as a
/// large sentinel float.
class ExtendedReal {
public:
    constexpr ExtendedReal() = default;
    ExtendedReal(double v) : value_(v) {
        if (std::isnan(v)) throw std::domain_error("ExtendedReal: NaN");
        if (std::isinf(v)) {
            if (v < 0) throw std::domain_error("ExtendedReal: -inf is not representable");
            infinite_ = true;
            value_ = 0.0;
        }
    }

    static ExtendedReal infinity() {
        ExtendedReal r;
        r.infinite_ = true;
        return r;
    }

    bool is_infinite() const { return infinite_; }
    bool is_finite() const { return !infinite_; }

    double value() const {
        if (infinite_) throw std::domain_error("ExtendedReal: value() on +inf");
        return value_;
    }

    /// IEEE view, +inf for the infinite case.
    double as_double() const {
        return infinite_ ? std::numeric_limits<double>::infinity() : value_;
    }

    friend ExtendedReal operator+(ExtendedReal a, ExtendedReal b) {
        if (a.infinite_ || b.infinite_) return infinity();
        return ExtendedReal(a.value_ + b.value_);
    }
    friend bool operator==(ExtendedReal a, ExtendedReal b) {
        if (a.infinite_ || b.infinite_) return a.infinite_ == b.infinite_;
        return a.value_ == b.value_;
    }
    friend bool operator<(ExtendedReal a, ExtendedReal b) {
        if (a.infinite_) return false;
        if (b.infinite_) return true;
        return a.value_ < b.value_;
    }
    friend bool operator<=(ExtendedReal a, ExtendedReal b) { return !(b < a); }
    friend bool operator>(ExtendedReal a, ExtendedReal b) { return b < a; }
    friend bool operator>=(ExtendedReal a, ExtendedReal b) { return !(a < b); }

    friend std::ostream& operator<<(std::ostream& os, ExtendedReal x) {
        if (x.infinite_) return os << "+inf";
        return os << x.value_;
    }

private:
    double value_ = 0.0;
    bool infinite_ = false;
};

}  // namespace bsde
