#pragma once

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace ostop {

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Extended real line R ∪ {±inf} with checked arithmetic.  Values are kept as
// IEEE doubles (infinities allowed, NaN never): indeterminate operations such
// as inf − inf or 0·inf throw instead of producing NaN, so divergence
// decisions made on improper integrals are always explicit.
class ExtReal {
public:
    ExtReal() : v_(0.0) {}
    ExtReal(double v) : v_(v) {
        if (std::isnan(v)) throw NumericError("extended real constructed from NaN");
    }

    static ExtReal pos_inf() { return ExtReal(std::numeric_limits<double>::infinity()); }
    static ExtReal neg_inf() { return ExtReal(-std::numeric_limits<double>::infinity()); }

    bool finite() const { return std::isfinite(v_); }
    bool is_pos_inf() const { return std::isinf(v_) && v_ > 0; }
    bool is_neg_inf() const { return std::isinf(v_) && v_ < 0; }

    // Finite value; throws on ±inf.
    double value() const {
        if (!finite()) throw NumericError("extended real is infinite where a finite value is required");
        return v_;
    }
    // Raw double including ±inf (for formatting and comparisons).
    double raw() const { return v_; }

    ExtReal operator-() const { return ExtReal(-v_); }

    friend ExtReal operator+(ExtReal a, ExtReal b) {
        if (a.is_pos_inf() && b.is_neg_inf()) throw NumericError("indeterminate inf + (-inf)");
        if (a.is_neg_inf() && b.is_pos_inf()) throw NumericError("indeterminate (-inf) + inf");
        return ExtReal(a.v_ + b.v_);
    }
    friend ExtReal operator-(ExtReal a, ExtReal b) { return a + (-b); }
    friend ExtReal operator*(ExtReal a, ExtReal b) {
        if ((a.v_ == 0.0 && !b.finite()) || (b.v_ == 0.0 && !a.finite()))
            throw NumericError("indeterminate 0 * inf");
        return ExtReal(a.v_ * b.v_);
    }

    friend bool operator==(ExtReal a, ExtReal b) { return a.v_ == b.v_; }
    friend bool operator!=(ExtReal a, ExtReal b) { return a.v_ != b.v_; }
    friend bool operator<(ExtReal a, ExtReal b) { return a.v_ < b.v_; }
    friend bool operator<=(ExtReal a, ExtReal b) { return a.v_ <= b.v_; }
    friend bool operator>(ExtReal a, ExtReal b) { return a.v_ > b.v_; }
    friend bool operator>=(ExtReal a, ExtReal b) { return a.v_ >= b.v_; }

    friend std::ostream& operator<<(std::ostream& os, ExtReal x) {
        if (x.is_pos_inf()) return os << "inf";
        if (x.is_neg_inf()) return os << "-inf";
        return os << x.v_;
    }

private:
    double v_;
};

inline ExtReal ext_min(ExtReal a, ExtReal b) { return a < b ? a : b; }
inline ExtReal ext_max(ExtReal a, ExtReal b) { return a > b ? a : b; }

} // namespace ostop
