#pragma once

#include "ostop/extreal.hpp"
#include "ostop/forms.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ostop {

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CoeffError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// An operation was invoked on a problem outside its stated hypotheses.
struct PreconditionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Open interval (lo, hi), endpoints possibly infinite.
struct Interval {
    ExtReal lo = ExtReal::neg_inf();
    ExtReal hi = ExtReal::pos_inf();

    bool contains(double x) const { return ExtReal(x) > lo && ExtReal(x) < hi; }
    static Interval whole_line() { return {}; }
};

struct Segment {
    ExtReal lo, hi; // half-open [lo, hi) except the leftmost, which is open at -inf
    Form form;
};

// Piecewise symbolic function on an open interval: a finite tiling of segments,
// right-continuous at breakpoints.  All calculus on it is exact (segment forms
// are closed under antidifferentiation), including improper integrals toward
// the domain endpoints.
class PiecewiseFunction {
public:
    PiecewiseFunction() = default;
    PiecewiseFunction(Interval domain, std::vector<Segment> segs);

    static PiecewiseFunction constant(Interval domain, double v);

    const Interval& domain() const { return domain_; }
    const std::vector<Segment>& segments() const { return segs_; }
    // Internal finite breakpoints, ascending.
    const std::vector<double>& breakpoints() const { return bps_; }

    double operator()(double x) const;
    size_t locate(double x) const; // segment index owning x (right-continuous)

    // Exact integral over [a, b] ⊂ closure(domain), a <= b finite.
    double integrate(double a, double b) const;
    // Exact improper integral from `from` to the right/left domain endpoint.
    ExtReal improper_to_hi(double from) const;
    ExtReal improper_to_lo(double upto) const;

    // Antiderivative F with F(anchor) = 0, continuous across breakpoints.
    PiecewiseFunction antiderivative(double anchor) const;
    // Antiderivative anchored at a domain endpoint: F(lo+) = 0 / F(hi-) = 0.
    // Requires the corresponding tail integral to converge.
    PiecewiseFunction antiderivative_from_lo() const;
    PiecewiseFunction antiderivative_from_hi() const;

    PiecewiseFunction scaled(double k) const;
    PiecewiseFunction plus_const(double k) const;
    PiecewiseFunction mirrored() const; // g(x) = f(-x) on the flipped domain
    // Same function with extra breakpoints inserted (forms unchanged).
    PiecewiseFunction refined(const std::vector<double>& points) const;

    // Limits at the domain endpoints.
    ExtReal limit_at_hi() const;
    ExtReal limit_at_lo() const;

private:
    Interval domain_;
    std::vector<Segment> segs_;
    std::vector<double> bps_;

    void rebuild_index();
};

// Locations of the sign-change breakpoints of a gain function shaped
//   negative | (zero plateau) | positive | (zero plateau) | negative.
// Degenerate plateaus are encoded by x1l == x1r (and/or x2l == x2r).
struct SignTemplate {
    double x1l, x1r, x2l, x2r;
};

// Checks the sign template of a gain function; throws ShapeError naming the
// offending segment otherwise.  Signs are established per segment: exact-zero
// forms make plateaus, other segments are sign-sampled on a dense probe grid.
SignTemplate validate_shape(const PiecewiseFunction& f);

// Checks the diffusion-coefficient conditions on the open state interval:
// sigma != 0 on every segment and at breakpoints (both one-sided values), and
// all coefficients finite at internal breakpoints, so that (1+|b|)/sigma^2 and
// f/sigma^2 are locally integrable on compacts.  Throws CoeffError.
void validate_coeffs(const PiecewiseFunction& b, const PiecewiseFunction& sigma,
                     const PiecewiseFunction& f);

// A stopping problem: maximize E_x ∫_0^tau e^{-lambda s} f(X_s) ds over
// stopping times of dX = b(X)dt + sigma(X)dB on the open interval J.
struct Problem {
    Interval J;
    double lambda = 0.0;
    PiecewiseFunction b, sigma, f;
    std::optional<SignTemplate> shape;

    // validate_coeffs + validate_shape; fills `shape`.
    void validate();
    bool driftless() const;
};

} // namespace ostop
