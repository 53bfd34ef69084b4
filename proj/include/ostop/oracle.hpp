#pragma once

#include "ostop/scale.hpp"

namespace ostop {

// The one-sided payoff limit did not stabilize within the co-boundary budget
// (the rule's expected gain is presumably infinite or divergent).
struct NonConvergentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Exit-time kernel of W'' on (a, b) with W(a) = W(b) = 0:
//   G(a,b,x,y) = 2 (x∧y - a)(b - x∨y) / (b - a).
double green_kernel(double a, double b, double x, double y);

// Quadrature reference for the expected total gain of the two-sided exit rule
// from (a, b) in a driftless, undiscounted problem:
//   U(x) = ∫_a^b G(a,b,x,y) f(y)/sigma^2(y) dy,  0 outside (a, b).
// Panels split at coefficient breakpoints and at the kink y = x.
double green_value(const CoeffView& cv, double a, double b, double x, double tol = 1e-8);

// One-sided rule (stop at `boundary`, run free toward the open side): the
// limit of green_value over doubling co-boundaries, accepted after two
// successive increments fall below tol (the truncation error is then of the
// order of the last increment).  Throws NonConvergentError otherwise.
double green_value_one_sided(const CoeffView& cv, double boundary, double x,
                             bool boundary_is_left, double tol = 2.5e-6);

} // namespace ostop
