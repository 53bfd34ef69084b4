#pragma once

// Shared problem builders for the test suites.  Every closed-form expectation
// asserted in the tests was derived by hand from these definitions:
//
// box_gain(kappa):  f = +1 on (-1,1), -kappa outside, sigma = 1.
//   h = 2*kappa*(x+1) + 2 left | -2x middle | 2*kappa*(x-1) - 2 right;
//   optimal boundaries ±(1 + 1/kappa), smooth-fit level 0, V(0) = 1 + 1/kappa.
// plateau_gain:  f = -1 | 0 on (-2,-1) | +1 on (-1,1) | -1.
//   S(c) = 2 - 5c, c* = 0.4, boundaries -2.8 / 2.2, V(0) = 2.84.
// exp_tail_gain:  f = -e^{x+1} | +1 on (-1,1) | -e^{-(x-1)}.
//   h = 2e^{x+1} | -2x | -2e^{-(x-1)}; h(±inf) = 0, no optimal rule,
//   m = 0, both tail masses equal 3, finite value V*(0) = 3.
// asym_gain:  f = -1 | +1 on (-1,1) | -e^{-(x-1)}/2.
//   h = 2x+4 | -2x | -1 - e^{-(x-1)}; h(+inf) = -1: one-sided left rule at
//   alpha = -2.5, V(-1) = 2.25, V(0) = 4.25, sup V = V(0.5) = 4.5,
//   V(+inf) = 3.25.
// heavy_tail_gain:  f = -1/(2x^2) | +1 on (-1,1) | -1.5 e^{-(x-1)}.
//   h = 1 - 1/x | -2x | 1 - 3e^{-(x-1)}; h(±inf) = 1 = m, positive mass
//   infinite (log tail), negative mass 5.25, value identically infinite.
// box_drift_gain:  box gain with constant drift -1/2.
//   Natural scale p = e^x - 1, p' = e^x, image (-1, inf),
//   sigma_tilde(y) = 1 + y.
// ou_gain:  b = x, sigma = sqrt(2), lambda = 2,
//   f = 1 + 2 erf(x/sqrt2) for x < 0, mirrored for x > 0; sign changes at
//   ±z0 with erf(z0/sqrt2) = 1/2.  Natural scale p = sqrt(pi/2) erf(x/sqrt2).

#include "ostop/funcmodel.hpp"

#include <cmath>
#include <random>

namespace fixtures {

using namespace ostop;

inline Form cst(double v) { return Poly::constant(v); }

inline Segment seg(ExtReal lo, ExtReal hi, Form f) { return {lo, hi, std::move(f)}; }

inline ExtReal ninf() { return ExtReal::neg_inf(); }
inline ExtReal pinf() { return ExtReal::pos_inf(); }

inline Problem box_gain(double kappa = 1.0) {
    Problem pr;
    pr.J = Interval::whole_line();
    pr.b = PiecewiseFunction::constant(pr.J, 0.0);
    pr.sigma = PiecewiseFunction::constant(pr.J, 1.0);
    pr.f = PiecewiseFunction(pr.J, {seg(ninf(), -1.0, cst(-kappa)), seg(-1.0, 1.0, cst(1.0)),
                                    seg(1.0, pinf(), cst(-kappa))});
    pr.validate();
    return pr;
}

inline Problem plateau_gain() {
    Problem pr;
    pr.J = Interval::whole_line();
    pr.b = PiecewiseFunction::constant(pr.J, 0.0);
    pr.sigma = PiecewiseFunction::constant(pr.J, 1.0);
    pr.f = PiecewiseFunction(pr.J, {seg(ninf(), -2.0, cst(-1.0)), seg(-2.0, -1.0, cst(0.0)),
                                    seg(-1.0, 1.0, cst(1.0)), seg(1.0, pinf(), cst(-1.0))});
    pr.validate();
    return pr;
}

inline Form exp_form(double x0, double a, double c) {
    ExpPoly e;
    e.x0 = x0;
    e.a = a;
    e.c = c;
    return e;
}

inline Problem exp_tail_gain() {
    Problem pr;
    pr.J = Interval::whole_line();
    pr.b = PiecewiseFunction::constant(pr.J, 0.0);
    pr.sigma = PiecewiseFunction::constant(pr.J, 1.0);
    pr.f = PiecewiseFunction(pr.J, {seg(ninf(), -1.0, exp_form(-1.0, 1.0, -1.0)),
                                    seg(-1.0, 1.0, cst(1.0)),
                                    seg(1.0, pinf(), exp_form(1.0, -1.0, -1.0))});
    pr.validate();
    return pr;
}

inline Problem asym_gain() {
    Problem pr;
    pr.J = Interval::whole_line();
    pr.b = PiecewiseFunction::constant(pr.J, 0.0);
    pr.sigma = PiecewiseFunction::constant(pr.J, 1.0);
    pr.f = PiecewiseFunction(pr.J, {seg(ninf(), -1.0, cst(-1.0)), seg(-1.0, 1.0, cst(1.0)),
                                    seg(1.0, pinf(), exp_form(1.0, -1.0, -0.5))});
    pr.validate();
    return pr;
}

inline Problem heavy_tail_gain() {
    PowerLog left;
    left.x0 = 0.0;
    left.dir = -1;
    left.cpow = -0.5;
    left.p = -2.0;
    Problem pr;
    pr.J = Interval::whole_line();
    pr.b = PiecewiseFunction::constant(pr.J, 0.0);
    pr.sigma = PiecewiseFunction::constant(pr.J, 1.0);
    pr.f = PiecewiseFunction(pr.J, {seg(ninf(), -1.0, left), seg(-1.0, 1.0, cst(1.0)),
                                    seg(1.0, pinf(), exp_form(1.0, -1.0, -1.5))});
    pr.validate();
    return pr;
}

inline Problem box_drift_gain() {
    Problem pr = box_gain();
    pr.b = PiecewiseFunction::constant(pr.J, -0.5);
    pr.validate();
    return pr;
}

// Root of erf(z/sqrt(2)) = 1/2 (the upper quartile of the standard normal).
inline double ou_z0() {
    double lo = 0.6, hi = 0.7;
    for (int i = 0; i < 200 && hi - lo > 1e-16; ++i) {
        const double mid = 0.5 * (lo + hi);
        (std::erf(mid / std::sqrt(2.0)) < 0.5 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

inline Form ou_form(double sign) {
    GaussErf g;
    g.x0 = 0.0;
    g.a = 1.0 / std::sqrt(2.0);
    g.pe = Poly::constant(sign * 2.0);
    g.pr = Poly::constant(1.0);
    return g;
}

inline Problem ou_gain() {
    const double z0 = ou_z0();
    Problem pr;
    pr.J = Interval::whole_line();
    pr.lambda = 2.0;
    pr.b = PiecewiseFunction(pr.J, {seg(ninf(), pinf(), Poly(0.0, {0.0, 1.0}))});
    pr.sigma = PiecewiseFunction::constant(pr.J, std::sqrt(2.0));
    pr.f = PiecewiseFunction(pr.J, {seg(ninf(), -z0, ou_form(+1.0)), seg(-z0, 0.0, ou_form(+1.0)),
                                    seg(0.0, z0, ou_form(-1.0)), seg(z0, pinf(), ou_form(-1.0))});
    pr.validate();
    return pr;
}

// Random driftless, undiscounted problem with piecewise-constant coefficients
// (always solvable: both h tails diverge).  Used for quadrature equivalence.
inline Problem random_const_problem(std::mt19937_64& rng) {
    auto uni = [&](double a, double b) {
        return std::uniform_real_distribution<double>(a, b)(rng);
    };
    const double l1 = uni(-2.0, -0.3), l2 = uni(0.3, 2.0);
    const double fl = -uni(0.2, 3.0), fm = uni(0.2, 3.0), fr = -uni(0.2, 3.0);
    const double s0 = uni(l1, l2);
    const double sl = uni(0.5, 2.0), sr = uni(0.5, 2.0);
    Problem pr;
    pr.J = Interval::whole_line();
    pr.b = PiecewiseFunction::constant(pr.J, 0.0);
    pr.sigma = PiecewiseFunction(pr.J, {seg(ninf(), s0, cst(sl)), seg(s0, pinf(), cst(sr))});
    pr.f = PiecewiseFunction(pr.J, {seg(ninf(), l1, cst(fl)), seg(l1, l2, cst(fm)),
                                    seg(l2, pinf(), cst(fr))});
    pr.validate();
    return pr;
}

// n-level approximation of the Cantor function on [0,1]: continuous,
// monotone, constant on every removed middle third down to level n, linear
// on the surviving intervals.
inline double cantor_staircase(double t, int levels = 10) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    double v = 0.0, w = 0.5;
    for (int i = 0; i < levels; ++i) {
        t *= 3.0;
        if (t < 1.0) {
        } else if (t < 2.0) {
            return v + w;
        } else {
            v += w;
            t -= 2.0;
        }
        w *= 0.5;
    }
    return v + 2.0 * w * t; // linear fill at the cutoff level (w was halved once extra)
}

} // namespace fixtures
