#include "ostop/oracle.hpp"

#include "ostop/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ostop {

namespace {

void require_driftless_undisc(const CoeffView& cv) {
    if (cv.lambda != 0.0)
        throw PreconditionError("the exit-kernel reference requires an undiscounted problem");
    auto probe = [&](double x) {
        if (cv.J.contains(x) && cv.b(x) != 0.0)
            throw PreconditionError("the exit-kernel reference requires zero drift");
    };
    probe(cv.shape.x1l - 0.25);
    probe(0.5 * (cv.shape.x1l + cv.shape.x2r));
    probe(cv.shape.x2r + 0.25);
    for (double bp : cv.breakpoints) probe(bp + 1e-3);
}

} // namespace

double green_kernel(double a, double b, double x, double y) {
    if (!(a < b)) throw PreconditionError("degenerate exit interval");
    const double lo = std::min(x, y), hi = std::max(x, y);
    if (lo < a || hi > b) return 0.0;
    return 2.0 * (lo - a) * (b - hi) / (b - a);
}

double green_value(const CoeffView& cv, double a, double b, double x, double tol) {
    require_driftless_undisc(cv);
    if (!(a < b)) throw PreconditionError("degenerate exit interval");
    if (x <= a || x >= b) return 0.0;
    std::vector<double> splits{x};
    for (double bp : cv.breakpoints)
        if (bp > a && bp < b) splits.push_back(bp);
    auto integrand = [&](double y) { return green_kernel(a, b, x, y) * cv.f(y) / cv.sigma_sq(y); };
    return integrate_panels(integrand, a, b, std::move(splits), tol);
}

double green_value_one_sided(const CoeffView& cv, double boundary, double x, bool boundary_is_left,
                             double tol) {
    require_driftless_undisc(cv);
    if (boundary_is_left ? !cv.J.hi.is_pos_inf() : !cv.J.lo.is_neg_inf())
        throw PreconditionError("one-sided rule needs an unbounded free side");
    const double spread = std::max(1.0, cv.shape.x2r - cv.shape.x1l);
    double base = boundary_is_left ? std::max({x, cv.shape.x2r, boundary}) + spread
                                   : std::min({x, cv.shape.x1l, boundary}) - spread;
    double prev = 0.0, prev_diff = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 60; ++k) {
        const double co = boundary + (base - boundary) * std::ldexp(1.0, k);
        const double u = boundary_is_left ? green_value(cv, boundary, co, x, tol * 0.125)
                                          : green_value(cv, co, boundary, x, tol * 0.125);
        if (k > 0) {
            const double diff = std::abs(u - prev);
            if (diff <= tol && prev_diff <= tol) return u;
            prev_diff = diff;
        }
        prev = u;
    }
    throw NonConvergentError("one-sided payoff did not stabilize over doubling co-boundaries");
}

} // namespace ostop
