#pragma once

#include <functional>
#include <vector>

namespace ostop {

using Fn1 = std::function<double(double)>;

// Adaptive Simpson with Richardson-extrapolated acceptance.
double adaptive_simpson(const Fn1& f, double a, double b, double tol, int max_depth = 48);

// Quadrature over [a, b] split at the given interior points; long panels are
// additionally chunked geometrically from both ends before the adaptive
// recursion, so localized mass inside a huge panel cannot be missed by the
// first three Simpson probes.
double integrate_panels(const Fn1& f, double a, double b, std::vector<double> splits, double tol);

// Brent's method on a sign-changing bracket [a, b].  Iterates until the
// bracket collapses to xatol + machine precision (or |f| <= fatol).  Returns
// the abscissa with the smallest |f| seen.
double brent_root(const Fn1& f, double a, double b, double fa, double fb,
                  double xatol = 0.0, double fatol = 0.0);

} // namespace ostop
