#pragma once

#include "ostop/solver.hpp"

#include <functional>
#include <memory>
#include <optional>

namespace ostop {

// Pointwise coefficient view of a problem for the numeric routines (shooting,
// quadrature oracles, Monte Carlo).  Evaluation is exact; `breakpoints` lists
// every abscissa where some coefficient may jump.
struct CoeffView {
    Interval J;
    double lambda = 0.0;
    std::function<double(double)> b;        // drift
    std::function<double(double)> sigma_sq; // sigma^2
    std::function<double(double)> f;        // gain
    std::vector<double> breakpoints;
    SignTemplate shape{};
};

// View of the problem in its original coordinates (requires validated shape).
CoeffView make_view(const Problem& pr);

// Strictly increasing space map p removing the drift: Y = p(X) solves
// dY = sigma_tilde(Y) dB with sigma_tilde(y) = sigma(q(y)) p'(q(y)), q = p^{-1},
// where p' = exp(-∫ 2b/sigma^2).  p is exact (closed-form) whenever the inner
// integral is piecewise quadratic with nonnegative leading coefficients;
// otherwise p falls back to cumulative adaptive quadrature over the exact p'.
class ScaleTransform {
public:
    static ScaleTransform from_problem(const Problem& pr);
    static ScaleTransform identity(Interval J);
    // Externally supplied map (for tests/special geometries); p and dp must be
    // consistent and strictly increasing onto `image`.
    static ScaleTransform custom(Interval domain, std::function<double(double)> p,
                                 std::function<double(double)> dp, Interval image);

    double p(double x) const;
    double dp(double x) const;
    // q = p^{-1} on the open image interval (Brent bracket + Newton polish).
    double inverse(double y) const;

    const Interval& domain() const { return domain_; }
    const Interval& image() const { return image_; }
    bool is_identity() const { return identity_; }
    bool symbolic() const { return p_exact_.has_value(); }
    // Exact representations when available.
    const std::optional<PiecewiseFunction>& inner() const { return inner_; }
    const std::optional<PiecewiseFunction>& p_exact() const { return p_exact_; }
    const std::optional<PiecewiseFunction>& dp_exact() const { return dp_exact_; }

private:
    Interval domain_, image_;
    bool identity_ = false;
    double anchor_ = 0.0;
    std::optional<PiecewiseFunction> inner_, p_exact_, dp_exact_;
    std::function<double(double)> p_fn_, dp_fn_;
    std::vector<double> nodes_, pvals_; // cumulative quadrature grid (numeric p)

    double p_numeric(double x) const;
};

// The problem in natural scale.  `symbolic` is filled when the transformed
// coefficients stay inside the closed form family (piecewise-constant b, sigma,
// f on a common refinement): then sigma_tilde is piecewise affine and f_tilde
// piecewise constant, and the driftless solver applies exactly.
struct TransformedProblem {
    Problem original;
    ScaleTransform map;
    std::optional<Problem> symbolic;
    CoeffView view; // natural-scale coefficients (drift == 0)
    SignTemplate shape_image{};
    bool identity = false;
};

TransformedProblem transform_problem(const Problem& pr);

// Map a natural-scale value function back to original coordinates:
// V(x) = Vt(p(x)), V'(x) = Vt'(p(x)) p'(x).
ValueFunction pull_back(const ScaleTransform& map, const ValueFunction& vt);

} // namespace ostop
