#pragma once

#include "ostop/funcmodel.hpp"

#include <optional>

namespace ostop {

// The requested level is outside the range of the monotone branch, or the
// bracket expansion hit its bound.
struct RootDomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// The symbolic derivation (-2 f / sigma^2 within the closed form family) is
// not available for these coefficients.
struct SymbolicError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Characteristic transform of a driftless, undiscounted problem:
//   g = -2 f / sigma^2,   h(x) = ∫_anchor^x g(y) dy  (h(anchor) = 0).
// Under the gain shape, h increases on the left tail, decreases in the middle,
// increases on the right tail; level crossings of h and signed areas between h
// and a level fully describe optimal two-sided boundaries.
class HTransform {
public:
    // Requires b ≡ 0, lambda == 0, validated shape, and symbolically
    // representable g (throws PreconditionError / SymbolicError).
    static HTransform build(const Problem& pr);

    const PiecewiseFunction& g() const { return g_; }
    const PiecewiseFunction& h() const { return h_; }
    const SignTemplate& shape() const { return shape_; }
    double anchor() const { return anchor_; }

    double H(double x, double c) const { return h_(x) - c; }
    ExtReal h_at_hi() const { return h_hi_; }
    ExtReal h_at_lo() const { return h_lo_; }
    double plateau_left() const { return plat_l_; }  // h(x1l) = h(x1r)
    double plateau_right() const { return plat_r_; } // h(x2l) = h(x2r)

    struct Root {
        double x;
        // The level coincided (within 1e-9 relative) with the plateau value,
        // so the crossing sits exactly at the plateau edge.
        bool boundary_degenerate = false;
    };
    // Crossing of h with level c on the increasing left branch (< x1l), the
    // increasing right branch (> x2r), and the decreasing middle branch.
    // `bound` caps the geometric bracket expansion on unbounded tails.
    Root root_alpha(double c, double bound = 1e6) const;
    Root root_beta(double c, double bound = 1e6) const;
    Root root_gamma(double c) const;

    // S(c) = ∫_{alpha_c}^{beta_c} (h(y) - c) dy, exact; strictly decreasing in
    // c on [m1, m2] (plateau-degenerate endpoints allowed).
    double smoothfit_area(double c, double bound = 1e6) const;

    // Transform of the mirrored problem x -> -x; satisfies
    // mirrored().h()(y) == -h(-y), with the sign template reflected.
    HTransform mirrored() const;

private:
    PiecewiseFunction g_, h_;
    SignTemplate shape_{};
    double anchor_ = 0.0;
    ExtReal h_hi_, h_lo_;
    double plat_l_ = 0.0, plat_r_ = 0.0;
};

enum class CaseKind {
    Solvable,      // unique two-sided optimal boundary
    OneSidedLeft,  // stop when the left threshold is hit
    OneSidedRight, // stop when the right threshold is hit
    NoOptimum      // no optimal stopping time; value via approximating sequences
};

enum class CondState { Holds, Fails, Vacuous };

struct Classification {
    CaseKind kind;
    ExtReal h_inf, h_minf;
    bool a1 = false;        // h(+inf) > h(-inf)
    CondState a2 = CondState::Vacuous, a3 = CondState::Vacuous;
    std::optional<ExtReal> a2_integral, a3_integral;
    std::optional<double> alpha_star, beta_star; // roots used by (A2)/(A3)
    double m1 = 0.0, m2 = 0.0;                   // always finite
    // NoOptimum data: the common level m and the positive/negative mass of
    // h - m (either may be +inf).
    std::optional<double> m, gamma_m;
    std::optional<ExtReal> Kplus, Kminus;
    bool boundary_degenerate = false;
};

// Decision tree over the three conditions; total on validated driftless
// undiscounted problems.
Classification classify(const HTransform& ht);

} // namespace ostop
