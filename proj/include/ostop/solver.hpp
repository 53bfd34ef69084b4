#pragma once

#include "ostop/htransform.hpp"

#include <functional>
#include <memory>
#include <variant>

namespace ostop {

// Evaluable candidate/solution value function.  V and dV are total on the
// state interval (identically 0 outside the support [x1, x2]); when the
// solution was produced symbolically the exact piecewise representations are
// attached as well.
struct ValueFunction {
    double x1, x2; // support endpoints (may be ±inf)
    std::function<double(double)> V, dV;
    std::shared_ptr<const PiecewiseFunction> V_exact, dV_exact;

    static ValueFunction from_piecewise(PiecewiseFunction V, PiecewiseFunction dV,
                                        double x1, double x2);
};

struct TwoSided {
    double x1, x2, cstar;
    double area_residual; // |S(c*)| actually achieved
    bool boundary_degenerate = false;
    ValueFunction V;
};
struct OneSidedLeft {
    double alpha, level; // level = h(+inf)
    ValueFunction V;
};
struct OneSidedRight {
    double beta, level; // level = h(-inf)
    ValueFunction V;
};
struct NoOptimum {
    double m;
    ExtReal Kplus, Kminus;
    bool infinite;                    // value identically +inf
    std::shared_ptr<ValueFunction> V; // finite-value branch only
};

using Solution = std::variant<TwoSided, OneSidedLeft, OneSidedRight, NoOptimum>;

struct SolveResult {
    Classification cl;
    Solution sol;
};

struct CStar {
    double c, alpha, beta;
    double area_residual;
    bool boundary_degenerate = false;
};

// Unique root of the strictly decreasing S on [m1, m2] (Solvable problems).
CStar find_cstar(const HTransform& ht, const Classification& cl);

// Exact value function of the two-sided rule (x1, x2) with smooth fit:
// V = ∫_{x1}^{x} (h - c) on [x1, x2], 0 outside.
ValueFunction build_value(const HTransform& ht, const CStar& cs);

// Expected total gain of the two-sided exit rule from (a, b):
// U(x) = ∫_a^x (h(y) - c) dy with c the mean of h over (a, b); U <= V*.
struct Payoff {
    double a, b, c;
    ValueFunction U;
};
Payoff payoff_two_sided(const HTransform& ht, double a, double b);

// Candidate anchored to smooth fit at the left boundary only (for validation
// exercises): V = ∫_{x1}^x (h - h(x1)) on [x1, x2], 0 outside.
ValueFunction left_anchored_candidate(const HTransform& ht, double x1, double x2);

// Exit-rule sequences for problems without an optimal stopping time.
// Items satisfy: a_n strictly decreasing (to -inf in the asymptotically
// optimal mode), b_n strictly increasing, zero-area ∫_{a_n}^{b_n}(h-c_n) = 0
// (hence c_n is the h-mean and payoff_two_sided applies verbatim), c_n -> m
// monotonically with |c_n - m| <= 1/n.
class SequencePlan {
public:
    enum class Mode {
        AsymptoticallyOptimal, // payoffs increase to the (possibly infinite) value
        Pathological           // a_n -> -inf yet sup_x U_n stays <= K-
    };
    struct Item {
        double a, b, c;
    };

    Mode mode() const { return mode_; }
    bool mirrored() const { return mirrored_; }
    double m() const { return m_; }
    // 1-based; memoized, deterministic.
    Item item(int n);

private:
    friend SequencePlan make_sequence(const HTransform&, const Classification&, Mode);
    Mode mode_ = Mode::AsymptoticallyOptimal;
    bool mirrored_ = false;
    double m_ = 0.0;
    double delta_ = 1.0;
    double kminus_ = 0.0; // pathological budget
    std::shared_ptr<HTransform> ht_;   // working (possibly mirrored) transform
    std::vector<Item> items_;          // in working coordinates
    double eps_prev_ = 0.0;
    void extend();
};

// Requires kind == NoOptimum.  Pathological mode additionally requires
// h(+inf) == h(-inf) with exactly one of K± infinite (PreconditionError).
SequencePlan make_sequence(const HTransform& ht, const Classification& cl, SequencePlan::Mode mode);

// Full driftless undiscounted pipeline: transform, classify, dispatch.
// Solvable results are validated (ODE residuals, smooth fit, positivity)
// before being returned.
SolveResult solve_exact(const Problem& pr);

} // namespace ostop
