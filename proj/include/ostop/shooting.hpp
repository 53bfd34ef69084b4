#pragma once

#include "ostop/scale.hpp"

#include <limits>
#include <string>

namespace ostop {

// No admissible shooting start produced a smooth-fit bracket inside the scan
// window (the problem has no two-sided solution reachable by shooting).
struct NoRootError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dense numeric solution of the value ODE
//   (sigma^2/2) V'' + b V' - lambda V + f = 0,   V(x1) = V'(x1) = 0,
// integrated left to right; nodes never straddle coefficient breakpoints.
// Evaluation between nodes is cubic-Hermite (V from (V, W), W from (W, W')).
class Trajectory {
public:
    struct Node {
        double x, V, W, dW;
    };
    std::vector<Node> nodes;

    double value_at(double x) const;
    double deriv_at(double x) const;
};

struct ShootOptions {
    double tol = 1e-10;      // per-step error tolerance (absolute and relative)
    double max_step = std::numeric_limits<double>::infinity();
    double vmax = 1e50;      // |V| or |V'| beyond which the run counts as no return
    double xcap_pad = 1e9;   // exploration cap: x2r + pad * max(1, template spread)
    // Slope threshold at an unbounded-side cap: a still-positive trajectory
    // with V' below this is not clearly escaping (it may return far beyond the
    // cap, or level off), so the run is Inconclusive rather than NoReturn.
    double escape_floor = 1e-5;
    // Accepted-step budget per shot.  Stiff drift can make both the cap and a
    // clean escape unreachable in any reasonable effort; exhausting the budget
    // classifies the run Inconclusive instead of stalling.
    long long max_steps = 3000000;
    bool record = true; // keep trajectory nodes
};

// One shot from x1: rise of V through the negative-gain region and either a
// return to zero (Hit, with the slope at the return point as residual), an
// immediate drop (started where the gain is >= 0), no return within the caps,
// or an inconclusive run.  Return points are located on the dense
// (cubic-Hermite) output, so a wide accepted step cannot jump over a dip
// below zero.  Past the gain region f <= 0, so once V' >= 0 with V > 0 the
// trajectory can never return (at V' = 0 the equation forces V'' >= 0); a
// rebound there -- V risen to a multiple of its running minimum with
// V' >= 0 -- concludes NoReturn immediately, without integrating to the cap.
// The multiple makes the test robust: integrator noise near a tangential dip
// can flip the sign of V' but cannot fake a severalfold rise of V.
// Sentinels order the conclusive outcomes for bisection:
// NoReturn (+inf) means x1 is too far left, ImmediateDrop / negative residual
// means too far right; Inconclusive is NaN and belongs to neither side.
struct ShootOutcome {
    enum class Kind { Hit, NoReturn, ImmediateDrop, Inconclusive };
    Kind kind = Kind::NoReturn;
    double x2 = 0.0, resid = 0.0; // Hit: return point; Inconclusive: last state
    bool at_cap = false;          // Inconclusive flavor: reached the exploration
                                  // cap (vs. exhausted the step budget)
    Trajectory traj;

    double sentinel() const {
        if (kind == Kind::NoReturn) return std::numeric_limits<double>::infinity();
        if (kind == Kind::ImmediateDrop) return -std::numeric_limits<double>::infinity();
        if (kind == Kind::Inconclusive) return std::numeric_limits<double>::quiet_NaN();
        return resid;
    }
};

ShootOutcome shoot(const CoeffView& cv, double x1, const ShootOptions& opt = {});

// ---------------------------------------------------------------------------

// Residual checks of a candidate pair (V, [x1, x2]) against the variational
// characterization.  All thresholds are fixed here; errors are normalized by
// scale = max(1, max |V|).
struct ValidationReport {
    static constexpr double kBoundaryTol = 1e-8;   // |V| at the boundaries
    static constexpr double kSmoothFitTol = 1e-5;  // |V'| just inside the boundaries
    static constexpr double kResidualTol = 1e-7;   // integral-form ODE defect per panel
    static constexpr double kAbsContTol = 1e-7;    // FTC recovery of V' and V
    static constexpr double kPositivityTol = 1e-9; // V >= 0 inside
    static constexpr double kInclusionMargin = 1e-9;

    double scale = 1.0;
    double boundary = 0.0;
    double smooth_fit = 0.0;
    double residual_ode = 0.0;
    double abs_continuity = 0.0;
    double positivity = 0.0; // max(0, -min V)
    double inclusion = 0.0;  // shortfall of the strict-inclusion margin
    bool nontrivial = true;
    bool pass = false;

    void finalize();
    std::string failure_summary() const; // comma-separated names of failed checks
};

ValidationReport validate_solution(const CoeffView& cv, const ValueFunction& vf, double x1,
                                   double x2);

// ---------------------------------------------------------------------------

struct SolveShootOptions {
    double scan_bound = 1e6; // leftward scan limit, relative to the template scale
    double xtol = 1e-13;     // bracket width target, relative
    double ftol = 1e-9;      // early-exit smooth-fit residual
};

struct ShootingSolution {
    double x1 = 0.0, x2 = 0.0;
    double resid = 0.0; // smooth-fit residual actually achieved at x2
    Trajectory traj;
    ValueFunction V;
    ValidationReport report;
};

// Scan-then-bisect over the left boundary; the final trajectory is
// re-integrated at tight tolerance for dense output.  Throws NoRootError when
// the scan exhausts its window without a sign change or when probes turn
// Inconclusive at the exploration cap (no transversal smooth-fit root — the
// problem has no two-sided solution), NumericError on irrecoverable
// integration failures.
ShootingSolution solve_shooting(const CoeffView& cv, const SolveShootOptions& sopt = {},
                                const ShootOptions& opt = {});

} // namespace ostop
