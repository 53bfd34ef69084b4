#include "fixtures.hpp"
#include "ostop/shooting.hpp"
#include "ostop/solver.hpp"

#include <doctest.h>

#include <cmath>
#include <utility>
#include <vector>

using namespace ostop;
using namespace fixtures;

TEST_SUITE("shooting") {

TEST_CASE("single shot from inside the bracket returns with negative slope") {
    const CoeffView cv = make_view(box_gain());
    const ShootOutcome out = shoot(cv, -1.5);
    REQUIRE(out.kind == ShootOutcome::Kind::Hit);
    // Piecewise-quadratic trajectory: V = (x+1.5)^2 up to -1, then
    // 0.25 + t - t^2 with t = x+1; return at t = (1+sqrt2)/2.
    CHECK(out.x2 == doctest::Approx((std::sqrt(2.0) - 1.0) / 2.0).epsilon(1e-9));
    CHECK(out.resid == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-9));
    // Dense output matches the closed form between nodes.
    CHECK(out.traj.value_at(-1.2) == doctest::Approx(0.09).epsilon(1e-9));
    CHECK(out.traj.deriv_at(-1.2) == doctest::Approx(0.6).epsilon(1e-9));
    CHECK(out.traj.value_at(0.0) == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(out.traj.deriv_at(0.0) == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("single shot from too far left never returns") {
    const CoeffView cv = make_view(box_gain());
    const ShootOutcome out = shoot(cv, -3.0);
    CHECK(out.kind == ShootOutcome::Kind::NoReturn);
    CHECK(std::isinf(out.sentinel()));
    CHECK(out.sentinel() > 0.0);
}

TEST_CASE("single shot started at nonnegative gain drops immediately") {
    const CoeffView cv = make_view(box_gain());
    const ShootOutcome out = shoot(cv, 0.5);
    CHECK(out.kind == ShootOutcome::Kind::ImmediateDrop);
    CHECK(out.sentinel() < 0.0);
    CHECK(std::isinf(out.sentinel()));
}

TEST_CASE("capped run that is not clearly escaping is inconclusive") {
    // One-sided tail matching: started a hair inside the one-sided boundary
    // the trajectory crests and then declines so slowly that it would return
    // only far beyond the exploration cap.  That must not be classified as
    // NoReturn (nor as a return).
    const CoeffView cv = make_view(asym_gain());
    const ShootOutcome out = shoot(cv, -2.5 + 2.5e-10);
    CHECK(out.kind == ShootOutcome::Kind::Inconclusive);
    CHECK(out.x2 > 1e8); // state reported at the cap
    CHECK(std::abs(out.resid) < 1e-5);
    CHECK(std::isnan(out.sentinel()));
}

TEST_CASE("boundary search reproduces the exact two-sided box solution") {
    const ShootingSolution sol = solve_shooting(make_view(box_gain()));
    CHECK(sol.x1 == doctest::Approx(-2.0).epsilon(1e-6));
    CHECK(sol.x2 == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(std::abs(sol.resid) <= 1e-5);
    CHECK(sol.report.pass);
    CHECK(sol.V.V(0.0) == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(sol.V.V(-2.5) == 0.0);
}

TEST_CASE("boundary search reports no root when no two-sided rule exists") {
    // Equal tail levels: no optimal rule at all.
    CHECK_THROWS_AS(solve_shooting(make_view(exp_tail_gain())), NoRootError);
    // One-sided optimal rule: no transversal two-sided smooth-fit root.
    CHECK_THROWS_AS(solve_shooting(make_view(asym_gain())), NoRootError);
}

TEST_CASE("boundary search on the discounted mean-reverting problem") {
    const ShootingSolution sol = solve_shooting(make_view(ou_gain()));
    const double z0 = ou_z0();
    // The gain is even, so the optimal boundaries are symmetric and flank the
    // sign changes of f.
    CHECK(std::abs(sol.x1 + sol.x2) <= 1e-6);
    CHECK(sol.x1 < -z0);
    CHECK(sol.x2 > z0);
    CHECK(sol.report.pass);
    CHECK(sol.report.residual_ode <= ValidationReport::kResidualTol * sol.report.scale);
    CHECK(sol.V.V(0.0) > 0.0);
}

TEST_CASE("validation accepts the exact solution") {
    const Problem pr = box_gain();
    const HTransform ht = HTransform::build(pr);
    const Classification cl = classify(ht);
    const ValueFunction V = build_value(ht, find_cstar(ht, cl));
    const ValidationReport rep = validate_solution(make_view(pr), V, V.x1, V.x2);
    CHECK(rep.pass);
    CHECK(rep.failure_summary() == "none");
    CHECK(rep.boundary <= ValidationReport::kBoundaryTol * rep.scale);
    CHECK(rep.smooth_fit <= ValidationReport::kSmoothFitTol * rep.scale);
    CHECK(rep.residual_ode <= ValidationReport::kResidualTol * rep.scale);
    CHECK(rep.abs_continuity <= ValidationReport::kAbsContTol * rep.scale);
    CHECK(rep.positivity <= ValidationReport::kPositivityTol * rep.scale);
}

TEST_CASE("validation rejects boundary perturbations of 1e-3") {
    const Problem pr = box_gain();
    const HTransform ht = HTransform::build(pr);
    const CoeffView cv = make_view(pr);
    const double d = 1e-3;
    for (auto [a, b] : std::vector<std::pair<double, double>>{
             {-2.0 + d, 2.0 + d}, {-2.0 - d, 2.0}, {-2.0, 2.0 - d}, {-2.0 + d, 2.0 - d}}) {
        const Payoff po = payoff_two_sided(ht, a, b);
        const ValidationReport rep = validate_solution(cv, po.U, a, b);
        CHECK_FALSE(rep.pass);
        // The exit payoff is smooth everywhere except at its own boundaries,
        // where the slope mismatch is first order in the perturbation.
        CHECK(rep.smooth_fit > ValidationReport::kSmoothFitTol * rep.scale);
        CHECK(rep.smooth_fit == doctest::Approx(2.0 * d).epsilon(0.2));
    }
}

TEST_CASE("validation flags a singular candidate via absolute continuity only") {
    // Tent built from a singular monotone staircase: continuous, boundary
    // values zero, claimed derivative identically zero (true a.e.), but V is
    // not the integral of its derivative.
    CoeffView cv;
    cv.J = Interval{ExtReal(-1.0), ExtReal(2.0)};
    cv.lambda = 0.0;
    cv.b = [](double) { return 0.0; };
    cv.sigma_sq = [](double) { return 1.0; };
    cv.f = [](double) { return 0.0; };

    ValueFunction vf;
    vf.x1 = 0.0;
    vf.x2 = 1.0;
    vf.V = [](double x) {
        if (x <= 0.0 || x >= 1.0) return 0.0;
        return x <= 0.5 ? cantor_staircase(2.0 * x) : cantor_staircase(2.0 - 2.0 * x);
    };
    vf.dV = [](double) { return 0.0; };

    const ValidationReport rep = validate_solution(cv, vf, 0.0, 1.0);
    CHECK_FALSE(rep.pass);
    CHECK(rep.abs_continuity > ValidationReport::kAbsContTol * rep.scale);
    CHECK(rep.abs_continuity > 0.4); // recovers essentially none of the tent
    CHECK(rep.boundary <= ValidationReport::kBoundaryTol * rep.scale);
    CHECK(rep.smooth_fit <= ValidationReport::kSmoothFitTol * rep.scale);
    CHECK(rep.residual_ode <= ValidationReport::kResidualTol * rep.scale);
    CHECK(rep.positivity <= ValidationReport::kPositivityTol * rep.scale);
    CHECK(rep.inclusion == 0.0);
    CHECK(rep.failure_summary().rfind("abs_continuity", 0) == 0);
}

TEST_CASE("degenerate candidates are reported as trivial") {
    const Problem pr = box_gain();
    ValueFunction vf;
    vf.x1 = 0.3;
    vf.x2 = 0.3;
    vf.V = [](double) { return 0.0; };
    vf.dV = [](double) { return 0.0; };
    const ValidationReport rep = validate_solution(make_view(pr), vf, 0.3, 0.3);
    CHECK_FALSE(rep.pass);
    CHECK_FALSE(rep.nontrivial);
}

} // TEST_SUITE
