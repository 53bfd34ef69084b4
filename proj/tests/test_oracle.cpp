#include "fixtures.hpp"
#include "ostop/oracle.hpp"
#include "ostop/solver.hpp"

#include <doctest.h>

#include <cmath>
#include <utility>
#include <vector>

using namespace ostop;
using namespace fixtures;

TEST_SUITE("oracle") {

TEST_CASE("exit-time kernel: symmetry, support, positivity") {
    const double a = -1.0, b = 3.0;
    for (double x : {-0.5, 0.0, 1.0, 2.9}) {
        for (double y : {-0.9, 0.2, 1.5, 2.0}) {
            CHECK(green_kernel(a, b, x, y) == doctest::Approx(green_kernel(a, b, y, x)));
            CHECK(green_kernel(a, b, x, y) >= 0.0);
        }
        CHECK(green_kernel(a, b, x, a) == doctest::Approx(0.0).scale(1.0));
        CHECK(green_kernel(a, b, x, b) == doctest::Approx(0.0).scale(1.0));
    }
    // Closed form at a hand point: 2 (x-a)(b-y)/(b-a).
    CHECK(green_kernel(a, b, 0.0, 1.0) == doctest::Approx(2.0 * 1.0 * 2.0 / 4.0));
    CHECK_THROWS_AS(green_kernel(1.0, 1.0, 1.0, 1.0), PreconditionError);
}

TEST_CASE("quadrature value of the optimal box rule matches the closed form") {
    const CoeffView cv = make_view(box_gain());
    // V(x) = ∫_{-2}^{x}(h - 0): quadratic splines with V(0) = 2.
    auto vexact = [](double x) {
        const double ax = std::abs(x);
        if (ax >= 2.0) return 0.0;
        if (ax >= 1.0) return (2.0 - ax) * (2.0 - ax);
        return 2.0 - ax * ax;
    };
    for (double x : {-1.999, -1.5, -1.0, -0.25, 0.0, 0.6, 1.0, 1.8})
        CHECK(green_value(cv, -2.0, 2.0, x) == doctest::Approx(vexact(x)).epsilon(1e-8).scale(1.0));
    CHECK(green_value(cv, -2.0, 2.0, -2.0) == 0.0);
    CHECK(green_value(cv, -2.0, 2.0, 5.0) == 0.0);
}

TEST_CASE("quadrature agrees with the exact exit payoff on arbitrary rules") {
    const Problem pr = exp_tail_gain();
    const HTransform ht = HTransform::build(pr);
    const CoeffView cv = make_view(pr);
    for (auto [a, b] : std::vector<std::pair<double, double>>{
             {-1.0, 1.0}, {-3.5, 2.25}, {-0.4, 5.0}}) {
        const Payoff po = payoff_two_sided(ht, a, b);
        for (int i = 1; i < 8; ++i) {
            const double x = a + (b - a) * i / 8.0;
            CHECK(green_value(cv, a, b, x) ==
                  doctest::Approx(po.U.V(x)).epsilon(1e-8).scale(1.0));
        }
    }
}

TEST_CASE("one-sided quadrature limit matches the one-sided value") {
    const CoeffView cv = make_view(asym_gain());
    // Stop at -2.5, run free to the right.
    CHECK(green_value_one_sided(cv, -2.5, -1.0, true) == doctest::Approx(2.25).epsilon(1e-5));
    CHECK(green_value_one_sided(cv, -2.5, 0.0, true) == doctest::Approx(4.25).epsilon(1e-5));
    CHECK(green_value_one_sided(cv, -2.5, 0.5, true) == doctest::Approx(4.5).epsilon(1e-5));

    // Mirrored: stop at 2.5, run free to the left.
    Problem mr;
    mr.J = Interval::whole_line();
    mr.b = PiecewiseFunction::constant(mr.J, 0.0);
    mr.sigma = PiecewiseFunction::constant(mr.J, 1.0);
    mr.f = asym_gain().f.mirrored();
    mr.validate();
    CHECK(green_value_one_sided(make_view(mr), 2.5, 0.0, false) ==
          doctest::Approx(4.25).epsilon(1e-5));
}

TEST_CASE("one-sided quadrature refuses to converge on a divergent rule") {
    // Stopping only at -2 in the box problem: the payoff of (-2, b) rules
    // decreases without a limit as b grows (gain -1 forever on the right).
    const CoeffView cv = make_view(box_gain());
    CHECK_THROWS_AS(green_value_one_sided(cv, -2.0, 0.0, true), NonConvergentError);
}

TEST_CASE("quadrature oracles require driftless undiscounted problems") {
    const CoeffView drift = make_view(box_drift_gain());
    CHECK_THROWS_AS(green_value(drift, -1.0, 1.0, 0.0), PreconditionError);
    const CoeffView disc = make_view(ou_gain());
    CHECK_THROWS_AS(green_value(disc, -1.0, 1.0, 0.0), PreconditionError);
    CHECK_THROWS_AS(green_value_one_sided(drift, -1.0, 0.0, true), PreconditionError);
}

TEST_CASE("random piecewise-constant problems: solver equals quadrature") {
    std::mt19937_64 rng(20260815u);
    for (int trial = 0; trial < 25; ++trial) {
        const Problem pr = random_const_problem(rng);
        const SolveResult res = solve_exact(pr);
        REQUIRE(res.cl.kind == CaseKind::Solvable);
        const auto* ts = std::get_if<TwoSided>(&res.sol);
        REQUIRE(ts);
        const CoeffView cv = make_view(pr);
        for (int i = 1; i < 8; ++i) {
            const double x = ts->x1 + (ts->x2 - ts->x1) * i / 8.0;
            CHECK(ts->V.V(x) ==
                  doctest::Approx(green_value(cv, ts->x1, ts->x2, x)).epsilon(1e-6).scale(1.0));
        }
    }
}

} // TEST_SUITE
