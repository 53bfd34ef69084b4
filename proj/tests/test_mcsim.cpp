#include "fixtures.hpp"
#include "ostop/mcsim.hpp"
#include "ostop/oracle.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace ostop;
using namespace fixtures;

TEST_SUITE("mcsim") {

TEST_CASE("counter-based normal stream is deterministic per (seed, path)") {
    PathRng a(42, 7), b(42, 7), c(42, 8), d(43, 7);
    bool differs_c = false, differs_d = false;
    for (int i = 0; i < 64; ++i) {
        const double va = a.normal();
        CHECK(va == b.normal());
        differs_c = differs_c || va != c.normal();
        differs_d = differs_d || va != d.normal();
        CHECK(std::isfinite(va));
    }
    CHECK(differs_c);
    CHECK(differs_d);

    PathRng u(1, 1);
    std::set<double> seen;
    for (int i = 0; i < 512; ++i) {
        const double v = u.uniform();
        CHECK(v > 0.0);
        CHECK(v < 1.0);
        seen.insert(v);
    }
    CHECK(seen.size() > 500); // essentially no collisions
}

TEST_CASE("z-score") {
    Estimate e;
    e.mean = 1.5;
    e.std_error = 0.5;
    CHECK(zscore(e, 1.0) == doctest::Approx(1.0));
    CHECK(zscore(e, 1.5) == doctest::Approx(0.0).scale(1.0));
    CHECK(zscore(e, 2.5) == doctest::Approx(-2.0)); // signed: estimate below reference
}

TEST_CASE("simulation is deterministic in the seed") {
    const CoeffView cv = make_view(box_gain());
    McOptions opt;
    opt.n_paths = 400;
    opt.step = 5e-3;
    opt.seed = 9001;
    const Estimate e1 = simulate_payoff(cv, 0.0, StopRule::two_sided(-2.0, 2.0), opt);
    const Estimate e2 = simulate_payoff(cv, 0.0, StopRule::two_sided(-2.0, 2.0), opt);
    CHECK(e1.mean == e2.mean);
    CHECK(e1.std_error == e2.std_error);
    opt.seed = 9002;
    const Estimate e3 = simulate_payoff(cv, 0.0, StopRule::two_sided(-2.0, 2.0), opt);
    CHECK(e1.mean != e3.mean);
}

TEST_CASE("start on or outside the barriers pays exactly zero") {
    const CoeffView cv = make_view(box_gain());
    McOptions opt;
    opt.n_paths = 16;
    for (double x0 : {-2.0, 2.0, -3.5, 6.0}) {
        const Estimate e = simulate_payoff(cv, x0, StopRule::two_sided(-2.0, 2.0), opt);
        CHECK(e.mean == 0.0);
        CHECK(e.std_error == 0.0);
        CHECK(e.mean_exit_time == 0.0);
    }
}

TEST_CASE("exit-rule preconditions") {
    const CoeffView cv = make_view(box_gain());
    StopRule no_barrier;
    CHECK_THROWS_AS(simulate_payoff(cv, 0.0, no_barrier), PreconditionError);
    StopRule uncapped;
    uncapped.lower = -2.5;
    CHECK_THROWS_AS(simulate_payoff(cv, 0.0, uncapped), PreconditionError);
    McOptions odd;
    odd.n_paths = 3;
    odd.antithetic = true;
    CHECK_THROWS_AS(simulate_payoff(cv, 0.0, StopRule::two_sided(-2.0, 2.0), odd),
                    PreconditionError);
}

TEST_CASE("two-sided box rule: estimate brackets the exact value") {
    const CoeffView cv = make_view(box_gain());
    McOptions opt;
    opt.n_paths = 10000;
    opt.step = 2e-3;
    opt.seed = 31337;
    const Estimate e = simulate_payoff(cv, 0.0, StopRule::two_sided(-2.0, 2.0), opt);
    CHECK(e.truncated_fraction == 0.0);
    CHECK(e.std_error > 0.0);
    CHECK(e.std_error < 0.05);
    CHECK(std::abs(e.mean - 2.0) <= 4.0 * e.std_error + 0.01);
    // sigma == 1: the physical clock and the Brownian clock coincide, and the
    // expected exit clock from (-2, 2) started at 0 is (0-(-2))*(2-0) = 4.
    CHECK(e.mean_exit_time == doctest::Approx(e.mean_bm_time).epsilon(1e-12));
    CHECK(e.mean_bm_time == doctest::Approx(4.0).epsilon(0.06));
}

TEST_CASE("antithetic pairing agrees with plain sampling") {
    const CoeffView cv = make_view(box_gain());
    McOptions plain;
    plain.n_paths = 6000;
    plain.step = 3e-3;
    plain.seed = 7;
    const Estimate ep = simulate_payoff(cv, 0.5, StopRule::two_sided(-2.0, 2.0), plain);
    McOptions anti = plain;
    anti.antithetic = true;
    const Estimate ea = simulate_payoff(cv, 0.5, StopRule::two_sided(-2.0, 2.0), anti);
    CHECK(std::abs(ep.mean - ea.mean) <= 4.0 * (ep.std_error + ea.std_error) + 0.02);
    CHECK(ea.n_paths == 6000);
}

TEST_CASE("time change handles a state-dependent diffusion coefficient") {
    // Natural-scale view of the drifted box problem: sigma_tilde(y) = 1 + y.
    const TransformedProblem tp = transform_problem(box_drift_gain());
    const double a = std::exp(-2.0) - 1.0, b = std::exp(2.0) - 1.0;
    const double ref = green_value(tp.view, a, b, 0.0);
    McOptions opt;
    opt.n_paths = 6000;
    opt.step = 2e-3;
    opt.seed = 555;
    const Estimate e = simulate_payoff(tp.view, 0.0, StopRule::two_sided(a, b), opt);
    CHECK(std::abs(e.mean - ref) <= 4.0 * e.std_error + 0.02);
    // Physical time runs slower than the Brownian clock where sigma > 1.
    CHECK(e.mean_exit_time != e.mean_bm_time);
}

TEST_CASE("one-sided rule with horizon: truncation biases downward only") {
    // One-sided left rule at -2.5 for the asymmetric gain; V(0) = 4.25 and
    // sup V = 4.5.  Truncated paths forfeit a nonnegative remainder, so the
    // estimate sits in [V - fraction * sup V - noise, V + noise].
    const CoeffView cv = make_view(asym_gain());
    McOptions opt;
    opt.n_paths = 2000;
    opt.step = 0.02;
    opt.seed = 205;
    const Estimate e = simulate_payoff(cv, 0.0, StopRule::left_exit(-2.5, 200.0), opt);
    CHECK(e.truncated_fraction > 0.0);
    CHECK(e.truncated_fraction < 0.5);
    CHECK(e.mean <= 4.25 + 3.0 * e.std_error + 0.1);
    CHECK(e.mean >= 4.25 - e.truncated_fraction * 4.5 - 3.0 * e.std_error - 0.1);
}

} // TEST_SUITE
