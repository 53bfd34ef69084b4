// Acceptance gate: end-to-end checks of the solver pipeline against
// independently derived reference values.  Each criterion prints one
// PASS/FAIL line; the process exits nonzero if any criterion fails.
// All tolerances are pinned here, next to the checks.

#include "fixtures.hpp"
#include "ostop/mcsim.hpp"
#include "ostop/oracle.hpp"
#include "ostop/shooting.hpp"
#include "ostop/solver.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace ostop;
using namespace fixtures;

namespace {

struct Check {
    std::ostringstream why;
    bool ok = true;

    // close(label, actual, expected, tol): absolute-difference check.
    void close(const std::string& label, double actual, double expected, double tol) {
        if (std::abs(actual - expected) <= tol) return;
        ok = false;
        why << "  " << label << " = " << actual << ", expected " << expected << " +/- " << tol
            << "\n";
    }
    void require(const std::string& label, bool cond) {
        if (cond) return;
        ok = false;
        why << "  " << label << " failed\n";
    }
    void bound(const std::string& label, double actual, double max) {
        if (actual <= max) return;
        ok = false;
        why << "  " << label << " = " << actual << " exceeds " << max << "\n";
    }
};

TwoSided as_two_sided(const SolveResult& r) { return std::get<TwoSided>(r.sol); }

// --------------------------------------------------------------------------
// 1. Two-sided solution of the unit box gain.
void c1_box(Check& c) {
    const SolveResult res = solve_exact(box_gain());
    c.require("kind == two-sided", res.cl.kind == CaseKind::Solvable);
    const TwoSided ts = as_two_sided(res);
    c.close("x1", ts.x1, -2.0, 1e-8);
    c.close("x2", ts.x2, 2.0, 1e-8);
    c.close("cstar", ts.cstar, 0.0, 1e-10);
    c.close("V(0)", ts.V.V(0.0), 2.0, 1e-8);
}

// 2. Box-gain family: boundaries at +/-(1 + 1/kappa).
void c2_box_family(Check& c) {
    for (double kappa : {0.5, 1.0, 2.0, 4.0}) {
        const TwoSided ts = as_two_sided(solve_exact(box_gain(kappa)));
        const double r = 1.0 + 1.0 / kappa;
        std::ostringstream tag;
        tag << "kappa=" << kappa << " ";
        c.close(tag.str() + "x1", ts.x1, -r, 1e-8);
        c.close(tag.str() + "x2", ts.x2, r, 1e-8);
    }
}

// 3. Equal tail levels: no optimal rule, finite value, and an exit-rule
//    sequence whose payoffs increase to the value.
void c3_no_optimum(Check& c) {
    const HTransform ht = HTransform::build(exp_tail_gain());
    const Classification cl = classify(ht);
    c.require("kind == no-optimum", cl.kind == CaseKind::NoOptimum);
    c.close("m", cl.m.value_or(1e9), 0.0, 1e-12);
    c.close("positive tail mass", cl.Kplus->value(), 3.0, 1e-8);
    c.close("negative tail mass", cl.Kminus->value(), 3.0, 1e-8);

    const NoOptimum no = std::get<NoOptimum>(solve_exact(exp_tail_gain()).sol);
    c.require("value finite", !no.infinite && no.V != nullptr);
    c.close("V*(0)", no.V->V(0.0), 3.0, 1e-6);

    SequencePlan plan = make_sequence(ht, cl, SequencePlan::Mode::AsymptoticallyOptimal);
    double prev = -1.0, last = 0.0;
    bool increasing = true;
    for (int n = 1; n <= 20; ++n) {
        const SequencePlan::Item it = plan.item(n);
        last = payoff_two_sided(ht, it.a, it.b).U.V(0.0);
        increasing = increasing && last > prev && last <= 3.0 + 1e-9;
        prev = last;
    }
    c.require("payoffs strictly increasing, <= value", increasing);
    c.close("payoff at n=20", last, 3.0, 1e-3);
}

// 4. Asymmetric tails: one-sided left rule, cross-checked by quadrature.
void c4_one_sided(Check& c) {
    const SolveResult res = solve_exact(asym_gain());
    c.require("kind == one-sided-left", res.cl.kind == CaseKind::OneSidedLeft);
    const OneSidedLeft& os = std::get<OneSidedLeft>(res.sol);
    c.close("alpha", os.alpha, -2.5, 1e-8);
    c.close("V(0)", os.V.V(0.0), 4.25, 1e-6);
    const CoeffView cv = make_view(asym_gain());
    for (double x : {-1.0, 0.0, 0.5}) {
        std::ostringstream tag;
        tag << "quadrature limit at x=" << x;
        c.close(tag.str(), green_value_one_sided(cv, os.alpha, x, true), os.V.V(x), 1e-5);
    }
}

// 5. Heavy positive tail: infinite value, and a pathological sequence of
//    ever-larger rules whose payoffs stay below the finite tail mass.
void c5_pathological(Check& c) {
    const HTransform ht = HTransform::build(heavy_tail_gain());
    const Classification cl = classify(ht);
    c.require("kind == no-optimum", cl.kind == CaseKind::NoOptimum);
    c.require("positive mass infinite", cl.Kplus->is_pos_inf());
    c.close("negative mass", cl.Kminus->value(), 5.25, 1e-6);
    c.require("value infinite", std::get<NoOptimum>(solve_exact(heavy_tail_gain()).sol).infinite);

    SequencePlan plan = make_sequence(ht, cl, SequencePlan::Mode::Pathological);
    double prev_a = 0.0;
    for (int n = 1; n <= 10; ++n) {
        const SequencePlan::Item it = plan.item(n);
        c.require("rule expands leftward", n == 1 || it.a < prev_a);
        prev_a = it.a;
        const Payoff po = payoff_two_sided(ht, it.a, it.b);
        double sup = 0.0;
        for (int i = 0; i <= 4000; ++i)
            sup = std::max(sup, po.U.V(it.a + (it.b - it.a) * i / 4000.0));
        std::ostringstream tag;
        tag << "sup payoff, rule " << n;
        c.bound(tag.str(), sup, 5.25 + 1e-6);
    }
}

// 6. Solver vs quadrature on 200 random piecewise-constant problems, plus a
//    dense grid comparison of the exit payoff on fixed rules.
void c6_oracle_equivalence(Check& c) {
    std::mt19937_64 rng(0x5eedbeefULL);
    for (int trial = 0; trial < 200; ++trial) {
        const Problem pr = random_const_problem(rng);
        const SolveResult res = solve_exact(pr);
        if (res.cl.kind != CaseKind::Solvable) {
            std::ostringstream tag;
            tag << "trial " << trial << " solvable";
            c.require(tag.str(), false);
            continue;
        }
        const TwoSided ts = as_two_sided(res);
        const CoeffView cv = make_view(pr);
        double worst = 0.0;
        for (int i = 1; i < 8; ++i) {
            const double x = ts.x1 + (ts.x2 - ts.x1) * i / 8.0;
            worst = std::max(worst, std::abs(ts.V.V(x) - green_value(cv, ts.x1, ts.x2, x)));
        }
        if (worst > 1e-6) {
            std::ostringstream tag;
            tag << "trial " << trial << " |V - quadrature|";
            c.bound(tag.str(), worst, 1e-6);
        }
        if (trial < 3) {
            // Suboptimal rule, 21-point grid.
            const double a = ts.x1 + 0.15 * (ts.x2 - ts.x1);
            const double b = ts.x2 - 0.2 * (ts.x2 - ts.x1);
            const Payoff po = payoff_two_sided(HTransform::build(pr), a, b);
            double w2 = 0.0;
            for (int i = 0; i <= 20; ++i) {
                const double x = a + (b - a) * i / 20.0;
                w2 = std::max(w2, std::abs(po.U.V(x) - green_value(cv, a, b, x)));
            }
            std::ostringstream tag;
            tag << "trial " << trial << " exit payoff vs quadrature (21 pts)";
            c.bound(tag.str(), w2, 1e-6);
        }
    }
}

// 7. Shooting agrees with the exact route; refuses problems without a
//    two-sided rule; both routes agree through the drift transform.
void c7_shooting_vs_exact(Check& c) {
    const TwoSided ts = as_two_sided(solve_exact(box_gain()));
    const ShootingSolution sh = solve_shooting(make_view(box_gain()));
    c.close("box x1 (shooting vs exact)", sh.x1, ts.x1, 1e-6);
    c.close("box x2 (shooting vs exact)", sh.x2, ts.x2, 1e-6);
    c.require("box validation", sh.report.pass);

    bool threw = false;
    try {
        solve_shooting(make_view(exp_tail_gain()));
    } catch (const NoRootError&) {
        threw = true;
    }
    c.require("equal tails: no smooth-fit root", threw);

    const TransformedProblem tp = transform_problem(box_drift_gain());
    c.require("drift variant transforms symbolically", tp.symbolic.has_value());
    const TwoSided te = as_two_sided(solve_exact(*tp.symbolic));
    const ShootingSolution ss = solve_shooting(tp.view);
    const double x1e = tp.map.inverse(te.x1), x2e = tp.map.inverse(te.x2);
    const double x1s = tp.map.inverse(ss.x1), x2s = tp.map.inverse(ss.x2);
    c.close("drift variant x1 (routes)", x1s, x1e, 1e-5);
    c.close("drift variant x2 (routes)", x2s, x2e, 1e-5);
    const ValueFunction ve = pull_back(tp.map, te.V);
    const ValueFunction vs = pull_back(tp.map, ss.V);
    c.close("drift variant V(0) (routes)", vs.V(0.0), ve.V(0.0), 1e-5);
}

// 8. Discounted mean-reverting problem: symmetric boundaries, tight ODE
//    residuals, and Monte Carlo agreement at three starting points.
void c8_discounted(Check& c) {
    const Problem pr = ou_gain();
    const ShootingSolution sol = solve_shooting(make_view(pr));
    c.bound("|x1 + x2| (symmetry)", std::abs(sol.x1 + sol.x2), 1e-6);
    c.require("validation", sol.report.pass);
    c.bound("ODE residual", sol.report.residual_ode,
            ValidationReport::kResidualTol * sol.report.scale);

    const TransformedProblem tp = transform_problem(pr);
    McOptions opt;
    opt.n_paths = 100000;
    opt.step = 1e-3;
    opt.seed = 42;
    const StopRule rule = StopRule::two_sided(tp.map.p(sol.x1), tp.map.p(sol.x2));
    for (double x : {0.0, -0.5, 0.5}) {
        const Estimate est = simulate_payoff(tp.view, tp.map.p(x), rule, opt);
        std::ostringstream tag;
        tag << "|z| at x=" << x;
        c.bound(tag.str(), std::abs(zscore(est, sol.V.V(x))), 3.0);
    }
}

// 9. Monte Carlo calibration on the box problem: 3-sigma coverage over 20
//    seeds and step-halving consistency.
void c9_mc_calibration(Check& c) {
    const CoeffView cv = make_view(box_gain());
    const StopRule rule = StopRule::two_sided(-2.0, 2.0);
    int covered = 0;
    McOptions opt;
    opt.n_paths = 10000;
    opt.step = 1e-3;
    for (int seed = 0; seed < 20; ++seed) {
        opt.seed = static_cast<std::uint64_t>(seed);
        const Estimate e = simulate_payoff(cv, 0.0, rule, opt);
        if (std::abs(e.mean - 2.0) <= 3.0 * e.std_error) ++covered;
    }
    c.require("3-sigma coverage >= 18/20 (got " + std::to_string(covered) + ")", covered >= 18);

    opt.seed = 0;
    opt.step = 1e-3;
    const Estimate e1 = simulate_payoff(cv, 0.0, rule, opt);
    opt.step = 5e-4;
    const Estimate e2 = simulate_payoff(cv, 0.0, rule, opt);
    const double comb = std::sqrt(e1.std_error * e1.std_error + e2.std_error * e2.std_error);
    c.bound("step-halving |delta|", std::abs(e1.mean - e2.mean), 4.0 * comb);
}

// 10. The validator accepts the exact solution, rejects 1e-3 boundary
//     perturbations by name, and catches a singular candidate through the
//     absolute-continuity check alone.
void c10_validation(Check& c) {
    const Problem pr = box_gain();
    const HTransform ht = HTransform::build(pr);
    const CoeffView cv = make_view(pr);
    const ValueFunction V = build_value(ht, find_cstar(ht, classify(ht)));
    c.require("exact solution passes", validate_solution(cv, V, V.x1, V.x2).pass);

    const double d = 1e-3;
    const double pert[4][2] = {
        {-2.0 + d, 2.0 + d}, {-2.0 - d, 2.0}, {-2.0, 2.0 - d}, {-2.0 + d, 2.0 - d}};
    for (const auto& ab : pert) {
        const Payoff po = payoff_two_sided(ht, ab[0], ab[1]);
        const ValidationReport rep = validate_solution(cv, po.U, ab[0], ab[1]);
        std::ostringstream tag;
        tag << "perturbed rule (" << ab[0] << ", " << ab[1] << ")";
        c.require(tag.str() + " rejected", !rep.pass);
        c.require(tag.str() + " smooth-fit flagged",
                  rep.smooth_fit > ValidationReport::kSmoothFitTol * rep.scale);
    }

    CoeffView flat;
    flat.J = Interval{ExtReal(-1.0), ExtReal(2.0)};
    flat.b = [](double) { return 0.0; };
    flat.sigma_sq = [](double) { return 1.0; };
    flat.f = [](double) { return 0.0; };
    ValueFunction tent;
    tent.x1 = 0.0;
    tent.x2 = 1.0;
    tent.V = [](double x) {
        if (x <= 0.0 || x >= 1.0) return 0.0;
        return x <= 0.5 ? cantor_staircase(2.0 * x) : cantor_staircase(2.0 - 2.0 * x);
    };
    tent.dV = [](double) { return 0.0; };
    const ValidationReport rep = validate_solution(flat, tent, 0.0, 1.0);
    c.require("singular candidate rejected", !rep.pass);
    c.require("absolute continuity flagged",
              rep.abs_continuity > ValidationReport::kAbsContTol * rep.scale);
    c.require("boundary within tolerance",
              rep.boundary <= ValidationReport::kBoundaryTol * rep.scale);
    c.require("smooth fit within tolerance",
              rep.smooth_fit <= ValidationReport::kSmoothFitTol * rep.scale);
    c.require("ODE residual within tolerance",
              rep.residual_ode <= ValidationReport::kResidualTol * rep.scale);
    c.require("positivity within tolerance",
              rep.positivity <= ValidationReport::kPositivityTol * rep.scale);
}

struct Criterion {
    const char* name;
    std::function<void(Check&)> run;
    double time_limit; // seconds
};

} // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"two-sided box rule: boundaries, level, value", c1_box, 1.0},
        {"box family: boundaries scale as 1 + 1/kappa", c2_box_family, 5.0},
        {"equal tails: finite value, increasing rule sequence", c3_no_optimum, 5.0},
        {"asymmetric tails: one-sided rule vs quadrature limit", c4_one_sided, 30.0},
        {"heavy tail: infinite value, bounded pathological payoffs", c5_pathological, 30.0},
        {"200 random problems: solver equals quadrature", c6_oracle_equivalence, 10.0},
        {"shooting route agrees with the exact route", c7_shooting_vs_exact, 60.0},
        {"discounted mean-reverting problem: ODE + Monte Carlo", c8_discounted, 120.0},
        {"Monte Carlo calibration: coverage and step halving", c9_mc_calibration, 120.0},
        {"validator: accepts exact, rejects perturbed and singular", c10_validation, 30.0},
    };

    int failures = 0;
    for (size_t i = 0; i < criteria.size(); ++i) {
        const Criterion& cr = criteria[i];
        Check ck;
        std::string error;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            cr.run(ck);
        } catch (const std::exception& e) {
            ck.ok = false;
            ck.why << "  exception: " << e.what() << "\n";
        }
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (dt > cr.time_limit) {
            ck.ok = false;
            ck.why << "  runtime " << dt << "s exceeds limit " << cr.time_limit << "s\n";
        }
        std::printf("[%2zu] %-55s %s (%.2fs)\n", i + 1, cr.name, ck.ok ? "PASS" : "FAIL", dt);
        if (!ck.ok) {
            std::printf("%s", ck.why.str().c_str());
            ++failures;
        }
    }
    if (failures == 0) {
        std::printf("all %zu acceptance criteria passed\n", criteria.size());
        return 0;
    }
    std::printf("%d acceptance criteria FAILED\n", failures);
    return 1;
}
