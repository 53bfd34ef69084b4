#include "ostop/cli.hpp"

#include "ostop/mcsim.hpp"
#include "ostop/oracle.hpp"
#include "ostop/problem_io.hpp"
#include "ostop/shooting.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <tuple>
#include <utility>

namespace ostop {

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitVerification = 2;
constexpr int kExitNoRule = 3;
constexpr int kExitUsage = 4;

// Cross-check thresholds used by `verify` (relative to max(1, |value|)).
constexpr double kOracleTolTwoSided = 1e-6;
constexpr double kOracleTolOneSided = 1e-5;
constexpr double kMcZMax = 3.0;

json num_or_inf(double v) {
    if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
    return json(v);
}
json ext_json(const ExtReal& e) { return num_or_inf(e.raw()); }

const char* kind_str(CaseKind k) {
    switch (k) {
    case CaseKind::Solvable: return "two_sided";
    case CaseKind::OneSidedLeft: return "one_sided_left";
    case CaseKind::OneSidedRight: return "one_sided_right";
    case CaseKind::NoOptimum: return "no_optimum";
    }
    return "?";
}
const char* cond_str(CondState c) {
    switch (c) {
    case CondState::Holds: return "holds";
    case CondState::Fails: return "fails";
    case CondState::Vacuous: return "vacuous";
    }
    return "?";
}

json classification_json(const Classification& cl) {
    json j;
    j["kind"] = kind_str(cl.kind);
    j["h_limit_hi"] = ext_json(cl.h_inf);
    j["h_limit_lo"] = ext_json(cl.h_minf);
    j["conditions"] = {{"tail_levels", cl.a1 ? "holds" : "fails"},
                       {"right_branch", cond_str(cl.a2)},
                       {"left_branch", cond_str(cl.a3)}};
    if (cl.a2_integral) j["right_branch_integral"] = ext_json(*cl.a2_integral);
    if (cl.a3_integral) j["left_branch_integral"] = ext_json(*cl.a3_integral);
    if (cl.alpha_star) j["alpha_star"] = *cl.alpha_star;
    if (cl.beta_star) j["beta_star"] = *cl.beta_star;
    j["level_window"] = {cl.m1, cl.m2};
    if (cl.m) j["m"] = *cl.m;
    if (cl.gamma_m) j["gamma_m"] = *cl.gamma_m;
    if (cl.Kplus) j["mass_positive"] = ext_json(*cl.Kplus);
    if (cl.Kminus) j["mass_negative"] = ext_json(*cl.Kminus);
    j["boundary_degenerate"] = cl.boundary_degenerate;
    return j;
}

json validation_json(const ValidationReport& r) {
    json j;
    j["pass"] = r.pass;
    j["scale"] = r.scale;
    j["boundary"] = r.boundary;
    j["smooth_fit"] = r.smooth_fit;
    j["residual_ode"] = r.residual_ode;
    j["abs_continuity"] = r.abs_continuity;
    j["positivity"] = r.positivity;
    j["inclusion"] = r.inclusion;
    j["nontrivial"] = r.nontrivial;
    j["tolerances"] = {{"boundary", ValidationReport::kBoundaryTol},
                       {"smooth_fit", ValidationReport::kSmoothFitTol},
                       {"residual_ode", ValidationReport::kResidualTol},
                       {"abs_continuity", ValidationReport::kAbsContTol},
                       {"positivity", ValidationReport::kPositivityTol}};
    if (!r.pass) j["failed"] = r.failure_summary();
    return j;
}

Problem load_validated(const std::string& path) {
    Problem pr = load_problem_file(path);
    pr.validate();
    return pr;
}

void emit(const json& j, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw ParseError("cannot open output file: " + out_path);
    out << j.dump(2) << "\n";
}

void emit_text(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw ParseError("cannot open output file: " + out_path);
    out << text;
}

std::string csv_num(double v) {
    std::ostringstream ss;
    ss << std::setprecision(17) << v;
    return ss.str();
}

// ---------------------------------------------------------------------------
// Unified solve pipeline shared by solve / verify / curve.

struct Solved {
    std::string route;
    std::optional<Classification> cl;      // exact routes
    std::optional<Problem> solve_problem;  // problem actually handed to solve_exact
    std::string kind;                      // two_sided / one_sided_* / no_optimum
    // Boundaries and value in original coordinates.
    double x1 = 0.0, x2 = 0.0;
    std::optional<double> cstar, level;
    double residual = 0.0; // |area(c*)| (exact) or smooth-fit slope (shooting)
    bool boundary_degenerate = false;
    std::optional<ValueFunction> V;
    // No-optimum payload.
    std::optional<double> m;
    ExtReal Kplus, Kminus;
    bool infinite = false;
    // Solving-frame data (natural scale except for the discounted drift route).
    bool solved_in_natural = true;
    CoeffView solve_view;
    std::optional<ValueFunction> V_solve;
    double y1s = 0.0, y2s = 0.0; // boundaries in the solving frame
    std::optional<ValidationReport> report; // embedded by the shooting routes
    std::shared_ptr<Trajectory> traj;
    // Natural-scale frame for Monte Carlo / quadrature cross-checks.
    ScaleTransform map;
    CoeffView nat_view;
    double y1n = 0.0, y2n = 0.0; // boundaries in natural scale
};

Solved run_solve(const Problem& pr) {
    Solved s;
    TransformedProblem tp = transform_problem(pr);
    s.map = tp.map;
    s.nat_view = tp.view;

    if (pr.lambda == 0.0) {
        s.solve_view = tp.view;
        s.solved_in_natural = true;
        if (tp.symbolic) {
            s.route = tp.identity ? "exact" : "scale-transform+exact";
            s.solve_problem = *tp.symbolic;
            SolveResult res = solve_exact(*tp.symbolic);
            s.cl = res.cl;
            const Interval& img = tp.symbolic->J;
            if (const auto* ts = std::get_if<TwoSided>(&res.sol)) {
                s.kind = "two_sided";
                s.y1s = ts->x1;
                s.y2s = ts->x2;
                s.cstar = ts->cstar;
                s.residual = ts->area_residual;
                s.boundary_degenerate = ts->boundary_degenerate;
                s.V_solve = ts->V;
            } else if (const auto* ol = std::get_if<OneSidedLeft>(&res.sol)) {
                s.kind = "one_sided_left";
                s.y1s = ol->alpha;
                s.y2s = img.hi.raw();
                s.level = ol->level;
                s.V_solve = ol->V;
            } else if (const auto* orr = std::get_if<OneSidedRight>(&res.sol)) {
                s.kind = "one_sided_right";
                s.y1s = img.lo.raw();
                s.y2s = orr->beta;
                s.level = orr->level;
                s.V_solve = orr->V;
            } else {
                const auto& no = std::get<NoOptimum>(res.sol);
                s.kind = "no_optimum";
                s.m = no.m;
                s.Kplus = no.Kplus;
                s.Kminus = no.Kminus;
                s.infinite = no.infinite;
                s.y1s = img.lo.raw();
                s.y2s = img.hi.raw();
                if (no.V) s.V_solve = *no.V;
            }
        } else {
            s.route = "scale-transform+shooting";
            ShootingSolution sh = solve_shooting(tp.view);
            s.kind = "two_sided";
            s.y1s = sh.x1;
            s.y2s = sh.x2;
            s.residual = sh.resid;
            s.V_solve = sh.V;
            s.report = sh.report;
            s.traj = std::make_shared<Trajectory>(std::move(sh.traj));
        }
        // Pull the value function back to original coordinates.
        if (s.V_solve) {
            s.V = pull_back(s.map, *s.V_solve);
            s.x1 = s.V->x1;
            s.x2 = s.V->x2;
        } else {
            s.x1 = pr.J.lo.raw();
            s.x2 = pr.J.hi.raw();
        }
        s.y1n = s.y1s;
        s.y2n = s.y2s;
    } else {
        // Discounted: shoot the value ODE directly in original coordinates
        // (the integrator handles the drift term); the natural-scale frame is
        // kept for Monte Carlo cross-checks only.
        s.solve_view = make_view(pr);
        s.solved_in_natural = s.map.is_identity();
        s.route = s.solved_in_natural ? "shooting" : "shooting-original-coordinates";
        ShootingSolution sh = solve_shooting(s.solve_view);
        s.kind = "two_sided";
        s.x1 = sh.x1;
        s.x2 = sh.x2;
        s.y1s = sh.x1;
        s.y2s = sh.x2;
        s.residual = sh.resid;
        s.V = sh.V;
        s.V_solve = sh.V;
        s.report = sh.report;
        s.traj = std::make_shared<Trajectory>(std::move(sh.traj));
        s.y1n = s.map.p(sh.x1);
        s.y2n = s.map.p(sh.x2);
    }
    return s;
}

json solution_json(const Problem& pr, const Solved& s, const std::vector<double>& ats) {
    json j;
    j["route"] = s.route;
    j["kind"] = s.kind;
    if (s.cl) j["classification"] = classification_json(*s.cl);
    if (s.kind == "two_sided") {
        j["x1"] = s.x1;
        j["x2"] = s.x2;
        if (s.cstar) j["cstar"] = *s.cstar;
        j["residual"] = s.residual;
        if (s.boundary_degenerate) j["boundary_degenerate"] = true;
        if (!s.map.is_identity()) j["natural_boundaries"] = {s.y1n, s.y2n};
    } else if (s.kind == "one_sided_left") {
        j["x1"] = num_or_inf(s.x1);
        if (s.level) j["level"] = *s.level;
    } else if (s.kind == "one_sided_right") {
        j["x2"] = num_or_inf(s.x2);
        if (s.level) j["level"] = *s.level;
    } else if (s.kind == "no_optimum") {
        j["m"] = s.m ? json(*s.m) : json();
        j["mass_positive"] = ext_json(s.Kplus);
        j["mass_negative"] = ext_json(s.Kminus);
        j["value_infinite"] = s.infinite;
    }
    if (s.report) j["validation"] = validation_json(*s.report);
    json vals = json::array();
    for (double x : ats) {
        json row;
        row["x"] = x;
        if (s.infinite) {
            row["V"] = "inf";
        } else if (s.V) {
            row["V"] = s.V->V(x);
            row["dV"] = s.V->dV(x);
        }
        vals.push_back(std::move(row));
    }
    if (!vals.empty()) j["values"] = std::move(vals);
    (void)pr;
    return j;
}

double default_probe(const Problem& pr) {
    const SignTemplate& sh = *pr.shape;
    return 0.5 * (sh.x1l + sh.x2r);
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_classify(const std::string& path, const std::string& out_path) {
    Problem pr = load_validated(path);
    if (pr.lambda != 0.0)
        throw PreconditionError("classification applies to undiscounted problems only");
    json j;
    if (pr.driftless()) {
        j = classification_json(classify(HTransform::build(pr)));
        j["route"] = "exact";
    } else {
        TransformedProblem tp = transform_problem(pr);
        if (!tp.symbolic)
            throw SymbolicError("classification of a problem with drift needs coefficients whose "
                                "natural-scale reduction stays in closed form");
        j = classification_json(classify(HTransform::build(*tp.symbolic)));
        j["route"] = "scale-transform+exact";
        j["note"] = "classification computed in natural scale";
    }
    emit(j, out_path);
    return kExitOk;
}

int cmd_solve(const std::string& path, std::vector<double> ats, int sequence_n,
              bool pathological, const std::string& out_path) {
    Problem pr = load_validated(path);
    Solved s = run_solve(pr);
    if (ats.empty()) ats.push_back(default_probe(pr));
    json j = solution_json(pr, s, ats);

    if (sequence_n > 0) {
        if (s.kind != "no_optimum")
            throw PreconditionError("--sequence applies only to problems without an optimal rule");
        if (!s.solve_problem)
            throw PreconditionError("--sequence needs the closed-form solve route");
        HTransform ht = HTransform::build(*s.solve_problem);
        SequencePlan plan = make_sequence(ht, *s.cl,
                                          pathological ? SequencePlan::Mode::Pathological
                                                       : SequencePlan::Mode::AsymptoticallyOptimal);
        json items = json::array();
        const double probe = s.map.p(ats.front());
        for (int n = 1; n <= sequence_n; ++n) {
            SequencePlan::Item it = plan.item(n);
            Payoff po = payoff_two_sided(ht, it.a, it.b);
            json row;
            row["n"] = n;
            row["a"] = s.map.is_identity() ? it.a : s.map.inverse(it.a);
            row["b"] = s.map.is_identity() ? it.b : s.map.inverse(it.b);
            row["level"] = it.c;
            row["payoff_at_probe"] = po.U.V(probe);
            items.push_back(std::move(row));
        }
        j["sequence"] = {{"mode", pathological ? "pathological" : "asymptotically_optimal"},
                         {"probe", ats.front()},
                         {"items", std::move(items)}};
    }
    emit(j, out_path);
    return s.kind == "no_optimum" ? kExitNoRule : kExitOk;
}

int cmd_payoff(const std::string& path, double a, double b, std::vector<double> ats,
               const std::string& out_path) {
    Problem pr = load_validated(path);
    if (pr.lambda != 0.0)
        throw PreconditionError("payoff evaluation applies to undiscounted problems only "
                                "(use `verify --mc` for discounted rules)");
    if (!(a < b)) throw PreconditionError("payoff needs a < b");
    if (!pr.J.contains(a) || !pr.J.contains(b))
        throw PreconditionError("exit boundaries must lie inside the state interval");
    TransformedProblem tp = transform_problem(pr);
    if (ats.empty()) ats.push_back(0.5 * (a + b));

    json j;
    j["a"] = a;
    j["b"] = b;
    json vals = json::array();
    if (tp.symbolic) {
        HTransform ht = HTransform::build(*tp.symbolic);
        const double ya = tp.map.p(a), yb = tp.map.p(b);
        Payoff po = payoff_two_sided(ht, ya, yb);
        ValueFunction U = pull_back(tp.map, po.U);
        j["method"] = "exact";
        j["level"] = po.c; // mean of h over the natural-scale exit interval
        for (double x : ats) {
            vals.push_back({{"x", x}, {"U", U.V(x)}, {"dU", U.dV(x)}});
        }
    } else {
        j["method"] = "quadrature";
        const double ya = tp.map.p(a), yb = tp.map.p(b);
        for (double x : ats) {
            vals.push_back({{"x", x}, {"U", green_value(tp.view, ya, yb, tp.map.p(x))}});
        }
    }
    j["values"] = std::move(vals);
    emit(j, out_path);
    return kExitOk;
}

int cmd_shoot(const std::string& path, double x1, double tol, const std::string& csv_path,
              const std::string& out_path) {
    Problem pr = load_validated(path);
    CoeffView cv = make_view(pr);
    ShootOptions so;
    so.tol = tol;
    ShootOutcome out = shoot(cv, x1, so);
    json j;
    j["x1"] = x1;
    switch (out.kind) {
    case ShootOutcome::Kind::Hit:
        j["outcome"] = "hit";
        j["x2"] = out.x2;
        j["smooth_fit_residual"] = out.resid;
        break;
    case ShootOutcome::Kind::NoReturn: j["outcome"] = "no_return"; break;
    case ShootOutcome::Kind::ImmediateDrop: j["outcome"] = "immediate_drop"; break;
    case ShootOutcome::Kind::Inconclusive:
        j["outcome"] = "inconclusive";
        j["cap_x"] = out.x2;
        j["cap_slope"] = out.resid;
        break;
    }
    if (!csv_path.empty()) {
        std::ostringstream ss;
        ss << "x,V,dV,d2V\n";
        for (const Trajectory::Node& n : out.traj.nodes)
            ss << csv_num(n.x) << ',' << csv_num(n.V) << ',' << csv_num(n.W) << ','
               << csv_num(n.dW) << '\n';
        emit_text(ss.str(), csv_path);
        j["trajectory_csv"] = csv_path;
        j["trajectory_nodes"] = out.traj.nodes.size();
    }
    emit(j, out_path);
    return kExitOk;
}

struct McArgs {
    bool enabled = false;
    McOptions opt;
    std::optional<double> horizon;
};

int cmd_verify(const std::string& path, std::vector<double> ats, const McArgs& mc,
               const std::string& out_path) {
    Problem pr = load_validated(path);
    Solved s = run_solve(pr);
    if (ats.empty()) ats.push_back(default_probe(pr));

    json j = solution_json(pr, s, ats);
    if (s.kind == "no_optimum") {
        j["note"] = "no optimal rule exists; nothing to verify";
        emit(j, out_path);
        return kExitNoRule;
    }
    bool all_pass = true;

    // 1. Residual validation in the frame the problem was solved in.
    if (s.kind == "two_sided") {
        ValidationReport r = s.report ? *s.report
                                      : validate_solution(s.solve_view, *s.V_solve, s.y1s, s.y2s);
        j["validation"] = validation_json(r);
        all_pass = all_pass && r.pass;
    } else {
        // One-sided rules have a single boundary; check value and slope there.
        const bool left = s.kind == "one_sided_left";
        const double bnd = left ? s.y1s : s.y2s;
        const double inset = 1e-7 * (1.0 + std::abs(bnd));
        const double v0 = s.V_solve->V(bnd);
        const double w0 = s.V_solve->dV(left ? bnd + inset : bnd - inset);
        double scale = 1.0;
        for (double x : ats) scale = std::max(scale, std::abs(s.V->V(x)));
        json bj;
        bj["boundary"] = std::abs(v0);
        bj["smooth_fit"] = std::abs(w0);
        bj["scale"] = scale;
        const bool ok = std::abs(v0) <= ValidationReport::kBoundaryTol * scale &&
                        std::abs(w0) <= ValidationReport::kSmoothFitTol * scale;
        bj["pass"] = ok;
        j["boundary_checks"] = std::move(bj);
        all_pass = all_pass && ok;
    }

    // 2. Quadrature cross-check against the exit-kernel representation
    //    (undiscounted problems; runs in natural scale where the drift is 0).
    if (pr.lambda == 0.0) {
        json oj = json::array();
        for (double x : ats) {
            const double y = s.map.p(x);
            const double want = s.V->V(x);
            json row;
            row["x"] = x;
            row["value"] = want;
            try {
                double u = 0.0, tol = kOracleTolTwoSided;
                if (s.kind == "two_sided") {
                    u = green_value(s.nat_view, s.y1n, s.y2n, y);
                } else if (s.kind == "one_sided_left") {
                    u = green_value_one_sided(s.nat_view, s.y1n, y, true);
                    tol = kOracleTolOneSided;
                } else {
                    u = green_value_one_sided(s.nat_view, s.y2n, y, false);
                    tol = kOracleTolOneSided;
                }
                const double err = std::abs(u - want);
                const bool ok = err <= tol * std::max(1.0, std::abs(u));
                row["quadrature"] = u;
                row["error"] = err;
                row["pass"] = ok;
                all_pass = all_pass && ok;
            } catch (const NonConvergentError& e) {
                row["quadrature"] = "non_convergent";
                row["note"] = e.what();
                row["pass"] = false;
                all_pass = false;
            }
            oj.push_back(std::move(row));
        }
        j["quadrature_check"] = std::move(oj);
    }

    // 3. Monte Carlo cross-check (natural scale, exact time change).
    if (mc.enabled) {
        const bool two = s.kind == "two_sided";
        if (!two && !mc.horizon)
            throw PreconditionError("Monte Carlo on a one-sided rule needs --horizon");
        StopRule rule;
        if (two) {
            rule = StopRule::two_sided(s.y1n, s.y2n);
            rule.horizon = mc.horizon;
        } else if (s.kind == "one_sided_left") {
            rule = StopRule::left_exit(s.y1n, *mc.horizon);
        } else {
            rule = StopRule::right_exit(s.y2n, *mc.horizon);
        }
        json mj;
        mj["seed"] = mc.opt.seed;
        mj["n_paths"] = mc.opt.n_paths;
        mj["step"] = mc.opt.step;
        mj["antithetic"] = mc.opt.antithetic;
        if (mc.horizon) mj["horizon"] = *mc.horizon;
        json pts = json::array();
        for (double x : ats) {
            const double want = s.V->V(x);
            Estimate est = simulate_payoff(s.nat_view, s.map.p(x), rule, mc.opt);
            const double z = zscore(est, want);
            const bool ok = std::abs(z) <= kMcZMax;
            json row;
            row["x"] = x;
            row["value"] = want;
            row["estimate"] = est.mean;
            row["std_error"] = est.std_error;
            row["z"] = z;
            row["truncated_fraction"] = est.truncated_fraction;
            row["mean_exit_time"] = est.mean_exit_time;
            row["pass"] = ok;
            all_pass = all_pass && ok;
            pts.push_back(std::move(row));
        }
        mj["z_max"] = kMcZMax;
        mj["points"] = std::move(pts);
        j["mc_check"] = std::move(mj);
    }

    j["pass"] = all_pass;
    emit(j, out_path);
    return all_pass ? kExitOk : kExitVerification;
}

int cmd_curve(const std::string& path, std::optional<double> from, std::optional<double> to,
              int n, bool natural_scale, const std::string& out_path) {
    Problem pr = load_validated(path);
    const SignTemplate& sh = *pr.shape;
    const double spread = std::max(1.0, sh.x2r - sh.x1l);

    auto clamp_to_domain = [&](double lo, double hi) {
        if (pr.J.lo.finite()) lo = std::max(lo, pr.J.lo.value());
        if (pr.J.hi.finite()) hi = std::min(hi, pr.J.hi.value());
        return std::pair<double, double>{lo, hi};
    };

    std::ostringstream ss;
    if (natural_scale) {
        TransformedProblem tp = transform_problem(pr);
        auto [lo, hi] = clamp_to_domain(from ? *from : sh.x1l - spread,
                                        to ? *to : sh.x2r + spread);
        if (!(lo < hi)) throw PreconditionError("empty curve window");
        ss << "x,p,dp\n";
        for (int i = 0; i < n; ++i) {
            const double x = lo + (hi - lo) * i / (n - 1);
            ss << csv_num(x) << ',' << csv_num(tp.map.p(x)) << ',' << csv_num(tp.map.dp(x))
               << '\n';
        }
        emit_text(ss.str(), out_path);
        return kExitOk;
    }

    Solved s = run_solve(pr);
    if (s.infinite)
        throw PreconditionError("the value is identically infinite; no curve to print");
    double lo, hi;
    if (from) lo = *from;
    else if (std::isfinite(s.x1)) lo = s.x1 - 0.25 * std::max(1.0, std::isfinite(s.x2) ? s.x2 - s.x1 : spread);
    else lo = sh.x1l - 2.0 * spread;
    if (to) hi = *to;
    else if (std::isfinite(s.x2)) hi = s.x2 + 0.25 * std::max(1.0, std::isfinite(s.x1) ? s.x2 - s.x1 : spread);
    else hi = sh.x2r + 2.0 * spread;
    std::tie(lo, hi) = clamp_to_domain(lo, hi);
    if (!(lo < hi)) throw PreconditionError("empty curve window");

    ss << "x,V,dV\n";
    for (int i = 0; i < n; ++i) {
        const double x = lo + (hi - lo) * i / (n - 1);
        ss << csv_num(x) << ',' << csv_num(s.V->V(x)) << ',' << csv_num(s.V->dV(x)) << '\n';
    }
    emit_text(ss.str(), out_path);
    return kExitOk;
}

} // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Optimal stopping of one-dimensional diffusions with integral gain"};
    app.require_subcommand(1);

    std::string path, out_path, csv_path;
    std::vector<double> ats;
    int sequence_n = 0, curve_n = 401;
    bool pathological = false, natural_scale = false;
    double payoff_a = 0.0, payoff_b = 0.0, shoot_x1 = 0.0, shoot_tol = 1e-10;
    double curve_from_val = 0.0, curve_to_val = 0.0;
    McArgs mc;
    mc.opt.seed = 0;
    if (const char* env = std::getenv("OSTOP_SEED"))
        mc.opt.seed = std::strtoull(env, nullptr, 10);

    auto add_common = [&](CLI::App* c, bool with_at) {
        c->add_option("problem", path, "problem description (JSON)")->required();
        c->add_option("-o,--output", out_path, "write the report here instead of stdout");
        if (with_at) c->add_option("--at", ats, "evaluation points (repeatable)");
    };

    CLI::App* c_classify = app.add_subcommand(
        "classify", "derive the characteristic transform and classify the problem");
    add_common(c_classify, false);

    CLI::App* c_solve =
        app.add_subcommand("solve", "compute the optimal rule and the value function");
    add_common(c_solve, true);
    c_solve->add_option("--sequence", sequence_n,
                        "when no optimal rule exists, print this many exit rules of the "
                        "approximating sequence");
    c_solve->add_flag("--pathological", pathological,
                      "build the bounded-payoff escape sequence instead");

    CLI::App* c_payoff = app.add_subcommand(
        "payoff", "expected gain of an arbitrary two-sided exit rule (undiscounted)");
    add_common(c_payoff, true);
    c_payoff->add_option("--a", payoff_a, "lower exit boundary")->required();
    c_payoff->add_option("--b", payoff_b, "upper exit boundary")->required();

    CLI::App* c_shoot =
        app.add_subcommand("shoot", "integrate the value ODE once from a given left boundary");
    add_common(c_shoot, false);
    c_shoot->add_option("--x1", shoot_x1, "left boundary (V = V' = 0 there)")->required();
    c_shoot->add_option("--tol", shoot_tol, "integrator error tolerance");
    c_shoot->add_option("--csv", csv_path, "dump the trajectory nodes to this CSV file");

    CLI::App* c_verify = app.add_subcommand(
        "verify", "solve, then cross-check the result (residuals, quadrature, optional MC)");
    add_common(c_verify, true);
    c_verify->add_flag("--mc", mc.enabled, "Monte Carlo cross-check by exact time change");
    CLI::Option* seed_opt =
        c_verify->add_option("--seed", mc.opt.seed, "RNG seed (default: OSTOP_SEED or 0)");
    c_verify->add_option("--paths", mc.opt.n_paths, "number of simulated paths");
    c_verify->add_option("--step", mc.opt.step, "Brownian-clock step size");
    c_verify->add_flag("--antithetic", mc.opt.antithetic, "antithetic path pairs");
    double horizon_val = 0.0;
    CLI::Option* horizon_opt = c_verify->add_option(
        "--horizon", horizon_val, "physical-time cap (required for one-sided rules)");

    CLI::App* c_curve = app.add_subcommand("curve", "print the value function as CSV");
    add_common(c_curve, false);
    CLI::Option* from_opt = c_curve->add_option("--from", curve_from_val, "window start");
    CLI::Option* to_opt = c_curve->add_option("--to", curve_to_val, "window end");
    c_curve->add_option("-n,--points", curve_n, "number of samples")
        ->check(CLI::Range(2, 100000000));
    c_curve->add_flag("--natural-scale", natural_scale,
                      "print the natural-scale map (x, p, dp) instead of the value");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*c_classify) return cmd_classify(path, out_path);
        if (*c_solve) return cmd_solve(path, ats, sequence_n, pathological, out_path);
        if (*c_payoff) return cmd_payoff(path, payoff_a, payoff_b, ats, out_path);
        if (*c_shoot) return cmd_shoot(path, shoot_x1, shoot_tol, csv_path, out_path);
        if (*c_verify) {
            if (*horizon_opt) mc.horizon = horizon_val;
            (void)seed_opt;
            return cmd_verify(path, ats, mc, out_path);
        }
        if (*c_curve) {
            std::optional<double> from, to;
            if (*from_opt) from = curve_from_val;
            if (*to_opt) to = curve_to_val;
            return cmd_curve(path, from, to, curve_n, natural_scale, out_path);
        }
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ShapeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const CoeffError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const PreconditionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const SymbolicError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NoRootError& e) {
        std::cerr << "no rule: " << e.what() << "\n";
        return kExitNoRule;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return kExitVerification;
    }
    return kExitUsage;
}

} // namespace ostop
