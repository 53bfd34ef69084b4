#include "ostop/shooting.hpp"

#include "ostop/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ostop {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561,
                 A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176,
                 A65 = -5103.0 / 18656;
constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784,
                 B6 = 11.0 / 84;
constexpr double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920,
                 E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40;
constexpr double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9;

struct State {
    double x, V, W;
};

// RK right-hand side with abscissae clamped strictly inside the current
// coefficient panel, so stages at the panel's right edge never pick up the
// next segment's values.
class PanelRhs {
public:
    PanelRhs(const CoeffView& cv, double r_edge) : cv_(&cv), r_(r_edge) {
        clamp_ = r_ - 4.0 * 2.220446049250313e-16 * std::max(1.0, std::abs(r_));
        if (!(clamp_ < r_)) clamp_ = std::nextafter(r_, -std::numeric_limits<double>::infinity());
    }
    void operator()(double x, double V, double W, double& dV, double& dW) const {
        const double xe = std::isfinite(r_) ? std::min(x, clamp_) : x;
        const double s2 = cv_->sigma_sq(xe);
        dV = W;
        dW = (2.0 / s2) * (cv_->lambda * V - cv_->f(xe) - cv_->b(xe) * W);
    }

private:
    const CoeffView* cv_;
    double r_ = 0, clamp_ = 0;
};

struct StepResult {
    State y;       // accepted state
    double dW_end; // RHS second component at the accepted state (FSAL stage)
    double err;    // normalized error estimate
};

StepResult dopri5_step(const PanelRhs& rhs, const State& s, double h, double k1V, double k1W,
                       double tol) {
    double k2V, k2W, k3V, k3W, k4V, k4W, k5V, k5W, k6V, k6W, k7V, k7W;
    rhs(s.x + C2 * h, s.V + h * A21 * k1V, s.W + h * A21 * k1W, k2V, k2W);
    rhs(s.x + C3 * h, s.V + h * (A31 * k1V + A32 * k2V), s.W + h * (A31 * k1W + A32 * k2W), k3V,
        k3W);
    rhs(s.x + C4 * h, s.V + h * (A41 * k1V + A42 * k2V + A43 * k3V),
        s.W + h * (A41 * k1W + A42 * k2W + A43 * k3W), k4V, k4W);
    rhs(s.x + C5 * h, s.V + h * (A51 * k1V + A52 * k2V + A53 * k3V + A54 * k4V),
        s.W + h * (A51 * k1W + A52 * k2W + A53 * k3W + A54 * k4W), k5V, k5W);
    rhs(s.x + h, s.V + h * (A61 * k1V + A62 * k2V + A63 * k3V + A64 * k4V + A65 * k5V),
        s.W + h * (A61 * k1W + A62 * k2W + A63 * k3W + A64 * k4W + A65 * k5W), k6V, k6W);
    const double V5 = s.V + h * (B1 * k1V + B3 * k3V + B4 * k4V + B5 * k5V + B6 * k6V);
    const double W5 = s.W + h * (B1 * k1W + B3 * k3W + B4 * k4W + B5 * k5W + B6 * k6W);
    rhs(s.x + h, V5, W5, k7V, k7W);
    const double eV = h * (E1 * k1V + E3 * k3V + E4 * k4V + E5 * k5V + E6 * k6V + E7 * k7V);
    const double eW = h * (E1 * k1W + E3 * k3W + E4 * k4W + E5 * k5W + E6 * k6W + E7 * k7W);
    const double sV = tol * (1.0 + std::max(std::abs(s.V), std::abs(V5)));
    const double sW = tol * (1.0 + std::max(std::abs(s.W), std::abs(W5)));
    StepResult r;
    r.y = {s.x + h, V5, W5};
    r.dW_end = k7W;
    r.err = std::sqrt(0.5 * ((eV / sV) * (eV / sV) + (eW / sW) * (eW / sW)));
    if (!std::isfinite(r.err)) r.err = std::numeric_limits<double>::infinity();
    return r;
}

// Integrate one breakpoint-free panel [s.x, r]; calls sink(node) after each
// accepted step.  Returns the state at r (or wherever sink said to stop).
template <typename Sink>
State integrate_panel(const CoeffView& cv, State s, double r, const ShootOptions& opt,
                      Sink&& sink) {
    PanelRhs rhs(cv, r);
    double k1V, k1W;
    rhs(s.x, s.V, s.W, k1V, k1W);
    double h = std::min({r - s.x, opt.max_step, std::max(1e-4, (r - s.x) / 64.0)});
    while (s.x < r) {
        h = std::min(h, r - s.x);
        if (s.x + h == s.x) break; // step below floating-point resolution
        const double hmin = 4.0 * 2.220446049250313e-16 * std::max(1.0, std::abs(s.x));
        StepResult st = dopri5_step(rhs, s, h, k1V, k1W, opt.tol);
        if (st.err > 1.0 && h > hmin) {
            h *= std::max(0.2, 0.9 * std::pow(st.err, -0.2));
            continue;
        }
        const State prev = s;
        s = st.y;
        if (!std::isfinite(s.V) || !std::isfinite(s.W))
            throw NumericError("shooting integration produced a non-finite state");
        if (!sink(prev, s, st.dW_end)) return s;
        rhs(s.x, s.V, s.W, k1V, k1W); // refresh FSAL stage (sink may be at a clamped edge)
        if (st.err > 0.0)
            h *= std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(st.err, 1e-10), -0.2)));
        else
            h *= 5.0;
        h = std::min(h, opt.max_step);
    }
    return s;
}

double hermite_value(double xa, double va, double wa, double xb, double vb, double wb, double x) {
    const double h = xb - xa;
    if (h == 0.0) return va;
    const double t = (x - xa) / h, u = 1.0 - t;
    return u * u * (1.0 + 2.0 * t) * va + t * t * (3.0 - 2.0 * t) * vb +
           h * t * u * (u * wa - t * wb);
}

// Interior upward zero-crossings of the dense cubic interpolant of a function
// given by endpoint values (fa, fb) and endpoint slopes (da, db) on [xa, xb].
// Used on the slope W = V': every local minimum of V inside an accepted step
// shows up as W crossing zero from below, which is reliable event data even
// on steps wide enough to jump a whole return-and-escape window (adaptive
// steps accept any width where the local error vanishes, e.g. on polynomial
// panels).  Returns the crossing abscissae in ascending order.
int hermite_upcrossings(double xa, double fa, double da, double xb, double fb, double db,
                        double out[3]) {
    const double h = xb - xa;
    auto val = [&](double x) { return hermite_value(xa, fa, da, xb, fb, db, x); };
    // Critical points of the cubic: dH/dt = A t^2 + B t + C on (0, 1).
    const double d = fb - fa;
    const double A = 3.0 * h * (da + db) - 6.0 * d;
    const double B = 6.0 * d - h * (4.0 * da + 2.0 * db);
    const double C = h * da;
    double crit[2];
    int nc = 0;
    if (A == 0.0) {
        if (B != 0.0) crit[nc++] = -C / B;
    } else {
        const double disc = B * B - 4.0 * A * C;
        if (disc >= 0.0) {
            const double q = -0.5 * (B + std::copysign(std::sqrt(disc), B));
            if (q != 0.0) crit[nc++] = C / q;
            crit[nc++] = q / A;
        }
    }
    // Monotone pieces between {0, crit points in (0,1), 1}.
    double knots[4] = {xa, xb, xb, xb};
    int nk = 1;
    if (nc == 2 && crit[0] > crit[1]) std::swap(crit[0], crit[1]);
    for (int i = 0; i < nc; ++i)
        if (crit[i] > 0.0 && crit[i] < 1.0) knots[nk++] = xa + crit[i] * h;
    knots[nk++] = xb;
    int n = 0;
    double prev_x = knots[0], prev_f = fa;
    for (int i = 1; i < nk; ++i) {
        const double cur_x = knots[i];
        const double cur_f = (i == nk - 1) ? fb : val(cur_x);
        if (prev_f < 0.0 && cur_f >= 0.0 && n < 3)
            out[n++] = brent_root(val, prev_x, cur_x, prev_f, cur_f,
                                  1e-12 * std::max(1.0, std::abs(cur_x)));
        prev_x = cur_x;
        prev_f = cur_f;
    }
    return n;
}

} // namespace

double Trajectory::value_at(double x) const {
    if (nodes.empty()) throw PreconditionError("empty trajectory");
    if (x <= nodes.front().x) return nodes.front().V;
    if (x >= nodes.back().x) return nodes.back().V;
    auto it = std::upper_bound(nodes.begin(), nodes.end(), x,
                               [](double v, const Node& n) { return v < n.x; });
    const Node& b = *it;
    const Node& a = *(it - 1);
    return hermite_value(a.x, a.V, a.W, b.x, b.V, b.W, x);
}

double Trajectory::deriv_at(double x) const {
    if (nodes.empty()) throw PreconditionError("empty trajectory");
    if (x <= nodes.front().x) return nodes.front().W;
    if (x >= nodes.back().x) return nodes.back().W;
    auto it = std::upper_bound(nodes.begin(), nodes.end(), x,
                               [](double v, const Node& n) { return v < n.x; });
    const Node& b = *it;
    const Node& a = *(it - 1);
    return hermite_value(a.x, a.W, a.dW, b.x, b.W, b.dW, x);
}

ShootOutcome shoot(const CoeffView& cv, double x1, const ShootOptions& opt) {
    if (!cv.J.contains(x1)) throw PreconditionError("shooting start outside the state interval");
    ShootOutcome out;
    if (cv.f(x1) >= 0.0) {
        // Starting at nonnegative gain: V immediately dips below zero (or
        // rides a zero plateau into the positive region and then dips).
        out.kind = ShootOutcome::Kind::ImmediateDrop;
        return out;
    }

    const double spread = std::max(1.0, cv.shape.x2r - cv.shape.x1l);
    const double xcap = cv.J.hi.finite()
                            ? cv.J.hi.value()
                            : cv.shape.x2r + opt.xcap_pad * spread;

    // Panel edges: breakpoints in (x1, xcap), then the cap itself.
    std::vector<double> edges;
    for (double bp : cv.breakpoints)
        if (bp > x1 && bp < xcap) edges.push_back(bp);
    edges.push_back(xcap);

    // Right-sided second derivative of V at a state (piecewise coefficients
    // evaluate their right segment at a breakpoint), used for the initial
    // node and for re-anchoring the Hermite slope when a new panel begins.
    auto dw_right = [&cv](const State& st) {
        return (2.0 / cv.sigma_sq(st.x)) * (cv.lambda * st.V - cv.f(st.x) - cv.b(st.x) * st.W);
    };

    Trajectory traj;
    State s{x1, 0.0, 0.0};
    traj.nodes.push_back({x1, 0.0, 0.0, dw_right(s)});
    bool rose = false;
    bool event = false, blowup = false, dropped = false, escaped = false, exhausted = false;
    double ev_xa = 0, ev_va = 0, ev_wa = 0, ev_xb = 0, ev_vb = 0, ev_wb = 0;
    double v_low = std::numeric_limits<double>::infinity(); // min V past the gain region
    double vpeak = 0.0;
    double prev_dw = 0.0; // V'' at the last accepted state (one-sided at panel entry)
    long long nsteps = 0;

    ShootOptions mini = opt; // ground-truth re-integration of candidate minima
    mini.tol = std::min(opt.tol, 1e-12);
    mini.record = false;
    auto pass = [](const State&, const State&, double) { return true; };

    for (double r : edges) {
        if (s.x >= r) continue;
        if (opt.record && traj.nodes.back().x == s.x) {
            // W' jumps across panel edges; duplicate the node so the Hermite
            // segments on either side each use their own one-sided slope.
            const double dwr = dw_right(s);
            if (dwr != traj.nodes.back().dW) traj.nodes.push_back({s.x, s.V, s.W, dwr});
        }
        prev_dw = dw_right(s);
        const bool finite_hi_edge = cv.J.hi.finite() && r == cv.J.hi.value();
        const double stop_gap = finite_hi_edge ? 1e-9 * std::max(1.0, std::abs(r)) : 0.0;
        s = integrate_panel(
            cv, s, r - stop_gap, opt,
            [&](const State& a, const State& b, double dWb) {
                if (opt.record) traj.nodes.push_back({b.x, b.V, b.W, dWb});
                if (b.V > 0.0) {
                    rose = true;
                    vpeak = std::max(vpeak, b.V);
                }
                // Interior minima of V inside the accepted step show up as the
                // slope crossing zero from below.  Each candidate is verified
                // by re-integration (the dense cubic of a wide step is not
                // trustworthy at the scale of a shallow dip); a verified
                // value at or below zero is a return that endpoint tests
                // would have jumped over.
                if (a.V > 0.0) {
                    double tw[3];
                    const int nw = hermite_upcrossings(a.x, a.W, prev_dw, b.x, b.W, dWb, tw);
                    State pos = a;
                    for (int i = 0; i < nw; ++i) {
                        const double hv_min =
                            hermite_value(a.x, a.V, a.W, b.x, b.V, b.W, tw[i]);
                        if (hv_min >= 0.5 * std::min(a.V, b.V)) continue;
                        State m = integrate_panel(cv, pos, tw[i], mini, pass);
                        if (m.V <= 0.0) {
                            event = true;
                            ev_xa = pos.x; ev_va = pos.V; ev_wa = pos.W;
                            ev_xb = m.x; ev_vb = m.V; ev_wb = m.W;
                            return false;
                        }
                        if (m.x >= cv.shape.x2r) v_low = std::min(v_low, m.V);
                        pos = m;
                    }
                }
                if (b.V <= 0.0) {
                    if (rose && a.V > 0.0) {
                        event = true;
                        ev_xa = a.x; ev_va = a.V; ev_wa = a.W;
                        ev_xb = b.x; ev_vb = b.V; ev_wb = b.W;
                    } else if (!rose) {
                        dropped = true;
                    }
                    return false;
                }
                if (std::abs(b.V) > opt.vmax || std::abs(b.W) > opt.vmax) {
                    blowup = true;
                    return false;
                }
                // Past the right edge of the positive-gain region f <= 0, so
                // at any W = 0 with V > 0 the equation forces
                // W' = (2/s^2)(lambda V - f) >= 0: once the slope is
                // nonnegative there the trajectory can never turn back down.
                // A rebound -- V back up to 4x its running minimum, and risen
                // clearly above the integration noise floor -- is therefore
                // conclusive escape.  Conclude immediately: with drift the
                // tail can be too stiff to ever reach the cap or a fixed
                // slope threshold.
                if (b.x >= cv.shape.x2r) {
                    if (b.W >= 0.0 && b.V >= 4.0 * v_low &&
                        b.V >= 32.0 * opt.tol * (1.0 + vpeak)) {
                        escaped = true;
                        return false;
                    }
                    v_low = std::min(v_low, b.V);
                }
                if (++nsteps >= opt.max_steps) {
                    exhausted = true;
                    return false;
                }
                prev_dw = dWb;
                return true;
            });
        if (event || blowup || dropped || escaped || exhausted) break;
    }

    if (dropped) {
        out.kind = ShootOutcome::Kind::ImmediateDrop;
        return out;
    }
    if (!event) {
        if (exhausted) {
            // Step budget spent without a conclusion (stiff tail crawling
            // along at stability-limited steps): report where it stalled.
            out.kind = ShootOutcome::Kind::Inconclusive;
            out.x2 = s.x;
            out.resid = s.W;
            out.traj = std::move(traj);
            return out;
        }
        // Ran out of room.  On an unbounded side the cap is an exploration
        // limit, not a wall: a trajectory that is still positive but barely
        // sloped there may return far beyond it, so only a clearly escaping
        // slope counts as NoReturn.  A finite right endpoint is a wall:
        // reaching it positive always means the start was too far left.
        const bool at_open_cap = !cv.J.hi.finite() && !blowup && !escaped;
        if (at_open_cap && s.W < opt.escape_floor) {
            out.kind = ShootOutcome::Kind::Inconclusive;
            out.at_cap = true;
            out.x2 = s.x;
            out.resid = s.W;
        } else {
            out.kind = ShootOutcome::Kind::NoReturn;
        }
        out.traj = std::move(traj);
        return out;
    }

    // Locate the return point: Hermite bracket root, then Newton with
    // re-integration from the last node before the event.
    auto hv = [&](double x) {
        return hermite_value(ev_xa, ev_va, ev_wa, ev_xb, ev_vb, ev_wb, x);
    };
    double tau = brent_root(hv, ev_xa, ev_xb, ev_va, ev_vb,
                            1e-12 * std::max(1.0, std::abs(ev_xb)));
    ShootOptions fine = opt;
    fine.tol = std::min(opt.tol, 1e-13);
    fine.record = false;
    double v_tau = 0, w_tau = 0;
    for (int it = 0; it < 4; ++it) {
        if (tau <= ev_xa) tau = std::nextafter(ev_xa, ev_xb);
        State e = integrate_panel(cv, State{ev_xa, ev_va, ev_wa}, tau, fine,
                                  [](const State&, const State&, double) { return true; });
        v_tau = e.V;
        w_tau = e.W;
        if (w_tau == 0.0 || !std::isfinite(v_tau / w_tau)) break;
        const double next = tau - v_tau / w_tau;
        if (!(next > ev_xa && next <= ev_xb)) break;
        if (std::abs(next - tau) < 1e-15 * std::max(1.0, std::abs(tau))) {
            tau = next;
            break;
        }
        tau = next;
    }

    // Trim overshoot nodes and close the trajectory at the return point.
    while (opt.record && !traj.nodes.empty() && traj.nodes.back().x >= tau) traj.nodes.pop_back();
    PanelRhs rhs_end(cv, tau);
    double dv, dw;
    rhs_end(tau, v_tau, w_tau, dv, dw);
    traj.nodes.push_back({tau, v_tau, w_tau, dw});

    out.kind = ShootOutcome::Kind::Hit;
    out.x2 = tau;
    out.resid = w_tau;
    out.traj = std::move(traj);
    return out;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

constexpr double GLX[7] = {0.0,
                           -0.4058451513773972, 0.4058451513773972,
                           -0.7415311855993945, 0.7415311855993945,
                           -0.9491079123427585, 0.9491079123427585};
constexpr double GLW[7] = {0.4179591836734694,
                           0.3818300505051189, 0.3818300505051189,
                           0.2797053914892766, 0.2797053914892766,
                           0.1294849661688697, 0.1294849661688697};

template <typename F>
double gl7(const F& f, double a, double b) {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < 7; ++i) s += GLW[i] * f(mid + half * GLX[i]);
    return s * half;
}

} // namespace

void ValidationReport::finalize() {
    pass = boundary <= kBoundaryTol * scale && smooth_fit <= kSmoothFitTol * scale &&
           residual_ode <= kResidualTol * scale && abs_continuity <= kAbsContTol * scale &&
           positivity <= kPositivityTol * scale && inclusion == 0.0 && nontrivial;
}

std::string ValidationReport::failure_summary() const {
    std::ostringstream os;
    auto add = [&os, first = true](const char* name, double v, double tol) mutable {
        if (v <= tol) return;
        if (!first) os << ", ";
        first = false;
        os << name << " = " << v << " (tol " << tol << ")";
    };
    add("boundary", boundary, kBoundaryTol * scale);
    add("smooth_fit", smooth_fit, kSmoothFitTol * scale);
    add("residual_ode", residual_ode, kResidualTol * scale);
    add("abs_continuity", abs_continuity, kAbsContTol * scale);
    add("positivity", positivity, kPositivityTol * scale);
    add("inclusion", inclusion, 0.0);
    if (!nontrivial) os << (os.str().empty() ? "" : ", ") << "trivial";
    return os.str().empty() ? "none" : os.str();
}

ValidationReport validate_solution(const CoeffView& cv, const ValueFunction& vf, double x1,
                                   double x2) {
    ValidationReport rep;
    if (!(x1 < x2)) {
        rep.nontrivial = false;
        rep.finalize();
        return rep;
    }
    const double span = x2 - x1;

    // Interior grid: V scale, positivity, nontriviality.
    double vmax = 0.0, vmin = 0.0;
    const int N = 1001;
    for (int k = 1; k <= N; ++k) {
        const double x = x1 + span * k / (N + 1.0);
        const double v = vf.V(x);
        vmax = std::max(vmax, v);
        vmin = std::min(vmin, v);
    }
    rep.scale = std::max(1.0, vmax);
    rep.positivity = std::max(0.0, -vmin);
    rep.nontrivial = vmax > 1e-10 * rep.scale && span > 1e-9 * std::max({1.0, std::abs(x1), std::abs(x2)});

    // Boundary values and one-sided slopes just inside.  The slope is sampled
    // at two offsets and extrapolated to the boundary, so the measure is the
    // actual slope jump there and not the O(V'' delta) bias of a single
    // interior sample (the curvature can be large where sigma is small).
    const double delta = 1e-7 * span;
    rep.boundary = std::max(std::abs(vf.V(x1)), std::abs(vf.V(x2)));
    auto edge_slope = [&](double at, double sgn) {
        return std::abs(2.0 * vf.dV(at + sgn * delta) - vf.dV(at + sgn * 2.0 * delta));
    };
    rep.smooth_fit = std::max(edge_slope(x1, 1.0), edge_slope(x2, -1.0));

    // Strict inclusion in the open state interval.
    auto margin = [](double edge) { return ValidationReport::kInclusionMargin * (1.0 + std::abs(edge)); };
    if (cv.J.lo.finite())
        rep.inclusion = std::max(rep.inclusion, margin(cv.J.lo.value()) - (x1 - cv.J.lo.value()));
    if (cv.J.hi.finite())
        rep.inclusion = std::max(rep.inclusion, margin(cv.J.hi.value()) - (cv.J.hi.value() - x2));
    rep.inclusion = std::max(0.0, rep.inclusion);

    // Implied second derivative from the variational equation.
    auto vpp = [&](double x) {
        return (2.0 / cv.sigma_sq(x)) * (cv.lambda * vf.V(x) - cv.f(x) - cv.b(x) * vf.dV(x));
    };

    // The open-interval checks below must not sample the support endpoints
    // themselves: V' jumps there by exactly the smooth-fit residual, which is
    // the smooth_fit check's business, not an interior ODE defect.
    const double nudge = 1e-12 * std::max({span, std::abs(x1), std::abs(x2)});
    auto clamp_in = [&](double x) { return std::min(std::max(x, x1 + nudge), x2 - nudge); };

    // Integral-form ODE defect per sub-panel: [W]_a^b - ∫ V'' must vanish;
    // normalized per unit length and rescaled by sigma^2/2 to the original
    // equation's units.
    std::vector<double> cuts{x1};
    for (double bp : cv.breakpoints)
        if (bp > x1 && bp < x2) cuts.push_back(bp);
    cuts.push_back(x2);
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        const int sub = 16;
        for (int j = 0; j < sub; ++j) {
            const double a = cuts[i] + (cuts[i + 1] - cuts[i]) * j / double(sub);
            const double b = cuts[i] + (cuts[i + 1] - cuts[i]) * (j + 1) / double(sub);
            const double defect = (vf.dV(clamp_in(b)) - vf.dV(clamp_in(a))) - gl7(vpp, a, b);
            const double s2 = cv.sigma_sq(0.5 * (a + b));
            rep.residual_ode =
                std::max(rep.residual_ode, std::abs(defect) / (b - a) * 0.5 * s2);
        }
    }

    // Absolute-continuity recovery: both V' from the implied V'' and V from
    // V' must satisfy the fundamental theorem of calculus across the support.
    std::vector<double> pts;
    const int M = 256;
    for (int k = 0; k <= M; ++k) pts.push_back(clamp_in(x1 + span * k / double(M)));
    for (double bp : cv.breakpoints)
        if (bp > x1 && bp < x2) pts.push_back(bp);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    double cumW = 0.0, cumV = 0.0;
    const double W0 = vf.dV(pts.front()), V0 = vf.V(pts.front());
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
        cumW += gl7(vpp, pts[i], pts[i + 1]);
        cumV += gl7([&](double x) { return vf.dV(x); }, pts[i], pts[i + 1]);
        const double x = pts[i + 1];
        rep.abs_continuity = std::max(rep.abs_continuity, std::abs(vf.dV(x) - W0 - cumW));
        rep.abs_continuity = std::max(rep.abs_continuity, std::abs(vf.V(x) - V0 - cumV));
    }

    rep.finalize();
    return rep;
}

// ---------------------------------------------------------------------------
// Boundary search

ShootingSolution solve_shooting(const CoeffView& cv, const SolveShootOptions& sopt,
                                const ShootOptions& opt) {
    const double spread = std::max(1.0, cv.shape.x2r - cv.shape.x1l);
    const double start = cv.shape.x1l;

    struct Probe {
        double x;
        double s; // sentinel
        bool hit;
        double x2;
        bool at_cap;
    };
    auto eval = [&](double x) -> Probe {
        ShootOptions scan_opt = opt;
        scan_opt.record = false;
        ShootOutcome oc = shoot(cv, x, scan_opt);
        return {x, oc.sentinel(), oc.kind == ShootOutcome::Kind::Hit, oc.x2, oc.at_cap};
    };

    // Leftward scan for a NoReturn/return sign change.
    Probe right{0, 0, false, 0, false};
    bool have_right = false;
    Probe left{0, 0, false, 0, false};
    bool have_left = false;
    Probe best{0, std::numeric_limits<double>::infinity(), false, 0, false};

    const bool lo_finite = cv.J.lo.finite();
    const double lo_edge = cv.J.lo.raw();
    const double bound = sopt.scan_bound * std::max(1.0, std::abs(start) + spread);
    for (int k = 0; k < 240; ++k) {
        const double x = lo_finite ? lo_edge + (start - lo_edge) * std::ldexp(1.0, -k - 1)
                                   : start - spread * std::ldexp(1.0, k - 4);
        if (!lo_finite && std::abs(x) > bound) break;
        if (lo_finite && start - lo_edge <= 0) break;
        Probe p = eval(x);
        if (p.hit && std::abs(p.s) < std::abs(best.s)) best = p;
        if (std::isnan(p.s)) {
            // Inconclusive at the exploration cap: belongs to neither side.
            if (lo_finite && (start - lo_edge) * std::ldexp(1.0, -k - 1) <
                                 1e-14 * std::max(1.0, std::abs(lo_edge)))
                break;
            continue;
        }
        if (p.s < 0.0) {
            right = p;
            have_right = true;
        } else if (std::isinf(p.s)) {
            left = p;
            have_left = true;
            if (!have_right) {
                // NoReturn on the first probe: refine toward the template edge.
                double glo = lo_finite ? (start - lo_edge) * std::ldexp(1.0, -k - 1)
                                       : spread * std::ldexp(1.0, k - 4);
                for (int j = 0; j < 60 && !have_right; ++j) {
                    glo *= 0.5;
                    Probe q = eval(start - glo);
                    if (q.hit && std::abs(q.s) < std::abs(best.s)) best = q;
                    if (std::isnan(q.s)) continue;
                    if (q.s < 0.0) {
                        right = q;
                        have_right = true;
                    } else if (std::isinf(q.s)) {
                        left = q;
                    }
                }
            }
            break;
        }
        // A returning graze with residual >= 0 brackets nothing: the start sits
        // within noise of a root (or of a tail where the residual vanishes), so
        // its sign carries no side information.  Only a conclusive escape
        // establishes the no-return side.
        if (lo_finite && (start - lo_edge) * std::ldexp(1.0, -k - 1) <
                             1e-14 * std::max(1.0, std::abs(lo_edge)))
            break;
    }
    if (!have_left || !have_right)
        throw NoRootError(have_right
                              ? "scan found no no-return region: no smooth-fit root in the window"
                              : "scan found no returning region: no smooth-fit root in the window");

    // Bisection on the sentinel sign.
    while (have_left && have_right &&
           right.x - left.x > sopt.xtol * std::max({1.0, std::abs(left.x), std::abs(right.x)}) &&
           std::abs(best.s) > sopt.ftol) {
        const double mid = 0.5 * (left.x + right.x);
        if (mid <= left.x || mid >= right.x) break;
        Probe p = eval(mid);
        if (p.hit && std::abs(p.s) < std::abs(best.s)) best = p;
        if (std::isnan(p.s)) {
            if (p.at_cap)
                throw NoRootError("shooting turned inconclusive at the exploration cap: "
                                  "no transversal smooth-fit root");
            break; // step budget spent mid-bracket: settle for the best return seen
        }
        if (p.s < 0.0) right = p;
        else if (std::isinf(p.s)) left = p;
        else break; // graze at the resolution floor: neither edge moves, keep best
    }
    if (!best.hit) throw NumericError("bisection never observed a returning trajectory");

    // Final dense integration from the best start.  A start within integration
    // noise of the root can flip to an escape at the tighter tolerance; nudge
    // it rightward (toward the returning side) until the return reappears.
    ShootOptions fine = opt;
    fine.tol = 1e-12;
    fine.record = true;
    fine.max_step = std::max((best.x2 - best.x) / 512.0, 1e-8 * spread);
    double x_start = best.x;
    ShootOutcome oc = shoot(cv, x_start, fine);
    double nudge = 4e-13 * std::max(1.0, std::abs(best.x));
    for (int at = 0; at < 12 && oc.kind != ShootOutcome::Kind::Hit; ++at) {
        x_start = best.x + nudge;
        nudge *= 2.0;
        oc = shoot(cv, x_start, fine);
    }
    if (oc.kind != ShootOutcome::Kind::Hit)
        throw NumericError("final dense integration lost the return point");

    // Near the root the return is tangential: the crossing abscissa moves like
    // the square root of the start offset, but the vertex of the local
    // parabola V ≈ (kap/2)(x - x*)^2 moves only linearly.  Shift the crossing
    // to the vertex (curvature from the equation itself, via the closing
    // node's W') unless the shift is large enough to leave the local panel.
    double x2 = oc.x2;
    const double kap = oc.traj.nodes.back().dW;
    if (oc.resid < 0.0 && kap > 0.0) {
        const double shift = -oc.resid / kap;
        double room = 1e-3 * (x2 - x_start);
        for (double bp : cv.breakpoints)
            if (bp > x2) {
                room = std::min(room, 0.5 * (bp - x2));
                break;
            }
        if (cv.J.hi.finite()) room = std::min(room, 0.5 * (cv.J.hi.value() - x2));
        const double x2n = x2 + shift;
        if (shift <= room && x2n > x2) {
            const double v_vertex = oc.traj.nodes.back().V + 0.5 * oc.resid * shift;
            oc.traj.nodes.push_back({x2n, v_vertex, 0.0, kap});
            x2 = x2n;
        }
    }

    ShootingSolution sol;
    sol.x1 = x_start;
    sol.x2 = x2;
    sol.resid = oc.resid;
    sol.traj = std::move(oc.traj);
    auto tp = std::make_shared<Trajectory>(sol.traj);
    const double a = sol.x1, b = sol.x2;
    ValueFunction vf;
    vf.x1 = a;
    vf.x2 = b;
    vf.V = [tp, a, b](double x) { return (x <= a || x >= b) ? 0.0 : tp->value_at(x); };
    vf.dV = [tp, a, b](double x) { return (x <= a || x >= b) ? 0.0 : tp->deriv_at(x); };
    sol.V = std::move(vf);
    sol.report = validate_solution(cv, sol.V, sol.x1, sol.x2);
    return sol;
}

} // namespace ostop
