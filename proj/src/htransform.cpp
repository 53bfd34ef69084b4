#include "ostop/htransform.hpp"

#include "ostop/numerics.hpp"

#include <cmath>
#include <sstream>

namespace ostop {

namespace {

// Symbolic -2 f / sigma^2 on one segment.  Supported exactly when sigma is
// constant on the segment, or sigma is affine with its root at/outside the
// segment edge and f is constant there (transformed problems).
Form divide_by_sigma_sq(const Form& f, const Form& sigma, ExtReal lo, ExtReal hi, size_t idx) {
    std::ostringstream where;
    where << "segment " << idx;
    const auto* sp = std::get_if<Poly>(&sigma);
    if (!sp) throw SymbolicError("sigma must be polynomial of degree <= 1 on " + where.str() +
                                 " for the symbolic transform");
    const int d = sp->degree();
    if (d <= 0) {
        const double s = d < 0 ? 0.0 : sp->c[0];
        if (s == 0.0) throw CoeffError("sigma vanishes on " + where.str());
        return form_scale(f, -2.0 / (s * s));
    }
    if (d == 1) {
        const auto* fp = std::get_if<Poly>(&f);
        if (!fp || fp->degree() > 0)
            throw SymbolicError("f must be constant where sigma is affine (" + where.str() + ")");
        const double f0 = fp->degree() < 0 ? 0.0 : fp->c[0];
        const double c1 = sp->c[1];
        const double y0 = sp->x0 - sp->c[0] / c1; // sigma(y) = c1 * (y - y0)
        if (f0 == 0.0) return Poly();
        PowerLog w;
        w.x0 = y0;
        if (ExtReal(y0) <= lo) w.dir = 1;
        else if (ExtReal(y0) >= hi) w.dir = -1;
        else throw CoeffError("sigma vanishes inside " + where.str());
        w.cpow = -2.0 * f0 / (c1 * c1);
        w.p = -2.0;
        return w;
    }
    throw SymbolicError("sigma polynomial degree > 1 on " + where.str() +
                        " is outside the symbolic transform family");
}

double pick_anchor(const Interval& J) {
    if (J.contains(0.0)) return 0.0;
    if (J.lo.finite() && J.hi.finite()) return 0.5 * (J.lo.value() + J.hi.value());
    if (J.lo.finite()) return J.lo.value() + 1.0;
    return J.hi.value() - 1.0;
}

double degtol(double c) { return 1e-9 * (1.0 + std::abs(c)); }

} // namespace

HTransform HTransform::build(const Problem& pr) {
    if (!pr.driftless()) throw PreconditionError("characteristic transform requires zero drift");
    if (pr.lambda != 0.0) throw PreconditionError("characteristic transform requires zero discount rate");
    if (!pr.shape) throw PreconditionError("problem must be validated before the transform");

    HTransform ht;
    ht.shape_ = *pr.shape;

    // Common refinement of f and sigma breakpoints, then exact division.
    PiecewiseFunction f = pr.f.refined(pr.sigma.breakpoints());
    PiecewiseFunction sg = pr.sigma.refined(pr.f.breakpoints());
    const auto& fs = f.segments();
    const auto& ss = sg.segments();
    std::vector<Segment> gsegs;
    gsegs.reserve(fs.size());
    for (size_t i = 0; i < fs.size(); ++i)
        gsegs.push_back({fs[i].lo, fs[i].hi,
                         divide_by_sigma_sq(fs[i].form, ss[i].form, fs[i].lo, fs[i].hi, i)});
    ht.g_ = PiecewiseFunction(pr.J, std::move(gsegs));

    ht.anchor_ = pick_anchor(pr.J);
    ht.h_ = ht.g_.antiderivative(ht.anchor_);
    ht.h_hi_ = ht.h_.limit_at_hi();
    ht.h_lo_ = ht.h_.limit_at_lo();
    ht.plat_l_ = ht.h_(ht.shape_.x1l);
    ht.plat_r_ = ht.h_(ht.shape_.x2r);
    return ht;
}

HTransform HTransform::mirrored() const {
    HTransform mt;
    mt.g_ = g_.mirrored();
    mt.h_ = h_.mirrored().scaled(-1.0); // ∫_{-anchor}^{y} g(-t) dt = -h(-y)
    mt.shape_ = SignTemplate{-shape_.x2r, -shape_.x2l, -shape_.x1r, -shape_.x1l};
    mt.anchor_ = -anchor_;
    mt.h_hi_ = -h_lo_;
    mt.h_lo_ = -h_hi_;
    mt.plat_l_ = -plat_r_;
    mt.plat_r_ = -plat_l_;
    return mt;
}

namespace {

struct Branch {
    double edge;     // plateau edge where the branch starts
    double edge_val; // h(edge)
    bool increasing;
};

} // namespace

// Shared monotone-crossing search on a tail branch.  to_lo: search toward the
// left domain endpoint, else toward the right one.
static HTransform::Root tail_root(const PiecewiseFunction& h, const Interval& J, double edge,
                                  double edge_val, ExtReal far_val, double c, bool to_lo,
                                  double bound) {
    // Branch runs from far_val (at the far end) up/down to edge_val at `edge`.
    const bool rising_toward_edge = edge_val > far_val.raw();
    if (std::abs(edge_val - c) <= degtol(c)) return {edge, true};
    const bool above = rising_toward_edge ? (c > edge_val) : (c < edge_val);
    if (above) throw RootDomainError("level is beyond the plateau value of the tail branch");
    const bool below = rising_toward_edge ? (ExtReal(c) <= far_val) : (ExtReal(c) >= far_val);
    if (below) throw RootDomainError("level is not attained on the tail branch");

    const ExtReal far_end = to_lo ? J.lo : J.hi;
    double prev = edge;
    double fprev = edge_val - c;
    for (int k = 0; k < 400; ++k) {
        double x;
        if (far_end.finite()) {
            // Approach a finite endpoint by halving the remaining gap.
            const double gap = std::abs(edge - far_end.value());
            x = far_end.value() + (to_lo ? 1.0 : -1.0) * gap * std::ldexp(1.0, -(k + 1));
            if (std::abs(x - far_end.value()) < 1e-300) break;
        } else {
            const double step = std::ldexp(0.0009765625, k); // 2^-10 * 2^k
            x = edge + (to_lo ? -step : step);
            if (std::abs(x) > bound && k > 1) {
                std::ostringstream os;
                os << "root bracket expansion exceeded bound " << bound;
                throw RootDomainError(os.str());
            }
        }
        const double fx = h(x) - c;
        if (fx == 0.0) return {x, false};
        if ((fx > 0) != (fprev > 0)) {
            double a = std::min(x, prev), b = std::max(x, prev);
            double fa = a == x ? fx : fprev, fb = b == x ? fx : fprev;
            auto fn = [&](double t) { return h(t) - c; };
            return {brent_root(fn, a, b, fa, fb), false};
        }
        prev = x;
        fprev = fx;
    }
    throw RootDomainError("no crossing found on the tail branch");
}

HTransform::Root HTransform::root_alpha(double c, double bound) const {
    return tail_root(h_, h_.domain(), shape_.x1l, plat_l_, h_lo_, c, /*to_lo=*/true, bound);
}

HTransform::Root HTransform::root_beta(double c, double bound) const {
    return tail_root(h_, h_.domain(), shape_.x2r, plat_r_, h_hi_, c, /*to_lo=*/false, bound);
}

HTransform::Root HTransform::root_gamma(double c) const {
    const double a = shape_.x1r, b = shape_.x2l;
    if (std::abs(plat_l_ - c) <= degtol(c)) return {a, true};
    if (std::abs(plat_r_ - c) <= degtol(c)) return {b, true};
    if (c > plat_l_ || c < plat_r_)
        throw RootDomainError("level is outside the range of the decreasing middle branch");
    auto fn = [&](double t) { return h_(t) - c; };
    return {brent_root(fn, a, b, plat_l_ - c, plat_r_ - c), false};
}

double HTransform::smoothfit_area(double c, double bound) const {
    const Root a = root_alpha(c, bound);
    const Root b = root_beta(c, bound);
    return h_.plus_const(-c).integrate(a.x, b.x);
}

Classification classify(const HTransform& ht) {
    Classification cl;
    cl.h_inf = ht.h_at_hi();
    cl.h_minf = ht.h_at_lo();
    cl.m1 = ext_max(ExtReal(ht.plateau_right()), cl.h_minf).value();
    cl.m2 = ext_min(ExtReal(ht.plateau_left()), cl.h_inf).value();
    cl.a1 = cl.h_inf > cl.h_minf;

    auto near = [](ExtReal a, double b) {
        return a.finite() && std::abs(a.value() - b) <= degtol(b);
    };
    cl.boundary_degenerate = near(cl.h_inf, ht.plateau_left()) || near(cl.h_minf, ht.plateau_right());

    if (!cl.a1) {
        // Both limits are finite here: h(-inf) < h(x1l) and h(+inf) > h(x2r)
        // always, and failure of (A1) squeezes them against each other.
        cl.kind = CaseKind::NoOptimum;
        const double m = 0.5 * (cl.h_inf.value() + cl.h_minf.value());
        cl.m = m;
        const double gm = ht.root_gamma(m).x;
        cl.gamma_m = gm;
        PiecewiseFunction Hm = ht.h().plus_const(-m);
        // h > m strictly left of gamma_m and h < m strictly right of it, so
        // the signed one-tail improper integrals are exactly ±K.
        cl.Kplus = Hm.improper_to_lo(gm);
        cl.Kminus = -Hm.improper_to_hi(gm);
        return cl;
    }

    // (A2): vacuous when h(+inf) >= h(x1l) (equality included); otherwise
    // requires ∫_{alpha}^{hi} (h - h(+inf)) dy < 0.
    if (cl.h_inf >= ExtReal(ht.plateau_left())) {
        cl.a2 = CondState::Vacuous;
    } else {
        const double level = cl.h_inf.value();
        const double alpha = ht.root_alpha(level).x;
        cl.alpha_star = alpha;
        const ExtReal I2 = ht.h().plus_const(-level).improper_to_hi(alpha);
        cl.a2_integral = I2;
        cl.a2 = I2 < ExtReal(0.0) ? CondState::Holds : CondState::Fails;
        if (cl.a2 == CondState::Fails) {
            cl.kind = CaseKind::OneSidedLeft;
            return cl;
        }
    }

    // (A3): mirror image of (A2).
    if (cl.h_minf <= ExtReal(ht.plateau_right())) {
        cl.a3 = CondState::Vacuous;
    } else {
        const double level = cl.h_minf.value();
        const double beta = ht.root_beta(level).x;
        cl.beta_star = beta;
        const ExtReal I3 = ht.h().plus_const(-level).improper_to_lo(beta);
        cl.a3_integral = I3;
        cl.a3 = I3 > ExtReal(0.0) ? CondState::Holds : CondState::Fails;
        if (cl.a3 == CondState::Fails) {
            cl.kind = CaseKind::OneSidedRight;
            return cl;
        }
    }

    cl.kind = CaseKind::Solvable;
    return cl;
}

} // namespace ostop
