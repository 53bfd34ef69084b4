#include "ostop/scale.hpp"

#include "ostop/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ostop {

namespace {

double pick_anchor(const Interval& J) {
    if (J.contains(0.0)) return 0.0;
    if (J.lo.finite() && J.hi.finite()) return 0.5 * (J.lo.value() + J.hi.value());
    if (J.lo.finite()) return J.lo.value() + 1.0;
    return J.hi.value() - 1.0;
}

// Symbolic 2 b / sigma^2 on one segment (same family as the gain-side
// division: sigma constant, or sigma affine with constant b).
Form drift_over_sigma_sq(const Form& b, const Form& sigma, ExtReal lo, ExtReal hi, size_t idx) {
    std::ostringstream where;
    where << "segment " << idx;
    const auto* sp = std::get_if<Poly>(&sigma);
    if (!sp) throw SymbolicError("sigma must be polynomial of degree <= 1 on " + where.str() +
                                 " for the scale map");
    const int d = sp->degree();
    if (d <= 0) {
        const double s = d < 0 ? 0.0 : sp->c[0];
        if (s == 0.0) throw CoeffError("sigma vanishes on " + where.str());
        return form_scale(b, 2.0 / (s * s));
    }
    if (d == 1) {
        const auto* bp = std::get_if<Poly>(&b);
        if (!bp || bp->degree() > 0)
            throw SymbolicError("b must be constant where sigma is affine (" + where.str() + ")");
        const double b0 = bp->degree() < 0 ? 0.0 : bp->c[0];
        const double c1 = sp->c[1];
        const double y0 = sp->x0 - sp->c[0] / c1;
        if (b0 == 0.0) return Poly();
        PowerLog w;
        w.x0 = y0;
        if (ExtReal(y0) <= lo) w.dir = 1;
        else if (ExtReal(y0) >= hi) w.dir = -1;
        else throw CoeffError("sigma vanishes inside " + where.str());
        w.cpow = 2.0 * b0 / (c1 * c1);
        w.p = -2.0;
        return w;
    }
    throw SymbolicError("sigma polynomial degree > 1 on " + where.str() +
                        " is outside the scale-map family");
}

// exp(-inner) on one segment, inside the closed form family when inner is
// polynomial of degree <= 2 with positive leading quadratic coefficient.
std::optional<Form> exp_neg_form(const Form& inner) {
    const auto* ip = std::get_if<Poly>(&inner);
    if (!ip) return std::nullopt;
    Poly q = *ip;
    q.trim();
    const int d = q.degree();
    if (d <= 0) return Form(Poly::constant(std::exp(-(d < 0 ? 0.0 : q.c[0]))));
    if (d == 1) {
        ExpPoly e;
        e.x0 = q.x0;
        e.a = -q.c[1];
        e.c = std::exp(-q.c[0]);
        return Form(e);
    }
    if (d == 2 && q.c[2] > 0.0) {
        const double c2 = q.c[2], c1 = q.c[1], c0 = q.c[0];
        GaussErf ge;
        ge.a = std::sqrt(c2);
        ge.x0 = q.x0 - c1 / (2.0 * c2);
        ge.pg = Poly::constant(std::exp(-(c0 - c1 * c1 / (4.0 * c2))));
        return Form(ge);
    }
    return std::nullopt;
}

} // namespace

CoeffView make_view(const Problem& pr) {
    if (!pr.shape) throw PreconditionError("problem must be validated before building a view");
    CoeffView v;
    v.J = pr.J;
    v.lambda = pr.lambda;
    v.b = [b = pr.b](double x) { return b(x); };
    v.sigma_sq = [s = pr.sigma](double x) {
        const double t = s(x);
        return t * t;
    };
    v.f = [f = pr.f](double x) { return f(x); };
    std::vector<double> bps = pr.b.breakpoints();
    for (double x : pr.sigma.breakpoints()) bps.push_back(x);
    for (double x : pr.f.breakpoints()) bps.push_back(x);
    std::sort(bps.begin(), bps.end());
    bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
    v.breakpoints = std::move(bps);
    v.shape = *pr.shape;
    return v;
}

// ---------------------------------------------------------------------------
// ScaleTransform

ScaleTransform ScaleTransform::identity(Interval J) {
    ScaleTransform st;
    st.domain_ = J;
    st.image_ = J;
    st.identity_ = true;
    st.anchor_ = pick_anchor(J);
    st.p_fn_ = [](double x) { return x; };
    st.dp_fn_ = [](double) { return 1.0; };
    return st;
}

ScaleTransform ScaleTransform::custom(Interval domain, std::function<double(double)> p,
                                      std::function<double(double)> dp, Interval image) {
    ScaleTransform st;
    st.domain_ = domain;
    st.image_ = image;
    st.anchor_ = pick_anchor(domain);
    st.p_fn_ = std::move(p);
    st.dp_fn_ = std::move(dp);
    return st;
}

ScaleTransform ScaleTransform::from_problem(const Problem& pr) {
    if (pr.driftless()) return identity(pr.J);

    ScaleTransform st;
    st.domain_ = pr.J;
    st.anchor_ = pick_anchor(pr.J);

    // Exact inner integral ∫ 2b/sigma^2.
    PiecewiseFunction b = pr.b.refined(pr.sigma.breakpoints());
    PiecewiseFunction sg = pr.sigma.refined(pr.b.breakpoints());
    const auto& bs = b.segments();
    const auto& ss = sg.segments();
    std::vector<Segment> isegs;
    isegs.reserve(bs.size());
    for (size_t i = 0; i < bs.size(); ++i)
        isegs.push_back({bs[i].lo, bs[i].hi,
                         drift_over_sigma_sq(bs[i].form, ss[i].form, bs[i].lo, bs[i].hi, i)});
    PiecewiseFunction inner = PiecewiseFunction(pr.J, std::move(isegs)).antiderivative(st.anchor_);
    st.inner_ = inner;

    auto innerp = std::make_shared<PiecewiseFunction>(inner);
    st.dp_fn_ = [innerp](double x) { return std::exp(-(*innerp)(x)); };

    // Closed-form p' when every segment of inner is (at most) a Gaussian
    // exponent; then p is the exact antiderivative.
    std::vector<Segment> dsegs;
    bool closed = true;
    for (const Segment& s : inner.segments()) {
        auto g = exp_neg_form(s.form);
        if (!g) {
            closed = false;
            break;
        }
        dsegs.push_back({s.lo, s.hi, *g});
    }
    if (closed) {
        PiecewiseFunction dpx(pr.J, std::move(dsegs));
        st.dp_exact_ = dpx;
        PiecewiseFunction px = dpx.antiderivative(st.anchor_);
        st.p_exact_ = px;
        auto pp = std::make_shared<PiecewiseFunction>(px);
        st.p_fn_ = [pp](double x) { return (*pp)(x); };
        st.image_ = Interval{px.limit_at_lo(), px.limit_at_hi()};
        return st;
    }

    // Numeric fallback: cumulative quadrature of the exact p' over the
    // breakpoint grid, per-evaluation refinement from the nearest node.
    st.nodes_ = inner.breakpoints();
    st.nodes_.push_back(st.anchor_);
    std::sort(st.nodes_.begin(), st.nodes_.end());
    st.nodes_.erase(std::unique(st.nodes_.begin(), st.nodes_.end()), st.nodes_.end());
    st.pvals_.assign(st.nodes_.size(), 0.0);
    const size_t ia = size_t(std::lower_bound(st.nodes_.begin(), st.nodes_.end(), st.anchor_) -
                             st.nodes_.begin());
    for (size_t i = ia; i + 1 < st.nodes_.size(); ++i)
        st.pvals_[i + 1] =
            st.pvals_[i] + adaptive_simpson(st.dp_fn_, st.nodes_[i], st.nodes_[i + 1], 1e-13);
    for (size_t i = ia; i > 0; --i)
        st.pvals_[i - 1] =
            st.pvals_[i] - adaptive_simpson(st.dp_fn_, st.nodes_[i - 1], st.nodes_[i], 1e-13);

    // Image endpoints by improper quadrature with doubling increments.
    auto improper_edge = [&st](bool to_hi) -> ExtReal {
        const ExtReal edge = to_hi ? st.domain_.hi : st.domain_.lo;
        double cum = to_hi ? st.pvals_.back() : st.pvals_.front();
        double z = to_hi ? st.nodes_.back() : st.nodes_.front();
        if (edge.finite()) {
            const double inc = adaptive_simpson(st.dp_fn_, z, edge.value(), 1e-13);
            return ExtReal(cum + (to_hi ? inc : -inc));
        }
        int small_in_a_row = 0;
        for (int k = 0; k < 200; ++k) {
            const double step = std::ldexp(std::max(1.0, std::abs(z)) * 0x1p-4, k);
            const double zn = to_hi ? z + step : z - step;
            const double inc = to_hi ? adaptive_simpson(st.dp_fn_, z, zn, 1e-13)
                                     : adaptive_simpson(st.dp_fn_, zn, z, 1e-13);
            cum += to_hi ? inc : -inc;
            z = zn;
            if (std::abs(cum) > 1e12) break;
            small_in_a_row = std::abs(inc) < 1e-12 * (1.0 + std::abs(cum)) ? small_in_a_row + 1 : 0;
            if (small_in_a_row >= 2) return ExtReal(cum);
        }
        return to_hi ? ExtReal::pos_inf() : ExtReal::neg_inf();
    };
    st.image_ = Interval{improper_edge(false), improper_edge(true)};
    return st;
}

double ScaleTransform::p_numeric(double x) const {
    // integrate from the nearest stored node
    const size_t i = size_t(std::lower_bound(nodes_.begin(), nodes_.end(), x) - nodes_.begin());
    size_t j = i == 0 ? 0 : (i >= nodes_.size() ? nodes_.size() - 1 : i);
    if (j > 0 && std::abs(x - nodes_[j - 1]) < std::abs(x - nodes_[j])) --j;
    const double base = pvals_[j], z = nodes_[j];
    if (x == z) return base;
    const double inc = x > z ? adaptive_simpson(dp_fn_, z, x, 1e-13)
                             : -adaptive_simpson(dp_fn_, x, z, 1e-13);
    return base + inc;
}

double ScaleTransform::p(double x) const {
    if (identity_) return x;
    if (p_exact_) return (*p_exact_)(x);
    if (p_fn_ && nodes_.empty()) return p_fn_(x); // custom map
    return p_numeric(x);
}

double ScaleTransform::dp(double x) const { return identity_ ? 1.0 : dp_fn_(x); }

double ScaleTransform::inverse(double y) const {
    if (identity_) return y;
    if (!(ExtReal(y) > image_.lo && ExtReal(y) < image_.hi))
        throw PreconditionError("scale inverse queried outside the image interval");
    auto fn = [this, y](double x) { return p(x) - y; };
    double xl = anchor_, xr = anchor_;
    double fl = fn(anchor_), fr = fl;
    if (fl == 0.0) return anchor_;
    if (fl < 0.0) {
        for (int k = 0;; ++k) {
            if (k >= 200) throw NumericError("scale inverse: bracket expansion failed");
            xl = xr;
            fl = fr;
            xr = domain_.hi.finite()
                     ? domain_.hi.value() - (domain_.hi.value() - anchor_) * std::ldexp(1.0, -k - 1)
                     : anchor_ + std::ldexp(1.0, k);
            fr = fn(xr);
            if (fr >= 0.0) break;
        }
    } else {
        for (int k = 0;; ++k) {
            if (k >= 200) throw NumericError("scale inverse: bracket expansion failed");
            xr = xl;
            fr = fl;
            xl = domain_.lo.finite()
                     ? domain_.lo.value() + (anchor_ - domain_.lo.value()) * std::ldexp(1.0, -k - 1)
                     : anchor_ - std::ldexp(1.0, k);
            fl = fn(xl);
            if (fl <= 0.0) break;
        }
    }
    double x = brent_root(fn, xl, xr, fl, fr, 1e-13 * (1.0 + std::abs(xl) + std::abs(xr)));
    for (int it = 0; it < 2; ++it) {
        const double d = dp_fn_(x);
        if (!(d > 0.0)) break;
        const double step = (p(x) - y) / d;
        if (!std::isfinite(step)) break;
        const double xn = x - step;
        if (xn > xl && xn < xr) x = xn;
    }
    return x;
}

// ---------------------------------------------------------------------------
// Whole-problem transform

TransformedProblem transform_problem(const Problem& pr) {
    if (!pr.shape) throw PreconditionError("problem must be validated before the scale transform");
    TransformedProblem tp{pr, ScaleTransform::identity(pr.J), std::nullopt, CoeffView{}, {}, false};
    if (pr.driftless()) {
        tp.symbolic = pr;
        tp.view = make_view(pr);
        tp.shape_image = *pr.shape;
        tp.identity = true;
        return tp;
    }

    tp.map = ScaleTransform::from_problem(pr);
    const ScaleTransform& m = tp.map;
    const SignTemplate& sh = *pr.shape;
    tp.shape_image = SignTemplate{m.p(sh.x1l), m.p(sh.x1r), m.p(sh.x2l), m.p(sh.x2r)};

    // Common refinement of all three coefficient functions.
    std::vector<double> bps;
    for (double x : pr.b.breakpoints()) bps.push_back(x);
    for (double x : pr.sigma.breakpoints()) bps.push_back(x);
    for (double x : pr.f.breakpoints()) bps.push_back(x);
    std::sort(bps.begin(), bps.end());
    bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
    PiecewiseFunction b = pr.b.refined(bps), sg = pr.sigma.refined(bps), f = pr.f.refined(bps);

    // Symbolic transformed problem: needs constant b, sigma, f per refined
    // segment and the exact map.
    auto const_val = [](const Form& fm) -> std::optional<double> {
        const auto* p = std::get_if<Poly>(&fm);
        if (!p) return std::nullopt;
        Poly q = *p;
        q.trim();
        if (q.degree() > 0) return std::nullopt;
        return q.degree() < 0 ? 0.0 : q.c[0];
    };
    bool symbolic_ok = m.symbolic();
    std::vector<Segment> ssegs, fsegs, zsegs;
    const auto& bsev = b.segments();
    const auto& sgev = sg.segments();
    const auto& fsev = f.segments();
    for (size_t i = 0; symbolic_ok && i < bsev.size(); ++i) {
        auto bc = const_val(bsev[i].form);
        auto sc = const_val(sgev[i].form);
        auto fc = const_val(fsev[i].form);
        if (!bc || !sc || !fc) {
            symbolic_ok = false;
            break;
        }
        // Segment image endpoints.
        const ExtReal ylo = bsev[i].lo.finite() ? ExtReal(m.p(bsev[i].lo.value())) : m.image().lo;
        const ExtReal yhi = bsev[i].hi.finite() ? ExtReal(m.p(bsev[i].hi.value())) : m.image().hi;
        // sigma_tilde(y) = sigma * (dp(ref) - s_in (y - p(ref))), affine in y,
        // with s_in = 2 b / sigma^2 the inner slope on this segment.
        const double s_in = 2.0 * *bc / (*sc * *sc);
        double ref;
        if (bsev[i].lo.finite()) ref = bsev[i].lo.value();
        else if (bsev[i].hi.finite()) ref = bsev[i].hi.value();
        else ref = 0.0; // whole-line single segment
        Poly st_aff;
        st_aff.x0 = m.p(ref);
        st_aff.c = {*sc * m.dp(ref), -*sc * s_in};
        st_aff.trim();
        ssegs.push_back({ylo, yhi, Form(st_aff)});
        fsegs.push_back({ylo, yhi, Form(Poly::constant(*fc))});
        zsegs.push_back({ylo, yhi, Form(Poly())});
    }
    if (symbolic_ok) {
        Problem tq;
        tq.J = m.image();
        tq.lambda = pr.lambda;
        tq.b = PiecewiseFunction(tq.J, std::move(zsegs));
        tq.sigma = PiecewiseFunction(tq.J, std::move(ssegs));
        tq.f = PiecewiseFunction(tq.J, std::move(fsegs));
        tq.validate();
        tp.symbolic = std::move(tq);
    }

    // Natural-scale pointwise view: exact transformed coefficients when
    // available, otherwise through the inverse map.
    if (tp.symbolic) {
        tp.view = make_view(*tp.symbolic);
    } else {
        auto mp = std::make_shared<ScaleTransform>(m);
        CoeffView v;
        v.J = m.image();
        v.lambda = pr.lambda;
        v.b = [](double) { return 0.0; };
        v.sigma_sq = [mp, s = pr.sigma](double y) {
            const double x = mp->inverse(y);
            const double t = s(x) * mp->dp(x);
            return t * t;
        };
        v.f = [mp, f = pr.f](double y) { return f(mp->inverse(y)); };
        for (double x : bps) v.breakpoints.push_back(m.p(x));
        v.shape = tp.shape_image;
        tp.view = std::move(v);
    }
    return tp;
}

ValueFunction pull_back(const ScaleTransform& map, const ValueFunction& vt) {
    if (map.is_identity()) return vt;
    ValueFunction out;
    auto mp = std::make_shared<ScaleTransform>(map);
    const Interval& img = map.image();
    const Interval& dom = map.domain();
    out.x1 = (std::isfinite(vt.x1) && ExtReal(vt.x1) > img.lo) ? map.inverse(vt.x1) : dom.lo.raw();
    out.x2 = (std::isfinite(vt.x2) && ExtReal(vt.x2) < img.hi) ? map.inverse(vt.x2) : dom.hi.raw();
    out.V = [mp, V = vt.V](double x) { return V(mp->p(x)); };
    out.dV = [mp, W = vt.dV](double x) { return W(mp->p(x)) * mp->dp(x); };
    return out;
}

} // namespace ostop
