#include "ostop/funcmodel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ostop {

namespace {

std::string seg_name(size_t i) {
    std::ostringstream os;
    os << "segment " << i;
    return os.str();
}

} // namespace

PiecewiseFunction::PiecewiseFunction(Interval domain, std::vector<Segment> segs)
    : domain_(domain), segs_(std::move(segs)) {
    if (segs_.empty()) throw NumericError("piecewise function needs at least one segment");
    if (!(domain_.lo < domain_.hi)) throw NumericError("empty state interval");
    if (segs_.front().lo != domain_.lo || segs_.back().hi != domain_.hi)
        throw NumericError("segments do not tile the state interval");
    for (size_t i = 0; i < segs_.size(); ++i) {
        if (!(segs_[i].lo < segs_[i].hi)) throw NumericError(seg_name(i) + " is empty");
        if (i + 1 < segs_.size()) {
            if (segs_[i].hi != segs_[i + 1].lo) throw NumericError("segments do not tile: gap after " + seg_name(i));
            if (!segs_[i].hi.finite()) throw NumericError("internal breakpoint after " + seg_name(i) + " must be finite");
        }
    }
    rebuild_index();
}

void PiecewiseFunction::rebuild_index() {
    bps_.clear();
    for (size_t i = 0; i + 1 < segs_.size(); ++i) bps_.push_back(segs_[i].hi.value());
}

PiecewiseFunction PiecewiseFunction::constant(Interval domain, double v) {
    return PiecewiseFunction(domain, {Segment{domain.lo, domain.hi, Poly::constant(v)}});
}

size_t PiecewiseFunction::locate(double x) const {
    return static_cast<size_t>(std::upper_bound(bps_.begin(), bps_.end(), x) - bps_.begin());
}

double PiecewiseFunction::operator()(double x) const {
    if (!(ExtReal(x) >= domain_.lo && ExtReal(x) <= domain_.hi))
        throw NumericError("evaluation outside the state interval");
    return form_eval(segs_[locate(x)].form, x);
}

double PiecewiseFunction::integrate(double a, double b) const {
    if (a > b) throw NumericError("integrate: reversed bounds");
    if (ExtReal(a) < domain_.lo || ExtReal(b) > domain_.hi)
        throw NumericError("integrate: bounds outside the state interval");
    if (a == b) return 0.0;
    double total = 0.0;
    for (size_t i = locate(a); i < segs_.size(); ++i) {
        const double lo = std::max(a, i == 0 ? a : bps_[i - 1]);
        const double hi = std::min(b, i < bps_.size() ? bps_[i] : b);
        if (hi <= lo) break;
        Form F = form_antiderivative(segs_[i].form);
        total += form_eval(F, hi) - form_eval(F, lo);
        if (hi == b) break;
    }
    return total;
}

ExtReal PiecewiseFunction::improper_to_hi(double from) const {
    ExtReal total = 0.0;
    const size_t i0 = locate(from);
    for (size_t i = i0; i < segs_.size(); ++i) {
        const double lo = std::max(from, i == 0 ? from : bps_[i - 1]);
        Form F = form_antiderivative(segs_[i].form);
        if (i + 1 < segs_.size()) {
            total = total + ExtReal(form_eval(F, bps_[i]) - form_eval(F, lo));
        } else {
            ExtReal tail = domain_.hi.finite() ? form_limit_at(F, domain_.hi.value(), false)
                                               : form_limit_inf(F, true);
            total = total + (tail - ExtReal(form_eval(F, lo)));
        }
    }
    return total;
}

ExtReal PiecewiseFunction::improper_to_lo(double upto) const {
    ExtReal total = 0.0;
    const size_t i1 = locate(upto);
    for (size_t i = 0; i <= i1; ++i) {
        const double hi = std::min(upto, i < bps_.size() ? bps_[i] : upto);
        Form F = form_antiderivative(segs_[i].form);
        if (i > 0) {
            total = total + ExtReal(form_eval(F, hi) - form_eval(F, bps_[i - 1]));
        } else {
            ExtReal head = domain_.lo.finite() ? form_limit_at(F, domain_.lo.value(), true)
                                               : form_limit_inf(F, false);
            total = total + (ExtReal(form_eval(F, hi)) - head);
        }
    }
    return total;
}

PiecewiseFunction PiecewiseFunction::antiderivative(double anchor) const {
    const size_t ia = locate(anchor);
    std::vector<Form> ads;
    ads.reserve(segs_.size());
    for (const Segment& s : segs_) ads.push_back(form_antiderivative(s.form));
    std::vector<double> off(segs_.size(), 0.0);
    off[ia] = -form_eval(ads[ia], anchor);
    for (size_t i = ia + 1; i < segs_.size(); ++i) {
        const double xb = bps_[i - 1];
        off[i] = off[i - 1] + form_eval(ads[i - 1], xb) - form_eval(ads[i], xb);
    }
    for (size_t i = ia; i-- > 0;) {
        const double xb = bps_[i];
        off[i] = off[i + 1] + form_eval(ads[i + 1], xb) - form_eval(ads[i], xb);
    }
    std::vector<Segment> out;
    out.reserve(segs_.size());
    for (size_t i = 0; i < segs_.size(); ++i)
        out.push_back({segs_[i].lo, segs_[i].hi, form_add_const(ads[i], off[i])});
    return PiecewiseFunction(domain_, std::move(out));
}

namespace {

// A finite point inside the first (is_front) or last segment, usable as an
// antiderivative anchor even when the outer domain endpoint is singular.
double inner_probe(const Segment& s) {
    if (s.lo.finite() && s.hi.finite()) return 0.5 * (s.lo.value() + s.hi.value());
    if (s.lo.finite()) return s.lo.value() + 1.0;
    if (s.hi.finite()) return s.hi.value() - 1.0;
    return 0.0;
}

} // namespace

PiecewiseFunction PiecewiseFunction::antiderivative_from_lo() const {
    Form F0 = form_antiderivative(segs_.front().form);
    ExtReal head = domain_.lo.finite() ? form_limit_at(F0, domain_.lo.value(), true)
                                       : form_limit_inf(F0, false);
    if (!head.finite()) throw NumericError("antiderivative_from_lo: integral diverges at the left endpoint");
    const double probe = inner_probe(segs_.front());
    // antiderivative(probe) has F(probe) = 0, hence F(lo+) = head - AD0(probe);
    // shift so the limit at lo becomes 0.
    PiecewiseFunction F = antiderivative(probe);
    const double shift = form_eval(F0, probe) - head.value();
    return F.plus_const(shift);
}

PiecewiseFunction PiecewiseFunction::antiderivative_from_hi() const {
    Form Fn = form_antiderivative(segs_.back().form);
    ExtReal tail = domain_.hi.finite() ? form_limit_at(Fn, domain_.hi.value(), false)
                                       : form_limit_inf(Fn, true);
    if (!tail.finite()) throw NumericError("antiderivative_from_hi: integral diverges at the right endpoint");
    const double probe = inner_probe(segs_.back());
    PiecewiseFunction F = antiderivative(probe);
    const double shift = form_eval(Fn, probe) - tail.value();
    return F.plus_const(shift);
}

PiecewiseFunction PiecewiseFunction::scaled(double k) const {
    std::vector<Segment> out;
    out.reserve(segs_.size());
    for (const Segment& s : segs_) out.push_back({s.lo, s.hi, form_scale(s.form, k)});
    return PiecewiseFunction(domain_, std::move(out));
}

PiecewiseFunction PiecewiseFunction::plus_const(double k) const {
    std::vector<Segment> out;
    out.reserve(segs_.size());
    for (const Segment& s : segs_) out.push_back({s.lo, s.hi, form_add_const(s.form, k)});
    return PiecewiseFunction(domain_, std::move(out));
}

PiecewiseFunction PiecewiseFunction::mirrored() const {
    std::vector<Segment> out;
    for (size_t i = segs_.size(); i-- > 0;)
        out.push_back({-segs_[i].hi, -segs_[i].lo, form_mirror(segs_[i].form)});
    return PiecewiseFunction(Interval{-domain_.hi, -domain_.lo}, std::move(out));
}

PiecewiseFunction PiecewiseFunction::refined(const std::vector<double>& points) const {
    std::vector<double> pts = points;
    std::sort(pts.begin(), pts.end());
    std::vector<Segment> out;
    for (const Segment& s : segs_) {
        ExtReal lo = s.lo;
        for (double p : pts) {
            if (ExtReal(p) > lo && ExtReal(p) < s.hi) {
                out.push_back({lo, p, s.form});
                lo = p;
            }
        }
        out.push_back({lo, s.hi, s.form});
    }
    return PiecewiseFunction(domain_, std::move(out));
}

ExtReal PiecewiseFunction::limit_at_hi() const {
    const Form& f = segs_.back().form;
    return domain_.hi.finite() ? form_limit_at(f, domain_.hi.value(), false) : form_limit_inf(f, true);
}

ExtReal PiecewiseFunction::limit_at_lo() const {
    const Form& f = segs_.front().form;
    return domain_.lo.finite() ? form_limit_at(f, domain_.lo.value(), true) : form_limit_inf(f, false);
}

namespace {

enum class SegSign { Neg, Zero, Pos };

// Probe points strictly inside a segment; unbounded sides are swept on a
// geometric grid (up to 2^9, beyond which the exact tail limit pins the sign
// without risking floating-point underflow to 0 in the samples).
std::vector<double> probe_points(const Segment& s) {
    std::vector<double> pts;
    if (s.lo.finite() && s.hi.finite()) {
        const double a = s.lo.value(), b = s.hi.value();
        for (int i = 0; i < 64; ++i) pts.push_back(a + (b - a) * (i + 0.5) / 64.0);
    } else if (s.lo.finite()) {
        for (int j = -6; j <= 9; ++j) pts.push_back(s.lo.value() + std::ldexp(1.0, j));
    } else if (s.hi.finite()) {
        for (int j = -6; j <= 9; ++j) pts.push_back(s.hi.value() - std::ldexp(1.0, j));
    } else {
        for (int j = -6; j <= 9; ++j) {
            pts.push_back(std::ldexp(1.0, j));
            pts.push_back(-std::ldexp(1.0, j));
        }
    }
    return pts;
}

SegSign classify_sign(const Segment& s, size_t idx) {
    if (form_is_zero(s.form)) return SegSign::Zero;
    bool pos = false, neg = false;
    for (double x : probe_points(s)) {
        const double v = form_eval(s.form, x);
        if (v > 0) pos = true;
        else if (v < 0) neg = true;
        else throw ShapeError("gain vanishes at an interior point of " + seg_name(idx));
        if (pos && neg)
            throw ShapeError("gain changes sign inside " + seg_name(idx) +
                             "; split it at the zero crossing");
    }
    // Unbounded sides: the exact tail limit must not contradict the sampled
    // sign (decay to 0 is fine).
    auto check_limit = [&](bool to_pos_inf) {
        ExtReal lim = form_limit_inf(s.form, to_pos_inf);
        if ((pos && lim < ExtReal(0.0)) || (neg && lim > ExtReal(0.0)))
            throw ShapeError("gain changes sign in the tail of " + seg_name(idx));
    };
    if (!s.hi.finite()) check_limit(true);
    if (!s.lo.finite()) check_limit(false);
    return pos ? SegSign::Pos : SegSign::Neg;
}

} // namespace

SignTemplate validate_shape(const PiecewiseFunction& f) {
    const auto& segs = f.segments();
    // Collapse consecutive equal signs into runs.
    std::vector<std::pair<SegSign, size_t>> runs; // sign, index of first segment
    for (size_t i = 0; i < segs.size(); ++i) {
        SegSign s = classify_sign(segs[i], i);
        if (runs.empty() || runs.back().first != s) runs.emplace_back(s, i);
    }
    auto bad = [&](const std::string& what) { return ShapeError("gain sign template invalid: " + what); };
    std::vector<SegSign> pattern;
    for (auto& r : runs) pattern.push_back(r.first);

    auto matches = [&](std::initializer_list<SegSign> want) {
        return pattern == std::vector<SegSign>(want);
    };
    bool zl = false, zr = false;
    if (matches({SegSign::Neg, SegSign::Pos, SegSign::Neg})) {
    } else if (matches({SegSign::Neg, SegSign::Zero, SegSign::Pos, SegSign::Neg})) {
        zl = true;
    } else if (matches({SegSign::Neg, SegSign::Pos, SegSign::Zero, SegSign::Neg})) {
        zr = true;
    } else if (matches({SegSign::Neg, SegSign::Zero, SegSign::Pos, SegSign::Zero, SegSign::Neg})) {
        zl = zr = true;
    } else {
        throw bad("expected negative | zero-plateau? | positive | zero-plateau? | negative runs");
    }

    auto run_start = [&](size_t ri) { return runs[ri].second; };
    auto seg_lo = [&](size_t si) { return segs[si].lo.value(); };

    SignTemplate t{};
    size_t ri = 1; // first run after the leading negative run
    t.x1l = seg_lo(run_start(ri));
    if (zl) ++ri; // skip plateau
    t.x1r = seg_lo(run_start(ri));
    ++ri; // past the positive run
    t.x2l = seg_lo(run_start(ri));
    if (zr) ++ri;
    t.x2r = seg_lo(run_start(ri));
    return t;
}

void validate_coeffs(const PiecewiseFunction& b, const PiecewiseFunction& sigma,
                     const PiecewiseFunction& f) {
    // sigma strictly nonzero inside every segment...
    const auto& ssegs = sigma.segments();
    for (size_t i = 0; i < ssegs.size(); ++i) {
        if (form_is_zero(ssegs[i].form))
            throw CoeffError("sigma is identically zero on " + seg_name(i) +
                             " (diffusion must be nondegenerate)");
        bool pos = false, neg = false;
        for (double x : probe_points(ssegs[i])) {
            const double v = form_eval(ssegs[i].form, x);
            if (v == 0.0) throw CoeffError("sigma vanishes inside " + seg_name(i));
            (v > 0 ? pos : neg) = true;
        }
        if (pos && neg)
            throw CoeffError("sigma changes sign inside " + seg_name(i) +
                             " (it vanishes somewhere in between)");
    }
    // ...and at breakpoints from both sides, with all coefficients finite
    // there, so (1+|b|)/sigma^2 and f/sigma^2 are integrable on compacts.
    auto check_bps = [](const PiecewiseFunction& g, const char* field, bool nonzero) {
        const auto& segs = g.segments();
        for (size_t i = 0; i + 1 < segs.size(); ++i) {
            const double xb = segs[i].hi.value();
            ExtReal left = form_limit_at(segs[i].form, xb, false);
            ExtReal right = form_limit_at(segs[i + 1].form, xb, true);
            if (!left.finite() || !right.finite())
                throw CoeffError(std::string(field) + " is unbounded at the breakpoint after " + seg_name(i));
            if (nonzero && (left.value() == 0.0 || right.value() == 0.0))
                throw CoeffError(std::string(field) + " vanishes at the breakpoint after " + seg_name(i));
        }
    };
    check_bps(sigma, "sigma", true);
    check_bps(b, "b", false);
    check_bps(f, "f", false);
}

void Problem::validate() {
    if (!(J.lo < J.hi)) throw CoeffError("state interval is empty");
    if (lambda < 0) throw CoeffError("discount rate must be nonnegative");
    auto same_domain = [&](const PiecewiseFunction& g, const char* field) {
        if (g.domain().lo != J.lo || g.domain().hi != J.hi)
            throw CoeffError(std::string(field) + " is not defined on the state interval");
    };
    same_domain(b, "b");
    same_domain(sigma, "sigma");
    same_domain(f, "f");
    validate_coeffs(b, sigma, f);
    shape = validate_shape(f);
}

bool Problem::driftless() const {
    for (const Segment& s : b.segments())
        if (!form_is_zero(s.form)) return false;
    return true;
}

} // namespace ostop
