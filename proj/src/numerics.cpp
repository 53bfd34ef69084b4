#include "ostop/numerics.hpp"

#include "ostop/extreal.hpp"

#include <algorithm>
#include <cmath>

namespace ostop {

namespace {

double checked(const Fn1& f, double x) {
    const double v = f(x);
    if (std::isnan(v)) throw NumericError("quadrature integrand returned NaN");
    return v;
}

double simpson_rec(const Fn1& f, double a, double m, double b, double fa, double fm, double fb,
                   double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = checked(f, lm), frm = checked(f, rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_rec(f, a, lm, m, fa, flm, fm, left, tol * 0.5, depth - 1) +
           simpson_rec(f, m, rm, b, fm, frm, fb, right, tol * 0.5, depth - 1);
}

} // namespace

double adaptive_simpson(const Fn1& f, double a, double b, double tol, int max_depth) {
    if (a == b) return 0.0;
    const double m = 0.5 * (a + b);
    const double fa = checked(f, a), fm = checked(f, m), fb = checked(f, b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, m, b, fa, fm, fb, whole, tol, max_depth);
}

namespace {

// p = t0 < t1 < ... < q with doubling spacing from both ends.
void chunk_panel(double p, double q, std::vector<double>& out) {
    out.push_back(p);
    if (q - p > 4.0) {
        const double mid = 0.5 * (p + q);
        double step = 1.0, x = p;
        while (x + step < mid) {
            x += step;
            out.push_back(x);
            step *= 2.0;
        }
        std::vector<double> right;
        step = 1.0;
        double y = q;
        while (y - step > mid) {
            y -= step;
            right.push_back(y);
            step *= 2.0;
        }
        out.push_back(mid);
        out.insert(out.end(), right.rbegin(), right.rend());
    }
    out.push_back(q);
}

} // namespace

double integrate_panels(const Fn1& f, double a, double b, std::vector<double> splits, double tol) {
    if (a == b) return 0.0;
    if (a > b) return -integrate_panels(f, b, a, std::move(splits), tol);
    splits.push_back(a);
    splits.push_back(b);
    std::sort(splits.begin(), splits.end());
    std::vector<double> pts;
    for (double s : splits)
        if (s >= a && s <= b && (pts.empty() || s > pts.back())) pts.push_back(s);

    std::vector<double> chunks;
    for (size_t i = 0; i + 1 < pts.size(); ++i) {
        std::vector<double> c;
        chunk_panel(pts[i], pts[i + 1], c);
        if (!chunks.empty()) c.erase(c.begin());
        chunks.insert(chunks.end(), c.begin(), c.end());
    }
    const double per = tol / double(std::max<size_t>(1, chunks.size() - 1));
    double total = 0.0;
    for (size_t i = 0; i + 1 < chunks.size(); ++i)
        total += adaptive_simpson(f, chunks[i], chunks[i + 1], per);
    return total;
}

double brent_root(const Fn1& f, double a, double b, double fa, double fb, double xatol, double fatol) {
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0) == (fb > 0)) throw NumericError("brent_root: endpoints do not bracket a root");
    double c = a, fc = fa, d = b - a, e = d;
    double best_x = std::abs(fa) < std::abs(fb) ? a : b;
    double best_f = std::min(std::abs(fa), std::abs(fb));
    for (int it = 0; it < 200; ++it) {
        if ((fb > 0) == (fc > 0)) {
            c = a;
            fc = fa;
            d = e = b - a;
        }
        if (std::abs(fc) < std::abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        if (std::abs(fb) < best_f) {
            best_f = std::abs(fb);
            best_x = b;
        }
        const double tol1 = 2.0 * 2.22e-16 * std::abs(b) + 0.5 * xatol;
        const double xm = 0.5 * (c - b);
        if (std::abs(xm) <= tol1 || fb == 0.0 || std::abs(fb) <= fatol) return best_x;
        if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
            const double s = fb / fa;
            double p, q;
            if (a == c) {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                const double qq = fa / fc, r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0) q = -q;
            p = std::abs(p);
            if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q), std::abs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += std::abs(d) > tol1 ? d : (xm > 0 ? tol1 : -tol1);
        fb = checked(f, b);
    }
    return best_x;
}

} // namespace ostop
