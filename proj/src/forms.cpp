#include "ostop/forms.hpp"

#include <algorithm>
#include <cmath>

namespace ostop {

namespace {

constexpr double kSqrtPi = 1.7724538509055160273;

double ipow(double x, long n) {
    double r = 1.0, b = x;
    for (long k = n; k > 0; k >>= 1) {
        if (k & 1) r *= b;
        b *= b;
    }
    return r;
}

double upow(double u, double p) {
    if (p == 0.0) return 1.0;
    double ip = 0;
    if (std::abs(p) <= 16.0 && std::modf(p, &ip) == 0.0) {
        const long n = static_cast<long>(ip);
        return n >= 0 ? ipow(u, n) : 1.0 / ipow(u, -n);
    }
    return std::pow(u, p);
}

// One asymptotic term a*u^e (optionally * ln u), used to order growth rates
// exactly, log breaking ties toward faster growth at +inf (and toward stronger
// divergence at 0+).
struct Term {
    double e = 0.0;
    bool log = false;
    double coeff = 0.0;
};

std::vector<Term> collect_terms(const PowerLog& f) {
    std::vector<Term> ts;
    if (f.cpow != 0.0) ts.push_back({f.p, false, f.cpow});
    for (int k = 0; k <= f.plog.degree(); ++k)
        if (f.plog.c[k] != 0.0) ts.push_back({double(k), true, f.plog.c[k]});
    for (int k = 0; k <= f.q.degree(); ++k)
        if (f.q.c[k] != 0.0) ts.push_back({double(k), false, f.q.c[k]});
    return ts;
}

void merge_equal(std::vector<Term>& ts) {
    std::vector<Term> out;
    for (const Term& t : ts) {
        if (!out.empty() && out.back().e == t.e && out.back().log == t.log)
            out.back().coeff += t.coeff;
        else
            out.push_back(t);
    }
    ts = std::move(out);
}

ExtReal signed_inf(double coeff) { return coeff > 0 ? ExtReal::pos_inf() : ExtReal::neg_inf(); }

ExtReal poly_limit_inf(const Poly& p, bool to_pos_inf) {
    const int d = p.degree();
    if (d < 0) return 0.0;
    if (d == 0) return p.c[0];
    double lead = p.c[d];
    if (!to_pos_inf && (d & 1)) lead = -lead;
    return signed_inf(lead);
}

} // namespace

double Poly::eval(double x) const {
    const double t = x - x0;
    double r = 0.0;
    for (size_t k = c.size(); k-- > 0;) r = r * t + c[k];
    return r;
}

int Poly::degree() const {
    for (size_t k = c.size(); k-- > 0;)
        if (c[k] != 0.0) return static_cast<int>(k);
    return -1;
}

void Poly::trim() {
    while (!c.empty() && c.back() == 0.0) c.pop_back();
}

Poly poly_antider_u(const Poly& p) {
    Poly r;
    r.x0 = p.x0;
    r.c.assign(p.c.size() + 1, 0.0);
    for (size_t k = 0; k < p.c.size(); ++k) r.c[k + 1] = p.c[k] / double(k + 1);
    r.trim();
    return r;
}

Poly poly_add(const Poly& a, const Poly& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (a.x0 != b.x0) throw NumericError("poly_add: mismatched reference points");
    Poly r;
    r.x0 = a.x0;
    r.c.assign(std::max(a.c.size(), b.c.size()), 0.0);
    for (size_t k = 0; k < a.c.size(); ++k) r.c[k] += a.c[k];
    for (size_t k = 0; k < b.c.size(); ++k) r.c[k] += b.c[k];
    r.trim();
    return r;
}

Poly poly_scale(Poly p, double k) {
    for (double& v : p.c) v *= k;
    p.trim();
    return p;
}

namespace {

// (∫plog)(u)/u — valid because ∫plog has zero constant term.
Poly poly_shift_down(const Poly& p) {
    Poly r;
    r.x0 = p.x0;
    if (p.c.size() > 1) r.c.assign(p.c.begin() + 1, p.c.end());
    r.trim();
    return r;
}

Poly poly_mirror(const Poly& p) {
    Poly r;
    r.x0 = -p.x0;
    r.c = p.c;
    for (size_t k = 1; k < r.c.size(); k += 2) r.c[k] = -r.c[k];
    r.trim();
    return r;
}

double powerlog_eval_u(const PowerLog& f, double u) {
    double r = f.q.eval(u);
    if (f.cpow != 0.0) r += f.cpow * upow(u, f.p);
    if (!f.plog.is_zero()) r += f.plog.eval(u) * std::log(u);
    return r;
}

ExtReal powerlog_limit_u0(const PowerLog& f) {
    // u -> 0+.  Most negative exponent dominates; at equal exponent the log
    // factor diverges harder, with sign -sign(coeff).
    auto ts = collect_terms(f);
    std::sort(ts.begin(), ts.end(), [](const Term& a, const Term& b) {
        if (a.e != b.e) return a.e < b.e;
        return a.log > b.log;
    });
    merge_equal(ts);
    for (const Term& t : ts) {
        if (t.coeff == 0.0) continue;
        if (t.e < 0.0) return t.log ? signed_inf(-t.coeff) : signed_inf(t.coeff);
        if (t.e == 0.0 && t.log) return signed_inf(-t.coeff);
        break; // all remaining terms are continuous at 0
    }
    double v = f.q.is_zero() ? 0.0 : (f.q.degree() >= 0 ? f.q.c[0] : 0.0);
    if (f.cpow != 0.0 && f.p == 0.0) v += f.cpow;
    return v;
}

ExtReal powerlog_limit_uinf(const PowerLog& f) {
    auto ts = collect_terms(f);
    std::sort(ts.begin(), ts.end(), [](const Term& a, const Term& b) {
        if (a.e != b.e) return a.e > b.e;
        return a.log > b.log;
    });
    merge_equal(ts);
    for (const Term& t : ts) {
        if (t.coeff == 0.0) continue;
        if (t.e > 0.0 || (t.e == 0.0 && t.log)) return signed_inf(t.coeff);
        if (t.e == 0.0) return t.coeff; // constant; everything below decays
        break;
    }
    return 0.0;
}

// Fold integer powers 0..16 into the plain polynomial part.
void powerlog_normalize(PowerLog& f) {
    if (f.cpow == 0.0) {
        f.p = 0.0;
        return;
    }
    double ip = 0;
    if (f.p >= 0.0 && f.p <= 16.0 && std::modf(f.p, &ip) == 0.0) {
        const size_t k = static_cast<size_t>(ip);
        if (f.q.c.size() < k + 1) f.q.c.resize(k + 1, 0.0);
        f.q.c[k] += f.cpow;
        f.q.trim();
        f.cpow = 0.0;
        f.p = 0.0;
    }
}

} // namespace

double form_eval(const Form& f, double x) {
    if (const auto* p = std::get_if<Poly>(&f)) return p->eval(x);
    if (const auto* e = std::get_if<ExpPoly>(&f)) return e->c * std::exp(e->a * (x - e->x0)) + e->tail.eval(x);
    if (const auto* w = std::get_if<PowerLog>(&f)) {
        const double u = w->dir * (x - w->x0);
        if (u <= 0.0) {
            if (u == 0.0) {
                ExtReal lim = powerlog_limit_u0(*w);
                if (lim.finite()) return lim.value();
            }
            throw NumericError("power/log form evaluated outside its domain (u <= 0)");
        }
        return powerlog_eval_u(*w, u);
    }
    const auto& g = std::get<GaussErf>(f);
    const double u = g.a * (x - g.x0);
    return g.pe.eval(u) * std::erf(u) + g.pg.eval(u) * std::exp(-u * u) + g.pr.eval(u);
}

Form form_antiderivative(const Form& f) {
    if (const auto* p = std::get_if<Poly>(&f)) {
        Poly r;
        r.x0 = p->x0;
        r.c.assign(p->c.size() + 1, 0.0);
        for (size_t k = 0; k < p->c.size(); ++k) r.c[k + 1] = p->c[k] / double(k + 1);
        r.trim();
        return r;
    }
    if (const auto* e = std::get_if<ExpPoly>(&f)) {
        ExpPoly r;
        r.x0 = e->x0;
        r.a = e->a;
        r.c = e->c / e->a;
        Form tail_ad = form_antiderivative(Form(e->tail));
        r.tail = std::get<Poly>(tail_ad);
        return r;
    }
    if (const auto* w = std::get_if<PowerLog>(&f)) {
        PowerLog r;
        r.x0 = w->x0;
        r.dir = w->dir;
        // In u: power part (p != -1 raises the power, p == -1 yields ln u).
        if (w->cpow != 0.0) {
            if (w->p == -1.0) {
                r.plog = poly_add(r.plog, Poly::constant(w->cpow));
            } else {
                r.cpow = w->cpow / (w->p + 1.0);
                r.p = w->p + 1.0;
            }
        }
        // plog part: ∫ P ln u = (∫P) ln u − ∫ (∫P)/u.
        if (!w->plog.is_zero()) {
            Poly A = poly_antider_u(w->plog);
            r.plog = poly_add(r.plog, A);
            r.q = poly_add(r.q, poly_scale(poly_antider_u(poly_shift_down(A)), -1.0));
        }
        r.q = poly_add(r.q, poly_antider_u(w->q));
        // d/dx = dir * d/du, so multiply the u-antiderivative by dir.
        const double s = double(w->dir);
        r.cpow *= s;
        r.plog = poly_scale(r.plog, s);
        r.q = poly_scale(r.q, s);
        powerlog_normalize(r);
        return r;
    }
    const auto& g = std::get<GaussErf>(f);
    GaussErf r;
    r.x0 = g.x0;
    r.a = g.a;
    Poly A = poly_antider_u(g.pe);
    Poly qt = poly_add(g.pg, poly_scale(A, -2.0 / kSqrtPi));
    // Solve B' - 2uB = qt - rho exactly: b_{k-1} = ((k+1) b_{k+1} - qt_k)/2.
    const int n = qt.degree();
    Poly B;
    double rho = 0.0;
    if (n >= 0) {
        std::vector<double> qc = qt.c;
        qc.resize(size_t(n) + 1, 0.0);
        std::vector<double> b(size_t(n) + 2, 0.0); // b[k], degrees up to n-1 used
        for (int k = n; k >= 1; --k) b[size_t(k) - 1] = ((k + 1) * b[size_t(k) + 1] - qc[size_t(k)]) / 2.0;
        rho = qc[0] - (n >= 1 ? b[1] : 0.0);
        b.resize(size_t(std::max(n, 1)), 0.0);
        B = Poly(0.0, b);
    }
    r.pe = poly_add(A, Poly::constant(rho * kSqrtPi / 2.0));
    r.pg = B;
    r.pr = poly_antider_u(g.pr);
    const double s = 1.0 / g.a;
    r.pe = poly_scale(r.pe, s);
    r.pg = poly_scale(r.pg, s);
    r.pr = poly_scale(r.pr, s);
    return r;
}

Form form_scale(Form f, double k) {
    if (auto* p = std::get_if<Poly>(&f)) {
        *p = poly_scale(*p, k);
    } else if (auto* e = std::get_if<ExpPoly>(&f)) {
        e->c *= k;
        e->tail = poly_scale(e->tail, k);
    } else if (auto* w = std::get_if<PowerLog>(&f)) {
        w->cpow *= k;
        w->plog = poly_scale(w->plog, k);
        w->q = poly_scale(w->q, k);
    } else {
        auto& g = std::get<GaussErf>(f);
        g.pe = poly_scale(g.pe, k);
        g.pg = poly_scale(g.pg, k);
        g.pr = poly_scale(g.pr, k);
    }
    return f;
}

Form form_add_const(Form f, double k) {
    if (k == 0.0) return f;
    if (auto* p = std::get_if<Poly>(&f)) {
        if (p->c.empty()) p->c.push_back(0.0);
        p->c[0] += k;
        p->trim();
    } else if (auto* e = std::get_if<ExpPoly>(&f)) {
        e->tail = poly_add(e->tail, Poly(e->tail.x0, {k}));
    } else if (auto* w = std::get_if<PowerLog>(&f)) {
        w->q = poly_add(w->q, Poly::constant(k));
    } else {
        auto& g = std::get<GaussErf>(f);
        g.pr = poly_add(g.pr, Poly::constant(k));
    }
    return f;
}

Form form_mirror(const Form& f) {
    if (const auto* p = std::get_if<Poly>(&f)) return poly_mirror(*p);
    if (const auto* e = std::get_if<ExpPoly>(&f)) {
        ExpPoly r;
        r.x0 = -e->x0;
        r.a = -e->a;
        r.c = e->c;
        r.tail = poly_mirror(e->tail);
        return r;
    }
    if (const auto* w = std::get_if<PowerLog>(&f)) {
        PowerLog r = *w; // u = dir*(x-x0) is invariant under (x,dir,x0) -> (-x,-dir,-x0)
        r.x0 = -w->x0;
        r.dir = -w->dir;
        return r;
    }
    const auto& g = std::get<GaussErf>(f);
    GaussErf r = g;
    r.x0 = -g.x0;
    r.a = -g.a;
    return r;
}

bool form_is_zero(const Form& f) {
    if (const auto* p = std::get_if<Poly>(&f)) return p->is_zero();
    if (const auto* e = std::get_if<ExpPoly>(&f)) return e->c == 0.0 && e->tail.is_zero();
    if (const auto* w = std::get_if<PowerLog>(&f)) return w->cpow == 0.0 && w->plog.is_zero() && w->q.is_zero();
    const auto& g = std::get<GaussErf>(f);
    return g.pe.is_zero() && g.pg.is_zero() && g.pr.is_zero();
}

ExtReal form_limit_inf(const Form& f, bool to_pos_inf) {
    if (const auto* p = std::get_if<Poly>(&f)) return poly_limit_inf(*p, to_pos_inf);
    if (const auto* e = std::get_if<ExpPoly>(&f)) {
        const bool exp_grows = to_pos_inf ? (e->a > 0) : (e->a < 0);
        if (e->c != 0.0 && exp_grows) return signed_inf(e->c); // exponential dominates any polynomial
        return poly_limit_inf(e->tail, to_pos_inf);            // decaying exponential contributes 0
    }
    if (const auto* w = std::get_if<PowerLog>(&f)) {
        const bool u_grows = to_pos_inf ? (w->dir > 0) : (w->dir < 0);
        if (!u_grows) throw NumericError("power/log form limit requested outside its domain");
        return powerlog_limit_uinf(*w);
    }
    const auto& g = std::get<GaussErf>(f);
    const bool u_pos = to_pos_inf ? (g.a > 0) : (g.a < 0);
    // erf(u) -> ±1, poly*exp(-u^2) -> 0.
    Poly eff = poly_add(poly_scale(g.pe, u_pos ? 1.0 : -1.0), g.pr);
    return poly_limit_inf(eff, u_pos);
}

ExtReal form_limit_at(const Form& f, double x_at, bool from_right) {
    if (const auto* w = std::get_if<PowerLog>(&f)) {
        const double u = w->dir * (x_at - w->x0);
        if (u > 0.0) return powerlog_eval_u(*w, u);
        if (u == 0.0) return powerlog_limit_u0(*w);
        throw NumericError("power/log form limit requested outside its domain");
    }
    (void)from_right; // remaining forms are continuous everywhere
    return form_eval(f, x_at);
}

} // namespace ostop
