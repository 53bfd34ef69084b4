#pragma once

#include "ostop/extreal.hpp"

#include <variant>
#include <vector>

namespace ostop {

// Closed symbolic form family.  Every form can be evaluated, antidifferentiated
// exactly (the result is again a member of the family), and has computable
// limits at ±inf and at finite singular endpoints.  This is what lets
// integrate()/improper_integral() avoid truncation heuristics entirely.

// Dense polynomial  sum_k c[k] * (x - x0)^k.  Empty coefficient vector is the
// zero polynomial.  Also reused as "polynomial in u" with x0 = 0 inside the
// composite forms below.
struct Poly {
    double x0 = 0.0;
    std::vector<double> c;

    Poly() = default;
    Poly(double x0_, std::vector<double> c_) : x0(x0_), c(std::move(c_)) { trim(); }
    static Poly constant(double v) { return Poly(0.0, {v}); }

    double eval(double x) const;
    int degree() const; // -1 for the zero polynomial
    bool is_zero() const { return degree() < 0; }
    void trim();        // drop exact-zero leading coefficients
};

// c * exp(a*(x-x0)) + tail,  a != 0.
struct ExpPoly {
    double x0 = 0.0;
    double a = 1.0;
    double c = 0.0;
    Poly tail;
};

// cpow * u^p  +  plog(u) * ln(u)  +  q(u),  where u = dir*(x-x0) > 0 on the
// segment (dir = ±1).  plog and q are polynomials in u (x0 = 0).  Closed under
// antidifferentiation: p = -1 feeds the log coefficient, and since
// antiderivatives of plog have zero constant term, (∫plog)(u)/u is again a
// polynomial.
struct PowerLog {
    double x0 = 0.0;
    int dir = 1;
    double cpow = 0.0;
    double p = 0.0;
    Poly plog; // in u
    Poly q;    // in u
};

// pe(u)*erf(u) + pg(u)*exp(-u^2) + pr(u),  u = a*(x-x0), a != 0.  Closed under
// antidifferentiation via the downward recursion for B' - 2uB = q with the
// leftover constant absorbed into a (sqrt(pi)/2)*erf term.
struct GaussErf {
    double x0 = 0.0;
    double a = 1.0;
    Poly pe, pg, pr; // in u
};

using Form = std::variant<Poly, ExpPoly, PowerLog, GaussErf>;

double form_eval(const Form& f, double x);
Form form_antiderivative(const Form& f); // arbitrary integration constant
Form form_scale(Form f, double k);
Form form_add_const(Form f, double k);
Form form_mirror(const Form& f); // returns g with g(x) = f(-x)
bool form_is_zero(const Form& f);

// Limit as x -> +inf (to_pos_inf) or x -> -inf.
ExtReal form_limit_inf(const Form& f, bool to_pos_inf);
// Limit as x -> x_at from the given side (finite endpoint; handles PowerLog
// singularities at u = 0, all other forms are continuous there).
ExtReal form_limit_at(const Form& f, double x_at, bool from_right);

// Polynomial helpers shared across the module (polys in u, x0 = 0).
Poly poly_antider_u(const Poly& p);             // zero constant term by construction
Poly poly_add(const Poly& a, const Poly& b);    // requires identical x0
Poly poly_scale(Poly p, double k);

} // namespace ostop
