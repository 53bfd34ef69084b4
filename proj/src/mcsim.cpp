#include "ostop/mcsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ostop {

namespace {

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Per-segment linear-interpolation tables of the Brownian-clock rates:
//   r = 1/sigma^2 (physical time per Brownian time),
//   q = f/sigma^2 (gain per Brownian time),
//   d = exp(-lambda * step * r) (per-step discount factor; lambda > 0 only).
// Node spacing never straddles a coefficient breakpoint; queries outside the
// window fall back to direct evaluation.
class RateTables {
public:
    RateTables(const CoeffView& cv, double wlo, double whi, double step)
        : cv_(&cv), step_(step) {
        edges_.push_back(wlo);
        for (double bp : cv.breakpoints)
            if (bp > wlo && bp < whi) edges_.push_back(bp);
        edges_.push_back(whi);
        const double dx_target = std::max((whi - wlo) / 4096.0, 1e-12);
        const bool disc = cv.lambda > 0.0;
        segs_.reserve(edges_.size() - 1);
        for (size_t i = 0; i + 1 < edges_.size(); ++i) {
            Seg s;
            s.lo = edges_[i];
            s.hi = edges_[i + 1];
            const double len = s.hi - s.lo;
            const int n = std::max(2, std::min(65536, int(std::ceil(len / dx_target)) + 1));
            s.inv_dx = (n - 1) / len;
            // evaluate strictly inside the segment at its right edge
            const double hi_eval =
                s.hi - 4.0 * 2.220446049250313e-16 * std::max(1.0, std::abs(s.hi));
            s.q.resize(n);
            s.r.resize(n);
            if (disc) s.d.resize(n);
            for (int j = 0; j < n; ++j) {
                double w = s.lo + len * j / double(n - 1);
                if (w > hi_eval) w = hi_eval;
                const double s2 = cv.sigma_sq(w);
                s.r[j] = 1.0 / s2;
                s.q[j] = cv.f(w) / s2;
                if (disc) s.d[j] = std::exp(-cv.lambda * step_ * s.r[j]);
            }
            segs_.push_back(std::move(s));
        }
    }

    void rates(double w, double& q, double& r, double& d) const {
        if (w < edges_.front() || w > edges_.back()) {
            const double s2 = cv_->sigma_sq(w);
            r = 1.0 / s2;
            q = cv_->f(w) / s2;
            d = cv_->lambda > 0.0 ? std::exp(-cv_->lambda * step_ * r) : 1.0;
            return;
        }
        size_t i = size_t(std::upper_bound(edges_.begin(), edges_.end(), w) - edges_.begin());
        i = i == 0 ? 0 : std::min(i - 1, segs_.size() - 1);
        const Seg& s = segs_[i];
        const double t = std::min((w - s.lo) * s.inv_dx, double(s.q.size() - 1));
        const size_t j = std::min(size_t(t), s.q.size() - 2);
        const double u = t - double(j);
        q = s.q[j] + (s.q[j + 1] - s.q[j]) * u;
        r = s.r[j] + (s.r[j + 1] - s.r[j]) * u;
        d = s.d.empty() ? 1.0 : s.d[j] + (s.d[j + 1] - s.d[j]) * u;
    }

private:
    struct Seg {
        double lo = 0, hi = 0, inv_dx = 0;
        std::vector<double> q, r, d;
    };
    const CoeffView* cv_;
    double step_;
    std::vector<double> edges_;
    std::vector<Seg> segs_;
};

} // namespace

PathRng::PathRng(std::uint64_t seed, std::uint64_t path)
    : key_(mix64(mix64(seed + 0x9E3779B97F4A7C15ull) ^
                 (path * 0xD1B54A32D192ED03ull + 0x2545F4914F6CDD1Dull))) {}

double PathRng::uniform() {
    std::uint64_t z = key_ + (++ctr_) * 0x9E3779B97F4A7C15ull;
    z = mix64(z);
    return (double(z >> 11) + 0.5) * 0x1.0p-53;
}

double PathRng::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    const double u1 = uniform(), u2 = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double th = 6.283185307179586476925287 * u2;
    cached_ = rad * std::sin(th);
    has_cached_ = true;
    return rad * std::cos(th);
}

double zscore(const Estimate& e, double reference) {
    if (e.std_error == 0.0) return e.mean == reference ? 0.0 : std::numeric_limits<double>::infinity();
    return (e.mean - reference) / e.std_error;
}

Estimate simulate_payoff(const CoeffView& cv, double x0, const StopRule& rule,
                         const McOptions& opt) {
    if (!(opt.step > 0.0)) throw PreconditionError("simulation step must be positive");
    if (opt.n_paths <= 0) throw PreconditionError("path count must be positive");
    if (!rule.lower && !rule.upper) throw PreconditionError("exit rule has no barrier");
    if (rule.lower && rule.upper && !(*rule.lower < *rule.upper))
        throw PreconditionError("exit barriers must be ordered");
    const bool one_sided = !rule.lower || !rule.upper;
    if (one_sided && !rule.horizon)
        throw PreconditionError("one-sided exit rules require a horizon cap");
    if (opt.antithetic && (opt.n_paths & 1))
        throw PreconditionError("antithetic sampling needs an even path count");

    Estimate est;
    est.n_paths = opt.n_paths;
    est.seed = opt.seed;

    // Started at or beyond a barrier: the rule stops immediately, exactly.
    if ((rule.lower && x0 <= *rule.lower) || (rule.upper && x0 >= *rule.upper)) return est;

    // Table window: the exit interval, extended on any free side until the
    // gain rate is negligible (direct evaluation covers the remainder).
    const double spread = std::max(1.0, cv.shape.x2r - cv.shape.x1l);
    double wlo, whi;
    double qscale = 1.0;
    for (double t : {x0, 0.5 * (cv.shape.x1l + cv.shape.x2r)})
        qscale = std::max(qscale, std::abs(cv.f(t) / cv.sigma_sq(t)));
    auto expand = [&](bool up) {
        double w = up ? std::max(x0, cv.shape.x2r) : std::min(x0, cv.shape.x1l);
        for (int k = 0; k < 44; ++k) {
            const double cand = up ? w + spread * std::ldexp(1.0, k)
                                   : w - spread * std::ldexp(1.0, k);
            if (up ? (cv.J.hi.finite() && cand >= cv.J.hi.value())
                   : (cv.J.lo.finite() && cand <= cv.J.lo.value()))
                return up ? cv.J.hi.value() : cv.J.lo.value();
            w = cand;
            if (std::abs(cv.f(w) / cv.sigma_sq(w)) < 1e-18 * qscale) break;
        }
        return w;
    };
    wlo = rule.lower ? *rule.lower : expand(false);
    whi = rule.upper ? *rule.upper : expand(true);
    RateTables tables(cv, wlo, whi, opt.step);

    const double sqrt_step = std::sqrt(opt.step);
    const double lambda = cv.lambda;
    const std::uint64_t max_steps = 1ull << 28;

    double mean = 0.0, m2 = 0.0;
    long long n_samples = 0;
    double pending = 0.0; // antithetic: payoff of the even-index path
    long long truncated = 0;
    double sum_t = 0.0, sum_s = 0.0;

    for (long long i = 0; i < opt.n_paths; ++i) {
        const std::uint64_t logical = opt.antithetic ? std::uint64_t(i) >> 1 : std::uint64_t(i);
        const double sign = (opt.antithetic && (i & 1)) ? -1.0 : 1.0;
        PathRng rng(opt.seed, logical);

        double w = x0, pay = 0.0, disc = 1.0, t = 0.0, s = 0.0;
        bool trunc = false;
        std::uint64_t steps = 0;
        for (;;) {
            if (++steps > max_steps) throw NumericError("simulated path exceeded the step budget");
            double q, r, d;
            tables.rates(w, q, r, d);
            const double dt = opt.step * r;
            if (rule.horizon && t + dt >= *rule.horizon) {
                const double frac = (*rule.horizon - t) / dt;
                pay += disc * q * opt.step * frac;
                t = *rule.horizon;
                s += opt.step * frac;
                trunc = true;
                break;
            }
            const double z = sign * rng.normal();
            const double wn = w + sqrt_step * z;
            double theta = 2.0;
            double stop_at = 0.0;
            if (rule.lower && wn <= *rule.lower) {
                theta = (w - *rule.lower) / (w - wn);
                stop_at = *rule.lower;
            }
            if (rule.upper && wn >= *rule.upper) {
                const double th_up = (*rule.upper - w) / (wn - w);
                if (th_up < theta) {
                    theta = th_up;
                    stop_at = *rule.upper;
                }
            }
            if (theta <= 1.0) {
                pay += disc * q * opt.step * theta;
                t += dt * theta;
                s += opt.step * theta;
                w = stop_at;
                break;
            }
            pay += disc * q * opt.step;
            if (lambda > 0.0) disc *= d;
            t += dt;
            s += opt.step;
            w = wn;
        }

        if (trunc) ++truncated;
        sum_t += t;
        sum_s += s;

        if (opt.antithetic) {
            if ((i & 1) == 0) {
                pending = pay;
            } else {
                const double y = 0.5 * (pending + pay);
                ++n_samples;
                const double delta = y - mean;
                mean += delta / double(n_samples);
                m2 += delta * (y - mean);
            }
        } else {
            ++n_samples;
            const double delta = pay - mean;
            mean += delta / double(n_samples);
            m2 += delta * (pay - mean);
        }
    }

    est.mean = mean;
    est.std_error = n_samples > 1 ? std::sqrt(m2 / (double(n_samples) * double(n_samples - 1)))
                                  : 0.0;
    est.truncated_fraction = double(truncated) / double(opt.n_paths);
    est.mean_exit_time = sum_t / double(opt.n_paths);
    est.mean_bm_time = sum_s / double(opt.n_paths);
    return est;
}

} // namespace ostop
