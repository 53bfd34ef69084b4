#pragma once

#include "ostop/scale.hpp"

#include <cstdint>
#include <optional>

namespace ostop {

// Exit rule in natural-scale coordinates.  One-sided rules must carry a
// horizon cap on physical time (their exit time has infinite expectation
// otherwise and the tail must be truncated explicitly).
struct StopRule {
    std::optional<double> lower, upper;
    std::optional<double> horizon;

    static StopRule two_sided(double a, double b) { return {a, b, std::nullopt}; }
    static StopRule left_exit(double a, double horizon) { return {a, std::nullopt, horizon}; }
    static StopRule right_exit(double b, double horizon) { return {std::nullopt, b, horizon}; }
};

struct McOptions {
    double step = 1e-3; // Brownian-clock step
    long long n_paths = 100000;
    std::uint64_t seed = 0;
    bool antithetic = false; // pairwise mirrored normals (n_paths must be even)
};

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
    long long n_paths = 0;
    std::uint64_t seed = 0;
    double truncated_fraction = 0.0; // paths stopped by the horizon cap
    double mean_exit_time = 0.0;     // physical clock at stop
    double mean_bm_time = 0.0;       // Brownian clock at stop
};

// Expected discounted integral gain of the exit rule, by exact time change:
// the natural-scale state is a standard Brownian motion W on its own clock,
// physical time advances by step/sigma_tilde^2(W), and the gain accrues at
// rate f_tilde(W)/sigma_tilde^2(W) per Brownian-clock unit (left-point rule,
// linear interpolation of the crossing fraction at barriers).  Coefficient
// lookups use per-segment tables that never straddle a breakpoint, with
// direct evaluation beyond the tabulated window.  Deterministic per
// (seed, path index).
Estimate simulate_payoff(const CoeffView& cv, double x0, const StopRule& rule,
                         const McOptions& opt = {});

double zscore(const Estimate& e, double reference);

// Counter-based normal stream (split-mix finalizer keyed by seed and path,
// Box-Muller transform); exposed for determinism tests.
class PathRng {
public:
    PathRng(std::uint64_t seed, std::uint64_t path);
    double uniform(); // strictly inside (0, 1)
    double normal();

private:
    std::uint64_t key_ = 0, ctr_ = 0;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

} // namespace ostop
