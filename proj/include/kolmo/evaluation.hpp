#pragma once
// Relative L1/L2/Linf error estimation over a box, the max-sampling sup
// estimator, multi-run aggregation, and empirical strong-convergence
// measurement for one-step schemes.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "kolmo/problem.hpp"
#include "kolmo/reference.hpp"
#include "kolmo/rng.hpp"

namespace kolmo {

struct ErrorTriple {
    double l1 = 0.0;
    double l2 = 0.0;
    double linf = 0.0;
};

struct ErrorReport {
    int64_t step = 0;
    double rel_l1 = 0.0;
    double rel_l2 = 0.0;
    double rel_linf = 0.0;
    int64_t spatial_samples = 0;
    int64_t reference_samples = 0;
    double runtime_seconds = 0.0;
    double reference_se_mean = 0.0; // average reference noise at the probe points
};

// approx evaluates a whole batch of points (rows); reference one point.
// Errors are |approx - ref| / |ref| over spatial_samples uniform points of
// the domain; a reference magnitude below floor aborts (relative error is
// undefined there).
ErrorTriple relative_errors(const std::function<std::vector<double>(const Matrix&)>& approx,
                            const std::function<ReferenceEstimate(std::span<const double>)>& reference,
                            const Domain& domain, int64_t spatial_samples, StreamKey key,
                            double reference_floor = 1e-12, double* reference_se_mean = nullptr);

// Max of f over n i.i.d. uniform points of the box.
double sup_estimate(const std::function<double(std::span<const double>)>& f, const Domain& domain,
                    int64_t samples, StreamKey key);

struct AggregateReport {
    int64_t runs = 0;
    double l1_of_l1 = 0.0;   // mean of per-run L1
    double l2_of_l2 = 0.0;   // sqrt(mean of squared per-run L2)
    double l2_of_linf = 0.0; // sqrt(mean of squared per-run Linf)
};

AggregateReport aggregate_over_runs(std::span<const ErrorTriple> runs);

struct ConvergenceLevel {
    int level = 0;         // step count = 2^level
    double step_size = 0.0;
    double l2_error = 0.0; // strong L2 distance at the horizon
};

struct ConvergenceReport {
    std::vector<ConvergenceLevel> levels;
    double slope = 0.0; // log2(error) regressed on log2(step size); NaN if any error vanishes
};

// Couples the Euler-Maruyama scheme on T/2^k steps to the problem's exact
// one-step transition driven by the same Brownian increments.  Requires the
// problem to expose both its exact step and its drift/diffusion
// coefficients.
ConvergenceReport strong_convergence(const SdeProblem& problem, std::span<const int> levels, int64_t paths,
                                     StreamKey key);

} // namespace kolmo
