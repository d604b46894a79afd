#pragma once
// The model problems: one-step transition maps, payoffs, and the registry
// of named problems with their default constants.

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "kolmo/grid.hpp"
#include "kolmo/linalg.hpp"

namespace kolmo {

// Lower-triangular factor of a symmetric positive-definite matrix,
// Sigma * Sigma^T = Q.  A pivot at or below tol * max(diag) is reported as
// an indefinite input.
Matrix cholesky_factor(const Matrix& q, double pivot_tol = 1e-12);

struct GbmParams {
    double mu = -0.05;
    std::vector<double> sigma; // per coordinate
};

struct CorrelatedBsParams {
    double mu = -0.05;
    std::vector<double> beta;      // per-coordinate volatility scale
    Matrix chol_rows;              // rows of the Cholesky factor of Q
};

struct LorenzParams {
    double alpha1 = 10.0;
    double alpha2 = 14.0;
    double alpha3 = 8.0 / 3.0;
    double beta = 0.15;
    double drift_cap = 100.0; // N / T
};

struct HestonParams {
    double alpha = 0.05;
    double kappa = 0.6;
    double theta = 0.04;
    double beta = 0.2;
    double rho = -0.8;
};

// One-step maps H(s, t, x, w): x is the state at time s, w the Brownian
// increment over (s, t].  All maps write the time-t state into out.
void step_gbm(const GbmParams& p, double s, double t, std::span<const double> x,
              std::span<const double> w, std::span<double> out);
void step_bs_correlated(const CorrelatedBsParams& p, double s, double t, std::span<const double> x,
                        std::span<const double> w, std::span<double> out);
void step_lorenz_tamed(const LorenzParams& p, double s, double t, std::span<const double> x,
                       std::span<const double> w, std::span<double> out);
void step_heston(const HestonParams& p, double s, double t, std::span<const double> x,
                 std::span<const double> w, std::span<double> out);

void lorenz_drift(const LorenzParams& p, std::span<const double> x, std::span<double> out);

using StepMap = std::function<void(double s, double t, std::span<const double> x,
                                   std::span<const double> w, std::span<double> out)>;
using Payoff = std::function<double(std::span<const double> x)>;
using DriftMap = std::function<void(std::span<const double> x, std::span<double> out)>;
using DiffusionApply = std::function<void(std::span<const double> x, std::span<const double> w,
                                          std::span<double> out)>;

struct SdeProblem {
    std::string name;
    int dim = 0;
    double horizon = 1.0;
    int64_t steps = 1;
    Domain domain;
    Domain eval_domain; // defaults to the sampling domain
    StepMap step;
    Payoff payoff;

    // Continuous-time coefficients, present when the problem exposes them
    // (used by the Euler-Maruyama scheme and convergence studies).
    DriftMap drift;
    DiffusionApply diffusion; // applies sigma(x) to an increment
    bool exact_step = false;  // step map samples the exact transition law

    std::map<std::string, double> params;

    // Defaults used when building networks / evaluations for this problem.
    int default_hidden = 0;
    int64_t default_eval_points = 0;
    int64_t default_reference_samples = 0;
};

// Named problems with their baked-in constants.  dim = 0 selects the
// problem's default dimension; overrides replace entries of the constant
// table (unknown keys are rejected).
SdeProblem make_problem(const std::string& name, int dim = 0,
                        const std::map<std::string, double>& overrides = {});

std::vector<std::string> problem_names();

} // namespace kolmo
