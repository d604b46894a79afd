#pragma once
// Ground-truth values u(T, x): the analytic heat solution, a closed-form
// lognormal option oracle, model-specific stochastic representations for the
// two Black-Scholes problems, and generic Monte Carlo over the problem's own
// one-step scheme for everything else.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>

#include "kolmo/problem.hpp"
#include "kolmo/rng.hpp"

namespace kolmo {

struct ReferenceEstimate {
    double value = 0.0;
    double std_error = 0.0; // 0 only for analytic references
    int64_t samples = 0;
};

// u(t, x) = |x|^2 + t d for the unit-diffusion heat problem.
double heat_exact(double t, std::span<const double> x, int dim);

// discount * E[max(S_T - strike, 0)] for lognormal S_T = s0 *
// exp((drift - vol^2/2) T + vol sqrt(T) Z); the put variant via parity.
double lognormal_option_closed_form(double s0, double drift, double vol, double horizon, double strike,
                                    double discount, bool put = false);

// Plain Monte Carlo of the discounted max-call payoff under independent
// exact lognormal terminal states.
ReferenceEstimate gbm_representation_mc(std::span<const double> x, const GbmParams& params, double horizon,
                                        double discount, double strike, int64_t samples, StreamKey key);

// Put-on-min payoff under the correlated lognormal terminal law; one shared
// d-dimensional Brownian draw per sample.
ReferenceEstimate bs_correlated_representation_mc(std::span<const double> x, const CorrelatedBsParams& params,
                                                  double horizon, double discount, double strike,
                                                  int64_t samples, StreamKey key);

// Simulates the problem's step map from the fixed point over its own grid
// and averages the payoff.
ReferenceEstimate generic_feynman_kac_mc(const SdeProblem& problem, std::span<const double> x,
                                         int64_t samples, StreamKey key);

// Builds the reference evaluator for a named problem: analytic for heat,
// the stochastic representation for the lognormal models, generic
// Feynman-Kac Monte Carlo otherwise.
std::function<ReferenceEstimate(std::span<const double>)>
make_reference_fn(const SdeProblem& problem, int64_t samples, uint64_t seed);

// Key-value cache of per-point reference values.  Line format:
//   <key> <value> <std_error> <samples>
// where key = hex hash of (problem, point bits, samples, seed).  Saves are
// write-temp-then-rename.
class ReferenceCache {
public:
    ReferenceCache() = default;

    static std::string key_for(const std::string& problem, std::span<const double> point, int64_t samples,
                               uint64_t seed);

    void load(const std::string& path);       // merges entries from disk if present
    void save(const std::string& path) const; // atomic rewrite

    std::optional<ReferenceEstimate> lookup(const std::string& key) const;
    void insert(const std::string& key, const ReferenceEstimate& est);
    size_t size() const { return entries_.size(); }

private:
    std::map<std::string, ReferenceEstimate> entries_;
};

} // namespace kolmo
