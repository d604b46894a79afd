#pragma once
// The training loop: per step, sample fresh starting points and Brownian
// increments, simulate terminal states, refresh the normalization statistics
// from the batch, take one Adam step on the mean squared residual, and
// checkpoint on a cadence.  Every random draw of step m comes from streams
// keyed (seed, purpose, m), so a resumed run replays the uninterrupted one
// exactly.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kolmo/network.hpp"
#include "kolmo/optimizer.hpp"
#include "kolmo/problem.hpp"

namespace kolmo {

struct TrainConfig {
    int64_t batch = 8192;
    int64_t steps = 1;
    uint64_t seed = 1;
    Precision precision = Precision::f64;
    int64_t eval_cadence = 0;       // 0 disables in-training evaluation
    int64_t checkpoint_cadence = 0; // 0 keeps only the final checkpoint
    int hidden1 = 0;                // 0 selects the problem default
    int hidden2 = 0;
    std::optional<Activation> activation_override;
    Schedule schedule = default_schedule();
    bool freeze_batch_norm = false; // diagnostic: run with fixed running stats

    void validate() const;
};

template <class Real>
struct Checkpoint {
    std::string problem_name;
    int64_t step = 0;
    NetParams<Real> params;
    BnStats<Real> stats;
    AdamState<Real> adam;
    uint64_t rng_seed = 0; // streams are keyed (seed, purpose, step)
};

struct RunRecord {
    int64_t step = 0;
    double loss = 0.0;
    double wall_seconds = 0.0;
};

struct RunLog {
    std::vector<RunRecord> records;
};

struct TrainingDiverged : std::runtime_error {
    int64_t step;
    explicit TrainingDiverged(int64_t s)
        : std::runtime_error("non-finite training loss at step " + std::to_string(s)), step(s) {}
};

// Mean squared residual of the train-mode forward pass against targets.
template <class Real>
double loss(const NetParams<Real>& params, const Mat<Real>& batch, std::span<const Real> targets);

template <class Real>
struct TrainHooks {
    // Called after the statistics update and before the gradient step.
    std::function<void(int64_t step, double loss_value)> on_step;
    // Called at the evaluation cadence (and at step 0) with current state.
    std::function<void(int64_t step, const NetParams<Real>&, const BnStats<Real>&)> on_eval;
    // Called at the checkpoint cadence and for the final state.
    std::function<void(const Checkpoint<Real>&)> on_checkpoint;
};

template <class Real>
std::pair<Checkpoint<Real>, RunLog> train(const SdeProblem& problem, const NetworkSpec& spec,
                                          const TrainConfig& config, const TrainHooks<Real>& hooks = {},
                                          const Checkpoint<Real>* resume_from = nullptr);

// Checkpoint file: magic, version, problem id, step, seed, then the network
// image and optimizer state.  Files are replaced atomically.
template <class Real>
void save_checkpoint(const std::string& path, const Checkpoint<Real>& c);
template <class Real>
Checkpoint<Real> load_checkpoint(const std::string& path);

// Reads only the precision id so callers can dispatch the scalar type.
Precision peek_checkpoint_precision(const std::string& path);

// step,loss,runtime_seconds with 6 significant digits.
std::string runlog_csv(const RunLog& log);

// Builds the network shape for a problem with optional width/activation
// overrides from the training configuration.
NetworkSpec network_spec_for(const SdeProblem& problem, const TrainConfig& config,
                             double bn_epsilon = 1e-6, double bn_momentum = 0.99);

} // namespace kolmo
