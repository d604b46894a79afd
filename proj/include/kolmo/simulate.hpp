#pragma once
// Sampling of initial points and batched terminal-state simulation.
//
// Each sample row draws from its own (key, row-index) stream, so a batch is
// reproducible bit-for-bit for any shard or thread count.

#include <cstdint>
#include <functional>

#include "kolmo/linalg.hpp"
#include "kolmo/problem.hpp"
#include "kolmo/rng.hpp"

namespace kolmo {

struct PathBatch {
    Matrix initial;  // J x d, the sampled starting points
    Matrix terminal; // J x d, the states after N one-step transitions
};

// count x dim(domain) points, coordinates i.i.d. uniform on the box.
Matrix sample_initial(const Domain& domain, int64_t count, StreamKey key);

// One explicit Euler-Maruyama step x + mu(x) dt + sigma(x) dw.  The caller
// supplies dw already scaled by sqrt(dt).
std::vector<double> euler_maruyama_step(const DriftMap& drift, const DiffusionApply& diffusion,
                                        std::span<const double> x, double dt, std::span<const double> dw);

// Applies the problem's one-step map over its time grid with increments
// w = sqrt(dt) * z, z standard normal, starting from the given points.
PathBatch simulate_terminal(const SdeProblem& problem, const Matrix& initial, StreamKey key);

} // namespace kolmo
