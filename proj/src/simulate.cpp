#include "kolmo/simulate.hpp"

#include <cmath>
#include <stdexcept>

#include "kolmo/grid.hpp"
#include "kolmo/parallel.hpp"

namespace kolmo {

Matrix sample_initial(const Domain& domain, int64_t count, StreamKey key) {
    if (count < 1) throw std::invalid_argument("sample_initial: count must be at least 1");
    const int d = domain.dim();
    Matrix xi(count, d);
    parallel_for(count, [&](int64_t r0, int64_t r1) {
        for (int64_t j = r0; j < r1; ++j) {
            Rng rng(key, static_cast<uint64_t>(j));
            double* row = xi.row(j);
            for (int i = 0; i < d; ++i)
                row[i] = rng.uniform(domain.lo[static_cast<size_t>(i)], domain.hi[static_cast<size_t>(i)]);
        }
    });
    return xi;
}

std::vector<double> euler_maruyama_step(const DriftMap& drift, const DiffusionApply& diffusion,
                                        std::span<const double> x, double dt, std::span<const double> dw) {
    if (!(dt > 0.0)) throw std::invalid_argument("euler_maruyama_step: dt must be positive");
    if (x.size() != dw.size()) throw std::invalid_argument("euler_maruyama_step: dimension mismatch");
    std::vector<double> mu(x.size()), noise(x.size());
    drift(x, mu);
    diffusion(x, dw, noise);
    std::vector<double> out(x.size());
    for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] + mu[i] * dt + noise[i];
    return out;
}

PathBatch simulate_terminal(const SdeProblem& problem, const Matrix& initial, StreamKey key) {
    if (initial.cols != problem.dim)
        throw std::invalid_argument("simulate_terminal: point dimension does not match problem");
    const TimeGrid grid = make_grid(problem.horizon, problem.steps);
    PathBatch batch;
    batch.initial = initial;
    batch.terminal = Matrix(initial.rows, initial.cols);
    const int d = problem.dim;
    parallel_for(initial.rows, [&](int64_t r0, int64_t r1) {
        std::vector<double> state(static_cast<size_t>(d)), next(static_cast<size_t>(d)),
            w(static_cast<size_t>(d));
        for (int64_t j = r0; j < r1; ++j) {
            Rng rng(key, static_cast<uint64_t>(j));
            const double* row = initial.row(j);
            state.assign(row, row + d);
            for (int64_t n = 0; n < problem.steps; ++n) {
                const double s = grid.nodes[static_cast<size_t>(n)];
                const double t = grid.nodes[static_cast<size_t>(n + 1)];
                const double root_dt = std::sqrt(t - s);
                for (int i = 0; i < d; ++i) w[static_cast<size_t>(i)] = root_dt * rng.normal();
                problem.step(s, t, state, w, next);
                state.swap(next);
            }
            double* out = batch.terminal.row(j);
            for (int i = 0; i < d; ++i) out[static_cast<size_t>(i)] = state[static_cast<size_t>(i)];
        }
    });
    return batch;
}

} // namespace kolmo
