#include "kolmo/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "kolmo/parallel.hpp"
#include "kolmo/simulate.hpp"

namespace kolmo {

ErrorTriple relative_errors(const std::function<std::vector<double>(const Matrix&)>& approx,
                            const std::function<ReferenceEstimate(std::span<const double>)>& reference,
                            const Domain& domain, int64_t spatial_samples, StreamKey key,
                            double reference_floor, double* reference_se_mean) {
    if (spatial_samples < 1) throw std::invalid_argument("relative_errors: need at least one point");
    const int d = domain.dim();
    double sum_abs = 0.0;
    double sum_sq = 0.0;
    double max_abs = 0.0;
    double sum_ref_se = 0.0;

    const int64_t block = 8192;
    for (int64_t done = 0; done < spatial_samples; done += block) {
        const int64_t n = std::min(block, spatial_samples - done);
        Matrix points(n, d);
        for (int64_t j = 0; j < n; ++j) {
            Rng rng(key, static_cast<uint64_t>(done + j));
            double* row = points.row(j);
            for (int i = 0; i < d; ++i)
                row[i] = rng.uniform(domain.lo[static_cast<size_t>(i)], domain.hi[static_cast<size_t>(i)]);
        }
        const std::vector<double> values = approx(points);
        if (values.size() != static_cast<size_t>(n))
            throw std::invalid_argument("relative_errors: approximation returned a wrong-sized batch");
        for (int64_t j = 0; j < n; ++j) {
            const ReferenceEstimate ref =
                reference(std::span<const double>(points.row(j), static_cast<size_t>(d)));
            if (std::abs(ref.value) < reference_floor)
                throw std::domain_error("relative_errors: reference magnitude below the division floor");
            const double rel = std::abs((values[static_cast<size_t>(j)] - ref.value) / ref.value);
            sum_abs += rel;
            sum_sq += rel * rel;
            max_abs = std::max(max_abs, rel);
            sum_ref_se += ref.std_error;
        }
    }
    if (reference_se_mean) *reference_se_mean = sum_ref_se / static_cast<double>(spatial_samples);
    ErrorTriple t;
    t.l1 = sum_abs / static_cast<double>(spatial_samples);
    t.l2 = std::sqrt(sum_sq / static_cast<double>(spatial_samples));
    t.linf = max_abs;
    return t;
}

double sup_estimate(const std::function<double(std::span<const double>)>& f, const Domain& domain,
                    int64_t samples, StreamKey key) {
    if (samples < 1) throw std::invalid_argument("sup_estimate: need at least one sample");
    const int d = domain.dim();
    const int64_t chunks = (samples + kParallelChunk - 1) / kParallelChunk;
    std::vector<double> chunk_max(static_cast<size_t>(chunks), -std::numeric_limits<double>::infinity());
    parallel_for(samples, [&](int64_t b, int64_t e) {
        const int64_t c = b / kParallelChunk;
        double m = -std::numeric_limits<double>::infinity();
        std::vector<double> x(static_cast<size_t>(d));
        for (int64_t j = b; j < e; ++j) {
            Rng rng(key, static_cast<uint64_t>(j));
            for (int i = 0; i < d; ++i)
                x[static_cast<size_t>(i)] =
                    rng.uniform(domain.lo[static_cast<size_t>(i)], domain.hi[static_cast<size_t>(i)]);
            m = std::max(m, f(x));
        }
        chunk_max[static_cast<size_t>(c)] = m;
    });
    double m = -std::numeric_limits<double>::infinity();
    for (double v : chunk_max) m = std::max(m, v);
    return m;
}

AggregateReport aggregate_over_runs(std::span<const ErrorTriple> runs) {
    if (runs.empty()) throw std::invalid_argument("aggregate_over_runs: need at least one run");
    AggregateReport r;
    r.runs = static_cast<int64_t>(runs.size());
    double s1 = 0.0, s2 = 0.0, si = 0.0;
    for (const auto& t : runs) {
        s1 += t.l1;
        s2 += t.l2 * t.l2;
        si += t.linf * t.linf;
    }
    const double n = static_cast<double>(runs.size());
    r.l1_of_l1 = s1 / n;
    r.l2_of_l2 = std::sqrt(s2 / n);
    r.l2_of_linf = std::sqrt(si / n);
    return r;
}

ConvergenceReport strong_convergence(const SdeProblem& problem, std::span<const int> levels, int64_t paths,
                                     StreamKey key) {
    if (levels.size() < 2) throw std::invalid_argument("strong_convergence: need at least two levels");
    if (!problem.exact_step || !problem.drift || !problem.diffusion)
        throw std::invalid_argument("strong_convergence: problem '" + problem.name +
                                    "' does not expose an exact step with coefficients");
    const int d = problem.dim;
    const double horizon = problem.horizon;
    int max_level = 0;
    for (int k : levels) {
        if (k < 0 || k > 24) throw std::invalid_argument("strong_convergence: level out of range");
        max_level = std::max(max_level, k);
    }
    const int64_t fine_steps = int64_t{1} << max_level;
    const double fine_dt = horizon / static_cast<double>(fine_steps);
    const double root_fine_dt = std::sqrt(fine_dt);

    // Per-level accumulated squared distances, fixed-chunk deterministic.
    const int64_t chunks = (paths + kParallelChunk - 1) / kParallelChunk;
    Matrix partial(chunks, static_cast<int64_t>(levels.size()));
    partial.fill(0.0);

    parallel_for(paths, [&](int64_t b, int64_t e) {
        const int64_t c = b / kParallelChunk;
        std::vector<double> fine_w(static_cast<size_t>(fine_steps * d));
        std::vector<double> x0(static_cast<size_t>(d));
        std::vector<double> state(static_cast<size_t>(d)), nxt(static_cast<size_t>(d));
        std::vector<double> mu(static_cast<size_t>(d)), noise(static_cast<size_t>(d)),
            w(static_cast<size_t>(d)), total_w(static_cast<size_t>(d)), exact(static_cast<size_t>(d));
        for (int64_t j = b; j < e; ++j) {
            Rng rng(key, static_cast<uint64_t>(j));
            for (int i = 0; i < d; ++i)
                x0[static_cast<size_t>(i)] =
                    rng.uniform(problem.domain.lo[static_cast<size_t>(i)], problem.domain.hi[static_cast<size_t>(i)]);
            for (auto& v : fine_w) v = root_fine_dt * rng.normal();

            std::fill(total_w.begin(), total_w.end(), 0.0);
            for (int64_t n = 0; n < fine_steps; ++n)
                for (int i = 0; i < d; ++i)
                    total_w[static_cast<size_t>(i)] += fine_w[static_cast<size_t>(n * d + i)];
            problem.step(0.0, horizon, x0, total_w, exact);

            for (size_t li = 0; li < levels.size(); ++li) {
                const int k = levels[li];
                const int64_t n_steps = int64_t{1} << k;
                const int64_t group = fine_steps / n_steps;
                const double dt = horizon / static_cast<double>(n_steps);
                state = x0;
                for (int64_t n = 0; n < n_steps; ++n) {
                    std::fill(w.begin(), w.end(), 0.0);
                    for (int64_t g = 0; g < group; ++g) {
                        const int64_t f = n * group + g;
                        for (int i = 0; i < d; ++i)
                            w[static_cast<size_t>(i)] += fine_w[static_cast<size_t>(f * d + i)];
                    }
                    problem.drift(state, mu);
                    problem.diffusion(state, w, noise);
                    for (int i = 0; i < d; ++i)
                        nxt[static_cast<size_t>(i)] =
                            state[static_cast<size_t>(i)] + mu[static_cast<size_t>(i)] * dt + noise[static_cast<size_t>(i)];
                    state.swap(nxt);
                }
                double sq = 0.0;
                for (int i = 0; i < d; ++i) {
                    const double diff = state[static_cast<size_t>(i)] - exact[static_cast<size_t>(i)];
                    sq += diff * diff;
                }
                partial(c, static_cast<int64_t>(li)) += sq;
            }
        }
    });

    ConvergenceReport report;
    bool any_zero = false;
    std::vector<double> log_h, log_err;
    for (size_t li = 0; li < levels.size(); ++li) {
        double total = 0.0;
        for (int64_t c = 0; c < chunks; ++c) total += partial(c, static_cast<int64_t>(li));
        const int64_t n_steps = int64_t{1} << levels[li];
        ConvergenceLevel lvl;
        lvl.level = levels[li];
        lvl.step_size = horizon / static_cast<double>(n_steps);
        lvl.l2_error = std::sqrt(total / static_cast<double>(paths));
        report.levels.push_back(lvl);
        if (lvl.l2_error == 0.0) {
            any_zero = true;
        } else {
            log_h.push_back(std::log2(lvl.step_size));
            log_err.push_back(std::log2(lvl.l2_error));
        }
    }
    if (any_zero || log_h.size() < 2) {
        report.slope = std::numeric_limits<double>::quiet_NaN();
        return report;
    }
    double mh = 0.0, me = 0.0;
    for (size_t i = 0; i < log_h.size(); ++i) {
        mh += log_h[i];
        me += log_err[i];
    }
    mh /= static_cast<double>(log_h.size());
    me /= static_cast<double>(log_h.size());
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < log_h.size(); ++i) {
        num += (log_h[i] - mh) * (log_err[i] - me);
        den += (log_h[i] - mh) * (log_h[i] - mh);
    }
    report.slope = num / den;
    return report;
}

} // namespace kolmo
