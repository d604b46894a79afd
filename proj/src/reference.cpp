#include "kolmo/reference.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "kolmo/io.hpp"
#include "kolmo/parallel.hpp"
#include "kolmo/simulate.hpp"

namespace kolmo {

double heat_exact(double t, std::span<const double> x, int dim) {
    if (x.size() != static_cast<size_t>(dim)) throw std::invalid_argument("heat_exact: dimension mismatch");
    double s = 0.0;
    for (double v : x) s += v * v;
    return s + t * static_cast<double>(dim);
}

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Deterministic mean/variance accumulation: per-sample values are reduced
// over fixed chunks combined in ascending order, so the estimate does not
// depend on the thread count.  The variance uses a two-pass sum of squared
// deviations, which stays exact for (near-)degenerate samples.
template <class Fn>
ReferenceEstimate mc_estimate(int64_t samples, Fn&& sample_value) {
    if (samples < 2) throw std::invalid_argument("monte carlo estimate needs at least 2 samples");
    std::vector<double> values(static_cast<size_t>(samples));
    parallel_for(samples, [&](int64_t b, int64_t e) {
        for (int64_t i = b; i < e; ++i) values[static_cast<size_t>(i)] = sample_value(i);
    });
    const int64_t chunks = (samples + kParallelChunk - 1) / kParallelChunk;
    double s = 0.0;
    for (int64_t c = 0; c < chunks; ++c) {
        const int64_t b = c * kParallelChunk;
        const int64_t e = std::min(b + kParallelChunk, samples);
        double partial = 0.0;
        for (int64_t i = b; i < e; ++i) partial += values[static_cast<size_t>(i)];
        s += partial;
    }
    const double n = static_cast<double>(samples);
    const double mean = s / n;
    double dev = 0.0;
    for (int64_t c = 0; c < chunks; ++c) {
        const int64_t b = c * kParallelChunk;
        const int64_t e = std::min(b + kParallelChunk, samples);
        double partial = 0.0;
        for (int64_t i = b; i < e; ++i) {
            const double d = values[static_cast<size_t>(i)] - mean;
            partial += d * d;
        }
        dev += partial;
    }
    ReferenceEstimate est;
    est.value = mean;
    est.std_error = std::sqrt(dev / (n - 1.0) / n);
    est.samples = samples;
    return est;
}

} // namespace

double lognormal_option_closed_form(double s0, double drift, double vol, double horizon, double strike,
                                    double discount, bool put) {
    if (!(s0 > 0.0)) throw std::invalid_argument("lognormal_option_closed_form: spot must be positive");
    if (vol < 0.0) throw std::invalid_argument("lognormal_option_closed_form: volatility must be >= 0");
    if (!(horizon > 0.0)) throw std::invalid_argument("lognormal_option_closed_form: horizon must be positive");
    const double fwd = s0 * std::exp(drift * horizon);
    double call;
    if (strike <= 0.0) {
        call = fwd - strike;
    } else if (vol == 0.0) {
        call = std::max(fwd - strike, 0.0);
    } else {
        const double sd = vol * std::sqrt(horizon);
        const double d1 = (std::log(fwd / strike) + 0.5 * sd * sd) / sd;
        const double d2 = d1 - sd;
        call = fwd * normal_cdf(d1) - strike * normal_cdf(d2);
    }
    if (put) return discount * (call - fwd + strike);
    return discount * call;
}

ReferenceEstimate gbm_representation_mc(std::span<const double> x, const GbmParams& params, double horizon,
                                        double discount, double strike, int64_t samples, StreamKey key) {
    const size_t d = params.sigma.size();
    if (x.size() != d) throw std::invalid_argument("gbm_representation_mc: dimension mismatch");
    const double root_t = std::sqrt(horizon);
    return mc_estimate(samples, [&](int64_t i) {
        Rng rng(key, static_cast<uint64_t>(i));
        double best = -std::numeric_limits<double>::infinity();
        for (size_t k = 0; k < d; ++k) {
            const double sig = params.sigma[k];
            const double z = rng.normal();
            const double terminal =
                x[k] * std::exp((params.mu - 0.5 * sig * sig) * horizon + sig * root_t * z);
            best = std::max(best, terminal);
        }
        return discount * std::max(best - strike, 0.0);
    });
}

ReferenceEstimate bs_correlated_representation_mc(std::span<const double> x, const CorrelatedBsParams& params,
                                                  double horizon, double discount, double strike,
                                                  int64_t samples, StreamKey key) {
    const size_t d = params.beta.size();
    if (x.size() != d) throw std::invalid_argument("bs_correlated_representation_mc: dimension mismatch");
    const double root_t = std::sqrt(horizon);
    return mc_estimate(samples, [&](int64_t i) {
        Rng rng(key, static_cast<uint64_t>(i));
        std::vector<double> w(d);
        for (auto& v : w) v = root_t * rng.normal();
        double worst = std::numeric_limits<double>::infinity();
        for (size_t k = 0; k < d; ++k) {
            const double* row = params.chol_rows.row(static_cast<int64_t>(k));
            double row_sq = 0.0, mix = 0.0;
            for (size_t j = 0; j <= k; ++j) {
                row_sq += row[j] * row[j];
                mix += row[j] * w[j];
            }
            const double b = params.beta[k];
            const double terminal = x[k] * std::exp((params.mu - 0.5 * b * b * row_sq) * horizon + b * mix);
            worst = std::min(worst, terminal);
        }
        return discount * std::max(strike - worst, 0.0);
    });
}

ReferenceEstimate generic_feynman_kac_mc(const SdeProblem& problem, std::span<const double> x,
                                         int64_t samples, StreamKey key) {
    if (x.size() != static_cast<size_t>(problem.dim))
        throw std::invalid_argument("generic_feynman_kac_mc: dimension mismatch");
    const TimeGrid grid = make_grid(problem.horizon, problem.steps);
    const int d = problem.dim;
    return mc_estimate(samples, [&](int64_t i) {
        Rng rng(key, static_cast<uint64_t>(i));
        std::vector<double> state(x.begin(), x.end()), next(static_cast<size_t>(d)), w(static_cast<size_t>(d));
        for (int64_t n = 0; n < problem.steps; ++n) {
            const double s = grid.nodes[static_cast<size_t>(n)];
            const double t = grid.nodes[static_cast<size_t>(n + 1)];
            const double root_dt = std::sqrt(t - s);
            for (int k = 0; k < d; ++k) w[static_cast<size_t>(k)] = root_dt * rng.normal();
            problem.step(s, t, state, w, next);
            state.swap(next);
        }
        return problem.payoff(state);
    });
}

namespace {

// Streams for per-point references are keyed by the point itself, so the
// same point gets the same estimate on every evaluation pass.
uint64_t point_stream(std::span<const double> x) {
    uint64_t h = 0xA24BAED4963EE407ULL;
    for (double v : x) {
        uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        h ^= bits;
        h = detail::splitmix64(h);
    }
    return h;
}

} // namespace

std::function<ReferenceEstimate(std::span<const double>)>
make_reference_fn(const SdeProblem& problem, int64_t samples, uint64_t seed) {
    if (problem.name == "heat") {
        const double scale = problem.params.count("diffusion") ? problem.params.at("diffusion") : 1.0;
        const double t = problem.horizon;
        const int d = problem.dim;
        return [t, d, scale](std::span<const double> x) {
            double s = 0.0;
            for (double v : x) s += v * v;
            return ReferenceEstimate{s + t * scale * scale * static_cast<double>(d), 0.0, 0};
        };
    }
    if (problem.name == "gbm") {
        GbmParams gp;
        gp.mu = problem.params.at("mu");
        gp.sigma.resize(static_cast<size_t>(problem.dim));
        for (int i = 0; i < problem.dim; ++i)
            gp.sigma[static_cast<size_t>(i)] =
                problem.params.at("sigma_base") + problem.params.at("sigma_slope") * (i + 1);
        const double discount = std::exp(-problem.params.at("r") * problem.horizon);
        const double strike = problem.params.at("strike");
        const double horizon = problem.horizon;
        return [=](std::span<const double> x) {
            return gbm_representation_mc(x, gp, horizon, discount, strike, samples,
                                         StreamKey{seed, StreamUse::reference, point_stream(x)});
        };
    }
    if (problem.name == "blackscholes-corr") {
        CorrelatedBsParams cp;
        cp.mu = problem.params.at("mu");
        cp.beta.resize(static_cast<size_t>(problem.dim));
        for (int i = 0; i < problem.dim; ++i)
            cp.beta[static_cast<size_t>(i)] =
                problem.params.at("beta_base") + problem.params.at("beta_slope") * (i + 1);
        Matrix q(problem.dim, problem.dim);
        for (int64_t i = 0; i < problem.dim; ++i)
            for (int64_t j = 0; j < problem.dim; ++j)
                q(i, j) = i == j ? 1.0 : problem.params.at("offdiag");
        cp.chol_rows = cholesky_factor(q);
        const double discount = std::exp(-cp.mu * problem.horizon);
        const double strike = problem.params.at("strike");
        const double horizon = problem.horizon;
        return [=](std::span<const double> x) {
            return bs_correlated_representation_mc(x, cp, horizon, discount, strike, samples,
                                                   StreamKey{seed, StreamUse::reference, point_stream(x)});
        };
    }
    SdeProblem copy = problem;
    return [copy, samples, seed](std::span<const double> x) {
        return generic_feynman_kac_mc(copy, x, samples, StreamKey{seed, StreamUse::reference, point_stream(x)});
    };
}

std::string ReferenceCache::key_for(const std::string& problem, std::span<const double> point,
                                    int64_t samples, uint64_t seed) {
    uint64_t h = 0x9E3779B97F4A7C15ULL;
    auto mix = [&h](uint64_t v) {
        h ^= v;
        h = detail::splitmix64(h);
    };
    for (char c : problem) mix(static_cast<uint64_t>(static_cast<unsigned char>(c)));
    for (double v : point) {
        uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        mix(bits);
    }
    mix(static_cast<uint64_t>(samples));
    mix(seed);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void ReferenceCache::load(const std::string& path) {
    std::istringstream is;
    try {
        is.str(read_file(path));
    } catch (const std::runtime_error&) {
        return; // no cache yet
    }
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string key;
        ReferenceEstimate est;
        if (ls >> key >> est.value >> est.std_error >> est.samples) entries_[key] = est;
    }
}

void ReferenceCache::save(const std::string& path) const {
    std::ostringstream os;
    os << "# reference cache v1: key value std_error samples\n";
    os.precision(17);
    for (const auto& [k, v] : entries_)
        os << k << ' ' << v.value << ' ' << v.std_error << ' ' << v.samples << '\n';
    atomic_write_file(path, os.str());
}

std::optional<ReferenceEstimate> ReferenceCache::lookup(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void ReferenceCache::insert(const std::string& key, const ReferenceEstimate& est) { entries_[key] = est; }

} // namespace kolmo
