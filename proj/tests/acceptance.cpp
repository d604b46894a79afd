// Acceptance suite: end-to-end checks of the solver pipeline, one printed
// pass/fail line per criterion.  Exit status is nonzero if any criterion
// fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "kolmo/evaluation.hpp"
#include "kolmo/problem.hpp"
#include "kolmo/reference.hpp"
#include "kolmo/rng.hpp"
#include "kolmo/simulate.hpp"
#include "kolmo/training.hpp"

using namespace kolmo;

namespace {

int failures = 0;

void report(int index, const std::string& name, bool ok, const std::string& detail) {
    std::printf("[%s] criterion %2d: %s  (%s)\n", ok ? "PASS" : "FAIL", index, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

StreamKey key(uint64_t seed, uint64_t step = 0) { return {seed, StreamUse::test, step}; }

// ---------------------------------------------------------------- 1
void criterion_gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(key(1001), 0);
    double worst = 0.0;
    for (int trial = 0; trial < 30; ++trial) {
        NetworkSpec spec;
        spec.input_dim = 1 + int(rng.next_u64() % 6);
        spec.hidden1 = 2 + int(rng.next_u64() % 7);
        spec.hidden2 = 2 + int(rng.next_u64() % 7);
        spec.activation = (trial % 3 == 2) ? Activation::logistic_fn : Activation::tanh_fn;
        auto [params, stats] = xavier_init<double>(spec, 2000 + uint64_t(trial));
        for (int site = 0; site < 4; ++site) {
            for (auto& v : params.scale(site)) v = rng.uniform(0.5, 1.5);
            for (auto& v : params.shift(site)) v = rng.uniform(-0.5, 0.5);
        }
        const int64_t rows = 4 + int64_t(rng.next_u64() % 13);
        Mat<double> batch(rows, spec.input_dim);
        for (auto& v : batch.a) v = 1.5 * rng.normal();
        std::vector<double> targets(static_cast<size_t>(rows));
        for (auto& t : targets) t = rng.normal();

        auto loss_at = [&](NetParams<double>& p) {
            ForwardTape<double> tape;
            forward_train(p, batch, tape);
            double acc = 0.0;
            for (int64_t j = 0; j < rows; ++j) {
                const double r = tape.out(j, 0) - targets[size_t(j)];
                acc += r * r;
            }
            return acc / double(rows);
        };

        ForwardTape<double> tape;
        forward_train(params, batch, tape);
        Mat<double> gout(rows, 1);
        for (int64_t j = 0; j < rows; ++j)
            gout(j, 0) = 2.0 * (tape.out(j, 0) - targets[size_t(j)]) / double(rows);
        const std::vector<double> grad = backward(params, tape, gout);

        const double h = 1e-5;
        for (size_t i = 0; i < params.theta.size(); ++i) {
            const double keep = params.theta[i];
            params.theta[i] = keep + h;
            const double up = loss_at(params);
            params.theta[i] = keep - h;
            const double dn = loss_at(params);
            params.theta[i] = keep;
            const double fd = (up - dn) / (2.0 * h);
            const double allowed = std::max(1e-4 * std::max(std::abs(grad[i]), std::abs(fd)), 1e-8);
            worst = std::max(worst, std::abs(grad[i] - fd) / allowed);
        }
    }
    const double secs = seconds_since(t0);
    report(1, "reverse-mode gradients match central finite differences", worst <= 1.0 && secs < 60.0,
           "worst scaled deviation " + std::to_string(worst) + ", " + std::to_string(secs) + " s");
}

// ---------------------------------------------------------------- 2
void criterion_heat_d5() {
    const auto t0 = std::chrono::steady_clock::now();
    const SdeProblem heat = make_problem("heat", 5);
    TrainConfig cfg;
    cfg.batch = 256;
    cfg.steps = 20000;
    cfg.seed = 20;
    cfg.schedule = Schedule::constant(1e-3);
    const NetworkSpec spec = network_spec_for(heat, cfg);
    auto [state, log] = train<double>(heat, spec, cfg);

    const auto reference = make_reference_fn(heat, 0, 1);
    const auto approx = [&](const Matrix& pts) {
        Mat<double> in = pts;
        const Mat<double> out = forward_infer(state.params, state.stats, in);
        std::vector<double> v(size_t(out.rows));
        for (int64_t j = 0; j < out.rows; ++j) v[size_t(j)] = out(j, 0);
        return v;
    };
    const ErrorTriple err =
        relative_errors(approx, reference, heat.eval_domain, 100000, {21, StreamUse::evaluation, 0});
    const double secs = seconds_since(t0);
    report(2, "scaled heat solve reaches the exact solution", err.l1 < 0.05 && err.linf < 0.15 && secs < 600.0,
           "rel_l1 " + std::to_string(err.l1) + ", rel_linf " + std::to_string(err.linf) + ", " +
               std::to_string(secs) + " s");
}

// ---------------------------------------------------------------- 3
void criterion_heat_d100_smoke() {
    const auto t0 = std::chrono::steady_clock::now();
    const SdeProblem heat = make_problem("heat");
    TrainConfig cfg;
    cfg.batch = 8192;
    cfg.steps = 1000;
    cfg.seed = 30;
    cfg.schedule = Schedule::constant(0.1);
    const NetworkSpec spec = network_spec_for(heat, cfg);

    const auto reference = make_reference_fn(heat, 0, 1);
    double rel_l1_first = -1.0, rel_l1_last = -1.0;
    TrainHooks<double> hooks;
    cfg.eval_cadence = 1000;
    hooks.on_eval = [&](int64_t step, const NetParams<double>& params, const BnStats<double>& stats) {
        const auto approx = [&](const Matrix& pts) {
            Mat<double> in = pts;
            const Mat<double> out = forward_infer(params, stats, in);
            std::vector<double> v(size_t(out.rows));
            for (int64_t j = 0; j < out.rows; ++j) v[size_t(j)] = out(j, 0);
            return v;
        };
        const ErrorTriple err =
            relative_errors(approx, reference, heat.eval_domain, 20000, {31, StreamUse::evaluation, 0});
        (step == 0 ? rel_l1_first : rel_l1_last) = err.l1;
    };
    auto [state, log] = train<double>(heat, spec, cfg, hooks);

    const double loss0 = log.records.front().loss;
    double trailing = 0.0;
    for (size_t i = log.records.size() - 100; i < log.records.size(); ++i) trailing += log.records[i].loss;
    trailing /= 100.0;
    const double secs = seconds_since(t0);
    const bool ok = trailing < 0.5 * loss0 && rel_l1_last >= 0.0 && rel_l1_last < rel_l1_first && secs < 900.0;
    report(3, "full-dimension smoke at d=100 halves the loss and reduces the error", ok,
           "trailing/initial " + std::to_string(trailing / loss0) + ", rel_l1 " +
               std::to_string(rel_l1_first) + " -> " + std::to_string(rel_l1_last) + ", " +
               std::to_string(secs) + " s");
}

// ---------------------------------------------------------------- 4
void criterion_strong_order() {
    const auto t0 = std::chrono::steady_clock::now();
    const SdeProblem gbm = make_problem("gbm", 1);
    const std::vector<int> levels = {2, 3, 4, 5, 6, 7};
    const ConvergenceReport rep = strong_convergence(gbm, levels, 100000, key(40));
    const double secs = seconds_since(t0);
    report(4, "Euler-Maruyama strong order is near one half",
           rep.slope > 0.35 && rep.slope < 0.65 && secs < 120.0,
           "slope " + std::to_string(rep.slope) + ", " + std::to_string(secs) + " s");
}

// ---------------------------------------------------------------- 5
void criterion_adam_oracle() {
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8, gamma = 1e-3;
    double ref_theta = 1.0, x = 0.0, y = 0.0;
    auto state = AdamState<double>::zero(1);
    std::vector<double> theta = {1.0};
    double worst = 0.0;
    for (int m = 1; m <= 10; ++m) {
        const double g = ref_theta;
        x = beta1 * x + (1 - beta1) * g;
        y = beta2 * y + (1 - beta2) * g * g;
        ref_theta -= gamma * (x / (1 - std::pow(beta1, m))) / (std::sqrt(std::abs(y) / (1 - std::pow(beta2, m))) + eps);
        const std::vector<double> grad = {theta[0]};
        adam_step<double>(state, theta, grad, Schedule::constant(gamma));
        worst = std::max(worst, std::abs(theta[0] - ref_theta));
    }
    const Schedule sched = default_schedule();
    const bool boundaries = lr(sched, 250000) == 1e-3 && lr(sched, 250001) == 1e-4 && lr(sched, 500001) == 1e-5;
    report(5, "Adam matches an independent oracle and the schedule boundaries",
           worst < 1e-12 && boundaries, "max trajectory deviation " + std::to_string(worst));
}

// ---------------------------------------------------------------- 6
void criterion_reference_consistency() {
    const auto t0 = std::chrono::steady_clock::now();
    GbmParams p;
    p.mu = -0.05;
    p.sigma = {0.105};
    const double disc = std::exp(-0.05);
    const std::vector<double> spot = {100.0};
    const auto mc = gbm_representation_mc(spot, p, 1.0, disc, 100.0, 1000000, key(60));
    const double closed = lognormal_option_closed_form(100.0, -0.05, 0.105, 1.0, 100.0, disc);
    const bool call_ok = std::abs(mc.value - closed) < 3.0 * mc.std_error;

    const SdeProblem heat = make_problem("heat");
    int excursions = 0;
    for (int k = 0; k < 20; ++k) {
        Rng rng(key(61, uint64_t(k)), 0);
        std::vector<double> x(size_t(heat.dim));
        for (auto& v : x) v = rng.uniform(0.0, 1.0);
        const auto est = generic_feynman_kac_mc(heat, x, 100000, key(62, uint64_t(k)));
        if (std::abs(est.value - heat_exact(heat.horizon, x, heat.dim)) >= 3.0 * est.std_error) ++excursions;
    }
    const double secs = seconds_since(t0);
    report(6, "Monte Carlo references agree with analytic oracles", call_ok && excursions <= 1,
           "call deviation " + std::to_string(std::abs(mc.value - closed) / mc.std_error) +
               " se, heat excursions " + std::to_string(excursions) + "/20, " + std::to_string(secs) + " s");
}

// ---------------------------------------------------------------- 7
void criterion_sup_estimator() {
    const Domain square = Domain::cube(2, 0.0, 1.0);
    const auto f = [](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1]; };
    const double est = sup_estimate(f, square, 1000000, key(70));
    bool monotone = true;
    double prev = 0.0;
    for (int64_t n : {10000, 40000, 160000, 640000}) {
        const double e = sup_estimate(f, square, n, key(70));
        if (e < prev) monotone = false;
        prev = e;
    }
    report(7, "max-sampling sup estimator is accurate and monotone",
           std::abs(est - 2.0) < 0.01 * 2.0 && est <= 2.0 && monotone,
           "estimate " + std::to_string(est) + " vs 2");
}

// ---------------------------------------------------------------- 8
void criterion_mean_minimizer() {
    Rng rng(key(80), 0);
    bool ok = true;
    for (int trial = 0; trial < 10; ++trial) {
        const size_t n = 4 + size_t(rng.next_u64() % 40);
        std::vector<double> xs(n);
        for (auto& v : xs) v = 2.0 * rng.normal() - 0.5;
        double mean = 0.0;
        for (double v : xs) mean += v;
        mean /= double(n);
        double base = 0.0;
        for (double v : xs) base += (v - mean) * (v - mean);
        base /= double(n);
        auto msd = [&xs](double y) {
            double acc = 0.0;
            for (double v : xs) acc += (v - y) * (v - y);
            return acc / double(xs.size());
        };
        for (int k = 0; k < 20; ++k) {
            const double y = mean + rng.uniform(-4.0, 4.0);
            if (std::abs(msd(y) - (base + (mean - y) * (mean - y))) > 1e-12 * std::max(1.0, msd(y)))
                ok = false;
        }
        for (int g = -40; g <= 40; ++g) {
            if (g == 0) continue;
            if (!(msd(mean + 0.05 * g) > base)) ok = false;
        }
    }
    report(8, "empirical mean-minimizer identity holds to 1e-12", ok, "10 random samples, grid scans");
}

// ---------------------------------------------------------------- 9
void criterion_cholesky() {
    const int d = 100;
    Matrix q(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) q(i, j) = i == j ? 1.0 : 0.5;
    const Matrix l = cholesky_factor(q);
    double residual = 0.0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            double prod = 0.0;
            for (int k = 0; k <= std::min(i, j); ++k) prod += l(i, k) * l(j, k);
            residual += (prod - q(i, j)) * (prod - q(i, j));
        }
    residual = std::sqrt(residual);

    Matrix q2(2, 2);
    q2(0, 0) = q2(1, 1) = 1.0;
    q2(0, 1) = q2(1, 0) = 0.5;
    const Matrix f = cholesky_factor(q2);
    const bool hand = f(0, 0) == 1.0 && f(0, 1) == 0.0 && std::abs(f(1, 0) - 0.5) < 1e-15 &&
                      std::abs(f(1, 1) - std::sqrt(3.0) / 2.0) < 1e-15;
    report(9, "Cholesky factorization of the correlation design matrix", residual < 1e-12 && hand,
           "Frobenius residual " + std::to_string(residual));
}

// ---------------------------------------------------------------- 10
void criterion_determinism() {
    const SdeProblem heat = make_problem("heat", 1);
    TrainConfig cfg;
    cfg.batch = 64;
    cfg.steps = 40;
    cfg.seed = 100;
    const NetworkSpec spec = network_spec_for(heat, cfg);

    auto strip_runtime = [](const std::string& csv) {
        std::string out;
        size_t pos = 0;
        while (pos < csv.size()) {
            size_t end = csv.find('\n', pos);
            if (end == std::string::npos) end = csv.size();
            const std::string line = csv.substr(pos, end - pos);
            out += line.substr(0, line.rfind(','));
            out += '\n';
            pos = end + 1;
        }
        return out;
    };

    auto [s1, l1] = train<double>(heat, spec, cfg);
    auto [s2, l2] = train<double>(heat, spec, cfg);
    const bool logs_equal = strip_runtime(runlog_csv(l1)) == strip_runtime(runlog_csv(l2));

    const std::string path = "acceptance_checkpoint.kckpt";
    save_checkpoint(path, s1);
    const Checkpoint<double> back = load_checkpoint<double>(path);
    bool roundtrip = back.step == s1.step && back.params.theta.size() == s1.params.theta.size();
    for (size_t i = 0; roundtrip && i < s1.params.theta.size(); ++i)
        roundtrip = back.params.theta[i] == s1.params.theta[i];
    for (size_t i = 0; roundtrip && i < s1.adam.m1.size(); ++i)
        roundtrip = back.adam.m1[i] == s1.adam.m1[i] && back.adam.m2[i] == s1.adam.m2[i];
    std::remove(path.c_str());

    TrainConfig first = cfg;
    first.steps = 15;
    auto [mid, lmid] = train<double>(heat, spec, first);
    auto [resumed, lres] = train<double>(heat, spec, cfg, {}, &mid);
    bool resume_equal = resumed.step == s1.step;
    for (size_t i = 0; resume_equal && i < s1.params.theta.size(); ++i)
        resume_equal = resumed.params.theta[i] == s1.params.theta[i];
    for (size_t i = 0; resume_equal && i < lres.records.size(); ++i)
        resume_equal = lres.records[i].loss == l1.records[i + 15].loss;

    report(10, "determinism: same-seed logs, checkpoint round-trip, resume equality",
           logs_equal && roundtrip && resume_equal,
           std::string("logs ") + (logs_equal ? "equal" : "DIFFER") + ", roundtrip " +
               (roundtrip ? "exact" : "BROKEN") + ", resume " + (resume_equal ? "exact" : "BROKEN"));
}

} // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    criterion_gradients();
    criterion_adam_oracle();     // cheap, early signal
    criterion_cholesky();
    criterion_mean_minimizer();
    criterion_sup_estimator();
    criterion_strong_order();
    criterion_reference_consistency();
    criterion_determinism();
    criterion_heat_d5();
    criterion_heat_d100_smoke();
    std::printf("%s: %d criterion(s) failed, total %.1f s\n", failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL",
                failures, seconds_since(t0));
    return failures == 0 ? 0 : 1;
}
