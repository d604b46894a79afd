#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "kolmo/evaluation.hpp"
#include "kolmo/training.hpp"

using namespace kolmo;

namespace {
StreamKey test_key(uint64_t seed, uint64_t step = 0) { return {seed, StreamUse::test, step}; }

double norm_sq(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}
} // namespace

TEST_CASE("relative_errors: identity, constant ratio, division floor") {
    const Domain box = Domain::cube(3, 0.0, 1.0);
    const auto reference = [](std::span<const double> x) {
        return ReferenceEstimate{norm_sq(x) + 3.0, 0.0, 0};
    };

    const auto exact_approx = [&](const Matrix& pts) {
        std::vector<double> out(size_t(pts.rows));
        for (int64_t j = 0; j < pts.rows; ++j)
            out[size_t(j)] = norm_sq(std::span<const double>(pts.row(j), 3)) + 3.0;
        return out;
    };
    const ErrorTriple zero = relative_errors(exact_approx, reference, box, 2000, test_key(1));
    CHECK(zero.l1 == 0.0);
    CHECK(zero.l2 == 0.0);
    CHECK(zero.linf == 0.0);

    const auto inflated = [&](const Matrix& pts) {
        auto out = exact_approx(pts);
        for (auto& v : out) v *= 1.01;
        return out;
    };
    const ErrorTriple one_pct = relative_errors(inflated, reference, box, 2000, test_key(2));
    CHECK(one_pct.l1 == doctest::Approx(0.01).epsilon(1e-10));
    CHECK(one_pct.l2 == doctest::Approx(0.01).epsilon(1e-10));
    CHECK(one_pct.linf == doctest::Approx(0.01).epsilon(1e-10));

    const auto zero_ref = [](std::span<const double>) { return ReferenceEstimate{0.0, 0.0, 0}; };
    CHECK_THROWS_AS(relative_errors(exact_approx, zero_ref, box, 10, test_key(3)), std::domain_error);
}

TEST_CASE("sup estimator: accuracy, nesting, stabilization") {
    const Domain square = Domain::cube(2, 0.0, 1.0);
    const auto f = [](std::span<const double> x) { return norm_sq(x); };

    const double big = sup_estimate(f, square, 1000000, test_key(4));
    CHECK(big <= 2.0);
    CHECK(big > 2.0 * 0.99);

    // points are keyed by index, so smaller sample sets are strict subsets
    double prev = 0.0;
    for (int64_t n : {1000, 4000, 16000, 64000}) {
        const double est = sup_estimate(f, square, n, test_key(4));
        CHECK(est >= prev);
        prev = est;
    }

    const double k1 = sup_estimate(f, square, 250000, test_key(4));
    CHECK(std::abs(big - k1) / big < 0.01);
}

TEST_CASE("aggregate_over_runs") {
    const ErrorTriple single{0.1, 0.2, 0.3};
    const AggregateReport one = aggregate_over_runs(std::vector<ErrorTriple>{single});
    CHECK(one.l1_of_l1 == 0.1);
    CHECK(one.l2_of_l2 == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(one.l2_of_linf == doctest::Approx(0.3).epsilon(1e-15));

    const std::vector<ErrorTriple> two = {{0.0, 0.0, 0.3}, {0.0, 0.0, 0.4}};
    CHECK(aggregate_over_runs(two).l2_of_linf == doctest::Approx(std::sqrt(0.125)).epsilon(1e-12));

    const std::vector<ErrorTriple> abc = {{0.1, 0.5, 0.3}, {0.7, 0.2, 0.9}, {0.4, 0.8, 0.6}};
    const std::vector<ErrorTriple> cba = {abc[2], abc[0], abc[1]};
    const auto r1 = aggregate_over_runs(abc);
    const auto r2 = aggregate_over_runs(cba);
    CHECK(r1.l1_of_l1 == doctest::Approx(r2.l1_of_l1).epsilon(1e-15));
    CHECK(r1.l2_of_l2 == doctest::Approx(r2.l2_of_l2).epsilon(1e-15));
    CHECK(r1.l2_of_linf == doctest::Approx(r2.l2_of_linf).epsilon(1e-15));

    // mean of squares dominates the squared mean
    double mean = 0.0, mean_sq = 0.0;
    for (const auto& t : abc) {
        mean += t.l2 / 3.0;
        mean_sq += t.l2 * t.l2 / 3.0;
    }
    CHECK(mean_sq >= mean * mean - 1e-15);

    CHECK_THROWS_AS(aggregate_over_runs(std::vector<ErrorTriple>{}), std::invalid_argument);
}

TEST_CASE("independent training runs aggregate into the multi-run report") {
    // three tiny runs of the same setup differing only in seed, evaluated on
    // the same points, then pooled
    const SdeProblem heat = make_problem("heat", 1);
    const auto reference = make_reference_fn(heat, 0, 1);
    std::vector<ErrorTriple> runs;
    for (uint64_t seed : {101u, 102u, 103u}) {
        TrainConfig cfg;
        cfg.batch = 64;
        cfg.steps = 600;
        cfg.seed = seed;
        cfg.schedule = Schedule::constant(1e-2);
        const NetworkSpec spec = network_spec_for(heat, cfg);
        auto [state, log] = train<double>(heat, spec, cfg);
        const auto approx = [&](const Matrix& pts) {
            const Mat<double> out = forward_infer(state.params, state.stats, pts);
            std::vector<double> v(size_t(out.rows));
            for (int64_t j = 0; j < out.rows; ++j) v[size_t(j)] = out(j, 0);
            return v;
        };
        runs.push_back(relative_errors(approx, reference, heat.eval_domain, 2000,
                                       StreamKey{55, StreamUse::evaluation, 0}));
    }
    const AggregateReport agg = aggregate_over_runs(runs);
    CHECK(agg.runs == 3);
    CHECK(agg.l1_of_l1 > 0.0);
    CHECK(agg.l1_of_l1 < 1.0);       // better than the untrained baseline
    CHECK(agg.l2_of_linf >= agg.l2_of_l2 - 1e-15); // max dominates the mean square
}

TEST_CASE("strong convergence of Euler-Maruyama on geometric Brownian motion") {
    const SdeProblem gbm = make_problem("gbm", 1);
    const std::vector<int> levels = {2, 3, 4, 5, 6, 7};
    const ConvergenceReport report = strong_convergence(gbm, levels, 20000, test_key(5));
    REQUIRE(report.levels.size() == 6);
    for (size_t i = 1; i < report.levels.size(); ++i)
        CHECK(report.levels[i].l2_error < report.levels[i - 1].l2_error);
    CHECK(report.slope > 0.35);
    CHECK(report.slope < 0.65);
}

TEST_CASE("deterministic linear drift converges at first order") {
    SdeProblem ode;
    ode.name = "ode";
    ode.dim = 1;
    ode.horizon = 1.0;
    ode.steps = 1;
    ode.domain = Domain::cube(1, 1.0, 2.0);
    ode.eval_domain = ode.domain;
    ode.exact_step = true;
    ode.step = [](double s, double t, std::span<const double> x, std::span<const double>,
                  std::span<double> out) { out[0] = x[0] * std::exp(t - s); };
    ode.payoff = [](std::span<const double> x) { return x[0]; };
    ode.drift = [](std::span<const double> x, std::span<double> out) { out[0] = x[0]; };
    ode.diffusion = [](std::span<const double>, std::span<const double>, std::span<double> out) {
        out[0] = 0.0;
    };
    const std::vector<int> levels = {2, 3, 4, 5, 6};
    const ConvergenceReport report = strong_convergence(ode, levels, 64, test_key(6));
    CHECK(report.slope >= 0.9);
}

TEST_CASE("exact step coupled to itself leaves only summation-order noise") {
    const SdeProblem heat = make_problem("heat", 1); // constant diffusion: Euler is exact
    const std::vector<int> levels = {2, 3, 4};
    const ConvergenceReport report = strong_convergence(heat, levels, 500, test_key(7));
    for (const auto& lvl : report.levels) CHECK(lvl.l2_error <= 1e-13);

    const SdeProblem lorenz = make_problem("lorenz");
    CHECK_THROWS_AS(strong_convergence(lorenz, levels, 10, test_key(8)), std::invalid_argument);
    const SdeProblem gbm = make_problem("gbm", 1);
    const std::vector<int> one = {3};
    CHECK_THROWS_AS(strong_convergence(gbm, one, 10, test_key(9)), std::invalid_argument);
}

TEST_CASE("the sample mean uniquely minimizes the mean squared deviation") {
    Rng rng(test_key(10), 0);
    for (int trial = 0; trial < 10; ++trial) {
        const size_t n = 5 + size_t(rng.next_u64() % 60);
        std::vector<double> xs(n);
        for (auto& v : xs) v = 3.0 * rng.normal() + 1.0;
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

        for (int k = 0; k < 25; ++k) {
            const double y = mean + rng.uniform(-5.0, 5.0);
            CHECK(msd(y) == doctest::Approx(base + (mean - y) * (mean - y)).epsilon(1e-12));
        }
        // grid scan around the mean: every other grid point is strictly worse
        for (int g = -50; g <= 50; ++g) {
            const double y = mean + 0.1 * g;
            if (g == 0) continue;
            CHECK(msd(y) > base);
        }
        CHECK(msd(mean) == doctest::Approx(base).epsilon(1e-15));
    }
}
