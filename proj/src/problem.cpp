#include "kolmo/problem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kolmo {

Matrix cholesky_factor(const Matrix& q, double pivot_tol) {
    if (q.rows != q.cols) throw std::invalid_argument("cholesky_factor: matrix must be square");
    const int64_t n = q.rows;
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = 0; j < i; ++j)
            if (q(i, j) != q(j, i)) throw std::invalid_argument("cholesky_factor: matrix must be symmetric");

    double max_diag = 0.0;
    for (int64_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(q(i, i)));
    const double floor = pivot_tol * max_diag;

    Matrix l(n, n);
    for (int64_t j = 0; j < n; ++j) {
        double s = q(j, j);
        for (int64_t k = 0; k < j; ++k) s -= l(j, k) * l(j, k);
        if (!(s > floor)) throw std::domain_error("cholesky_factor: matrix is not positive definite");
        l(j, j) = std::sqrt(s);
        for (int64_t i = j + 1; i < n; ++i) {
            double v = q(i, j);
            for (int64_t k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
            l(i, j) = v / l(j, j);
        }
    }
    return l;
}

namespace {

void check_dims(size_t d, std::span<const double> x, std::span<const double> w, std::span<double> out,
                const char* who) {
    if (x.size() != d || w.size() != d || out.size() != d)
        throw std::invalid_argument(std::string(who) + ": dimension mismatch");
}

} // namespace

void step_gbm(const GbmParams& p, double s, double t, std::span<const double> x,
              std::span<const double> w, std::span<double> out) {
    check_dims(p.sigma.size(), x, w, out, "step_gbm");
    const double dt = t - s;
    for (size_t i = 0; i < x.size(); ++i) {
        const double sig = p.sigma[i];
        out[i] = x[i] * std::exp((p.mu - 0.5 * sig * sig) * dt + sig * w[i]);
    }
}

void step_bs_correlated(const CorrelatedBsParams& p, double s, double t, std::span<const double> x,
                        std::span<const double> w, std::span<double> out) {
    check_dims(p.beta.size(), x, w, out, "step_bs_correlated");
    const double dt = t - s;
    const int64_t d = p.chol_rows.rows;
    for (int64_t k = 0; k < d; ++k) {
        const double* row = p.chol_rows.row(k);
        double row_sq = 0.0;
        double mix = 0.0;
        for (int64_t j = 0; j <= k; ++j) { // lower triangular
            row_sq += row[j] * row[j];
            mix += row[j] * w[static_cast<size_t>(j)];
        }
        const double b = p.beta[static_cast<size_t>(k)];
        out[static_cast<size_t>(k)] =
            x[static_cast<size_t>(k)] * std::exp((p.mu - 0.5 * b * b * row_sq) * dt + b * mix);
    }
}

void lorenz_drift(const LorenzParams& p, std::span<const double> x, std::span<double> out) {
    if (x.size() != 3 || out.size() != 3) throw std::invalid_argument("lorenz_drift: dimension mismatch");
    out[0] = p.alpha1 * (x[1] - x[0]);
    out[1] = p.alpha2 * x[0] - x[1] - x[0] * x[2];
    out[2] = x[0] * x[1] - p.alpha3 * x[2];
}

void step_lorenz_tamed(const LorenzParams& p, double s, double t, std::span<const double> x,
                       std::span<const double> w, std::span<double> out) {
    check_dims(3, x, w, out, "step_lorenz_tamed");
    const double dt = t - s;
    double mu[3];
    lorenz_drift(p, x, mu);
    const double norm = std::sqrt(mu[0] * mu[0] + mu[1] * mu[1] + mu[2] * mu[2]);
    const bool keep_drift = norm <= p.drift_cap;
    for (size_t i = 0; i < 3; ++i)
        out[i] = x[i] + (keep_drift ? mu[i] * dt : 0.0) + p.beta * w[i];
}

void step_heston(const HestonParams& p, double s, double t, std::span<const double> x,
                 std::span<const double> w, std::span<double> out) {
    if (x.size() % 2 != 0) throw std::invalid_argument("step_heston: dimension must be even");
    check_dims(x.size(), x, w, out, "step_heston");
    const double dt = t - s;
    const double root_dt = std::sqrt(dt);
    const double rho_bar = std::sqrt(1.0 - p.rho * p.rho);
    for (size_t i = 0; i + 1 < x.size(); i += 2) {
        const double price = x[i];
        const double v = x[i + 1];
        if (v < 0.0) throw std::domain_error("step_heston: negative variance coordinate");
        out[i] = price * std::exp((p.alpha - 0.5 * v) * dt + w[i] * std::sqrt(v));
        const double half_beta_root = 0.5 * p.beta * root_dt;
        const double shifted =
            std::max(half_beta_root, std::sqrt(v)) + 0.5 * p.beta * (p.rho * w[i] + rho_bar * w[i + 1]);
        const double level = std::max(half_beta_root, shifted);
        out[i + 1] =
            std::max(level * level + (p.kappa * p.theta - 0.25 * p.beta * p.beta - p.kappa * v) * dt, 0.0);
    }
}

namespace {

struct ConstantTable {
    std::map<std::string, double> values;

    double get(const std::string& key) const { return values.at(key); }

    void apply(const std::map<std::string, double>& overrides, const std::string& problem) {
        for (const auto& [k, v] : overrides) {
            auto it = values.find(k);
            if (it == values.end())
                throw std::invalid_argument("unknown constant '" + k + "' for problem '" + problem + "'");
            it->second = v;
        }
    }
};

std::vector<double> linear_vols(int d, double base, double slope) {
    std::vector<double> v(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i) v[static_cast<size_t>(i)] = base + slope * static_cast<double>(i + 1);
    return v;
}

SdeProblem make_heat(int dim, const std::map<std::string, double>& overrides) {
    ConstantTable c{{{"diffusion", 1.0}, {"horizon", 1.0}, {"steps", 1.0}}};
    c.apply(overrides, "heat");
    const int d = dim > 0 ? dim : 100;
    const double scale = c.get("diffusion");

    SdeProblem p;
    p.name = "heat";
    p.dim = d;
    p.horizon = c.get("horizon");
    p.steps = static_cast<int64_t>(c.get("steps"));
    p.domain = Domain::cube(d, 0.0, 1.0);
    p.eval_domain = p.domain;
    p.step = [d, scale](double, double, std::span<const double> x, std::span<const double> w,
                        std::span<double> out) {
        check_dims(static_cast<size_t>(d), x, w, out, "heat step");
        for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] + scale * w[i];
    };
    p.payoff = [](std::span<const double> x) {
        double s = 0.0;
        for (double v : x) s += v * v;
        return s;
    };
    p.drift = [](std::span<const double> x, std::span<double> out) {
        (void)x;
        for (auto& v : out) v = 0.0;
    };
    p.diffusion = [scale](std::span<const double>, std::span<const double> w, std::span<double> out) {
        for (size_t i = 0; i < out.size(); ++i) out[i] = scale * w[i];
    };
    p.exact_step = true;
    p.params = c.values;
    p.default_hidden = 2 * d;
    p.default_eval_points = 10240000;
    p.default_reference_samples = 0; // analytic reference
    return p;
}

SdeProblem make_gbm(int dim, const std::map<std::string, double>& overrides) {
    ConstantTable c{{{"r", 0.05},
                     {"mu", -0.05},
                     {"sigma_base", 0.1},
                     {"sigma_slope", 1.0 / 200.0},
                     {"strike", 100.0},
                     {"horizon", 1.0},
                     {"steps", 1.0}}};
    c.apply(overrides, "gbm");
    const int d = dim > 0 ? dim : 100;

    GbmParams gp;
    gp.mu = c.get("mu");
    gp.sigma = linear_vols(d, c.get("sigma_base"), c.get("sigma_slope"));

    SdeProblem p;
    p.name = "gbm";
    p.dim = d;
    p.horizon = c.get("horizon");
    p.steps = static_cast<int64_t>(c.get("steps"));
    p.domain = Domain::cube(d, 90.0, 110.0);
    p.eval_domain = p.domain;
    p.step = [gp](double s, double t, std::span<const double> x, std::span<const double> w,
                  std::span<double> out) { step_gbm(gp, s, t, x, w, out); };
    const double discount = std::exp(-c.get("r") * p.horizon);
    const double strike = c.get("strike");
    p.payoff = [discount, strike](std::span<const double> x) {
        double m = x[0];
        for (double v : x) m = std::max(m, v);
        return discount * std::max(m - strike, 0.0);
    };
    const double mu = gp.mu;
    p.drift = [mu](std::span<const double> x, std::span<double> out) {
        for (size_t i = 0; i < x.size(); ++i) out[i] = mu * x[i];
    };
    const auto sig = gp.sigma;
    p.diffusion = [sig](std::span<const double> x, std::span<const double> w, std::span<double> out) {
        for (size_t i = 0; i < x.size(); ++i) out[i] = sig[i] * x[i] * w[i];
    };
    p.exact_step = true;
    p.params = c.values;
    p.default_hidden = 2 * d;
    p.default_eval_points = 81920;
    p.default_reference_samples = 1048576;
    return p;
}

SdeProblem make_bs_correlated(int dim, const std::map<std::string, double>& overrides) {
    ConstantTable c{{{"r", 0.05},
                     {"mu", -0.05},
                     {"beta_base", 0.1},
                     {"beta_slope", 1.0 / 200.0},
                     {"offdiag", 0.5},
                     {"strike", 110.0},
                     {"horizon", 1.0},
                     {"steps", 1.0}}};
    c.apply(overrides, "blackscholes-corr");
    const int d = dim > 0 ? dim : 100;

    Matrix q(d, d);
    for (int64_t i = 0; i < d; ++i)
        for (int64_t j = 0; j < d; ++j) q(i, j) = i == j ? 1.0 : c.get("offdiag");

    CorrelatedBsParams cp;
    cp.mu = c.get("mu");
    cp.beta = linear_vols(d, c.get("beta_base"), c.get("beta_slope"));
    cp.chol_rows = cholesky_factor(q);

    SdeProblem p;
    p.name = "blackscholes-corr";
    p.dim = d;
    p.horizon = c.get("horizon");
    p.steps = static_cast<int64_t>(c.get("steps"));
    p.domain = Domain::cube(d, 90.0, 110.0);
    p.eval_domain = p.domain;
    p.step = [cp](double s, double t, std::span<const double> x, std::span<const double> w,
                  std::span<double> out) { step_bs_correlated(cp, s, t, x, w, out); };
    const double discount = std::exp(-c.get("mu") * p.horizon);
    const double strike = c.get("strike");
    p.payoff = [discount, strike](std::span<const double> x) {
        double m = x[0];
        for (double v : x) m = std::min(m, v);
        return discount * std::max(strike - m, 0.0);
    };
    const double mu = cp.mu;
    p.drift = [mu](std::span<const double> x, std::span<double> out) {
        for (size_t i = 0; i < x.size(); ++i) out[i] = mu * x[i];
    };
    p.diffusion = [cp](std::span<const double> x, std::span<const double> w, std::span<double> out) {
        for (int64_t k = 0; k < cp.chol_rows.rows; ++k) {
            const double* row = cp.chol_rows.row(k);
            double mix = 0.0;
            for (int64_t j = 0; j <= k; ++j) mix += row[j] * w[static_cast<size_t>(j)];
            out[static_cast<size_t>(k)] =
                cp.beta[static_cast<size_t>(k)] * x[static_cast<size_t>(k)] * mix;
        }
    };
    p.exact_step = true;
    p.params = c.values;
    p.default_hidden = 2 * d;
    p.default_eval_points = 81920;
    p.default_reference_samples = 1048576;
    return p;
}

SdeProblem make_lorenz(int dim, const std::map<std::string, double>& overrides) {
    ConstantTable c{{{"alpha1", 10.0},
                     {"alpha2", 14.0},
                     {"alpha3", 8.0 / 3.0},
                     {"beta", 0.15},
                     {"horizon", 1.0},
                     {"steps", 100.0}}};
    c.apply(overrides, "lorenz");
    if (dim != 0 && dim != 3) throw std::invalid_argument("lorenz: dimension is fixed at 3");

    SdeProblem p;
    p.name = "lorenz";
    p.dim = 3;
    p.horizon = c.get("horizon");
    p.steps = static_cast<int64_t>(c.get("steps"));

    LorenzParams lp;
    lp.alpha1 = c.get("alpha1");
    lp.alpha2 = c.get("alpha2");
    lp.alpha3 = c.get("alpha3");
    lp.beta = c.get("beta");
    lp.drift_cap = static_cast<double>(p.steps) / p.horizon;

    p.domain = Domain({0.5, 8.0, 10.0}, {1.5, 10.0, 12.0});
    p.eval_domain = p.domain;
    p.step = [lp](double s, double t, std::span<const double> x, std::span<const double> w,
                  std::span<double> out) { step_lorenz_tamed(lp, s, t, x, w, out); };
    p.payoff = [](std::span<const double> x) {
        double s = 0.0;
        for (double v : x) s += v * v;
        return s;
    };
    p.drift = [lp](std::span<const double> x, std::span<double> out) { lorenz_drift(lp, x, out); };
    p.diffusion = [lp](std::span<const double>, std::span<const double> w, std::span<double> out) {
        for (size_t i = 0; i < out.size(); ++i) out[i] = lp.beta * w[i];
    };
    p.exact_step = false;
    p.params = c.values;
    p.default_hidden = p.dim + 20;
    p.default_eval_points = 20480;
    p.default_reference_samples = 104857;
    return p;
}

SdeProblem make_heston(int dim, const std::map<std::string, double>& overrides) {
    ConstantTable c{{{"alpha", 0.05},
                     {"kappa", 0.6},
                     {"theta", 0.04},
                     {"beta", 0.2},
                     {"rho", -0.8},
                     {"strike", 110.0},
                     {"price_lo", 90.0},
                     {"price_hi", 110.0},
                     {"variance_lo", 0.02},
                     {"variance_hi", 0.2},
                     {"horizon", 1.0},
                     {"steps", 100.0}}};
    c.apply(overrides, "heston");
    const int d = dim > 0 ? dim : 50;
    if (d % 2 != 0) throw std::invalid_argument("heston: dimension must be even (price/variance pairs)");
    const int pairs = d / 2;

    HestonParams hp;
    hp.alpha = c.get("alpha");
    hp.kappa = c.get("kappa");
    hp.theta = c.get("theta");
    hp.beta = c.get("beta");
    hp.rho = c.get("rho");

    SdeProblem p;
    p.name = "heston";
    p.dim = d;
    p.horizon = c.get("horizon");
    p.steps = static_cast<int64_t>(c.get("steps"));

    std::vector<double> lo(static_cast<size_t>(d)), hi(static_cast<size_t>(d));
    for (int i = 0; i < pairs; ++i) {
        lo[static_cast<size_t>(2 * i)] = c.get("price_lo");
        hi[static_cast<size_t>(2 * i)] = c.get("price_hi");
        lo[static_cast<size_t>(2 * i + 1)] = c.get("variance_lo");
        hi[static_cast<size_t>(2 * i + 1)] = c.get("variance_hi");
    }
    p.domain = Domain(std::move(lo), std::move(hi));
    p.eval_domain = p.domain;
    p.step = [hp](double s, double t, std::span<const double> x, std::span<const double> w,
                  std::span<double> out) { step_heston(hp, s, t, x, w, out); };
    const double discount = std::exp(-hp.alpha * p.horizon);
    const double strike = c.get("strike");
    p.payoff = [discount, strike, pairs](std::span<const double> x) {
        double avg = 0.0;
        for (int i = 0; i < pairs; ++i) avg += x[static_cast<size_t>(2 * i)];
        avg /= static_cast<double>(pairs);
        return discount * std::max(strike - avg, 0.0);
    };
    p.exact_step = false;
    p.params = c.values;
    p.default_hidden = d + 50;
    p.default_eval_points = 10240;
    p.default_reference_samples = 1048576;
    return p;
}

} // namespace

SdeProblem make_problem(const std::string& name, int dim, const std::map<std::string, double>& overrides) {
    if (name == "heat") return make_heat(dim, overrides);
    if (name == "gbm") return make_gbm(dim, overrides);
    if (name == "blackscholes-corr") return make_bs_correlated(dim, overrides);
    if (name == "lorenz") return make_lorenz(dim, overrides);
    if (name == "heston") return make_heston(dim, overrides);
    throw std::invalid_argument("unknown problem '" + name + "'");
}

std::vector<std::string> problem_names() {
    return {"heat", "gbm", "blackscholes-corr", "lorenz", "heston"};
}

} // namespace kolmo
