#include "kolmo/network.hpp"

#include <cmath>
#include <stdexcept>

#include "kolmo/io.hpp"
#include "kolmo/rng.hpp"

namespace kolmo {

std::string to_string(Activation a) {
    switch (a) {
        case Activation::tanh_fn: return "tanh";
        case Activation::logistic_fn: return "logistic";
        case Activation::identity_fn: return "identity";
    }
    return "?";
}

std::optional<Activation> activation_from_string(const std::string& s) {
    if (s == "tanh") return Activation::tanh_fn;
    if (s == "logistic") return Activation::logistic_fn;
    if (s == "identity") return Activation::identity_fn;
    return std::nullopt;
}

std::string to_string(Precision p) { return p == Precision::f32 ? "f32" : "f64"; }

std::optional<Precision> precision_from_string(const std::string& s) {
    if (s == "f32") return Precision::f32;
    if (s == "f64") return Precision::f64;
    return std::nullopt;
}

void NetworkSpec::validate() const {
    if (input_dim < 1 || hidden1 < 1 || hidden2 < 1)
        throw std::invalid_argument("NetworkSpec: widths must be at least 1");
    if (!(bn_epsilon > 0.0)) throw std::invalid_argument("NetworkSpec: epsilon must be positive");
    if (!(bn_momentum > 0.0 && bn_momentum < 1.0))
        throw std::invalid_argument("NetworkSpec: momentum must lie in (0, 1)");
}

int64_t NetworkSpec::linear_weight_count() const {
    return static_cast<int64_t>(input_dim) * hidden1 + static_cast<int64_t>(hidden1) * hidden2 + hidden2;
}

int64_t NetworkSpec::parameter_count() const {
    int64_t bn = 0;
    for (int w : site_widths()) bn += 2 * w;
    return linear_weight_count() + bn;
}

namespace {

struct Layout {
    size_t w0, w1, w2;                 // offsets of the weight blocks
    std::array<size_t, 4> scale_off;   // per-site scale offsets
    std::array<size_t, 4> shift_off;   // per-site shift offsets
    std::array<size_t, 4> widths;
    size_t total;

    explicit Layout(const NetworkSpec& s) {
        const auto sw = s.site_widths();
        for (int i = 0; i < 4; ++i) widths[static_cast<size_t>(i)] = static_cast<size_t>(sw[static_cast<size_t>(i)]);
        w0 = 0;
        w1 = w0 + static_cast<size_t>(s.hidden1) * static_cast<size_t>(s.input_dim);
        w2 = w1 + static_cast<size_t>(s.hidden2) * static_cast<size_t>(s.hidden1);
        size_t cur = w2 + static_cast<size_t>(s.hidden2);
        for (int i = 0; i < 4; ++i) {
            scale_off[static_cast<size_t>(i)] = cur;
            cur += widths[static_cast<size_t>(i)];
            shift_off[static_cast<size_t>(i)] = cur;
            cur += widths[static_cast<size_t>(i)];
        }
        total = cur;
    }
};

} // namespace

template <class Real>
std::span<Real> NetParams<Real>::w0() {
    const Layout l(spec);
    return {theta.data() + l.w0, l.w1 - l.w0};
}
template <class Real>
std::span<Real> NetParams<Real>::w1() {
    const Layout l(spec);
    return {theta.data() + l.w1, l.w2 - l.w1};
}
template <class Real>
std::span<Real> NetParams<Real>::w2() {
    const Layout l(spec);
    return {theta.data() + l.w2, static_cast<size_t>(spec.hidden2)};
}
template <class Real>
std::span<const Real> NetParams<Real>::w0() const {
    const Layout l(spec);
    return {theta.data() + l.w0, l.w1 - l.w0};
}
template <class Real>
std::span<const Real> NetParams<Real>::w1() const {
    const Layout l(spec);
    return {theta.data() + l.w1, l.w2 - l.w1};
}
template <class Real>
std::span<const Real> NetParams<Real>::w2() const {
    const Layout l(spec);
    return {theta.data() + l.w2, static_cast<size_t>(spec.hidden2)};
}
template <class Real>
std::span<Real> NetParams<Real>::scale(int site) {
    const Layout l(spec);
    return {theta.data() + l.scale_off[static_cast<size_t>(site)], l.widths[static_cast<size_t>(site)]};
}
template <class Real>
std::span<Real> NetParams<Real>::shift(int site) {
    const Layout l(spec);
    return {theta.data() + l.shift_off[static_cast<size_t>(site)], l.widths[static_cast<size_t>(site)]};
}
template <class Real>
std::span<const Real> NetParams<Real>::scale(int site) const {
    const Layout l(spec);
    return {theta.data() + l.scale_off[static_cast<size_t>(site)], l.widths[static_cast<size_t>(site)]};
}
template <class Real>
std::span<const Real> NetParams<Real>::shift(int site) const {
    const Layout l(spec);
    return {theta.data() + l.shift_off[static_cast<size_t>(site)], l.widths[static_cast<size_t>(site)]};
}

double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

std::vector<double> logistic_map(std::span<const double> x) {
    std::vector<double> out(x.size());
    for (size_t i = 0; i < x.size(); ++i) out[i] = logistic(x[i]);
    return out;
}

namespace {

template <class Real>
void apply_activation(Activation act, Mat<Real>& z) {
    switch (act) {
        case Activation::tanh_fn:
            for (auto& v : z.a) v = std::tanh(v);
            break;
        case Activation::logistic_fn:
            for (auto& v : z.a) v = static_cast<Real>(logistic(static_cast<double>(v)));
            break;
        case Activation::identity_fn:
            break;
    }
}

// Derivative expressed through the activation output a.
template <class Real>
Real activation_slope(Activation act, Real a) {
    switch (act) {
        case Activation::tanh_fn: return Real(1) - a * a;
        case Activation::logistic_fn: return a * (Real(1) - a);
        case Activation::identity_fn: return Real(1);
    }
    return Real(1);
}

// Train-mode normalization of z in place; batch statistics and normalized
// values are recorded for the backward pass.
template <class Real>
void bn_forward_train(const NetParams<Real>& params, int site, Mat<Real>& z, ForwardTape<Real>& tape) {
    const int64_t rows = z.rows;
    const int64_t cols = z.cols;
    auto& mean = tape.site_mean[static_cast<size_t>(site)];
    auto& var = tape.site_var[static_cast<size_t>(site)];
    auto& sd = tape.site_std[static_cast<size_t>(site)];
    mean.assign(static_cast<size_t>(cols), Real(0));
    var.assign(static_cast<size_t>(cols), Real(0));
    sd.assign(static_cast<size_t>(cols), Real(0));
    for (int64_t j = 0; j < rows; ++j) {
        const Real* row = z.row(j);
        for (int64_t f = 0; f < cols; ++f) mean[static_cast<size_t>(f)] += row[f];
    }
    const Real inv_n = Real(1) / static_cast<Real>(rows);
    for (auto& m : mean) m *= inv_n;
    for (int64_t j = 0; j < rows; ++j) {
        const Real* row = z.row(j);
        for (int64_t f = 0; f < cols; ++f) {
            const Real d = row[f] - mean[static_cast<size_t>(f)];
            var[static_cast<size_t>(f)] += d * d;
        }
    }
    for (auto& v : var) v *= inv_n;
    const Real eps = static_cast<Real>(params.spec.bn_epsilon);
    for (int64_t f = 0; f < cols; ++f) sd[static_cast<size_t>(f)] = std::sqrt(var[static_cast<size_t>(f)] + eps);

    auto& xh = tape.xhat[static_cast<size_t>(site)];
    xh = Mat<Real>(rows, cols);
    const auto scale = params.scale(site);
    const auto shift = params.shift(site);
    for (int64_t j = 0; j < rows; ++j) {
        const Real* row = z.row(j);
        Real* xr = xh.row(j);
        Real* zr = z.row(j);
        for (int64_t f = 0; f < cols; ++f) {
            const Real h = (row[f] - mean[static_cast<size_t>(f)]) / sd[static_cast<size_t>(f)];
            xr[f] = h;
            zr[f] = scale[static_cast<size_t>(f)] * h + shift[static_cast<size_t>(f)];
        }
    }
}

// Same normalization as bn_forward_infer but records the tape fields the
// backward pass reads.
template <class Real>
void bn_forward_frozen(const NetParams<Real>& params, const BnStats<Real>& stats, int site, Mat<Real>& z,
                       ForwardTape<Real>& tape) {
    const auto& mean = stats.mean[static_cast<size_t>(site)];
    const auto& var = stats.var[static_cast<size_t>(site)];
    const auto scale = params.scale(site);
    const auto shift = params.shift(site);
    const Real eps = static_cast<Real>(params.spec.bn_epsilon);

    auto& tmean = tape.site_mean[static_cast<size_t>(site)];
    auto& tvar = tape.site_var[static_cast<size_t>(site)];
    auto& sd = tape.site_std[static_cast<size_t>(site)];
    tmean = mean;
    tvar = var;
    sd.resize(mean.size());
    for (size_t f = 0; f < mean.size(); ++f) sd[f] = std::sqrt(var[f] + eps);

    auto& xh = tape.xhat[static_cast<size_t>(site)];
    xh = Mat<Real>(z.rows, z.cols);
    for (int64_t j = 0; j < z.rows; ++j) {
        Real* row = z.row(j);
        Real* xr = xh.row(j);
        for (size_t f = 0; f < mean.size(); ++f) {
            const Real h = (row[f] - mean[f]) / sd[f];
            xr[f] = h;
            row[f] = scale[f] * h + shift[f];
        }
    }
}

template <class Real>
void bn_forward_infer(const NetParams<Real>& params, const BnStats<Real>& stats, int site, Mat<Real>& z) {
    const auto& mean = stats.mean[static_cast<size_t>(site)];
    const auto& var = stats.var[static_cast<size_t>(site)];
    const auto scale = params.scale(site);
    const auto shift = params.shift(site);
    const Real eps = static_cast<Real>(params.spec.bn_epsilon);
    std::vector<Real> inv_sd(mean.size());
    for (size_t f = 0; f < mean.size(); ++f) inv_sd[f] = Real(1) / std::sqrt(var[f] + eps);
    for (int64_t j = 0; j < z.rows; ++j) {
        Real* row = z.row(j);
        for (size_t f = 0; f < mean.size(); ++f)
            row[f] = scale[f] * (row[f] - mean[f]) * inv_sd[f] + shift[f];
    }
}

// Given the loss gradient g at the site output, emits the gradient at the
// site input and accumulates the scale/shift gradients.
template <class Real>
void bn_backward(const NetParams<Real>& params, const ForwardTape<Real>& tape, int site, const Mat<Real>& g,
                 Mat<Real>& dz, std::span<Real> d_scale, std::span<Real> d_shift) {
    const auto& xh = tape.xhat[static_cast<size_t>(site)];
    const auto& sd = tape.site_std[static_cast<size_t>(site)];
    const auto scale = params.scale(site);
    const int64_t rows = g.rows;
    const int64_t cols = g.cols;

    std::vector<Real> sum_g(static_cast<size_t>(cols), Real(0));
    std::vector<Real> sum_gx(static_cast<size_t>(cols), Real(0));
    for (int64_t j = 0; j < rows; ++j) {
        const Real* gr = g.row(j);
        const Real* xr = xh.row(j);
        for (int64_t f = 0; f < cols; ++f) {
            sum_g[static_cast<size_t>(f)] += gr[f];
            sum_gx[static_cast<size_t>(f)] += gr[f] * xr[f];
        }
    }
    for (int64_t f = 0; f < cols; ++f) {
        d_scale[static_cast<size_t>(f)] = sum_gx[static_cast<size_t>(f)];
        d_shift[static_cast<size_t>(f)] = sum_g[static_cast<size_t>(f)];
    }

    dz = Mat<Real>(rows, cols);
    const Real inv_n = Real(1) / static_cast<Real>(rows);
    if (tape.frozen_stats) {
        for (int64_t j = 0; j < rows; ++j) {
            const Real* gr = g.row(j);
            Real* dr = dz.row(j);
            for (int64_t f = 0; f < cols; ++f)
                dr[f] = scale[static_cast<size_t>(f)] / sd[static_cast<size_t>(f)] * gr[f];
        }
        return;
    }
    for (int64_t j = 0; j < rows; ++j) {
        const Real* gr = g.row(j);
        const Real* xr = xh.row(j);
        Real* dr = dz.row(j);
        for (int64_t f = 0; f < cols; ++f) {
            const Real coef = scale[static_cast<size_t>(f)] / sd[static_cast<size_t>(f)];
            dr[f] = coef * (gr[f] - sum_g[static_cast<size_t>(f)] * inv_n -
                            xr[f] * sum_gx[static_cast<size_t>(f)] * inv_n);
        }
    }
}

template <class Real>
Mat<Real> weights_as_matrix(std::span<const Real> w, int64_t rows, int64_t cols) {
    Mat<Real> m(rows, cols);
    std::copy(w.begin(), w.end(), m.a.begin());
    return m;
}

} // namespace

template <class Real>
std::pair<NetParams<Real>, BnStats<Real>> xavier_init(const NetworkSpec& spec, uint64_t seed) {
    spec.validate();
    NetParams<Real> params;
    params.spec = spec;
    params.theta.assign(static_cast<size_t>(spec.parameter_count()), Real(0));

    Rng rng(StreamKey{seed, StreamUse::init, 0}, 0);
    auto fill_uniform = [&rng](std::span<Real> block, double bound) {
        for (auto& v : block) v = static_cast<Real>(rng.uniform(-bound, bound));
    };
    fill_uniform(params.w0(), std::sqrt(6.0 / (spec.input_dim + spec.hidden1)));
    fill_uniform(params.w1(), std::sqrt(6.0 / (spec.hidden1 + spec.hidden2)));
    fill_uniform(params.w2(), std::sqrt(6.0 / (spec.hidden2 + 1)));
    for (int site = 0; site < 4; ++site) {
        for (auto& v : params.scale(site)) v = Real(1);
        for (auto& v : params.shift(site)) v = Real(0);
    }

    BnStats<Real> stats;
    const auto widths = spec.site_widths();
    for (int site = 0; site < 4; ++site) {
        stats.mean[static_cast<size_t>(site)].assign(static_cast<size_t>(widths[static_cast<size_t>(site)]), Real(0));
        stats.var[static_cast<size_t>(site)].assign(static_cast<size_t>(widths[static_cast<size_t>(site)]), Real(1));
    }
    stats.updates = 0;
    return {std::move(params), std::move(stats)};
}

template <class Real>
void forward_train(const NetParams<Real>& params, const Mat<Real>& batch, ForwardTape<Real>& tape) {
    const NetworkSpec& spec = params.spec;
    if (batch.cols != spec.input_dim) throw std::invalid_argument("forward_train: input width mismatch");
    if (batch.rows < 2) throw std::invalid_argument("forward_train: batch statistics need at least 2 rows");
    tape.batch = batch.rows;
    tape.frozen_stats = false;

    Mat<Real> cur = batch;
    bn_forward_train(params, 0, cur, tape);
    tape.y0 = cur;

    Mat<Real> z1;
    matmul_abt(cur, weights_as_matrix<Real>(params.w0(), spec.hidden1, spec.input_dim), z1);
    bn_forward_train(params, 1, z1, tape);
    apply_activation(spec.activation, z1);
    tape.act1 = z1;

    Mat<Real> z2;
    matmul_abt(z1, weights_as_matrix<Real>(params.w1(), spec.hidden2, spec.hidden1), z2);
    bn_forward_train(params, 2, z2, tape);
    apply_activation(spec.activation, z2);
    tape.act2 = z2;

    Mat<Real> z3;
    matmul_abt(z2, weights_as_matrix<Real>(params.w2(), 1, spec.hidden2), z3);
    bn_forward_train(params, 3, z3, tape);
    tape.out = z3;
}

template <class Real>
void forward_frozen(const NetParams<Real>& params, const BnStats<Real>& stats, const Mat<Real>& batch,
                    ForwardTape<Real>& tape) {
    const NetworkSpec& spec = params.spec;
    if (batch.cols != spec.input_dim) throw std::invalid_argument("forward_frozen: input width mismatch");
    tape.batch = batch.rows;
    tape.frozen_stats = true;

    Mat<Real> cur = batch;
    bn_forward_frozen(params, stats, 0, cur, tape);
    tape.y0 = cur;

    Mat<Real> z1;
    matmul_abt(cur, weights_as_matrix<Real>(params.w0(), spec.hidden1, spec.input_dim), z1);
    bn_forward_frozen(params, stats, 1, z1, tape);
    apply_activation(spec.activation, z1);
    tape.act1 = z1;

    Mat<Real> z2;
    matmul_abt(z1, weights_as_matrix<Real>(params.w1(), spec.hidden2, spec.hidden1), z2);
    bn_forward_frozen(params, stats, 2, z2, tape);
    apply_activation(spec.activation, z2);
    tape.act2 = z2;

    Mat<Real> z3;
    matmul_abt(z2, weights_as_matrix<Real>(params.w2(), 1, spec.hidden2), z3);
    bn_forward_frozen(params, stats, 3, z3, tape);
    tape.out = z3;
}

template <class Real>
Mat<Real> forward_infer(const NetParams<Real>& params, const BnStats<Real>& stats, const Mat<Real>& points) {
    const NetworkSpec& spec = params.spec;
    if (points.cols != spec.input_dim) throw std::invalid_argument("forward_infer: input width mismatch");

    Mat<Real> cur = points;
    bn_forward_infer(params, stats, 0, cur);
    Mat<Real> z1;
    matmul_abt(cur, weights_as_matrix<Real>(params.w0(), spec.hidden1, spec.input_dim), z1);
    bn_forward_infer(params, stats, 1, z1);
    apply_activation(spec.activation, z1);
    Mat<Real> z2;
    matmul_abt(z1, weights_as_matrix<Real>(params.w1(), spec.hidden2, spec.hidden1), z2);
    bn_forward_infer(params, stats, 2, z2);
    apply_activation(spec.activation, z2);
    Mat<Real> z3;
    matmul_abt(z2, weights_as_matrix<Real>(params.w2(), 1, spec.hidden2), z3);
    bn_forward_infer(params, stats, 3, z3);
    return z3;
}

template <class Real>
std::vector<Real> backward(const NetParams<Real>& params, const ForwardTape<Real>& tape,
                           const Mat<Real>& grad_out) {
    const NetworkSpec& spec = params.spec;
    if (grad_out.rows != tape.batch || grad_out.cols != 1)
        throw std::invalid_argument("backward: gradient shape does not match tape");
    if (tape.y0.cols != spec.input_dim || tape.act1.cols != spec.hidden1 || tape.act2.cols != spec.hidden2)
        throw std::invalid_argument("backward: tape does not match parameters");

    std::vector<Real> grad(params.theta.size(), Real(0));
    NetParams<Real> gview;
    gview.spec = spec;
    gview.theta.swap(grad);

    // site 3
    Mat<Real> dz3;
    bn_backward(params, tape, 3, grad_out, dz3, gview.scale(3), gview.shift(3));

    // W2 and its input
    {
        Mat<Real> dw;
        matmul_atb(dz3, tape.act2, dw); // 1 x h2
        std::copy(dw.a.begin(), dw.a.end(), gview.w2().begin());
    }
    Mat<Real> da2;
    matmul_ab(dz3, weights_as_matrix<Real>(params.w2(), 1, spec.hidden2), da2);
    for (int64_t j = 0; j < da2.rows; ++j) {
        Real* dr = da2.row(j);
        const Real* ar = tape.act2.row(j);
        for (int64_t f = 0; f < da2.cols; ++f) dr[f] *= activation_slope(spec.activation, ar[f]);
    }

    // site 2
    Mat<Real> dz2;
    bn_backward(params, tape, 2, da2, dz2, gview.scale(2), gview.shift(2));

    {
        Mat<Real> dw;
        matmul_atb(dz2, tape.act1, dw); // h2 x h1
        std::copy(dw.a.begin(), dw.a.end(), gview.w1().begin());
    }
    Mat<Real> da1;
    matmul_ab(dz2, weights_as_matrix<Real>(params.w1(), spec.hidden2, spec.hidden1), da1);
    for (int64_t j = 0; j < da1.rows; ++j) {
        Real* dr = da1.row(j);
        const Real* ar = tape.act1.row(j);
        for (int64_t f = 0; f < da1.cols; ++f) dr[f] *= activation_slope(spec.activation, ar[f]);
    }

    // site 1
    Mat<Real> dz1;
    bn_backward(params, tape, 1, da1, dz1, gview.scale(1), gview.shift(1));

    {
        Mat<Real> dw;
        matmul_atb(dz1, tape.y0, dw); // h1 x d
        std::copy(dw.a.begin(), dw.a.end(), gview.w0().begin());
    }
    Mat<Real> dy0;
    matmul_ab(dz1, weights_as_matrix<Real>(params.w0(), spec.hidden1, spec.input_dim), dy0);

    // site 0: only its scale/shift gradients are needed
    Mat<Real> unused;
    bn_backward(params, tape, 0, dy0, unused, gview.scale(0), gview.shift(0));

    std::vector<Real> out;
    out.swap(gview.theta);
    return out;
}

template <class Real>
void update_running_stats(BnStats<Real>& stats, const ForwardTape<Real>& tape, double momentum) {
    const Real m = static_cast<Real>(momentum);
    const Real one_minus = Real(1) - m;
    for (int site = 0; site < 4; ++site) {
        auto& rm = stats.mean[static_cast<size_t>(site)];
        auto& rv = stats.var[static_cast<size_t>(site)];
        const auto& bm = tape.site_mean[static_cast<size_t>(site)];
        const auto& bv = tape.site_var[static_cast<size_t>(site)];
        if (rm.size() != bm.size()) throw std::invalid_argument("update_running_stats: width mismatch");
        for (size_t f = 0; f < rm.size(); ++f) {
            rm[f] = m * rm[f] + one_minus * bm[f];
            rv[f] = m * rv[f] + one_minus * bv[f];
        }
    }
    stats.updates += 1;
}

namespace {
constexpr uint32_t kNetMagic = 0x54454E4Bu; // "KNET"
constexpr uint32_t kNetVersion = 1;
} // namespace

template <class Real>
void write_network(std::ostream& os, const NetParams<Real>& params, const BnStats<Real>& stats) {
    write_pod(os, kNetMagic);
    write_pod(os, kNetVersion);
    write_pod<int32_t>(os, params.spec.input_dim);
    write_pod<int32_t>(os, params.spec.hidden1);
    write_pod<int32_t>(os, params.spec.hidden2);
    write_pod<uint8_t>(os, static_cast<uint8_t>(params.spec.activation));
    write_pod<uint8_t>(os, static_cast<uint8_t>(precision_of<Real>()));
    write_pod<double>(os, params.spec.bn_epsilon);
    write_pod<double>(os, params.spec.bn_momentum);
    write_pod<uint64_t>(os, params.theta.size());
    os.write(reinterpret_cast<const char*>(params.theta.data()),
             static_cast<std::streamsize>(params.theta.size() * sizeof(Real)));
    for (int site = 0; site < 4; ++site) {
        const auto& m = stats.mean[static_cast<size_t>(site)];
        const auto& v = stats.var[static_cast<size_t>(site)];
        os.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(Real)));
        os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(Real)));
    }
    write_pod<int64_t>(os, stats.updates);
}

template <class Real>
void read_network(std::istream& is, NetParams<Real>& params, BnStats<Real>& stats) {
    if (read_pod<uint32_t>(is, "network magic") != kNetMagic)
        throw SerializationError("bad network magic bytes");
    if (read_pod<uint32_t>(is, "network version") != kNetVersion)
        throw SerializationError("unsupported network format version");
    NetworkSpec spec;
    spec.input_dim = read_pod<int32_t>(is, "input width");
    spec.hidden1 = read_pod<int32_t>(is, "hidden width 1");
    spec.hidden2 = read_pod<int32_t>(is, "hidden width 2");
    spec.activation = static_cast<Activation>(read_pod<uint8_t>(is, "activation id"));
    const auto prec = static_cast<Precision>(read_pod<uint8_t>(is, "precision id"));
    if (prec != precision_of<Real>())
        throw SerializationError("network precision does not match the requested scalar type");
    spec.bn_epsilon = read_pod<double>(is, "epsilon");
    spec.bn_momentum = read_pod<double>(is, "momentum");
    spec.validate();

    params.spec = spec;
    const auto n = read_pod<uint64_t>(is, "parameter count");
    if (n != static_cast<uint64_t>(spec.parameter_count()))
        throw SerializationError("parameter count does not match the stored dimensions");
    params.theta.resize(n);
    is.read(reinterpret_cast<char*>(params.theta.data()), static_cast<std::streamsize>(n * sizeof(Real)));
    if (!is) throw SerializationError("truncated input while reading parameters");

    const auto widths = spec.site_widths();
    for (int site = 0; site < 4; ++site) {
        const auto w = static_cast<size_t>(widths[static_cast<size_t>(site)]);
        stats.mean[static_cast<size_t>(site)].resize(w);
        stats.var[static_cast<size_t>(site)].resize(w);
        is.read(reinterpret_cast<char*>(stats.mean[static_cast<size_t>(site)].data()),
                static_cast<std::streamsize>(w * sizeof(Real)));
        is.read(reinterpret_cast<char*>(stats.var[static_cast<size_t>(site)].data()),
                static_cast<std::streamsize>(w * sizeof(Real)));
        if (!is) throw SerializationError("truncated input while reading running statistics");
    }
    stats.updates = read_pod<int64_t>(is, "statistics counter");
}

template struct NetParams<float>;
template struct NetParams<double>;
#define KOLMO_INSTANTIATE(Real)                                                                        \
    template std::pair<NetParams<Real>, BnStats<Real>> xavier_init<Real>(const NetworkSpec&, uint64_t); \
    template void forward_train<Real>(const NetParams<Real>&, const Mat<Real>&, ForwardTape<Real>&);    \
    template Mat<Real> forward_infer<Real>(const NetParams<Real>&, const BnStats<Real>&, const Mat<Real>&); \
    template void forward_frozen<Real>(const NetParams<Real>&, const BnStats<Real>&, const Mat<Real>&,  \
                                       ForwardTape<Real>&);                                             \
    template std::vector<Real> backward<Real>(const NetParams<Real>&, const ForwardTape<Real>&,        \
                                              const Mat<Real>&);                                       \
    template void update_running_stats<Real>(BnStats<Real>&, const ForwardTape<Real>&, double);        \
    template void write_network<Real>(std::ostream&, const NetParams<Real>&, const BnStats<Real>&);    \
    template void read_network<Real>(std::istream&, NetParams<Real>&, BnStats<Real>&);
KOLMO_INSTANTIATE(float)
KOLMO_INSTANTIATE(double)
#undef KOLMO_INSTANTIATE

} // namespace kolmo
