#pragma once
// The approximator: a fully connected net with two hidden layers, batch
// normalization before the first linear map, before both activations, and
// after the last linear map.  Linear layers carry no standalone bias; the
// adjacent normalization shifts play that role, which keeps the trainable
// weight count of the linear part at d*h1 + h1*h2 + h2.
//
// forward_train normalizes with current-batch statistics and records what
// the exact reverse pass needs; forward_infer uses running statistics and
// is a pure function of (parameters, statistics, input).

#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kolmo/linalg.hpp"

namespace kolmo {

enum class Activation : uint8_t { tanh_fn = 0, logistic_fn = 1, identity_fn = 2 };

enum class Precision : uint8_t { f32 = 0, f64 = 1 };

std::string to_string(Activation a);
std::optional<Activation> activation_from_string(const std::string& s);
std::string to_string(Precision p);
std::optional<Precision> precision_from_string(const std::string& s);

struct NetworkSpec {
    int input_dim = 1;
    int hidden1 = 2;
    int hidden2 = 2;
    Activation activation = Activation::tanh_fn;
    double bn_epsilon = 1e-6;
    double bn_momentum = 0.99;

    void validate() const;
    std::array<int, 4> site_widths() const { return {input_dim, hidden1, hidden2, 1}; }
    int64_t linear_weight_count() const;
    int64_t parameter_count() const; // linear weights plus all scales/shifts
};

// Flat parameter vector.  Order: W0 row-major (h1 x d), W1 (h2 x h1),
// W2 (1 x h2), then for each normalization site 0..3 its scale followed by
// its shift.
template <class Real>
struct NetParams {
    NetworkSpec spec;
    std::vector<Real> theta;

    std::span<Real> w0();
    std::span<Real> w1();
    std::span<Real> w2();
    std::span<const Real> w0() const;
    std::span<const Real> w1() const;
    std::span<const Real> w2() const;
    std::span<Real> scale(int site);
    std::span<Real> shift(int site);
    std::span<const Real> scale(int site) const;
    std::span<const Real> shift(int site) const;
};

template <class Real>
struct BnStats {
    std::array<std::vector<Real>, 4> mean;
    std::array<std::vector<Real>, 4> var;
    int64_t updates = 0;
};

template <class Real>
struct ForwardTape {
    int64_t batch = 0;
    bool frozen_stats = false; // normalization used fixed running statistics
    std::array<std::vector<Real>, 4> site_mean;
    std::array<std::vector<Real>, 4> site_var; // biased batch variance
    std::array<std::vector<Real>, 4> site_std; // sqrt(var + epsilon)
    std::array<Mat<Real>, 4> xhat;             // normalized values, pre scale/shift
    Mat<Real> y0;                              // site-0 output (input to W0)
    Mat<Real> act1;
    Mat<Real> act2;
    Mat<Real> out; // J x 1
};

double logistic(double x); // overflow-safe exp(x) / (exp(x) + 1)
std::vector<double> logistic_map(std::span<const double> x);

// Uniform Glorot initialization on +-sqrt(6 / (fan_in + fan_out)) for the
// weights; scales start at 1, shifts at 0, running mean 0 / variance 1.
template <class Real>
std::pair<NetParams<Real>, BnStats<Real>> xavier_init(const NetworkSpec& spec, uint64_t seed);

template <class Real>
void forward_train(const NetParams<Real>& params, const Mat<Real>& batch, ForwardTape<Real>& tape);

template <class Real>
Mat<Real> forward_infer(const NetParams<Real>& params, const BnStats<Real>& stats, const Mat<Real>& points);

// Inference-mode composition that records a tape, so a gradient can be taken
// while the normalization statistics stay fixed (no batch-statistic
// coupling in the backward pass).
template <class Real>
void forward_frozen(const NetParams<Real>& params, const BnStats<Real>& stats, const Mat<Real>& batch,
                    ForwardTape<Real>& tape);

// Gradient of sum_j grad_out[j] * out[j] with respect to every entry of
// theta, including flow through the batch statistics.  For the mean squared
// loss pass grad_out[j] = 2 (out[j] - target[j]) / J.
template <class Real>
std::vector<Real> backward(const NetParams<Real>& params, const ForwardTape<Real>& tape,
                           const Mat<Real>& grad_out);

// Exponential moving average update of the running statistics from the batch
// statistics recorded on the tape.
template <class Real>
void update_running_stats(BnStats<Real>& stats, const ForwardTape<Real>& tape, double momentum);

template <class Real>
constexpr Precision precision_of() {
    return sizeof(Real) == 4 ? Precision::f32 : Precision::f64;
}

// Binary network image: magic, version, dimensions, activation id,
// precision id, epsilon, momentum, then theta and the running statistics as
// little-endian scalars in layout order.
template <class Real>
void write_network(std::ostream& os, const NetParams<Real>& params, const BnStats<Real>& stats);
template <class Real>
void read_network(std::istream& is, NetParams<Real>& params, BnStats<Real>& stats);

extern template struct NetParams<float>;
extern template struct NetParams<double>;

} // namespace kolmo
