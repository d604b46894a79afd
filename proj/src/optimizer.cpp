#include "kolmo/optimizer.hpp"

#include <cmath>
#include <stdexcept>

#include "kolmo/io.hpp"

namespace kolmo {

Schedule default_schedule() {
    Schedule s;
    s.pieces = {{250000, 1e-3}, {500000, 1e-4}};
    s.tail_rate = 1e-5;
    return s;
}

double lr(const Schedule& schedule, int64_t m) {
    if (m < 0) throw std::invalid_argument("lr: step index must be non-negative");
    for (const auto& piece : schedule.pieces)
        if (m <= piece.upto) return piece.rate;
    return schedule.tail_rate;
}

template <class Real>
void sgd_step(std::span<Real> theta, std::span<const Real> grad, double gamma) {
    if (theta.size() != grad.size()) throw std::invalid_argument("sgd_step: shape mismatch");
    const Real g = static_cast<Real>(gamma);
    for (size_t i = 0; i < theta.size(); ++i) theta[i] -= g * grad[i];
}

template <class Real>
void adam_step(AdamState<Real>& state, std::span<Real> theta, std::span<const Real> grad,
               const Schedule& schedule) {
    if (theta.size() != grad.size() || theta.size() != state.m1.size() || theta.size() != state.m2.size())
        throw std::invalid_argument("adam_step: shape mismatch");
    const double gamma = lr(schedule, state.step);
    const int64_t m = state.step + 1;
    const Real b1 = static_cast<Real>(state.beta1);
    const Real b2 = static_cast<Real>(state.beta2);
    const Real corr1 = static_cast<Real>(1.0 - std::pow(state.beta1, static_cast<double>(m)));
    const Real corr2 = static_cast<Real>(1.0 - std::pow(state.beta2, static_cast<double>(m)));
    const Real eps = static_cast<Real>(state.epsilon);
    const Real g = static_cast<Real>(gamma);
    for (size_t i = 0; i < theta.size(); ++i) {
        state.m1[i] = b1 * state.m1[i] + (Real(1) - b1) * grad[i];
        state.m2[i] = b2 * state.m2[i] + (Real(1) - b2) * grad[i] * grad[i];
        const Real denom = std::sqrt(std::abs(state.m2[i]) / corr2) + eps;
        theta[i] -= (g * state.m1[i] / corr1) / denom;
    }
    state.step = m;
}

template <class Real>
void write_adam(std::ostream& os, const AdamState<Real>& s) {
    write_pod<uint64_t>(os, s.m1.size());
    os.write(reinterpret_cast<const char*>(s.m1.data()), static_cast<std::streamsize>(s.m1.size() * sizeof(Real)));
    os.write(reinterpret_cast<const char*>(s.m2.data()), static_cast<std::streamsize>(s.m2.size() * sizeof(Real)));
    write_pod<int64_t>(os, s.step);
    write_pod<double>(os, s.epsilon);
    write_pod<double>(os, s.beta1);
    write_pod<double>(os, s.beta2);
}

template <class Real>
AdamState<Real> read_adam(std::istream& is) {
    AdamState<Real> s;
    const auto n = read_pod<uint64_t>(is, "optimizer state size");
    s.m1.resize(n);
    s.m2.resize(n);
    is.read(reinterpret_cast<char*>(s.m1.data()), static_cast<std::streamsize>(n * sizeof(Real)));
    is.read(reinterpret_cast<char*>(s.m2.data()), static_cast<std::streamsize>(n * sizeof(Real)));
    if (!is) throw SerializationError("truncated input while reading optimizer state");
    s.step = read_pod<int64_t>(is, "optimizer step");
    s.epsilon = read_pod<double>(is, "optimizer epsilon");
    s.beta1 = read_pod<double>(is, "optimizer beta1");
    s.beta2 = read_pod<double>(is, "optimizer beta2");
    return s;
}

#define KOLMO_INSTANTIATE(Real)                                                                   \
    template void sgd_step<Real>(std::span<Real>, std::span<const Real>, double);                 \
    template void adam_step<Real>(AdamState<Real>&, std::span<Real>, std::span<const Real>,       \
                                  const Schedule&);                                               \
    template void write_adam<Real>(std::ostream&, const AdamState<Real>&);                        \
    template AdamState<Real> read_adam<Real>(std::istream&);
KOLMO_INSTANTIATE(float)
KOLMO_INSTANTIATE(double)
#undef KOLMO_INSTANTIATE

} // namespace kolmo
