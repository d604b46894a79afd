#pragma once
// Plain stochastic gradient descent and Adam with the piecewise-constant
// learning-rate schedule, behind one flat-vector update interface.

#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

namespace kolmo {

// gamma(m) = rate of the first piece whose (inclusive) upper bound is >= m;
// past the last bound the tail rate applies.
struct Schedule {
    struct Piece {
        int64_t upto; // inclusive
        double rate;
    };
    std::vector<Piece> pieces;
    double tail_rate = 1e-5;

    static Schedule constant(double rate) { return Schedule{{}, rate}; }
};

// 1e-3 on [0, 250000], 1e-4 on (250000, 500000], 1e-5 beyond.
Schedule default_schedule();

double lr(const Schedule& schedule, int64_t m);

template <class Real>
void sgd_step(std::span<Real> theta, std::span<const Real> grad, double gamma);

template <class Real>
struct AdamState {
    std::vector<Real> m1; // first-moment accumulator
    std::vector<Real> m2; // second-moment accumulator
    int64_t step = 0;     // number of applied updates
    double epsilon = 1e-8;
    double beta1 = 0.9;
    double beta2 = 0.999;

    static AdamState zero(size_t n) {
        AdamState s;
        s.m1.assign(n, Real(0));
        s.m2.assign(n, Real(0));
        return s;
    }
};

// One Adam update in place.  The schedule is indexed by the pre-update step
// count; the bias corrections use the post-update (1-based) count.
template <class Real>
void adam_step(AdamState<Real>& state, std::span<Real> theta, std::span<const Real> grad,
               const Schedule& schedule);

template <class Real>
void write_adam(std::ostream& os, const AdamState<Real>& s);
template <class Real>
AdamState<Real> read_adam(std::istream& is);

} // namespace kolmo
