#pragma once
// Seedable counter-keyed random streams (xoshiro256++ with splitmix64 seeding).
//
// Every random quantity in the library is drawn from a stream addressed by
// (seed, purpose, step, index).  Deriving sub-streams by key instead of
// splitting a shared generator makes results independent of sharding and
// makes resume-from-checkpoint trivially exact.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace kolmo {

namespace detail {
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}
inline uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
} // namespace detail

// Purpose tags keep streams for different uses disjoint even at equal step.
enum class StreamUse : uint64_t {
    init = 1,
    sample_xi = 2,
    brownian = 3,
    evaluation = 4,
    reference = 5,
    test = 6,
};

struct StreamKey {
    uint64_t seed = 0;
    StreamUse use = StreamUse::test;
    uint64_t step = 0;
};

class Rng {
public:
    Rng() : Rng(StreamKey{}, 0) {}

    Rng(StreamKey key, uint64_t index) {
        uint64_t h = key.seed;
        uint64_t k = static_cast<uint64_t>(key.use);
        h ^= detail::splitmix64(k);
        h = detail::splitmix64(h);
        uint64_t st = key.step;
        h ^= detail::splitmix64(st);
        h = detail::splitmix64(h);
        uint64_t ix = index;
        h ^= detail::splitmix64(ix);
        for (auto& w : s_) w = detail::splitmix64(h);
    }

    uint64_t next_u64() {
        const uint64_t result = detail::rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = detail::rotl(s_[3], 45);
        return result;
    }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    // Standard normal via Box-Muller (exact transform, cached spare).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1] so that log never sees zero.
        const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    std::array<uint64_t, 4> state() const { return s_; }

private:
    std::array<uint64_t, 4> s_{};
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace kolmo
