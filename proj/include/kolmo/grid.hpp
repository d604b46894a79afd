#pragma once
// Time grids and sampling boxes.

#include <cstdint>
#include <vector>

namespace kolmo {

struct TimeGrid {
    double horizon = 0.0;
    int64_t step_count = 0;
    std::vector<double> nodes; // t_0 = 0 < t_1 < ... < t_N = horizon
};

// Equidistant grid t_i = i*T/N.
TimeGrid make_grid(double horizon, int64_t step_count);

// Per-coordinate closed intervals [lo_i, hi_i].
struct Domain {
    std::vector<double> lo;
    std::vector<double> hi;

    Domain() = default;
    Domain(std::vector<double> lo_, std::vector<double> hi_);
    static Domain cube(int dim, double lo, double hi);

    int dim() const { return static_cast<int>(lo.size()); }
};

} // namespace kolmo
