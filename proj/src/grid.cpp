#include "kolmo/grid.hpp"

#include <stdexcept>

namespace kolmo {

TimeGrid make_grid(double horizon, int64_t step_count) {
    if (!(horizon > 0.0)) throw std::invalid_argument("make_grid: horizon must be positive");
    if (step_count < 1) throw std::invalid_argument("make_grid: step count must be at least 1");
    TimeGrid g;
    g.horizon = horizon;
    g.step_count = step_count;
    g.nodes.resize(static_cast<size_t>(step_count) + 1);
    for (int64_t i = 0; i <= step_count; ++i)
        g.nodes[static_cast<size_t>(i)] = static_cast<double>(i) * horizon / static_cast<double>(step_count);
    g.nodes.front() = 0.0;
    g.nodes.back() = horizon;
    return g;
}

Domain::Domain(std::vector<double> lo_, std::vector<double> hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
    if (lo.size() != hi.size()) throw std::invalid_argument("Domain: bound arrays differ in length");
    for (size_t i = 0; i < lo.size(); ++i)
        if (!(lo[i] < hi[i])) throw std::invalid_argument("Domain: requires lo < hi in every coordinate");
}

Domain Domain::cube(int dim, double lo, double hi) {
    return Domain(std::vector<double>(static_cast<size_t>(dim), lo),
                  std::vector<double>(static_cast<size_t>(dim), hi));
}

} // namespace kolmo
