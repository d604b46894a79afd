#pragma once
// Run configuration: a line-oriented key = value format with [section]
// headers, flag overrides on top, and a canonical serialization that
// round-trips.  Unknown keys are rejected with line numbers.

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "kolmo/network.hpp"
#include "kolmo/optimizer.hpp"

namespace kolmo {

struct RunConfig {
    // [problem]
    std::string problem;
    int dimension = 0; // 0 keeps the problem default
    std::map<std::string, double> constants;

    // [network]
    int hidden1 = 0;
    int hidden2 = 0;
    std::string activation = "tanh";
    double bn_epsilon = 1e-6;
    double bn_momentum = 0.99;

    // [training]
    int64_t batch = 8192;
    int64_t steps = 3000;
    uint64_t seed = 1;
    std::string precision = "f64";
    int64_t eval_cadence = 0;
    int64_t checkpoint_cadence = 0;
    double learning_rate = 0.0; // 0 selects the default step-indexed schedule

    // [evaluation]
    int64_t eval_points = 0;       // 0 keeps the problem default
    int64_t reference_samples = 0; // 0 keeps the problem default
    uint64_t eval_seed = 12345;

    // [output]
    std::string out_dir = "out";

    Schedule schedule() const {
        return learning_rate > 0.0 ? Schedule::constant(learning_rate) : default_schedule();
    }
    void validate() const;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Version stamp written into every output directory.
inline constexpr const char* kBuildVersion = "0.1.0";

// Parses the file content; `source` names the file in diagnostics.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");

// A key=value override as given on the command line ("section.key" or a
// bare key that is unique across sections).
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);

// Canonical form; parse_config(emit_config(c)) reproduces c.
std::string emit_config(const RunConfig& cfg);

} // namespace kolmo
