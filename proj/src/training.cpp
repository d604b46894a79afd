#include "kolmo/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "kolmo/io.hpp"
#include "kolmo/simulate.hpp"

namespace kolmo {

void TrainConfig::validate() const {
    if (batch < 2) throw std::invalid_argument("TrainConfig: batch size must be at least 2");
    if (steps < 1) throw std::invalid_argument("TrainConfig: step count must be at least 1");
    if (eval_cadence < 0 || checkpoint_cadence < 0)
        throw std::invalid_argument("TrainConfig: cadences must be non-negative");
}

NetworkSpec network_spec_for(const SdeProblem& problem, const TrainConfig& config, double bn_epsilon,
                             double bn_momentum) {
    NetworkSpec spec;
    spec.input_dim = problem.dim;
    spec.hidden1 = config.hidden1 > 0 ? config.hidden1 : problem.default_hidden;
    spec.hidden2 = config.hidden2 > 0 ? config.hidden2 : problem.default_hidden;
    if (config.activation_override) spec.activation = *config.activation_override;
    spec.bn_epsilon = bn_epsilon;
    spec.bn_momentum = bn_momentum;
    spec.validate();
    return spec;
}

template <class Real>
double loss(const NetParams<Real>& params, const Mat<Real>& batch, std::span<const Real> targets) {
    if (static_cast<int64_t>(targets.size()) != batch.rows)
        throw std::invalid_argument("loss: target count does not match batch");
    ForwardTape<Real> tape;
    forward_train(params, batch, tape);
    double acc = 0.0;
    for (int64_t j = 0; j < batch.rows; ++j) {
        const double r = static_cast<double>(tape.out(j, 0)) - static_cast<double>(targets[static_cast<size_t>(j)]);
        acc += r * r;
    }
    return acc / static_cast<double>(batch.rows);
}

namespace {

template <class Real>
Mat<Real> to_real(const Matrix& m) {
    Mat<Real> out(m.rows, m.cols);
    for (size_t i = 0; i < m.a.size(); ++i) out.a[i] = static_cast<Real>(m.a[i]);
    return out;
}

} // namespace

template <class Real>
std::pair<Checkpoint<Real>, RunLog> train(const SdeProblem& problem, const NetworkSpec& spec,
                                          const TrainConfig& config, const TrainHooks<Real>& hooks,
                                          const Checkpoint<Real>* resume_from) {
    config.validate();
    spec.validate();
    if (spec.input_dim != problem.dim)
        throw std::invalid_argument("train: network input width does not match the problem dimension");

    Checkpoint<Real> state;
    if (resume_from) {
        if (resume_from->problem_name != problem.name)
            throw std::invalid_argument("train: checkpoint belongs to a different problem");
        if (resume_from->step > config.steps)
            throw std::invalid_argument("train: checkpoint is already past the requested step count");
        state = *resume_from;
    } else {
        state.problem_name = problem.name;
        state.step = 0;
        auto [params, stats] = xavier_init<Real>(spec, config.seed);
        state.params = std::move(params);
        state.stats = std::move(stats);
        state.adam = AdamState<Real>::zero(state.params.theta.size());
        state.rng_seed = config.seed;
    }

    RunLog log;
    log.records.reserve(static_cast<size_t>(config.steps - state.step));
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&t0] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    ForwardTape<Real> tape;
    for (int64_t m = state.step; m < config.steps; ++m) {
        if (hooks.on_eval && config.eval_cadence > 0 && m % config.eval_cadence == 0)
            hooks.on_eval(m, state.params, state.stats);

        const Matrix xi =
            sample_initial(problem.domain, config.batch, StreamKey{state.rng_seed, StreamUse::sample_xi,
                                                                   static_cast<uint64_t>(m)});
        const PathBatch paths = simulate_terminal(
            problem, xi, StreamKey{state.rng_seed, StreamUse::brownian, static_cast<uint64_t>(m)});

        std::vector<Real> targets(static_cast<size_t>(config.batch));
        for (int64_t j = 0; j < config.batch; ++j)
            targets[static_cast<size_t>(j)] = static_cast<Real>(problem.payoff(
                std::span<const double>(paths.terminal.row(j), static_cast<size_t>(problem.dim))));

        const Mat<Real> input = to_real<Real>(xi);
        Mat<Real> grad_out(config.batch, 1);
        if (config.freeze_batch_norm) {
            forward_frozen(state.params, state.stats, input, tape);
        } else {
            forward_train(state.params, input, tape);
            update_running_stats(state.stats, tape, spec.bn_momentum);
        }
        double acc = 0.0;
        for (int64_t j = 0; j < config.batch; ++j) {
            const double r = static_cast<double>(tape.out(j, 0)) -
                             static_cast<double>(targets[static_cast<size_t>(j)]);
            acc += r * r;
            grad_out(j, 0) = static_cast<Real>(2.0 * r / static_cast<double>(config.batch));
        }
        const double loss_value = acc / static_cast<double>(config.batch);

        if (!std::isfinite(loss_value)) throw TrainingDiverged(m);
        log.records.push_back({m, loss_value, elapsed()});
        if (hooks.on_step) hooks.on_step(m, loss_value);

        const std::vector<Real> grad = backward(state.params, tape, grad_out);
        adam_step(state.adam, std::span<Real>(state.params.theta), std::span<const Real>(grad),
                  config.schedule);
        state.step = m + 1;

        if (hooks.on_checkpoint && config.checkpoint_cadence > 0 && state.step % config.checkpoint_cadence == 0 &&
            state.step != config.steps)
            hooks.on_checkpoint(state);
    }

    if (hooks.on_eval && config.eval_cadence > 0 && state.step % config.eval_cadence == 0)
        hooks.on_eval(state.step, state.params, state.stats);
    if (hooks.on_checkpoint) hooks.on_checkpoint(state);
    return {std::move(state), std::move(log)};
}

namespace {
constexpr uint32_t kCkptMagic = 0x504B434Bu; // "KCKP"
constexpr uint32_t kCkptVersion = 1;
} // namespace

template <class Real>
void save_checkpoint(const std::string& path, const Checkpoint<Real>& c) {
    std::ostringstream os(std::ios::binary);
    write_pod(os, kCkptMagic);
    write_pod(os, kCkptVersion);
    write_pod<uint8_t>(os, static_cast<uint8_t>(precision_of<Real>()));
    write_string(os, c.problem_name);
    write_pod<int64_t>(os, c.step);
    write_pod<uint64_t>(os, c.rng_seed);
    write_network(os, c.params, c.stats);
    write_adam(os, c.adam);
    atomic_write_file(path, os.str());
}

template <class Real>
Checkpoint<Real> load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw SerializationError("cannot open checkpoint '" + path + "'");
    if (read_pod<uint32_t>(is, "checkpoint magic") != kCkptMagic)
        throw SerializationError("bad checkpoint magic bytes");
    if (read_pod<uint32_t>(is, "checkpoint version") != kCkptVersion)
        throw SerializationError("unsupported checkpoint format version");
    const auto prec = static_cast<Precision>(read_pod<uint8_t>(is, "checkpoint precision"));
    if (prec != precision_of<Real>())
        throw SerializationError("checkpoint precision does not match the requested scalar type");
    Checkpoint<Real> c;
    c.problem_name = read_string(is, "problem id");
    c.step = read_pod<int64_t>(is, "checkpoint step");
    c.rng_seed = read_pod<uint64_t>(is, "checkpoint seed");
    read_network(is, c.params, c.stats);
    c.adam = read_adam<Real>(is);
    return c;
}

Precision peek_checkpoint_precision(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw SerializationError("cannot open checkpoint '" + path + "'");
    if (read_pod<uint32_t>(is, "checkpoint magic") != kCkptMagic)
        throw SerializationError("bad checkpoint magic bytes");
    if (read_pod<uint32_t>(is, "checkpoint version") != kCkptVersion)
        throw SerializationError("unsupported checkpoint format version");
    return static_cast<Precision>(read_pod<uint8_t>(is, "checkpoint precision"));
}

std::string runlog_csv(const RunLog& log) {
    std::string out = "step,loss,runtime_seconds\n";
    for (const auto& r : log.records) {
        out += std::to_string(r.step);
        out += ',';
        out += csv_number(r.loss);
        out += ',';
        out += csv_number(r.wall_seconds);
        out += '\n';
    }
    return out;
}

#define KOLMO_INSTANTIATE(Real)                                                                       \
    template double loss<Real>(const NetParams<Real>&, const Mat<Real>&, std::span<const Real>);      \
    template std::pair<Checkpoint<Real>, RunLog> train<Real>(const SdeProblem&, const NetworkSpec&,   \
                                                             const TrainConfig&, const TrainHooks<Real>&, \
                                                             const Checkpoint<Real>*);                \
    template void save_checkpoint<Real>(const std::string&, const Checkpoint<Real>&);                 \
    template Checkpoint<Real> load_checkpoint<Real>(const std::string&);
KOLMO_INSTANTIATE(float)
KOLMO_INSTANTIATE(double)
#undef KOLMO_INSTANTIATE

} // namespace kolmo
