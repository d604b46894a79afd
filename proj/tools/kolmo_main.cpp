// Command-line front end: train a network on one of the registered
// problems, evaluate checkpoints against reference solutions, emit
// reference values, and measure the strong convergence order of the
// Euler-Maruyama scheme.

#include <CLI11.hpp>

#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "kolmo/config.hpp"
#include "kolmo/evaluation.hpp"
#include "kolmo/io.hpp"
#include "kolmo/problem.hpp"
#include "kolmo/reference.hpp"
#include "kolmo/simulate.hpp"
#include "kolmo/training.hpp"

namespace fs = std::filesystem;
using namespace kolmo;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitDiverged = 2;

// One invocation owns its output directory.
class DirLock {
public:
    explicit DirLock(const fs::path& dir) : path_(dir / ".lock") {
        if (fs::exists(path_))
            throw std::runtime_error("output directory is locked by another run (remove " + path_.string() +
                                     " if that run is gone)");
        std::ofstream os(path_);
        os << "pid " << ::getpid() << "\n";
    }
    ~DirLock() {
        std::error_code ec;
        fs::remove(path_, ec);
    }
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;

private:
    fs::path path_;
};

struct EvalSetup {
    Domain domain;
    int64_t points = 0;
    int64_t reference_samples = 0;
    uint64_t eval_seed = 0;
    std::function<ReferenceEstimate(std::span<const double>)> reference;
    ReferenceCache* cache = nullptr;
    std::string cache_path;
    std::string problem_name;
};

// Wraps the reference with the on-disk cache.
std::function<ReferenceEstimate(std::span<const double>)> cached_reference(EvalSetup& setup) {
    return [&setup](std::span<const double> x) {
        if (!setup.cache || setup.reference_samples == 0) return setup.reference(x);
        const std::string key =
            ReferenceCache::key_for(setup.problem_name, x, setup.reference_samples, setup.eval_seed);
        if (auto hit = setup.cache->lookup(key)) return *hit;
        const ReferenceEstimate est = setup.reference(x);
        setup.cache->insert(key, est);
        return est;
    };
}

template <class Real>
std::function<std::vector<double>(const Matrix&)> make_approx(const NetParams<Real>& params,
                                                              const BnStats<Real>& stats) {
    return [&params, &stats](const Matrix& points) {
        Mat<Real> in(points.rows, points.cols);
        for (size_t i = 0; i < points.a.size(); ++i) in.a[i] = static_cast<Real>(points.a[i]);
        const Mat<Real> out = forward_infer(params, stats, in);
        std::vector<double> values(static_cast<size_t>(out.rows));
        for (int64_t j = 0; j < out.rows; ++j) values[static_cast<size_t>(j)] = static_cast<double>(out(j, 0));
        return values;
    };
}

std::string errors_csv_header() { return "step,rel_l1,rel_l2,rel_linf,runtime_seconds\n"; }

std::string errors_csv_row(const ErrorReport& r) {
    std::string row = std::to_string(r.step);
    row += ',';
    row += csv_number(r.rel_l1);
    row += ',';
    row += csv_number(r.rel_l2);
    row += ',';
    row += csv_number(r.rel_linf);
    row += ',';
    row += csv_number(r.runtime_seconds);
    row += '\n';
    return row;
}

TrainConfig train_config_from(const RunConfig& cfg) {
    TrainConfig tc;
    tc.batch = cfg.batch;
    tc.steps = cfg.steps;
    tc.seed = cfg.seed;
    tc.precision = *precision_from_string(cfg.precision);
    tc.eval_cadence = cfg.eval_cadence;
    tc.checkpoint_cadence = cfg.checkpoint_cadence;
    tc.hidden1 = cfg.hidden1;
    tc.hidden2 = cfg.hidden2;
    tc.activation_override = activation_from_string(cfg.activation);
    tc.schedule = cfg.schedule();
    return tc;
}

template <class Real>
int run_train_typed(const RunConfig& cfg, const SdeProblem& problem, const std::string& resume_path) {
    const TrainConfig tc = train_config_from(cfg);
    const NetworkSpec spec = network_spec_for(problem, tc, cfg.bn_epsilon, cfg.bn_momentum);

    const fs::path out(cfg.out_dir);
    fs::create_directories(out);
    DirLock lock(out);
    atomic_write_file((out / "config_resolved.cfg").string(), emit_config(cfg));

    const int64_t eval_points = cfg.eval_points > 0 ? cfg.eval_points : problem.default_eval_points;
    const int64_t ref_samples =
        cfg.reference_samples > 0 ? cfg.reference_samples : problem.default_reference_samples;

    EvalSetup setup;
    setup.domain = problem.eval_domain;
    setup.points = eval_points;
    setup.reference_samples = ref_samples;
    setup.eval_seed = cfg.eval_seed;
    setup.problem_name = problem.name;
    setup.reference = make_reference_fn(problem, ref_samples, cfg.eval_seed);
    ReferenceCache cache;
    setup.cache_path = (out / "reference_cache.txt").string();
    cache.load(setup.cache_path);
    setup.cache = &cache;
    const auto reference = cached_reference(setup);

    std::string errors_csv = errors_csv_header();
    const auto train_start = std::chrono::steady_clock::now();

    TrainHooks<Real> hooks;
    hooks.on_eval = [&](int64_t step, const NetParams<Real>& params, const BnStats<Real>& stats) {
        ErrorReport report;
        report.step = step;
        const auto approx = make_approx(params, stats);
        const ErrorTriple t = relative_errors(approx, reference, setup.domain, setup.points,
                                              StreamKey{setup.eval_seed, StreamUse::evaluation, 0}, 1e-12,
                                              &report.reference_se_mean);
        report.rel_l1 = t.l1;
        report.rel_l2 = t.l2;
        report.rel_linf = t.linf;
        report.spatial_samples = setup.points;
        report.reference_samples = setup.reference_samples;
        report.runtime_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - train_start).count();
        errors_csv += errors_csv_row(report);
        if (setup.cache && setup.reference_samples > 0) cache.save(setup.cache_path);
        std::cout << "step " << step << "  rel_l1 " << csv_number(report.rel_l1) << "  rel_l2 "
                  << csv_number(report.rel_l2) << "  rel_linf " << csv_number(report.rel_linf) << "\n";
    };
    hooks.on_checkpoint = [&](const Checkpoint<Real>& c) {
        save_checkpoint((out / ("checkpoint_" + std::to_string(c.step) + ".kckpt")).string(), c);
        save_checkpoint((out / "checkpoint_final.kckpt").string(), c);
    };

    std::optional<Checkpoint<Real>> resume;
    if (!resume_path.empty()) resume = load_checkpoint<Real>(resume_path);

    try {
        auto [final_state, log] = train<Real>(problem, spec, tc, hooks, resume ? &*resume : nullptr);
        atomic_write_file((out / "runlog.csv").string(), runlog_csv(log));
        if (tc.eval_cadence > 0) atomic_write_file((out / "errors.csv").string(), errors_csv);
        std::cout << "trained " << problem.name << " to step " << final_state.step << "; artifacts in "
                  << out.string() << "\n";
        return 0;
    } catch (const TrainingDiverged& e) {
        std::ostringstream reason;
        reason << "status = diverged\nstep = " << e.step << "\nreason = non-finite training loss\n";
        atomic_write_file((out / "failure_reason.txt").string(), reason.str());
        std::cerr << "error: " << e.what() << "\n";
        return kExitDiverged;
    }
}

RunConfig load_run_config(const std::string& config_path, CLI::App* cmd,
                          const std::vector<std::string>& sets) {
    RunConfig cfg;
    if (!config_path.empty()) cfg = parse_config(read_file(config_path), config_path);
    // Typed flags win over the file; --set wins over both.
    for (const auto& opt : cmd->get_options()) {
        if (opt->count() == 0) continue;
        const std::string name = opt->get_single_name();
        if (name == "config" || name == "set" || name == "resume" || name == "figure-cadence") continue;
        if (name == "problem") apply_override(cfg, "problem.name", opt->as<std::string>());
        else if (name == "dim") apply_override(cfg, "problem.dimension", opt->as<std::string>());
        else if (name == "out") apply_override(cfg, "output.directory", opt->as<std::string>());
        else if (name == "eval-points") apply_override(cfg, "evaluation.points", opt->as<std::string>());
        else if (name == "reference-samples")
            apply_override(cfg, "evaluation.reference_samples", opt->as<std::string>());
        else if (name == "eval-seed") apply_override(cfg, "evaluation.eval_seed", opt->as<std::string>());
        else if (name == "eval-cadence") apply_override(cfg, "training.eval_cadence", opt->as<std::string>());
        else if (name == "checkpoint-cadence")
            apply_override(cfg, "training.checkpoint_cadence", opt->as<std::string>());
        else if (name == "learning-rate") apply_override(cfg, "training.learning_rate", opt->as<std::string>());
        else apply_override(cfg, name, opt->as<std::string>());
    }
    for (const auto& kv : sets) {
        const size_t eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        apply_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

std::vector<double> parse_point(const std::string& text) {
    std::vector<double> out;
    std::istringstream is(text);
    std::string item;
    while (std::getline(is, item, ',')) out.push_back(std::stod(item));
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Neural approximation of linear Kolmogorov PDE solutions on a box"};
    app.require_subcommand(1);

    // ------------------------------ train ------------------------------
    auto* train_cmd = app.add_subcommand("train", "Train a network on a registered problem");
    std::string config_path, resume_path;
    std::vector<std::string> sets;
    int64_t figure_cadence = 0;
    train_cmd->add_option("--config", config_path, "configuration file");
    train_cmd->add_option("--problem", "problem name");
    train_cmd->add_option("--dim", "dimension override");
    train_cmd->add_option("--batch", "mini-batch size");
    train_cmd->add_option("--steps", "number of optimizer steps");
    train_cmd->add_option("--seed", "training seed");
    train_cmd->add_option("--precision", "f32 or f64");
    train_cmd->add_option("--hidden1", "first hidden width");
    train_cmd->add_option("--hidden2", "second hidden width");
    train_cmd->add_option("--activation", "tanh or logistic");
    train_cmd->add_option("--learning-rate", "constant learning rate (0 = default schedule)");
    train_cmd->add_option("--eval-cadence", "steps between error reports");
    train_cmd->add_option("--checkpoint-cadence", "steps between checkpoints");
    train_cmd->add_option("--eval-points", "spatial Monte Carlo points per error report");
    train_cmd->add_option("--reference-samples", "Monte Carlo samples per reference value");
    train_cmd->add_option("--eval-seed", "seed for evaluation points and references");
    train_cmd->add_option("--out", "output directory");
    train_cmd->add_option("--resume", resume_path, "checkpoint to resume from");
    train_cmd->add_option("--figure-cadence", figure_cadence,
                          "emit one error row every C steps (plot-data mode)");
    train_cmd->add_option("--set", sets, "generic section.key=value override")->take_all();

    // ------------------------------ eval ------------------------------
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint against the reference");
    std::string eval_checkpoint, eval_out;
    int64_t eval_points_arg = 0, eval_ref_samples = 0;
    uint64_t eval_seed_arg = 12345;
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint file")->required();
    eval_cmd->add_option("--points", eval_points_arg, "spatial Monte Carlo points");
    eval_cmd->add_option("--reference-samples", eval_ref_samples, "samples per reference value");
    eval_cmd->add_option("--eval-seed", eval_seed_arg, "seed for points and references");
    eval_cmd->add_option("--out", eval_out, "also append the CSV row to this file");
    std::vector<std::string> eval_sets;
    eval_cmd->add_option("--set", eval_sets, "problem constant override (constant.name=value)")->take_all();

    // ---------------------------- reference ----------------------------
    auto* ref_cmd = app.add_subcommand("reference", "Emit reference values u(T, x) as CSV");
    std::string ref_problem = "heat";
    int ref_dim = 0;
    int64_t ref_samples = 100000, ref_random_points = 0;
    uint64_t ref_seed = 1;
    std::vector<std::string> ref_points, ref_sets;
    ref_cmd->add_option("--problem", ref_problem, "problem name")->required();
    ref_cmd->add_option("--dim", ref_dim, "dimension override");
    ref_cmd->add_option("--point", ref_points, "comma-separated coordinates (repeatable)")->take_all();
    ref_cmd->add_option("--random-points", ref_random_points, "evaluate at K uniform points instead");
    ref_cmd->add_option("--samples", ref_samples, "Monte Carlo samples per value");
    ref_cmd->add_option("--seed", ref_seed, "sampling seed");
    ref_cmd->add_option("--set", ref_sets, "problem constant override")->take_all();

    // --------------------------- convergence ---------------------------
    auto* conv_cmd = app.add_subcommand("convergence", "Strong convergence order of the Euler scheme");
    std::string conv_problem = "gbm";
    int conv_dim = 0, conv_min_level = 2, conv_max_level = 7;
    int64_t conv_paths = 100000;
    uint64_t conv_seed = 1;
    conv_cmd->add_option("--problem", conv_problem, "problem name")->required();
    conv_cmd->add_option("--dim", conv_dim, "dimension override");
    conv_cmd->add_option("--min-level", conv_min_level, "coarsest level k (2^k steps)");
    conv_cmd->add_option("--max-level", conv_max_level, "finest level k");
    conv_cmd->add_option("--paths", conv_paths, "coupled sample paths");
    conv_cmd->add_option("--seed", conv_seed, "sampling seed");

    // -------------------------- list-problems --------------------------
    auto* list_cmd = app.add_subcommand("list-problems", "Show the registered problems");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) {
            RunConfig cfg = load_run_config(config_path, train_cmd, sets);
            if (figure_cadence > 0) cfg.eval_cadence = figure_cadence;
            cfg.validate();
            const SdeProblem problem = make_problem(cfg.problem, cfg.dimension, cfg.constants);
            if (cfg.precision == "f32") return run_train_typed<float>(cfg, problem, resume_path);
            return run_train_typed<double>(cfg, problem, resume_path);
        }

        if (eval_cmd->parsed()) {
            const Precision prec = peek_checkpoint_precision(eval_checkpoint);
            auto run_eval = [&](auto tag) {
                using Real = decltype(tag);
                const Checkpoint<Real> c = load_checkpoint<Real>(eval_checkpoint);
                std::map<std::string, double> constants;
                for (const auto& kv : eval_sets) {
                    const size_t eq = kv.find('=');
                    std::string key = kv.substr(0, eq);
                    if (key.rfind("constant.", 0) == 0) key = key.substr(9);
                    constants[key] = std::stod(kv.substr(eq + 1));
                }
                const SdeProblem problem = make_problem(c.problem_name, c.params.spec.input_dim, constants);
                const int64_t points = eval_points_arg > 0 ? eval_points_arg : problem.default_eval_points;
                const int64_t samples =
                    eval_ref_samples > 0 ? eval_ref_samples : problem.default_reference_samples;
                const auto reference = make_reference_fn(problem, samples, eval_seed_arg);
                ErrorReport report;
                report.step = c.step;
                const auto t0 = std::chrono::steady_clock::now();
                const ErrorTriple t = relative_errors(
                    make_approx(c.params, c.stats), reference, problem.eval_domain, points,
                    StreamKey{eval_seed_arg, StreamUse::evaluation, 0}, 1e-12, &report.reference_se_mean);
                report.rel_l1 = t.l1;
                report.rel_l2 = t.l2;
                report.rel_linf = t.linf;
                report.spatial_samples = points;
                report.reference_samples = samples;
                report.runtime_seconds =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                std::cout << errors_csv_header() << errors_csv_row(report);
                if (!eval_out.empty()) {
                    std::string content;
                    if (fs::exists(eval_out)) content = read_file(eval_out);
                    if (content.empty()) content = errors_csv_header();
                    content += errors_csv_row(report);
                    atomic_write_file(eval_out, content);
                }
            };
            if (prec == Precision::f32) run_eval(float{});
            else run_eval(double{});
            return 0;
        }

        if (ref_cmd->parsed()) {
            std::map<std::string, double> constants;
            for (const auto& kv : ref_sets) {
                const size_t eq = kv.find('=');
                std::string key = kv.substr(0, eq);
                if (key.rfind("constant.", 0) == 0) key = key.substr(9);
                constants[key] = std::stod(kv.substr(eq + 1));
            }
            const SdeProblem problem = make_problem(ref_problem, ref_dim, constants);
            const auto reference = make_reference_fn(problem, ref_samples, ref_seed);
            Matrix points;
            if (ref_random_points > 0) {
                points = sample_initial(problem.eval_domain, ref_random_points,
                                        StreamKey{ref_seed, StreamUse::evaluation, 1});
            } else {
                if (ref_points.empty())
                    throw std::runtime_error("reference: give --point or --random-points");
                points = Matrix(static_cast<int64_t>(ref_points.size()), problem.dim);
                for (size_t i = 0; i < ref_points.size(); ++i) {
                    const auto coords = parse_point(ref_points[i]);
                    if (coords.size() != static_cast<size_t>(problem.dim))
                        throw std::runtime_error("reference: point has wrong dimension");
                    std::copy(coords.begin(), coords.end(), points.row(static_cast<int64_t>(i)));
                }
            }
            std::cout << "index,value,std_error,samples\n";
            for (int64_t j = 0; j < points.rows; ++j) {
                const ReferenceEstimate est =
                    reference(std::span<const double>(points.row(j), static_cast<size_t>(problem.dim)));
                std::cout << j << ',' << csv_number(est.value) << ',' << csv_number(est.std_error) << ','
                          << est.samples << "\n";
            }
            return 0;
        }

        if (conv_cmd->parsed()) {
            const SdeProblem problem = make_problem(conv_problem, conv_dim);
            if (!problem.exact_step || !problem.drift || !problem.diffusion) {
                std::cerr << "error: problem '" << conv_problem
                          << "' has no exact one-step law to couple against\n";
                return kExitUsage;
            }
            if (conv_min_level >= conv_max_level) {
                std::cerr << "error: need at least two levels\n";
                return kExitUsage;
            }
            std::vector<int> levels;
            for (int k = conv_min_level; k <= conv_max_level; ++k) levels.push_back(k);
            const ConvergenceReport report = strong_convergence(
                problem, levels, conv_paths, StreamKey{conv_seed, StreamUse::test, 0});
            std::cout << "level,step_size,l2_error\n";
            for (const auto& lvl : report.levels)
                std::cout << lvl.level << ',' << csv_number(lvl.step_size) << ','
                          << csv_number(lvl.l2_error) << "\n";
            std::cout << "slope," << csv_number(report.slope) << ",\n";
            return 0;
        }

        if (list_cmd->parsed()) {
            for (const auto& name : problem_names()) {
                const SdeProblem p = make_problem(name);
                std::cout << name << ": d=" << p.dim << " N=" << p.steps << " T=" << p.horizon
                          << " hidden=" << p.default_hidden << " domain=[" << p.domain.lo.front() << ","
                          << p.domain.hi.front() << "]x...  constants:";
                for (const auto& [k, v] : p.params) std::cout << ' ' << k << '=' << v;
                std::cout << "\n";
            }
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return 0;
}
