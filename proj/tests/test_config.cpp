#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "kolmo/config.hpp"
#include "kolmo/io.hpp"
#include "kolmo/problem.hpp"

using namespace kolmo;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(KOLMO_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string capture_cli(const std::string& args, const fs::path& tmp) {
    const std::string out_file = (tmp / "stdout.txt").string();
    const std::string cmd = std::string(KOLMO_CLI_PATH) + " " + args + " > " + out_file + " 2>&1";
    std::system(cmd.c_str());
    return read_file(out_file);
}

// step,loss columns only; the wall-clock column is measured, not computed
std::string strip_runtime_column(const std::string& csv) {
    std::istringstream is(csv);
    std::string line, out;
    while (std::getline(is, line)) {
        const size_t last = line.rfind(',');
        out += line.substr(0, last);
        out += '\n';
    }
    return out;
}

} // namespace

TEST_CASE("defaults with just a problem name") {
    RunConfig cfg = parse_config("", "empty.cfg");
    apply_override(cfg, "problem.name", "heat");
    cfg.validate();
    CHECK(cfg.batch == 8192);
    CHECK(cfg.problem == "heat");
    const SdeProblem p = make_problem(cfg.problem, cfg.dimension, cfg.constants);
    CHECK(p.dim == 100);
    CHECK(p.steps == 1);
}

TEST_CASE("rejections carry line numbers") {
    RunConfig zero = parse_config("[problem]\nname = heat\n[training]\nbatch = 0\n", "t.cfg");
    CHECK_THROWS_AS(zero.validate(), ConfigError);

    CHECK_THROWS_WITH_AS(parse_config("[training]\nwibble = 3\n", "t.cfg"), doctest::Contains("t.cfg:2"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("[nosuch]\n", "t.cfg"), doctest::Contains("t.cfg:1"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("steps = 3\n", "t.cfg"), doctest::Contains("before any section"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("[training]\nsteps = abc\n", "t.cfg"), doctest::Contains("integer"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config("[training]\nsteps\n", "t.cfg"), doctest::Contains("key = value"),
                         ConfigError);
}

TEST_CASE("flag overrides beat file values") {
    RunConfig cfg = parse_config("[problem]\nname = heat\n[training]\nsteps = 100\n", "f.cfg");
    CHECK(cfg.steps == 100);
    apply_override(cfg, "training.steps", "200");
    CHECK(cfg.steps == 200);
    apply_override(cfg, "steps", "300"); // unambiguous bare key
    CHECK(cfg.steps == 300);
    CHECK_THROWS_AS(apply_override(cfg, "training.nope", "1"), ConfigError);
    apply_override(cfg, "constant.diffusion", "2.0");
    CHECK(cfg.constants.at("diffusion") == 2.0);
}

TEST_CASE("emitted configuration round-trips") {
    RunConfig cfg;
    cfg.problem = "lorenz";
    cfg.batch = 512;
    cfg.steps = 777;
    cfg.seed = 42;
    cfg.learning_rate = 0.25;
    cfg.constants["beta"] = 0.1;
    cfg.out_dir = "runs/l1";
    cfg.activation = "logistic";
    const std::string text = emit_config(cfg);
    const RunConfig back = parse_config(text, "emitted.cfg");
    CHECK(emit_config(back) == text);
    CHECK(back.problem == "lorenz");
    CHECK(back.batch == 512);
    CHECK(back.learning_rate == 0.25);
    CHECK(back.constants.at("beta") == 0.1);
    CHECK(back.activation == "logistic");
}

TEST_CASE("comments, blank lines, and sections parse") {
    const std::string text = R"(# a comment
[problem]
name = gbm
dimension = 3

; another comment style
[training]
batch = 64
)";
    const RunConfig cfg = parse_config(text, "c.cfg");
    CHECK(cfg.problem == "gbm");
    CHECK(cfg.dimension == 3);
    CHECK(cfg.batch == 64);
}

TEST_CASE("cli: train smoke run emits every artifact") {
    const fs::path tmp = fs::temp_directory_path() / "kolmo_cli_train";
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    const std::string out = (tmp / "run1").string();

    const int rc = run_cli("train --problem heat --dim 1 --batch 16 --steps 30 --seed 3 --eval-cadence 15 "
                           "--checkpoint-cadence 10 --eval-points 200 --out " + out);
    CHECK(rc == 0);
    CHECK(fs::exists(fs::path(out) / "config_resolved.cfg"));
    CHECK(fs::exists(fs::path(out) / "runlog.csv"));
    CHECK(fs::exists(fs::path(out) / "errors.csv"));
    CHECK(fs::exists(fs::path(out) / "checkpoint_final.kckpt"));
    CHECK(fs::exists(fs::path(out) / "checkpoint_10.kckpt"));
    CHECK(!fs::exists(fs::path(out) / ".lock"));

    const std::string runlog = read_file((fs::path(out) / "runlog.csv").string());
    CHECK(runlog.rfind("step,loss,runtime_seconds\n", 0) == 0);
    const std::string errors = read_file((fs::path(out) / "errors.csv").string());
    CHECK(errors.rfind("step,rel_l1,rel_l2,rel_linf,runtime_seconds\n", 0) == 0);

    // same seed, second directory: deterministic step/loss columns
    const std::string out2 = (tmp / "run2").string();
    CHECK(run_cli("train --problem heat --dim 1 --batch 16 --steps 30 --seed 3 --eval-cadence 15 "
                  "--checkpoint-cadence 10 --eval-points 200 --out " + out2) == 0);
    const std::string runlog2 = read_file((fs::path(out2) / "runlog.csv").string());
    CHECK(strip_runtime_column(runlog) == strip_runtime_column(runlog2));

    // resume from the cadence checkpoint and land on the same final losses
    const std::string out3 = (tmp / "run3").string();
    CHECK(run_cli("train --problem heat --dim 1 --batch 16 --steps 30 --seed 3 --out " + out3 +
                  " --resume " + (fs::path(out) / "checkpoint_10.kckpt").string()) == 0);
    const std::string runlog3 = read_file((fs::path(out3) / "runlog.csv").string());
    const std::string tail = strip_runtime_column(runlog3);
    const std::string full = strip_runtime_column(runlog);
    CHECK(full.find(tail.substr(tail.find('\n') + 1)) != std::string::npos);
}

TEST_CASE("cli: config file with flag precedence") {
    const fs::path tmp = fs::temp_directory_path() / "kolmo_cli_cfg";
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    const std::string cfg_path = (tmp / "run.cfg").string();
    {
        std::ofstream os(cfg_path);
        os << "[problem]\nname = heat\ndimension = 1\n[training]\nbatch = 16\nsteps = 100\nseed = 4\n"
           << "[output]\ndirectory = " << (tmp / "from_file").string() << "\n";
    }
    const std::string out = (tmp / "flag_wins").string();
    CHECK(run_cli("train --config " + cfg_path + " --steps 20 --out " + out) == 0);
    const std::string resolved = read_file((fs::path(out) / "config_resolved.cfg").string());
    CHECK(resolved.find("steps = 20") != std::string::npos);
    CHECK(resolved.find(kBuildVersion) != std::string::npos);
    const RunConfig echoed = parse_config(resolved, "resolved.cfg");
    CHECK(echoed.steps == 20);
    CHECK(echoed.batch == 16);

    CHECK(run_cli("train --config " + cfg_path + " --batch 0 --out " + (tmp / "bad").string()) == 1);
}

TEST_CASE("cli: results are independent of the worker thread count") {
    const fs::path tmp = fs::temp_directory_path() / "kolmo_cli_threads";
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    const std::string common = " train --problem heat --dim 3 --batch 64 --steps 25 --seed 8 "
                               "--eval-cadence 25 --eval-points 500 --out ";
    const std::string one = (tmp / "one").string();
    const std::string four = (tmp / "four").string();
    REQUIRE(std::system(("KOLMO_THREADS=1 " + std::string(KOLMO_CLI_PATH) + common + one +
                         " >/dev/null 2>&1").c_str()) == 0);
    REQUIRE(std::system(("KOLMO_THREADS=4 " + std::string(KOLMO_CLI_PATH) + common + four +
                         " >/dev/null 2>&1").c_str()) == 0);
    CHECK(strip_runtime_column(read_file((fs::path(one) / "runlog.csv").string())) ==
          strip_runtime_column(read_file((fs::path(four) / "runlog.csv").string())));
    CHECK(strip_runtime_column(read_file((fs::path(one) / "errors.csv").string())) ==
          strip_runtime_column(read_file((fs::path(four) / "errors.csv").string())));
}

TEST_CASE("cli: figure-cadence emits one error row per cadence step") {
    const fs::path tmp = fs::temp_directory_path() / "kolmo_cli_figure";
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    const std::string out = (tmp / "run").string();
    REQUIRE(run_cli("train --problem heat --dim 1 --batch 16 --steps 20 --seed 3 --figure-cadence 10 "
                    "--eval-points 50 --out " + out) == 0);
    const std::string errors = read_file((fs::path(out) / "errors.csv").string());
    int rows = 0;
    for (char c : errors)
        if (c == '\n') ++rows;
    CHECK(rows == 4); // header + steps 0, 10, 20
    CHECK(errors.find("\n0,") != std::string::npos);
    CHECK(errors.find("\n10,") != std::string::npos);
    CHECK(errors.find("\n20,") != std::string::npos);
}

TEST_CASE("cli: divergence exits nonzero with a reason file") {
    const fs::path tmp = fs::temp_directory_path() / "kolmo_cli_div";
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    const std::string out = (tmp / "run").string();
    const int rc = run_cli("train --problem heat --dim 1 --batch 16 --steps 50 --seed 3 "
                           "--learning-rate 1e300 --out " + out);
    CHECK(rc == 2);
    const std::string reason = read_file((fs::path(out) / "failure_reason.txt").string());
    CHECK(reason.find("status = diverged") != std::string::npos);
    CHECK(reason.find("step =") != std::string::npos);
}

TEST_CASE("cli: list-problems, reference, convergence, eval") {
    const fs::path tmp = fs::temp_directory_path() / "kolmo_cli_misc";
    fs::remove_all(tmp);
    fs::create_directories(tmp);

    const std::string listing = capture_cli("list-problems", tmp);
    for (const auto& name : problem_names()) CHECK(listing.find(name) != std::string::npos);

    const std::string ref = capture_cli("reference --problem heat --dim 3 --point 0.5,0.5,0.5", tmp);
    CHECK(ref.find("index,value,std_error,samples") != std::string::npos);
    CHECK(ref.find("0,3.75,0,0") != std::string::npos); // |x|^2 + t d = 0.75 + 3

    CHECK(run_cli("convergence --problem lorenz") == 1);
    const std::string conv =
        capture_cli("convergence --problem gbm --dim 1 --min-level 2 --max-level 4 --paths 2000", tmp);
    CHECK(conv.find("level,step_size,l2_error") != std::string::npos);
    CHECK(conv.find("slope,") != std::string::npos);

    const std::string out = (tmp / "train").string();
    REQUIRE(run_cli("train --problem heat --dim 2 --batch 16 --steps 10 --seed 5 --out " + out) == 0);
    const std::string eval_out = capture_cli(
        "eval --checkpoint " + (fs::path(out) / "checkpoint_final.kckpt").string() + " --points 100", tmp);
    CHECK(eval_out.find("step,rel_l1,rel_l2,rel_linf,runtime_seconds") != std::string::npos);
    CHECK(eval_out.find("10,") != std::string::npos);
}
