#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tdlab/cli.hpp"
#include "tdlab/mdp.hpp"
#include "tdlab/optim.hpp"
#include "tdlab/rng.hpp"
#include "tdlab/sweep.hpp"

using namespace tdlab;
namespace fs = std::filesystem;

namespace {

// fresh absolute scratch directory per test case
std::string tmp_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / "tdlab_cli_tests" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(bool(in));
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(bool(out));
    out << text;
}

std::size_t line_count(const std::string& text) {
    std::size_t n = 0;
    for (char c : text) {
        if (c == '\n') ++n;
    }
    return n;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        std::size_t next = line.find(sep, pos);
        out.push_back(line.substr(pos, next - pos));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return out;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("theory: batch run writes the analysis table and a manifest") {
    std::string dir = tmp_dir("theory_basic");
    int code = cli::run({"theory", "--instances", "25", "--n-states", "6", "--variant", "td0",
                         "--seed", "3", "--out", dir});
    CHECK(code == cli::kExitOk);

    std::string csv = slurp(dir + "/theory.csv");
    CHECK(line_count(csv) == 26);  // header + one row per instance
    CHECK(csv.rfind("variant,n,lambda,gamma,n_states,seed,", 0) == 0);

    nlohmann::json manifest = nlohmann::json::parse(slurp(dir + "/manifest.json"));
    CHECK(manifest["command"].get<std::string>() == "theory");
    CHECK(manifest["version"].get<std::string>() == std::string(cli::kVersion));
    CHECK(manifest["seed"].get<std::uint64_t>() == 3);
    CHECK(manifest["config"]["instances"].get<std::size_t>() == 25);

    // bit-identical rerun into a second directory
    std::string dir2 = tmp_dir("theory_basic_rerun");
    CHECK(cli::run({"theory", "--instances", "25", "--n-states", "6", "--variant", "td0",
                    "--seed", "3", "--out", dir2}) == cli::kExitOk);
    CHECK(slurp(dir2 + "/theory.csv") == csv);
}

TEST_CASE("theory: variant parameters and symmetric columns reach the table") {
    std::string dir = tmp_dir("theory_columns");
    CHECK(cli::run({"theory", "--instances", "4", "--n-states", "5", "--variant", "lambda:0.5",
                    "--out", dir}) == cli::kExitOk);
    std::string csv = slurp(dir + "/theory.csv");
    std::istringstream in(csv);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    std::vector<std::string> cells = split(row, ',');
    REQUIRE(cells.size() == 14);
    CHECK(cells[0] == "lambda");
    CHECK(cells[2] == "0.5");
    CHECK(cells[13].empty());  // condition-number verdict needs --symmetric

    std::string sym = tmp_dir("theory_symmetric");
    CHECK(cli::run({"theory", "--instances", "4", "--n-states", "5", "--symmetric", "--out",
                    sym}) == cli::kExitOk);
    std::istringstream sin(slurp(sym + "/theory.csv"));
    std::getline(sin, header);
    std::getline(sin, row);
    cells = split(row, ',');
    REQUIRE(cells.size() == 14);
    CHECK(!cells[11].empty());  // kappa_jacobi
    CHECK(cells[13] == "1");    // theorem2_holds
}

TEST_CASE("theory: flag errors all land on the usage exit code") {
    std::string dir = tmp_dir("theory_usage");
    CHECK(cli::run({"theory", "--variant", "lambda:1.5", "--out", dir}) == cli::kExitUsage);
    CHECK(cli::run({"theory", "--variant", "foo", "--out", dir}) == cli::kExitUsage);
    CHECK(cli::run({"theory", "--variant", "nstep:0", "--out", dir}) == cli::kExitUsage);
    CHECK(cli::run({"theory", "--gamma", "1.5", "--out", dir}) == cli::kExitUsage);
    CHECK(cli::run({"theory", "--instances", "0", "--out", dir}) == cli::kExitUsage);
    CHECK(cli::run({"theory", "--no-such-flag", "1"}) == cli::kExitUsage);
    CHECK(cli::run({}) == cli::kExitUsage);              // a subcommand is required
    CHECK(cli::run({"conquer"}) == cli::kExitUsage);     // and it must exist
    CHECK(cli::run({"--help"}) == cli::kExitOk);         // help is not an error
}

TEST_CASE("solve: trace file, manifest, and monotone error decay") {
    std::string dir = tmp_dir("solve_basic");
    int code = cli::run({"solve", "--symmetric", "--n-states", "6", "--seed", "1",
                         "--splitting", "jacobi", "--alpha", "1", "--out", dir});
    CHECK(code == cli::kExitOk);

    std::string csv = slurp(dir + "/trace.csv");
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "iteration,error_inf_norm");
    double prev = 1e300;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        std::vector<std::string> cells = split(line, ',');
        REQUIRE(cells.size() == 2);
        double err = std::stod(cells[1]);
        CHECK(err <= prev);  // contraction at alpha = 1 on a regular splitting
        prev = err;
        ++rows;
    }
    CHECK(rows >= 10);

    nlohmann::json manifest = nlohmann::json::parse(slurp(dir + "/manifest.json"));
    CHECK(manifest["config"]["alpha_mode"].get<std::string>() == "fixed");
    CHECK(manifest["config"]["splitting"].get<std::string>() == "jacobi");
}

TEST_CASE("solve: optimal alpha resolves on symmetric systems only") {
    std::string dir = tmp_dir("solve_optimal");
    CHECK(cli::run({"solve", "--symmetric", "--n-states", "6", "--alpha", "optimal", "--out",
                    dir}) == cli::kExitOk);
    nlohmann::json manifest = nlohmann::json::parse(slurp(dir + "/manifest.json"));
    CHECK(manifest["config"]["alpha_mode"].get<std::string>() == "optimal");
    CHECK(manifest["config"]["alpha"].get<double>() > 0.0);

    // nonsymmetric generator: refused with an explanation, usage exit
    CHECK(cli::run({"solve", "--n-states", "6", "--alpha", "optimal", "--out",
                    tmp_dir("solve_optimal_bad")}) == cli::kExitUsage);
}

TEST_CASE("solve: zero step reports the stationary picture without iterating") {
    std::string dir = tmp_dir("solve_zero");
    CHECK(cli::run({"solve", "--n-states", "4", "--alpha", "0", "--out", dir}) == cli::kExitOk);
    std::string csv = slurp(dir + "/trace.csv");
    CHECK(line_count(csv) == 2);  // header + the initial error, nothing else
}

TEST_CASE("solve: divergence exits 3, bad flags exit 2, files load") {
    // plain splitting with a huge step leaves the finite regime fast
    CHECK(cli::run({"solve", "--n-states", "5", "--splitting", "plain", "--alpha", "1e9",
                    "--iters", "50", "--out", tmp_dir("solve_div")}) == cli::kExitDiverged);

    std::string dir = tmp_dir("solve_flags");
    CHECK(cli::run({"solve", "--alpha", "fast", "--out", dir}) == cli::kExitUsage);
    CHECK(cli::run({"solve", "--alpha", "-1", "--out", dir}) == cli::kExitUsage);
    CHECK(cli::run({"solve", "--splitting", "cholesky", "--out", dir}) == cli::kExitUsage);
    CHECK(cli::run({"solve", "--tol", "0", "--out", dir}) == cli::kExitUsage);
    CHECK(cli::run({"solve", "--mdp-file", dir + "/nope.json", "--out", dir}) ==
          cli::kExitUsage);

    // a process saved to disk drives the solver just like a generated one
    std::string mfile = dir + "/chain.json";
    mdp::save_mdp(mdp::chain_mdp(5, 0.3, 0.4, 0.9), mfile);
    CHECK(cli::run({"solve", "--mdp-file", mfile, "--out", dir}) == cli::kExitOk);
}

TEST_CASE("learn: curve on disk, deterministic reruns, exit codes") {
    std::string dir = tmp_dir("learn_basic");
    std::vector<std::string> args{"learn",           "--env",   "windy_chain", "--optimizer",
                                  "sgd",             "--alpha", "0.1",         "--steps",
                                  "3000",            "--n",     "1",           "--actors",
                                  "1",               "--seed",  "7",           "--record-every",
                                  "1000",            "--out",   dir};
    CHECK(cli::run(args) == cli::kExitOk);
    std::string curve = slurp(dir + "/curve.csv");
    CHECK(curve.rfind("step,episodes_completed,avg_return_100ep,param_norm,z_min,z_max", 0) ==
          0);
    CHECK(line_count(curve) >= 4);

    nlohmann::json manifest = nlohmann::json::parse(slurp(dir + "/manifest.json"));
    CHECK(manifest["command"].get<std::string>() == "learn");
    CHECK(manifest["config"]["optimizer"].get<std::string>() == "sgd");

    std::string dir2 = tmp_dir("learn_rerun");
    args.back() = dir2;
    CHECK(cli::run(args) == cli::kExitOk);
    CHECK(slurp(dir2 + "/curve.csv") == curve);

    // optimizer hyperparameter validation happens before anything is written
    CHECK(cli::run({"learn", "--optimizer", "tdprop", "--epsilon", "0", "--steps", "100",
                    "--out", tmp_dir("learn_eps0")}) == cli::kExitUsage);
    CHECK(cli::run({"learn", "--env", "mars", "--steps", "100",
                    "--out", tmp_dir("learn_env")}) == cli::kExitUsage);
    CHECK(cli::run({"learn", "--optimizer", "newton", "--steps", "100",
                    "--out", tmp_dir("learn_opt")}) == cli::kExitUsage);
    CHECK(cli::run({"learn", "--qfunction", "tree", "--steps", "100",
                    "--out", tmp_dir("learn_qf")}) == cli::kExitUsage);
}

TEST_CASE("learn: divergence exits 3 but the curve is still written") {
    std::string dir = tmp_dir("learn_diverge");
    int code = cli::run({"learn", "--optimizer", "sgd", "--alpha", "1e100", "--steps", "2000",
                         "--env", "gridworld", "--out", dir});
    CHECK(code == cli::kExitDiverged);
    std::string curve = slurp(dir + "/curve.csv");
    CHECK(line_count(curve) >= 2);  // header + at least the closing sample
}

TEST_CASE("learn: the mlp head trains through the same front end") {
    std::string dir = tmp_dir("learn_mlp");
    CHECK(cli::run({"learn", "--env", "gridworld", "--qfunction", "mlp", "--hidden", "8",
                    "--optimizer", "tdprop", "--alpha", "1e-3", "--grad-clip", "0.5",
                    "--steps", "1500", "--actors", "2", "--record-every", "500", "--out",
                    dir}) == cli::kExitOk);
    nlohmann::json manifest = nlohmann::json::parse(slurp(dir + "/manifest.json"));
    CHECK(manifest["config"]["hidden"].get<std::size_t>() == 8);
    CHECK(manifest["config"]["grad_clip_norm"].get<double>() == 0.5);
    // tdprop runs carry the preconditioner columns in the curve
    std::string curve = slurp(dir + "/curve.csv");
    std::istringstream in(curve);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    std::vector<std::string> cells = split(row, ',');
    REQUIRE(cells.size() == 6);
    CHECK(!cells[4].empty());
    CHECK(!cells[5].empty());
}

TEST_CASE("sweep: spec file in, records + summary + curves out, reruns identical") {
    std::string dir = tmp_dir("sweep_basic");
    std::string spec_path = dir + "/spec.json";
    spit(spec_path, R"({
      "samples_per_kind": 1,
      "seed": 5,
      "env": "windy_chain",
      "qfunction": "tabular",
      "base": {"n": 2, "actors": 2, "gamma": 0.9, "epsilon_greedy": 0.2,
               "total_steps": 1200, "record_every": 400}
    })");
    CHECK(cli::run({"sweep", "--spec", spec_path, "--out", dir}) == cli::kExitOk);

    std::string records = slurp(dir + "/records.csv");
    CHECK(line_count(records) == 4);  // header + one record per kind
    nlohmann::json summary = nlohmann::json::parse(slurp(dir + "/summary.json"));
    CHECK(summary.contains("all_samples"));
    CHECK(summary.contains("welch_tests"));

    std::size_t curves = 0;
    for (const auto& entry : fs::directory_iterator(dir + "/curves")) {
        ++curves;
        CHECK(entry.path().extension() == ".csv");
    }
    CHECK(curves == 3);

    // the manifest records the ranges after notation resolution
    nlohmann::json manifest = nlohmann::json::parse(slurp(dir + "/manifest.json"));
    CHECK(manifest["config"]["lr_tdprop"][0].get<double>() == 1e-7);
    CHECK(manifest["config"]["lr_sgd"][1].get<double>() == 10.0);

    std::string dir2 = tmp_dir("sweep_rerun");
    CHECK(cli::run({"sweep", "--spec", spec_path, "--out", dir2}) == cli::kExitOk);
    CHECK(slurp(dir2 + "/records.csv") == records);
    CHECK(slurp(dir2 + "/summary.json") == slurp(dir + "/summary.json"));
}

TEST_CASE("sweep: malformed specs are usage errors naming the problem") {
    std::string dir = tmp_dir("sweep_bad");
    CHECK(cli::run({"sweep", "--spec", dir + "/missing.json", "--out", dir}) ==
          cli::kExitUsage);

    std::string bad = dir + "/bad.json";
    spit(bad, "{ not json");
    CHECK(cli::run({"sweep", "--spec", bad, "--out", dir}) == cli::kExitUsage);
    spit(bad, R"({"kinds": ["newton"], "base": {"total_steps": 100}})");
    CHECK(cli::run({"sweep", "--spec", bad, "--out", dir}) == cli::kExitUsage);
    spit(bad, R"({"lr_sgd": [0.5, 0.5], "base": {"total_steps": 100}})");
    CHECK(cli::run({"sweep", "--spec", bad, "--out", dir}) == cli::kExitUsage);
    CHECK(cli::run({"sweep", "--out", dir}) == cli::kExitUsage);  // --spec is required
}

TEST_CASE("stats: analysis over an existing records file, pair filtering") {
    std::string dir = tmp_dir("stats_basic");
    // synthetic records: three kinds with separated return levels
    Rng rng(17);
    std::vector<sweep::SweepRecord> records;
    auto add = [&](optim::OptimizerKind kind, double level) {
        for (int i = 0; i < 8; ++i) {
            sweep::SweepRecord r;
            r.kind = kind;
            r.lr = rng.uniform(1e-4, 1e-2);
            r.beta2 = rng.uniform(0.0, 1.0);
            r.epsilon = rng.uniform(1e-6, 1e-1);
            r.seed = std::uint64_t(i);
            r.avg_return = level + 0.05 * rng.uniform(-1.0, 1.0);
            r.asymptotic_return = r.avg_return;
            records.push_back(r);
        }
    };
    add(optim::OptimizerKind::Tdprop, 0.9);
    add(optim::OptimizerKind::Adam, 0.6);
    add(optim::OptimizerKind::Sgd, 0.3);
    std::string records_path = dir + "/records.csv";
    spit(records_path, sweep::records_csv(records));

    CHECK(cli::run({"stats", "--records", records_path, "--out", dir}) == cli::kExitOk);
    nlohmann::json summary = nlohmann::json::parse(slurp(dir + "/summary.json"));
    CHECK(summary["welch_tests"].size() == 6);
    CHECK(summary["all_samples"]["tdprop"]["count"].get<std::size_t>() == 8);
    CHECK(summary["regressions"].contains("sgd"));

    std::string filtered = tmp_dir("stats_pairs");
    CHECK(cli::run({"stats", "--records", records_path, "--pairs", "tdprop,sgd", "--out",
                    filtered}) == cli::kExitOk);
    nlohmann::json narrowed = nlohmann::json::parse(slurp(filtered + "/summary.json"));
    REQUIRE(narrowed["welch_tests"].size() == 2);  // one per scope
    for (const auto& entry : narrowed["welch_tests"]) {
        std::string a = entry["kind_a"].get<std::string>();
        std::string b = entry["kind_b"].get<std::string>();
        CHECK(((a == "sgd" && b == "tdprop") || (a == "tdprop" && b == "sgd")));
    }

    // deterministic given the same seed
    std::string dir2 = tmp_dir("stats_rerun");
    CHECK(cli::run({"stats", "--records", records_path, "--out", dir2}) == cli::kExitOk);
    CHECK(slurp(dir2 + "/summary.json") == slurp(dir + "/summary.json"));
}

TEST_CASE("stats: malformed inputs and flags exit 2") {
    std::string dir = tmp_dir("stats_bad");
    std::string bad = dir + "/bad.csv";
    spit(bad, "x,y\n1,2\n");  // wrong columns
    CHECK(cli::run({"stats", "--records", bad, "--out", dir}) == cli::kExitUsage);
    CHECK(cli::run({"stats", "--records", dir + "/missing.csv", "--out", dir}) ==
          cli::kExitUsage);

    std::string good = dir + "/good.csv";
    sweep::SweepRecord r;
    r.kind = optim::OptimizerKind::Sgd;
    r.avg_return = 1.0;
    spit(good, sweep::records_csv({r, r, r}));
    CHECK(cli::run({"stats", "--records", good, "--top-percentile", "0", "--out", dir}) ==
          cli::kExitUsage);
    CHECK(cli::run({"stats", "--records", good, "--pairs", "tdprop", "--out", dir}) ==
          cli::kExitUsage);
    CHECK(cli::run({"stats", "--records", good, "--pairs", "tdprop,newton", "--out", dir}) ==
          cli::kExitUsage);

    // a single constant kind still produces a (degenerate) CI table
    CHECK(cli::run({"stats", "--records", good, "--out", dir}) == cli::kExitOk);
    nlohmann::json summary = nlohmann::json::parse(slurp(dir + "/summary.json"));
    CHECK(summary["welch_tests"].empty());
    CHECK(summary["all_samples"]["sgd"]["ci_lo"].get<double>() ==
          summary["all_samples"]["sgd"]["ci_hi"].get<double>());
}

TEST_CASE("manifest lands before the work: late failures leave it behind") {
    std::string dir = tmp_dir("manifest_first");
    CHECK(cli::run({"solve", "--n-states", "5", "--splitting", "plain", "--alpha", "1e9",
                    "--iters", "50", "--out", dir}) == cli::kExitDiverged);
    CHECK(fs::exists(dir + "/manifest.json"));   // written up front
    CHECK_FALSE(fs::exists(dir + "/trace.csv"));  // the run never got that far
}

TEST_CASE("the output-directory environment variable supplies the default") {
    std::string dir = tmp_dir("env_default");
    REQUIRE(setenv(cli::kOutDirEnvVar, dir.c_str(), 1) == 0);
    int code = cli::run({"theory", "--instances", "3", "--n-states", "4"});
    REQUIRE(unsetenv(cli::kOutDirEnvVar) == 0);
    CHECK(code == cli::kExitOk);
    CHECK(fs::exists(dir + "/theory.csv"));
    CHECK(fs::exists(dir + "/manifest.json"));
}

}  // TEST_SUITE("cli")
