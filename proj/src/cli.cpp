#include "tdlab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tdlab/agent.hpp"
#include "tdlab/error.hpp"
#include "tdlab/mdp.hpp"
#include "tdlab/precond.hpp"
#include "tdlab/rng.hpp"
#include "tdlab/solver.hpp"
#include "tdlab/sweep.hpp"

namespace tdlab::cli {

const char* const kVersion = "1.0.0";
const char* const kOutDirEnvVar = "TDLAB_OUT_DIR";

namespace fs = std::filesystem;

namespace {

std::string default_out_dir() {
    const char* env = std::getenv(kOutDirEnvVar);
    return (env && *env) ? env : ".";
}

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

fs::path prepare_out_dir(const std::string& dir) {
    fs::path p = dir;
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
    return p;
}

// manifest-first: the resolved configuration lands on disk before any work
void write_manifest(const fs::path& out_dir, const std::string& command,
                    std::uint64_t seed, nlohmann::json config) {
    nlohmann::json j;
    j["command"] = command;
    j["version"] = kVersion;
    j["seed"] = seed;
    j["config"] = std::move(config);
    write_file(out_dir / "manifest.json", j.dump(2) + "\n");
}

precond::Variant parse_variant(const std::string& text) {
    if (text == "td0") return precond::Variant::td0();
    if (text.rfind("nstep:", 0) == 0) {
        unsigned n = 0;
        try {
            n = unsigned(std::stoul(text.substr(6)));
        } catch (const std::logic_error&) {
            throw InvalidArg("variant: cannot parse '" + text + "' (want nstep:N)");
        }
        if (n < 1) throw InvalidArg("variant: nstep horizon must be >= 1");
        return precond::Variant::nstep(n);
    }
    if (text.rfind("lambda:", 0) == 0) {
        double l = 0.0;
        try {
            l = std::stod(text.substr(7));
        } catch (const std::logic_error&) {
            throw InvalidArg("variant: cannot parse '" + text + "' (want lambda:L)");
        }
        if (!(l >= 0.0 && l <= 1.0)) {
            throw InvalidArg("variant: lambda must lie in [0,1], got " + fmt17(l));
        }
        return precond::Variant::td_lambda(l);
    }
    throw InvalidArg("variant: unknown '" + text + "' (expected td0 | nstep:N | lambda:L)");
}

nlohmann::json variant_json(const precond::Variant& v) {
    nlohmann::json j;
    j["kind"] = v.name();
    if (v.kind == precond::VariantKind::NStep) j["n"] = v.n;
    if (v.kind == precond::VariantKind::Lambda) j["lambda"] = v.lambda;
    return j;
}

// ---------------------------------------------------------------------------
// theory: batches of random systems, inequality bookkeeping
// ---------------------------------------------------------------------------

struct TheoryOpts {
    std::size_t n_states = 8;
    std::size_t instances = 100;
    std::vector<double> gammas{0.9};
    std::string variant = "td0";
    bool symmetric = false;
    std::size_t branching = 3;
    std::uint64_t seed = 0;
    std::string out = default_out_dir();
};

int cmd_theory(const TheoryOpts& opt) {
    precond::Variant variant = parse_variant(opt.variant);
    if (opt.instances < 1) throw InvalidArg("theory: --instances must be >= 1");
    for (double g : opt.gammas) {
        if (!(g > 0.0 && g < 1.0)) {
            throw InvalidArg("theory: --gamma must lie in (0,1), got " + fmt17(g));
        }
    }
    std::size_t branching = std::min(opt.branching, opt.n_states);

    fs::path out = prepare_out_dir(opt.out);
    nlohmann::json config;
    config["n_states"] = opt.n_states;
    config["instances"] = opt.instances;
    config["gammas"] = opt.gammas;
    config["variant"] = variant_json(variant);
    config["symmetric"] = opt.symmetric;
    config["branching"] = branching;
    write_manifest(out, "theory", opt.seed, config);

    std::string csv = precond::analysis_csv_header() + "\n";
    std::size_t violations = 0;
    std::size_t rows = 0;
    Rng seeder(opt.seed);
    for (double gamma : opt.gammas) {
        for (std::size_t i = 0; i < opt.instances; ++i) {
            std::uint64_t s = seeder.next_u64();
            mdp::Mdp m = opt.symmetric
                             ? mdp::symmetric_mdp(s, opt.n_states, gamma)
                             : mdp::random_mdp(s, opt.n_states, branching, gamma);
            precond::SplittingAnalysis a = precond::analyze(m, variant, s);
            csv += precond::analysis_csv_row(a) + "\n";
            ++rows;
            if (!a.theorem1_holds) ++violations;
            if (a.theorem2_holds && !*a.theorem2_holds) ++violations;
        }
    }
    write_file(out / "theory.csv", csv);
    std::cout << "wrote " << (out / "theory.csv").string() << " (" << rows << " rows)\n";
    if (violations > 0) {
        std::cout << violations << " violation(s) of the asserted inequalities\n";
        return kExitViolations;
    }
    std::cout << "all asserted inequalities held\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// solve: one preconditioned iteration run, empirical vs predicted rate
// ---------------------------------------------------------------------------

struct SolveOpts {
    std::string mdp_file;  // empty: use the generator flags below
    std::size_t n_states = 8;
    std::size_t branching = 3;
    bool symmetric = false;
    double gamma = 0.9;
    std::string variant = "td0";
    std::string splitting = "jacobi";
    std::string alpha = "1";
    std::size_t iters = 500;
    double tol = 1e-10;
    std::uint64_t seed = 0;
    std::string out = default_out_dir();
};

// step size minimizing the contraction rate; defined only when the
// (preconditioned) operator has a real positive spectrum, i.e. symmetric h
double resolve_optimal_alpha(const precond::TdSystem& sys, const precond::Splitting& s) {
    const linalg::Matrix& h = sys.h;
    double scale = std::max(1.0, linalg::max_abs_entry(h));
    for (std::size_t i = 0; i < h.rows(); ++i) {
        for (std::size_t j = i + 1; j < h.cols(); ++j) {
            if (std::abs(h(i, j) - h(j, i)) > 1e-10 * scale) {
                throw InvalidArg(
                    "alpha=optimal needs a symmetric system matrix (generate one with "
                    "--symmetric); this one is not symmetric");
            }
        }
    }
    linalg::Matrix target = h;
    if (s.kind == precond::SplitKind::Jacobi) {
        // D^{-1/2} h D^{-1/2}: shares its spectrum with the preconditioned
        // operator but stays symmetric, so the eigenvalues are safely real
        for (std::size_t i = 0; i < h.rows(); ++i) {
            for (std::size_t j = 0; j < h.cols(); ++j) {
                target(i, j) = h(i, j) / std::sqrt(s.b(i, i) * s.b(j, j));
            }
        }
    }
    return precond::optimal_alpha(linalg::eigenvalues_symmetric(target)).alpha_star;
}

int cmd_solve(const SolveOpts& opt) {
    precond::Variant variant = parse_variant(opt.variant);
    if (opt.splitting != "plain" && opt.splitting != "jacobi") {
        throw InvalidArg("solve: --splitting must be plain or jacobi");
    }
    if (!(opt.tol > 0.0)) throw InvalidArg("solve: --tol must be positive");

    mdp::Mdp m;
    if (!opt.mdp_file.empty()) {
        m = mdp::load_mdp(opt.mdp_file);
    } else if (opt.symmetric) {
        m = mdp::symmetric_mdp(opt.seed, opt.n_states, opt.gamma);
    } else {
        m = mdp::random_mdp(opt.seed, opt.n_states,
                            std::min(opt.branching, opt.n_states), opt.gamma);
    }

    precond::TdSystem sys = precond::build_system(m, variant);
    precond::Splitting split =
        opt.splitting == "jacobi" ? precond::jacobi_split(sys) : precond::plain_split(sys);

    bool optimal = opt.alpha == "optimal";
    double alpha = 0.0;
    if (optimal) {
        alpha = resolve_optimal_alpha(sys, split);
    } else {
        try {
            std::size_t used = 0;
            alpha = std::stod(opt.alpha, &used);
            if (used != opt.alpha.size()) throw InvalidArg("");
        } catch (const std::exception&) {
            throw InvalidArg("solve: --alpha must be a number or 'optimal', got '" +
                             opt.alpha + "'");
        }
        if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
            throw InvalidArg("solve: --alpha must be >= 0");
        }
    }

    fs::path out = prepare_out_dir(opt.out);
    nlohmann::json config;
    config["source"] = opt.mdp_file.empty()
                           ? nlohmann::json{{"generator", opt.symmetric ? "symmetric" : "random"},
                                            {"n_states", opt.n_states},
                                            {"gamma", opt.gamma}}
                           : nlohmann::json{{"file", opt.mdp_file}};
    config["variant"] = variant_json(variant);
    config["splitting"] = opt.splitting;
    config["alpha"] = alpha;
    config["alpha_mode"] = optimal ? "optimal" : "fixed";
    config["iters"] = opt.iters;
    config["tol"] = opt.tol;
    write_manifest(out, "solve", opt.seed, config);

    Vector v0(sys.h.rows(), 0.0);
    solver::SolveTrace trace;
    if (alpha == 0.0) {
        // a zero step makes no progress; report the stationary picture without
        // iterating (the update rule itself requires a positive step)
        Vector v_star = linalg::solve_linear(sys.h, sys.r_eff);
        double e0 = 0.0;
        for (std::size_t i = 0; i < v0.size(); ++i) {
            e0 = std::max(e0, std::abs(v0[i] - v_star[i]));
        }
        trace.errors = {e0};
        trace.alpha = 0.0;
        trace.splitting_kind = split.kind;
        trace.iterations = 0;
        trace.converged = false;
    } else {
        trace = solver::iterate(sys, split, alpha, v0, opt.iters, opt.tol);
    }
    solver::save_trace(trace, (out / "trace.csv").string());

    double predicted = precond::iteration_rate(split, alpha);
    std::cout << "alpha = " << fmt17(alpha) << (optimal ? " (optimal)" : "") << "\n";
    std::cout << "predicted rate = " << fmt17(predicted) << "\n";
    // short converged runs get a proportionally earlier burn-in
    std::size_t burn_in = std::min<std::size_t>(50, trace.iterations / 5);
    try {
        double empirical = solver::empirical_rate(trace, burn_in);
        std::cout << "empirical rate = " << fmt17(empirical) << "\n";
    } catch (const InsufficientData&) {
        std::cout << "empirical rate = n/a (trace too short)\n";
    }
    std::cout << (trace.converged ? "converged" : "not converged") << " after "
              << trace.iterations << " iterations\n";
    std::cout << "wrote " << (out / "trace.csv").string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// learn: one training run, curve on disk even when it diverges
// ---------------------------------------------------------------------------

struct LearnOpts {
    std::string env = "gridworld";
    std::string qfunction = "tabular";
    std::size_t hidden = 16;
    std::string optimizer = "sgd";
    double alpha = 1e-3;
    double beta1 = 0.0;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double grad_clip = 0.5;
    bool clip_set = false;
    std::size_t steps = 200000;
    std::size_t n = 5;
    std::size_t actors = 16;
    double gamma = 0.99;
    double epsilon_greedy = 0.01;
    std::uint64_t seed = 0;
    std::size_t record_every = 1000;
    bool clip_rewards = false;
    bool offset_zero_only = false;
    std::string out = default_out_dir();
};

int cmd_learn(const LearnOpts& opt) {
    agent::SarsaConfig cfg;
    cfg.n = opt.n;
    cfg.gamma = opt.gamma;
    cfg.epsilon_greedy = opt.epsilon_greedy;
    cfg.actors = opt.actors;
    cfg.total_steps = opt.steps;
    cfg.optimizer = optim::kind_from_name(opt.optimizer);
    cfg.hp.alpha = opt.alpha;
    cfg.hp.beta1 = opt.beta1;
    cfg.hp.beta2 = opt.beta2;
    cfg.hp.epsilon = opt.epsilon;
    if (opt.clip_set) cfg.hp.grad_clip_norm = opt.grad_clip;
    cfg.seed = opt.seed;
    cfg.record_every = opt.record_every;
    cfg.clip_rewards = opt.clip_rewards;
    cfg.offset_zero_only = opt.offset_zero_only;
    agent::validate(cfg);  // rejects bad hyperparameters before anything hits disk

    agent::ToyEnv probe = agent::env_from_name(opt.env, 0);  // validates the name
    agent::QFunction q0;
    if (opt.qfunction == "tabular") {
        q0 = agent::make_tabular(probe.n_states(), probe.n_actions());
    } else if (opt.qfunction == "linear") {
        q0 = agent::make_linear(agent::coordinate_features(probe), probe.n_actions());
    } else if (opt.qfunction == "mlp") {
        q0 = agent::make_mlp(agent::coordinate_features(probe), probe.n_actions(),
                             opt.hidden, opt.seed);
    } else {
        throw InvalidArg("learn: --qfunction must be tabular, linear or mlp");
    }

    fs::path out = prepare_out_dir(opt.out);
    nlohmann::json config;
    config["env"] = opt.env;
    config["qfunction"] = opt.qfunction;
    if (opt.qfunction == "mlp") config["hidden"] = opt.hidden;
    config["optimizer"] = opt.optimizer;
    config["alpha"] = opt.alpha;
    config["beta1"] = opt.beta1;
    config["beta2"] = opt.beta2;
    config["epsilon"] = opt.epsilon;
    if (opt.clip_set) config["grad_clip_norm"] = opt.grad_clip;
    config["steps"] = opt.steps;
    config["n"] = opt.n;
    config["actors"] = opt.actors;
    config["gamma"] = opt.gamma;
    config["epsilon_greedy"] = opt.epsilon_greedy;
    config["record_every"] = opt.record_every;
    config["clip_rewards"] = opt.clip_rewards;
    config["offset_zero_only"] = opt.offset_zero_only;
    write_manifest(out, "learn", opt.seed, config);

    std::string env_name = opt.env;
    agent::EnvFactory factory = [env_name](std::uint64_t s) {
        return agent::env_from_name(env_name, s);
    };
    agent::TrainResult result = agent::train(factory, q0, cfg);
    agent::save_curve(result, (out / "curve.csv").string());

    std::cout << "wrote " << (out / "curve.csv").string() << "\n";
    std::cout << "episodes = " << result.episode_returns.size() << ", env steps = "
              << result.steps << "\n";
    if (!result.curve.empty() && !std::isnan(result.curve.back().avg_return_100ep)) {
        std::cout << "final avg return (100-episode window) = "
                  << fmt17(result.curve.back().avg_return_100ep) << "\n";
    }
    if (result.diverged) {
        std::cout << "training diverged: parameters left the finite range\n";
        return kExitDiverged;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep: spec file in, records + summary + per-run curves out
// ---------------------------------------------------------------------------

int cmd_sweep(const std::string& spec_path, const std::string& out_dir) {
    sweep::SweepSpec spec = sweep::spec_from_json(read_file(spec_path));

    fs::path out = prepare_out_dir(out_dir);
    fs::path curves = out / "curves";
    std::error_code ec;
    fs::create_directories(curves, ec);
    if (ec) throw IoError("cannot create '" + curves.string() + "': " + ec.message());

    // the manifest records the *resolved* spec: notation applied, ranges final
    write_manifest(out, "sweep", spec.seed, nlohmann::json::parse(sweep::spec_to_json(spec)));

    std::size_t runs = 0;
    sweep::SweepOutcome outcome = sweep::run_sweep(
        spec, [&](const sweep::SampledConfig& cfg, const agent::TrainResult& result) {
            std::string name = "run_" + optim::kind_name(cfg.kind) + "_" +
                               std::to_string(cfg.seed) + ".csv";
            agent::save_curve(result, (curves / name).string());
            ++runs;
        });
    write_file(out / "records.csv", sweep::records_csv(outcome.records));
    write_file(out / "summary.json", outcome.summary + "\n");

    std::size_t diverged = 0;
    for (const sweep::SweepRecord& r : outcome.records) {
        if (r.diverged) ++diverged;
    }
    std::cout << "completed " << runs << " runs (" << diverged << " diverged)\n";
    std::cout << "wrote " << (out / "records.csv").string() << ", "
              << (out / "summary.json").string() << ", " << runs << " curve files\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// stats: re-run the analysis pipeline over an existing records file
// ---------------------------------------------------------------------------

struct StatsOpts {
    std::string records_path;
    double top_q = 0.25;
    std::vector<std::string> pairs;
    std::uint64_t seed = 0;
    std::string out = default_out_dir();
};

int cmd_stats(const StatsOpts& opt) {
    if (!(opt.top_q > 0.0 && opt.top_q <= 1.0)) {
        throw InvalidArg("stats: --top-percentile must lie in (0,1]");
    }
    // each --pairs entry is "kindA,kindB"; validate names up front
    std::vector<std::pair<std::string, std::string>> pairs;
    for (const std::string& raw : opt.pairs) {
        std::size_t comma = raw.find(',');
        if (comma == std::string::npos || raw.find(',', comma + 1) != std::string::npos) {
            throw InvalidArg("stats: --pairs entries look like kindA,kindB; got '" + raw + "'");
        }
        std::string a = raw.substr(0, comma);
        std::string b = raw.substr(comma + 1);
        optim::kind_from_name(a);
        optim::kind_from_name(b);
        pairs.emplace_back(a, b);
    }

    std::vector<sweep::SweepRecord> records = sweep::records_from_csv(read_file(opt.records_path));

    fs::path out = prepare_out_dir(opt.out);
    nlohmann::json config;
    config["records"] = opt.records_path;
    config["top_percentile"] = opt.top_q;
    config["pairs"] = opt.pairs;
    write_manifest(out, "stats", opt.seed, config);

    std::string summary = sweep::summary_json(records, opt.top_q, opt.seed);
    if (!pairs.empty()) {
        nlohmann::json j = nlohmann::json::parse(summary);
        nlohmann::json kept = nlohmann::json::array();
        for (const auto& entry : j["welch_tests"]) {
            std::string a = entry["kind_a"].get<std::string>();
            std::string b = entry["kind_b"].get<std::string>();
            bool wanted = false;
            for (const auto& [pa, pb] : pairs) {
                if ((pa == a && pb == b) || (pa == b && pb == a)) wanted = true;
            }
            if (wanted) kept.push_back(entry);
        }
        j["welch_tests"] = kept;
        summary = j.dump(2);
    }
    write_file(out / "summary.json", summary + "\n");

    // echo the pairwise outcomes; files carry the full detail
    nlohmann::json j = nlohmann::json::parse(summary);
    for (const auto& entry : j["welch_tests"]) {
        std::cout << entry["scope"].get<std::string>() << " "
                  << entry["kind_a"].get<std::string>() << " vs "
                  << entry["kind_b"].get<std::string>() << ": ";
        if (entry.contains("p")) {
            std::cout << "p = " << fmt17(entry["p"].get<double>()) << " ("
                      << entry["annotation"].get<std::string>() << ")\n";
        } else {
            std::cout << "skipped (" << entry["skipped"].get<std::string>() << ")\n";
        }
    }
    std::cout << "wrote " << (out / "summary.json").string() << "\n";
    return kExitOk;
}

}  // namespace

// ---------------------------------------------------------------------------
// argument wiring
// ---------------------------------------------------------------------------

int run(int argc, const char* const* argv) {
    CLI::App app{"desk-scale laboratory for diagonally preconditioned TD learning"};
    app.require_subcommand(1);

    TheoryOpts theory;
    CLI::App* ct = app.add_subcommand(
        "theory", "check the splitting inequalities over batches of random systems");
    ct->add_option("--n-states", theory.n_states, "states per random system");
    ct->add_option("--instances", theory.instances, "systems per gamma");
    ct->add_option("--gamma", theory.gammas, "discount(s), repeatable");
    ct->add_option("--variant", theory.variant, "td0 | nstep:N | lambda:L");
    ct->add_flag("--symmetric", theory.symmetric,
                 "use the symmetric generator (enables the condition-number columns)");
    ct->add_option("--branching", theory.branching, "successors per state (capped at n-states)");
    ct->add_option("--seed", theory.seed, "base seed");
    ct->add_option("--out", theory.out, "output directory");

    SolveOpts solve;
    CLI::App* cs = app.add_subcommand(
        "solve", "run the preconditioned value iteration on one system");
    cs->add_option("--mdp-file", solve.mdp_file, "JSON process file (overrides the generator)");
    cs->add_option("--n-states", solve.n_states, "generator: states");
    cs->add_option("--branching", solve.branching, "generator: successors per state");
    cs->add_flag("--symmetric", solve.symmetric, "generator: symmetric transition matrix");
    cs->add_option("--gamma", solve.gamma, "generator: discount");
    cs->add_option("--variant", solve.variant, "td0 | nstep:N | lambda:L");
    cs->add_option("--splitting", solve.splitting, "plain | jacobi");
    cs->add_option("--alpha", solve.alpha, "step size, or 'optimal' (symmetric systems only)");
    cs->add_option("--iters", solve.iters, "iteration cap");
    cs->add_option("--tol", solve.tol, "error tolerance (infinity norm)");
    cs->add_option("--seed", solve.seed, "generator seed");
    cs->add_option("--out", solve.out, "output directory");

    LearnOpts learn;
    CLI::App* cl = app.add_subcommand("learn", "train one agent and record its curve");
    cl->add_option("--env", learn.env, "gridworld | windy_chain");
    cl->add_option("--qfunction", learn.qfunction, "tabular | linear | mlp");
    cl->add_option("--hidden", learn.hidden, "mlp hidden width");
    cl->add_option("--optimizer", learn.optimizer, "tdprop | adam | sgd");
    cl->add_option("--alpha", learn.alpha, "step size");
    cl->add_option("--beta1", learn.beta1, "first-moment decay");
    cl->add_option("--beta2", learn.beta2, "second-moment decay");
    cl->add_option("--epsilon", learn.epsilon, "denominator floor");
    CLI::Option* clip_opt = cl->add_option(
        "--grad-clip", learn.grad_clip, "global-norm gradient clip (canonical value 0.5)");
    cl->add_option("--steps", learn.steps, "total environment steps");
    cl->add_option("--n", learn.n, "multi-step window length");
    cl->add_option("--actors", learn.actors, "synchronous actors");
    cl->add_option("--gamma", learn.gamma, "discount");
    cl->add_option("--epsilon-greedy", learn.epsilon_greedy, "exploration rate");
    cl->add_option("--seed", learn.seed, "training seed");
    cl->add_option("--record-every", learn.record_every, "curve sampling interval (env steps)");
    cl->add_flag("--clip-rewards", learn.clip_rewards, "clamp rewards to [-1,1]");
    cl->add_flag("--offset-zero-only", learn.offset_zero_only,
                 "batch only the window-anchor error");
    cl->add_option("--out", learn.out, "output directory");

    std::string sweep_spec;
    std::string sweep_out = default_out_dir();
    CLI::App* cw = app.add_subcommand("sweep", "random hyperparameter search plus analysis");
    cw->add_option("--spec", sweep_spec, "sweep spec JSON file")->required();
    cw->add_option("--out", sweep_out, "output directory");

    StatsOpts stats;
    CLI::App* cx = app.add_subcommand("stats", "re-analyze an existing records.csv");
    cx->add_option("--records", stats.records_path, "records.csv from a sweep")->required();
    cx->add_option("--top-percentile", stats.top_q, "top fraction by average return");
    cx->add_option("--pairs", stats.pairs, "restrict Welch tests to kindA,kindB (repeatable)");
    cx->add_option("--seed", stats.seed, "bootstrap seed");
    cx->add_option("--out", stats.out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);  // prints help or the error message
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (ct->parsed()) return cmd_theory(theory);
        if (cs->parsed()) return cmd_solve(solve);
        if (cl->parsed()) {
            learn.clip_set = clip_opt->count() > 0;
            return cmd_learn(learn);
        }
        if (cw->parsed()) return cmd_sweep(sweep_spec, sweep_out);
        if (cx->parsed()) return cmd_stats(stats);
    } catch (const Diverged& e) {
        std::cerr << "diverged: " << e.what() << "\n";
        return kExitDiverged;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;  // unreachable: require_subcommand guarantees a branch
}

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("tdlab");
    for (const std::string& a : args) argv.push_back(a.c_str());
    return run(int(argv.size()), argv.data());
}

}  // namespace tdlab::cli
