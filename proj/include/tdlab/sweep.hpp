#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tdlab/agent.hpp"
#include "tdlab/optim.hpp"

namespace tdlab::sweep {

using linalg::Matrix;

struct Range {
    double lo = 0.0;
    double hi = 1.0;
};

// Random-search specification. Sampling ranges default to the published
// table read literally ("10e-8" means 1e-7); literal_notation = false
// switches to the power-of-ten reading (1e-8), and explicit overrides win
// over both.
struct SweepSpec {
    std::vector<optim::OptimizerKind> kinds = {
        optim::OptimizerKind::Tdprop, optim::OptimizerKind::Adam, optim::OptimizerKind::Sgd};
    std::size_t samples_per_kind = 50;
    std::uint64_t seed = 0;
    std::string env = "gridworld";
    std::string qfunction = "tabular";  // tabular | linear | mlp
    std::size_t mlp_hidden = 16;
    agent::SarsaConfig base;  // optimizer fields and seed overwritten per run
    bool literal_notation = true;
    std::optional<Range> lr_tdprop, lr_adam, lr_sgd;
    std::optional<Range> beta2_range, epsilon_range;
};

Range resolved_lr_range(const SweepSpec& spec, optim::OptimizerKind kind);
Range resolved_beta2_range(const SweepSpec& spec);
Range resolved_epsilon_range(const SweepSpec& spec);
void validate(const SweepSpec& spec);

// JSON round-trip for the spec file consumed by the command-line driver.
SweepSpec spec_from_json(const std::string& text);
std::string spec_to_json(const SweepSpec& spec);

struct SampledConfig {
    optim::OptimizerKind kind = optim::OptimizerKind::Sgd;
    double lr = 0.0;
    double beta2 = 0.0;
    double epsilon = 0.0;
    std::uint64_t seed = 0;  // per-run training seed
};

// Uniform i.i.d. draws on the literal ranges (no log transform), one block
// per optimizer kind, deterministic per seed.
std::vector<SampledConfig> sample_configs(const SweepSpec& spec, std::uint64_t seed);

struct SweepRecord {
    optim::OptimizerKind kind = optim::OptimizerKind::Sgd;
    double lr = 0.0;
    double beta2 = 0.0;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
    double avg_return = 0.0;         // mean over every completed episode
    double asymptotic_return = 0.0;  // mean over the final 100-episode window
    bool diverged = false;
};

// CSV with header "kind,lr,beta2,epsilon,seed,avg_return,asymptotic_return,diverged".
std::string records_csv(const std::vector<SweepRecord>& records);
std::vector<SweepRecord> records_from_csv(const std::string& text);

// Divides both metrics by their per-group maximum (the group is one
// environment, spanning every optimizer kind). A non-positive maximum turns
// normalization off: records come back untouched with applied = false.
struct NormalizeResult {
    std::vector<SweepRecord> records;
    bool applied = false;
    double max_avg_return = 0.0;
    double max_asymptotic_return = 0.0;
};
NormalizeResult normalize_returns(const std::vector<SweepRecord>& records);

// Records whose avg_return reaches the (1-q) linear-interpolation quantile;
// threshold ties are included.
std::vector<SweepRecord> top_percentile(const std::vector<SweepRecord>& records, double q = 0.25);

// Linear-interpolation empirical quantile (the same definition throughout).
double quantile(Vector sample, double prob);

// Regularized incomplete beta I_x(a, b), evaluated by the continued-fraction
// expansion (modified Lentz) with the symmetry switch at x = (a+1)/(a+b+2);
// accurate to ~1e-10 over the t-distribution arguments used here.
double regularized_incomplete_beta(double a, double b, double x);

struct WelchResult {
    double t = 0.0;
    double dof = 0.0;
    double p = 1.0;  // two-sided
};

// Welch's unequal-variance t-test with Welch-Satterthwaite degrees of
// freedom. Two zero-variance samples with equal means fall back to the
// p = 1 convention; with unequal means the statistic is undefined and
// DegenerateSample is thrown, as it is for samples smaller than 2.
WelchResult welch_t_test(const Vector& sample_a, const Vector& sample_b);

// Caption legend buckets: **** p<=1e-4, *** p<=1e-3, ** p<=0.01, * p<=0.05,
// ns otherwise.
std::string p_annotation(double p);

struct BootstrapCi {
    double lo = 0.0;
    double hi = 0.0;
    double point = 0.0;  // sample mean
};

// Percentile-method bootstrap CI of the mean from B resamples with
// replacement; deterministic per seed.
BootstrapCi bootstrap_ci(const Vector& sample, std::size_t b = 10000, double level = 0.95,
                         std::uint64_t seed = 0);

struct OlsResult {
    std::vector<std::string> terms;  // "(intercept)" first, aligned with coefficients
    Vector coefficients;
    Vector std_errors;
    double r_squared = 0.0;
    double adj_r_squared = 0.0;
    double f_statistic = 0.0;
};

// Ordinary least squares with an implicit intercept. standardize applies
// (x-mean)/sd per column first; interactions append pairwise products of
// the (possibly standardized) base columns without re-standardizing them.
// Throws SingularDesign on collinear or constant columns.
OlsResult ols_regression(const Matrix& covariates, const std::vector<std::string>& names,
                         const Vector& response, bool standardize, bool interactions);

// Per-kind regression of avg_return on (lr, beta2, epsilon).
OlsResult regression_for_kind(const std::vector<SweepRecord>& records,
                              optim::OptimizerKind kind, bool standardize = true,
                              bool interactions = true);

// Full analysis stage: normalization, per-kind means with bootstrap CIs
// (all samples and top-25%), pairwise Welch tests, per-kind regressions.
std::string summary_json(const std::vector<SweepRecord>& records, double top_q = 0.25,
                         std::uint64_t seed = 0);

// Trains every sampled config (divergences recorded, never fatal), sorts
// records deterministically, and runs the analysis stage. on_run, when set,
// observes each finished training run (the hook the CLI uses to write
// per-run learning curves).
struct SweepOutcome {
    std::vector<SweepRecord> records;
    std::string summary;  // JSON text
};
using RunObserver = std::function<void(const SampledConfig&, const agent::TrainResult&)>;
SweepOutcome run_sweep(const SweepSpec& spec, const RunObserver& on_run = nullptr);

}  // namespace tdlab::sweep
