#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "tdlab/linalg.hpp"
#include "tdlab/optim.hpp"
#include "tdlab/returns.hpp"
#include "tdlab/rng.hpp"

namespace tdlab::agent {

using linalg::Matrix;

// ---------------------------------------------------------------------------
// Toy control environments. Both are small enough that the exact transition
// model stays available for policy-evaluation oracles.
// ---------------------------------------------------------------------------

enum class EnvKind { Gridworld, WindyChain };

struct StepResult {
    std::size_t next_state = 0;
    double reward = 0.0;
    bool terminal = false;   // absorbed; bootstrap value is zero
    bool truncated = false;  // length cap hit; bootstrap continues
};

// Gridworld: w x h cells, actions {up, down, left, right}, off-grid moves
// stay in place. Start at cell 0, goal at cell w*h-1; entering the goal pays
// goal_reward, every other transition pays step_reward.
//
// Windy chain: `length` states with terminal cells at both ends, actions
// {left, right}; with probability `slip` the move is reversed. Start in the
// middle. Entering the right terminal pays goal_reward, everything else pays
// step_reward.
struct ToyEnv {
    EnvKind kind = EnvKind::Gridworld;
    std::size_t width = 5;
    std::size_t height = 5;
    std::size_t chain_len = 19;
    double slip = 0.1;
    double step_reward = -0.01;
    double goal_reward = 1.0;
    std::size_t episode_cap = 500;
    Rng rng{0};

    // episode bookkeeping
    std::size_t state = 0;
    std::size_t steps_in_episode = 0;
    double return_in_episode = 0.0;

    std::size_t n_states() const;
    std::size_t n_actions() const;
    std::size_t start_state() const;
    std::size_t goal_state() const;

    std::size_t reset();
    StepResult step(std::size_t action);
};

ToyEnv make_gridworld(std::uint64_t seed, std::size_t width = 5, std::size_t height = 5,
                      double step_reward = -0.01, double goal_reward = 1.0,
                      std::size_t episode_cap = 500);
ToyEnv make_windy_chain(std::uint64_t seed, std::size_t length = 19, double slip = 0.1,
                        std::size_t episode_cap = 500);
ToyEnv env_from_name(const std::string& name, std::uint64_t seed);

bool is_terminal(const ToyEnv& env, std::size_t s);

// Exact model views (next-state distribution and per-transition reward),
// the basis of every oracle below.
std::vector<std::pair<std::size_t, double>> transition(const ToyEnv& env, std::size_t s,
                                                       std::size_t a);
double transition_reward(const ToyEnv& env, std::size_t s, std::size_t a, std::size_t s2);

// ---------------------------------------------------------------------------
// Action-value functions over a flat parameter vector.
// ---------------------------------------------------------------------------

enum class QKind { Tabular, Linear, Mlp };

struct QFunction {
    QKind kind = QKind::Tabular;
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    Matrix features;             // n_states x input_dim; empty for tabular
    std::size_t hidden_dim = 0;  // mlp only
    Vector theta;

    std::size_t input_dim() const { return features.cols(); }
};

QFunction make_tabular(std::size_t n_states, std::size_t n_actions);
QFunction make_linear(const Matrix& features, std::size_t n_actions);
// One tanh hidden layer with a per-action linear head; weights drawn
// uniform in +-1/sqrt(fan_in), biases zero.
QFunction make_mlp(const Matrix& features, std::size_t n_actions, std::size_t hidden_dim,
                   std::uint64_t seed);

// Normalized cell coordinates plus a constant column.
Matrix coordinate_features(const ToyEnv& env);
Matrix one_hot_features(std::size_t n_states);

double q_value(const QFunction& q, std::size_t s, std::size_t a);
Vector q_values(const QFunction& q, std::size_t s);

// Value and exact reverse-mode gradient with respect to theta.
std::pair<double, Vector> value_and_grad(const QFunction& q, std::size_t s, std::size_t a);
std::pair<double, Vector> mlp_value_and_grad(const QFunction& q, std::size_t s, std::size_t a);

// Full table of q(s, a), for oracle comparisons.
Matrix q_table(const QFunction& q);

// ---------------------------------------------------------------------------
// Epsilon-greedy policy and its evaluation oracle.
// ---------------------------------------------------------------------------

// pi(a|s) = eps/|A| + (1-eps) at the argmax; ties go to the lowest index.
Vector policy_probs(const QFunction& q, std::size_t s, double epsilon);

double expected_q(const QFunction& q, std::size_t s, double epsilon);
// The policy is treated as fixed: the gradient is the pi-weighted sum of the
// per-action gradients.
std::pair<double, Vector> expected_q_and_grad(const QFunction& q, std::size_t s, double epsilon);

Matrix policy_matrix(const QFunction& q, double epsilon);

// Exact v^pi and q^pi of the induced Markov reward process (terminal states
// are absorbing with zero reward, so their values vanish).
struct PolicyEval {
    Vector v;  // per state
    Matrix q;  // n_states x n_actions
};
PolicyEval evaluate_policy(const ToyEnv& env, const Matrix& pi, double gamma);

// ---------------------------------------------------------------------------
// Synchronous n-step Expected SARSA.
// ---------------------------------------------------------------------------

struct SarsaConfig {
    std::size_t n = 5;
    double gamma = 0.99;
    double epsilon_greedy = 0.01;
    std::size_t actors = 16;
    std::size_t total_steps = 0;
    optim::OptimizerKind optimizer = optim::OptimizerKind::Sgd;
    optim::Hyperparams hp;
    std::uint64_t seed = 0;
    std::size_t record_every = 1000;  // curve sampling interval, in env steps
    bool clip_rewards = false;        // clamp per-step rewards to [-1, 1]
    bool offset_zero_only = false;    // keep only the window-anchor error
};

void validate(const SarsaConfig& cfg);

// One n-step window from the env's current position. Stops early at episode
// end (resetting the env); emits one control segment per offset i, covering
// the remaining horizon with lambda = 1, anchored at the taken action's
// q-value and bootstrapped with expected_q at the window end.
struct Rollout {
    std::vector<returns::TrajectorySegment> segments;
    std::size_t steps = 0;
    std::vector<double> finished_returns;  // completed-episode returns
};
Rollout rollout_and_errors(ToyEnv& env, const QFunction& q, const SarsaConfig& cfg);

struct CurvePoint {
    std::size_t step = 0;
    std::size_t episodes_completed = 0;
    double avg_return_100ep = 0.0;  // NaN until the first episode completes
    double param_norm = 0.0;
    double z_min = 0.0;  // NaN for sgd (no second moment)
    double z_max = 0.0;
};

struct TrainResult {
    std::vector<CurvePoint> curve;
    std::vector<double> episode_returns;  // every completed episode, in order
    bool diverged = false;
    std::size_t steps = 0;
    QFunction q;
    optim::OptimizerState opt;
};

using EnvFactory = std::function<ToyEnv(std::uint64_t seed)>;

// Sequential reference implementation of the synchronous scheme: each actor
// contributes one window per round, all stored errors are averaged into a
// single optimizer update. Deterministic given (cfg.seed, cfg). Non-finite
// parameters mark the run diverged instead of crashing.
TrainResult train(const EnvFactory& make_env, const QFunction& q0, const SarsaConfig& cfg);

// CSV with header "step,episodes_completed,avg_return_100ep,param_norm,z_min,z_max".
std::string curve_csv(const TrainResult& result);
void save_curve(const TrainResult& result, const std::string& path);

}  // namespace tdlab::agent
