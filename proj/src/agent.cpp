#include "tdlab/agent.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "tdlab/error.hpp"

namespace tdlab::agent {

namespace {

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::size_t grid_move(const ToyEnv& env, std::size_t s, std::size_t a) {
    std::size_t x = s % env.width;
    std::size_t y = s / env.width;
    switch (a) {
        case 0: if (y > 0) --y; break;                // up
        case 1: if (y + 1 < env.height) ++y; break;   // down
        case 2: if (x > 0) --x; break;                // left
        case 3: if (x + 1 < env.width) ++x; break;    // right
        default: throw IndexOutOfRange("gridworld: action out of range");
    }
    return y * env.width + x;
}

std::size_t sample_index(Rng& rng, const Vector& probs) {
    double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    return probs.size() - 1;
}

void check_state(const ToyEnv& env, std::size_t s) {
    if (s >= env.n_states()) throw IndexOutOfRange("toy env: state out of range");
}

void check_state_action(const QFunction& q, std::size_t s, std::size_t a) {
    if (s >= q.n_states) throw IndexOutOfRange("q-function: state out of range");
    if (a >= q.n_actions) throw IndexOutOfRange("q-function: action out of range");
}

}  // namespace

// ---------------------------------------------------------------------------
// Environments
// ---------------------------------------------------------------------------

std::size_t ToyEnv::n_states() const {
    return kind == EnvKind::Gridworld ? width * height : chain_len;
}

std::size_t ToyEnv::n_actions() const { return kind == EnvKind::Gridworld ? 4 : 2; }

std::size_t ToyEnv::start_state() const {
    return kind == EnvKind::Gridworld ? 0 : chain_len / 2;
}

std::size_t ToyEnv::goal_state() const {
    return kind == EnvKind::Gridworld ? width * height - 1 : chain_len - 1;
}

std::size_t ToyEnv::reset() {
    state = start_state();
    steps_in_episode = 0;
    return_in_episode = 0.0;
    return state;
}

StepResult ToyEnv::step(std::size_t action) {
    if (action >= n_actions()) throw IndexOutOfRange("toy env: action out of range");
    if (is_terminal(*this, state)) throw InvalidArg("toy env: step from a terminal state");

    std::size_t next;
    if (kind == EnvKind::Gridworld) {
        next = grid_move(*this, state, action);
    } else {
        bool go_right = (action == 1);
        if (rng.uniform() < slip) go_right = !go_right;
        next = go_right ? state + 1 : state - 1;
    }

    StepResult out;
    out.next_state = next;
    out.reward = transition_reward(*this, state, action, next);
    out.terminal = is_terminal(*this, next);

    state = next;
    steps_in_episode += 1;
    return_in_episode += out.reward;
    out.truncated = !out.terminal && steps_in_episode >= episode_cap;
    return out;
}

ToyEnv make_gridworld(std::uint64_t seed, std::size_t width, std::size_t height,
                      double step_reward, double goal_reward, std::size_t episode_cap) {
    if (width < 1 || height < 1 || width * height < 2) {
        throw InvalidArg("gridworld: needs at least two cells");
    }
    if (episode_cap < 1) throw InvalidArg("gridworld: episode cap must be positive");
    ToyEnv env;
    env.kind = EnvKind::Gridworld;
    env.width = width;
    env.height = height;
    env.step_reward = step_reward;
    env.goal_reward = goal_reward;
    env.episode_cap = episode_cap;
    env.rng = Rng(seed);
    env.reset();
    return env;
}

ToyEnv make_windy_chain(std::uint64_t seed, std::size_t length, double slip,
                        std::size_t episode_cap) {
    if (length < 3) throw InvalidArg("windy chain: needs an interior state");
    if (!(slip >= 0.0 && slip < 1.0)) throw InvalidArg("windy chain: slip must lie in [0,1)");
    if (episode_cap < 1) throw InvalidArg("windy chain: episode cap must be positive");
    ToyEnv env;
    env.kind = EnvKind::WindyChain;
    env.chain_len = length;
    env.slip = slip;
    env.episode_cap = episode_cap;
    env.rng = Rng(seed);
    env.reset();
    return env;
}

ToyEnv env_from_name(const std::string& name, std::uint64_t seed) {
    if (name == "gridworld") return make_gridworld(seed);
    if (name == "windy_chain") return make_windy_chain(seed);
    throw InvalidArg("unknown environment '" + name + "' (gridworld, windy_chain)");
}

bool is_terminal(const ToyEnv& env, std::size_t s) {
    check_state(env, s);
    if (env.kind == EnvKind::Gridworld) return s == env.goal_state();
    return s == 0 || s == env.chain_len - 1;
}

std::vector<std::pair<std::size_t, double>> transition(const ToyEnv& env, std::size_t s,
                                                       std::size_t a) {
    check_state(env, s);
    if (a >= env.n_actions()) throw IndexOutOfRange("toy env: action out of range");
    if (is_terminal(env, s)) return {{s, 1.0}};  // absorbing in the model view
    if (env.kind == EnvKind::Gridworld) return {{grid_move(env, s, a), 1.0}};

    std::size_t intended = (a == 1) ? s + 1 : s - 1;
    std::size_t slipped = (a == 1) ? s - 1 : s + 1;
    std::vector<std::pair<std::size_t, double>> out;
    if (env.slip < 1.0) out.emplace_back(intended, 1.0 - env.slip);
    if (env.slip > 0.0) out.emplace_back(slipped, env.slip);
    return out;
}

double transition_reward(const ToyEnv& env, std::size_t s, std::size_t a, std::size_t s2) {
    check_state(env, s2);
    if (is_terminal(env, s)) return 0.0;
    (void)a;  // rewards depend on the landing state only
    if (env.kind == EnvKind::Gridworld) {
        return s2 == env.goal_state() ? env.goal_reward : env.step_reward;
    }
    return s2 == env.chain_len - 1 ? env.goal_reward : env.step_reward;
}

// ---------------------------------------------------------------------------
// Q functions
// ---------------------------------------------------------------------------

QFunction make_tabular(std::size_t n_states, std::size_t n_actions) {
    if (n_states == 0 || n_actions == 0) throw InvalidArg("tabular q: empty state/action set");
    QFunction q;
    q.kind = QKind::Tabular;
    q.n_states = n_states;
    q.n_actions = n_actions;
    q.theta.assign(n_states * n_actions, 0.0);
    return q;
}

QFunction make_linear(const Matrix& features, std::size_t n_actions) {
    if (features.rows() == 0 || features.cols() == 0) {
        throw InvalidArg("linear q: empty feature matrix");
    }
    if (n_actions == 0) throw InvalidArg("linear q: empty action set");
    if (!features.all_finite()) throw NonFiniteInput("linear q: features");
    QFunction q;
    q.kind = QKind::Linear;
    q.n_states = features.rows();
    q.n_actions = n_actions;
    q.features = features;
    q.theta.assign(n_actions * features.cols(), 0.0);
    return q;
}

QFunction make_mlp(const Matrix& features, std::size_t n_actions, std::size_t hidden_dim,
                   std::uint64_t seed) {
    if (features.rows() == 0 || features.cols() == 0) {
        throw InvalidArg("mlp q: empty feature matrix");
    }
    if (n_actions == 0 || hidden_dim == 0) throw InvalidArg("mlp q: empty layer");
    if (!features.all_finite()) throw NonFiniteInput("mlp q: features");
    QFunction q;
    q.kind = QKind::Mlp;
    q.n_states = features.rows();
    q.n_actions = n_actions;
    q.features = features;
    q.hidden_dim = hidden_dim;

    // theta layout: [W1 (hidden x input, row-major), b1, W2 (action x hidden,
    // row-major), b2]; weights uniform in +-1/sqrt(fan_in), biases zero.
    std::size_t d = features.cols();
    q.theta.assign(hidden_dim * d + hidden_dim + n_actions * hidden_dim + n_actions, 0.0);
    Rng rng(seed);
    double w1_scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::size_t i = 0; i < hidden_dim * d; ++i) {
        q.theta[i] = rng.uniform(-w1_scale, w1_scale);
    }
    double w2_scale = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    std::size_t w2_off = hidden_dim * d + hidden_dim;
    for (std::size_t i = 0; i < n_actions * hidden_dim; ++i) {
        q.theta[w2_off + i] = rng.uniform(-w2_scale, w2_scale);
    }
    return q;
}

Matrix coordinate_features(const ToyEnv& env) {
    std::size_t n = env.n_states();
    if (env.kind == EnvKind::Gridworld) {
        Matrix f(n, 3);
        for (std::size_t s = 0; s < n; ++s) {
            f(s, 0) = env.width > 1 ? double(s % env.width) / double(env.width - 1) : 0.0;
            f(s, 1) = env.height > 1 ? double(s / env.width) / double(env.height - 1) : 0.0;
            f(s, 2) = 1.0;
        }
        return f;
    }
    Matrix f(n, 2);
    for (std::size_t s = 0; s < n; ++s) {
        f(s, 0) = double(s) / double(env.chain_len - 1);
        f(s, 1) = 1.0;
    }
    return f;
}

Matrix one_hot_features(std::size_t n_states) {
    return Matrix::identity(n_states);
}

double q_value(const QFunction& q, std::size_t s, std::size_t a) {
    check_state_action(q, s, a);
    switch (q.kind) {
        case QKind::Tabular:
            return q.theta[s * q.n_actions + a];
        case QKind::Linear: {
            double v = 0.0;
            std::size_t off = a * q.input_dim();
            for (std::size_t d = 0; d < q.input_dim(); ++d) {
                v += q.theta[off + d] * q.features(s, d);
            }
            return v;
        }
        case QKind::Mlp:
            return mlp_value_and_grad(q, s, a).first;
    }
    throw InvalidArg("q_value: unknown q-function kind");
}

Vector q_values(const QFunction& q, std::size_t s) {
    Vector out(q.n_actions);
    for (std::size_t a = 0; a < q.n_actions; ++a) out[a] = q_value(q, s, a);
    return out;
}

std::pair<double, Vector> mlp_value_and_grad(const QFunction& q, std::size_t s, std::size_t a) {
    if (q.kind != QKind::Mlp) throw InvalidArg("mlp_value_and_grad: not an mlp q-function");
    check_state_action(q, s, a);
    std::size_t d = q.input_dim();
    std::size_t h = q.hidden_dim;
    std::size_t w1_off = 0, b1_off = h * d, w2_off = h * d + h, b2_off = h * d + h + q.n_actions * h;

    // forward
    Vector hid(h);
    for (std::size_t j = 0; j < h; ++j) {
        double pre = q.theta[b1_off + j];
        for (std::size_t i = 0; i < d; ++i) pre += q.theta[w1_off + j * d + i] * q.features(s, i);
        hid[j] = std::tanh(pre);
    }
    double value = q.theta[b2_off + a];
    for (std::size_t j = 0; j < h; ++j) value += q.theta[w2_off + a * h + j] * hid[j];

    // reverse pass: only action a's head carries signal
    Vector grad(q.theta.size(), 0.0);
    grad[b2_off + a] = 1.0;
    for (std::size_t j = 0; j < h; ++j) {
        grad[w2_off + a * h + j] = hid[j];
        double dpre = q.theta[w2_off + a * h + j] * (1.0 - hid[j] * hid[j]);
        grad[b1_off + j] = dpre;
        for (std::size_t i = 0; i < d; ++i) grad[w1_off + j * d + i] = dpre * q.features(s, i);
    }
    return {value, std::move(grad)};
}

std::pair<double, Vector> value_and_grad(const QFunction& q, std::size_t s, std::size_t a) {
    check_state_action(q, s, a);
    switch (q.kind) {
        case QKind::Tabular: {
            Vector grad(q.theta.size(), 0.0);
            grad[s * q.n_actions + a] = 1.0;
            return {q.theta[s * q.n_actions + a], std::move(grad)};
        }
        case QKind::Linear: {
            Vector grad(q.theta.size(), 0.0);
            std::size_t off = a * q.input_dim();
            double v = 0.0;
            for (std::size_t i = 0; i < q.input_dim(); ++i) {
                grad[off + i] = q.features(s, i);
                v += q.theta[off + i] * q.features(s, i);
            }
            return {v, std::move(grad)};
        }
        case QKind::Mlp:
            return mlp_value_and_grad(q, s, a);
    }
    throw InvalidArg("value_and_grad: unknown q-function kind");
}

Matrix q_table(const QFunction& q) {
    Matrix t(q.n_states, q.n_actions);
    for (std::size_t s = 0; s < q.n_states; ++s)
        for (std::size_t a = 0; a < q.n_actions; ++a) t(s, a) = q_value(q, s, a);
    return t;
}

// ---------------------------------------------------------------------------
// Policy and evaluation oracle
// ---------------------------------------------------------------------------

Vector policy_probs(const QFunction& q, std::size_t s, double epsilon) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
        throw InvalidArg("policy_probs: epsilon must lie in [0,1]");
    }
    Vector qv = q_values(q, s);
    std::size_t best = 0;
    for (std::size_t a = 1; a < qv.size(); ++a) {
        if (qv[a] > qv[best]) best = a;  // strict: ties keep the lowest index
    }
    Vector probs(qv.size(), epsilon / double(qv.size()));
    probs[best] += 1.0 - epsilon;
    return probs;
}

double expected_q(const QFunction& q, std::size_t s, double epsilon) {
    return dot(policy_probs(q, s, epsilon), q_values(q, s));
}

std::pair<double, Vector> expected_q_and_grad(const QFunction& q, std::size_t s, double epsilon) {
    Vector probs = policy_probs(q, s, epsilon);
    double value = 0.0;
    Vector grad(q.theta.size(), 0.0);
    for (std::size_t a = 0; a < q.n_actions; ++a) {
        if (probs[a] == 0.0) continue;
        auto [v, g] = value_and_grad(q, s, a);
        value += probs[a] * v;
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += probs[a] * g[i];
    }
    return {value, std::move(grad)};
}

Matrix policy_matrix(const QFunction& q, double epsilon) {
    Matrix pi(q.n_states, q.n_actions);
    for (std::size_t s = 0; s < q.n_states; ++s) {
        Vector probs = policy_probs(q, s, epsilon);
        for (std::size_t a = 0; a < q.n_actions; ++a) pi(s, a) = probs[a];
    }
    return pi;
}

PolicyEval evaluate_policy(const ToyEnv& env, const Matrix& pi, double gamma) {
    std::size_t n = env.n_states();
    std::size_t n_act = env.n_actions();
    if (pi.rows() != n || pi.cols() != n_act) throw DimMismatch("evaluate_policy: policy shape");
    if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArg("evaluate_policy: gamma must lie in (0,1)");
    for (std::size_t s = 0; s < n; ++s) {
        double row = 0.0;
        for (std::size_t a = 0; a < n_act; ++a) row += pi(s, a);
        if (std::abs(row - 1.0) > 1e-9) throw InvalidArg("evaluate_policy: policy rows must sum to 1");
    }

    // induced Markov reward process; terminal states absorb with zero reward
    Matrix p(n, n);
    Vector r(n, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t a = 0; a < n_act; ++a) {
            for (const auto& [s2, prob] : transition(env, s, a)) {
                p(s, s2) += pi(s, a) * prob;
                r[s] += pi(s, a) * prob * transition_reward(env, s, a, s2);
            }
        }
    }

    PolicyEval out;
    out.v = linalg::solve_linear(linalg::Matrix::identity(n) - gamma * p, r);
    out.q = Matrix(n, n_act);
    for (std::size_t s = 0; s < n; ++s) {
        if (is_terminal(env, s)) continue;  // q row stays zero
        for (std::size_t a = 0; a < n_act; ++a) {
            double qa = 0.0;
            for (const auto& [s2, prob] : transition(env, s, a)) {
                qa += prob * (transition_reward(env, s, a, s2) + gamma * out.v[s2]);
            }
            out.q(s, a) = qa;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// n-step Expected SARSA
// ---------------------------------------------------------------------------

void validate(const SarsaConfig& cfg) {
    if (cfg.n < 1) throw InvalidArg("sarsa config: n must be at least 1");
    if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0)) {
        throw InvalidArg("sarsa config: gamma must lie in (0,1)");
    }
    if (!(cfg.epsilon_greedy >= 0.0 && cfg.epsilon_greedy <= 1.0)) {
        throw InvalidArg("sarsa config: epsilon_greedy must lie in [0,1]");
    }
    if (cfg.actors < 1) throw InvalidArg("sarsa config: needs at least one actor");
    if (cfg.total_steps < 1) throw InvalidArg("sarsa config: total_steps must be positive");
    if (cfg.record_every < 1) throw InvalidArg("sarsa config: record_every must be positive");
    optim::validate(cfg.hp);
}

Rollout rollout_and_errors(ToyEnv& env, const QFunction& q, const SarsaConfig& cfg) {
    if (env.n_states() != q.n_states || env.n_actions() != q.n_actions) {
        throw DimMismatch("rollout: q-function does not match the environment");
    }
    if (is_terminal(env, env.state)) env.reset();

    Rollout out;
    std::vector<double> rewards;
    Vector values;
    std::vector<Vector> grads;
    bool ended_terminal = false;
    std::size_t final_state = env.state;

    for (std::size_t k = 0; k < cfg.n; ++k) {
        std::size_t s = env.state;
        std::size_t a = sample_index(env.rng, policy_probs(q, s, cfg.epsilon_greedy));
        auto [v, g] = value_and_grad(q, s, a);
        StepResult sr = env.step(a);
        double reward = sr.reward;
        if (cfg.clip_rewards) reward = std::clamp(reward, -1.0, 1.0);

        rewards.push_back(reward);
        values.push_back(v);
        grads.push_back(std::move(g));
        out.steps += 1;
        final_state = sr.next_state;

        if (sr.terminal || sr.truncated) {
            ended_terminal = sr.terminal;
            out.finished_returns.push_back(env.return_in_episode);
            env.reset();
            break;
        }
    }

    std::size_t m = rewards.size();
    double boot_value = 0.0;
    Vector boot_grad(q.theta.size(), 0.0);
    if (!ended_terminal) {
        auto [bv, bg] = expected_q_and_grad(q, final_state, cfg.epsilon_greedy);
        boot_value = bv;
        boot_grad = std::move(bg);
    }

    std::size_t offsets = cfg.offset_zero_only ? 1 : m;
    for (std::size_t i = 0; i < offsets; ++i) {
        returns::TrajectorySegment seg;
        seg.n = m - i;
        seg.gamma = cfg.gamma;
        seg.lambda = 1.0;
        seg.bootstrap_terminal = ended_terminal;
        seg.rewards.assign(rewards.begin() + i, rewards.end());
        seg.values.assign(values.begin() + i, values.end());
        seg.values.push_back(boot_value);
        seg.value_grads.assign(grads.begin() + i, grads.end());
        seg.value_grads.push_back(boot_grad);
        out.segments.push_back(std::move(seg));
    }
    return out;
}

namespace {

void require_finite_params(const Vector& theta) {
    for (double t : theta) {
        if (!std::isfinite(t)) throw NonFiniteParameters("training: parameters left the reals");
    }
}

CurvePoint curve_point(std::size_t step, const std::vector<double>& episode_returns,
                       const QFunction& q, const optim::OptimizerState& opt) {
    CurvePoint pt;
    pt.step = step;
    pt.episodes_completed = episode_returns.size();
    if (episode_returns.empty()) {
        pt.avg_return_100ep = std::nan("");
    } else {
        std::size_t window = std::min<std::size_t>(100, episode_returns.size());
        double sum = std::accumulate(episode_returns.end() - window, episode_returns.end(), 0.0);
        pt.avg_return_100ep = sum / double(window);
    }
    // scaled 2-norm: survives entries near the overflow edge of a run that is
    // about to be marked diverged
    double scale = 0.0;
    for (double t : q.theta) scale = std::max(scale, std::abs(t));
    if (scale == 0.0) {
        pt.param_norm = 0.0;
    } else {
        double acc = 0.0;
        for (double t : q.theta) acc += (t / scale) * (t / scale);
        pt.param_norm = scale * std::sqrt(acc);
    }
    if (opt.z.empty()) {
        pt.z_min = std::nan("");
        pt.z_max = std::nan("");
    } else {
        pt.z_min = *std::min_element(opt.z.begin(), opt.z.end());
        pt.z_max = *std::max_element(opt.z.begin(), opt.z.end());
    }
    return pt;
}

}  // namespace

TrainResult train(const EnvFactory& make_env, const QFunction& q0, const SarsaConfig& cfg) {
    validate(cfg);
    TrainResult result;
    result.q = q0;
    result.opt = optim::make_optimizer(cfg.optimizer, q0.theta.size(), cfg.hp);

    Rng seeder(cfg.seed);
    std::vector<ToyEnv> envs;
    envs.reserve(cfg.actors);
    for (std::size_t i = 0; i < cfg.actors; ++i) {
        envs.push_back(make_env(seeder.next_u64()));
        envs.back().reset();
    }

    std::size_t next_record = 0;
    while (result.steps < cfg.total_steps) {
        Vector grad_term(result.q.theta.size(), 0.0);
        Vector stat(result.q.theta.size(), 0.0);
        std::size_t n_segments = 0;

        for (ToyEnv& env : envs) {
            Rollout ro = rollout_and_errors(env, result.q, cfg);
            result.steps += ro.steps;
            for (double ret : ro.finished_returns) result.episode_returns.push_back(ret);
            for (const auto& seg : ro.segments) {
                double delta = returns::multi_step_error(seg);
                Vector zi = returns::tdprop_statistic(seg);
                const Vector& g0 = seg.value_grads[0];
                for (std::size_t i = 0; i < grad_term.size(); ++i) {
                    grad_term[i] += delta * g0[i];
                    stat[i] += zi[i];
                }
                n_segments += 1;
            }
        }

        for (std::size_t i = 0; i < grad_term.size(); ++i) {
            grad_term[i] /= double(n_segments);
            stat[i] /= double(n_segments);
        }

        try {
            Vector next = optim::update(result.opt, result.q.theta, grad_term, stat);
            require_finite_params(next);
            result.q.theta = std::move(next);
        } catch (const NonFiniteParameters&) {
            result.diverged = true;
            break;
        } catch (const NonFiniteInput&) {
            result.diverged = true;
            break;
        }

        if (result.steps >= next_record) {
            result.curve.push_back(
                curve_point(result.steps, result.episode_returns, result.q, result.opt));
            next_record += cfg.record_every;
        }
    }

    // closing row so the curve always reflects the final (last finite) state
    if (result.curve.empty() || result.curve.back().step != result.steps) {
        result.curve.push_back(
            curve_point(result.steps, result.episode_returns, result.q, result.opt));
    }
    return result;
}

std::string curve_csv(const TrainResult& result) {
    std::string out = "step,episodes_completed,avg_return_100ep,param_norm,z_min,z_max\n";
    auto cell = [](double x) { return std::isnan(x) ? std::string() : fmt17(x); };
    for (const CurvePoint& pt : result.curve) {
        out += std::to_string(pt.step) + "," + std::to_string(pt.episodes_completed) + "," +
               cell(pt.avg_return_100ep) + "," + fmt17(pt.param_norm) + "," + cell(pt.z_min) +
               "," + cell(pt.z_max) + "\n";
    }
    return out;
}

void save_curve(const TrainResult& result, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << curve_csv(result);
    if (!f.good()) throw IoError("write failed for '" + path + "'");
}

}  // namespace tdlab::agent
