#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "tdlab/agent.hpp"
#include "tdlab/rng.hpp"

using namespace tdlab;
using namespace tdlab::agent;

namespace {

QFunction tabular_with(std::size_t n_states, std::size_t n_actions, const Vector& theta) {
    QFunction q = make_tabular(n_states, n_actions);
    q.theta = theta;
    return q;
}

double max_abs_diff(const linalg::Matrix& a, const linalg::Matrix& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
    return m;
}

}  // namespace

TEST_SUITE("agent") {

TEST_CASE("gridworld: geometry, rewards, termination, cap") {
    ToyEnv env = make_gridworld(1, 3, 2);  // states 0..5, goal 5
    CHECK(env.n_states() == 6);
    CHECK(env.n_actions() == 4);
    CHECK(env.start_state() == 0);
    CHECK(env.goal_state() == 5);
    CHECK_FALSE(is_terminal(env, 0));
    CHECK(is_terminal(env, 5));

    // off-grid moves stay in place
    env.reset();
    StepResult up = env.step(0);
    CHECK(up.next_state == 0);
    CHECK(up.reward == -0.01);
    CHECK_FALSE(up.terminal);

    // right, right, down reaches the goal with the goal payout
    env.reset();
    CHECK(env.step(3).next_state == 1);
    CHECK(env.step(3).next_state == 2);
    StepResult fin = env.step(1);
    CHECK(fin.next_state == 5);
    CHECK(fin.reward == 1.0);
    CHECK(fin.terminal);
    CHECK(env.return_in_episode == doctest::Approx(0.98).epsilon(1e-15));
    CHECK_THROWS_AS(env.step(0), InvalidArg);

    // episode cap truncates without terminating
    ToyEnv capped = make_gridworld(1, 3, 2, -0.01, 1.0, 3);
    capped.reset();
    CHECK_FALSE(capped.step(0).truncated);
    CHECK_FALSE(capped.step(0).truncated);
    StepResult third = capped.step(0);
    CHECK(third.truncated);
    CHECK_FALSE(third.terminal);
}

TEST_CASE("windy chain: slip dynamics match the declared model") {
    ToyEnv env = make_windy_chain(42, 9, 0.3);
    CHECK(env.n_states() == 9);
    CHECK(env.n_actions() == 2);
    CHECK(env.start_state() == 4);
    CHECK(is_terminal(env, 0));
    CHECK(is_terminal(env, 8));

    auto probs = transition(env, 4, 1);
    REQUIRE(probs.size() == 2);
    CHECK(probs[0].first == 5);
    CHECK(probs[0].second == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(probs[1].first == 3);
    CHECK(probs[1].second == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(transition_reward(env, 7, 1, 8) == 1.0);
    CHECK(transition_reward(env, 4, 1, 5) == -0.01);

    // empirical slip frequency within 3 sigma of the model
    const int trials = 20000;
    int went_right = 0;
    for (int i = 0; i < trials; ++i) {
        env.reset();
        if (env.step(1).next_state == 5) ++went_right;
    }
    double p_hat = double(went_right) / trials;
    double sigma = std::sqrt(0.7 * 0.3 / trials);
    CHECK(std::abs(p_hat - 0.7) <= 3.0 * sigma);

    // slip = 0 collapses to a single deterministic branch
    ToyEnv det = make_windy_chain(1, 5, 0.0);
    CHECK(transition(det, 2, 1).size() == 1);
}

TEST_CASE("policy_probs: fixtures and invariants") {
    QFunction q = tabular_with(1, 4, {1.0, 2.0, 3.0, 4.0});

    Vector uniform = policy_probs(q, 0, 1.0);
    for (double p : uniform) CHECK(p == doctest::Approx(0.25).epsilon(1e-15));

    Vector greedy = policy_probs(q, 0, 0.0);
    CHECK(greedy[3] == 1.0);
    CHECK(greedy[0] == 0.0);

    Vector eps = policy_probs(q, 0, 0.01);
    CHECK(eps[0] == doctest::Approx(0.0025).epsilon(1e-15));
    CHECK(eps[1] == doctest::Approx(0.0025).epsilon(1e-15));
    CHECK(eps[2] == doctest::Approx(0.0025).epsilon(1e-15));
    CHECK(eps[3] == doctest::Approx(0.9925).epsilon(1e-15));

    // ties break toward the lowest action index
    QFunction tie = tabular_with(1, 3, {5.0, 5.0, 1.0});
    CHECK(policy_probs(tie, 0, 0.0)[0] == 1.0);

    Rng rng(3);
    for (int rep = 0; rep < 50; ++rep) {
        QFunction r = tabular_with(1, 5, {rng.uniform(-1, 1), rng.uniform(-1, 1),
                                          rng.uniform(-1, 1), rng.uniform(-1, 1),
                                          rng.uniform(-1, 1)});
        double e = rng.uniform();
        Vector p = policy_probs(r, 0, e);
        double sum = 0.0;
        for (double x : p) {
            CHECK(x >= e / 5.0 - 1e-15);
            sum += x;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-15);
    }
    CHECK_THROWS_AS(policy_probs(q, 0, 1.5), InvalidArg);
}

TEST_CASE("expected_q: fixtures and the greedy reduction") {
    QFunction q = tabular_with(1, 4, {1.0, 2.0, 3.0, 4.0});
    CHECK(expected_q(q, 0, 0.01) == doctest::Approx(3.985).epsilon(1e-15));
    CHECK(expected_q(q, 0, 0.0) == 4.0);  // exact: greedy expectation is the max

    QFunction flat = tabular_with(1, 3, {0.7, 0.7, 0.7});
    CHECK(expected_q(flat, 0, 0.3) == doctest::Approx(0.7).epsilon(1e-15));

    // expected gradient is the pi-weighted one-hot mixture
    auto [v, g] = expected_q_and_grad(q, 0, 0.01);
    CHECK(v == doctest::Approx(3.985).epsilon(1e-15));
    CHECK(g[0] == doctest::Approx(0.0025).epsilon(1e-15));
    CHECK(g[3] == doctest::Approx(0.9925).epsilon(1e-15));
}

TEST_CASE("tabular and linear gradients are exact") {
    QFunction tab = make_tabular(3, 2);
    tab.theta = {1, 2, 3, 4, 5, 6};
    auto [v, g] = value_and_grad(tab, 2, 1);
    CHECK(v == 6.0);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == (i == 5 ? 1.0 : 0.0));

    ToyEnv env = make_gridworld(1, 3, 3);
    linalg::Matrix f = coordinate_features(env);
    CHECK(f.rows() == 9);
    CHECK(f.cols() == 3);
    CHECK(f(4, 0) == doctest::Approx(0.5).epsilon(1e-15));  // center cell
    CHECK(f(4, 1) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(f(4, 2) == 1.0);

    QFunction lin = make_linear(f, 4);
    Rng rng(9);
    for (auto& t : lin.theta) t = rng.uniform(-1.0, 1.0);
    auto [lv, lg] = value_and_grad(lin, 4, 2);
    double manual = 0.0;
    for (std::size_t d = 0; d < 3; ++d) manual += lin.theta[2 * 3 + d] * f(4, d);
    CHECK(lv == doctest::Approx(manual).epsilon(1e-15));
    for (std::size_t d = 0; d < 3; ++d) CHECK(lg[2 * 3 + d] == f(4, d));
    CHECK(lg[0] == 0.0);
    CHECK(lg[3 * 3 + 1] == 0.0);
}

TEST_CASE("mlp: structural zeros, head linearity, finite-difference fidelity") {
    ToyEnv env = make_gridworld(1, 3, 3);
    linalg::Matrix f = coordinate_features(env);
    QFunction q = make_mlp(f, 4, 5, 11);
    std::size_t d = 3, h = 5, A = 4;
    std::size_t b1_off = h * d, w2_off = h * d + h, b2_off = w2_off + A * h;
    REQUIRE(q.theta.size() == b2_off + A);

    // all-zero weights: value 0, only the chosen action's output bias moves it
    QFunction zero = q;
    zero.theta.assign(zero.theta.size(), 0.0);
    auto [zv, zg] = mlp_value_and_grad(zero, 4, 2);
    CHECK(zv == 0.0);
    for (std::size_t i = 0; i < zg.size(); ++i) {
        CHECK(zg[i] == (i == b2_off + 2 ? 1.0 : 0.0));
    }

    // doubling one head's weights doubles its linear contribution
    QFunction twice = q;
    for (std::size_t j = 0; j < h; ++j) twice.theta[w2_off + 1 * h + j] *= 2.0;
    double base = mlp_value_and_grad(q, 7, 1).first - q.theta[b2_off + 1];
    double boosted = mlp_value_and_grad(twice, 7, 1).first - twice.theta[b2_off + 1];
    CHECK(boosted == doctest::Approx(2.0 * base).epsilon(1e-14));

    // central finite differences across every parameter
    Rng rng(23);
    for (auto& t : q.theta) t += rng.uniform(-0.2, 0.2);  // randomize biases too
    for (std::size_t s : {0, 4, 7}) {
        for (std::size_t a : {0, 3}) {
            Vector grad = mlp_value_and_grad(q, s, a).second;
            const double step = 1e-6;
            for (std::size_t i = 0; i < q.theta.size(); ++i) {
                QFunction up = q, dn = q;
                up.theta[i] += step;
                dn.theta[i] -= step;
                double fd = (mlp_value_and_grad(up, s, a).first -
                             mlp_value_and_grad(dn, s, a).first) /
                            (2 * step);
                CHECK(std::abs(grad[i] - fd) <= 1e-6 * std::max(1.0, std::abs(grad[i])));
            }
        }
    }
}

TEST_CASE("evaluate_policy: closed-form oracles") {
    // two-cell gridworld, uniform policy: 3 of 4 actions stay, one reaches goal
    ToyEnv env = make_gridworld(1, 2, 1);
    QFunction q = make_tabular(2, 4);
    PolicyEval pe = evaluate_policy(env, policy_matrix(q, 1.0), 0.99);
    CHECK(pe.v[0] == doctest::Approx(0.9417475728155337).epsilon(1e-12));
    CHECK(pe.v[1] == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    CHECK(pe.q(0, 0) == doctest::Approx(0.9223300970873783).epsilon(1e-12));
    CHECK(pe.q(0, 3) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pe.q(1, 0) == 0.0);

    // deterministic chain, always-right policy: values telescope by hand
    ToyEnv chain = make_windy_chain(1, 5, 0.0);
    linalg::Matrix pi(5, 2);
    for (std::size_t s = 0; s < 5; ++s) pi(s, 1) = 1.0;
    PolicyEval ce = evaluate_policy(chain, pi, 0.99);
    CHECK(ce.v[3] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ce.v[2] == doctest::Approx(0.98).epsilon(1e-12));
    CHECK(ce.v[1] == doctest::Approx(0.9602).epsilon(1e-12));
    CHECK(ce.q(1, 0) == doctest::Approx(-0.01).epsilon(1e-12));
    CHECK(ce.q(2, 0) == doctest::Approx(-0.01 + 0.99 * 0.9602).epsilon(1e-12));

    linalg::Matrix bad(5, 2, 0.3);
    CHECK_THROWS_AS(evaluate_policy(chain, bad, 0.99), InvalidArg);
}

TEST_CASE("rollout_and_errors: one-step fixture and greedy reduction") {
    ToyEnv env = make_gridworld(1, 2, 2);  // goal = 3
    QFunction q = tabular_with(4, 4, {0.1, 0.2, 0.3, 0.5,   // state 0: argmax right
                                      0.3, 0.8, 0.2, 0.1,   // state 1: argmax down
                                      0, 0, 0, 0, 0, 0, 0, 0});
    SarsaConfig cfg;
    cfg.n = 1;
    cfg.gamma = 0.99;
    cfg.epsilon_greedy = 0.0;
    cfg.total_steps = 1;

    env.reset();
    Rollout ro = rollout_and_errors(env, q, cfg);
    REQUIRE(ro.segments.size() == 1);
    const auto& seg = ro.segments[0];
    CHECK(seg.n == 1);
    CHECK(seg.values[0] == 0.5);
    CHECK(seg.rewards[0] == -0.01);
    CHECK_FALSE(seg.bootstrap_terminal);
    // greedy bootstrap equals the max q-value exactly (q-learning reduction)
    CHECK(seg.values[1] == 0.8);
    CHECK(returns::multi_step_error(seg) == doctest::Approx(0.282).epsilon(1e-14));
    CHECK(env.state == 1);

    // next window ends in the goal: bootstrap zeroed, episode return recorded
    cfg.n = 5;
    Rollout fin = rollout_and_errors(env, q, cfg);
    REQUIRE(fin.segments.size() == 1);
    CHECK(fin.segments[0].bootstrap_terminal);
    CHECK(fin.segments[0].rewards[0] == 1.0);
    CHECK(returns::multi_step_error(fin.segments[0]) == doctest::Approx(0.2).epsilon(1e-14));
    REQUIRE(fin.finished_returns.size() == 1);
    CHECK(fin.finished_returns[0] == doctest::Approx(0.99).epsilon(1e-14));
    CHECK(env.state == 0);  // reset for the next window
}

TEST_CASE("rollout_and_errors: cap truncation keeps the bootstrap") {
    ToyEnv env = make_gridworld(1, 2, 2, -0.01, 1.0, 3);
    QFunction q = make_tabular(4, 4);  // all-zero: greedy loops on action 0
    SarsaConfig cfg;
    cfg.n = 5;
    cfg.gamma = 0.99;
    cfg.epsilon_greedy = 0.0;
    cfg.total_steps = 1;

    env.reset();
    Rollout ro = rollout_and_errors(env, q, cfg);
    CHECK(ro.steps == 3);
    REQUIRE(ro.segments.size() == 3);
    CHECK(ro.segments[0].n == 3);
    CHECK(ro.segments[1].n == 2);
    CHECK(ro.segments[2].n == 1);
    for (const auto& seg : ro.segments) CHECK_FALSE(seg.bootstrap_terminal);
    REQUIRE(ro.finished_returns.size() == 1);
    CHECK(ro.finished_returns[0] == doctest::Approx(-0.03).epsilon(1e-14));

    // offset restriction keeps only the window anchor
    env.reset();
    cfg.offset_zero_only = true;
    Rollout anchored = rollout_and_errors(env, q, cfg);
    CHECK(anchored.segments.size() == 1);
    CHECK(anchored.segments[0].n == 3);
}

TEST_CASE("rollout errors are mean-zero when q is exact for the policy") {
    ToyEnv env = make_windy_chain(77, 7, 0.2, 100000);
    const double gamma = 0.9;
    QFunction q = make_tabular(7, 2);
    PolicyEval pe = evaluate_policy(env, policy_matrix(q, 1.0), gamma);
    for (std::size_t s = 0; s < 7; ++s)
        for (std::size_t a = 0; a < 2; ++a) q.theta[s * 2 + a] = pe.q(s, a);

    SarsaConfig cfg;
    cfg.n = 3;
    cfg.gamma = gamma;
    cfg.epsilon_greedy = 1.0;  // uniform policy, matching the oracle
    cfg.total_steps = 1;

    env.reset();
    double sum = 0.0, sumsq = 0.0;
    std::size_t count = 0;
    while (count < 30000) {
        Rollout ro = rollout_and_errors(env, q, cfg);
        for (const auto& seg : ro.segments) {
            double err = returns::multi_step_error(seg);
            sum += err;
            sumsq += err * err;
            ++count;
        }
    }
    double mean = sum / double(count);
    double var = (sumsq - sum * sum / double(count)) / double(count - 1);
    double sigma = std::sqrt(var / double(count));
    CHECK(std::abs(mean) <= 3.0 * sigma + 1e-12);
}

TEST_CASE("train: bitwise determinism and frozen parameters at alpha zero") {
    EnvFactory factory = [](std::uint64_t seed) { return make_gridworld(seed, 3, 3); };
    SarsaConfig cfg;
    cfg.n = 5;
    cfg.gamma = 0.99;
    cfg.epsilon_greedy = 0.1;
    cfg.actors = 2;
    cfg.total_steps = 3000;
    cfg.optimizer = optim::OptimizerKind::Adam;
    cfg.hp.alpha = 0.05;
    cfg.hp.beta2 = 0.99;
    cfg.hp.epsilon = 1e-6;
    cfg.seed = 12;
    cfg.record_every = 500;

    QFunction q0 = make_tabular(9, 4);
    TrainResult a = train(factory, q0, cfg);
    TrainResult b = train(factory, q0, cfg);
    CHECK(curve_csv(a) == curve_csv(b));
    CHECK(a.q.theta == b.q.theta);
    CHECK(a.steps >= cfg.total_steps);
    CHECK(a.curve.back().step == a.steps);
    CHECK_FALSE(a.diverged);
    CHECK(a.episode_returns.size() > 0);

    cfg.hp.alpha = 0.0;
    TrainResult frozen = train(factory, q0, cfg);
    CHECK(frozen.q.theta == q0.theta);
    CHECK_FALSE(frozen.diverged);
}

TEST_CASE("train: tabular sgd on the 5-state chain matches the evaluation oracle") {
    EnvFactory factory = [](std::uint64_t seed) { return make_windy_chain(seed, 5, 0.1); };
    SarsaConfig cfg;
    cfg.n = 1;
    cfg.gamma = 0.99;
    cfg.epsilon_greedy = 0.05;
    cfg.actors = 1;
    cfg.total_steps = 200000;
    cfg.optimizer = optim::OptimizerKind::Sgd;
    cfg.hp.alpha = 0.1;
    cfg.hp.beta1 = 0.0;
    cfg.seed = 7;
    cfg.record_every = 10000;

    TrainResult result = train(factory, make_tabular(5, 2), cfg);
    CHECK_FALSE(result.diverged);

    ToyEnv model = make_windy_chain(0, 5, 0.1);
    PolicyEval oracle =
        evaluate_policy(model, policy_matrix(result.q, cfg.epsilon_greedy), cfg.gamma);
    CHECK(max_abs_diff(q_table(result.q), oracle.q) <= 0.05);
}

TEST_CASE("train: runaway step size marks divergence instead of crashing") {
    EnvFactory factory = [](std::uint64_t seed) { return make_windy_chain(seed, 5, 0.1); };
    SarsaConfig cfg;
    cfg.n = 1;
    cfg.gamma = 0.99;
    cfg.epsilon_greedy = 0.1;
    cfg.actors = 1;
    cfg.total_steps = 50000;
    cfg.optimizer = optim::OptimizerKind::Sgd;
    cfg.hp.alpha = 1e8;
    cfg.seed = 3;

    TrainResult result = train(factory, make_tabular(5, 2), cfg);
    CHECK(result.diverged);
    CHECK(result.steps < cfg.total_steps);  // aborted early
    for (double t : result.q.theta) CHECK(std::isfinite(t));  // last finite state kept
    CHECK(std::isfinite(result.curve.back().param_norm));
}

TEST_CASE("curve csv: schema and empty cells") {
    EnvFactory factory = [](std::uint64_t seed) { return make_gridworld(seed, 2, 2); };
    SarsaConfig cfg;
    cfg.n = 2;
    cfg.gamma = 0.9;
    cfg.epsilon_greedy = 0.2;
    cfg.actors = 1;
    cfg.total_steps = 200;
    cfg.optimizer = optim::OptimizerKind::Sgd;
    cfg.hp.alpha = 0.05;
    cfg.seed = 5;
    cfg.record_every = 50;

    TrainResult sgd_run = train(factory, make_tabular(4, 4), cfg);
    std::string csv = curve_csv(sgd_run);
    CHECK(csv.rfind("step,episodes_completed,avg_return_100ep,param_norm,z_min,z_max\n", 0) == 0);
    std::string second_line = csv.substr(csv.find('\n') + 1);
    second_line = second_line.substr(0, second_line.find('\n'));
    CHECK(second_line.substr(second_line.size() - 2) == ",,");  // sgd: empty z cells
    CHECK(std::count(csv.begin(), csv.end(), '\n') == long(sgd_run.curve.size() + 1));

    cfg.optimizer = optim::OptimizerKind::Tdprop;
    TrainResult tdp = train(factory, make_tabular(4, 4), cfg);
    CHECK(!std::isnan(tdp.curve.back().z_min));
    CHECK(tdp.curve.back().z_max >= tdp.curve.back().z_min);
}

TEST_CASE("input validation") {
    CHECK_THROWS_AS(make_gridworld(0, 1, 1), InvalidArg);
    CHECK_THROWS_AS(make_windy_chain(0, 2, 0.1), InvalidArg);
    CHECK_THROWS_AS(make_windy_chain(0, 5, 1.0), InvalidArg);
    CHECK_THROWS_AS(env_from_name("atari", 0), InvalidArg);
    CHECK(env_from_name("windy_chain", 1).kind == EnvKind::WindyChain);

    CHECK_THROWS_AS(make_tabular(0, 2), InvalidArg);
    CHECK_THROWS_AS(make_linear(linalg::Matrix(), 2), InvalidArg);
    CHECK_THROWS_AS(make_mlp(linalg::Matrix::identity(3), 2, 0, 1), InvalidArg);

    QFunction q = make_tabular(3, 2);
    CHECK_THROWS_AS(q_value(q, 3, 0), IndexOutOfRange);
    CHECK_THROWS_AS(q_value(q, 0, 2), IndexOutOfRange);
    CHECK_THROWS_AS(mlp_value_and_grad(q, 0, 0), InvalidArg);

    SarsaConfig cfg;
    cfg.total_steps = 0;
    CHECK_THROWS_AS(validate(cfg), InvalidArg);
    cfg.total_steps = 10;
    cfg.gamma = 1.0;
    CHECK_THROWS_AS(validate(cfg), InvalidArg);

    ToyEnv env = make_gridworld(1, 2, 2);
    QFunction wrong = make_tabular(5, 4);
    SarsaConfig ok;
    ok.total_steps = 1;
    CHECK_THROWS_AS(rollout_and_errors(env, wrong, ok), DimMismatch);
}

}  // TEST_SUITE
