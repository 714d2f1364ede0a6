#include "tdlab/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace tdlab::mdp {

using linalg::inf_norm;
using linalg::solve_linear;

void validate(const Mdp& m) {
    if (!m.p.square()) throw InvalidArg("Mdp: p not square");
    const std::size_t n = m.p.rows();
    if (n == 0) throw InvalidArg("Mdp: empty state space");
    if (m.r.size() != n) throw InvalidArg("Mdp: r size != n_states");
    if (!(m.gamma > 0.0 && m.gamma < 1.0)) throw InvalidArg("Mdp: gamma outside (0,1)");
    for (double v : m.r) {
        if (!std::isfinite(v)) throw InvalidArg("Mdp: non-finite reward");
    }
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double pij = m.p(i, j);
            if (!(pij >= 0.0 && pij <= 1.0)) throw InvalidArg("Mdp: p entry outside [0,1]");
            sum += pij;
        }
        if (std::abs(sum - 1.0) > 1e-12) throw InvalidArg("Mdp: row sum != 1");
    }
}

Mdp random_mdp(std::uint64_t seed, std::size_t n_states, std::size_t branching,
               double gamma) {
    if (n_states < 2) throw InvalidArg("random_mdp: n_states < 2");
    if (branching < 1 || branching > n_states) throw InvalidArg("random_mdp: bad branching");
    if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArg("random_mdp: gamma outside (0,1)");

    Rng rng(seed);
    Mdp m;
    m.gamma = gamma;
    m.p = Matrix(n_states, n_states);
    m.r.resize(n_states);

    std::vector<std::size_t> pool(n_states);
    for (std::size_t i = 0; i < n_states; ++i) {
        // partial Fisher-Yates: first `branching` entries become the successors
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        for (std::size_t k = 0; k < branching; ++k) {
            std::size_t j = k + rng.uniform_int(n_states - k);
            std::swap(pool[k], pool[j]);
        }
        double sum = 0.0;
        std::vector<double> w(branching);
        for (std::size_t k = 0; k < branching; ++k) {
            w[k] = rng.exponential();
            sum += w[k];
        }
        for (std::size_t k = 0; k < branching; ++k) m.p(i, pool[k]) = w[k] / sum;
        m.r[i] = rng.uniform();
    }
    return m;
}

Mdp symmetric_mdp(std::uint64_t seed, std::size_t n_states, double gamma) {
    if (n_states < 2) throw InvalidArg("symmetric_mdp: n_states < 2");
    if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArg("symmetric_mdp: gamma outside (0,1)");

    Rng rng(seed);
    const std::size_t n = n_states;
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = rng.uniform(0.1, 1.0);
    // symmetrize, then balance
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (a(i, j) + a(j, i));

    constexpr int kMaxSweeps = 10000;
    // A positive symmetric matrix balances to a symmetric doubly-stochastic
    // one (the scaling is D A D); we just alternate row and column sweeps.
    bool balanced = false;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += a(i, j);
            for (std::size_t j = 0; j < n; ++j) a(i, j) /= s;
        }
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += a(i, j);
            for (std::size_t i = 0; i < n; ++i) a(i, j) /= s;
        }
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double rs = 0.0, cs = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                rs += a(i, j);
                cs += a(j, i);
            }
            worst = std::max({worst, std::abs(rs - 1.0), std::abs(cs - 1.0)});
        }
        if (worst <= 0.25e-12) {
            balanced = true;
            break;
        }
    }
    if (!balanced) throw NoConvergence("symmetric_mdp: Sinkhorn sweep cap hit");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (a(i, j) + a(j, i));

    Mdp m;
    m.gamma = gamma;
    m.p = std::move(a);
    m.r.resize(n);
    for (auto& x : m.r) x = rng.uniform();
    return m;
}

Mdp chain_mdp(std::size_t n_states, double p_left, double p_right, double gamma) {
    if (n_states < 3) throw InvalidArg("chain_mdp: n_states < 3");
    if (p_left < 0.0 || p_right < 0.0 || p_left + p_right > 1.0) {
        throw InvalidArg("chain_mdp: step probabilities invalid");
    }
    if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArg("chain_mdp: gamma outside (0,1)");

    const std::size_t n = n_states;
    Mdp m;
    m.gamma = gamma;
    m.p = Matrix(n, n);
    m.r.assign(n, 0.0);
    m.p(0, 0) = 1.0;
    m.p(n - 1, n - 1) = 1.0;
    for (std::size_t s = 1; s + 1 < n; ++s) {
        m.p(s, s - 1) = p_left;
        m.p(s, s + 1) = p_right;
        m.p(s, s) = 1.0 - p_left - p_right;
    }
    m.r[n - 2] = p_right;  // expected reward of the transition into the right end
    return m;
}

ExactSolution exact_value(const Mdp& m) {
    validate(m);
    const std::size_t n = m.n_states();
    Matrix h = Matrix::identity(n) - m.gamma * m.p;
    Vector v = solve_linear(h, m.r);
    Vector residual = m.r - (h * v);
    ExactSolution sol{std::move(v), inf_norm(residual)};
    if (sol.residual > 1e-9) {
        throw NoConvergence("exact_value: Bellman residual above 1e-9");
    }
    return sol;
}

std::string to_json(const Mdp& m) {
    nlohmann::json j;
    j["gamma"] = m.gamma;
    j["r"] = m.r;
    std::vector<std::vector<double>> rows(m.p.rows());
    for (std::size_t i = 0; i < m.p.rows(); ++i) {
        rows[i].assign(m.p.data().begin() + i * m.p.cols(),
                       m.p.data().begin() + (i + 1) * m.p.cols());
    }
    j["p"] = rows;
    return j.dump(2);
}

Mdp from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArg(std::string("Mdp JSON: parse failure: ") + e.what());
    }
    Mdp m;
    try {
        m.gamma = j.at("gamma").get<double>();
        m.r = j.at("r").get<std::vector<double>>();
        auto rows = j.at("p").get<std::vector<std::vector<double>>>();
        const std::size_t n = rows.size();
        for (const auto& row : rows) {
            if (row.size() != n) throw InvalidArg("Mdp JSON: p not square");
        }
        m.p = Matrix(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t jx = 0; jx < n; ++jx) m.p(i, jx) = rows[i][jx];
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArg(std::string("Mdp JSON: bad structure: ") + e.what());
    }
    validate(m);
    return m;
}

Mdp load_mdp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

void save_mdp(const Mdp& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << to_json(m) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace tdlab::mdp
