#pragma once

#include <cstdint>
#include <string>

#include "tdlab/linalg.hpp"
#include "tdlab/rng.hpp"

namespace tdlab::mdp {

using linalg::Matrix;

// Markov reward process: the policy is already folded into the kernel, so
// there is one transition row and one expected reward per state.
struct Mdp {
    Matrix p;            // row-stochastic |S| x |S|
    Vector r;            // expected reward per state
    double gamma = 0.9;  // discount, in (0,1)

    std::size_t n_states() const { return p.rows(); }
};

struct ExactSolution {
    Vector v_star;
    double residual;  // inf-norm of r + (gamma*P - I) v_star
};

// Throws InvalidArg unless p is square with rows summing to 1 within 1e-12,
// entries in [0,1], r finite of matching size, and gamma in (0,1).
void validate(const Mdp& m);

// Dense-rowed random process: each row picks `branching` distinct successors
// and puts normalized positive weight on them; rewards are uniform in [0,1].
// Deterministic for a fixed seed.
Mdp random_mdp(std::uint64_t seed, std::size_t n_states, std::size_t branching,
               double gamma = 0.9);

// Symmetric doubly-stochastic transition matrix: symmetrize a random positive
// matrix, Sinkhorn-balance row/column sums to 1 within 1e-12, re-symmetrize.
// I - gamma*p comes out symmetric positive-definite.
Mdp symmetric_mdp(std::uint64_t seed, std::size_t n_states, double gamma = 0.9);

// Birth-death chain with absorbing ends. Interior states step left with
// p_left, right with p_right, stay otherwise; entering the right terminal
// pays 1, everything else pays 0.
Mdp chain_mdp(std::size_t n_states, double p_left, double p_right,
              double gamma = 0.9);

// v_star = (I - gamma*P)^{-1} r, with the Bellman residual reported.
ExactSolution exact_value(const Mdp& m);

// JSON round-trip: {"gamma": float, "r": [...], "p": [[...]]}, exact for
// 64-bit values.
std::string to_json(const Mdp& m);
Mdp from_json(const std::string& text);

Mdp load_mdp(const std::string& path);
void save_mdp(const Mdp& m, const std::string& path);

}  // namespace tdlab::mdp
