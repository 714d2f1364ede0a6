#pragma once

#include <string>

#include "tdlab/precond.hpp"

namespace tdlab::solver {

// Error trajectory of one preconditioned run, measured against the exact
// value function in the infinity norm.
struct SolveTrace {
    Vector errors;  // errors[0] = ||v0 - v*||, one entry per iteration after
    double alpha = 0.0;
    precond::SplitKind splitting_kind = precond::SplitKind::Plain;
    std::size_t iterations = 0;  // updates actually applied
    bool converged = false;
};

// v <- v - alpha * b^{-1} (h v - r_eff), with b^{-1} applied as diagonal
// scaling (jacobi) or skipped (plain). Stops when the error drops to tol or
// max_iters is reached; throws Diverged once the error passes 1e12.
SolveTrace iterate(const precond::TdSystem& sys, const precond::Splitting& s,
                   double alpha, const Vector& v0, std::size_t max_iters, double tol);

// Geometric-mean contraction factor after burn_in, using the last iteration
// still above the 1e-13 floating-point floor:
// (||e_T|| / ||e_b||)^(1/(T-b)). Throws InsufficientData when fewer than 10
// usable iterations follow the burn-in.
double empirical_rate(const SolveTrace& trace, std::size_t burn_in = 50);

// CSV with header "iteration,error_inf_norm".
std::string trace_csv(const SolveTrace& trace);
void save_trace(const SolveTrace& trace, const std::string& path);

}  // namespace tdlab::solver
