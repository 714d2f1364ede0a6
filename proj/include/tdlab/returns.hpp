#pragma once

#include <vector>

#include "tdlab/linalg.hpp"

namespace tdlab::returns {

// An n-step slice of experience with everything the statistic needs
// materialized: values and value gradients at all n+1 visited states.
// When bootstrap_terminal is set, the value and gradient at index n are
// treated as exactly zero (episode ended there).
struct TrajectorySegment {
    std::size_t n = 0;                // steps covered
    Vector rewards;                   // length n
    Vector values;                    // length n+1
    std::vector<Vector> value_grads;  // length n+1, one gradient per state
    double gamma = 1.0;               // in [0,1]
    double lambda = 1.0;              // in [0,1]
    bool bootstrap_terminal = false;
};

// Throws InvalidArg / DimMismatch on inconsistent lengths or parameters.
void validate(const TrajectorySegment& seg);

// delta_{t+k} = r_{t+k} + gamma * y_{t+k+1} - y_{t+k}
double one_step_delta(const TrajectorySegment& seg, std::size_t k);

// y_t + sum_{k=1}^{n} (gamma*lambda)^{k-1} delta_{t+k-1}
double lambda_return(const TrajectorySegment& seg);

// lambda_return minus the held value at the segment head.
double multi_step_error(const TrajectorySegment& seg);

// Gradient of the multi-step error w.r.t. the value parameters, summed from
// the per-step differences: sum_k (gamma*lambda)^{k-1} (gamma*grad_{k} - grad_{k-1}).
Vector grad_error(const TrajectorySegment& seg);

// Per-parameter curvature statistic: -(grad of error) ⊙ (gradient at head).
Vector tdprop_statistic(const TrajectorySegment& seg);

// The same statistic written as an explicit expansion:
//   g_0⊙g_0 - lambda^{n-1} gamma^n g_n⊙g_0
//   + sum_{k=1}^{n-1} (gamma*lambda)^{k-1} (gamma*lambda - gamma) g_k⊙g_0.
// Identical to tdprop_statistic on every segment; kept as an independent
// route so the identity stays machine-checked.
Vector expanded_statistic(const TrajectorySegment& seg);

}  // namespace tdlab::returns
