#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "tdlab/linalg.hpp"

namespace tdlab::optim {

enum class OptimizerKind { Tdprop, Adam, Sgd };

std::string kind_name(OptimizerKind kind);
OptimizerKind kind_from_name(const std::string& name);

struct Hyperparams {
    double alpha = 1e-3;    // step size, >= 0 (zero freezes the parameters)
    double beta1 = 0.0;     // first-moment decay, in [0,1)
    double beta2 = 0.999;   // second-moment decay, in [0,1)
    double epsilon = 1e-8;  // denominator floor, > 0
    // Global-norm clip applied to the raw gradient term before the moment
    // updates; never applied to the curvature statistic. Absent = no clipping.
    std::optional<double> grad_clip_norm;
    // Standard Adam bias correction, off by default (the plain EMA form).
    bool bias_correction = false;
};

void validate(const Hyperparams& hp);

// Moment accumulators for one flat parameter vector. Single-writer: parallel
// actors must reduce their gradient terms before calling an update.
struct OptimizerState {
    OptimizerKind kind = OptimizerKind::Sgd;
    Vector g;  // first moment, starts at zero
    Vector z;  // second moment; ones for tdprop, zeros for adam, empty for sgd
    std::size_t t = 0;
    Hyperparams hp;
};

OptimizerState make_optimizer(OptimizerKind kind, std::size_t dim, const Hyperparams& hp);

// theta <- theta + alpha * g / (sqrt(z) + eps), where g smooths grad_term and
// z smooths stat^2. grad_term is the sampled error-times-gradient direction;
// stat is the per-parameter curvature statistic (see returns::tdprop_statistic).
Vector tdprop_update(OptimizerState& state, const Vector& theta,
                     const Vector& grad_term, const Vector& stat);

// Same shape but z smooths grad_term^2; no bias correction unless the
// hyperparameter flag turns it on.
Vector adam_update(OptimizerState& state, const Vector& theta, const Vector& grad_term);

// theta <- theta + alpha * g, plain momentum smoothing of grad_term.
Vector sgd_update(OptimizerState& state, const Vector& theta, const Vector& grad_term);

// Dispatch on state.kind; sgd ignores stat.
Vector update(OptimizerState& state, const Vector& theta, const Vector& grad_term,
              const Vector& stat);

// Checkpoint round-trip. Moments are stored as plain JSON arrays.
std::string state_to_json(const OptimizerState& state);
OptimizerState state_from_json(const std::string& text);

}  // namespace tdlab::optim
