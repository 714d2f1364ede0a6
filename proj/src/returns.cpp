#include "tdlab/returns.hpp"

#include <cmath>

namespace tdlab::returns {

namespace {

double value_at(const TrajectorySegment& seg, std::size_t k) {
    if (k == seg.n && seg.bootstrap_terminal) return 0.0;
    return seg.values[k];
}

// gradient at index k, with the terminal bootstrap gradient zeroed
const Vector* grad_at(const TrajectorySegment& seg, std::size_t k, const Vector& zero) {
    if (k == seg.n && seg.bootstrap_terminal) return &zero;
    return &seg.value_grads[k];
}

}  // namespace

void validate(const TrajectorySegment& seg) {
    if (seg.n < 1) throw InvalidArg("segment: n < 1");
    if (seg.rewards.size() != seg.n) throw DimMismatch("segment: rewards length != n");
    if (seg.values.size() != seg.n + 1) throw DimMismatch("segment: values length != n+1");
    if (seg.value_grads.size() != seg.n + 1) {
        throw DimMismatch("segment: gradient count != n+1");
    }
    const std::size_t dim = seg.value_grads[0].size();
    for (const Vector& g : seg.value_grads) {
        if (g.size() != dim) throw DimMismatch("segment: ragged gradients");
    }
    if (!(seg.gamma >= 0.0 && seg.gamma <= 1.0)) throw InvalidArg("segment: gamma outside [0,1]");
    if (!(seg.lambda >= 0.0 && seg.lambda <= 1.0)) throw InvalidArg("segment: lambda outside [0,1]");
    for (double r : seg.rewards) {
        if (!std::isfinite(r)) throw NonFiniteInput("segment: non-finite reward");
    }
    for (double v : seg.values) {
        if (!std::isfinite(v)) throw NonFiniteInput("segment: non-finite value");
    }
}

double one_step_delta(const TrajectorySegment& seg, std::size_t k) {
    if (k >= seg.n) throw IndexOutOfRange("one_step_delta: k >= n");
    return seg.rewards[k] + seg.gamma * value_at(seg, k + 1) - value_at(seg, k);
}

double lambda_return(const TrajectorySegment& seg) {
    double acc = seg.values[0];
    double w = 1.0;  // (gamma*lambda)^{k-1}
    for (std::size_t k = 0; k < seg.n; ++k) {
        acc += w * one_step_delta(seg, k);
        w *= seg.gamma * seg.lambda;
    }
    return acc;
}

double multi_step_error(const TrajectorySegment& seg) {
    return lambda_return(seg) - seg.values[0];
}

Vector grad_error(const TrajectorySegment& seg) {
    const std::size_t dim = seg.value_grads[0].size();
    const Vector zero(dim, 0.0);
    Vector out(dim, 0.0);
    double w = 1.0;
    for (std::size_t k = 1; k <= seg.n; ++k) {
        const Vector& next = *grad_at(seg, k, zero);
        const Vector& prev = *grad_at(seg, k - 1, zero);
        for (std::size_t i = 0; i < dim; ++i) {
            out[i] += w * (seg.gamma * next[i] - prev[i]);
        }
        w *= seg.gamma * seg.lambda;
    }
    return out;
}

Vector tdprop_statistic(const TrajectorySegment& seg) {
    Vector ge = grad_error(seg);
    const Vector& head = seg.value_grads[0];
    for (std::size_t i = 0; i < ge.size(); ++i) ge[i] = -ge[i] * head[i];
    return ge;
}

Vector expanded_statistic(const TrajectorySegment& seg) {
    const std::size_t dim = seg.value_grads[0].size();
    const Vector zero(dim, 0.0);
    const Vector& head = seg.value_grads[0];
    const Vector& tail = *grad_at(seg, seg.n, zero);

    const double tail_weight =
        std::pow(seg.lambda, static_cast<double>(seg.n - 1)) *
        std::pow(seg.gamma, static_cast<double>(seg.n));
    Vector out(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        out[i] = head[i] * head[i] - tail_weight * tail[i] * head[i];
    }
    const double shrink = seg.gamma * seg.lambda - seg.gamma;
    double w = 1.0;  // (gamma*lambda)^{k-1}
    for (std::size_t k = 1; k < seg.n; ++k) {
        const Vector& g = seg.value_grads[k];
        for (std::size_t i = 0; i < dim; ++i) out[i] += w * shrink * g[i] * head[i];
        w *= seg.gamma * seg.lambda;
    }
    return out;
}

}  // namespace tdlab::returns
