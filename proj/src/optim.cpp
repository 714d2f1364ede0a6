#include "tdlab/optim.hpp"

#include <cmath>

#include <json.hpp>

#include "tdlab/error.hpp"

namespace tdlab::optim {

namespace {

void require_finite(const Vector& x, const char* what) {
    for (double v : x) {
        if (!std::isfinite(v)) throw NonFiniteInput(std::string("optimizer update: ") + what);
    }
}

void check_dims(const OptimizerState& state, const Vector& theta, const Vector& grad_term) {
    if (theta.size() != state.g.size() || grad_term.size() != state.g.size()) {
        throw DimMismatch("optimizer update: parameter/gradient dimension mismatch");
    }
    require_finite(theta, "theta");
    require_finite(grad_term, "grad_term");
}

// Global-norm clip of the raw gradient term; the curvature statistic is
// deliberately left untouched (it estimates scale, not a step).
Vector clipped(const Vector& grad_term, const Hyperparams& hp) {
    if (!hp.grad_clip_norm) return grad_term;
    double norm = std::sqrt(linalg::dot(grad_term, grad_term));
    if (norm <= *hp.grad_clip_norm) return grad_term;
    Vector scaled = grad_term;
    for (double& v : scaled) v *= *hp.grad_clip_norm / norm;
    return scaled;
}

}  // namespace

std::string kind_name(OptimizerKind kind) {
    switch (kind) {
        case OptimizerKind::Tdprop: return "tdprop";
        case OptimizerKind::Adam: return "adam";
        case OptimizerKind::Sgd: return "sgd";
    }
    throw InvalidArg("kind_name: unknown optimizer kind");
}

OptimizerKind kind_from_name(const std::string& name) {
    if (name == "tdprop") return OptimizerKind::Tdprop;
    if (name == "adam") return OptimizerKind::Adam;
    if (name == "sgd") return OptimizerKind::Sgd;
    throw InvalidArg("kind_from_name: unknown optimizer '" + name + "'");
}

void validate(const Hyperparams& hp) {
    if (!std::isfinite(hp.alpha) || hp.alpha < 0.0) {
        throw InvalidArg("hyperparams: alpha must be nonnegative");
    }
    if (!std::isfinite(hp.beta1) || hp.beta1 < 0.0 || hp.beta1 >= 1.0) {
        throw InvalidArg("hyperparams: beta1 must lie in [0,1)");
    }
    if (!std::isfinite(hp.beta2) || hp.beta2 < 0.0 || hp.beta2 >= 1.0) {
        throw InvalidArg("hyperparams: beta2 must lie in [0,1)");
    }
    if (!std::isfinite(hp.epsilon) || hp.epsilon <= 0.0) {
        throw InvalidArg("hyperparams: epsilon must be positive");
    }
    if (hp.grad_clip_norm && (!std::isfinite(*hp.grad_clip_norm) || *hp.grad_clip_norm <= 0.0)) {
        throw InvalidArg("hyperparams: grad_clip_norm must be positive when set");
    }
}

OptimizerState make_optimizer(OptimizerKind kind, std::size_t dim, const Hyperparams& hp) {
    validate(hp);
    if (dim == 0) throw InvalidArg("make_optimizer: zero-dimensional parameter vector");
    OptimizerState state;
    state.kind = kind;
    state.hp = hp;
    state.g.assign(dim, 0.0);
    switch (kind) {
        case OptimizerKind::Tdprop: state.z.assign(dim, 1.0); break;
        case OptimizerKind::Adam: state.z.assign(dim, 0.0); break;
        case OptimizerKind::Sgd: break;  // no second moment
    }
    return state;
}

Vector tdprop_update(OptimizerState& state, const Vector& theta,
                     const Vector& grad_term, const Vector& stat) {
    if (state.kind != OptimizerKind::Tdprop) {
        throw InvalidArg("tdprop_update: state was built for " + kind_name(state.kind));
    }
    check_dims(state, theta, grad_term);
    if (stat.size() != theta.size()) throw DimMismatch("tdprop_update: stat dimension");
    require_finite(stat, "stat");

    const Hyperparams& hp = state.hp;
    Vector gt = clipped(grad_term, hp);
    state.t += 1;
    Vector out(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        state.g[i] = hp.beta1 * state.g[i] + (1.0 - hp.beta1) * gt[i];
        state.z[i] = hp.beta2 * state.z[i] + (1.0 - hp.beta2) * stat[i] * stat[i];
        out[i] = theta[i] + hp.alpha * state.g[i] / (std::sqrt(state.z[i]) + hp.epsilon);
    }
    return out;
}

Vector adam_update(OptimizerState& state, const Vector& theta, const Vector& grad_term) {
    if (state.kind != OptimizerKind::Adam) {
        throw InvalidArg("adam_update: state was built for " + kind_name(state.kind));
    }
    check_dims(state, theta, grad_term);

    const Hyperparams& hp = state.hp;
    Vector gt = clipped(grad_term, hp);
    state.t += 1;
    double g_scale = 1.0;
    double z_scale = 1.0;
    if (hp.bias_correction) {
        g_scale = 1.0 - std::pow(hp.beta1, static_cast<double>(state.t));
        z_scale = 1.0 - std::pow(hp.beta2, static_cast<double>(state.t));
    }
    Vector out(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        state.g[i] = hp.beta1 * state.g[i] + (1.0 - hp.beta1) * gt[i];
        state.z[i] = hp.beta2 * state.z[i] + (1.0 - hp.beta2) * gt[i] * gt[i];
        out[i] = theta[i] +
                 hp.alpha * (state.g[i] / g_scale) / (std::sqrt(state.z[i] / z_scale) + hp.epsilon);
    }
    return out;
}

Vector sgd_update(OptimizerState& state, const Vector& theta, const Vector& grad_term) {
    if (state.kind != OptimizerKind::Sgd) {
        throw InvalidArg("sgd_update: state was built for " + kind_name(state.kind));
    }
    check_dims(state, theta, grad_term);

    const Hyperparams& hp = state.hp;
    Vector gt = clipped(grad_term, hp);
    state.t += 1;
    Vector out(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        state.g[i] = hp.beta1 * state.g[i] + (1.0 - hp.beta1) * gt[i];
        out[i] = theta[i] + hp.alpha * state.g[i];
    }
    return out;
}

Vector update(OptimizerState& state, const Vector& theta, const Vector& grad_term,
              const Vector& stat) {
    switch (state.kind) {
        case OptimizerKind::Tdprop: return tdprop_update(state, theta, grad_term, stat);
        case OptimizerKind::Adam: return adam_update(state, theta, grad_term);
        case OptimizerKind::Sgd: return sgd_update(state, theta, grad_term);
    }
    throw InvalidArg("update: unknown optimizer kind");
}

std::string state_to_json(const OptimizerState& state) {
    nlohmann::json j;
    j["kind"] = kind_name(state.kind);
    j["t"] = state.t;
    j["g"] = state.g;
    j["z"] = state.z;
    nlohmann::json h;
    h["alpha"] = state.hp.alpha;
    h["beta1"] = state.hp.beta1;
    h["beta2"] = state.hp.beta2;
    h["epsilon"] = state.hp.epsilon;
    if (state.hp.grad_clip_norm) h["grad_clip_norm"] = *state.hp.grad_clip_norm;
    h["bias_correction"] = state.hp.bias_correction;
    j["hyperparams"] = h;
    return j.dump(2);
}

OptimizerState state_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArg(std::string("optimizer state: bad JSON: ") + e.what());
    }
    OptimizerState state;
    try {
        state.kind = kind_from_name(j.at("kind").get<std::string>());
        state.t = j.at("t").get<std::size_t>();
        state.g = j.at("g").get<Vector>();
        state.z = j.at("z").get<Vector>();
        const auto& h = j.at("hyperparams");
        state.hp.alpha = h.at("alpha").get<double>();
        state.hp.beta1 = h.at("beta1").get<double>();
        state.hp.beta2 = h.at("beta2").get<double>();
        state.hp.epsilon = h.at("epsilon").get<double>();
        if (h.contains("grad_clip_norm")) {
            state.hp.grad_clip_norm = h.at("grad_clip_norm").get<double>();
        }
        if (h.contains("bias_correction")) {
            state.hp.bias_correction = h.at("bias_correction").get<bool>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArg(std::string("optimizer state: missing or mistyped field: ") + e.what());
    }
    validate(state.hp);
    if (state.kind != OptimizerKind::Sgd && state.z.size() != state.g.size()) {
        throw DimMismatch("optimizer state: moment vectors disagree");
    }
    for (double zi : state.z) {
        if (zi < 0.0) throw InvalidArg("optimizer state: negative second moment");
    }
    return state;
}

}  // namespace tdlab::optim
