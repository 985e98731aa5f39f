#include "walab/optim.hpp"

#include <cmath>

namespace walab {

std::string to_string(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind optimizer_from_string(const std::string& s) {
    if (s == "sgd") return OptimizerKind::sgd;
    if (s == "adam") return OptimizerKind::adam;
    throw ConfigError("unknown optimizer: " + s);
}

SgdState::SgdState(double lr_, double momentum_, std::size_t n_params)
    : lr(lr_), momentum(momentum_), velocity(n_params, 0.0) {
    validate();
}

void SgdState::validate() const {
    if (!(lr > 0.0)) throw ConfigError("sgd: lr must be > 0");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("sgd: momentum must be in [0, 1)");
}

void sgd_step(SgdState& state, Vec64& params, const Vec64& grad) {
    require_same_length(params, grad, "sgd_step");
    require_same_length(params, state.velocity, "sgd_step");
    if (state.momentum == 0.0) {
        for (std::size_t i = 0; i < params.size(); ++i) params[i] -= state.lr * grad[i];
        return;
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.velocity[i] = state.momentum * state.velocity[i] + grad[i];
        params[i] -= state.lr * state.velocity[i];
    }
}

AdamState::AdamState(double lr_, std::size_t n_params) : lr(lr_), m(n_params, 0.0), v(n_params, 0.0) {
    validate();
}

void AdamState::validate() const {
    if (!(lr > 0.0)) throw ConfigError("adam: lr must be > 0");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
        throw ConfigError("adam: betas must be in [0, 1)");
    }
    if (!(eps > 0.0)) throw ConfigError("adam: eps must be > 0");
    if (t < 0) throw ConfigError("adam: step count must be >= 0");
}

void adam_step(AdamState& state, Vec64& params, const Vec64& grad) {
    require_same_length(params, grad, "adam_step");
    require_same_length(params, state.m, "adam_step");
    state.t += 1;
    double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
        double mhat = state.m[i] / bc1;
        double vhat = state.v[i] / bc2;
        params[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

Optimizer Optimizer::make_sgd(double lr, double momentum, std::size_t n_params, double weight_decay) {
    Optimizer o;
    o.kind = OptimizerKind::sgd;
    o.weight_decay = weight_decay;
    o.sgd = SgdState(lr, momentum, n_params);
    return o;
}

Optimizer Optimizer::make_adam(double lr, std::size_t n_params, double weight_decay) {
    Optimizer o;
    o.kind = OptimizerKind::adam;
    o.weight_decay = weight_decay;
    o.adam = AdamState(lr, n_params);
    return o;
}

void Optimizer::step(Vec64& params, const Vec64& grad) {
    if (weight_decay > 0.0) {
        double shrink = 1.0 - lr() * weight_decay;
        for (double& p : params) p *= shrink;
    }
    if (kind == OptimizerKind::sgd) {
        sgd_step(sgd, params, grad);
    } else {
        adam_step(adam, params, grad);
    }
}

}  // namespace walab
