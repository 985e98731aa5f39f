#pragma once

#include <cstdint>
#include <string>

#include "walab/numerics.hpp"

namespace walab {

enum class OptimizerKind { sgd, adam };

std::string to_string(OptimizerKind k);
OptimizerKind optimizer_from_string(const std::string& s);

// Momentum SGD, "velocity then step" convention:
//   v' = beta * v + g;  params' = params - lr * v'
// With beta = 0 this is the plain iterate params' = params - lr * g.
struct SgdState {
    double lr = 0.01;
    double momentum = 0.0;  // beta in [0, 1)
    Vec64 velocity;

    SgdState() = default;
    SgdState(double lr_, double momentum_, std::size_t n_params);
    void validate() const;
};

void sgd_step(SgdState& state, Vec64& params, const Vec64& grad);

// Adam with bias-corrected moments.
struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    Vec64 m;
    Vec64 v;
    std::int64_t t = 0;

    AdamState() = default;
    AdamState(double lr_, std::size_t n_params);
    void validate() const;
};

void adam_step(AdamState& state, Vec64& params, const Vec64& grad);

// Uniform front end over both optimizers for the train loop. Decoupled weight
// decay (params *= 1 - lr*wd before the step) when weight_decay > 0.
struct Optimizer {
    OptimizerKind kind = OptimizerKind::sgd;
    double weight_decay = 0.0;
    SgdState sgd;
    AdamState adam;

    static Optimizer make_sgd(double lr, double momentum, std::size_t n_params, double weight_decay = 0.0);
    static Optimizer make_adam(double lr, std::size_t n_params, double weight_decay = 0.0);

    double lr() const { return kind == OptimizerKind::sgd ? sgd.lr : adam.lr; }
    void step(Vec64& params, const Vec64& grad);
};

}  // namespace walab
