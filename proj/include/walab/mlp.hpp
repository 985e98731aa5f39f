#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "walab/numerics.hpp"
#include "walab/rng.hpp"

namespace walab {

enum class Activation { tanh_fn, relu };
enum class LossKind { softmax_ce, mse, l1 };

std::string to_string(Activation a);
std::string to_string(LossKind l);
Activation activation_from_string(const std::string& s);
LossKind loss_from_string(const std::string& s);

// Fully connected network: layer_sizes = {in, hidden..., out}. Hidden layers
// use `activation`, the output layer is linear (logits for classification).
struct MlpConfig {
    std::vector<int> layer_sizes{2, 16, 2};
    Activation activation = Activation::tanh_fn;
    LossKind loss = LossKind::softmax_ce;

    void validate() const;  // >= 2 layers, all widths >= 1
    std::size_t param_count() const;
    int input_dim() const { return layer_sizes.front(); }
    int output_dim() const { return layer_sizes.back(); }
    std::size_t layer_count() const { return layer_sizes.size() - 1; }

    // Flattening order: per layer, weight matrix (row-major, out x in) then bias.
    // Returns the size of each (weights+bias) block, used for layerwise norms.
    std::vector<std::size_t> layer_block_sizes() const;
};

// Parameters in their canonical flat order; weight/bias views index into it.
struct MlpParams {
    MlpConfig config;
    Vec64 flat;

    explicit MlpParams(const MlpConfig& cfg);
    MlpParams(const MlpConfig& cfg, Vec64 values);

    const Vec64& flatten() const { return flat; }
    void unflatten(const Vec64& values);

    double* weight(std::size_t layer);              // out x in, row-major
    const double* weight(std::size_t layer) const;
    double* bias(std::size_t layer);
    const double* bias(std::size_t layer) const;

  private:
    std::vector<std::size_t> weight_offsets_;
    std::vector<std::size_t> bias_offsets_;
    void build_offsets();
};

// Glorot-uniform weights in +/- sqrt(6 / (fan_in + fan_out)), zero biases.
MlpParams init_params(const MlpConfig& cfg, RngState& rng);

// One minibatch. `labels` carries class indices for softmax_ce; `targets`
// carries an n x k matrix for mse / l1.
struct Batch {
    Mat64 inputs;             // n x d
    std::vector<int> labels;  // classification
    Mat64 targets;            // regression

    std::size_t size() const { return inputs.rows; }
    Batch slice(const std::vector<std::size_t>& idx) const;
};

struct ForwardResult {
    double loss = 0.0;
    Mat64 outputs;  // n x k logits or predictions
};

// Batch-mean loss and raw outputs.
ForwardResult forward(const MlpParams& params, const Batch& batch);

// Gradient of the batch-mean loss w.r.t. the flattened parameters.
Vec64 backward(const MlpParams& params, const Batch& batch);

// Row-wise softmax of the logits (max-subtraction stable). Classification only.
Mat64 predict_proba(const MlpParams& params, const Mat64& inputs);

}  // namespace walab
