#include "walab/mlp.hpp"

#include <algorithm>
#include <cmath>

namespace walab {

std::string to_string(Activation a) { return a == Activation::tanh_fn ? "tanh" : "relu"; }

std::string to_string(LossKind l) {
    switch (l) {
        case LossKind::softmax_ce: return "softmax_ce";
        case LossKind::mse: return "mse";
        case LossKind::l1: return "l1";
    }
    return "?";
}

Activation activation_from_string(const std::string& s) {
    if (s == "tanh") return Activation::tanh_fn;
    if (s == "relu") return Activation::relu;
    throw ConfigError("unknown activation: " + s);
}

LossKind loss_from_string(const std::string& s) {
    if (s == "softmax_ce") return LossKind::softmax_ce;
    if (s == "mse") return LossKind::mse;
    if (s == "l1") return LossKind::l1;
    throw ConfigError("unknown loss: " + s);
}

void MlpConfig::validate() const {
    if (layer_sizes.size() < 2) throw ConfigError("MlpConfig: need at least input and output layers");
    for (int w : layer_sizes) {
        if (w < 1) throw ConfigError("MlpConfig: layer widths must be >= 1");
    }
}

std::size_t MlpConfig::param_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        n += static_cast<std::size_t>(layer_sizes[l + 1]) * layer_sizes[l] + layer_sizes[l + 1];
    }
    return n;
}

std::vector<std::size_t> MlpConfig::layer_block_sizes() const {
    std::vector<std::size_t> blocks;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        blocks.push_back(static_cast<std::size_t>(layer_sizes[l + 1]) * layer_sizes[l] + layer_sizes[l + 1]);
    }
    return blocks;
}

MlpParams::MlpParams(const MlpConfig& cfg) : config(cfg), flat(cfg.param_count(), 0.0) {
    config.validate();
    build_offsets();
}

MlpParams::MlpParams(const MlpConfig& cfg, Vec64 values) : config(cfg), flat(std::move(values)) {
    config.validate();
    if (flat.size() != config.param_count()) {
        throw DimensionError("MlpParams: got " + std::to_string(flat.size()) + " values, config needs " +
                             std::to_string(config.param_count()));
    }
    build_offsets();
}

void MlpParams::build_offsets() {
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < config.layer_sizes.size(); ++l) {
        weight_offsets_.push_back(off);
        off += static_cast<std::size_t>(config.layer_sizes[l + 1]) * config.layer_sizes[l];
        bias_offsets_.push_back(off);
        off += config.layer_sizes[l + 1];
    }
}

void MlpParams::unflatten(const Vec64& values) {
    if (values.size() != flat.size()) throw DimensionError("unflatten: parameter count mismatch");
    flat = values;
}

double* MlpParams::weight(std::size_t layer) { return flat.data() + weight_offsets_[layer]; }
const double* MlpParams::weight(std::size_t layer) const { return flat.data() + weight_offsets_[layer]; }
double* MlpParams::bias(std::size_t layer) { return flat.data() + bias_offsets_[layer]; }
const double* MlpParams::bias(std::size_t layer) const { return flat.data() + bias_offsets_[layer]; }

MlpParams init_params(const MlpConfig& cfg, RngState& rng) {
    MlpParams p(cfg);
    for (std::size_t l = 0; l + 1 < cfg.layer_sizes.size(); ++l) {
        int fan_in = cfg.layer_sizes[l];
        int fan_out = cfg.layer_sizes[l + 1];
        double bound = std::sqrt(6.0 / (fan_in + fan_out));
        double* w = p.weight(l);
        for (int i = 0; i < fan_out * fan_in; ++i) w[i] = bound * (2.0 * rng.next_uniform() - 1.0);
        // biases stay zero
    }
    return p;
}

Batch Batch::slice(const std::vector<std::size_t>& idx) const {
    Batch out;
    out.inputs = Mat64(idx.size(), inputs.cols);
    if (!labels.empty()) out.labels.resize(idx.size());
    if (targets.rows > 0) out.targets = Mat64(idx.size(), targets.cols);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        for (std::size_t c = 0; c < inputs.cols; ++c) out.inputs.at(r, c) = inputs.at(idx[r], c);
        if (!labels.empty()) out.labels[r] = labels[idx[r]];
        if (targets.rows > 0) {
            for (std::size_t c = 0; c < targets.cols; ++c) out.targets.at(r, c) = targets.at(idx[r], c);
        }
    }
    return out;
}

namespace {

inline double apply_act(Activation a, double x) {
    return a == Activation::tanh_fn ? std::tanh(x) : (x > 0.0 ? x : 0.0);
}

// Derivative expressed in the post-activation value (valid for tanh and relu).
inline double act_grad_from_output(Activation a, double y) {
    return a == Activation::tanh_fn ? 1.0 - y * y : (y > 0.0 ? 1.0 : 0.0);
}

void check_batch(const MlpParams& params, const Batch& batch) {
    if (batch.size() == 0) throw DimensionError("forward: empty batch");
    if (static_cast<int>(batch.inputs.cols) != params.config.input_dim()) {
        throw DimensionError("forward: input dim " + std::to_string(batch.inputs.cols) + " != config " +
                             std::to_string(params.config.input_dim()));
    }
    if (params.config.loss == LossKind::softmax_ce) {
        if (batch.labels.size() != batch.size()) throw DimensionError("forward: labels missing or wrong length");
        for (int y : batch.labels) {
            if (y < 0 || y >= params.config.output_dim()) throw DimensionError("forward: class index out of range");
        }
    } else {
        if (batch.targets.rows != batch.size() ||
            static_cast<int>(batch.targets.cols) != params.config.output_dim()) {
            throw DimensionError("forward: target shape mismatch");
        }
    }
}

// All layer activations, kept for the backward pass. acts[0] is the input.
std::vector<Mat64> run_layers(const MlpParams& params, const Mat64& inputs) {
    const auto& sizes = params.config.layer_sizes;
    std::vector<Mat64> acts;
    acts.reserve(sizes.size());
    acts.push_back(inputs);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const Mat64& in = acts.back();
        int n_out = sizes[l + 1];
        int n_in = sizes[l];
        Mat64 out(in.rows, n_out);
        const double* w = params.weight(l);
        const double* b = params.bias(l);
        bool last = (l + 2 == sizes.size());
        for (std::size_t r = 0; r < in.rows; ++r) {
            const double* x = in.data.data() + r * in.cols;
            double* o = out.data.data() + r * out.cols;
            for (int j = 0; j < n_out; ++j) {
                double acc = b[j];
                const double* wrow = w + static_cast<std::size_t>(j) * n_in;
                for (int i = 0; i < n_in; ++i) acc += wrow[i] * x[i];
                o[j] = last ? acc : apply_act(params.config.activation, acc);
            }
        }
        acts.push_back(std::move(out));
    }
    return acts;
}

// Row-wise log-sum-exp with max subtraction.
inline double logsumexp_row(const double* z, int k, double zmax) {
    double s = 0.0;
    for (int j = 0; j < k; ++j) s += std::exp(z[j] - zmax);
    return zmax + std::log(s);
}

double loss_value(const MlpParams& params, const Batch& batch, const Mat64& outputs) {
    const std::size_t n = batch.size();
    const int k = params.config.output_dim();
    KahanSum total;
    switch (params.config.loss) {
        case LossKind::softmax_ce:
            for (std::size_t r = 0; r < n; ++r) {
                const double* z = outputs.data.data() + r * outputs.cols;
                double zmax = *std::max_element(z, z + k);
                total.add(logsumexp_row(z, k, zmax) - z[batch.labels[r]]);
            }
            return total.value() / static_cast<double>(n);
        case LossKind::mse:
            for (std::size_t r = 0; r < n; ++r) {
                for (int j = 0; j < k; ++j) {
                    double d = outputs.at(r, j) - batch.targets.at(r, j);
                    total.add(d * d);
                }
            }
            return total.value() / static_cast<double>(n * k);
        case LossKind::l1:
            for (std::size_t r = 0; r < n; ++r) {
                for (int j = 0; j < k; ++j) total.add(std::fabs(outputs.at(r, j) - batch.targets.at(r, j)));
            }
            return total.value() / static_cast<double>(n * k);
    }
    return 0.0;
}

// dL/d(outputs) for the batch-mean loss.
Mat64 loss_output_grad(const MlpParams& params, const Batch& batch, const Mat64& outputs) {
    const std::size_t n = batch.size();
    const int k = params.config.output_dim();
    Mat64 g(n, k);
    switch (params.config.loss) {
        case LossKind::softmax_ce:
            for (std::size_t r = 0; r < n; ++r) {
                const double* z = outputs.data.data() + r * outputs.cols;
                double zmax = *std::max_element(z, z + k);
                double denom = 0.0;
                for (int j = 0; j < k; ++j) denom += std::exp(z[j] - zmax);
                for (int j = 0; j < k; ++j) {
                    double p = std::exp(z[j] - zmax) / denom;
                    g.at(r, j) = (p - (j == batch.labels[r] ? 1.0 : 0.0)) / static_cast<double>(n);
                }
            }
            break;
        case LossKind::mse:
            for (std::size_t r = 0; r < n; ++r) {
                for (int j = 0; j < k; ++j) {
                    g.at(r, j) = 2.0 * (outputs.at(r, j) - batch.targets.at(r, j)) / static_cast<double>(n * k);
                }
            }
            break;
        case LossKind::l1:
            for (std::size_t r = 0; r < n; ++r) {
                for (int j = 0; j < k; ++j) {
                    double d = outputs.at(r, j) - batch.targets.at(r, j);
                    g.at(r, j) = (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) / static_cast<double>(n * k);
                }
            }
            break;
    }
    return g;
}

}  // namespace

ForwardResult forward(const MlpParams& params, const Batch& batch) {
    check_batch(params, batch);
    std::vector<Mat64> acts = run_layers(params, batch.inputs);
    ForwardResult res;
    res.outputs = std::move(acts.back());
    res.loss = loss_value(params, batch, res.outputs);
    return res;
}

Vec64 backward(const MlpParams& params, const Batch& batch) {
    check_batch(params, batch);
    std::vector<Mat64> acts = run_layers(params, batch.inputs);
    const auto& sizes = params.config.layer_sizes;
    const std::size_t L = params.config.layer_count();

    MlpParams grad(params.config);  // zero-initialized, same layout
    Mat64 delta = loss_output_grad(params, batch, acts[L]);

    for (std::size_t l = L; l-- > 0;) {
        const Mat64& in = acts[l];
        int n_out = sizes[l + 1];
        int n_in = sizes[l];
        double* gw = grad.weight(l);
        double* gb = grad.bias(l);
        for (std::size_t r = 0; r < in.rows; ++r) {
            const double* x = in.data.data() + r * in.cols;
            const double* d = delta.data.data() + r * delta.cols;
            for (int j = 0; j < n_out; ++j) {
                gb[j] += d[j];
                double* gwrow = gw + static_cast<std::size_t>(j) * n_in;
                for (int i = 0; i < n_in; ++i) gwrow[i] += d[j] * x[i];
            }
        }
        if (l == 0) break;
        // delta for the previous layer: (delta . W) * act'(y_prev)
        Mat64 prev(delta.rows, n_in);
        const double* w = params.weight(l);
        for (std::size_t r = 0; r < delta.rows; ++r) {
            const double* d = delta.data.data() + r * delta.cols;
            const double* y = in.data.data() + r * in.cols;
            double* p = prev.data.data() + r * prev.cols;
            for (int i = 0; i < n_in; ++i) {
                double acc = 0.0;
                for (int j = 0; j < n_out; ++j) acc += d[j] * w[static_cast<std::size_t>(j) * n_in + i];
                p[i] = acc * act_grad_from_output(params.config.activation, y[i]);
            }
        }
        delta = std::move(prev);
    }
    return grad.flat;
}

Mat64 predict_proba(const MlpParams& params, const Mat64& inputs) {
    if (params.config.loss != LossKind::softmax_ce) {
        throw UsageError("predict_proba: model is not a classifier");
    }
    Batch dummy;
    dummy.inputs = inputs;
    dummy.labels.assign(inputs.rows, 0);
    check_batch(params, dummy);
    std::vector<Mat64> acts = run_layers(params, inputs);
    Mat64& logits = acts.back();
    const int k = params.config.output_dim();
    Mat64 probs(inputs.rows, k);
    for (std::size_t r = 0; r < inputs.rows; ++r) {
        const double* z = logits.data.data() + r * logits.cols;
        double zmax = *std::max_element(z, z + k);
        double denom = 0.0;
        for (int j = 0; j < k; ++j) denom += std::exp(z[j] - zmax);
        for (int j = 0; j < k; ++j) probs.at(r, j) = std::exp(z[j] - zmax) / denom;
    }
    return probs;
}

}  // namespace walab
