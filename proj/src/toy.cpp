#include "walab/toy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace walab {

std::string to_string(ToyKind k) { return k == ToyKind::circles ? "circles" : "moons"; }

ToyKind toy_kind_from_string(const std::string& s) {
    if (s == "circles") return ToyKind::circles;
    if (s == "moons") return ToyKind::moons;
    throw ConfigError("unknown toy dataset: " + s);
}

void ToySpec::validate() const {
    if (n_labeled < 2) throw ConfigError("toy: n_labeled must be >= 2");
    if (n_test < 1) throw ConfigError("toy: n_test must be >= 1");
    if (noise < 0.0) throw ConfigError("toy: noise must be >= 0");
}

namespace {

// Points for one split: class-balanced within +-1, equally spaced angles,
// additive Gaussian jitter.
Batch make_points(ToyKind kind, int n, double noise, RngState& rng) {
    const int n_out = n / 2;
    const int n_in = n - n_out;
    Batch b;
    b.inputs = Mat64(static_cast<std::size_t>(n), 2);
    b.labels.resize(static_cast<std::size_t>(n));
    int row = 0;
    auto put = [&](double x, double y, int label) {
        b.inputs.at(row, 0) = x + (noise > 0.0 ? noise * rng.next_gaussian() : 0.0);
        b.inputs.at(row, 1) = y + (noise > 0.0 ? noise * rng.next_gaussian() : 0.0);
        b.labels[row] = label;
        ++row;
    };
    if (kind == ToyKind::circles) {
        for (int i = 0; i < n_out; ++i) {
            double t = 2.0 * M_PI * i / n_out;
            put(std::cos(t), std::sin(t), 0);
        }
        for (int i = 0; i < n_in; ++i) {
            double t = 2.0 * M_PI * i / n_in;
            put(0.5 * std::cos(t), 0.5 * std::sin(t), 1);
        }
    } else {
        for (int i = 0; i < n_out; ++i) {
            double t = n_out > 1 ? M_PI * i / (n_out - 1) : 0.0;
            put(std::cos(t), std::sin(t), 0);
        }
        for (int i = 0; i < n_in; ++i) {
            double t = n_in > 1 ? M_PI * i / (n_in - 1) : 0.0;
            put(1.0 - std::cos(t), 0.5 - std::sin(t), 1);
        }
    }
    return b;
}

}  // namespace

ToyDataset gen_dataset(const ToySpec& spec) {
    spec.validate();
    RngState rng(spec.seed, 0);
    ToyDataset data;
    data.labeled = make_points(spec.kind, spec.n_labeled, spec.noise, rng);
    data.test = make_points(spec.kind, spec.n_test, spec.noise, rng);
    data.x_min = data.y_min = std::numeric_limits<double>::infinity();
    data.x_max = data.y_max = -std::numeric_limits<double>::infinity();
    for (const Batch* b : {&data.labeled, &data.test}) {
        for (std::size_t r = 0; r < b->inputs.rows; ++r) {
            data.x_min = std::min(data.x_min, b->inputs.at(r, 0));
            data.x_max = std::max(data.x_max, b->inputs.at(r, 0));
            data.y_min = std::min(data.y_min, b->inputs.at(r, 1));
            data.y_max = std::max(data.y_max, b->inputs.at(r, 1));
        }
    }
    return data;
}

GridSpec GridSpec::around(const ToyDataset& data, double pad, int resolution) {
    GridSpec g;
    double dx = (data.x_max - data.x_min) * pad;
    double dy = (data.y_max - data.y_min) * pad;
    g.x_min = data.x_min - dx;
    g.x_max = data.x_max + dx;
    g.y_min = data.y_min - dy;
    g.y_max = data.y_max + dy;
    g.resolution = resolution;
    return g;
}

double classification_accuracy(const MlpParams& params, const Batch& batch) {
    Mat64 probs = predict_proba(params, batch.inputs);
    std::size_t correct = 0;
    for (std::size_t r = 0; r < probs.rows; ++r) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < probs.cols; ++j) {
            if (probs.at(r, j) > probs.at(r, best)) best = j;
        }
        if (static_cast<int>(best) == batch.labels[r]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(probs.rows);
}

BoundaryMetrics boundary_metrics(const MlpParams& params, const Batch& test, const GridSpec& grid,
                                 double width_band, int ece_bins) {
    if (grid.resolution < 2) throw ConfigError("boundary_metrics: grid resolution must be >= 2");
    if (ece_bins < 1) throw ConfigError("boundary_metrics: ece_bins must be >= 1");
    if (params.config.output_dim() != 2) throw UsageError("boundary_metrics: needs a 2-class model");

    BoundaryMetrics out;
    out.grid_resolution = grid.resolution;
    out.accuracy = classification_accuracy(params, test);

    // Low-confidence band fraction over the evaluation grid.
    const int r = grid.resolution;
    Mat64 pts(static_cast<std::size_t>(r) * r, 2);
    for (int i = 0; i < r; ++i) {
        double x = grid.x_min + (grid.x_max - grid.x_min) * (static_cast<double>(i) / (r - 1));
        for (int j = 0; j < r; ++j) {
            double y = grid.y_min + (grid.y_max - grid.y_min) * (static_cast<double>(j) / (r - 1));
            pts.at(static_cast<std::size_t>(i) * r + j, 0) = x;
            pts.at(static_cast<std::size_t>(i) * r + j, 1) = y;
        }
    }
    Mat64 grid_probs = predict_proba(params, pts);
    std::size_t in_band = 0;
    for (std::size_t k = 0; k < grid_probs.rows; ++k) {
        if (std::fabs(grid_probs.at(k, 1) - 0.5) < width_band) ++in_band;
    }
    out.boundary_width = static_cast<double>(in_band) / static_cast<double>(grid_probs.rows);

    // ECE with equal-width confidence bins on the test predictions.
    Mat64 probs = predict_proba(params, test.inputs);
    std::vector<std::size_t> bin_count(static_cast<std::size_t>(ece_bins), 0);
    std::vector<double> bin_conf(static_cast<std::size_t>(ece_bins), 0.0);
    std::vector<double> bin_acc(static_cast<std::size_t>(ece_bins), 0.0);
    for (std::size_t k = 0; k < probs.rows; ++k) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < probs.cols; ++j) {
            if (probs.at(k, j) > probs.at(k, best)) best = j;
        }
        double conf = probs.at(k, best);
        auto bin = static_cast<std::size_t>(conf * ece_bins);
        if (bin >= static_cast<std::size_t>(ece_bins)) bin = static_cast<std::size_t>(ece_bins) - 1;
        bin_count[bin] += 1;
        bin_conf[bin] += conf;
        bin_acc[bin] += (static_cast<int>(best) == test.labels[k]) ? 1.0 : 0.0;
    }
    double ece = 0.0;
    const double n = static_cast<double>(probs.rows);
    for (int b = 0; b < ece_bins; ++b) {
        if (bin_count[b] == 0) continue;
        double cnt = static_cast<double>(bin_count[b]);
        ece += (cnt / n) * std::fabs(bin_acc[b] / cnt - bin_conf[b] / cnt);
    }
    out.ece = ece;
    return out;
}

ToyRunResult run_toy_experiment(const ToySpec& spec, const MlpConfig& model, const ToyTrainConfig& train,
                                const AveragerConfig& averager, std::uint64_t run_seed) {
    model.validate();
    averager.validate();
    if (model.input_dim() != 2 || model.loss != LossKind::softmax_ce) {
        throw ConfigError("toy experiment: model must be a 2-input classifier");
    }
    ToyDataset data = gen_dataset(spec);
    GridSpec grid = GridSpec::around(data, 0.2, train.grid_resolution);

    RngState init_rng(run_seed, 1);
    RngState shuffle_rng(run_seed, 2);
    MlpParams params = init_params(model, init_rng);
    Optimizer opt = train.optimizer == OptimizerKind::sgd
                        ? Optimizer::make_sgd(train.lr, train.momentum, params.flat.size(), train.weight_decay)
                        : Optimizer::make_adam(train.lr, params.flat.size(), train.weight_decay);
    if (train.optimizer == OptimizerKind::adam) {
        opt.adam.beta1 = train.adam_beta1;
        opt.adam.beta2 = train.adam_beta2;
        opt.adam.eps = train.adam_eps;
        opt.adam.validate();
    }
    AveragerState avg = averager_init(averager, params.flat);

    const std::size_t n = data.labeled.size();
    const std::size_t batch_size =
        (train.batch_size <= 0 || static_cast<std::size_t>(train.batch_size) >= n)
            ? n
            : static_cast<std::size_t>(train.batch_size);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    ToyRunResult result;
    result.model = model;
    MlpParams eval_params_holder(model);

    auto eval_on_test = [&](const Vec64& flat, double& loss, double& acc) {
        eval_params_holder.unflatten(flat);
        loss = forward(eval_params_holder, data.test).loss;
        acc = classification_accuracy(eval_params_holder, data.test);
    };

    for (int epoch = 1; epoch <= train.epochs; ++epoch) {
        if (batch_size < n) {
            for (std::size_t i = n - 1; i > 0; --i) {
                auto j = static_cast<std::size_t>(shuffle_rng.next_uniform() * static_cast<double>(i + 1));
                if (j > i) j = i;
                std::swap(order[i], order[j]);
            }
        }
        KahanSum epoch_loss;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < n; start += batch_size) {
            std::size_t end = std::min(start + batch_size, n);
            Batch batch;
            if (batch_size == n) {
                batch = data.labeled;
            } else {
                std::vector<std::size_t> idx(order.begin() + start, order.begin() + end);
                batch = data.labeled.slice(idx);
            }
            double loss = forward(params, batch).loss;
            if (!std::isfinite(loss)) {
                throw DivergenceError("toy training diverged at epoch " + std::to_string(epoch), epoch);
            }
            epoch_loss.add(loss);
            ++n_batches;
            Vec64 grad = backward(params, batch);
            opt.step(params.flat, grad);
            averager_observe(avg, averager, params.flat);
            // Epoch-final switches happen after the evaluation below.
            if (end < n) averager_maybe_switch(avg, averager, params.flat);
        }

        ToyEpochRecord rec;
        rec.epoch = epoch;
        rec.step = avg.t;
        rec.train_loss = epoch_loss.value() / static_cast<double>(n_batches);
        eval_on_test(params.flat, rec.eval_loss_fast, rec.eval_acc_fast);
        Vec64 averaged = averager_eval_params(avg, averager, params.flat);
        eval_on_test(averaged, rec.eval_loss_avg, rec.eval_acc_avg);

        if ((train.metric_every > 0 && epoch % train.metric_every == 0) || epoch == train.epochs) {
            eval_params_holder.unflatten(averaged);
            rec.metrics = boundary_metrics(eval_params_holder, data.test, grid, train.width_band, train.ece_bins);
            rec.has_metrics = true;
        }
        rec.switched = averager_maybe_switch(avg, averager, params.flat);
        result.epochs.push_back(rec);

        if ((train.checkpoint_every > 0 && epoch % train.checkpoint_every == 0) || epoch == train.epochs) {
            result.checkpoints.push_back(averaged);
            result.checkpoint_epochs.push_back(epoch);
        }
        if (epoch == train.epochs) {
            result.final_fast = params.flat;
            result.final_avg = averaged;
            result.final_metrics = rec.metrics;
        }
    }
    return result;
}

}  // namespace walab
