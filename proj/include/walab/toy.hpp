#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "walab/averaging.hpp"
#include "walab/mlp.hpp"
#include "walab/numerics.hpp"
#include "walab/optim.hpp"
#include "walab/rng.hpp"

namespace walab {

enum class ToyKind { circles, moons };

std::string to_string(ToyKind k);
ToyKind toy_kind_from_string(const std::string& s);

// Synthetic 2D binary-classification dataset. Circles: two concentric rings,
// outer radius 1 (class 0) and inner radius 0.5 (class 1), points at equally
// spaced angles plus N(0, noise^2) jitter per coordinate. Moons: two
// interleaving half-circles with the same jitter.
struct ToySpec {
    ToyKind kind = ToyKind::circles;
    int n_labeled = 50;
    int n_test = 500;
    double noise = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
};

struct ToyDataset {
    Batch labeled;
    Batch test;
    // Bounding box over all generated points, recorded for grid construction.
    double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
};

ToyDataset gen_dataset(const ToySpec& spec);

struct GridSpec {
    double x_min = -1.5, x_max = 1.5;
    double y_min = -1.5, y_max = 1.5;
    int resolution = 201;

    // Dataset bounding box padded by `pad` on each side.
    static GridSpec around(const ToyDataset& data, double pad = 0.2, int resolution = 201);
};

struct BoundaryMetrics {
    double accuracy = 0.0;        // on the test batch
    double boundary_width = 0.0;  // grid fraction with |p1 - 0.5| < delta
    double ece = 0.0;             // expected calibration error, B equal-width bins
    int grid_resolution = 0;
};

// delta is the half-width of the low-confidence band; ece_bins the number of
// equal-width confidence bins.
BoundaryMetrics boundary_metrics(const MlpParams& params, const Batch& test, const GridSpec& grid,
                                 double width_band = 0.1, int ece_bins = 10);

double classification_accuracy(const MlpParams& params, const Batch& batch);

struct ToyTrainConfig {
    int epochs = 1000;
    int batch_size = 0;  // 0 = full batch
    OptimizerKind optimizer = OptimizerKind::sgd;
    double lr = 0.01;
    double momentum = 0.0;  // sgd only
    double weight_decay = 0.0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int metric_every = 10;      // boundary metrics cadence (final epoch always)
    int checkpoint_every = 50;  // averaged-parameter checkpoints (final always)
    double width_band = 0.1;
    int ece_bins = 10;
    int grid_resolution = 201;
};

struct ToyEpochRecord {
    int epoch = 0;
    std::int64_t step = 0;
    double train_loss = 0.0;
    double eval_loss_fast = 0.0;
    double eval_acc_fast = 0.0;
    double eval_loss_avg = 0.0;
    double eval_acc_avg = 0.0;
    bool switched = false;       // a SEMA/Lookahead switch fired at this epoch end
    bool has_metrics = false;
    BoundaryMetrics metrics;     // of the averaged parameters
};

struct ToyRunResult {
    std::vector<ToyEpochRecord> epochs;
    std::vector<Vec64> checkpoints;      // averaged parameters over training
    std::vector<int> checkpoint_epochs;
    Vec64 final_fast;
    Vec64 final_avg;
    MlpConfig model;
    BoundaryMetrics final_metrics;
};

// Trains an MLP on the labeled set with per-step averager observation;
// iteration boundaries run maybe_switch, epoch boundaries evaluate first and
// switch after. Deterministic for a fixed (spec.seed, run seed).
ToyRunResult run_toy_experiment(const ToySpec& spec, const MlpConfig& model, const ToyTrainConfig& train,
                                const AveragerConfig& averager, std::uint64_t run_seed);

}  // namespace walab
