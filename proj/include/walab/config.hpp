#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "walab/averaging.hpp"
#include "walab/mlp.hpp"
#include "walab/nqm.hpp"
#include "walab/toy.hpp"

namespace walab {

using Json = nlohmann::json;

struct OptimizerConfig {
    std::string kind = "sgd";  // sgd | adam
    double lr = 0.01;
    double momentum = 0.0;
    double weight_decay = 0.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct LandscapeSection {
    std::vector<std::string> checkpoints;  // checkpoint file paths, in order
    int center_index = -1;                 // index into checkpoints; -1 = last
    std::string normalization = "layerwise_norm";
    double range = 1.0;
    int points_1d = 51;
    int points_2d = 41;
    std::uint64_t direction_seed = 0;
    bool pca_plane = true;   // trajectory plane from principal components
    bool scan_train = true;  // emit the surface over the train split
    bool scan_test = true;
};

struct SweepSection {
    std::string method = "sema";
    std::vector<double> decays{0.9, 0.99, 0.999, 0.9999};
    std::vector<double> interval_epochs{0.5, 1.0, 2.0, 5.0};
    int max_cells = 256;
};

struct NqmSection {
    bool run_grid = true;
    std::vector<double> grid_lrs{0.01, 0.05, 0.1};
    std::vector<double> grid_lambdas{0.1, 0.5, 0.9};
    std::vector<double> grid_a{0.5, 1.0, 2.0};
    double grid_sigma2 = 1.0;
    bool run_sigma_t = true;
    NqmConfig sigma_t;  // see default_config() for the frozen defaults

    // Empirical probe of how SEMA switching perturbs the stationary variance
    // (the closed form models the switchless recursion).
    bool run_switch_effect = true;
    NqmConfig switch_effect;

    NqmSection();
};

// One experiment: a single JSON document; every run artifact embeds its hash.
struct ExperimentConfig {
    std::string task = "toy";  // toy | nqm | landscape | sweep
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    std::string output_dir;  // empty: $WALAB_OUT or ./out

    MlpConfig model;
    OptimizerConfig optimizer;
    AveragerConfig averager;
    ToySpec dataset;
    ToyTrainConfig train;
    NqmSection nqm;
    LandscapeSection landscape;
    SweepSection sweep;

    static ExperimentConfig default_config(const std::string& task);
    void validate() const;
};

Json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const Json& j);

// Stable FNV-1a 64-bit hash of the canonical serialized config, excluding
// output_dir and seeds (the seed list is recorded next to every artifact).
std::string config_hash(const ExperimentConfig& cfg);

// Applies one --set key=value override: dotted path into the JSON document,
// value parsed as a JSON literal when possible, else taken as a string.
// The path must reach an existing leaf.
void apply_override(Json& doc, const std::string& assignment);

// Environment variable naming the default output root.
inline constexpr const char* kOutputRootEnv = "WALAB_OUT";

std::string resolve_output_dir(const ExperimentConfig& cfg, const std::string& cli_out);

}  // namespace walab
