#pragma once

#include <string>
#include <vector>

#include "walab/config.hpp"

namespace walab {

struct CommandOptions {
    std::string out_dir;  // resolved output root
    int workers = 1;
    bool svg = false;
};

// Per-seed tail of a toy training run, used by sweep aggregation and tests.
struct SeedSummary {
    std::uint64_t seed = 0;
    double final_train_loss = 0.0;
    double final_loss_fast = 0.0;
    double final_acc_fast = 0.0;
    double final_loss_avg = 0.0;
    double final_acc_avg = 0.0;
    double final_ece = 0.0;
    double final_width = 0.0;
};

// task=toy: trains one configuration over all seeds; emits run-record CSVs,
// boundary-metric JSON rows, dataset CSVs and checkpoints under
// <out>/train-<hash>/. Returns the per-seed summaries.
std::vector<SeedSummary> cmd_train(const ExperimentConfig& cfg, const CommandOptions& opt);

// task=nqm: emits the analytic-vs-Monte-Carlo variance table for every grid
// cell plus the sigma_T estimate, under <out>/nqm-<hash>/.
void cmd_nqm(const ExperimentConfig& cfg, const CommandOptions& opt);

// task=landscape: loads checkpoints, scans 1D/2D around the chosen center and
// projects the checkpoint trajectory, under <out>/landscape-<hash>/.
void cmd_landscape(const ExperimentConfig& cfg, const CommandOptions& opt);

// task=sweep: cross product of averager decay x switch interval (in epochs)
// x seeds; aggregated mean +- std table ranked by final averaged accuracy,
// under <out>/sweep-<hash>/.
void cmd_sweep(const ExperimentConfig& cfg, const CommandOptions& opt);

// Dispatch on cfg.task.
void run_command(const ExperimentConfig& cfg, const CommandOptions& opt);

// Steps per epoch for a dataset/batch-size pair (full batch = 1).
std::int64_t steps_per_epoch(int n_labeled, int batch_size);

// Effective per-run dataset seed.
std::uint64_t run_dataset_seed(const ToySpec& spec, std::uint64_t run_seed);

}  // namespace walab
