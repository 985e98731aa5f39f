// walab: weight-averaging optimization lab.
//
// Subcommands: train (toy task), nqm, landscape, sweep. Experiments are
// described by one JSON config; flags override leaf fields by dotted path.
// Exit codes: 0 success, 2 config error, 3 runtime/divergence error.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "walab/artifacts.hpp"
#include "walab/config.hpp"
#include "walab/trainer.hpp"

namespace {

struct CliArgs {
    std::string config_path;
    std::vector<std::string> sets;
    std::vector<std::uint64_t> seeds;
    std::string out;
    int workers = 1;
    bool svg = false;
};

void add_common(CLI::App* cmd, CliArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config JSON");
    cmd->add_option("--set", args.sets, "override a config leaf: dotted.path=value (repeatable)");
    cmd->add_option("--seed", args.seeds, "run seed (repeatable; overrides config.seeds)");
    cmd->add_option("--out", args.out, "output root (default: config, then $WALAB_OUT, then ./out)");
    cmd->add_option("--workers", args.workers, "worker threads for sweeps/scans")->check(CLI::PositiveNumber);
    cmd->add_flag("--svg", args.svg, "emit static SVG plots next to the CSV artifacts");
}

int run(const std::string& task, const CliArgs& args) {
    walab::Json doc;
    if (args.config_path.empty()) {
        doc = walab::config_to_json(walab::ExperimentConfig::default_config(task));
    } else {
        doc = walab::Json::parse(walab::read_text_file(args.config_path), nullptr, false);
        if (doc.is_discarded()) throw walab::ConfigError("config file is not valid JSON: " + args.config_path);
    }
    for (const std::string& assignment : args.sets) walab::apply_override(doc, assignment);

    walab::ExperimentConfig cfg = walab::config_from_json(doc);
    if (cfg.task != task) {
        throw walab::ConfigError("config.task = '" + cfg.task + "' does not match the '" +
                                 (task == "toy" ? std::string("train") : task) + "' subcommand");
    }
    if (!args.seeds.empty()) cfg.seeds = args.seeds;
    cfg.validate();

    walab::CommandOptions opt;
    opt.out_dir = walab::resolve_output_dir(cfg, args.out);
    opt.workers = args.workers;
    opt.svg = args.svg;
    walab::ensure_dir(opt.out_dir);
    walab::run_command(cfg, opt);
    std::printf("wrote artifacts under %s/%s-%s\n", opt.out_dir.c_str(),
                task == "toy" ? "train" : task.c_str(), walab::config_hash(cfg).c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"weight-averaging optimization lab"};
    app.require_subcommand(1);

    CliArgs args;
    CLI::App* train = app.add_subcommand("train", "train the toy task with the configured averager");
    CLI::App* nqm = app.add_subcommand("nqm", "noisy-quadratic-model variance verification and sigma_T");
    CLI::App* landscape = app.add_subcommand("landscape", "1D/2D loss scans and trajectory projection");
    CLI::App* sweep = app.add_subcommand("sweep", "decay x switch-interval ablation over seeds");
    for (CLI::App* cmd : {train, nqm, landscape, sweep}) add_common(cmd, args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    std::string task;
    if (train->parsed()) task = "toy";
    if (nqm->parsed()) task = "nqm";
    if (landscape->parsed()) task = "landscape";
    if (sweep->parsed()) task = "sweep";

    try {
        return run(task, args);
    } catch (const walab::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
