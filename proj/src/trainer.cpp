#include "walab/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "walab/artifacts.hpp"
#include "walab/landscape.hpp"
#include "walab/parallel.hpp"

namespace walab {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

Json dataset_meta(const ToySpec& spec) {
    return Json{{"kind", to_string(spec.kind)},
                {"n_labeled", spec.n_labeled},
                {"n_test", spec.n_test},
                {"noise", spec.noise},
                {"seed", spec.seed}};
}

Json model_meta(const MlpConfig& m) {
    return Json{{"layer_sizes", m.layer_sizes}, {"activation", to_string(m.activation)}, {"loss", to_string(m.loss)}};
}

std::string batch_csv(const Batch& b) {
    CsvBuilder csv("walab-csv v1 toy-points", {"x", "y", "label"});
    for (std::size_t r = 0; r < b.size(); ++r) {
        csv.add_row({CsvBuilder::cell(b.inputs.at(r, 0)), CsvBuilder::cell(b.inputs.at(r, 1)),
                     CsvBuilder::cell(b.labels[r])});
    }
    return csv.str();
}

AveragerConfig resolve_averager(const ExperimentConfig& cfg) {
    AveragerConfig avg = cfg.averager;
    if (avg.method == AvgMethod::swa && avg.swa_snapshot_steps.empty()) {
        std::int64_t total =
            static_cast<std::int64_t>(cfg.train.epochs) * steps_per_epoch(cfg.dataset.n_labeled, cfg.train.batch_size);
        avg.swa_snapshot_steps = swa_schedule(total, avg.swa_snapshot_count);
    }
    return avg;
}

ToyTrainConfig resolve_train(const ExperimentConfig& cfg) {
    ToyTrainConfig train = cfg.train;
    train.optimizer = optimizer_from_string(cfg.optimizer.kind);
    train.lr = cfg.optimizer.lr;
    train.momentum = cfg.optimizer.momentum;
    train.weight_decay = cfg.optimizer.weight_decay;
    train.adam_beta1 = cfg.optimizer.beta1;
    train.adam_beta2 = cfg.optimizer.beta2;
    train.adam_eps = cfg.optimizer.eps;
    return train;
}

}  // namespace

std::int64_t steps_per_epoch(int n_labeled, int batch_size) {
    if (batch_size <= 0 || batch_size >= n_labeled) return 1;
    return (n_labeled + batch_size - 1) / batch_size;
}

std::uint64_t run_dataset_seed(const ToySpec& spec, std::uint64_t run_seed) {
    return spec.seed + run_seed;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

std::vector<SeedSummary> cmd_train(const ExperimentConfig& cfg, const CommandOptions& opt) {
    cfg.validate();
    const std::string hash = config_hash(cfg);
    const std::string dir = opt.out_dir + "/train-" + hash;
    ensure_dir(dir);

    Json cfg_json = config_to_json(cfg);
    cfg_json["config_hash"] = hash;
    write_text_file(dir + "/config.json", cfg_json.dump(2) + "\n");

    const AveragerConfig avg = resolve_averager(cfg);
    const ToyTrainConfig train = resolve_train(cfg);

    std::vector<SeedSummary> summaries;
    CsvBuilder timing("walab-csv v1 timing (volatile, excluded from determinism guarantees)",
                      {"seed", "wall_ms"});
    std::string metrics_jsonl;

    for (std::uint64_t seed : cfg.seeds) {
        auto t0 = Clock::now();
        ToySpec spec = cfg.dataset;
        spec.seed = run_dataset_seed(cfg.dataset, seed);
        ToyRunResult run = run_toy_experiment(spec, cfg.model, train, avg, seed);

        const std::string tag = "seed" + std::to_string(seed);
        CsvBuilder csv("walab-csv v1 run-record",
                       {"step", "epoch", "train_loss", "eval_loss_fast", "eval_acc_fast", "eval_loss_avg",
                        "eval_acc_avg", "seed", "config_hash"});
        for (const ToyEpochRecord& r : run.epochs) {
            csv.add_row({CsvBuilder::cell(r.step), CsvBuilder::cell(r.epoch), CsvBuilder::cell(r.train_loss),
                         CsvBuilder::cell(r.eval_loss_fast), CsvBuilder::cell(r.eval_acc_fast),
                         CsvBuilder::cell(r.eval_loss_avg), CsvBuilder::cell(r.eval_acc_avg),
                         CsvBuilder::cell(seed), hash});
            if (r.has_metrics) {
                Json row{{"method", to_string(avg.method)}, {"seed", seed},
                         {"epoch", r.epoch},               {"accuracy", r.metrics.accuracy},
                         {"boundary_width", r.metrics.boundary_width}, {"ece", r.metrics.ece},
                         {"grid_resolution", r.metrics.grid_resolution}};
                metrics_jsonl += row.dump() + "\n";
            }
        }
        write_text_file(dir + "/" + tag + "-metrics.csv", csv.str());

        ToyDataset data = gen_dataset(spec);
        write_text_file(dir + "/" + tag + "-labeled.csv", batch_csv(data.labeled));
        write_text_file(dir + "/" + tag + "-test.csv", batch_csv(data.test));

        // Plot-ready decision field of the final averaged model: class-1
        // probability over the evaluation grid.
        {
            GridSpec grid = GridSpec::around(data, 0.2, cfg.train.grid_resolution);
            MlpParams final_params(cfg.model, run.final_avg);
            const int r = grid.resolution;
            Mat64 pts(static_cast<std::size_t>(r) * r, 2);
            for (int i = 0; i < r; ++i) {
                double x = grid.x_min + (grid.x_max - grid.x_min) * (static_cast<double>(i) / (r - 1));
                for (int jj = 0; jj < r; ++jj) {
                    double y = grid.y_min + (grid.y_max - grid.y_min) * (static_cast<double>(jj) / (r - 1));
                    pts.at(static_cast<std::size_t>(i) * r + jj, 0) = x;
                    pts.at(static_cast<std::size_t>(i) * r + jj, 1) = y;
                }
            }
            Mat64 probs = predict_proba(final_params, pts);
            CsvBuilder dg("walab-csv v1 decision-grid", {"x", "y", "p1"});
            for (std::size_t k = 0; k < probs.rows; ++k) {
                dg.add_row({CsvBuilder::cell(pts.at(k, 0)), CsvBuilder::cell(pts.at(k, 1)),
                            CsvBuilder::cell(probs.at(k, 1))});
            }
            write_text_file(dir + "/" + tag + "-decision-grid.csv", dg.str());
        }

        for (std::size_t c = 0; c < run.checkpoints.size(); ++c) {
            int epoch = run.checkpoint_epochs[c];
            const ToyEpochRecord& rec = run.epochs[static_cast<std::size_t>(epoch) - 1];
            Json meta{{"model", model_meta(cfg.model)},
                      {"dataset", dataset_meta(spec)},
                      {"seed", seed},
                      {"epoch", epoch},
                      {"step", rec.step},
                      {"eval_loss_avg", rec.eval_loss_avg},
                      {"config_hash", hash},
                      {"method", to_string(avg.method)}};
            write_checkpoint(dir + "/" + tag + "-epoch" + std::to_string(epoch) + ".ckpt", meta,
                             run.checkpoints[c]);
        }

        const ToyEpochRecord& last = run.epochs.back();
        SeedSummary s;
        s.seed = seed;
        s.final_train_loss = last.train_loss;
        s.final_loss_fast = last.eval_loss_fast;
        s.final_acc_fast = last.eval_acc_fast;
        s.final_loss_avg = last.eval_loss_avg;
        s.final_acc_avg = last.eval_acc_avg;
        s.final_ece = run.final_metrics.ece;
        s.final_width = run.final_metrics.boundary_width;
        summaries.push_back(s);
        timing.add_row({CsvBuilder::cell(seed), CsvBuilder::cell(ms_since(t0))});

        if (opt.svg) {
            std::vector<double> xs;
            std::vector<double> fast, avg_acc;
            for (const auto& r : run.epochs) {
                xs.push_back(r.epoch);
                fast.push_back(r.eval_acc_fast);
                avg_acc.push_back(r.eval_acc_avg);
            }
            write_text_file(dir + "/" + tag + "-accuracy.svg",
                            svg_line_plot(xs, {fast, avg_acc}, {"fast", "averaged"},
                                          "test accuracy per epoch (" + to_string(avg.method) + ")"));
        }
    }

    write_text_file(dir + "/boundary-metrics.jsonl", metrics_jsonl);

    Json summary;
    summary["config_hash"] = hash;
    summary["method"] = to_string(avg.method);
    summary["seeds"] = cfg.seeds;
    Json rows = Json::array();
    for (const SeedSummary& s : summaries) {
        rows.push_back(Json{{"seed", s.seed},
                            {"final_train_loss", s.final_train_loss},
                            {"final_loss_fast", s.final_loss_fast},
                            {"final_acc_fast", s.final_acc_fast},
                            {"final_loss_avg", s.final_loss_avg},
                            {"final_acc_avg", s.final_acc_avg},
                            {"final_ece", s.final_ece},
                            {"final_width", s.final_width}});
    }
    summary["per_seed"] = rows;
    write_text_file(dir + "/summary.json", summary.dump(2) + "\n");
    write_text_file(dir + "/timing.csv", timing.str());
    return summaries;
}

// ---------------------------------------------------------------------------
// nqm
// ---------------------------------------------------------------------------

void cmd_nqm(const ExperimentConfig& cfg, const CommandOptions& opt) {
    cfg.validate();
    const std::string hash = config_hash(cfg);
    const std::string dir = opt.out_dir + "/nqm-" + hash;
    ensure_dir(dir);
    Json cfg_json = config_to_json(cfg);
    cfg_json["config_hash"] = hash;
    write_text_file(dir + "/config.json", cfg_json.dump(2) + "\n");

    auto t0 = Clock::now();
    if (cfg.nqm.run_grid) {
        struct Cell {
            double lr, lambda, a;
            NqmConfig config;
            VarianceReport report;
        };
        std::vector<Cell> cells;
        for (double lr : cfg.nqm.grid_lrs) {
            for (double lam : cfg.nqm.grid_lambdas) {
                for (double a : cfg.nqm.grid_a) {
                    Cell c;
                    c.lr = lr;
                    c.lambda = lam;
                    c.a = a;
                    c.config = nqm_grid_cell(lr, lam, a, cfg.nqm.grid_sigma2);
                    c.config.validate();  // stability rejected before simulation
                    cells.push_back(std::move(c));
                }
            }
        }
        // Cells are independent; each cell runs its trials sequentially and
        // cells fill pre-allocated slots, so worker count cannot change output.
        parallel_for(cells.size(), opt.workers,
                     [&](std::size_t i) { cells[i].report = nqm_variance_report(cells[i].config, 1); });

        CsvBuilder csv("walab-csv v1 nqm-variance",
                       {"lr", "lambda", "a", "sigma2", "method", "analytic", "empirical", "rel_err",
                        "ordering_analytic_ok", "ordering_empirical_ok"});
        Json jcells = Json::array();
        for (const Cell& c : cells) {
            auto row = [&](const char* method, const MethodVariance& mv) {
                csv.add_row({CsvBuilder::cell(c.lr), CsvBuilder::cell(c.lambda), CsvBuilder::cell(c.a),
                             CsvBuilder::cell(cfg.nqm.grid_sigma2), method, CsvBuilder::cell(mv.analytic[0]),
                             CsvBuilder::cell(mv.empirical[0]), CsvBuilder::cell(mv.rel_err[0]),
                             c.report.ordering_analytic[0] ? "1" : "0",
                             c.report.ordering_empirical[0] ? "1" : "0"});
            };
            row("sgd", c.report.sgd);
            row("ema", c.report.ema);
            row("sema", c.report.sema);
            AnalyticVariances av = analytic_variances(c.config);
            jcells.push_back(Json{{"lr", c.lr},
                                  {"lambda", c.lambda},
                                  {"a", c.a},
                                  {"sigma2", cfg.nqm.grid_sigma2},
                                  {"steps", c.config.steps},
                                  {"burn_in", c.config.burn_in},
                                  {"trials", c.config.trials},
                                  {"analytic", Json{{"sgd", av.v_sgd[0]},
                                                    {"ema", av.v_ema[0]},
                                                    {"ema_system_route", av.v_ema_system[0]},
                                                    {"sema", av.v_sema[0]},
                                                    {"sema_coef_route", av.v_sema_via_coefs[0]}}},
                                  {"empirical", Json{{"sgd", c.report.sgd.empirical[0]},
                                                     {"ema", c.report.ema.empirical[0]},
                                                     {"sema", c.report.sema.empirical[0]}}},
                                  {"rel_err", Json{{"sgd", c.report.sgd.rel_err[0]},
                                                   {"ema", c.report.ema.rel_err[0]},
                                                   {"sema", c.report.sema.rel_err[0]}}},
                                  {"ordering_analytic_ok", static_cast<bool>(c.report.ordering_analytic[0])},
                                  {"ordering_empirical_ok", static_cast<bool>(c.report.ordering_empirical[0])},
                                  {"sema_route_rel_diff", c.report.sema_route_rel_diff[0]}});
        }
        write_text_file(dir + "/variance-report.csv", csv.str());
        Json grid_json{{"config_hash", hash}, {"cells", jcells}};
        write_text_file(dir + "/variance-report.json", grid_json.dump(2) + "\n");
    }

    if (cfg.nqm.run_sigma_t) {
        SigmaTEstimate est = estimate_sigma_t(cfg.nqm.sigma_t);
        Json js{{"config_hash", hash},
                {"ema_loss_at_t", est.ema_loss_at_t},
                {"sema_loss_at_2t", est.sema_loss_at_2t},
                {"ema_loss_at_2t", est.ema_loss_at_2t},
                {"sigma_t", est.sigma_t},
                {"std_error", est.std_error},
                {"trials", est.trials},
                {"switch_interval", cfg.nqm.sigma_t.switch_interval}};
        write_text_file(dir + "/sigma-t.json", js.dump(2) + "\n");
        CsvBuilder csv("walab-csv v1 nqm-sigma-t",
                       {"ema_loss_at_t", "sema_loss_at_2t", "ema_loss_at_2t", "sigma_t", "std_error", "trials"});
        csv.add_row({CsvBuilder::cell(est.ema_loss_at_t), CsvBuilder::cell(est.sema_loss_at_2t),
                     CsvBuilder::cell(est.ema_loss_at_2t), CsvBuilder::cell(est.sigma_t),
                     CsvBuilder::cell(est.std_error), CsvBuilder::cell(est.trials)});
        write_text_file(dir + "/sigma-t.csv", csv.str());
    }

    if (cfg.nqm.run_switch_effect) {
        // SEMA chain with switching enabled, compared against the switchless
        // fixed point: how much the periodic full-lr steps inflate variance.
        MethodVariance mv = estimate_variance_mc(cfg.nqm.switch_effect, NqmMethod::sema_coupled, 1);
        Json js{{"config_hash", hash},
                {"switch_interval", cfg.nqm.switch_effect.switch_interval},
                {"lr", cfg.nqm.switch_effect.lr},
                {"lambda", cfg.nqm.switch_effect.lambda_new},
                {"a_diag", cfg.nqm.switch_effect.a_diag},
                {"analytic_switchless", mv.analytic},
                {"empirical_with_switches", mv.empirical},
                {"rel_diff", mv.rel_err}};
        write_text_file(dir + "/switch-effect.json", js.dump(2) + "\n");
    }

    CsvBuilder timing("walab-csv v1 timing (volatile, excluded from determinism guarantees)",
                      {"phase", "wall_ms"});
    timing.add_row({"nqm", CsvBuilder::cell(ms_since(t0))});
    write_text_file(dir + "/timing.csv", timing.str());
}

// ---------------------------------------------------------------------------
// landscape
// ---------------------------------------------------------------------------

namespace {

struct LoadedCheckpoints {
    std::vector<Checkpoint> all;
    std::size_t center_index = 0;
    MlpConfig model;
    ToySpec dataset;
};

LoadedCheckpoints load_checkpoints(const ExperimentConfig& cfg) {
    if (cfg.landscape.checkpoints.empty()) {
        throw ConfigError("landscape: config.landscape.checkpoints is empty");
    }
    LoadedCheckpoints out;
    for (const std::string& path : cfg.landscape.checkpoints) out.all.push_back(read_checkpoint(path));
    out.center_index = cfg.landscape.center_index < 0
                           ? out.all.size() - 1
                           : static_cast<std::size_t>(cfg.landscape.center_index);
    if (out.center_index >= out.all.size()) throw ConfigError("landscape: center_index out of range");

    const Json& meta = out.all[out.center_index].meta;
    try {
        const Json& m = meta.at("model");
        out.model.layer_sizes = m.at("layer_sizes").get<std::vector<int>>();
        out.model.activation = activation_from_string(m.at("activation").get<std::string>());
        out.model.loss = loss_from_string(m.at("loss").get<std::string>());
        const Json& d = meta.at("dataset");
        out.dataset.kind = toy_kind_from_string(d.at("kind").get<std::string>());
        out.dataset.n_labeled = d.at("n_labeled").get<int>();
        out.dataset.n_test = d.at("n_test").get<int>();
        out.dataset.noise = d.at("noise").get<double>();
        out.dataset.seed = d.at("seed").get<std::uint64_t>();
    } catch (const Json::exception& e) {
        throw IoError(std::string("landscape: checkpoint metadata incomplete: ") + e.what());
    }
    const std::size_t n = out.model.param_count();
    for (const Checkpoint& c : out.all) {
        if (c.params.size() != n) {
            throw DimensionError("landscape: checkpoint parameter count does not match the model config");
        }
    }
    return out;
}

std::string scan_csv(const ScanGrid& grid, bool two_d) {
    CsvBuilder csv("walab-csv v1 landscape-scan", {"alpha", "beta", "loss", "accuracy"});
    for (std::size_t i = 0; i < grid.alphas.size(); ++i) {
        for (std::size_t j = 0; j < grid.loss[i].size(); ++j) {
            csv.add_row({CsvBuilder::cell(grid.alphas[i]),
                         CsvBuilder::cell(two_d ? grid.betas[j] : 0.0),
                         CsvBuilder::cell(grid.loss[i][j]), CsvBuilder::cell(grid.acc[i][j])});
        }
    }
    return csv.str();
}

}  // namespace

void cmd_landscape(const ExperimentConfig& cfg, const CommandOptions& opt) {
    cfg.validate();
    const std::string hash = config_hash(cfg);
    const std::string dir = opt.out_dir + "/landscape-" + hash;
    ensure_dir(dir);
    Json cfg_json = config_to_json(cfg);
    cfg_json["config_hash"] = hash;
    write_text_file(dir + "/config.json", cfg_json.dump(2) + "\n");

    auto t0 = Clock::now();
    LoadedCheckpoints loaded = load_checkpoints(cfg);
    const Vec64& center = loaded.all[loaded.center_index].params;
    ToyDataset data = gen_dataset(loaded.dataset);

    MlpParams probe(loaded.model);
    auto make_eval = [&](const Batch& batch) {
        return EvalFn([&, batch](const Vec64& p) {
            MlpParams local(loaded.model, p);
            EvalPoint e;
            e.loss = forward(local, batch).loss;
            e.acc = classification_accuracy(local, batch);
            return e;
        });
    };
    EvalFn eval_test = make_eval(data.test);
    EvalFn eval_train = make_eval(data.labeled);

    const DirectionNorm norm = direction_norm_from_string(cfg.landscape.normalization);
    const auto blocks = loaded.model.layer_block_sizes();
    RngState dir_rng(cfg.landscape.direction_seed, 0);
    Direction d1 = make_direction(center, blocks, dir_rng, norm);
    Direction d2 = make_direction(center, blocks, dir_rng, norm);

    auto alphas_1d = linspace(-cfg.landscape.range, cfg.landscape.range, static_cast<std::size_t>(cfg.landscape.points_1d));
    if (cfg.landscape.scan_test) {
        ScanGrid g = scan_1d(center, d1, alphas_1d, eval_test, opt.workers);
        write_text_file(dir + "/scan1d-test.csv", scan_csv(g, false));
        if (opt.svg) {
            std::vector<double> losses;
            for (const auto& row : g.loss) losses.push_back(row[0]);
            write_text_file(dir + "/scan1d-test.svg",
                            svg_line_plot(g.alphas, {losses}, {"test loss"}, "1D loss landscape (test)"));
        }
    }
    if (cfg.landscape.scan_train) {
        ScanGrid g = scan_1d(center, d1, alphas_1d, eval_train, opt.workers);
        write_text_file(dir + "/scan1d-train.csv", scan_csv(g, false));
    }

    // Trajectory plane: principal components when asked for (and possible),
    // otherwise the seeded random plane; the 2D scan shares the same plane so
    // the projected trajectory overlays the surface.
    Vec64 plane1 = d1.vector, plane2 = d2.vector;
    if (cfg.landscape.pca_plane && loaded.all.size() >= 3) {
        std::vector<Vec64> pts;
        for (const Checkpoint& c : loaded.all) pts.push_back(c.params);
        auto [p1, p2] = principal_plane(pts, center);
        plane1 = std::move(p1);
        plane2 = std::move(p2);
    }
    std::vector<Vec64> traj;
    for (const Checkpoint& c : loaded.all) traj.push_back(c.params);
    auto coords = project_trajectory(traj, center, plane1, plane2);

    double extent = 1e-12;
    for (auto [a, b] : coords) extent = std::max({extent, std::fabs(a), std::fabs(b)});
    double range2d = cfg.landscape.pca_plane ? extent * 1.2 : cfg.landscape.range;
    auto alphas_2d = linspace(-range2d, range2d, static_cast<std::size_t>(cfg.landscape.points_2d));
    Direction pd1{plane1, norm}, pd2{plane2, norm};
    ScanGrid g2 = scan_2d(center, pd1, pd2, alphas_2d, alphas_2d, eval_test, opt.workers);
    write_text_file(dir + "/scan2d-test.csv", scan_csv(g2, true));
    if (cfg.landscape.scan_train) {
        ScanGrid g2t = scan_2d(center, pd1, pd2, alphas_2d, alphas_2d, eval_train, opt.workers);
        write_text_file(dir + "/scan2d-train.csv", scan_csv(g2t, true));
    }

    CsvBuilder tcsv("walab-csv v1 landscape-trajectory", {"index", "epoch", "alpha", "beta"});
    for (std::size_t i = 0; i < coords.size(); ++i) {
        std::int64_t epoch = loaded.all[i].meta.value("epoch", -1);
        tcsv.add_row({CsvBuilder::cell(static_cast<std::int64_t>(i)), CsvBuilder::cell(epoch),
                      CsvBuilder::cell(coords[i].first), CsvBuilder::cell(coords[i].second)});
    }
    write_text_file(dir + "/trajectory.csv", tcsv.str());

    Json meta{{"config_hash", hash},
              {"normalization", cfg.landscape.normalization},
              {"direction_seed", cfg.landscape.direction_seed},
              {"range_1d", cfg.landscape.range},
              {"points_1d", cfg.landscape.points_1d},
              {"range_2d", range2d},
              {"points_2d", cfg.landscape.points_2d},
              {"pca_plane", cfg.landscape.pca_plane && loaded.all.size() >= 3},
              {"center_checkpoint", cfg.landscape.checkpoints[loaded.center_index]},
              {"center_recorded_eval_loss", loaded.all[loaded.center_index].meta.value("eval_loss_avg", 0.0)},
              {"center_scan_loss_test", 0.0},
              {"checkpoints", cfg.landscape.checkpoints}};
    if (cfg.landscape.scan_test) {
        // f(0) sanity value: the 1D test scan at alpha = 0.
        ScanGrid g = scan_1d(center, d1, {0.0, cfg.landscape.range == 0.0 ? 1.0 : cfg.landscape.range},
                             eval_test, 1);
        meta["center_scan_loss_test"] = g.loss[0][0];
    }
    write_text_file(dir + "/meta.json", meta.dump(2) + "\n");

    if (opt.svg) {
        write_text_file(dir + "/scan2d-test.svg", svg_heatmap(alphas_2d, alphas_2d, g2.loss, "2D loss landscape (test)"));
    }

    CsvBuilder timing("walab-csv v1 timing (volatile, excluded from determinism guarantees)",
                      {"phase", "wall_ms"});
    timing.add_row({"landscape", CsvBuilder::cell(ms_since(t0))});
    write_text_file(dir + "/timing.csv", timing.str());
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

void cmd_sweep(const ExperimentConfig& cfg, const CommandOptions& opt) {
    cfg.validate();
    const std::string hash = config_hash(cfg);
    const std::string dir = opt.out_dir + "/sweep-" + hash;
    ensure_dir(dir);
    Json cfg_json = config_to_json(cfg);
    cfg_json["config_hash"] = hash;
    write_text_file(dir + "/config.json", cfg_json.dump(2) + "\n");

    const AvgMethod method = avg_method_from_string(cfg.sweep.method);
    const std::int64_t spe = steps_per_epoch(cfg.dataset.n_labeled, cfg.train.batch_size);

    struct Task {
        double decay;
        double interval_epochs;
        std::int64_t interval_iters;
        std::uint64_t seed;
        SeedSummary result;
    };
    std::vector<Task> tasks;
    const std::size_t n_cells = cfg.sweep.decays.size() * cfg.sweep.interval_epochs.size();
    if (n_cells * cfg.seeds.size() > static_cast<std::size_t>(cfg.sweep.max_cells)) {
        throw UsageError("sweep: cross product of " + std::to_string(n_cells * cfg.seeds.size()) +
                         " runs exceeds max_cells = " + std::to_string(cfg.sweep.max_cells));
    }
    for (double d : cfg.sweep.decays) {
        for (double te : cfg.sweep.interval_epochs) {
            // Fractional epochs convert by floor, with at least one iteration.
            auto iters = static_cast<std::int64_t>(std::floor(te * static_cast<double>(spe)));
            iters = std::max<std::int64_t>(1, iters);
            for (std::uint64_t seed : cfg.seeds) {
                tasks.push_back(Task{d, te, iters, seed, {}});
            }
        }
    }

    auto t0 = Clock::now();
    const ToyTrainConfig train = resolve_train(cfg);
    parallel_for(tasks.size(), opt.workers, [&](std::size_t i) {
        Task& task = tasks[i];
        ExperimentConfig run_cfg = cfg;
        run_cfg.averager.method = method;
        run_cfg.averager.decay = task.decay;
        run_cfg.averager.switch_interval = task.interval_iters;
        AveragerConfig avg = resolve_averager(run_cfg);
        ToySpec spec = cfg.dataset;
        spec.seed = run_dataset_seed(cfg.dataset, task.seed);
        ToyTrainConfig cell_train = train;
        cell_train.metric_every = 0;      // finals only
        cell_train.checkpoint_every = 0;
        ToyRunResult run = run_toy_experiment(spec, cfg.model, cell_train, avg, task.seed);
        const ToyEpochRecord& last = run.epochs.back();
        task.result.seed = task.seed;
        task.result.final_train_loss = last.train_loss;
        task.result.final_loss_fast = last.eval_loss_fast;
        task.result.final_acc_fast = last.eval_acc_fast;
        task.result.final_loss_avg = last.eval_loss_avg;
        task.result.final_acc_avg = last.eval_acc_avg;
        task.result.final_ece = run.final_metrics.ece;
        task.result.final_width = run.final_metrics.boundary_width;
    });

    CsvBuilder runs("walab-csv v1 sweep-runs",
                    {"decay", "interval_epochs", "interval_iters", "seed", "final_acc_avg", "final_loss_avg",
                     "final_ece", "final_width", "config_hash"});
    for (const Task& t : tasks) {
        runs.add_row({CsvBuilder::cell(t.decay), CsvBuilder::cell(t.interval_epochs),
                      CsvBuilder::cell(t.interval_iters), CsvBuilder::cell(t.seed),
                      CsvBuilder::cell(t.result.final_acc_avg), CsvBuilder::cell(t.result.final_loss_avg),
                      CsvBuilder::cell(t.result.final_ece), CsvBuilder::cell(t.result.final_width), hash});
    }
    write_text_file(dir + "/sweep-runs.csv", runs.str());

    // Aggregate by (decay, interval) in deterministic config order; rank by
    // mean averaged accuracy, descending (stable on ties).
    struct Agg {
        double decay, interval_epochs;
        double mean_acc = 0.0, std_acc = 0.0, mean_ece = 0.0, std_ece = 0.0;
    };
    std::vector<Agg> aggs;
    const double ns = static_cast<double>(cfg.seeds.size());
    for (double d : cfg.sweep.decays) {
        for (double te : cfg.sweep.interval_epochs) {
            Agg a{d, te, 0.0, 0.0, 0.0, 0.0};
            std::vector<const Task*> cell;
            for (const Task& t : tasks) {
                if (t.decay == d && t.interval_epochs == te) cell.push_back(&t);
            }
            for (const Task* t : cell) {
                a.mean_acc += t->result.final_acc_avg;
                a.mean_ece += t->result.final_ece;
            }
            a.mean_acc /= ns;
            a.mean_ece /= ns;
            for (const Task* t : cell) {
                a.std_acc += (t->result.final_acc_avg - a.mean_acc) * (t->result.final_acc_avg - a.mean_acc);
                a.std_ece += (t->result.final_ece - a.mean_ece) * (t->result.final_ece - a.mean_ece);
            }
            a.std_acc = ns > 1 ? std::sqrt(a.std_acc / (ns - 1)) : 0.0;
            a.std_ece = ns > 1 ? std::sqrt(a.std_ece / (ns - 1)) : 0.0;
            aggs.push_back(a);
        }
    }
    std::stable_sort(aggs.begin(), aggs.end(), [](const Agg& x, const Agg& y) { return x.mean_acc > y.mean_acc; });

    CsvBuilder table("walab-csv v1 sweep-table",
                     {"rank", "decay", "interval_epochs", "mean_acc", "std_acc", "mean_ece", "std_ece"});
    for (std::size_t i = 0; i < aggs.size(); ++i) {
        table.add_row({CsvBuilder::cell(static_cast<std::int64_t>(i + 1)), CsvBuilder::cell(aggs[i].decay),
                       CsvBuilder::cell(aggs[i].interval_epochs), CsvBuilder::cell(aggs[i].mean_acc),
                       CsvBuilder::cell(aggs[i].std_acc), CsvBuilder::cell(aggs[i].mean_ece),
                       CsvBuilder::cell(aggs[i].std_ece)});
    }
    write_text_file(dir + "/sweep-table.csv", table.str());

    CsvBuilder timing("walab-csv v1 timing (volatile, excluded from determinism guarantees)",
                      {"phase", "wall_ms"});
    timing.add_row({"sweep", CsvBuilder::cell(ms_since(t0))});
    write_text_file(dir + "/timing.csv", timing.str());
}

void run_command(const ExperimentConfig& cfg, const CommandOptions& opt) {
    if (cfg.task == "toy") {
        cmd_train(cfg, opt);
    } else if (cfg.task == "nqm") {
        cmd_nqm(cfg, opt);
    } else if (cfg.task == "landscape") {
        cmd_landscape(cfg, opt);
    } else if (cfg.task == "sweep") {
        cmd_sweep(cfg, opt);
    } else {
        throw ConfigError("unknown task: " + cfg.task);
    }
}

}  // namespace walab
