// Acceptance suite: runs every gate end to end and prints one line per
// criterion. Exit code = number of failed criteria.
//
//   1  NQM variance fixed points: 27-cell grid, MC vs closed form within 3%,
//      ordering V_SEMA < V_EMA < V_SGD everywhere, under 2 minutes.
//   2  Coupled-SEMA descent identity on a random 10-dim quadratic, 1e4 steps,
//      per-coordinate residual below 1e-12.
//   3  sigma_T: noiseless run matches the closed-form recurrence oracle to
//      1e-10; the noisy default reports sigma_T > 1 with SE < 10% of the gap.
//   4  MLP analytic gradients vs central differences, 20 cases, rel err < 1e-5.
//   5  Averager algebra: EMA closed form, SEMA(T=inf) == EMA bit-exact,
//      SEMA(d=0,T=1) == plain optimizer bit-exact, SWA exact mean, Lookahead
//      hand rule.
//   6  Toy ranking on circles and moons over 5 seeds: mean final accuracy
//      SEMA >= EMA >= baseline and SEMA mean ECE <= EMA mean ECE, each dataset
//      under 1 minute.
//   7  Landscape: quadratic-oracle grids exact to 1e-12, f(0) bit-equals the
//      recorded checkpoint loss, projection residual orthogonality < 1e-10.
//   8  Determinism: every CLI command rerun byte-identically, sweep included
//      (1 vs 4 workers).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <sys/wait.h>
#include <functional>
#include <string>
#include <vector>

#include "walab/artifacts.hpp"
#include "walab/config.hpp"
#include "walab/landscape.hpp"
#include "walab/nqm.hpp"
#include "walab/optim.hpp"
#include "walab/parallel.hpp"
#include "walab/toy.hpp"
#include "walab/trainer.hpp"

using namespace walab;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string g_cli_path;

std::string fresh_dir(const std::string& tag) {
    fs::path p = fs::temp_directory_path() / ("walab-acceptance-" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

// --------------------------------------------------------------------------
// criterion 1
// --------------------------------------------------------------------------

Outcome criterion_variance_grid() {
    auto t0 = Clock::now();
    double worst_rel = 0.0;
    bool ordering_ok = true;
    int cells = 0;
    for (double lr : {0.01, 0.05, 0.1}) {
        for (double lam : {0.1, 0.5, 0.9}) {
            for (double a : {0.5, 1.0, 2.0}) {
                NqmConfig cfg = nqm_grid_cell(lr, lam, a, 1.0);
                VarianceReport rep = nqm_variance_report(cfg, 2);
                worst_rel = std::max({worst_rel, rep.sgd.rel_err[0], rep.ema.rel_err[0], rep.sema.rel_err[0]});
                ordering_ok = ordering_ok && rep.ordering_analytic[0] && rep.ordering_empirical[0];
                ++cells;
            }
        }
    }
    double secs = seconds_since(t0);
    Outcome out;
    out.pass = worst_rel < 0.03 && ordering_ok && secs < 120.0 && cells == 27;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "27 cells, worst rel err %.4f (< 0.03), ordering %s, %.1fs (< 120s)",
                  worst_rel, ordering_ok ? "holds" : "VIOLATED", secs);
    out.detail = buf;
    return out;
}

// --------------------------------------------------------------------------
// criterion 2
// --------------------------------------------------------------------------

Outcome criterion_descent_identity() {
    RngState rng(20240901, 0);
    const std::size_t dim = 10;
    Vec64 a(dim);
    for (auto& v : a) v = 0.25 + 1.5 * rng.next_uniform();
    AveragerConfig cfg;
    cfg.method = AvgMethod::sema;
    cfg.sema_mode = SemaMode::coupled;
    cfg.decay = 0.999;
    cfg.switch_interval = 100;
    AveragerState st = averager_init(cfg, sample_standard_gaussian(rng, dim));
    const double lr = 0.05;
    Vec64 last_grad;
    auto grad_fn = [&](const Vec64& x) {
        Vec64 g(dim);
        for (std::size_t i = 0; i < dim; ++i) g[i] = a[i] * x[i];
        last_grad = g;
        return g;
    };
    double worst = 0.0;
    long long checked = 0;
    for (int t = 1; t <= 10000; ++t) {
        Vec64 before = st.shadow;
        coupled_sema_step(st, cfg, grad_fn, lr);
        if (st.t % cfg.switch_interval == 0) continue;
        for (std::size_t i = 0; i < dim; ++i) {
            worst = std::max(worst, std::fabs((st.shadow[i] - before[i]) + (1.0 - cfg.decay) * lr * last_grad[i]));
        }
        ++checked;
    }
    Outcome out;
    out.pass = worst < 1e-12 && checked >= 9000;
    char buf[120];
    std::snprintf(buf, sizeof(buf), "max |dtheta + (1-d)*lr*grad| = %.2e over %lld non-switch steps", worst,
                  checked);
    out.detail = buf;
    return out;
}

// --------------------------------------------------------------------------
// criterion 3
// --------------------------------------------------------------------------

double shadow_closed_form(double r, double s, double lam, double f0, double s0, std::int64_t t) {
    return std::pow(s, static_cast<double>(t)) * s0 +
           lam * f0 * r * (std::pow(r, static_cast<double>(t)) - std::pow(s, static_cast<double>(t))) / (r - s);
}

Outcome criterion_sigma_t() {
    // Deterministic oracle check.
    NqmConfig det;
    det.a_diag = {1.8, 1.5, 0.9};
    det.sigma_diag = {0.0, 0.0, 0.0};
    det.lr = 1.0;
    det.lambda_new = 0.5;
    det.switch_interval = 12;
    det.steps = 24;
    det.burn_in = 0;
    det.trials = 100;
    det.init_scale = 1.0;
    SigmaTEstimate est = estimate_sigma_t(det);
    const double lam = det.lambda_new, s = 1.0 - lam;
    const std::int64_t T = det.switch_interval;
    double ema_T = 0.0, ema_2T = 0.0, sema_2T = 0.0;
    for (std::size_t i = 0; i < det.a_diag.size(); ++i) {
        double r = 1.0 - det.lr * det.a_diag[i];
        double sh_T = shadow_closed_form(r, s, lam, 1.0, 1.0, T);
        double sh_2T = shadow_closed_form(r, s, lam, 1.0, 1.0, 2 * T);
        double spliced = shadow_closed_form(r, s, lam, sh_T, sh_T, T);
        ema_T += 0.5 * det.a_diag[i] * sh_T * sh_T;
        ema_2T += 0.5 * det.a_diag[i] * sh_2T * sh_2T;
        sema_2T += 0.5 * det.a_diag[i] * spliced * spliced;
    }
    double oracle = (ema_T - sema_2T) / (ema_T - ema_2T);
    double det_err = std::fabs(est.sigma_t - oracle);

    // Noisy default.
    NqmSection defaults;
    SigmaTEstimate noisy = estimate_sigma_t(defaults.sigma_t);

    Outcome out;
    bool noisy_ok = noisy.sigma_t > 1.0 && noisy.std_error < 0.1 * (noisy.sigma_t - 1.0);
    out.pass = det_err < 1e-10 && noisy_ok;
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "deterministic |sigma - oracle| = %.2e (< 1e-10); noisy sigma_T = %.4f +- %.4f (SE < 10%% of gap: %s)",
                  det_err, noisy.sigma_t, noisy.std_error, noisy_ok ? "yes" : "NO");
    out.detail = buf;
    return out;
}

// --------------------------------------------------------------------------
// criterion 4
// --------------------------------------------------------------------------

Outcome criterion_gradients() {
    RngState rng(777, 0);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        MlpConfig cfg;
        cfg.layer_sizes = trial % 2 == 0 ? std::vector<int>{2, 10, 2} : std::vector<int>{4, 6, 5, 3};
        cfg.activation = trial % 4 < 2 ? Activation::tanh_fn : Activation::relu;
        cfg.loss = trial % 3 == 0 ? LossKind::softmax_ce : (trial % 3 == 1 ? LossKind::mse : LossKind::l1);
        MlpParams params = init_params(cfg, rng);
        Batch b;
        b.inputs = Mat64(5, static_cast<std::size_t>(cfg.input_dim()));
        for (double& v : b.inputs.data) v = rng.next_gaussian();
        if (cfg.loss == LossKind::softmax_ce) {
            b.labels.resize(5);
            for (auto& y : b.labels) y = static_cast<int>(rng.next_uniform() * cfg.output_dim());
        } else {
            b.targets = Mat64(5, static_cast<std::size_t>(cfg.output_dim()));
            for (double& v : b.targets.data) v = rng.next_gaussian();
            if (cfg.loss == LossKind::l1) {
                Mat64 outputs = forward(params, b).outputs;
                for (std::size_t r = 0; r < 5; ++r) {
                    for (std::size_t c = 0; c < b.targets.cols; ++c) {
                        double sign = b.targets.at(r, c) >= outputs.at(r, c) ? 1.0 : -1.0;
                        b.targets.at(r, c) = outputs.at(r, c) + sign * (0.5 + std::fabs(b.targets.at(r, c)));
                    }
                }
            }
        }
        Vec64 analytic = backward(params, b);
        const double h = 1e-5;
        MlpParams probe = params;
        for (std::size_t i = 0; i < params.flat.size(); ++i) {
            probe.flat = params.flat;
            probe.flat[i] = params.flat[i] + h;
            double up = forward(probe, b).loss;
            probe.flat[i] = params.flat[i] - h;
            double down = forward(probe, b).loss;
            double fd = (up - down) / (2.0 * h);
            worst = std::max(worst,
                             std::fabs(analytic[i] - fd) / std::max({1.0, std::fabs(analytic[i]), std::fabs(fd)}));
        }
    }
    Outcome out;
    out.pass = worst < 1e-5;
    char buf[100];
    std::snprintf(buf, sizeof(buf), "20 cases, max relative error %.2e (< 1e-5)", worst);
    out.detail = buf;
    return out;
}

// --------------------------------------------------------------------------
// criterion 5
// --------------------------------------------------------------------------

Outcome criterion_averager_algebra() {
    std::string fails;

    // EMA closed form over 100 steps.
    {
        RngState rng(5150, 0);
        const double d = 0.97;
        AveragerConfig cfg;
        cfg.method = AvgMethod::ema;
        cfg.decay = d;
        double shadow0 = rng.next_gaussian();
        AveragerState st = averager_init(cfg, {shadow0});
        std::vector<double> fast;
        double worst = 0.0;
        for (int t = 1; t <= 100; ++t) {
            fast.push_back(rng.next_gaussian());
            averager_observe(st, cfg, {fast.back()});
            double closed = std::pow(d, t) * shadow0;
            for (int i = 1; i <= t; ++i) closed += (1.0 - d) * std::pow(d, t - i) * fast[i - 1];
            worst = std::max(worst, std::fabs(st.shadow[0] - closed));
        }
        if (worst > 1e-12) fails += " ema-closed-form";
    }

    // SEMA with T = infinity is bit-identical to EMA.
    {
        AveragerConfig ema;
        ema.method = AvgMethod::ema;
        ema.decay = 0.999;
        AveragerConfig sema = ema;
        sema.method = AvgMethod::sema;
        sema.switch_interval = kNeverSwitch;
        RngState rng(61, 0);
        Vec64 fe = sample_standard_gaussian(rng, 12), fs = fe;
        AveragerState se = averager_init(ema, fe), ss = averager_init(sema, fs);
        for (int t = 1; t <= 1000; ++t) {
            for (std::size_t i = 0; i < fe.size(); ++i) {
                double step = 0.01 * rng.next_gaussian();
                fe[i] += step;
                fs[i] += step;
            }
            averager_observe(se, ema, fe);
            averager_observe(ss, sema, fs);
            averager_maybe_switch(se, ema, fe);
            averager_maybe_switch(ss, sema, fs);
            if (std::memcmp(se.shadow.data(), ss.shadow.data(), 12 * sizeof(double)) != 0) {
                fails += " sema-Tinf-vs-ema";
                break;
            }
        }
    }

    // SEMA(d = 0, T = 1) fast trajectory == plain optimizer, bitwise.
    {
        AveragerConfig cfg;
        cfg.method = AvgMethod::sema;
        cfg.decay = 0.0;
        cfg.switch_interval = 1;
        RngState rng(62, 0);
        Vec64 plain = sample_standard_gaussian(rng, 6), fast = plain;
        SgdState o1(0.03, 0.9, 6), o2 = o1;
        AveragerState st = averager_init(cfg, fast);
        for (int t = 1; t <= 500; ++t) {
            Vec64 g = sample_standard_gaussian(rng, 6);
            sgd_step(o1, plain, g);
            sgd_step(o2, fast, g);
            averager_observe(st, cfg, fast);
            averager_maybe_switch(st, cfg, fast);
            if (std::memcmp(plain.data(), fast.data(), 6 * sizeof(double)) != 0) {
                fails += " sema-d0T1-vs-plain";
                break;
            }
        }
    }

    // SWA exact snapshot mean.
    {
        AveragerConfig cfg;
        cfg.method = AvgMethod::swa;
        cfg.swa_snapshot_steps = {1, 2, 3};
        AveragerState st = averager_init(cfg, {0.0});
        Vec64 fast{0.0};
        averager_observe(st, cfg, fast);
        fast[0] = 2.0;
        averager_observe(st, cfg, fast);
        fast[0] = 4.0;
        averager_observe(st, cfg, fast);
        if (averager_eval_params(st, cfg, fast) != Vec64{2.0}) fails += " swa-mean";
    }

    // Lookahead hand rule: alpha=0.5, k=100, slow 0, fast 2 -> both 1.
    {
        AveragerConfig cfg;
        cfg.method = AvgMethod::lookahead;
        cfg.la_alpha = 0.5;
        cfg.la_k = 100;
        AveragerState st = averager_init(cfg, {0.0});
        Vec64 fast{0.0};
        for (int t = 1; t <= 100; ++t) {
            fast[0] = 2.0;
            averager_observe(st, cfg, fast);
            averager_maybe_switch(st, cfg, fast);
        }
        if (!(st.la_slow[0] == 1.0 && fast[0] == 1.0)) fails += " lookahead-rule";
    }

    Outcome out;
    out.pass = fails.empty();
    out.detail = fails.empty() ? "ema closed form, sema degeneracies, swa mean, lookahead rule all hold"
                               : ("failed:" + fails);
    return out;
}

// --------------------------------------------------------------------------
// criterion 6
// --------------------------------------------------------------------------

struct RankingResult {
    double acc_base = 0.0, acc_ema = 0.0, acc_sema = 0.0;
    double ece_ema = 0.0, ece_sema = 0.0;
    double secs = 0.0;
};

RankingResult toy_ranking(ToyKind kind) {
    auto t0 = Clock::now();
    ExperimentConfig cfg = ExperimentConfig::default_config("toy");
    cfg.dataset.kind = kind;
    cfg.train.metric_every = 0;  // final metrics only
    cfg.train.checkpoint_every = 0;
    const std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    const std::vector<AvgMethod> methods{AvgMethod::none, AvgMethod::ema, AvgMethod::sema};

    ToyTrainConfig train = cfg.train;
    train.lr = cfg.optimizer.lr;
    train.momentum = cfg.optimizer.momentum;

    // Independent runs; reduced in fixed (method, seed) order afterwards.
    struct Cell {
        double acc = 0.0, ece = 0.0;
    };
    std::vector<Cell> cells(methods.size() * seeds.size());
    parallel_for(cells.size(), 2, [&](std::size_t i) {
        AveragerConfig avg = cfg.averager;
        avg.method = methods[i / seeds.size()];
        std::uint64_t seed = seeds[i % seeds.size()];
        ToySpec spec = cfg.dataset;
        spec.seed = run_dataset_seed(cfg.dataset, seed);
        ToyRunResult run = run_toy_experiment(spec, cfg.model, train, avg, seed);
        cells[i].acc = run.epochs.back().eval_acc_avg;
        cells[i].ece = run.final_metrics.ece;
    });

    RankingResult r;
    double ece_base = 0.0;
    auto reduce = [&](std::size_t m, double& acc, double& ece) {
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            acc += cells[m * seeds.size() + s].acc / static_cast<double>(seeds.size());
            ece += cells[m * seeds.size() + s].ece / static_cast<double>(seeds.size());
        }
    };
    reduce(0, r.acc_base, ece_base);
    reduce(1, r.acc_ema, r.ece_ema);
    reduce(2, r.acc_sema, r.ece_sema);
    r.secs = seconds_since(t0);
    return r;
}

Outcome criterion_toy_ranking() {
    RankingResult c = toy_ranking(ToyKind::circles);
    RankingResult m = toy_ranking(ToyKind::moons);
    auto ok = [](const RankingResult& r) {
        return r.acc_sema >= r.acc_ema && r.acc_ema >= r.acc_base && r.ece_sema <= r.ece_ema && r.secs < 60.0;
    };
    Outcome out;
    out.pass = ok(c) && ok(m);
    char buf[260];
    std::snprintf(buf, sizeof(buf),
                  "circles acc %.4f/%.4f/%.4f ece %.4f<=%.4f (%.0fs); moons acc %.4f/%.4f/%.4f ece %.4f<=%.4f "
                  "(%.0fs) [sema/ema/base]",
                  c.acc_sema, c.acc_ema, c.acc_base, c.ece_sema, c.ece_ema, c.secs, m.acc_sema, m.acc_ema,
                  m.acc_base, m.ece_sema, m.ece_ema, m.secs);
    out.detail = buf;
    return out;
}

// --------------------------------------------------------------------------
// criterion 7
// --------------------------------------------------------------------------

Outcome criterion_landscape() {
    std::string fails;

    // Quadratic oracle, 1D and 2D.
    {
        EvalFn quad = [](const Vec64& p) {
            EvalPoint e;
            double s = 0.0;
            for (double v : p) s += v * v;
            e.loss = 0.5 * s;
            return e;
        };
        Vec64 center(16, 0.0);
        Direction d1, d2;
        d1.vector = Vec64(16, 0.0);
        d1.vector[0] = 1.0;
        d2.vector = Vec64(16, 0.0);
        d2.vector[1] = 1.0;
        auto alphas = linspace(-1.0, 1.0, 51);
        ScanGrid g1 = scan_1d(center, d1, alphas, quad);
        double worst = 0.0;
        for (std::size_t i = 0; i < alphas.size(); ++i) {
            worst = std::max(worst, std::fabs(g1.loss[i][0] - 0.5 * alphas[i] * alphas[i]));
        }
        auto ab = linspace(-1.0, 1.0, 41);
        ScanGrid g2 = scan_2d(center, d1, d2, ab, ab, quad, 2);
        for (std::size_t i = 0; i < ab.size(); ++i) {
            for (std::size_t j = 0; j < ab.size(); ++j) {
                worst = std::max(worst, std::fabs(g2.loss[i][j] - 0.5 * (ab[i] * ab[i] + ab[j] * ab[j])));
            }
        }
        if (worst > 1e-12) fails += " quadratic-oracle";
    }

    // f(0) bit-equals the recorded eval loss of a real checkpoint.
    {
        ExperimentConfig cfg = ExperimentConfig::default_config("toy");
        cfg.seeds = {0};
        cfg.train.epochs = 40;
        cfg.train.checkpoint_every = 20;
        cfg.train.metric_every = 0;
        cfg.train.grid_resolution = 31;
        cfg.dataset.n_test = 200;
        std::string dir = fresh_dir("c7-train");
        cmd_train(cfg, {dir, 1, false});
        std::string base = dir + "/train-" + config_hash(cfg);
        Checkpoint ck = read_checkpoint(base + "/seed0-epoch40.ckpt");

        MlpConfig model;
        model.layer_sizes = ck.meta["model"]["layer_sizes"].get<std::vector<int>>();
        model.activation = activation_from_string(ck.meta["model"]["activation"].get<std::string>());
        model.loss = loss_from_string(ck.meta["model"]["loss"].get<std::string>());
        ToySpec spec;
        spec.kind = toy_kind_from_string(ck.meta["dataset"]["kind"].get<std::string>());
        spec.n_labeled = ck.meta["dataset"]["n_labeled"].get<int>();
        spec.n_test = ck.meta["dataset"]["n_test"].get<int>();
        spec.noise = ck.meta["dataset"]["noise"].get<double>();
        spec.seed = ck.meta["dataset"]["seed"].get<std::uint64_t>();
        ToyDataset data = gen_dataset(spec);
        EvalFn eval = [&](const Vec64& p) {
            MlpParams local(model, p);
            EvalPoint e;
            e.loss = forward(local, data.test).loss;
            return e;
        };
        RngState rng(3, 0);
        Direction dir1 = make_direction(ck.params, model.layer_block_sizes(), rng, DirectionNorm::layerwise_norm);
        ScanGrid g = scan_1d(ck.params, dir1, linspace(-1.0, 1.0, 11), eval);
        if (g.center_loss != ck.meta["eval_loss_avg"].get<double>()) fails += " f0-bitexact";
    }

    // A 41 x 41 scan over the toy MLP finishes well inside the budget.
    {
        auto t0 = Clock::now();
        MlpConfig model;
        RngState rng(5, 0);
        MlpParams center = init_params(model, rng);
        ToySpec spec;
        ToyDataset data = gen_dataset(spec);
        EvalFn eval = [&](const Vec64& p) {
            MlpParams local(model, p);
            EvalPoint e;
            e.loss = forward(local, data.test).loss;
            e.acc = classification_accuracy(local, data.test);
            return e;
        };
        for (std::size_t l = 0; l < model.layer_count(); ++l) {
            for (int j = 0; j < model.layer_sizes[l + 1]; ++j) center.bias(l)[j] = 0.05 * (j + 1);
        }
        Direction da = make_direction(center.flat, model.layer_block_sizes(), rng, DirectionNorm::layerwise_norm);
        Direction db = make_direction(center.flat, model.layer_block_sizes(), rng, DirectionNorm::layerwise_norm);
        auto ab = linspace(-1.0, 1.0, 41);
        ScanGrid g = scan_2d(center.flat, da, db, ab, ab, eval, 2);
        if (!(g.loss.size() == 41 && seconds_since(t0) < 60.0)) fails += " mlp-41x41-budget";
    }

    // Projection residual orthogonality.
    {
        RngState rng(404, 0);
        Vec64 center = sample_standard_gaussian(rng, 200);
        Direction d1 = make_direction(center, {200}, rng, DirectionNorm::global_norm);
        Direction d2 = make_direction(center, {200}, rng, DirectionNorm::global_norm);
        double worst = 0.0;
        for (int k = 0; k < 10; ++k) {
            Vec64 ckpt = sample_standard_gaussian(rng, 200);
            auto coords = project_trajectory({ckpt}, center, d1.vector, d2.vector);
            Vec64 residual(200);
            for (std::size_t i = 0; i < 200; ++i) {
                residual[i] =
                    ckpt[i] - center[i] - coords[0].first * d1.vector[i] - coords[0].second * d2.vector[i];
            }
            double s1 = std::max(1.0, norm2(residual) * norm2(d1.vector));
            double s2 = std::max(1.0, norm2(residual) * norm2(d2.vector));
            worst = std::max({worst, std::fabs(dot(residual, d1.vector)) / s1,
                              std::fabs(dot(residual, d2.vector)) / s2});
        }
        if (worst > 1e-10) fails += " projection-orthogonality";
    }

    Outcome out;
    out.pass = fails.empty();
    out.detail = fails.empty() ? "oracle grids exact, f(0) bit-exact, residuals orthogonal" : ("failed:" + fails);
    return out;
}

// --------------------------------------------------------------------------
// criterion 8
// --------------------------------------------------------------------------

int run_cli(const std::string& args) {
    std::string cmd = g_cli_path + " " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
}

// Compare every artifact below the two roots except the volatile timing
// sidecar. Returns a description of the first mismatch, or "".
std::string compare_trees(const std::string& a, const std::string& b) {
    std::vector<std::string> rel;
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
        if (!entry.is_regular_file()) continue;
        std::string r = fs::relative(entry.path(), a).string();
        if (r.find("timing.csv") != std::string::npos) continue;
        rel.push_back(r);
    }
    if (rel.empty()) return "no artifacts under " + a;
    std::sort(rel.begin(), rel.end());
    for (const std::string& r : rel) {
        if (!fs::exists(fs::path(b) / r)) return "missing " + r;
        if (read_text_file((fs::path(a) / r).string()) != read_text_file((fs::path(b) / r).string())) {
            return "differs: " + r;
        }
    }
    return "";
}

Outcome criterion_determinism() {
    std::string fails;
    std::string cfg_dir = fresh_dir("c8-cfg");

    // train
    {
        ExperimentConfig cfg = ExperimentConfig::default_config("toy");
        cfg.seeds = {0, 1};
        cfg.train.epochs = 25;
        cfg.train.metric_every = 5;
        cfg.train.checkpoint_every = 25;
        cfg.train.grid_resolution = 41;
        cfg.dataset.n_test = 120;
        write_text_file(cfg_dir + "/train.json", config_to_json(cfg).dump(2));
        std::string d1 = fresh_dir("c8-train1");
        std::string d2 = fresh_dir("c8-train2");
        if (run_cli("train --config " + cfg_dir + "/train.json --out " + d1) != 0) fails += " train-exit";
        if (run_cli("train --config " + cfg_dir + "/train.json --out " + d2) != 0) fails += " train-exit2";
        std::string diff = compare_trees(d1, d2);
        if (!diff.empty()) fails += " train(" + diff + ")";
    }

    // nqm (one fast cell + sigma_t)
    {
        ExperimentConfig cfg = ExperimentConfig::default_config("nqm");
        cfg.task = "nqm";
        cfg.nqm.grid_lrs = {0.1};
        cfg.nqm.grid_lambdas = {0.9};
        cfg.nqm.grid_a = {2.0};
        cfg.nqm.sigma_t.trials = 500;
        write_text_file(cfg_dir + "/nqm.json", config_to_json(cfg).dump(2));
        std::string d1 = fresh_dir("c8-nqm1");
        std::string d2 = fresh_dir("c8-nqm2");
        if (run_cli("nqm --config " + cfg_dir + "/nqm.json --out " + d1 + " --workers 2") != 0) fails += " nqm-exit";
        if (run_cli("nqm --config " + cfg_dir + "/nqm.json --out " + d2 + " --workers 1") != 0) fails += " nqm-exit2";
        std::string diff = compare_trees(d1, d2);
        if (!diff.empty()) fails += " nqm(" + diff + ")";
    }

    // landscape (checkpoints from a train run)
    {
        ExperimentConfig tcfg = ExperimentConfig::default_config("toy");
        tcfg.seeds = {0};
        tcfg.train.epochs = 20;
        tcfg.train.checkpoint_every = 5;
        tcfg.train.metric_every = 0;
        tcfg.train.grid_resolution = 31;
        tcfg.dataset.n_test = 100;
        std::string tdir = fresh_dir("c8-land-train");
        cmd_train(tcfg, {tdir, 1, false});
        std::string base = tdir + "/train-" + config_hash(tcfg);

        ExperimentConfig cfg = ExperimentConfig::default_config("landscape");
        cfg.task = "landscape";
        for (int e : {5, 10, 15, 20}) {
            cfg.landscape.checkpoints.push_back(base + "/seed0-epoch" + std::to_string(e) + ".ckpt");
        }
        cfg.landscape.points_1d = 11;
        cfg.landscape.points_2d = 9;
        write_text_file(cfg_dir + "/landscape.json", config_to_json(cfg).dump(2));
        std::string d1 = fresh_dir("c8-land1");
        std::string d2 = fresh_dir("c8-land2");
        if (run_cli("landscape --config " + cfg_dir + "/landscape.json --out " + d1 + " --workers 2") != 0) {
            fails += " landscape-exit";
        }
        if (run_cli("landscape --config " + cfg_dir + "/landscape.json --out " + d2 + " --workers 1") != 0) {
            fails += " landscape-exit2";
        }
        std::string diff = compare_trees(d1, d2);
        if (!diff.empty()) fails += " landscape(" + diff + ")";
    }

    // sweep, 1 vs 4 workers
    {
        ExperimentConfig cfg = ExperimentConfig::default_config("sweep");
        cfg.task = "sweep";
        cfg.seeds = {0, 1};
        cfg.train.epochs = 12;
        cfg.train.grid_resolution = 31;
        cfg.dataset.n_test = 60;
        cfg.sweep.decays = {0.9, 0.99};
        cfg.sweep.interval_epochs = {1.0, 2.0};
        write_text_file(cfg_dir + "/sweep.json", config_to_json(cfg).dump(2));
        std::string d1 = fresh_dir("c8-sweep1");
        std::string d2 = fresh_dir("c8-sweep2");
        if (run_cli("sweep --config " + cfg_dir + "/sweep.json --out " + d1 + " --workers 1") != 0) {
            fails += " sweep-exit";
        }
        if (run_cli("sweep --config " + cfg_dir + "/sweep.json --out " + d2 + " --workers 4") != 0) {
            fails += " sweep-exit2";
        }
        std::string diff = compare_trees(d1, d2);
        if (!diff.empty()) fails += " sweep(" + diff + ")";
    }

    // Exit-code contract: 0 success (covered above), 2 config error, 3 runtime.
    {
        std::string bad_dir = fresh_dir("c8-exit");
        write_text_file(cfg_dir + "/bad.json", "{\"task\": \"toy\"}");
        int code = run_cli("train --config " + cfg_dir + "/bad.json --out " + bad_dir);
        if (WEXITSTATUS(code) != 2) fails += " exit-code-config";
        ExperimentConfig cfg = ExperimentConfig::default_config("toy");
        cfg.seeds = {0};
        cfg.train.epochs = 10;
        cfg.optimizer.lr = 1e9;  // diverges immediately
        write_text_file(cfg_dir + "/diverge.json", config_to_json(cfg).dump(2));
        code = run_cli("train --config " + cfg_dir + "/diverge.json --out " + bad_dir);
        if (WEXITSTATUS(code) != 3) fails += " exit-code-runtime";
    }

    Outcome out;
    out.pass = fails.empty();
    out.detail = fails.empty()
                     ? "train/nqm/landscape/sweep rerun byte-identically (timing sidecar excluded); exit codes 0/2/3"
                     : ("failed:" + fails);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    g_cli_path = argc > 1 ? argv[1] : "./walab";

    struct Criterion {
        const char* name;
        std::function<Outcome()> fn;
    };
    const std::vector<Criterion> criteria{
        {"1 nqm variance fixed points", criterion_variance_grid},
        {"2 coupled-sema descent identity", criterion_descent_identity},
        {"3 sigma_T estimator", criterion_sigma_t},
        {"4 mlp gradient correctness", criterion_gradients},
        {"5 averager algebra", criterion_averager_algebra},
        {"6 toy ranking reproduction", criterion_toy_ranking},
        {"7 landscape scanner", criterion_landscape},
        {"8 artifact determinism", criterion_determinism},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        Outcome out;
        try {
            out = c.fn();
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail = std::string("exception: ") + e.what();
        }
        std::printf("[%s] criterion %s: %s\n", out.pass ? "PASS" : "FAIL", c.name, out.detail.c_str());
        std::fflush(stdout);
        if (!out.pass) ++failures;
    }
    if (failures == 0) {
        std::printf("all %zu acceptance criteria passed\n", criteria.size());
    } else {
        std::printf("%d acceptance criteria FAILED\n", failures);
    }
    return failures;
}
