#include "walab/config.hpp"

#include <cstdio>
#include <cstdlib>

#include "walab/landscape.hpp"

namespace walab {

NqmSection::NqmSection() {
    // Frozen sigma_T default: oscillatory fast dynamics (eta*a near 2) where
    // the averaged shadow beats the raw iterate, so one switch visibly helps;
    // mild noise keeps the estimate honest without drowning the signal.
    sigma_t.a_diag = {2.0, 1.9, 1.8};
    sigma_t.sigma_diag = {1e-3, 1e-3, 1e-3};
    sigma_t.lr = 0.99;
    sigma_t.lambda_new = 0.5;
    sigma_t.switch_interval = 15;
    sigma_t.steps = 30;
    sigma_t.burn_in = 0;
    sigma_t.trials = 10000;
    sigma_t.init_scale = 1.0;

    switch_effect = nqm_grid_cell(0.1, 0.5, 1.0, 1.0);
    switch_effect.switch_interval = 100;
}

ExperimentConfig ExperimentConfig::default_config(const std::string& task) {
    ExperimentConfig cfg;
    cfg.task = task;
    cfg.averager.method = AvgMethod::sema;
    cfg.averager.decay = 0.99;
    cfg.averager.switch_interval = 20;
    return cfg;
}

void ExperimentConfig::validate() const {
    if (task != "toy" && task != "nqm" && task != "landscape" && task != "sweep") {
        throw ConfigError("config.task: unknown task '" + task + "'");
    }
    if (seeds.empty()) throw ConfigError("config.seeds: need at least one seed");
    model.validate();
    averager.validate();
    dataset.validate();
    if (optimizer.kind != "sgd" && optimizer.kind != "adam") {
        throw ConfigError("config.optimizer.kind: unknown optimizer '" + optimizer.kind + "'");
    }
    if (!(optimizer.lr > 0.0)) throw ConfigError("config.optimizer.lr: must be > 0");
    if (train.epochs < 1) throw ConfigError("config.train.epochs: must be >= 1");
    if (task == "nqm") {
        nqm.sigma_t.validate_shapes();
        if (nqm.grid_lrs.empty() || nqm.grid_lambdas.empty() || nqm.grid_a.empty()) {
            throw ConfigError("config.nqm: grid axes must be non-empty");
        }
    }
    if (task == "sweep") {
        if (sweep.decays.empty() || sweep.interval_epochs.empty()) {
            throw ConfigError("config.sweep: decay and interval lists must be non-empty");
        }
    }
    (void)direction_norm_from_string(landscape.normalization);
}

namespace {

Json averager_to_json(const AveragerConfig& a) {
    return Json{{"method", to_string(a.method)},
                {"decay", a.decay},
                {"switch_interval", a.switch_interval},
                {"sema_mode", to_string(a.sema_mode)},
                {"swa_snapshot_count", a.swa_snapshot_count},
                {"swa_snapshot_steps", a.swa_snapshot_steps},
                {"la_alpha", a.la_alpha},
                {"la_k", a.la_k}};
}

AveragerConfig averager_from_json(const Json& j) {
    AveragerConfig a;
    a.method = avg_method_from_string(j.at("method").get<std::string>());
    a.decay = j.at("decay").get<double>();
    if (j.at("switch_interval").is_string()) {
        if (j.at("switch_interval").get<std::string>() != "never") {
            throw ConfigError("averager.switch_interval: expected a count or \"never\"");
        }
        a.switch_interval = kNeverSwitch;
    } else {
        a.switch_interval = j.at("switch_interval").get<std::int64_t>();
    }
    a.sema_mode = sema_mode_from_string(j.at("sema_mode").get<std::string>());
    a.swa_snapshot_count = j.at("swa_snapshot_count").get<int>();
    a.swa_snapshot_steps = j.at("swa_snapshot_steps").get<std::vector<std::int64_t>>();
    a.la_alpha = j.at("la_alpha").get<double>();
    a.la_k = j.at("la_k").get<std::int64_t>();
    return a;
}

Json nqm_config_to_json(const NqmConfig& n) {
    return Json{{"a_diag", n.a_diag},
                {"sigma_diag", n.sigma_diag},
                {"lr", n.lr},
                {"lambda_new", n.lambda_new},
                {"switch_interval", n.switch_interval},
                {"steps", n.steps},
                {"burn_in", n.burn_in},
                {"trials", n.trials},
                {"init_scale", n.init_scale},
                {"denom_floor", n.denom_floor}};
}

NqmConfig nqm_config_from_json(const Json& j) {
    NqmConfig n;
    n.a_diag = j.at("a_diag").get<Vec64>();
    n.sigma_diag = j.at("sigma_diag").get<Vec64>();
    n.lr = j.at("lr").get<double>();
    n.lambda_new = j.at("lambda_new").get<double>();
    n.switch_interval = j.at("switch_interval").get<std::int64_t>();
    n.steps = j.at("steps").get<std::int64_t>();
    n.burn_in = j.at("burn_in").get<std::int64_t>();
    n.trials = j.at("trials").get<std::int64_t>();
    n.init_scale = j.at("init_scale").get<double>();
    n.denom_floor = j.at("denom_floor").get<double>();
    return n;
}

}  // namespace

Json config_to_json(const ExperimentConfig& cfg) {
    Json j;
    j["task"] = cfg.task;
    j["seeds"] = cfg.seeds;
    j["output_dir"] = cfg.output_dir;
    j["model"] = Json{{"layer_sizes", cfg.model.layer_sizes},
                      {"activation", to_string(cfg.model.activation)},
                      {"loss", to_string(cfg.model.loss)}};
    j["optimizer"] = Json{{"kind", cfg.optimizer.kind},       {"lr", cfg.optimizer.lr},
                          {"momentum", cfg.optimizer.momentum}, {"weight_decay", cfg.optimizer.weight_decay},
                          {"beta1", cfg.optimizer.beta1},     {"beta2", cfg.optimizer.beta2},
                          {"eps", cfg.optimizer.eps}};
    j["averager"] = averager_to_json(cfg.averager);
    j["dataset"] = Json{{"kind", to_string(cfg.dataset.kind)},
                        {"n_labeled", cfg.dataset.n_labeled},
                        {"n_test", cfg.dataset.n_test},
                        {"noise", cfg.dataset.noise},
                        {"seed", cfg.dataset.seed}};
    j["train"] = Json{{"epochs", cfg.train.epochs},
                      {"batch_size", cfg.train.batch_size},
                      {"metric_every", cfg.train.metric_every},
                      {"checkpoint_every", cfg.train.checkpoint_every},
                      {"width_band", cfg.train.width_band},
                      {"ece_bins", cfg.train.ece_bins},
                      {"grid_resolution", cfg.train.grid_resolution}};
    j["nqm"] = Json{{"run_grid", cfg.nqm.run_grid},
                    {"grid_lrs", cfg.nqm.grid_lrs},
                    {"grid_lambdas", cfg.nqm.grid_lambdas},
                    {"grid_a", cfg.nqm.grid_a},
                    {"grid_sigma2", cfg.nqm.grid_sigma2},
                    {"run_sigma_t", cfg.nqm.run_sigma_t},
                    {"sigma_t", nqm_config_to_json(cfg.nqm.sigma_t)},
                    {"run_switch_effect", cfg.nqm.run_switch_effect},
                    {"switch_effect", nqm_config_to_json(cfg.nqm.switch_effect)}};
    j["landscape"] = Json{{"checkpoints", cfg.landscape.checkpoints},
                          {"center_index", cfg.landscape.center_index},
                          {"normalization", cfg.landscape.normalization},
                          {"range", cfg.landscape.range},
                          {"points_1d", cfg.landscape.points_1d},
                          {"points_2d", cfg.landscape.points_2d},
                          {"direction_seed", cfg.landscape.direction_seed},
                          {"pca_plane", cfg.landscape.pca_plane},
                          {"scan_train", cfg.landscape.scan_train},
                          {"scan_test", cfg.landscape.scan_test}};
    j["sweep"] = Json{{"method", cfg.sweep.method},
                      {"decays", cfg.sweep.decays},
                      {"interval_epochs", cfg.sweep.interval_epochs},
                      {"max_cells", cfg.sweep.max_cells}};
    return j;
}

ExperimentConfig config_from_json(const Json& j) {
    ExperimentConfig cfg;
    try {
        cfg.task = j.at("task").get<std::string>();
        cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        cfg.output_dir = j.value("output_dir", std::string{});
        const Json& m = j.at("model");
        cfg.model.layer_sizes = m.at("layer_sizes").get<std::vector<int>>();
        cfg.model.activation = activation_from_string(m.at("activation").get<std::string>());
        cfg.model.loss = loss_from_string(m.at("loss").get<std::string>());
        const Json& o = j.at("optimizer");
        cfg.optimizer.kind = o.at("kind").get<std::string>();
        cfg.optimizer.lr = o.at("lr").get<double>();
        cfg.optimizer.momentum = o.at("momentum").get<double>();
        cfg.optimizer.weight_decay = o.at("weight_decay").get<double>();
        cfg.optimizer.beta1 = o.at("beta1").get<double>();
        cfg.optimizer.beta2 = o.at("beta2").get<double>();
        cfg.optimizer.eps = o.at("eps").get<double>();
        cfg.averager = averager_from_json(j.at("averager"));
        const Json& d = j.at("dataset");
        cfg.dataset.kind = toy_kind_from_string(d.at("kind").get<std::string>());
        cfg.dataset.n_labeled = d.at("n_labeled").get<int>();
        cfg.dataset.n_test = d.at("n_test").get<int>();
        cfg.dataset.noise = d.at("noise").get<double>();
        cfg.dataset.seed = d.at("seed").get<std::uint64_t>();
        const Json& t = j.at("train");
        cfg.train.epochs = t.at("epochs").get<int>();
        cfg.train.batch_size = t.at("batch_size").get<int>();
        cfg.train.metric_every = t.at("metric_every").get<int>();
        cfg.train.checkpoint_every = t.at("checkpoint_every").get<int>();
        cfg.train.width_band = t.at("width_band").get<double>();
        cfg.train.ece_bins = t.at("ece_bins").get<int>();
        cfg.train.grid_resolution = t.at("grid_resolution").get<int>();
        const Json& n = j.at("nqm");
        cfg.nqm.run_grid = n.at("run_grid").get<bool>();
        cfg.nqm.grid_lrs = n.at("grid_lrs").get<std::vector<double>>();
        cfg.nqm.grid_lambdas = n.at("grid_lambdas").get<std::vector<double>>();
        cfg.nqm.grid_a = n.at("grid_a").get<std::vector<double>>();
        cfg.nqm.grid_sigma2 = n.at("grid_sigma2").get<double>();
        cfg.nqm.run_sigma_t = n.at("run_sigma_t").get<bool>();
        cfg.nqm.sigma_t = nqm_config_from_json(n.at("sigma_t"));
        cfg.nqm.run_switch_effect = n.at("run_switch_effect").get<bool>();
        cfg.nqm.switch_effect = nqm_config_from_json(n.at("switch_effect"));
        const Json& l = j.at("landscape");
        cfg.landscape.checkpoints = l.at("checkpoints").get<std::vector<std::string>>();
        cfg.landscape.center_index = l.at("center_index").get<int>();
        cfg.landscape.normalization = l.at("normalization").get<std::string>();
        cfg.landscape.range = l.at("range").get<double>();
        cfg.landscape.points_1d = l.at("points_1d").get<int>();
        cfg.landscape.points_2d = l.at("points_2d").get<int>();
        cfg.landscape.direction_seed = l.at("direction_seed").get<std::uint64_t>();
        cfg.landscape.pca_plane = l.at("pca_plane").get<bool>();
        cfg.landscape.scan_train = l.at("scan_train").get<bool>();
        cfg.landscape.scan_test = l.at("scan_test").get<bool>();
        const Json& s = j.at("sweep");
        cfg.sweep.method = s.at("method").get<std::string>();
        cfg.sweep.decays = s.at("decays").get<std::vector<double>>();
        cfg.sweep.interval_epochs = s.at("interval_epochs").get<std::vector<double>>();
        cfg.sweep.max_cells = s.at("max_cells").get<int>();
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

std::string config_hash(const ExperimentConfig& cfg) {
    Json j = config_to_json(cfg);
    j.erase("output_dir");
    j.erase("seeds");
    const std::string canon = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

void apply_override(Json& doc, const std::string& assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("--set expects key=value, got '" + assignment + "'");
    }
    std::string key = assignment.substr(0, eq);
    std::string value = assignment.substr(eq + 1);
    std::string pointer = "/";
    for (char c : key) pointer += (c == '.') ? '/' : c;
    Json::json_pointer ptr(pointer);
    if (!doc.contains(ptr)) {
        throw ConfigError("--set: no config field at '" + key + "'");
    }
    Json parsed = Json::parse(value, nullptr, false);
    if (parsed.is_discarded()) parsed = value;  // plain string
    doc[ptr] = parsed;
}

std::string resolve_output_dir(const ExperimentConfig& cfg, const std::string& cli_out) {
    if (!cli_out.empty()) return cli_out;
    if (!cfg.output_dir.empty()) return cfg.output_dir;
    if (const char* env = std::getenv(kOutputRootEnv); env != nullptr && env[0] != '\0') return env;
    return "out";
}

}  // namespace walab
