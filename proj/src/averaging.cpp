#include "walab/averaging.hpp"

#include <algorithm>

namespace walab {

std::string to_string(AvgMethod m) {
    switch (m) {
        case AvgMethod::none: return "none";
        case AvgMethod::ema: return "ema";
        case AvgMethod::sema: return "sema";
        case AvgMethod::swa: return "swa";
        case AvgMethod::lookahead: return "lookahead";
    }
    return "?";
}

AvgMethod avg_method_from_string(const std::string& s) {
    if (s == "none") return AvgMethod::none;
    if (s == "ema") return AvgMethod::ema;
    if (s == "sema") return AvgMethod::sema;
    if (s == "swa") return AvgMethod::swa;
    if (s == "lookahead") return AvgMethod::lookahead;
    throw ConfigError("unknown averaging method: " + s);
}

std::string to_string(SemaMode m) { return m == SemaMode::decoupled ? "decoupled" : "coupled"; }

SemaMode sema_mode_from_string(const std::string& s) {
    if (s == "decoupled") return SemaMode::decoupled;
    if (s == "coupled") return SemaMode::coupled;
    throw ConfigError("unknown sema mode: " + s);
}

void AveragerConfig::validate() const {
    if (decay < 0.0 || decay >= 1.0) throw ConfigError("averager: decay must be in [0, 1)");
    if (switch_interval < 1) throw ConfigError("averager: switch_interval must be >= 1");
    if (swa_snapshot_count < 1) throw ConfigError("averager: swa_snapshot_count must be >= 1");
    if (!(la_alpha > 0.0 && la_alpha <= 1.0)) throw ConfigError("averager: la_alpha must be in (0, 1]");
    if (la_k < 1) throw ConfigError("averager: la_k must be >= 1");
    if (!std::is_sorted(swa_snapshot_steps.begin(), swa_snapshot_steps.end())) {
        throw ConfigError("averager: swa_snapshot_steps must be ascending");
    }
}

std::vector<std::int64_t> swa_schedule(std::int64_t total_steps, int snapshot_count, double tail_fraction) {
    if (total_steps < 1 || snapshot_count < 1) throw ConfigError("swa_schedule: bad arguments");
    std::vector<std::int64_t> steps;
    auto first = static_cast<std::int64_t>(static_cast<double>(total_steps) * (1.0 - tail_fraction)) + 1;
    first = std::max<std::int64_t>(1, first);
    if (snapshot_count == 1) return {total_steps};
    double span = static_cast<double>(total_steps - first);
    for (int i = 0; i < snapshot_count; ++i) {
        auto s = first + static_cast<std::int64_t>(span * i / (snapshot_count - 1));
        if (steps.empty() || s > steps.back()) steps.push_back(s);
    }
    if (steps.back() != total_steps) steps.back() = total_steps;
    return steps;
}

AveragerState averager_init(const AveragerConfig& config, const Vec64& params) {
    config.validate();
    AveragerState state;
    state.shadow = params;
    state.la_slow = params;
    return state;
}

void averager_observe(AveragerState& state, const AveragerConfig& config, const Vec64& fast_params) {
    require_same_length(state.shadow, fast_params, "averager_observe");
    state.t += 1;
    switch (config.method) {
        case AvgMethod::ema:
        case AvgMethod::sema: {
            const double d = config.decay;
            for (std::size_t i = 0; i < state.shadow.size(); ++i) {
                state.shadow[i] = (1.0 - d) * fast_params[i] + d * state.shadow[i];
            }
            break;
        }
        case AvgMethod::swa:
            if (std::binary_search(config.swa_snapshot_steps.begin(), config.swa_snapshot_steps.end(), state.t)) {
                state.swa_snapshots.push_back(fast_params);
            }
            break;
        case AvgMethod::lookahead:
            state.la_counter += 1;
            break;
        case AvgMethod::none:
            break;
    }
}

bool averager_maybe_switch(AveragerState& state, const AveragerConfig& config, Vec64& fast_params) {
    require_same_length(state.shadow, fast_params, "averager_maybe_switch");
    if (config.method == AvgMethod::sema && config.sema_mode == SemaMode::decoupled) {
        if (state.t > 0 && state.t % config.switch_interval == 0) {
            fast_params = state.shadow;
            return true;
        }
    } else if (config.method == AvgMethod::lookahead) {
        if (state.la_counter >= config.la_k) {
            for (std::size_t i = 0; i < state.la_slow.size(); ++i) {
                state.la_slow[i] += config.la_alpha * (fast_params[i] - state.la_slow[i]);
            }
            fast_params = state.la_slow;
            state.la_counter = 0;
            return true;
        }
    }
    return false;
}

void coupled_sema_step(AveragerState& state, const AveragerConfig& config,
                       const std::function<Vec64(const Vec64&)>& grad_fn, double lr) {
    if (config.method != AvgMethod::sema || config.sema_mode != SemaMode::coupled) {
        throw UsageError("coupled_sema_step: config is not coupled-mode SEMA");
    }
    Vec64 grad = grad_fn(state.shadow);
    require_same_length(state.shadow, grad, "coupled_sema_step");
    state.t += 1;
    const bool switching = (state.t % config.switch_interval == 0);
    const double new_weight = 1.0 - config.decay;
    for (std::size_t i = 0; i < state.shadow.size(); ++i) {
        double intermediate = state.shadow[i] - lr * grad[i];
        state.shadow[i] = switching ? intermediate
                                    : new_weight * intermediate + config.decay * state.shadow[i];
    }
}

Vec64 averager_eval_params(const AveragerState& state, const AveragerConfig& config, const Vec64& fast_params) {
    switch (config.method) {
        case AvgMethod::ema:
        case AvgMethod::sema:
            return state.shadow;
        case AvgMethod::swa: {
            if (state.swa_snapshots.empty()) return fast_params;
            Vec64 mean(state.swa_snapshots.front().size(), 0.0);
            for (const Vec64& snap : state.swa_snapshots) {
                for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += snap[i];
            }
            const double inv = 1.0 / static_cast<double>(state.swa_snapshots.size());
            for (double& v : mean) v *= inv;
            return mean;
        }
        case AvgMethod::lookahead:
            return state.la_slow;
        case AvgMethod::none:
            return fast_params;
    }
    return fast_params;
}

}  // namespace walab
