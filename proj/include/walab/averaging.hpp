#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "walab/numerics.hpp"

namespace walab {

enum class AvgMethod { none, ema, sema, swa, lookahead };

std::string to_string(AvgMethod m);
AvgMethod avg_method_from_string(const std::string& s);

// SEMA comes in two forms. `decoupled` is the practical algorithm: the fast
// model is optimized normally, the shadow tracks it, and the switch assigns
// fast := shadow every T iterations. `coupled` folds optimizer and average
// into a single iterate (shadow' = shadow - (1-d)*lr*grad(shadow), full-lr
// step when the switch fires) and exists for theory verification.
enum class SemaMode { decoupled, coupled };

std::string to_string(SemaMode m);
SemaMode sema_mode_from_string(const std::string& s);

// Sentinel switch interval meaning "never switch".
inline constexpr std::int64_t kNeverSwitch = std::numeric_limits<std::int64_t>::max();

struct AveragerConfig {
    AvgMethod method = AvgMethod::none;

    // Weight on the OLD average in the update shadow' = (1-d)*fast + d*shadow.
    // This is the pseudocode momentum m; reported coefficients (0.999, 0.9999)
    // drop in verbatim. The complementary weight on the new iterate is 1-d.
    double decay = 0.999;

    // Iterations between SEMA switches (kNeverSwitch disables switching).
    std::int64_t switch_interval = kNeverSwitch;
    SemaMode sema_mode = SemaMode::decoupled;

    // SWA: snapshots are collected when the step counter hits these values
    // (ascending). The usual schedule is built by swa_schedule() below.
    int swa_snapshot_count = 5;
    std::vector<std::int64_t> swa_snapshot_steps;

    // Lookahead: slow' = slow + la_alpha * (fast - slow) every la_k steps,
    // then fast := slow'.
    double la_alpha = 0.5;
    std::int64_t la_k = 100;

    void validate() const;
};

// swa_snapshot_count snapshot steps, equally spaced over the last `tail_fraction`
// of total_steps and ending at total_steps.
std::vector<std::int64_t> swa_schedule(std::int64_t total_steps, int snapshot_count, double tail_fraction = 0.2);

struct AveragerState {
    Vec64 shadow;                     // EMA / SEMA slow weights
    std::int64_t t = 0;               // observe count
    std::vector<Vec64> swa_snapshots;
    Vec64 la_slow;
    std::int64_t la_counter = 0;
};

// shadow = la_slow = params, t = 0. Throws ConfigError on bad config ranges.
AveragerState averager_init(const AveragerConfig& config, const Vec64& params);

// Call once per optimizer step, after the step. EMA/SEMA fold fast_params into
// the shadow; SWA snapshots on schedule; Lookahead counts.
void averager_observe(AveragerState& state, const AveragerConfig& config, const Vec64& fast_params);

// Call at iteration boundaries (after observe; at epoch ends, after the eval).
// Fires the SEMA switch (fast := shadow) at t % T == 0 and the Lookahead
// slow-weight update at la_counter == la_k. Returns true if fast_params moved.
bool averager_maybe_switch(AveragerState& state, const AveragerConfig& config, Vec64& fast_params);

// One coupled-mode SEMA step: the gradient is evaluated at the shadow itself.
//   non-switch: shadow' = shadow - (1-d) * lr * grad_fn(shadow)
//   switch    : shadow' = shadow -         lr * grad_fn(shadow)
// Realized through the intermediate iterate theta' = shadow - lr * grad.
void coupled_sema_step(AveragerState& state, const AveragerConfig& config,
                       const std::function<Vec64(const Vec64&)>& grad_fn, double lr);

// The parameters the method reports for evaluation. Never mutates state.
Vec64 averager_eval_params(const AveragerState& state, const AveragerConfig& config, const Vec64& fast_params);

}  // namespace walab
