#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "walab/numerics.hpp"
#include "walab/rng.hpp"

namespace walab {

inline constexpr std::int64_t kNqmNeverSwitch = std::numeric_limits<std::int64_t>::max();

// Noisy quadratic model: loss(theta) = 1/2 (theta - c)^T A (theta - c) with a
// fresh c ~ N(0, Sigma) each step. A and Sigma are diagonal, so every
// coordinate evolves independently and the fixed points are per-coordinate.
struct NqmConfig {
    Vec64 a_diag;       // curvature, each > 0
    Vec64 sigma_diag;   // noise variance of c, each >= 0
    double lr = 0.1;    // eta

    // Weight on the NEW iterate in the averaging recursion (the coupled
    // convention): shadow' = lambda * step + (1 - lambda) * shadow. Relates to
    // the averager module's decay-on-old d by lambda = 1 - d.
    double lambda_new = 0.5;

    std::int64_t switch_interval = kNqmNeverSwitch;  // SEMA switch period
    std::int64_t steps = 20000;                      // per-trial horizon
    std::int64_t burn_in = 1000;                     // discarded prefix per trial
    std::int64_t trials = 32;

    double init_scale = 0.0;    // theta_0 = init_scale * ones
    double denom_floor = 1e-9;  // sigma_t denominator guard

    std::size_t dim() const { return a_diag.size(); }

    // Structural checks: shapes, ranges, counts.
    void validate_shapes() const;
    // Structural checks plus stability: eta*a_i < 2 and lambda*eta*a_i < 2.
    void validate() const;
};

enum class NqmMethod { sgd, ema, sema_coupled };

std::string to_string(NqmMethod m);
NqmMethod nqm_method_from_string(const std::string& s);

// Per-coordinate stationary-variance fixed points.
//   V_SGD  = eta*a / (2 - eta*a) * sigma2
//   V_EMA  = lambda/(2-lambda) * (2-lambda-(1-lambda)*eta*a)/(lambda+(1-lambda)*eta*a) * V_SGD
//   V_SEMA = lambda*eta*a / (2 - lambda*eta*a) * sigma2
// v_ema_system re-derives V_EMA by numerically solving the coupled
// (V_SGD, V_EMA, Cov) linear fixed-point system; the closed form must agree
// with it to 1e-12 or analytic_variances throws. v_sema_via_coefs evaluates
// the alternative k * V_EMA product route; both routes are reported.
struct AnalyticVariances {
    Vec64 v_sgd;
    Vec64 v_ema;
    Vec64 v_sema;
    Vec64 v_ema_system;
    Vec64 v_sema_via_coefs;
};

AnalyticVariances analytic_variances(const NqmConfig& config);

// Simulates one chain and returns the iterate trajectory (steps + 1 entries,
// index 0 = initial point). For `ema` the returned iterates are the averaged
// shadow. For `sema_coupled` the switch fires at t % T == 0 with a full-lr
// step. Stability is deliberately not pre-checked here: an unstable config
// raises DivergenceError naming the step once any |theta_i| > 1e12.
std::vector<Vec64> nqm_simulate(const NqmConfig& config, NqmMethod method, RngState& rng);

struct MethodVariance {
    Vec64 analytic;
    Vec64 empirical;
    Vec64 rel_err;
};

// Pooled post-burn-in variance across `trials` independent chains (stream =
// trial index). Per-trial partial sums are merged in trial order, so the
// result is byte-identical for any worker count.
MethodVariance estimate_variance_mc(const NqmConfig& config, NqmMethod method, int workers = 1);

struct VarianceReport {
    MethodVariance sgd;
    MethodVariance ema;
    MethodVariance sema;
    std::vector<bool> ordering_analytic;   // V_SEMA < V_EMA < V_SGD per coordinate
    std::vector<bool> ordering_empirical;
    Vec64 sema_route_rel_diff;             // appendix closed form vs coefficient route
};

VarianceReport nqm_variance_report(const NqmConfig& config, int workers = 1);

// One cell of the verification grid with tau-scaled sample budgets (mixing
// time tau = 1/(lambda*eta*a_min) governs both burn-in and chain length).
NqmConfig nqm_grid_cell(double lr, double lambda_new, double a, double sigma2);

struct SigmaTEstimate {
    double ema_loss_at_t = 0.0;    // E[L(ema shadow at T)]
    double sema_loss_at_2t = 0.0;  // E[L(sema shadow at 2T)]
    double ema_loss_at_2t = 0.0;   // E[L(ema shadow at 2T)]
    double sigma_t = 0.0;
    double std_error = 0.0;        // Monte Carlo SE of sigma_t (delta method)
    std::int64_t trials = 0;
};

// Error-improvement ratio of switching once at T:
//   sigma_T = (E[L(ema_T)] - E[L(sema_2T)]) / (E[L(ema_T)] - E[L(ema_2T)])
// Both branches run the decoupled dynamics (fast SGD chain + averaged shadow)
// from the same initialization and share each trial's noise sequence; the
// SEMA branch assigns fast := shadow at multiples of T. Losses are evaluated
// on the shadow at the mean optimum, L(theta) = 1/2 sum_i a_i theta_i^2 (the
// tr(A Sigma)/2 offset cancels in the ratio). With T = never-switch the two
// branches are bit-identical and sigma_T = 1 exactly.
SigmaTEstimate estimate_sigma_t(const NqmConfig& config, std::uint64_t seed = 0);

}  // namespace walab
