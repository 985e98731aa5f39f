#include <doctest.h>

#include <cmath>
#include <cstring>

#include "walab/nqm.hpp"

using namespace walab;

namespace {

NqmConfig small_cfg() {
    NqmConfig cfg;
    cfg.a_diag = {1.0};
    cfg.sigma_diag = {1.0};
    cfg.lr = 0.1;
    cfg.lambda_new = 0.5;
    return cfg;
}

// Closed-form shadow of the decoupled (fast, shadow) pair with no noise:
//   shadow_t = s^t * s0 + lambda * f0 * r * (r^t - s^t) / (r - s)
// where r = 1 - eta*a and s = 1 - lambda. Valid for r != s.
double shadow_closed_form(double r, double s, double lambda, double f0, double s0, std::int64_t t) {
    return std::pow(s, static_cast<double>(t)) * s0 +
           lambda * f0 * r * (std::pow(r, static_cast<double>(t)) - std::pow(s, static_cast<double>(t))) /
               (r - s);
}

}  // namespace

// Frozen closed-form evaluations of the fixed-point formulas at
// eta = 0.1, a = 1, sigma^2 = 1, lambda = 0.5:
//   V_SGD  = 0.1/1.9, V_EMA = (0.5/1.5)*(1.45/0.55)*V_SGD = 0.0725/1.5675,
//   V_SEMA = 0.05/1.95.
TEST_CASE("analytic variances match hand-evaluated closed forms") {
    AnalyticVariances av = analytic_variances(small_cfg());
    CHECK(av.v_sgd[0] == doctest::Approx(0.1 / 1.9).epsilon(1e-14));
    CHECK(av.v_sgd[0] == doctest::Approx(0.05263157894736842).epsilon(1e-12));
    CHECK(av.v_ema[0] == doctest::Approx(0.0725 / 1.5675).epsilon(1e-14));
    CHECK(av.v_ema[0] == doctest::Approx(0.046251993620414676).epsilon(1e-12));
    CHECK(av.v_sema[0] == doctest::Approx(0.05 / 1.95).epsilon(1e-14));
    CHECK(av.v_sema[0] == doctest::Approx(0.02564102564102564).epsilon(1e-12));
}

TEST_CASE("closed form agrees with the 3-equation fixed-point solve") {
    for (double lr : {0.01, 0.05, 0.1}) {
        for (double lam : {0.1, 0.5, 0.9}) {
            for (double a : {0.5, 1.0, 2.0}) {
                NqmConfig cfg;
                cfg.a_diag = {a};
                cfg.sigma_diag = {1.0};
                cfg.lr = lr;
                cfg.lambda_new = lam;
                AnalyticVariances av = analytic_variances(cfg);
                CHECK(std::fabs(av.v_ema[0] - av.v_ema_system[0]) <= 1e-12 * av.v_ema[0]);
                // Both SEMA routes are algebraically identical.
                CHECK(std::fabs(av.v_sema[0] - av.v_sema_via_coefs[0]) <= 1e-12 * av.v_sema[0]);
                // Prop-1 ordering for every eta > 0.
                CHECK(av.v_sema[0] < av.v_ema[0]);
                CHECK(av.v_ema[0] < av.v_sgd[0]);
            }
        }
    }
}

TEST_CASE("noiseless simulation contracts to zero") {
    NqmConfig cfg = small_cfg();
    cfg.sigma_diag = {0.0};
    cfg.init_scale = 1.0;
    cfg.steps = 600;
    cfg.burn_in = 0;
    RngState rng(1, 0);
    for (NqmMethod m : {NqmMethod::sgd, NqmMethod::ema, NqmMethod::sema_coupled}) {
        auto traj = nqm_simulate(cfg, m, rng);
        CHECK(traj.size() == 601);
        CHECK(std::fabs(traj.back()[0]) < 1e-10);
    }
}

TEST_CASE("simulation is deterministic under a fixed seed") {
    NqmConfig cfg = small_cfg();
    cfg.steps = 200;
    cfg.burn_in = 0;
    RngState r1(9, 2), r2(9, 2);
    auto t1 = nqm_simulate(cfg, NqmMethod::sema_coupled, r1);
    auto t2 = nqm_simulate(cfg, NqmMethod::sema_coupled, r2);
    for (std::size_t i = 0; i < t1.size(); ++i) {
        REQUIRE(std::memcmp(t1[i].data(), t2[i].data(), sizeof(double)) == 0);
    }
}

// |1 - eta*a| > 1 diverges geometrically; the simulator names the step.
TEST_CASE("unstable step size raises divergence naming the step") {
    NqmConfig cfg;
    cfg.a_diag = {1.0};
    cfg.sigma_diag = {0.0};
    cfg.lr = 2.5;
    cfg.lambda_new = 0.9;
    cfg.init_scale = 1.0;
    cfg.steps = 500;
    cfg.burn_in = 0;
    RngState rng(0, 0);
    try {
        nqm_simulate(cfg, NqmMethod::sgd, rng);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.step > 0);
        CHECK(std::string(e.what()).find(std::to_string(e.step)) != std::string::npos);
    }
    // The Monte Carlo front ends reject the same config up front.
    cfg.burn_in = 100;
    cfg.steps = 20000;
    CHECK_THROWS_AS(estimate_variance_mc(cfg, NqmMethod::sgd), DomainError);
    CHECK_THROWS_AS(analytic_variances(cfg), DomainError);
}

TEST_CASE("monte carlo variance matches the closed forms on one cell") {
    NqmConfig cfg = nqm_grid_cell(0.1, 0.5, 1.0, 1.0);
    CHECK(cfg.trials * (cfg.steps - cfg.burn_in) >= 1000000);
    VarianceReport rep = nqm_variance_report(cfg, 2);
    CHECK(rep.sgd.rel_err[0] < 0.03);
    CHECK(rep.ema.rel_err[0] < 0.03);
    CHECK(rep.sema.rel_err[0] < 0.03);
    CHECK(rep.ordering_analytic[0]);
    CHECK(rep.ordering_empirical[0]);
    CHECK(rep.sema_route_rel_diff[0] < 1e-12);
}

TEST_CASE("monte carlo estimate is byte-identical for any worker count") {
    NqmConfig cfg = small_cfg();
    cfg.trials = 8;
    cfg.burn_in = 100;
    cfg.steps = 10100 + 100;
    MethodVariance a = estimate_variance_mc(cfg, NqmMethod::ema, 1);
    MethodVariance b = estimate_variance_mc(cfg, NqmMethod::ema, 4);
    CHECK(std::memcmp(a.empirical.data(), b.empirical.data(), sizeof(double)) == 0);
}

TEST_CASE("zero noise gives exactly zero empirical variance") {
    NqmConfig cfg = small_cfg();
    cfg.sigma_diag = {0.0};
    cfg.trials = 2;
    cfg.burn_in = 10;
    cfg.steps = 10020;
    MethodVariance mv = estimate_variance_mc(cfg, NqmMethod::sgd);
    CHECK(mv.empirical[0] == 0.0);
}

TEST_CASE("variance mc precondition: enough post-burn-in samples") {
    NqmConfig cfg = small_cfg();
    cfg.trials = 4;
    cfg.burn_in = 100;
    cfg.steps = 5000;
    CHECK_THROWS_AS(estimate_variance_mc(cfg, NqmMethod::sgd), UsageError);
}

// Deterministic sigma_T against the independent splice of closed forms.
TEST_CASE("sigma_t: noiseless estimate matches the closed-form oracle to 1e-10") {
    NqmConfig cfg;
    cfg.a_diag = {1.8, 1.5};
    cfg.sigma_diag = {0.0, 0.0};
    cfg.lr = 1.0;
    cfg.lambda_new = 0.5;
    cfg.switch_interval = 10;
    cfg.steps = 20;
    cfg.burn_in = 0;
    cfg.trials = 100;
    cfg.init_scale = 1.0;

    SigmaTEstimate est = estimate_sigma_t(cfg);

    const double lam = cfg.lambda_new;
    const double s = 1.0 - lam;
    const std::int64_t T = cfg.switch_interval;
    double ema_T = 0.0, ema_2T = 0.0, sema_2T = 0.0;
    for (std::size_t i = 0; i < cfg.a_diag.size(); ++i) {
        double r = 1.0 - cfg.lr * cfg.a_diag[i];
        double b0 = cfg.init_scale;
        double sh_T = shadow_closed_form(r, s, lam, b0, b0, T);
        double sh_2T = shadow_closed_form(r, s, lam, b0, b0, 2 * T);
        double spliced = shadow_closed_form(r, s, lam, sh_T, sh_T, T);  // restart from the switch
        ema_T += 0.5 * cfg.a_diag[i] * sh_T * sh_T;
        ema_2T += 0.5 * cfg.a_diag[i] * sh_2T * sh_2T;
        sema_2T += 0.5 * cfg.a_diag[i] * spliced * spliced;
    }
    double oracle = (ema_T - sema_2T) / (ema_T - ema_2T);
    CHECK(std::fabs(est.sigma_t - oracle) < 1e-10);
    CHECK(est.std_error == 0.0);
}

TEST_CASE("sigma_t equals one exactly when the switch never fires") {
    NqmConfig cfg = small_cfg();
    cfg.switch_interval = kNqmNeverSwitch;
    cfg.init_scale = 2.0;
    cfg.trials = 200;
    // 2T <= steps cannot hold for the sentinel; emulate T = infinity with a
    // switch interval beyond the horizon.
    cfg.switch_interval = 1000;
    cfg.steps = 2000;
    cfg.burn_in = 0;
    SigmaTEstimate est = estimate_sigma_t(cfg);
    CHECK(est.sigma_t == 1.0);
    CHECK(est.sema_loss_at_2t == est.ema_loss_at_2t);
}

TEST_CASE("sigma_t preconditions and floor") {
    NqmConfig cfg = small_cfg();
    cfg.switch_interval = 50;
    cfg.steps = 80;  // 2T > steps
    cfg.burn_in = 0;
    cfg.trials = 200;
    CHECK_THROWS_AS(estimate_sigma_t(cfg), UsageError);

    cfg.steps = 200;
    cfg.trials = 10;
    CHECK_THROWS_AS(estimate_sigma_t(cfg), UsageError);

    // Zero init and zero noise: all losses vanish, denominator under the floor.
    cfg.trials = 100;
    cfg.sigma_diag = {0.0};
    cfg.init_scale = 0.0;
    CHECK_THROWS_AS(estimate_sigma_t(cfg), DomainError);
}

TEST_CASE("sigma_t noisy default setting reports sigma > 1") {
    NqmConfig cfg;
    cfg.a_diag = {2.0, 1.9, 1.8};
    cfg.sigma_diag = {1e-3, 1e-3, 1e-3};
    cfg.lr = 0.99;
    cfg.lambda_new = 0.5;
    cfg.switch_interval = 15;
    cfg.steps = 30;
    cfg.burn_in = 0;
    cfg.trials = 4000;
    cfg.init_scale = 1.0;
    SigmaTEstimate est = estimate_sigma_t(cfg);
    CHECK(est.sigma_t > 1.0);
    CHECK(est.std_error < 0.1 * (est.sigma_t - 1.0));
}
