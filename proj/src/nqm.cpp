#include "walab/nqm.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "walab/parallel.hpp"

namespace walab {

void NqmConfig::validate_shapes() const {
    if (a_diag.empty()) throw ConfigError("nqm: a_diag must be non-empty");
    require_same_length(a_diag, sigma_diag, "nqm config");
    if (!(lr > 0.0)) throw ConfigError("nqm: lr must be > 0");
    if (!(lambda_new > 0.0 && lambda_new < 1.0)) throw ConfigError("nqm: lambda must be in (0, 1)");
    if (switch_interval < 1) throw ConfigError("nqm: switch_interval must be >= 1");
    if (steps < 1 || burn_in < 0 || burn_in >= steps) throw ConfigError("nqm: need 0 <= burn_in < steps");
    if (trials < 1) throw ConfigError("nqm: trials must be >= 1");
    for (std::size_t i = 0; i < a_diag.size(); ++i) {
        if (!(a_diag[i] > 0.0)) throw ConfigError("nqm: a_diag entries must be > 0");
        if (sigma_diag[i] < 0.0) throw ConfigError("nqm: sigma_diag entries must be >= 0");
    }
}

void NqmConfig::validate() const {
    validate_shapes();
    for (std::size_t i = 0; i < a_diag.size(); ++i) {
        if (!(lr * a_diag[i] < 2.0)) {
            throw DomainError("nqm: SGD stability violated (eta*a = " + std::to_string(lr * a_diag[i]) +
                              " >= 2) at coordinate " + std::to_string(i));
        }
        if (!(lambda_new * lr * a_diag[i] < 2.0)) {
            throw DomainError("nqm: SEMA stability violated at coordinate " + std::to_string(i));
        }
    }
}

std::string to_string(NqmMethod m) {
    switch (m) {
        case NqmMethod::sgd: return "sgd";
        case NqmMethod::ema: return "ema";
        case NqmMethod::sema_coupled: return "sema_coupled";
    }
    return "?";
}

NqmMethod nqm_method_from_string(const std::string& s) {
    if (s == "sgd") return NqmMethod::sgd;
    if (s == "ema") return NqmMethod::ema;
    if (s == "sema_coupled") return NqmMethod::sema_coupled;
    throw ConfigError("unknown nqm method: " + s);
}

namespace {

constexpr double kDivergenceBound = 1e12;

inline double sample_noise(const NqmConfig& config, RngState& rng, std::size_t i) {
    double s2 = config.sigma_diag[i];
    return s2 == 0.0 ? 0.0 : std::sqrt(s2) * rng.next_gaussian();
}

void check_divergence(const Vec64& theta, std::int64_t step) {
    for (double v : theta) {
        if (!(std::fabs(v) <= kDivergenceBound)) {
            throw DivergenceError("nqm: iterate exceeded 1e12 at step " + std::to_string(step), step);
        }
    }
}

// Gaussian elimination with partial pivoting; n is 3 here.
void solve_linear(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::fabs(a[r * n + col]) > std::fabs(a[piv * n + col])) piv = r;
        }
        if (a[piv * n + col] == 0.0) throw DomainError("fixed-point system is singular");
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
            std::swap(b[col], b[piv]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            double f = a[r * n + col] / a[col * n + col];
            for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    for (std::size_t r = n; r-- > 0;) {
        double acc = b[r];
        for (std::size_t c = r + 1; c < n; ++c) acc -= a[r * n + c] * b[c];
        b[r] = acc / a[r * n + r];
    }
}

// Stationary (V_SGD, V_EMA, Cov) from the coupled variance recursions:
//   V_SGD = r^2 V_SGD + (eta a)^2 s2
//   V_EMA = l^2 V_SGD + (1-l)^2 V_EMA + 2 l (1-l) Cov
//   Cov   = l r V_SGD + (1-l) r Cov
double ema_variance_from_system(double eta_a, double lambda, double s2) {
    double r = 1.0 - eta_a;
    std::vector<double> A = {
        1.0 - r * r,      0.0,                                      0.0,
        -lambda * lambda, 1.0 - (1.0 - lambda) * (1.0 - lambda),    -2.0 * lambda * (1.0 - lambda),
        -lambda * r,      0.0,                                      1.0 - (1.0 - lambda) * r,
    };
    std::vector<double> b = {eta_a * eta_a * s2, 0.0, 0.0};
    solve_linear(A, b, 3);
    return b[1];
}

struct TrialMoments {
    std::vector<KahanSum> sum;
    std::vector<KahanSum> sum_sq;
    std::int64_t count = 0;

    TrialMoments() = default;
    explicit TrialMoments(std::size_t n) : sum(n), sum_sq(n) {}
};

// Streaming chain for one trial; same update rules as nqm_simulate but
// without storing the trajectory.
TrialMoments run_trial(const NqmConfig& config, NqmMethod method, std::uint64_t trial) {
    const std::size_t n = config.dim();
    RngState rng(0x6e716dULL, trial);  // fixed module salt; stream = trial index
    Vec64 theta(n, config.init_scale);
    Vec64 shadow = theta;
    const double l = config.lambda_new;
    TrialMoments mom(n);
    for (std::int64_t t = 1; t <= config.steps; ++t) {
        const bool switching = (t % config.switch_interval == 0);
        for (std::size_t i = 0; i < n; ++i) {
            double c = sample_noise(config, rng, i);
            double ea = config.lr * config.a_diag[i];
            switch (method) {
                case NqmMethod::sgd:
                    theta[i] -= ea * (theta[i] - c);
                    break;
                case NqmMethod::ema:
                    theta[i] -= ea * (theta[i] - c);
                    shadow[i] = l * theta[i] + (1.0 - l) * shadow[i];
                    break;
                case NqmMethod::sema_coupled: {
                    double intermediate = theta[i] - ea * (theta[i] - c);
                    theta[i] = switching ? intermediate : l * intermediate + (1.0 - l) * theta[i];
                    break;
                }
            }
        }
        if (t > config.burn_in) {
            const Vec64& track = (method == NqmMethod::ema) ? shadow : theta;
            for (std::size_t i = 0; i < n; ++i) {
                mom.sum[i].add(track[i]);
                mom.sum_sq[i].add(track[i] * track[i]);
            }
            mom.count += 1;
        }
    }
    check_divergence((method == NqmMethod::ema) ? shadow : theta, config.steps);
    return mom;
}

}  // namespace

AnalyticVariances analytic_variances(const NqmConfig& config) {
    config.validate();
    const std::size_t n = config.dim();
    AnalyticVariances out;
    out.v_sgd.resize(n);
    out.v_ema.resize(n);
    out.v_sema.resize(n);
    out.v_ema_system.resize(n);
    out.v_sema_via_coefs.resize(n);
    const double l = config.lambda_new;
    for (std::size_t i = 0; i < n; ++i) {
        const double ea = config.lr * config.a_diag[i];
        const double s2 = config.sigma_diag[i];
        out.v_sgd[i] = ea / (2.0 - ea) * s2;
        out.v_ema[i] = l / (2.0 - l) * (2.0 - l - (1.0 - l) * ea) / (l + (1.0 - l) * ea) * out.v_sgd[i];
        out.v_sema[i] = l * ea / (2.0 - l * ea) * s2;
        out.v_ema_system[i] = ema_variance_from_system(ea, l, s2);
        // k from the coefficient statement of the proposition: V_SEMA = k * V_EMA.
        double k = (2.0 - l) / l * (l + (1.0 - l) * ea) / (2.0 - l - (1.0 - l) * ea) * (l * ea) /
                   (2.0 - l * ea) * (2.0 - ea) / ea;
        out.v_sema_via_coefs[i] = k * out.v_ema[i];

        double scale = std::max(std::fabs(out.v_ema[i]), 1e-300);
        if (std::fabs(out.v_ema[i] - out.v_ema_system[i]) / scale > 1e-12) {
            throw DomainError("analytic_variances: closed form and fixed-point system disagree at coordinate " +
                              std::to_string(i));
        }
    }
    return out;
}

std::vector<Vec64> nqm_simulate(const NqmConfig& config, NqmMethod method, RngState& rng) {
    config.validate_shapes();
    const std::size_t n = config.dim();
    Vec64 theta(n, config.init_scale);
    Vec64 shadow = theta;
    const double l = config.lambda_new;

    std::vector<Vec64> traj;
    traj.reserve(static_cast<std::size_t>(config.steps) + 1);
    traj.push_back(method == NqmMethod::ema ? shadow : theta);

    for (std::int64_t t = 1; t <= config.steps; ++t) {
        const bool switching = (t % config.switch_interval == 0);
        for (std::size_t i = 0; i < n; ++i) {
            double c = sample_noise(config, rng, i);
            double ea = config.lr * config.a_diag[i];
            switch (method) {
                case NqmMethod::sgd:
                    theta[i] -= ea * (theta[i] - c);
                    break;
                case NqmMethod::ema:
                    theta[i] -= ea * (theta[i] - c);
                    shadow[i] = l * theta[i] + (1.0 - l) * shadow[i];
                    break;
                case NqmMethod::sema_coupled: {
                    double intermediate = theta[i] - ea * (theta[i] - c);
                    theta[i] = switching ? intermediate : l * intermediate + (1.0 - l) * theta[i];
                    break;
                }
            }
        }
        const Vec64& track = (method == NqmMethod::ema) ? shadow : theta;
        check_divergence(track, t);
        traj.push_back(track);
    }
    return traj;
}

MethodVariance estimate_variance_mc(const NqmConfig& config, NqmMethod method, int workers) {
    config.validate();
    if (config.steps - config.burn_in < 10000) {
        throw UsageError("estimate_variance_mc: need at least 1e4 post-burn-in samples per trial");
    }
    const std::size_t n = config.dim();

    std::vector<TrialMoments> partial(static_cast<std::size_t>(config.trials));
    parallel_for(static_cast<std::size_t>(config.trials), workers,
                 [&](std::size_t trial) { partial[trial] = run_trial(config, method, trial); });

    // Merge in trial order: byte-identical result for any worker count.
    std::vector<KahanSum> sum(n), sum_sq(n);
    std::int64_t count = 0;
    for (const TrialMoments& mom : partial) {
        for (std::size_t i = 0; i < n; ++i) {
            sum[i].add(mom.sum[i].value());
            sum_sq[i].add(mom.sum_sq[i].value());
        }
        count += mom.count;
    }

    AnalyticVariances av = analytic_variances(config);
    MethodVariance out;
    out.analytic = (method == NqmMethod::sgd) ? av.v_sgd : (method == NqmMethod::ema) ? av.v_ema : av.v_sema;
    out.empirical.resize(n);
    out.rel_err.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double mean = sum[i].value() / static_cast<double>(count);
        out.empirical[i] = sum_sq[i].value() / static_cast<double>(count) - mean * mean;
        if (out.analytic[i] == 0.0) {
            out.rel_err[i] = std::fabs(out.empirical[i]);
        } else {
            out.rel_err[i] = std::fabs(out.empirical[i] - out.analytic[i]) / std::fabs(out.analytic[i]);
        }
    }
    return out;
}

VarianceReport nqm_variance_report(const NqmConfig& config, int workers) {
    VarianceReport rep;
    rep.sgd = estimate_variance_mc(config, NqmMethod::sgd, workers);
    rep.ema = estimate_variance_mc(config, NqmMethod::ema, workers);
    rep.sema = estimate_variance_mc(config, NqmMethod::sema_coupled, workers);
    AnalyticVariances av = analytic_variances(config);
    const std::size_t n = config.dim();
    rep.ordering_analytic.resize(n);
    rep.ordering_empirical.resize(n);
    rep.sema_route_rel_diff.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        rep.ordering_analytic[i] = av.v_sema[i] < av.v_ema[i] && av.v_ema[i] < av.v_sgd[i];
        rep.ordering_empirical[i] =
            rep.sema.empirical[i] < rep.ema.empirical[i] && rep.ema.empirical[i] < rep.sgd.empirical[i];
        double scale = std::max(std::fabs(av.v_sema[i]), 1e-300);
        rep.sema_route_rel_diff[i] = std::fabs(av.v_sema[i] - av.v_sema_via_coefs[i]) / scale;
    }
    return rep;
}

NqmConfig nqm_grid_cell(double lr, double lambda_new, double a, double sigma2) {
    NqmConfig cfg;
    cfg.a_diag = {a};
    cfg.sigma_diag = {sigma2};
    cfg.lr = lr;
    cfg.lambda_new = lambda_new;
    cfg.switch_interval = kNqmNeverSwitch;
    cfg.trials = 32;

    // Mixing time of the slowest chain (coupled SEMA): tau = 1/(lambda*eta*a).
    // Burn 10 tau per trial; pool max(1.2e6, 5e4 tau) samples so the relative
    // MC standard error sqrt(2 tau / pooled) stays near 0.6%.
    double tau = 1.0 / (lambda_new * lr * a);
    cfg.burn_in = static_cast<std::int64_t>(std::ceil(10.0 * tau)) + 100;
    double pooled = std::max(1.2e6, 5e4 * tau);
    auto per_trial = static_cast<std::int64_t>(std::ceil(pooled / static_cast<double>(cfg.trials)));
    per_trial = std::max<std::int64_t>(per_trial, 10000);
    cfg.steps = cfg.burn_in + per_trial;
    return cfg;
}

SigmaTEstimate estimate_sigma_t(const NqmConfig& config, std::uint64_t seed) {
    config.validate();
    const std::int64_t T = config.switch_interval;
    if (2 * T > config.steps) throw UsageError("estimate_sigma_t: need 2*switch_interval <= steps");
    if (config.trials < 100) throw UsageError("estimate_sigma_t: need at least 100 trials");
    const std::size_t n = config.dim();

    const bool noiseless = std::all_of(config.sigma_diag.begin(), config.sigma_diag.end(),
                                       [](double s) { return s == 0.0; });
    // Noiseless trials are identical; one pass determines the estimate.
    const std::int64_t trials = noiseless ? 1 : config.trials;

    auto eval_loss = [&](const Vec64& theta) {
        KahanSum s;
        for (std::size_t i = 0; i < n; ++i) s.add(0.5 * config.a_diag[i] * theta[i] * theta[i]);
        return s.value();
    };

    KahanSum sum_num, sum_den, sum_ema_t, sum_sema_2t, sum_ema_2t;
    std::vector<std::array<double, 2>> pairs(static_cast<std::size_t>(trials));
    for (std::int64_t trial = 0; trial < trials; ++trial) {
        RngState rng(seed ^ 0x7369676d61ULL, static_cast<std::uint64_t>(trial));
        Vec64 fast_e(n, config.init_scale), shadow_e = fast_e;
        Vec64 fast_s = fast_e, shadow_s = fast_e;
        const double l = config.lambda_new;
        double ema_t = 0.0;
        for (std::int64_t t = 1; t <= 2 * T; ++t) {
            for (std::size_t i = 0; i < n; ++i) {
                double c = sample_noise(config, rng, i);
                double ea = config.lr * config.a_diag[i];
                fast_e[i] -= ea * (fast_e[i] - c);
                shadow_e[i] = l * fast_e[i] + (1.0 - l) * shadow_e[i];
                fast_s[i] -= ea * (fast_s[i] - c);
                shadow_s[i] = l * fast_s[i] + (1.0 - l) * shadow_s[i];
            }
            if (t == T) ema_t = eval_loss(shadow_e);
            if (t % T == 0 && t < 2 * T) fast_s = shadow_s;  // the switch
            check_divergence(fast_e, t);
            check_divergence(fast_s, t);
        }
        double ema_2t = eval_loss(shadow_e);
        double sema_2t = eval_loss(shadow_s);
        sum_ema_t.add(ema_t);
        sum_ema_2t.add(ema_2t);
        sum_sema_2t.add(sema_2t);
        sum_num.add(ema_t - sema_2t);
        sum_den.add(ema_t - ema_2t);
        pairs[static_cast<std::size_t>(trial)] = {ema_t - sema_2t, ema_t - ema_2t};
    }

    const double nt = static_cast<double>(trials);
    SigmaTEstimate est;
    est.trials = trials;
    est.ema_loss_at_t = sum_ema_t.value() / nt;
    est.ema_loss_at_2t = sum_ema_2t.value() / nt;
    est.sema_loss_at_2t = sum_sema_2t.value() / nt;
    const double num_mean = sum_num.value() / nt;
    const double den_mean = sum_den.value() / nt;
    if (std::fabs(den_mean) < config.denom_floor) {
        throw DomainError("estimate_sigma_t: denominator " + std::to_string(den_mean) +
                          " below floor; estimate is ill-conditioned");
    }
    est.sigma_t = num_mean / den_mean;

    if (!noiseless && trials > 1) {
        // Delta method for the ratio of means.
        KahanSum s_nn, s_dd, s_nd;
        for (const auto& p : pairs) {
            double dn = p[0] - num_mean;
            double dd = p[1] - den_mean;
            s_nn.add(dn * dn);
            s_dd.add(dd * dd);
            s_nd.add(dn * dd);
        }
        double var_n = s_nn.value() / (nt - 1.0);
        double var_d = s_dd.value() / (nt - 1.0);
        double cov = s_nd.value() / (nt - 1.0);
        double var_ratio =
            (var_n - 2.0 * est.sigma_t * cov + est.sigma_t * est.sigma_t * var_d) / (den_mean * den_mean * nt);
        est.std_error = var_ratio > 0.0 ? std::sqrt(var_ratio) : 0.0;
    }
    return est;
}

}  // namespace walab
