#include "walab/landscape.hpp"

#include <cmath>
#include <limits>

#include "walab/parallel.hpp"

namespace walab {

std::string to_string(DirectionNorm n) {
    return n == DirectionNorm::global_norm ? "global_norm" : "layerwise_norm";
}

DirectionNorm direction_norm_from_string(const std::string& s) {
    if (s == "global_norm") return DirectionNorm::global_norm;
    if (s == "layerwise_norm") return DirectionNorm::layerwise_norm;
    throw ConfigError("unknown direction normalization: " + s);
}

namespace {

double block_norm(const Vec64& v, std::size_t begin, std::size_t len) {
    KahanSum s;
    for (std::size_t i = begin; i < begin + len; ++i) s.add(v[i] * v[i]);
    return std::sqrt(s.value());
}

}  // namespace

Direction make_direction(const Vec64& center, const std::vector<std::size_t>& blocks, RngState& rng,
                         DirectionNorm normalization) {
    std::size_t total = 0;
    for (std::size_t b : blocks) total += b;
    if (total != center.size()) throw DimensionError("make_direction: blocks do not cover the center vector");

    Direction dir;
    dir.normalization = normalization;
    dir.vector = sample_standard_gaussian(rng, center.size());

    if (normalization == DirectionNorm::global_norm) {
        double cn = norm2(center);
        double dn = norm2(dir.vector);
        if (dn == 0.0) throw DomainError("make_direction: degenerate zero direction");
        double scale = cn / dn;
        for (double& v : dir.vector) v *= scale;
        return dir;
    }

    std::size_t off = 0;
    for (std::size_t b : blocks) {
        double cn = block_norm(center, off, b);
        if (cn == 0.0) throw DomainError("make_direction: zero-norm center block under layerwise_norm");
        double dn = block_norm(dir.vector, off, b);
        if (dn == 0.0) throw DomainError("make_direction: degenerate zero direction block");
        double scale = cn / dn;
        for (std::size_t i = off; i < off + b; ++i) dir.vector[i] *= scale;
        off += b;
    }
    return dir;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    if (n < 2) throw ConfigError("linspace: need at least 2 points");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = lo + (hi - lo) * (static_cast<double>(i) / static_cast<double>(n - 1));
    }
    return out;
}

namespace {

void require_contains_zero(const std::vector<double>& coeffs, const char* what) {
    for (double a : coeffs) {
        if (a == 0.0) return;
    }
    throw UsageError(std::string(what) + ": coefficient grid must contain 0");
}

EvalPoint safe_eval(const EvalFn& eval_fn, const Vec64& point) {
    EvalPoint e = eval_fn(point);
    if (!std::isfinite(e.loss)) e.loss = std::numeric_limits<double>::quiet_NaN();
    return e;
}

}  // namespace

ScanGrid scan_1d(const Vec64& center, const Direction& direction, const std::vector<double>& alphas,
                 const EvalFn& eval_fn, int workers) {
    require_same_length(center, direction.vector, "scan_1d");
    require_contains_zero(alphas, "scan_1d");
    ScanGrid grid;
    grid.alphas = alphas;
    grid.loss.assign(alphas.size(), std::vector<double>(1, 0.0));
    grid.acc.assign(alphas.size(), std::vector<double>(1, -1.0));
    parallel_for(alphas.size(), workers, [&](std::size_t i) {
        // alpha = 0 evaluates the center verbatim: bit-exact by construction.
        EvalPoint e = alphas[i] == 0.0 ? safe_eval(eval_fn, center)
                                       : safe_eval(eval_fn, axpy(alphas[i], direction.vector, center));
        grid.loss[i][0] = e.loss;
        grid.acc[i][0] = e.acc;
    });
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (alphas[i] == 0.0) grid.center_loss = grid.loss[i][0];
    }
    return grid;
}

ScanGrid scan_2d(const Vec64& center, const Direction& dir1, const Direction& dir2,
                 const std::vector<double>& alphas, const std::vector<double>& betas, const EvalFn& eval_fn,
                 int workers) {
    require_same_length(center, dir1.vector, "scan_2d");
    require_same_length(center, dir2.vector, "scan_2d");
    require_contains_zero(alphas, "scan_2d");
    require_contains_zero(betas, "scan_2d");
    ScanGrid grid;
    grid.alphas = alphas;
    grid.betas = betas;
    grid.loss.assign(alphas.size(), std::vector<double>(betas.size(), 0.0));
    grid.acc.assign(alphas.size(), std::vector<double>(betas.size(), -1.0));
    parallel_for(alphas.size() * betas.size(), workers, [&](std::size_t idx) {
        std::size_t i = idx / betas.size();
        std::size_t j = idx % betas.size();
        EvalPoint e;
        if (alphas[i] == 0.0 && betas[j] == 0.0) {
            e = safe_eval(eval_fn, center);
        } else {
            Vec64 point = axpy(alphas[i], dir1.vector, center);
            axpy_inplace(betas[j], dir2.vector, point);
            e = safe_eval(eval_fn, point);
        }
        grid.loss[i][j] = e.loss;
        grid.acc[i][j] = e.acc;
    });
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        for (std::size_t j = 0; j < betas.size(); ++j) {
            if (alphas[i] == 0.0 && betas[j] == 0.0) grid.center_loss = grid.loss[i][j];
        }
    }
    return grid;
}

std::vector<std::pair<double, double>> project_trajectory(const std::vector<Vec64>& checkpoints,
                                                          const Vec64& center, const Vec64& dir1,
                                                          const Vec64& dir2) {
    require_same_length(center, dir1, "project_trajectory");
    require_same_length(center, dir2, "project_trajectory");
    const double g11 = dot(dir1, dir1);
    const double g22 = dot(dir2, dir2);
    const double g12 = dot(dir1, dir2);
    const double det = g11 * g22 - g12 * g12;
    if (!(std::fabs(det) > 1e-12 * std::max(g11 * g22, 1e-300))) {
        throw DomainError("project_trajectory: directions are (near) linearly dependent");
    }
    std::vector<std::pair<double, double>> coords;
    coords.reserve(checkpoints.size());
    for (const Vec64& ckpt : checkpoints) {
        require_same_length(center, ckpt, "project_trajectory");
        Vec64 v = ckpt;
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= center[i];
        double b1 = dot(dir1, v);
        double b2 = dot(dir2, v);
        double alpha = (g22 * b1 - g12 * b2) / det;
        double beta = (g11 * b2 - g12 * b1) / det;
        coords.emplace_back(alpha, beta);
    }
    return coords;
}

namespace {

// Jacobi eigensolver for a small symmetric matrix (values ascending not
// guaranteed; caller picks what it needs). a is n x n row-major, destroyed.
void jacobi_eigen(std::vector<double>& a, std::size_t n, std::vector<double>& eigvals,
                  std::vector<double>& eigvecs) {
    eigvecs.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) eigvecs[i * n + i] = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
        }
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = a[p * n + q];
                if (std::fabs(apq) < 1e-300) continue;
                double app = a[p * n + p];
                double aqq = a[q * n + q];
                double phi = 0.5 * std::atan2(2.0 * apq, aqq - app);
                double c = std::cos(phi);
                double s = std::sin(phi);
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a[k * n + p];
                    double akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a[p * n + k];
                    double aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double vkp = eigvecs[k * n + p];
                    double vkq = eigvecs[k * n + q];
                    eigvecs[k * n + p] = c * vkp - s * vkq;
                    eigvecs[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    eigvals.resize(n);
    for (std::size_t i = 0; i < n; ++i) eigvals[i] = a[i * n + i];
}

}  // namespace

std::pair<Vec64, Vec64> principal_plane(const std::vector<Vec64>& checkpoints, const Vec64& center) {
    const std::size_t k = checkpoints.size();
    if (k < 3) throw UsageError("principal_plane: need at least 3 checkpoints");
    const std::size_t p = center.size();
    std::vector<Vec64> centered;
    centered.reserve(k);
    for (const Vec64& c : checkpoints) {
        require_same_length(center, c, "principal_plane");
        Vec64 v(p);
        for (std::size_t i = 0; i < p; ++i) v[i] = c[i] - center[i];
        centered.push_back(std::move(v));
    }
    // Gram matrix route: eigenvectors of V V^T give the principal directions
    // as linear combinations of the centered checkpoints.
    std::vector<double> gram(k * k);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i; j < k; ++j) {
            double d = dot(centered[i], centered[j]);
            gram[i * k + j] = d;
            gram[j * k + i] = d;
        }
    }
    std::vector<double> eigvals, eigvecs;
    jacobi_eigen(gram, k, eigvals, eigvecs);
    // Indices of the two largest eigenvalues.
    std::size_t i1 = 0, i2 = 1;
    if (eigvals[i2] > eigvals[i1]) std::swap(i1, i2);
    for (std::size_t i = 2; i < k; ++i) {
        if (eigvals[i] > eigvals[i1]) {
            i2 = i1;
            i1 = i;
        } else if (eigvals[i] > eigvals[i2]) {
            i2 = i;
        }
    }
    auto build = [&](std::size_t col) {
        Vec64 d(p, 0.0);
        for (std::size_t i = 0; i < k; ++i) {
            double w = eigvecs[i * k + col];
            if (w != 0.0) axpy_inplace(w, centered[i], d);
        }
        double n = norm2(d);
        if (n == 0.0) throw DomainError("principal_plane: degenerate trajectory (zero principal direction)");
        for (double& v : d) v /= n;
        return d;
    };
    return {build(i1), build(i2)};
}

}  // namespace walab
