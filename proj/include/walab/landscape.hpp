#pragma once

#include <functional>
#include <string>
#include <vector>

#include "walab/numerics.hpp"
#include "walab/rng.hpp"

namespace walab {

enum class DirectionNorm { global_norm, layerwise_norm };

std::string to_string(DirectionNorm n);
DirectionNorm direction_norm_from_string(const std::string& s);

struct Direction {
    Vec64 vector;
    DirectionNorm normalization = DirectionNorm::layerwise_norm;
};

// Loss (and accuracy, for classifiers) of one parameter point. acc < 0 means
// "not applicable".
struct EvalPoint {
    double loss = 0.0;
    double acc = -1.0;
};

using EvalFn = std::function<EvalPoint(const Vec64&)>;

// Gaussian direction rescaled against the center. global_norm matches the
// whole-vector norm of the center; layerwise_norm matches each block's norm
// (blocks = per-layer weight+bias spans for MLPs, or one block for plain
// vectors). A zero-norm center block raises DomainError.
Direction make_direction(const Vec64& center, const std::vector<std::size_t>& blocks, RngState& rng,
                         DirectionNorm normalization);

// Grid of evaluations around a center point. For 1D scans `betas` is empty
// and `loss`/`acc` have one row. Non-finite evaluations are stored as NaN
// (serialized as an out-of-range marker, not a failure).
struct ScanGrid {
    std::vector<double> alphas;
    std::vector<double> betas;
    std::vector<std::vector<double>> loss;  // [alpha][beta] (single row for 1D)
    std::vector<std::vector<double>> acc;
    double center_loss = 0.0;
};

// Evenly spaced coefficients; computed as lo + (hi-lo)*(i/(n-1)) so a
// symmetric odd-count range contains exactly 0.0.
std::vector<double> linspace(double lo, double hi, std::size_t n);

// f(alpha) = eval_fn(center + alpha * direction). alphas must contain 0; that
// entry is evaluated at the center verbatim, so it is bit-exact.
ScanGrid scan_1d(const Vec64& center, const Direction& direction, const std::vector<double>& alphas,
                 const EvalFn& eval_fn, int workers = 1);

ScanGrid scan_2d(const Vec64& center, const Direction& dir1, const Direction& dir2,
                 const std::vector<double>& alphas, const std::vector<double>& betas, const EvalFn& eval_fn,
                 int workers = 1);

// Least-squares coefficients of (checkpoint - center) on span{dir1, dir2}.
std::vector<std::pair<double, double>> project_trajectory(const std::vector<Vec64>& checkpoints,
                                                          const Vec64& center, const Vec64& dir1,
                                                          const Vec64& dir2);

// First two principal directions of the centered checkpoints (Gram-matrix
// route, Jacobi eigensolver), unit-normalized. Needs >= 3 checkpoints.
std::pair<Vec64, Vec64> principal_plane(const std::vector<Vec64>& checkpoints, const Vec64& center);

}  // namespace walab
