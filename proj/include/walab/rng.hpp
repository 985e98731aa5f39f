#pragma once

#include <cstdint>

#include "walab/numerics.hpp"

namespace walab {

// Counter-based pseudo-random generator. Each (seed, stream) pair keys an
// independent sequence, so parallel trials take stream = trial index and can
// never share draws regardless of scheduling. The output for draw number i is
// a pure function of (seed, stream, i): two rounds of the splitmix64 finalizer
// over the keyed counter.
struct RngState {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    RngState() = default;
    RngState(std::uint64_t seed_, std::uint64_t stream_);

    std::uint64_t next_u64();

    // Uniform in [0, 1), 53-bit resolution.
    double next_uniform();

    // Standard normal via Box-Muller; the paired draw is cached.
    double next_gaussian();

  private:
    std::uint64_t key1_ = 0;
    std::uint64_t key2_ = 0;
    std::uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Independent per-coordinate normals: mean[i] + sqrt(diag_cov[i]) * z.
// Throws DomainError on a negative variance entry.
Vec64 sample_gaussian(RngState& rng, const Vec64& mean, const Vec64& diag_cov);

Vec64 sample_standard_gaussian(RngState& rng, std::size_t n);

}  // namespace walab
