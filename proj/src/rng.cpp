#include "walab/rng.hpp"

#include <cmath>

namespace walab {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// splitmix64 finalizer (Steele et al.); bijective 64-bit mix.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace

RngState::RngState(std::uint64_t seed_, std::uint64_t stream_) : seed(seed_), stream(stream_) {
    key1_ = mix64(seed_ + kGolden);
    key2_ = mix64(key1_ ^ mix64(stream_ + 0xD1B54A32D192ED03ull));
}

std::uint64_t RngState::next_u64() {
    std::uint64_t c = counter_++;
    return mix64(mix64(c * kGolden + key1_) ^ key2_);
}

double RngState::next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngState::next_gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // u1 in (0, 1] so the log is finite.
    double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    double u2 = next_uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

Vec64 sample_gaussian(RngState& rng, const Vec64& mean, const Vec64& diag_cov) {
    require_same_length(mean, diag_cov, "sample_gaussian");
    Vec64 out(mean.size());
    for (std::size_t i = 0; i < mean.size(); ++i) {
        double var = diag_cov[i];
        if (var < 0.0) throw DomainError("sample_gaussian: negative variance at coordinate " + std::to_string(i));
        out[i] = var == 0.0 ? mean[i] : mean[i] + std::sqrt(var) * rng.next_gaussian();
    }
    return out;
}

Vec64 sample_standard_gaussian(RngState& rng, std::size_t n) {
    Vec64 out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = rng.next_gaussian();
    return out;
}

}  // namespace walab
