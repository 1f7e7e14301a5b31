#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace sublsq::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

/// SplitMix64 finalizer; the mixing core of every stream below.
inline std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

/// Identifies one independent random stream: a pure function of
/// (master_seed, draw_index), independent of thread count and draw order.
struct DrawSeed {
    std::uint64_t master_seed = 0;
    std::uint64_t draw_index = 0;
};

/// Counter-based generator in the SplittableRandom family: each stream gets
/// its own start state and its own odd increment, both derived from the seed
/// pair, so distinct draw indices give non-overlapping sequences.
///
/// All distributions are implemented here (not via <random>) because the
/// standard distributions are implementation-defined and would break
/// cross-platform reproducibility.
class Stream {
public:
    explicit Stream(DrawSeed seed)
        : state_(mix64(seed.master_seed ^ mix64(seed.draw_index + kGolden))),
          increment_((mix64(seed.draw_index ^ 0xD1B54A32D192ED03ull) << 1) | 1ull) {}

    Stream(std::uint64_t master_seed, std::uint64_t draw_index)
        : Stream(DrawSeed{master_seed, draw_index}) {}

    std::uint64_t next_u64() {
        state_ += increment_;
        return mix64(state_);
    }

    /// Uniform double in the open interval (0, 1).
    double next_unit() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double next_uniform(double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(next_u64() >> 11) * 0x1.0p-53);
    }

    /// Unbiased uniform integer in [0, bound) via Lemire multiply-shift
    /// with rejection.
    std::uint64_t next_below(std::uint64_t bound) {
        std::uint64_t x = next_u64();
        unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                x = next_u64();
                m = static_cast<unsigned __int128>(x) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Standard normal via Box-Muller; generates pairs and caches the spare.
    double next_normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = next_unit();
        const double u2 = next_unit();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Standard Cauchy via the quantile transform.
    double next_cauchy() {
        return std::tan(std::numbers::pi * (next_unit() - 0.5));
    }

private:
    std::uint64_t state_;
    std::uint64_t increment_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Deterministic child seed for nested experiments (per-extra runs,
/// reservoir retention, grid generation).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt) {
    return mix64(master + kGolden * (salt + 1));
}

}  // namespace sublsq::rng
