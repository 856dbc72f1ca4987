#pragma once

// =============================================================================
// relaynet - Counter-based Gaussian noise streams
// =============================================================================
// Stateless draws keyed by (master seed, trial, step, channel). Identical keys
// give identical draws regardless of execution order or thread count, which is
// what makes Monte Carlo traces byte-reproducible under any parallelism.
// =============================================================================

#include <cmath>
#include <cstdint>

namespace relaynet {

/// SplitMix64 finalizer.
inline uint64_t mix64(uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

/// Deterministic stream derivation: (master_seed, trial, step) -> per-channel draws.
struct SeedPolicy {
    uint64_t master_seed = 0;

    [[nodiscard]] uint64_t key(uint64_t trial, uint64_t step, uint32_t channel) const {
        uint64_t z = master_seed + 0x9E3779B97F4A7C15ULL;
        z = mix64(z ^ (trial * 0xD1B54A32D192ED03ULL + 0x2545F4914F6CDD1DULL));
        z = mix64(z ^ (step * 0x9E3779B97F4A7C15ULL + 0x165667B19E3779F9ULL));
        z = mix64(z ^ (uint64_t(channel) * 0x8CB92BA72F3D8DD7ULL + 1ULL));
        return z;
    }

    /// Standard normal draw for a given (trial, step, channel) counter.
    [[nodiscard]] double normal(uint64_t trial, uint64_t step, uint32_t channel) const {
        const uint64_t h1 = key(trial, step, channel);
        const uint64_t h2 = mix64(h1 ^ 0x6A09E667F3BCC909ULL);
        // uniforms in (0,1); +0.5 keeps u1 strictly positive for the log
        const double u1 = (double(h1 >> 11) + 0.5) * 0x1.0p-53;
        const double u2 = (double(h2 >> 11) + 0.5) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }
};

/// Noise channel ids used by the schemes (relay i uses kChanRelayBase + i,
/// vector-plant mode m uses kChanProcessBase + m).
inline constexpr uint32_t kChanCtrl = 0;
inline constexpr uint32_t kChanProcessBase = 1;
inline constexpr uint32_t kChanRelayBase = 64;

/// Noise view bound to one (seed, trial); schemes advance `step` themselves.
struct TrialNoise {
    SeedPolicy seed;
    uint64_t trial = 0;

    [[nodiscard]] double normal(uint64_t step, uint32_t channel) const {
        return seed.normal(trial, step, channel);
    }
};

/// All-zero noise source for deterministic replay of the noiseless recursions.
struct ZeroNoise {
    [[nodiscard]] double normal(uint64_t, uint32_t) const { return 0.0; }
};

}  // namespace relaynet
