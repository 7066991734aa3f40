#pragma once

#include <cstdint>
#include <string_view>

namespace mme {

/// Counter-based SplitMix64 generator.
///
/// State transition: `state += 0x9E3779B97F4A7C15`, output = `mix(state)`.
/// Sampling decisions that pick indices use only integer arithmetic, so a
/// given seed produces the same sequence of choices on every platform.
class Rng {
public:
    static constexpr std::uint64_t kIncrement = 0x9E3779B97F4A7C15ULL;

    explicit Rng(std::uint64_t seed = 0) noexcept : state_(seed) {}

    std::uint64_t next_u64() noexcept {
        state_ += kIncrement;
        return mix(state_);
    }

    /// Uniform integer in [0, n) by multiply-shift with rejection. n must be > 0.
    std::uint64_t uniform_index(std::uint64_t n) noexcept;

    /// Uniform real in [0, 1) with 53 random bits.
    double uniform01() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller; consumes two outputs per call.
    double normal() noexcept;

    /// Independent child stream keyed by `stream`; does not advance this generator.
    Rng split(std::uint64_t stream) const noexcept;

    std::uint64_t state() const noexcept { return state_; }

    static std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// FNV-1a 64-bit hash.
std::uint64_t hash_string(std::string_view text) noexcept;

/// Combines a base seed with stream identifiers into a new seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) noexcept;

} // namespace mme
