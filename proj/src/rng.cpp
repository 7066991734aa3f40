#include "mme/rng.hpp"

#include <cmath>
#include <numbers>

namespace mme {

std::uint64_t Rng::uniform_index(std::uint64_t n) noexcept {
    // Lemire's nearly-divisionless method.
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    std::uint64_t low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            x = next_u64();
            m = static_cast<__uint128_t>(x) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

double Rng::normal() noexcept {
    double u1 = uniform01();
    const double u2 = uniform01();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Rng Rng::split(std::uint64_t stream) const noexcept {
    return Rng(mix(state_ ^ mix(stream + kIncrement)));
}

std::uint64_t hash_string(std::string_view text) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) noexcept {
    std::uint64_t z = Rng::mix(seed + Rng::kIncrement);
    z = Rng::mix(z ^ (a + 0x632BE59BD9B4E019ULL));
    return Rng::mix(z ^ (b + 0x8CB92BA72F3D8DD7ULL));
}

} // namespace mme
