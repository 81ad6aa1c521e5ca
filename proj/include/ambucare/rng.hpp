#pragma once

// Seeded random streams. Every stochastic stage draws from a stream derived from
// (master seed, purpose, index), so adding a stage or changing thread counts never
// perturbs other draws.

#include <cstdint>
#include <limits>
#include <string_view>

namespace ambucare {

/// SplitMix64; satisfies UniformRandomBitGenerator and is cheap to seed per patient.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform on [0,1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform on (0,1), for inverse-CDF draws.
    double uniform_open() noexcept { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t hash_purpose(std::string_view purpose) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (char c : purpose) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                                           std::uint64_t index = 0) noexcept {
    return mix64(mix64(master ^ hash_purpose(purpose)) + 0x9e3779b97f4a7c15ULL * (index + 1));
}

inline SplitMix64 make_stream(std::uint64_t master, std::string_view purpose, std::uint64_t index = 0) noexcept {
    return SplitMix64(derive_seed(master, purpose, index));
}

}  // namespace ambucare
