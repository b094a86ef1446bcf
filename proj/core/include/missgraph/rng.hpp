#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>

namespace missgraph::rng {

// All randomness goes through std::mt19937_64, whose output sequence is fixed
// by the standard. The distribution adaptors below are written out by hand
// because the std:: distributions are implementation-defined, and seeded
// runs must reproduce across standard libraries.
using Engine = std::mt19937_64;

// Odd multiplier used for seed splitting (2^64 / golden ratio).
inline constexpr std::uint64_t kSplitConstant = 0x9E3779B97F4A7C15ULL;

// Seed of stream k derived from a master seed: master XOR (k * kSplitConstant).
constexpr std::uint64_t split_seed(std::uint64_t master, std::uint64_t k) noexcept {
    return master ^ (k * kSplitConstant);
}

// Uniform integer in [0, bound) by rejection; bound must be > 0.
inline std::uint64_t uniform_index(Engine& eng, std::uint64_t bound) {
    const std::uint64_t limit = Engine::max() - (Engine::max() % bound + 1) % bound;
    std::uint64_t x;
    do {
        x = eng();
    } while (x > limit);
    return x % bound;
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Engine& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller; one value per call, the sine branch is dropped.
inline double standard_normal(Engine& eng) {
    double u1;
    do {
        u1 = uniform01(eng);
    } while (u1 <= 0.0);
    const double u2 = uniform01(eng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Fisher-Yates shuffle.
template <typename T>
void shuffle(std::span<T> values, Engine& eng) {
    for (std::size_t i = values.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_index(eng, i));
        std::swap(values[i - 1], values[j]);
    }
}

}  // namespace missgraph::rng
