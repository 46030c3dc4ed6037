#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace snnr {

/// 64-bit finalizer from splitmix64. Bijective, so distinct inputs never collide.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives a child seed from a parent seed and a path of integer components,
/// e.g. derive_seed(global, {cell_i, cell_j}).
constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> parts) noexcept {
    std::uint64_t h = mix64(seed);
    for (auto p : parts) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
    return h;
}

/// Stream tags keep seeds drawn for different purposes apart.
enum class SeedStream : std::uint64_t {
    init = 1,
    shuffle = 2,
    train_encode = 3,
    eval_encode = 4,
    attack_start = 5,
    subset = 6,
    blobs = 7,
    cell = 8,
};

constexpr std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream,
                                    std::initializer_list<std::uint64_t> parts = {}) noexcept {
    std::uint64_t h = derive_seed(seed, {static_cast<std::uint64_t>(stream)});
    for (auto p : parts) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
    return h;
}

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits; identical across
/// standard libraries, unlike std::uniform_real_distribution.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

/// Standard normal via Box-Muller on uniform01 (portable, unlike std::normal_distribution).
inline double standard_normal(Rng& rng) {
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

/// Unbiased index in [0, n) by rejection sampling.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t r;
    do {
        r = rng();
    } while (r >= limit);
    return r % n;
}

/// Fisher-Yates shuffle driven by uniform_index.
template <typename Container>
void shuffle(Container& c, Rng& rng) {
    for (std::size_t i = c.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_index(rng, i));
        using std::swap;
        swap(c[i - 1], c[j]);
    }
}

}  // namespace snnr
