#pragma once

// Counter-based random numbers shared by every stochastic component.
//
// The generator is SplitMix64: the state is a 64-bit counter advanced by the
// golden-ratio increment and each output is the Stafford "mix13" finalizer of
// the counter. Streams are addressed by hashing (seed, stream index, ...) into
// the starting counter, so the i-th draw of a stream never depends on how many
// other streams were consumed or in which order. Only integer arithmetic is
// involved in index sampling, which makes those draws identical on every
// platform. Normal variates go through std::log/std::sin and are reproducible
// to the extent the platform libm is.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <span>
#include <vector>

namespace bahc {

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Order-sensitive hash of a sequence of words, used to derive sub-seeds.
constexpr std::uint64_t hash_words(std::initializer_list<std::uint64_t> words) noexcept {
    std::uint64_t h = 0x6a09e667f3bcc909ULL;
    for (std::uint64_t w : words) {
        h = mix64(h + kGoldenGamma + mix64(w));
    }
    return h;
}

class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    constexpr result_type operator()() noexcept {
        state_ += kGoldenGamma;
        return mix64(state_);
    }

    /// Uniform integer in [0, bound) without modulo bias (Lemire's method).
    std::uint64_t uniform_index(std::uint64_t bound) noexcept {
        if (bound <= 1) {
            return 0;
        }
        unsigned __int128 product = static_cast<unsigned __int128>((*this)()) * bound;
        auto low = static_cast<std::uint64_t>(product);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                product = static_cast<unsigned __int128>((*this)()) * bound;
                low = static_cast<std::uint64_t>(product);
            }
        }
        return static_cast<std::uint64_t>(product >> 64);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Standard normal variate (Box-Muller, second value cached).
    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        const double u2 = uniform01();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    /// In-place Fisher-Yates shuffle with a platform-independent draw sequence.
    template <typename T>
    void shuffle(std::span<T> values) noexcept {
        for (std::size_t i = values.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(uniform_index(i));
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// k distinct indices drawn uniformly from [0, population), in draw order.
inline std::vector<std::size_t> sample_without_replacement(SplitMix64& rng, std::size_t population, std::size_t k) {
    std::vector<std::size_t> pool(population);
    for (std::size_t i = 0; i < population; ++i) {
        pool[i] = i;
    }
    for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.uniform_index(population - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

}  // namespace bahc
