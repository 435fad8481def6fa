#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string_view>
#include <utility>

namespace galc {

/// Counter-based 64-bit generator.
///
/// The i-th output (i = 0, 1, ...) of a stream with key `seed` is
///
///     x = seed + (i + 1) * 0x9E3779B97F4A7C15   (mod 2^64)
///     x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9
///     x = (x ^ (x >> 27)) * 0x94D049BB133111EB
///     out = x ^ (x >> 31)
///
/// which is SplitMix64 evaluated at an explicit counter. The whole state is
/// (seed, counter), so streams can be checkpointed and resumed exactly.
class CounterRng {
   public:
    struct State {
        std::uint64_t seed = 0;
        std::uint64_t counter = 0;
        friend bool operator==(const State&, const State&) = default;
    };

    explicit CounterRng(std::uint64_t seed = 0) : state_{seed, 0} {}
    explicit CounterRng(State state) : state_(state) {}

    static constexpr std::uint64_t mix(std::uint64_t x) {
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    static constexpr std::uint64_t at(std::uint64_t seed, std::uint64_t counter) {
        return mix(seed + (counter + 1) * 0x9E3779B97F4A7C15ULL);
    }

    std::uint64_t next_u64() { return at(state_.seed, state_.counter++); }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    /// Unbiased integer in [0, bound) by rejection.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % bound;
    }

    /// Standard normal via Box-Muller (consumes two outputs).
    double normal() {
        const double u1 = 1.0 - next_unit();  // (0, 1]
        const double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    template <class T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    State state() const { return state_; }

   private:
    State state_;
};

/// FNV-1a over the bytes of `text`.
constexpr std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Per-stage seed: mix(global ^ fnv1a64(stage)).
constexpr std::uint64_t derive_seed(std::uint64_t global, std::string_view stage) {
    return CounterRng::mix(global ^ fnv1a64(stage));
}

}  // namespace galc
