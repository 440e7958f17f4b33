#pragma once

// Deterministic randomness. Simulation output must be a pure function of
// (parameters, seed), replayable bit-for-bit, so the generator and all
// sampling helpers are implemented here instead of relying on std::*
// distributions, whose output is implementation-defined.

#include <array>
#include <cstdint>
#include <cstddef>
#include <vector>

namespace ebcast {

/// splitmix64 step: advances `state` and returns the next output word.
inline constexpr std::uint64_t splitmix64_next(std::uint64_t& state) noexcept {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// One-shot splitmix64 output for state `x`.
inline constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    std::uint64_t s = x;
    return splitmix64_next(s);
}

/// Seed of stream `index` in the family rooted at `base`.
/// Published derivation (used for per-trial seeds and stream splitting):
///   derive_seed(base, index) = mix64(base ^ mix64(index + 1))
inline constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
    return mix64(base ^ mix64(index + 1));
}

/// xoshiro256** engine, seeded through splitmix64.
class xoshiro256ss {
  public:
    using result_type = std::uint64_t;

    explicit xoshiro256ss(std::uint64_t seed = 0) noexcept {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64_next(sm);
        if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 0x9E3779B97F4A7C15ULL;
    }

    std::uint64_t next() noexcept {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1), 53 significant bits.
    double next_unit() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Unbiased uniform integer in [0, n); n must be positive.
    std::uint64_t next_below(std::uint64_t n) noexcept {
        const std::uint64_t rem = (0 - n) % n;  // 2^64 mod n
        for (;;) {
            const std::uint64_t r = next();
            if (r >= rem) return r % n;
        }
    }

    // UniformRandomBitGenerator interface.
    static constexpr std::uint64_t min() noexcept { return 0; }
    static constexpr std::uint64_t max() noexcept { return ~0ULL; }
    std::uint64_t operator()() noexcept { return next(); }

  private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }
    std::array<std::uint64_t, 4> state_{};
};

/// Fisher-Yates shuffle with the library engine (std::shuffle is
/// implementation-defined and would break replay across stdlibs).
template <class T>
void shuffle_in_place(std::vector<T>& items, xoshiro256ss& gen) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(gen.next_below(i));
        std::swap(items[i - 1], items[j]);
    }
}

/// k distinct elements drawn uniformly from `pool`, returned in pool order.
template <class T>
std::vector<T> sample_without_replacement(const std::vector<T>& pool, std::size_t k, xoshiro256ss& gen) {
    // Selection sampling: one pass, keeps relative order, O(|pool|).
    std::vector<T> out;
    out.reserve(k);
    std::size_t remaining = pool.size();
    std::size_t needed = k < pool.size() ? k : pool.size();
    for (const T& item : pool) {
        if (needed == 0) break;
        if (gen.next_below(remaining) < needed) {
            out.push_back(item);
            --needed;
        }
        --remaining;
    }
    return out;
}

}  // namespace ebcast
