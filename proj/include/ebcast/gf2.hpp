#pragma once

// GF(2) machinery for the random-linear-combination phases:
//   - coefficient_schedule: pseudorandom fair-binary coefficient vectors,
//     reproducible by every party from a shared public seed, so coefficient
//     headers never consume channel slots;
//   - equation_bank: a receiver-side linear system kept in reduced
//     row-echelon form with incremental elimination, supporting partial
//     recovery queries (which unknowns are already pinned down).

#include <bit>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ebcast/errors.hpp"
#include "ebcast/rng.hpp"

namespace ebcast {

using bit_words = std::vector<std::uint64_t>;

inline std::size_t words_for(std::size_t bits) { return (bits + 63) / 64; }

inline bool get_bit(const bit_words& w, std::size_t i) {
    return (w[i >> 6] >> (i & 63)) & 1ULL;
}

inline void toggle_bit(bit_words& w, std::size_t i) { w[i >> 6] ^= 1ULL << (i & 63); }

inline void xor_words(bit_words& dst, const bit_words& src) {
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] ^= src[i];
}

inline std::size_t popcount_words(const bit_words& w) {
    std::size_t c = 0;
    for (std::uint64_t word : w) c += static_cast<std::size_t>(std::popcount(word));
    return c;
}

/// Parity of the AND of two equally sized packed vectors (GF(2) inner product).
inline bool parity_and(const bit_words& a, const bit_words& b) {
    std::uint64_t acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) acc ^= a[i] & b[i];
    return std::popcount(acc) & 1;
}

/// Fair-binary coefficient vectors over a fixed support, addressed by slot.
/// The vector for slot t is a pure function of (seed, t, support): transmitter
/// and both receivers regenerate identical coefficients with no exchange.
class coefficient_schedule {
  public:
    coefficient_schedule() = default;
    coefficient_schedule(std::uint64_t seed, std::vector<std::uint32_t> support)
        : seed_(seed), support_(std::move(support)) {}

    std::uint64_t seed() const { return seed_; }
    std::size_t size() const { return support_.size(); }
    const std::vector<std::uint32_t>& support() const { return support_; }

    /// Packed coefficient bits for slot t; bit k belongs to support()[k].
    bit_words coefficients(std::uint64_t slot) const {
        bit_words words(words_for(support_.size()), 0);
        xoshiro256ss gen(derive_seed(seed_, slot));
        for (auto& w : words) w = gen.next();
        const std::size_t tail = support_.size() & 63;
        if (!words.empty() && tail != 0) words.back() &= (1ULL << tail) - 1;
        return words;
    }

    bool coefficient(std::uint64_t slot, std::size_t k) const {
        return get_bit(coefficients(slot), k);
    }

    /// GF(2) inner product of the slot-t coefficients with `values`, which
    /// must cover the support position-by-position. Empty support -> 0.
    bool combine(std::uint64_t slot, std::span<const std::uint8_t> values) const {
        const bit_words coeff = coefficients(slot);
        bool acc = false;
        for (std::size_t k = 0; k < support_.size(); ++k)
            if (get_bit(coeff, k) && (values[k] & 1)) acc = !acc;
        return acc;
    }

    bool combine_packed(std::uint64_t slot, const bit_words& packed_values) const {
        if (support_.empty()) return false;
        return parity_and(coefficients(slot), packed_values);
    }

  private:
    std::uint64_t seed_ = 0;
    std::vector<std::uint32_t> support_;
};

inline bool make_combination(const coefficient_schedule& sched, std::uint64_t slot,
                             std::span<const std::uint8_t> values_on_support) {
    return sched.combine(slot, values_on_support);
}

/// Receiver-side GF(2) linear system over a fixed set of source-index
/// unknowns, maintained in reduced row-echelon form. Adding an equation
/// reports whether it was innovative (raised the rank). An unknown is
/// *determined* once the row space implies its value: its pivot row has no
/// support on free columns, i.e. the row weight is 1. Determined values are
/// monotone: they never change or disappear as equations arrive.
class equation_bank {
  public:
    explicit equation_bank(std::vector<std::uint32_t> unknowns) : unknowns_(std::move(unknowns)) {
        words_ = words_for(unknowns_.size());
        row_of_col_.assign(unknowns_.size(), -1);
        col_of_.reserve(unknowns_.size());
        for (std::uint32_t c = 0; c < unknowns_.size(); ++c) {
            if (!col_of_.emplace(unknowns_[c], c).second)
                throw internal_error("equation bank: duplicate unknown index");
        }
    }

    std::size_t unknown_count() const { return unknowns_.size(); }
    std::size_t rank() const { return rows_.size(); }
    std::size_t determined_count() const { return determined_; }
    bool is_fully_determined() const { return rows_.size() == unknowns_.size(); }
    const std::vector<std::uint32_t>& unknowns() const { return unknowns_; }
    std::size_t column_of(std::uint32_t source_index) const {
        auto it = col_of_.find(source_index);
        if (it == col_of_.end()) throw unknown_index_error("equation bank: index not tracked");
        return it->second;
    }
    bool tracks(std::uint32_t source_index) const { return col_of_.count(source_index) != 0; }

    /// Add the equation sum_{i in indices} x_i = rhs. An index listed twice
    /// cancels (GF(2) sum). Returns true iff the rank increased.
    bool add_equation(std::span<const std::uint32_t> indices, bool rhs) {
        bit_words row(words_, 0);
        for (std::uint32_t idx : indices) toggle_bit(row, column_of(idx));
        return add_packed(std::move(row), rhs);
    }

    /// Same, with the row already packed against this bank's column order.
    bool add_packed(bit_words row, bool rhs) {
        // Clear every pivot column in one ascending pass. A pivot column is
        // set in its own row only, so XORing a pivot row in can toggle free
        // columns but never re-set a pivot column.
        for (std::size_t w = 0; w < words_; ++w) {
            std::uint64_t pending = row[w];
            while (pending != 0) {
                const std::size_t col = (w << 6) + static_cast<std::size_t>(std::countr_zero(pending));
                const std::int32_t r = row_of_col_[col];
                if (r >= 0) {
                    xor_words(row, rows_[static_cast<std::size_t>(r)].bits);
                    rhs ^= rows_[static_cast<std::size_t>(r)].rhs;
                }
                pending = row[w] & ~((~0ULL) >> (63 - (col & 63)));  // bits strictly above col
            }
        }

        const std::size_t pivot = first_set(row);
        if (pivot == npos) {
            if (rhs) throw internal_error("equation bank: inconsistent equation");
            return false;  // redundant
        }

        // Fold the new pivot out of every stored row that carries it.
        for (auto& existing : rows_) {
            if (!get_bit(existing.bits, pivot)) continue;
            xor_words(existing.bits, row);
            existing.rhs ^= rhs;
            const std::size_t old_weight = existing.weight;
            existing.weight = popcount_words(existing.bits);
            determined_ += (existing.weight == 1) ? 1 : 0;
            determined_ -= (old_weight == 1) ? 1 : 0;
        }

        const std::size_t weight = popcount_words(row);
        row_of_col_[pivot] = static_cast<std::int32_t>(rows_.size());
        rows_.push_back(row_t{std::move(row), rhs, static_cast<std::uint32_t>(pivot), weight});
        if (weight == 1) ++determined_;
        return true;
    }

    /// Exactly those unknowns whose value the row space implies, with their
    /// values; sorted by column order. Consistent with every stored equation.
    std::vector<std::pair<std::uint32_t, bool>> determined_values() const {
        std::vector<std::pair<std::uint32_t, bool>> out;
        out.reserve(determined_);
        for (std::size_t col = 0; col < unknowns_.size(); ++col) {
            const std::int32_t r = row_of_col_[col];
            if (r >= 0 && rows_[static_cast<std::size_t>(r)].weight == 1)
                out.emplace_back(unknowns_[col], rows_[static_cast<std::size_t>(r)].rhs);
        }
        return out;
    }

    /// Value of one unknown, if determined.
    std::optional<bool> value_of(std::uint32_t source_index) const {
        const std::size_t col = column_of(source_index);
        const std::int32_t r = row_of_col_[col];
        if (r < 0 || rows_[static_cast<std::size_t>(r)].weight != 1) return std::nullopt;
        return rows_[static_cast<std::size_t>(r)].rhs;
    }

  private:
    struct row_t {
        bit_words bits;
        bool rhs;
        std::uint32_t pivot;
        std::size_t weight;
    };

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    std::size_t first_set(const bit_words& row) const {
        for (std::size_t w = 0; w < words_; ++w)
            if (row[w] != 0) return (w << 6) + static_cast<std::size_t>(std::countr_zero(row[w]));
        return npos;
    }

    std::vector<std::uint32_t> unknowns_;
    std::unordered_map<std::uint32_t, std::uint32_t> col_of_;
    std::vector<row_t> rows_;
    std::vector<std::int32_t> row_of_col_;
    std::size_t determined_ = 0;
    std::size_t words_ = 0;
};

}  // namespace ebcast
