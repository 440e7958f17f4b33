#pragma once

#include <cstdint>
#include <vector>

#include "ebcast/rng.hpp"

namespace ebcast {

/// Length-n equiprobable binary source sequence.
struct source_block {
    std::vector<std::uint8_t> bits;

    std::size_t size() const { return bits.size(); }
};

inline source_block random_source(std::size_t n, xoshiro256ss& gen) {
    source_block src;
    src.bits.resize(n);
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if ((i & 63) == 0) word = gen.next();
        src.bits[i] = static_cast<std::uint8_t>((word >> (i & 63)) & 1);
    }
    return src;
}

}  // namespace ebcast
