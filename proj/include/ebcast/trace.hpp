#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace ebcast {

enum class phase_id : std::uint8_t { p1 = 1, p2 = 2, p3 = 3, p4 = 4 };

enum class payload_kind : std::uint8_t {
    uncoded,     // one source symbol in the clear
    xor_pair,    // XOR of the two queue fronts (universal scheme)
    repeat_rlc,  // repeated symbol plus a fresh combination over F (one-sided)
    rlc,         // fresh combination over F alone
};

inline const char* to_string(payload_kind k) {
    switch (k) {
        case payload_kind::uncoded: return "uncoded";
        case payload_kind::xor_pair: return "xor";
        case payload_kind::repeat_rlc: return "repeat+rlc";
        case payload_kind::rlc: return "rlc";
    }
    return "?";
}

/// One channel use. idx_a/idx_b name the source symbols involved (-1 when not
/// applicable); coef_slot addresses the coefficient schedule for rlc payloads;
/// rec1/rec2 are cumulative recovered-or-determined counts after the slot.
struct trace_record {
    std::uint64_t slot = 0;  // 1-based
    phase_id phase = phase_id::p1;
    payload_kind kind = payload_kind::uncoded;
    std::int64_t idx_a = -1;
    std::int64_t idx_b = -1;
    std::uint64_t coef_slot = 0;
    std::uint8_t payload = 0;
    std::uint8_t z1 = 0;
    std::uint8_t z2 = 0;
    std::uint64_t rec1 = 0;
    std::uint64_t rec2 = 0;
};

/// Per-run results common to both schemes. Latencies are the first slots at
/// which the per-user recovered-or-determined counts reached their demand
/// thresholds, divided by the block length; a demand not met within the run
/// is censored at the run's end (met_i reports which happened). Distortions
/// are realized fractions of symbols left unrecovered at the end of the run.
struct scheme_report {
    double latency1 = 0.0;
    double latency2 = 0.0;
    double latency_max = 0.0;
    double distortion1 = 0.0;
    double distortion2 = 0.0;
    std::uint64_t slots_total = 0;
    std::array<std::uint64_t, 4> phase_len{};  // the universal scheme uses [0] and [1]
    bool met1 = false;
    bool met2 = false;
};

}  // namespace ebcast
