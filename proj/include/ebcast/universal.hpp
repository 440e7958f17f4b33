#pragma once

// Two-sided-feedback queue/XOR scheme.
//
// Phase 1: each source symbol is retransmitted until at least one user
// receives it. A symbol heard by exactly one user is queued for the other
// (q1 holds what user 1 still needs, all of it already held by user 2, and
// vice versa). Phase 2: while both users are short, the XOR of the two queue
// fronts is sent; each reception lets that user peel off its own front. Once
// only one user is short, its fronts are sent in the clear. Every reception
// by an unsatisfied user recovers exactly one fresh symbol, which is what
// pins the per-user latencies to w*(d_i, eps_i).

#include <cstdint>
#include <deque>
#include <vector>

#include "ebcast/bounds.hpp"
#include "ebcast/channel.hpp"
#include "ebcast/errors.hpp"
#include "ebcast/source.hpp"
#include "ebcast/trace.hpp"

namespace ebcast {

struct universal_result {
    scheme_report report;
    std::vector<trace_record> trace;
};

namespace detail {

struct crossing {
    std::uint64_t slot = 0;
    bool met = false;

    void update(std::uint64_t count, std::uint64_t demand, std::uint64_t at_slot) {
        if (!met && count >= demand) {
            met = true;
            slot = at_slot;
        }
    }
};

inline std::uint64_t slot_cap(std::uint64_t n, const channel_params& p) {
    return static_cast<std::uint64_t>(100.0 * static_cast<double>(n) / (1.0 - p.eps2)) + 100;
}

}  // namespace detail

template <class ChannelFn>
universal_result run_universal_with_channel(const source_block& src, const channel_params& p,
                                            const demand_pair& d, ChannelFn&& next_slot) {
    validate_params(p);
    validate_demands(d);

    const std::uint64_t n = src.size();
    const std::uint64_t demand1 = demand_threshold(d.d1, n);
    const std::uint64_t demand2 = demand_threshold(d.d2, n);
    const std::uint64_t cap = detail::slot_cap(n, p);

    universal_result res;
    res.trace.reserve(static_cast<std::size_t>(n) + n / 4);

    std::deque<std::uint32_t> q1, q2;  // q_i: missed by user i, held by user j
    std::uint64_t cnt1 = 0, cnt2 = 0;
    std::uint64_t slot = 0;
    detail::crossing cross1, cross2;
    cross1.update(cnt1, demand1, 0);
    cross2.update(cnt2, demand2, 0);

    auto push_record = [&](payload_kind kind, std::int64_t a, std::int64_t b, std::uint8_t payload,
                           slot_outcome z, phase_id ph) {
        res.trace.push_back(
            {slot, ph, kind, a, b, 0, payload, z.z1, z.z2, cnt1, cnt2});
    };
    auto satisfied = [&] { return cross1.met && cross2.met; };

    // Phase 1: uncoded, repeat until somebody hears it.
    std::uint64_t phase1_len = 0;
    for (std::uint64_t t = 0; t < n && !satisfied(); ++t) {
        const std::uint32_t idx = static_cast<std::uint32_t>(t);
        for (;;) {
            if (slot >= cap) throw runtime_exceeded_error("universal: slot cap exceeded");
            ++slot;
            const slot_outcome z = next_slot();
            const bool r1 = z.z1 == 0;
            const bool r2 = z.z2 == 0;
            if (r1) {
                ++cnt1;
                cross1.update(cnt1, demand1, slot);
            }
            if (r2) {
                ++cnt2;
                cross2.update(cnt2, demand2, slot);
            }
            if (r1 && !r2) q2.push_back(idx);
            if (r2 && !r1) q1.push_back(idx);
            push_record(payload_kind::uncoded, idx, -1, src.bits[t], z, phase_id::p1);
            if (r1 || r2) break;
        }
    }
    phase1_len = slot;

    // Phase 2: XOR of queue fronts while both are short, then clear-text
    // fronts for whoever remains.
    while (!satisfied()) {
        if (slot >= cap) throw runtime_exceeded_error("universal: slot cap exceeded");
        ++slot;
        if (!cross1.met && !cross2.met) {
            if (q1.empty() || q2.empty())
                throw internal_error("universal: both users short but a queue is empty");
            const std::uint32_t a = q1.front();
            const std::uint32_t b = q2.front();
            const std::uint8_t payload = src.bits[a] ^ src.bits[b];
            const slot_outcome z = next_slot();
            if (z.z1 == 0) {
                q1.pop_front();
                ++cnt1;
                cross1.update(cnt1, demand1, slot);
            }
            if (z.z2 == 0) {
                q2.pop_front();
                ++cnt2;
                cross2.update(cnt2, demand2, slot);
            }
            push_record(payload_kind::xor_pair, a, b, payload, z, phase_id::p2);
        } else if (!cross1.met) {
            if (q1.empty()) throw internal_error("universal: user 1 short with empty queue");
            const std::uint32_t a = q1.front();
            const slot_outcome z = next_slot();
            if (z.z1 == 0) {
                q1.pop_front();
                ++cnt1;
                cross1.update(cnt1, demand1, slot);
            }
            push_record(payload_kind::uncoded, a, -1, src.bits[a], z, phase_id::p2);
        } else {
            if (q2.empty()) throw internal_error("universal: user 2 short with empty queue");
            const std::uint32_t b = q2.front();
            const slot_outcome z = next_slot();
            if (z.z2 == 0) {
                q2.pop_front();
                ++cnt2;
                cross2.update(cnt2, demand2, slot);
            }
            push_record(payload_kind::uncoded, b, -1, src.bits[b], z, phase_id::p2);
        }
    }

    scheme_report& rep = res.report;
    rep.slots_total = slot;
    rep.phase_len = {phase1_len, slot - phase1_len, 0, 0};
    rep.met1 = cross1.met;
    rep.met2 = cross2.met;
    const double dn = static_cast<double>(n);
    rep.latency1 = static_cast<double>(cross1.met ? cross1.slot : slot) / dn;
    rep.latency2 = static_cast<double>(cross2.met ? cross2.slot : slot) / dn;
    rep.latency_max = std::max(rep.latency1, rep.latency2);
    rep.distortion1 = 1.0 - static_cast<double>(cnt1) / dn;
    rep.distortion2 = 1.0 - static_cast<double>(cnt2) / dn;
    return res;
}

inline universal_result run_universal(const source_block& src, const channel_params& p,
                                      const demand_pair& d, xoshiro256ss& gen) {
    return run_universal_with_channel(src, p, d, [&] { return sample_slot(p, gen); });
}

}  // namespace ebcast
