#pragma once

// One-sided-feedback hybrid scheme. Only the strong user's erasure pattern
// is ever visible to the encoder; every encoding decision here is a function
// of (source, shared seed, Z1 history) alone, which the replay tests check
// byte-for-byte against perturbed Z2 sequences.
//
// Phase I   : one uncoded pass over the block.
// Planning  : B = symbols user 1 still needs beyond its distortion budget,
//             split into a coded part B_theta and a repeated part B_theta_bar;
//             C = a gamma-fraction of symbols user 1 already holds;
//             F = B_theta ∪ C is the coding set. (theta, gamma) solve
//             L(gamma, theta) = eps2 - d2 so the weak user is fed exactly
//             the symbol mass it is missing.
// Phase II  : each b in B_theta_bar is sent as b + v(t), v(t) a fresh random
//             combination over F, repeated until user 1 receives it.
// Phase III : fresh combinations over F until user 1 can decode all of B.
// Phase IV  : exactly n4 = round(n * max(0, w2* - w1*)) more combinations,
//             with no feedback consulted, to finish the weak user.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ebcast/bounds.hpp"
#include "ebcast/channel.hpp"
#include "ebcast/errors.hpp"
#include "ebcast/gf2.hpp"
#include "ebcast/source.hpp"
#include "ebcast/trace.hpp"
#include "ebcast/universal.hpp"

namespace ebcast {

struct phase_plan {
    hybrid_params hp;
    std::vector<std::uint32_t> b_set;        // ascending
    std::vector<std::uint32_t> b_theta;      // ascending, subset of b_set
    std::vector<std::uint32_t> b_theta_bar;  // in transmission order
    std::vector<std::uint32_t> c_set;        // ascending, subset of user-1 receptions
    std::vector<std::uint32_t> f_set;        // b_theta followed by c_set; schedule order
    std::uint64_t n4 = 0;
    std::uint64_t coef_seed = 0;
};

namespace detail {

inline std::uint64_t floor_units(double x) {
    return static_cast<std::uint64_t>(std::floor(x + 1e-9));
}
inline std::uint64_t ceil_units(double x) {
    return static_cast<std::uint64_t>(std::ceil(x - 1e-9));
}
inline std::uint64_t round_units(double x) { return static_cast<std::uint64_t>(std::llround(x)); }

}  // namespace detail

/// Build the phase plan from the realized Phase-I reception pattern of the
/// strong user. Consumes `gen` in a fixed order: b_set draw, b_theta draw,
/// b_theta_bar shuffle, c_set draw, coefficient seed.
inline phase_plan plan_onesided(const channel_params& p, const demand_pair& d, std::uint64_t n,
                                const std::vector<std::uint8_t>& z1_phase1, xoshiro256ss& gen) {
    validate_params(p);
    validate_demands(d);
    if (z1_phase1.size() != n) throw internal_error("plan: Phase-I pattern length mismatch");

    std::vector<std::uint32_t> missed1, received1;
    missed1.reserve(n / 4);
    received1.reserve(n);
    for (std::uint64_t t = 0; t < n; ++t)
        (z1_phase1[t] ? missed1 : received1).push_back(static_cast<std::uint32_t>(t));

    phase_plan plan;
    const double d1_eff = std::min(d.d1, p.eps1);
    plan.hp = select_params(hybrid_coefficients(p, d1_eff), std::max(0.0, p.eps2 - d.d2));

    if (d.d1 < p.eps1) {
        const std::uint64_t budget = detail::floor_units(d.d1 * static_cast<double>(n));
        const std::uint64_t b_count = missed1.size() > budget ? missed1.size() - budget : 0;
        plan.b_set = sample_without_replacement(missed1, b_count, gen);
    }
    const std::uint64_t bt_count =
        detail::ceil_units(plan.hp.theta * static_cast<double>(plan.b_set.size()));
    plan.b_theta = sample_without_replacement(plan.b_set, bt_count, gen);
    std::set_difference(plan.b_set.begin(), plan.b_set.end(), plan.b_theta.begin(),
                        plan.b_theta.end(), std::back_inserter(plan.b_theta_bar));
    shuffle_in_place(plan.b_theta_bar, gen);

    const std::uint64_t c_count =
        detail::round_units(plan.hp.gamma * static_cast<double>(received1.size()));
    plan.c_set = sample_without_replacement(received1, c_count, gen);

    plan.f_set = plan.b_theta;
    plan.f_set.insert(plan.f_set.end(), plan.c_set.begin(), plan.c_set.end());

    const double w1 = w_star(d.d1, p.eps1);
    const double w2 = w_star(d.d2, p.eps2);
    plan.n4 = detail::round_units(static_cast<double>(n) * std::max(0.0, w2 - w1));
    plan.coef_seed = gen.next();
    return plan;
}

struct onesided_result {
    scheme_report report;
    phase_plan plan;
    std::vector<trace_record> trace;
};

template <class ChannelFn>
onesided_result run_onesided_with_channel(const source_block& src, const channel_params& p,
                                          const demand_pair& d, std::uint64_t scheme_seed,
                                          ChannelFn&& next_slot) {
    validate_params(p);
    validate_demands(d);

    const std::uint64_t n = src.size();
    const std::uint64_t demand1 = demand_threshold(d.d1, n);
    const std::uint64_t demand2 = demand_threshold(d.d2, n);
    const std::uint64_t cap = detail::slot_cap(n, p);

    onesided_result res;
    res.trace.reserve(static_cast<std::size_t>(n) + n / 4);

    std::uint64_t slot = 0;
    std::uint64_t received1 = 0, received2 = 0;
    std::vector<std::uint8_t> z1_pattern(n, 0), miss2(n, 0);
    detail::crossing cross1, cross2;
    cross1.update(0, demand1, 0);
    cross2.update(0, demand2, 0);

    // Phase I: one uncoded pass.
    for (std::uint64_t t = 0; t < n; ++t) {
        ++slot;
        const slot_outcome z = next_slot();
        z1_pattern[t] = z.z1;
        miss2[t] = z.z2;
        if (z.z1 == 0) {
            ++received1;
            cross1.update(received1, demand1, slot);
        }
        if (z.z2 == 0) {
            ++received2;
            cross2.update(received2, demand2, slot);
        }
        res.trace.push_back({slot, phase_id::p1, payload_kind::uncoded,
                             static_cast<std::int64_t>(t), -1, 0, src.bits[t], z.z1, z.z2,
                             received1, received2});
    }

    xoshiro256ss scheme_gen(scheme_seed);
    res.plan = plan_onesided(p, d, n, z1_pattern, scheme_gen);
    const phase_plan& plan = res.plan;
    const coefficient_schedule schedule(plan.coef_seed, plan.f_set);

    // Receiver banks. User 1 solves for B; user 2 solves for everything it
    // missed in Phase I, with its Phase-I receptions substituted as knowns.
    equation_bank bank1(plan.b_set);
    std::vector<std::uint32_t> m2;
    m2.reserve(n / 4);
    for (std::uint64_t t = 0; t < n; ++t)
        if (miss2[t]) m2.push_back(static_cast<std::uint32_t>(t));
    equation_bank bank2(m2);

    const std::size_t f_count = plan.f_set.size();
    const std::size_t f_words = words_for(f_count);
    const std::size_t b1_words = words_for(bank1.unknown_count());
    const std::size_t b2_words = words_for(bank2.unknown_count());

    // Packed views of the coding set F, position-aligned with the schedule.
    bit_words f_values(f_words, 0);       // true source bits on F
    bit_words known1_values(f_words, 0);  // source bits on positions user 1 holds (C)
    bit_words known2_values(f_words, 0);  // source bits on positions user 2 holds
    bit_words unknown1_mask(f_words, 0);  // positions user 1 must solve (B_theta)
    bit_words unknown2_mask(f_words, 0);
    std::vector<std::int32_t> col1_of_pos(f_count, -1), col2_of_pos(f_count, -1);
    for (std::size_t k = 0; k < f_count; ++k) {
        const std::uint32_t idx = plan.f_set[k];
        if (src.bits[idx]) toggle_bit(f_values, k);
        const bool u1_unknown = k < plan.b_theta.size();  // f_set = b_theta ++ c_set
        if (u1_unknown) {
            toggle_bit(unknown1_mask, k);
            col1_of_pos[k] = static_cast<std::int32_t>(bank1.column_of(idx));
        } else if (src.bits[idx]) {
            toggle_bit(known1_values, k);
        }
        if (miss2[idx]) {
            toggle_bit(unknown2_mask, k);
            col2_of_pos[k] = static_cast<std::int32_t>(bank2.column_of(idx));
        } else if (src.bits[idx]) {
            toggle_bit(known2_values, k);
        }
    }
    std::vector<std::int32_t> col2_of_src(n, -1);
    for (std::size_t c = 0; c < m2.size(); ++c) col2_of_src[m2[c]] = static_cast<std::int32_t>(c);

    auto scatter = [](const bit_words& coeff, const bit_words& mask,
                      const std::vector<std::int32_t>& col_of_pos, std::size_t out_words) {
        bit_words row(out_words, 0);
        for (std::size_t w = 0; w < coeff.size(); ++w) {
            std::uint64_t bits = coeff[w] & mask[w];
            while (bits != 0) {
                const std::size_t k = (w << 6) + static_cast<std::size_t>(std::countr_zero(bits));
                toggle_bit(row, static_cast<std::size_t>(col_of_pos[k]));
                bits &= bits - 1;
            }
        }
        return row;
    };

    auto feed_user1 = [&](const bit_words& coeff, std::uint8_t payload, std::int64_t repeated) {
        bool rhs = (payload & 1) ^ parity_and(coeff, known1_values);
        bit_words row = scatter(coeff, unknown1_mask, col1_of_pos, b1_words);
        if (repeated >= 0) toggle_bit(row, bank1.column_of(static_cast<std::uint32_t>(repeated)));
        bank1.add_packed(std::move(row), rhs);
    };
    auto feed_user2 = [&](const bit_words& coeff, std::uint8_t payload, std::int64_t repeated) {
        bool rhs = (payload & 1) ^ parity_and(coeff, known2_values);
        bit_words row = scatter(coeff, unknown2_mask, col2_of_pos, b2_words);
        if (repeated >= 0) {
            const std::int32_t col = col2_of_src[static_cast<std::size_t>(repeated)];
            if (col >= 0)
                toggle_bit(row, static_cast<std::size_t>(col));
            else
                rhs ^= src.bits[static_cast<std::size_t>(repeated)] & 1;
        }
        bank2.add_packed(std::move(row), rhs);
    };

    auto count1 = [&] { return received1 + bank1.determined_count(); };
    auto count2 = [&] { return received2 + bank2.determined_count(); };

    // One coded slot: payload = (repeated symbol, if any) + fresh combination
    // over F. The encoder side touches nothing derived from Z2.
    auto coded_slot = [&](phase_id phase, payload_kind kind, std::int64_t repeated,
                          bool user1_listens) {
        if (slot >= cap) throw runtime_exceeded_error("one-sided: slot cap exceeded");
        ++slot;
        const bit_words coeff = schedule.coefficients(slot);
        std::uint8_t payload = f_count == 0 ? 0 : static_cast<std::uint8_t>(parity_and(coeff, f_values));
        if (repeated >= 0) payload ^= src.bits[static_cast<std::size_t>(repeated)];
        const slot_outcome z = next_slot();
        if (z.z1 == 0 && user1_listens) {
            feed_user1(coeff, payload, repeated);
            cross1.update(count1(), demand1, slot);
        }
        if (z.z2 == 0) {
            feed_user2(coeff, payload, repeated);
            cross2.update(count2(), demand2, slot);
        }
        res.trace.push_back(
            {slot, phase, kind, repeated, -1, slot, payload, z.z1, z.z2, count1(), count2()});
        return z;
    };

    // Phase II: modified repetition of B_theta_bar.
    for (std::uint32_t b : plan.b_theta_bar) {
        for (;;) {
            const slot_outcome z =
                coded_slot(phase_id::p2, payload_kind::repeat_rlc, b, true);
            if (z.z1 == 0) break;
        }
    }
    const std::uint64_t phase2_len = slot - n;

    // Phase III: combinations over F until user 1 has all of B.
    while (!bank1.is_fully_determined()) {
        if (f_count == 0) throw internal_error("one-sided: user 1 undetermined with empty F");
        coded_slot(phase_id::p3, payload_kind::rlc, -1, true);
    }
    const std::uint64_t phase3_len = slot - n - phase2_len;

    // Phase IV: fixed length, feedback-free.
    for (std::uint64_t i = 0; i < plan.n4; ++i)
        coded_slot(phase_id::p4, payload_kind::rlc, -1, false);

    scheme_report& rep = res.report;
    rep.slots_total = slot;
    rep.phase_len = {n, phase2_len, phase3_len, plan.n4};
    rep.met1 = cross1.met;
    rep.met2 = cross2.met;
    const double dn = static_cast<double>(n);
    rep.latency1 = static_cast<double>(cross1.met ? cross1.slot : slot) / dn;
    rep.latency2 = static_cast<double>(cross2.met ? cross2.slot : slot) / dn;
    rep.latency_max = std::max(rep.latency1, rep.latency2);
    rep.distortion1 = 1.0 - static_cast<double>(count1()) / dn;
    rep.distortion2 = 1.0 - static_cast<double>(count2()) / dn;
    return res;
}

/// Standard entry point: derives one channel stream and one scheme stream
/// from `gen` (in that order) and runs the scheme.
inline onesided_result run_onesided(const source_block& src, const channel_params& p,
                                    const demand_pair& d, xoshiro256ss& gen) {
    const std::uint64_t channel_seed = gen.next();
    const std::uint64_t scheme_seed = gen.next();
    erasure_channel channel(p, channel_seed);
    return run_onesided_with_channel(src, p, d, scheme_seed, [&] { return channel.sample(); });
}

/// Fraction of the source that appears as still-unknown variables in the
/// equations the weak user received from Phase II onward. Its trial mean
/// estimates the load L(gamma, theta). Recomputed from the transcript and
/// the public schedule, independently of the in-run bookkeeping.
inline double measure_unknown_load(const std::vector<trace_record>& trace, const phase_plan& plan,
                                   std::uint64_t n) {
    std::vector<std::uint8_t> miss2(n, 0);
    for (const trace_record& r : trace)
        if (r.phase == phase_id::p1) miss2[static_cast<std::size_t>(r.idx_a)] = r.z2;

    const coefficient_schedule schedule(plan.coef_seed, plan.f_set);
    std::vector<std::uint8_t> in_union(n, 0);
    for (const trace_record& r : trace) {
        if (r.phase == phase_id::p1 || r.z2 != 0) continue;
        const bit_words coeff = schedule.coefficients(r.coef_slot);
        for (std::size_t k = 0; k < plan.f_set.size(); ++k) {
            const std::uint32_t idx = plan.f_set[k];
            if (miss2[idx] && get_bit(coeff, k)) in_union[idx] = 1;
        }
        if (r.kind == payload_kind::repeat_rlc && miss2[static_cast<std::size_t>(r.idx_a)])
            in_union[static_cast<std::size_t>(r.idx_a)] = 1;
    }
    std::uint64_t total = 0;
    for (std::uint8_t b : in_union) total += b;
    return static_cast<double>(total) / static_cast<double>(n);
}

}  // namespace ebcast
