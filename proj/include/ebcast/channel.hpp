#pragma once

// Two-receiver memoryless erasure broadcast channel with (possibly)
// correlated erasures. Each slot draws a pair (z1, z2) of erasure flags,
// i.i.d. across slots, from the joint law
//
//   Pr(z1=1, z2=1) = eps12
//   Pr(z1=1, z2=0) = eps1 - eps12
//   Pr(z1=0, z2=1) = eps2 - eps12
//   Pr(z1=0, z2=0) = 1 - eps1 - eps2 + eps12
//
// User 1 is the stronger user by convention: eps1 < eps2.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ebcast/errors.hpp"
#include "ebcast/rng.hpp"

namespace ebcast {

struct channel_params {
    double eps1 = 0.0;   // erasure rate, user 1 (stronger)
    double eps2 = 0.0;   // erasure rate, user 2 (weaker)
    double eps12 = 0.0;  // probability of a simultaneous erasure

    /// Independent erasures: eps12 = eps1 * eps2.
    static channel_params independent(double eps1, double eps2) {
        return {eps1, eps2, eps1 * eps2};
    }
};

struct slot_outcome {
    std::uint8_t z1 = 0;  // 1 = erased at user 1
    std::uint8_t z2 = 0;  // 1 = erased at user 2
};

/// The four joint masses, in the fixed sampling order (1,1),(1,0),(0,1),(0,0).
struct joint_pmf {
    double p11 = 0.0;
    double p10 = 0.0;
    double p01 = 0.0;
    double p00 = 0.0;
};

inline joint_pmf joint_masses(const channel_params& p) {
    return {p.eps12, p.eps1 - p.eps12, p.eps2 - p.eps12, 1.0 - p.eps1 - p.eps2 + p.eps12};
}

enum class param_check {
    ok,
    order_violation,       // eps1 >= eps2
    range_violation,       // some rate outside its interval
    joint_mass_violation,  // a joint mass outside [0, 1]
};

inline param_check check_params(const channel_params& p) {
    const bool in_open_unit = p.eps1 > 0.0 && p.eps1 < 1.0 && p.eps2 > 0.0 && p.eps2 < 1.0;
    if (!in_open_unit || !std::isfinite(p.eps12) || p.eps12 < 0.0 || p.eps12 > 1.0)
        return param_check::range_violation;
    if (!(p.eps1 < p.eps2)) return param_check::order_violation;
    const joint_pmf m = joint_masses(p);
    for (double mass : {m.p11, m.p10, m.p01, m.p00})
        if (mass < 0.0 || mass > 1.0) return param_check::joint_mass_violation;
    return param_check::ok;
}

inline void validate_params(const channel_params& p) {
    switch (check_params(p)) {
        case param_check::ok:
            return;
        case param_check::order_violation:
            throw validation_error(violation::order, "channel params: require eps1 < eps2");
        case param_check::range_violation:
            throw validation_error(violation::range, "channel params: rates outside valid range");
        case param_check::joint_mass_violation:
            throw validation_error(violation::joint_mass,
                                   "channel params: joint erasure mass outside [0, 1]");
    }
}

/// One slot draw. A single uniform real is mapped through the cumulative
/// masses in the fixed order (1,1),(1,0),(0,1),(0,0) so replay is bit-exact.
/// Params are assumed validated.
inline slot_outcome sample_slot(const channel_params& p, xoshiro256ss& gen) {
    const joint_pmf m = joint_masses(p);
    const double u = gen.next_unit();
    if (u < m.p11) return {1, 1};
    if (u < m.p11 + m.p10) return {1, 0};
    if (u < m.p11 + m.p10 + m.p01) return {0, 1};
    return {0, 0};
}

inline std::vector<slot_outcome> sample_sequence(const channel_params& p, std::size_t n,
                                                 xoshiro256ss& gen) {
    std::vector<slot_outcome> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sample_slot(p, gen));
    return out;
}

/// Validated channel owning its generator; one instance per simulation run.
class erasure_channel {
  public:
    erasure_channel(const channel_params& p, std::uint64_t seed) : params_(p), gen_(seed) {
        validate_params(p);
    }

    slot_outcome sample() { return sample_slot(params_, gen_); }
    const channel_params& params() const { return params_; }

  private:
    channel_params params_;
    xoshiro256ss gen_;
};

}  // namespace ebcast
