#pragma once

// Closed-form latency bounds and the hybrid-scheme parameter solver.
//
// Per-user point-to-point optimum:    w*(d, eps) = (1 - d) / (1 - eps)
// Minmax target:                      w+ = max(w1*, w2*)
// Hybrid load carried to the weak user from the coded phases onward:
//   L(gamma, theta) = k1*gamma + k2*theta + k3, with
//     k1 = (1 - eps1) * eps2
//     k2 = eps2^2 * (eps1 - d1) * (1 - eps1) / (1 - eps12)
//     k3 = eps2  * (eps1 - d1) * (1 - eps2) / (1 - eps12)
// Denominators use (1 - eps12); with independent erasures
// (eps12 = eps1*eps2) these reduce to the familiar (1 - eps1*eps2) forms.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "ebcast/channel.hpp"
#include "ebcast/errors.hpp"

namespace ebcast {

struct demand_pair {
    double d1 = 0.0;  // erasure-distortion fraction allowed to user 1
    double d2 = 0.0;
};

inline void validate_demands(const demand_pair& d) {
    if (!(d.d1 >= 0.0 && d.d1 <= 1.0) || !(d.d2 >= 0.0 && d.d2 <= 1.0))
        throw validation_error(violation::range, "demands: distortions must lie in [0, 1]");
}

/// Both demands below their erasure rates; outside this regime parts of the
/// coding degenerate (a user is already served by the uncoded pass).
inline bool nontrivial_regime(const demand_pair& d, const channel_params& p) {
    return d.d1 < p.eps1 && d.d2 < p.eps2;
}

/// Number of symbols user i must recover: ceil((1 - d) * n), nudged against
/// binary representation noise in decimal inputs.
inline std::uint64_t demand_threshold(double d, std::uint64_t n) {
    const double x = (1.0 - d) * static_cast<double>(n);
    return static_cast<std::uint64_t>(std::ceil(x - 1e-9));
}

/// Point-to-point optimal latency (1 - d) / (1 - eps).
inline double w_star(double d, double eps) {
    if (!(d >= 0.0 && d <= 1.0))
        throw validation_error(violation::range, "w_star: d outside [0, 1]");
    if (!(eps > 0.0 && eps < 1.0))
        throw validation_error(violation::range, "w_star: eps outside (0, 1)");
    return (1.0 - d) / (1.0 - eps);
}

/// Minmax latency target max_i w*(d_i, eps_i).
inline double w_plus(const demand_pair& d, const channel_params& p) {
    return std::max(w_star(d.d1, p.eps1), w_star(d.d2, p.eps2));
}

/// Distortion reached after w*n uncoded-pass transmissions: 1 - w(1 - eps).
/// Inverse of w_star on [0, 1/(1 - eps)].
inline double distortion_at_latency(double w, double eps) {
    if (!(eps > 0.0 && eps < 1.0))
        throw validation_error(violation::range, "distortion_at_latency: eps outside (0, 1)");
    if (!(w >= 0.0 && w <= 1.0 / (1.0 - eps) + 1e-12))
        throw validation_error(violation::range, "distortion_at_latency: w outside [0, 1/(1-eps)]");
    return std::max(0.0, 1.0 - w * (1.0 - eps));
}

struct hybrid_params {
    double theta = 0.0;  // coded share of user-1's outstanding symbols
    double gamma = 0.0;  // share of user-1-received symbols folded into F
};

struct hybrid_coeffs {
    double k1 = 0.0;
    double k2 = 0.0;
    double k3 = 0.0;

    double sum() const { return k1 + k2 + k3; }
};

inline hybrid_coeffs hybrid_coefficients(const channel_params& p, double d1) {
    validate_params(p);
    if (!(d1 >= 0.0 && d1 <= p.eps1))
        throw validation_error(violation::range, "hybrid_coefficients: require 0 <= d1 <= eps1");
    const double gap = p.eps1 - d1;
    const double denom = 1.0 - p.eps12;
    hybrid_coeffs k;
    k.k1 = (1.0 - p.eps1) * p.eps2;
    k.k2 = p.eps2 * p.eps2 * gap * (1.0 - p.eps1) / denom;
    k.k3 = p.eps2 * gap * (1.0 - p.eps2) / denom;
    return k;
}

/// Expected fraction of source symbols that reach the weak user as unknowns
/// from the coded phases onward.
inline double load_l(const hybrid_coeffs& k, const hybrid_params& hp) {
    return k.k1 * hp.gamma + k.k2 * hp.theta + k.k3;
}

struct weak_capacity {
    double c23 = 0.0;             // per-symbol capacity to the weak user over phases II-III
    double w23_per_symbol = 0.0;  // mean phase II-III length per source symbol
};

inline weak_capacity capacity_c23(const channel_params& p, double d1) {
    validate_params(p);
    if (!(d1 >= 0.0 && d1 <= p.eps1))
        throw validation_error(violation::range, "capacity_c23: require 0 <= d1 <= eps1");
    const double gap = p.eps1 - d1;
    return {gap * (1.0 - p.eps2) / (1.0 - p.eps1), gap / (1.0 - p.eps1)};
}

/// Probability that the weak user hears a symbol at least once during a
/// repetition run that ends at the strong user's first reception.
inline double race_probability(const channel_params& p) {
    return (1.0 - p.eps2) / (1.0 - p.eps12);
}

/// Deterministic solution of L(gamma, theta) = target on [0,1]^2.
/// Fills theta before gamma, preferring repetition (instantly decodable)
/// over coding; when even theta = gamma = 0 over-delivers (target < k3) the
/// repetition-only plan is returned. Throws infeasible_error when the target
/// exceeds the maximum load k1 + k2 + k3, i.e. when d2 < eps2 * d1.
inline hybrid_params select_params(const hybrid_coeffs& k, double target) {
    if (!(target >= 0.0))
        throw validation_error(violation::range, "select_params: target must be >= 0");
    if (target <= k.k3) return {0.0, 0.0};
    if (k.k2 > 0.0 && target <= k.k2 + k.k3)
        return {std::clamp((target - k.k3) / k.k2, 0.0, 1.0), 0.0};
    if (target <= k.sum() + 1e-12) {
        const double gamma = k.k1 > 0.0 ? std::clamp((target - k.k2 - k.k3) / k.k1, 0.0, 1.0) : 0.0;
        return {1.0, gamma};
    }
    throw infeasible_error("select_params: target " + std::to_string(target) +
                           " exceeds max load " + std::to_string(k.sum()) +
                           " (demand d2 < eps2 * d1 is not coverable)");
}

struct region_bounds {
    double c_dagger = 0.0;
    double d_dagger = 0.0;
    std::array<double, 3> d1_edges{};  // diagnostic only, not used by select_params
};

inline region_bounds region_boundaries(const channel_params& p, double d1) {
    validate_params(p);
    if (!(d1 >= 0.0 && d1 <= 1.0))
        throw validation_error(violation::range, "region_boundaries: d1 outside [0, 1]");
    const double denom = 1.0 - p.eps12;
    region_bounds rb;
    rb.c_dagger = (p.eps12 * (1.0 - p.eps1) + d1 * (1.0 - p.eps2)) / denom;
    rb.d_dagger = ((1.0 - p.eps1) + d1 * (1.0 - p.eps2)) / denom;
    rb.d1_edges = {2.0 * (p.eps12 - 1.0) / p.eps2, p.eps1 * p.eps1 * p.eps2, p.eps1};
    return rb;
}

/// Everything the closed forms say about one (params, demands) cell.
struct bounds_report {
    double w1_star = 0.0;
    double w2_star = 0.0;
    double w_plus = 0.0;
    double k1 = 0.0, k2 = 0.0, k3 = 0.0;
    bool feasible = false;
    double theta = 0.0, gamma = 0.0;  // meaningful when feasible
    double load_l = 0.0;              // L at (theta, gamma) when feasible
    double c23 = 0.0;
    double w23_per_symbol = 0.0;
    double c_dagger = 0.0;
    double d_dagger = 0.0;
    std::array<double, 3> d1_edges{};
};

inline bounds_report make_bounds_report(const channel_params& p, const demand_pair& d) {
    validate_params(p);
    validate_demands(d);
    bounds_report r;
    r.w1_star = w_star(d.d1, p.eps1);
    r.w2_star = w_star(d.d2, p.eps2);
    r.w_plus = std::max(r.w1_star, r.w2_star);
    const double d1_eff = std::min(d.d1, p.eps1);
    const hybrid_coeffs k = hybrid_coefficients(p, d1_eff);
    r.k1 = k.k1;
    r.k2 = k.k2;
    r.k3 = k.k3;
    const weak_capacity cap = capacity_c23(p, d1_eff);
    r.c23 = cap.c23;
    r.w23_per_symbol = cap.w23_per_symbol;
    const region_bounds rb = region_boundaries(p, d.d1);
    r.c_dagger = rb.c_dagger;
    r.d_dagger = rb.d_dagger;
    r.d1_edges = rb.d1_edges;
    try {
        const hybrid_params hp = select_params(k, std::max(0.0, p.eps2 - d.d2));
        r.theta = hp.theta;
        r.gamma = hp.gamma;
        r.load_l = load_l(k, hp);
        r.feasible = true;
    } catch (const infeasible_error&) {
        r.feasible = false;
    }
    return r;
}

}  // namespace ebcast
