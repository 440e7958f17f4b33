// Sweeps d2 at fixed d1 and tabulates simulated minmax latency against the
// Shannon target w+.

#include <cstdio>

#include "ebcast/ebcast.hpp"

int main() {
    using namespace ebcast;

    experiment_config cfg;
    cfg.scheme = scheme_kind::onesided;
    cfg.params = channel_params::independent(0.1, 0.2);
    cfg.n = 4000;
    cfg.trials = 40;
    cfg.base_seed = 7;
    cfg.demands.d1 = 0.05;

    std::printf("%6s  %10s  %10s  %8s\n", "d2", "mean max", "w+", "rel dev");
    for (double d2 : {0.08, 0.10, 0.12, 0.15, 0.18}) {
        cfg.demands.d2 = d2;
        const trials_result res = run_trials(cfg);
        std::printf("%6.3f  %10.4f  %10.4f  %7.4f%%\n", d2, res.agg.latency_max.mean,
                    res.bounds.w_plus, 100.0 * res.agg.vs_w_plus.rel_deviation);
    }
    return 0;
}
