// Runs both schemes once on the same channel and prints the reports next to
// the closed-form targets.

#include <cstdio>

#include "ebcast/ebcast.hpp"

int main() {
    using namespace ebcast;

    const channel_params params{0.1, 0.2, 0.02};
    const demand_pair demands{0.05, 0.1};
    const std::size_t n = 10000;

    const bounds_report bounds = make_bounds_report(params, demands);
    std::printf("targets: w1*=%.4f  w2*=%.4f  w+=%.4f  (theta=%.3f gamma=%.3f)\n\n",
                bounds.w1_star, bounds.w2_star, bounds.w_plus, bounds.theta, bounds.gamma);

    {
        xoshiro256ss gen(2024);
        const source_block src = random_source(n, gen);
        const universal_result res = run_universal(src, params, demands, gen);
        std::printf("universal: latency1=%.4f latency2=%.4f max=%.4f  d=(%.4f, %.4f)  slots=%llu\n",
                    res.report.latency1, res.report.latency2, res.report.latency_max,
                    res.report.distortion1, res.report.distortion2,
                    static_cast<unsigned long long>(res.report.slots_total));
    }
    {
        xoshiro256ss gen(2024);
        const source_block src = random_source(n, gen);
        const onesided_result res = run_onesided(src, params, demands, gen);
        std::printf("one-sided: latency1=%.4f latency2=%.4f max=%.4f  d=(%.4f, %.4f)  slots=%llu\n",
                    res.report.latency1, res.report.latency2, res.report.latency_max,
                    res.report.distortion1, res.report.distortion2,
                    static_cast<unsigned long long>(res.report.slots_total));
        std::printf("           phases: I=%llu II=%llu III=%llu IV=%llu  unknown load=%.4f\n",
                    static_cast<unsigned long long>(res.report.phase_len[0]),
                    static_cast<unsigned long long>(res.report.phase_len[1]),
                    static_cast<unsigned long long>(res.report.phase_len[2]),
                    static_cast<unsigned long long>(res.report.phase_len[3]),
                    measure_unknown_load(res.trace, res.plan, n));
    }
    return 0;
}
