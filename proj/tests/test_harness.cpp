#include <catch_amalgamated.hpp>

#include <sstream>

#include "ebcast/harness.hpp"

using namespace ebcast;
using Catch::Matchers::WithinAbs;

namespace {
const channel_params kParams{0.1, 0.2, 0.02};

experiment_config small_config(scheme_kind scheme) {
    experiment_config cfg;
    cfg.scheme = scheme;
    cfg.params = kParams;
    cfg.demands = {0.05, 0.1};
    cfg.n = 4000;
    cfg.trials = 50;
    cfg.base_seed = 9001;
    return cfg;
}
}  // namespace

TEST_CASE("metric statistics") {
    const metric_stats s = compute_stats({1.0, 2.0, 3.0});
    CHECK_THAT(s.mean, WithinAbs(2.0, 1e-12));
    CHECK_THAT(s.stddev, WithinAbs(1.0, 1e-12));
    CHECK_THAT(s.ci95_half, WithinAbs(1.96 / std::sqrt(3.0), 1e-12));

    const metric_stats one = compute_stats({5.0});
    CHECK(one.count == 1);
    CHECK(one.stddev == 0.0);
    CHECK(one.ci95_half == 0.0);

    CHECK(compute_stats({}).count == 0);
}

TEST_CASE("universal trials aggregate near the targets") {
    const trials_result res = run_trials(small_config(scheme_kind::universal));
    CHECK(res.agg.ok_trials == 50);
    CHECK(res.agg.failed_trials == 0);
    CHECK_THAT(res.agg.latency1.mean, WithinAbs(res.bounds.w1_star, 0.02 * res.bounds.w1_star));
    CHECK_THAT(res.agg.latency2.mean, WithinAbs(res.bounds.w2_star, 0.02 * res.bounds.w2_star));
    CHECK(res.agg.vs_w2_star.rel_deviation < 0.02);
    CHECK(res.agg.phase3_len.mean == 0.0);
    CHECK(res.agg.unknown_load.count == 0);  // not defined for the universal scheme

    // Per-trial seeds are the documented derivation and all distinct.
    for (const trial_row& r : res.rows)
        CHECK(r.seed == derive_seed(res.cfg.base_seed, r.trial));
}

TEST_CASE("one-sided trials carry plan parameters and unknown load") {
    const trials_result res = run_trials(small_config(scheme_kind::onesided));
    CHECK(res.agg.ok_trials == 50);
    for (const trial_row& r : res.rows) {
        CHECK_THAT(r.theta, WithinAbs(1.0, 1e-12));
        CHECK_THAT(r.gamma, WithinAbs(0.5, 1e-12));
    }
    CHECK_THAT(res.agg.unknown_load.mean, WithinAbs(0.1, 0.01));
    CHECK_THAT(res.agg.latency_max.mean, WithinAbs(1.125, 0.02 * 1.125));
}

TEST_CASE("trials=1 reports a zero-width spread") {
    experiment_config cfg = small_config(scheme_kind::universal);
    cfg.trials = 1;
    const trials_result res = run_trials(cfg);
    CHECK(res.agg.latency1.count == 1);
    CHECK(res.agg.latency1.stddev == 0.0);
    const nlohmann::json j = trials_to_json(res);
    CHECK(j["aggregate"]["latency1"]["stddev"].is_null());
    CHECK(j["aggregate"]["latency1"]["ci95_half"].is_null());
}

TEST_CASE("identical configs produce byte-identical output") {
    const experiment_config cfg = small_config(scheme_kind::onesided);
    std::ostringstream a, b;
    write_trials_csv(a, run_trials(cfg));
    write_trials_csv(b, run_trials(cfg));
    REQUIRE(a.str() == b.str());
    CHECK(a.str().find("# schema: ebcast.simulate.v1") == 0);

    experiment_config cfg_json = cfg;
    cfg_json.format = output_format::json;
    std::ostringstream ja, jb;
    write_trials(ja, run_trials(cfg_json));
    write_trials(jb, run_trials(cfg_json));
    REQUIRE(ja.str() == jb.str());
}

TEST_CASE("an infeasible configuration aborts with the right error") {
    experiment_config cfg = small_config(scheme_kind::onesided);
    cfg.demands = {0.05, 0.005};  // d2 < eps2 * d1
    cfg.trials = 3;
    CHECK_THROWS_AS(run_trials(cfg), infeasible_error);
}

TEST_CASE("race verification matches the analytic probability") {
    const race_check main_case = verify_race(kParams, 20000, 5);
    double sigma = std::sqrt(main_case.analytic * (1 - main_case.analytic) / 20000.0);
    CHECK_THAT(main_case.empirical, WithinAbs(main_case.analytic, 3 * sigma));
    CHECK_THAT(main_case.analytic, WithinAbs(0.8163265, 1e-6));

    const channel_params hard{0.1, 0.99, 0.099};
    const race_check rare = verify_race(hard, 20000, 6);
    sigma = std::sqrt(rare.analytic * (1 - rare.analytic) / 20000.0);
    CHECK_THAT(rare.empirical, WithinAbs(rare.analytic, 3 * sigma));

    const channel_params degraded{0.1, 0.2, 0.1};
    const race_check deg = verify_race(degraded, 20000, 7);
    sigma = std::sqrt(deg.analytic * (1 - deg.analytic) / 20000.0);
    CHECK_THAT(deg.empirical, WithinAbs(deg.analytic, 3 * sigma));
    CHECK_THAT(deg.analytic, WithinAbs(0.8 / 0.9, 1e-12));
}

TEST_CASE("sweep config parsing") {
    std::istringstream is(
        "# comment\n"
        "scheme = one-sided\n"
        "eps1 = 0.1\n"
        "eps2 = 0.2\n"
        "eps12 = auto\n"
        "d1 = 0.05\n"
        "d2 = 0.1, 0.12, 0.15\n"
        "n = 2000\n"
        "trials = 10\n"
        "seed = 77\n");
    const sweep_config cfg = parse_sweep_config(is);
    CHECK(cfg.scheme == scheme_kind::onesided);
    CHECK(cfg.eps12.empty());
    REQUIRE(cfg.d2.size() == 3);
    CHECK(cfg.d2[1] == 0.12);
    CHECK(cfg.trials == 10);

    std::istringstream bad("eps1 = 0.1\n");
    CHECK_THROWS_AS(parse_sweep_config(bad), validation_error);
    std::istringstream unknown("bogus = 1\n");
    CHECK_THROWS_AS(parse_sweep_config(unknown), validation_error);
}

TEST_CASE("a one-cell sweep equals run_trials with the derived seed") {
    sweep_config sc;
    sc.scheme = scheme_kind::universal;
    sc.eps1 = {0.1};
    sc.eps2 = {0.2};
    sc.d1 = {0.05};
    sc.d2 = {0.1};
    sc.n = {2000};
    sc.trials = 20;
    sc.seed = 13;
    const auto rows = run_sweep(sc);
    REQUIRE(rows.size() == 1);

    experiment_config cfg;
    cfg.scheme = scheme_kind::universal;
    cfg.params = channel_params::independent(0.1, 0.2);
    cfg.demands = {0.05, 0.1};
    cfg.n = 2000;
    cfg.trials = 20;
    cfg.base_seed = derive_seed(13, 0);
    const trials_result direct = run_trials(cfg);
    CHECK(rows[0].latency_max.mean == direct.agg.latency_max.mean);
}

TEST_CASE("sweep tracks the minmax bound and isolates infeasible cells") {
    sweep_config sc;
    sc.scheme = scheme_kind::onesided;
    sc.eps1 = {0.1};
    sc.eps2 = {0.2};
    sc.eps12 = {0.02};
    sc.d1 = {0.05};
    sc.d2 = {0.005, 0.1, 0.12, 0.15};  // first cell infeasible
    sc.n = {4000};
    sc.trials = 40;
    sc.seed = 99;
    const auto rows = run_sweep(sc);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].status == trial_status::infeasible);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        REQUIRE(rows[i].status == trial_status::ok);
        CHECK_THAT(rows[i].latency_max.mean, WithinAbs(rows[i].w_plus, 0.02 * rows[i].w_plus));
    }

    std::ostringstream os;
    write_sweep_csv(os, rows);
    const std::string csv = os.str();
    CHECK(csv.find("# schema: ebcast.sweep.v1") == 0);
    CHECK(csv.find("infeasible") != std::string::npos);
}
