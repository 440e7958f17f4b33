#pragma once

// Experiment orchestration: Monte Carlo trials with derived per-trial seeds,
// order-independent aggregation, analytic targets attached from the bounds
// module, and deterministic CSV/JSON writers (output is a pure function of
// the configuration; no timestamps, no locale, no iteration-order surprises).

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ebcast/bounds.hpp"
#include "ebcast/channel.hpp"
#include "ebcast/errors.hpp"
#include "ebcast/onesided.hpp"
#include "ebcast/source.hpp"
#include "ebcast/trace.hpp"
#include "ebcast/universal.hpp"

namespace ebcast {

enum class scheme_kind { universal, onesided };

inline const char* to_string(scheme_kind s) {
    return s == scheme_kind::universal ? "universal" : "one-sided";
}

inline scheme_kind parse_scheme(const std::string& s) {
    if (s == "universal") return scheme_kind::universal;
    if (s == "one-sided" || s == "onesided") return scheme_kind::onesided;
    throw validation_error(violation::range, "unknown scheme '" + s + "'");
}

enum class output_format { csv, json };

struct experiment_config {
    scheme_kind scheme = scheme_kind::universal;
    channel_params params;
    demand_pair demands;
    std::uint64_t n = 0;
    std::uint32_t trials = 1;
    std::uint64_t base_seed = 0;
    output_format format = output_format::csv;
};

inline void validate_config(const experiment_config& cfg) {
    validate_params(cfg.params);
    validate_demands(cfg.demands);
    if (cfg.n < 1) throw validation_error(violation::range, "config: n must be >= 1");
    if (cfg.trials < 1) throw validation_error(violation::range, "config: trials must be >= 1");
}

enum class trial_status { ok, infeasible, runtime_exceeded };

inline const char* to_string(trial_status s) {
    switch (s) {
        case trial_status::ok: return "ok";
        case trial_status::infeasible: return "infeasible";
        case trial_status::runtime_exceeded: return "runtime_exceeded";
    }
    return "?";
}

struct trial_row {
    std::uint32_t trial = 0;
    std::uint64_t seed = 0;
    trial_status status = trial_status::ok;
    scheme_report report;
    double theta = std::numeric_limits<double>::quiet_NaN();
    double gamma = std::numeric_limits<double>::quiet_NaN();
    double unknown_load = std::numeric_limits<double>::quiet_NaN();
};

struct metric_stats {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double stddev = 0.0;     // sample standard deviation
    double ci95_half = 0.0;  // 1.96 * stddev / sqrt(count)
    std::uint32_t count = 0;
};

inline metric_stats compute_stats(const std::vector<double>& xs) {
    metric_stats s;
    s.count = static_cast<std::uint32_t>(xs.size());
    if (xs.empty()) return s;
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(xs.size());
    if (xs.size() < 2) return s;
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    s.ci95_half = 1.96 * s.stddev / std::sqrt(static_cast<double>(xs.size()));
    return s;
}

struct bound_comparison {
    double target = std::numeric_limits<double>::quiet_NaN();
    double rel_deviation = std::numeric_limits<double>::quiet_NaN();
};

struct aggregate_stats {
    std::uint32_t ok_trials = 0;
    std::uint32_t failed_trials = 0;
    metric_stats latency1, latency2, latency_max;
    metric_stats distortion1, distortion2;
    metric_stats phase1_len, phase2_len, phase3_len, phase4_len;
    metric_stats unknown_load;
    bound_comparison vs_w1_star, vs_w2_star, vs_w_plus;
};

struct trials_result {
    experiment_config cfg;
    bounds_report bounds;
    std::vector<trial_row> rows;
    aggregate_stats agg;
};

/// Seed of trial i: derive_seed(base_seed, i). Each trial owns an
/// independent generator; results do not depend on execution order.
inline std::uint64_t trial_seed(const experiment_config& cfg, std::uint32_t trial) {
    return derive_seed(cfg.base_seed, trial);
}

inline trial_row run_one_trial(const experiment_config& cfg, std::uint32_t trial) {
    trial_row row;
    row.trial = trial;
    row.seed = trial_seed(cfg, trial);
    xoshiro256ss gen(row.seed);
    const source_block src = random_source(cfg.n, gen);
    try {
        if (cfg.scheme == scheme_kind::universal) {
            row.report = run_universal(src, cfg.params, cfg.demands, gen).report;
        } else {
            onesided_result res = run_onesided(src, cfg.params, cfg.demands, gen);
            row.report = res.report;
            row.theta = res.plan.hp.theta;
            row.gamma = res.plan.hp.gamma;
            row.unknown_load = measure_unknown_load(res.trace, res.plan, cfg.n);
        }
    } catch (const infeasible_error&) {
        row.status = trial_status::infeasible;
    } catch (const runtime_exceeded_error&) {
        row.status = trial_status::runtime_exceeded;
    }
    return row;
}

inline trials_result run_trials(const experiment_config& cfg) {
    validate_config(cfg);
    trials_result out;
    out.cfg = cfg;
    out.bounds = make_bounds_report(cfg.params, cfg.demands);
    out.rows.reserve(cfg.trials);

    for (std::uint32_t t = 0; t < cfg.trials; ++t) out.rows.push_back(run_one_trial(cfg, t));

    std::vector<double> l1, l2, lmax, d1, d2, p1, p2, p3, p4, load;
    for (const trial_row& r : out.rows) {
        if (r.status != trial_status::ok) {
            ++out.agg.failed_trials;
            continue;
        }
        ++out.agg.ok_trials;
        l1.push_back(r.report.latency1);
        l2.push_back(r.report.latency2);
        lmax.push_back(r.report.latency_max);
        d1.push_back(r.report.distortion1);
        d2.push_back(r.report.distortion2);
        p1.push_back(static_cast<double>(r.report.phase_len[0]));
        p2.push_back(static_cast<double>(r.report.phase_len[1]));
        p3.push_back(static_cast<double>(r.report.phase_len[2]));
        p4.push_back(static_cast<double>(r.report.phase_len[3]));
        if (!std::isnan(r.unknown_load)) load.push_back(r.unknown_load);
    }
    if (out.agg.ok_trials == 0) {
        if (!out.rows.empty() && out.rows.front().status == trial_status::infeasible)
            throw infeasible_error("run_trials: every trial was infeasible");
        throw runtime_exceeded_error("run_trials: every trial failed");
    }
    out.agg.latency1 = compute_stats(l1);
    out.agg.latency2 = compute_stats(l2);
    out.agg.latency_max = compute_stats(lmax);
    out.agg.distortion1 = compute_stats(d1);
    out.agg.distortion2 = compute_stats(d2);
    out.agg.phase1_len = compute_stats(p1);
    out.agg.phase2_len = compute_stats(p2);
    out.agg.phase3_len = compute_stats(p3);
    out.agg.phase4_len = compute_stats(p4);
    out.agg.unknown_load = compute_stats(load);

    auto compare = [](const metric_stats& m, double target) {
        bound_comparison c;
        c.target = target;
        if (m.count > 0 && target != 0.0) c.rel_deviation = std::fabs(m.mean - target) / target;
        return c;
    };
    out.agg.vs_w1_star = compare(out.agg.latency1, out.bounds.w1_star);
    out.agg.vs_w2_star = compare(out.agg.latency2, out.bounds.w2_star);
    out.agg.vs_w_plus = compare(out.agg.latency_max, out.bounds.w_plus);
    return out;
}

// ---------------------------------------------------------------------------
// Repetition-race verification.

struct race_check {
    double empirical = 0.0;
    double analytic = 0.0;
    double deviation = 0.0;
    std::uint64_t runs = 0;
};

/// Repeat one symbol until user 1 receives it; record whether user 2 heard
/// any slot of the run. Compares the empirical frequency with
/// race_probability(params).
inline race_check verify_race(const channel_params& p, std::uint64_t runs, std::uint64_t seed) {
    validate_params(p);
    if (runs < 1) throw validation_error(violation::range, "verify_race: runs must be >= 1");
    xoshiro256ss gen(seed);
    std::uint64_t hits = 0;
    for (std::uint64_t r = 0; r < runs; ++r) {
        bool user2_heard = false;
        for (;;) {
            const slot_outcome z = sample_slot(p, gen);
            if (z.z2 == 0) user2_heard = true;
            if (z.z1 == 0) break;
        }
        hits += user2_heard ? 1 : 0;
    }
    race_check rc;
    rc.runs = runs;
    rc.empirical = static_cast<double>(hits) / static_cast<double>(runs);
    rc.analytic = race_probability(p);
    rc.deviation = rc.empirical - rc.analytic;
    return rc;
}

// ---------------------------------------------------------------------------
// Deterministic formatting and writers.

inline std::string fmt_double(double x) {
    if (std::isnan(x)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

inline nlohmann::json json_number(double x) {
    if (std::isnan(x)) return nullptr;
    return x;
}

inline nlohmann::json to_json(const metric_stats& m) {
    nlohmann::json j;
    j["mean"] = json_number(m.mean);
    j["count"] = m.count;
    if (m.count >= 2) {
        j["stddev"] = m.stddev;
        j["ci95_half"] = m.ci95_half;
    } else {
        j["stddev"] = nullptr;
        j["ci95_half"] = nullptr;
    }
    return j;
}

inline nlohmann::json to_json(const bound_comparison& c) {
    return {{"target", json_number(c.target)}, {"rel_deviation", json_number(c.rel_deviation)}};
}

inline nlohmann::json to_json(const bounds_report& r) {
    nlohmann::json j;
    j["w1_star"] = r.w1_star;
    j["w2_star"] = r.w2_star;
    j["w_plus"] = r.w_plus;
    j["k1"] = r.k1;
    j["k2"] = r.k2;
    j["k3"] = r.k3;
    j["feasible"] = r.feasible;
    j["theta"] = r.feasible ? nlohmann::json(r.theta) : nlohmann::json(nullptr);
    j["gamma"] = r.feasible ? nlohmann::json(r.gamma) : nlohmann::json(nullptr);
    j["load_L"] = r.feasible ? nlohmann::json(r.load_l) : nlohmann::json(nullptr);
    j["c23"] = r.c23;
    j["w23_per_symbol"] = r.w23_per_symbol;
    j["c_dagger"] = r.c_dagger;
    j["d_dagger"] = r.d_dagger;
    j["d1_region_edges"] = r.d1_edges;
    return j;
}

inline nlohmann::json to_json(const experiment_config& cfg) {
    nlohmann::json j;
    j["scheme"] = to_string(cfg.scheme);
    j["eps1"] = cfg.params.eps1;
    j["eps2"] = cfg.params.eps2;
    j["eps12"] = cfg.params.eps12;
    j["d1"] = cfg.demands.d1;
    j["d2"] = cfg.demands.d2;
    j["n"] = cfg.n;
    j["trials"] = cfg.trials;
    j["seed"] = cfg.base_seed;
    return j;
}

inline constexpr const char* simulate_csv_schema = "ebcast.simulate.v1";
inline constexpr const char* sweep_csv_schema = "ebcast.sweep.v1";
inline constexpr const char* trace_csv_schema = "ebcast.trace.v1";

inline void write_trials_csv(std::ostream& os, const trials_result& res) {
    os << "# schema: " << simulate_csv_schema << "\n";
    os << "trial,scheme,eps1,eps2,eps12,d1,d2,n,seed,theta,gamma,latency1,latency2,latency_max,"
          "distortion1,distortion2,phase1_len,phase2_len,phase3_len,phase4_len,unknown_load,"
          "status\n";
    const experiment_config& cfg = res.cfg;
    for (const trial_row& r : res.rows) {
        os << r.trial << ',' << to_string(cfg.scheme) << ',' << fmt_double(cfg.params.eps1) << ','
           << fmt_double(cfg.params.eps2) << ',' << fmt_double(cfg.params.eps12) << ','
           << fmt_double(cfg.demands.d1) << ',' << fmt_double(cfg.demands.d2) << ',' << cfg.n
           << ',' << r.seed << ',';
        if (r.status == trial_status::ok) {
            os << fmt_double(r.theta) << ',' << fmt_double(r.gamma) << ','
               << fmt_double(r.report.latency1) << ',' << fmt_double(r.report.latency2) << ','
               << fmt_double(r.report.latency_max) << ',' << fmt_double(r.report.distortion1)
               << ',' << fmt_double(r.report.distortion2) << ',' << r.report.phase_len[0] << ','
               << r.report.phase_len[1] << ',' << r.report.phase_len[2] << ','
               << r.report.phase_len[3] << ',' << fmt_double(r.unknown_load) << ',';
        } else {
            os << ",,,,,,,,,,,,";
        }
        os << to_string(r.status) << '\n';
    }
}

inline nlohmann::json trials_to_json(const trials_result& res) {
    nlohmann::json j;
    j["schema"] = "ebcast.simulate.json.v1";
    j["config"] = to_json(res.cfg);
    j["bounds"] = to_json(res.bounds);
    nlohmann::json agg;
    agg["ok_trials"] = res.agg.ok_trials;
    agg["failed_trials"] = res.agg.failed_trials;
    agg["latency1"] = to_json(res.agg.latency1);
    agg["latency2"] = to_json(res.agg.latency2);
    agg["latency_max"] = to_json(res.agg.latency_max);
    agg["distortion1"] = to_json(res.agg.distortion1);
    agg["distortion2"] = to_json(res.agg.distortion2);
    agg["phase1_len"] = to_json(res.agg.phase1_len);
    agg["phase2_len"] = to_json(res.agg.phase2_len);
    agg["phase3_len"] = to_json(res.agg.phase3_len);
    agg["phase4_len"] = to_json(res.agg.phase4_len);
    agg["unknown_load"] = to_json(res.agg.unknown_load);
    agg["vs_w1_star"] = to_json(res.agg.vs_w1_star);
    agg["vs_w2_star"] = to_json(res.agg.vs_w2_star);
    agg["vs_w_plus"] = to_json(res.agg.vs_w_plus);
    j["aggregate"] = agg;
    nlohmann::json rows = nlohmann::json::array();
    for (const trial_row& r : res.rows) {
        nlohmann::json row;
        row["trial"] = r.trial;
        row["seed"] = r.seed;
        row["status"] = to_string(r.status);
        if (r.status == trial_status::ok) {
            row["theta"] = json_number(r.theta);
            row["gamma"] = json_number(r.gamma);
            row["latency1"] = r.report.latency1;
            row["latency2"] = r.report.latency2;
            row["latency_max"] = r.report.latency_max;
            row["distortion1"] = r.report.distortion1;
            row["distortion2"] = r.report.distortion2;
            row["phase_len"] = r.report.phase_len;
            row["unknown_load"] = json_number(r.unknown_load);
        }
        rows.push_back(row);
    }
    j["trials"] = rows;
    return j;
}

inline void write_trials(std::ostream& os, const trials_result& res) {
    if (res.cfg.format == output_format::csv)
        write_trials_csv(os, res);
    else
        os << trials_to_json(res).dump(2) << '\n';
}

inline void write_trace_csv(std::ostream& os, const std::vector<trace_record>& trace) {
    os << "# schema: " << trace_csv_schema << "\n";
    os << "slot,phase,kind,idx_a,idx_b,coef_slot,payload,z1,z2,rec1,rec2\n";
    for (const trace_record& r : trace) {
        os << r.slot << ',' << static_cast<int>(r.phase) << ',' << to_string(r.kind) << ','
           << r.idx_a << ',' << r.idx_b << ',' << r.coef_slot << ',' << static_cast<int>(r.payload)
           << ',' << static_cast<int>(r.z1) << ',' << static_cast<int>(r.z2) << ',' << r.rec1
           << ',' << r.rec2 << '\n';
    }
}

// ---------------------------------------------------------------------------
// Parameter sweeps.

struct sweep_config {
    scheme_kind scheme = scheme_kind::onesided;
    std::vector<double> eps1, eps2, d1, d2;
    std::vector<double> eps12;  // empty: eps12 = eps1 * eps2 per cell
    std::vector<std::uint64_t> n;
    std::uint32_t trials = 1;
    std::uint64_t seed = 0;
};

/// Flat `key = value[, value...]` file; '#' starts a comment. Keys: scheme,
/// eps1, eps2, eps12 (optional or "auto"), d1, d2, n, trials, seed.
inline sweep_config parse_sweep_config(std::istream& is) {
    sweep_config cfg;
    bool saw_eps1 = false, saw_eps2 = false, saw_d1 = false, saw_d2 = false, saw_n = false;
    std::string line;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    while (std::getline(is, line)) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw validation_error(violation::range, "sweep config: expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto parse_doubles = [&](std::vector<double>& out) {
            out.clear();
            std::stringstream ss(value);
            std::string item;
            while (std::getline(ss, item, ',')) out.push_back(std::stod(trim(item)));
        };
        if (key == "scheme") {
            cfg.scheme = parse_scheme(value);
        } else if (key == "eps1") {
            parse_doubles(cfg.eps1);
            saw_eps1 = true;
        } else if (key == "eps2") {
            parse_doubles(cfg.eps2);
            saw_eps2 = true;
        } else if (key == "eps12") {
            if (value == "auto")
                cfg.eps12.clear();
            else
                parse_doubles(cfg.eps12);
        } else if (key == "d1") {
            parse_doubles(cfg.d1);
            saw_d1 = true;
        } else if (key == "d2") {
            parse_doubles(cfg.d2);
            saw_d2 = true;
        } else if (key == "n") {
            std::vector<double> tmp;
            parse_doubles(tmp);
            cfg.n.clear();
            for (double v : tmp) cfg.n.push_back(static_cast<std::uint64_t>(v));
            saw_n = true;
        } else if (key == "trials") {
            cfg.trials = static_cast<std::uint32_t>(std::stoul(value));
        } else if (key == "seed") {
            cfg.seed = std::stoull(value);
        } else {
            throw validation_error(violation::range, "sweep config: unknown key '" + key + "'");
        }
    }
    if (!(saw_eps1 && saw_eps2 && saw_d1 && saw_d2 && saw_n))
        throw validation_error(violation::range,
                               "sweep config: eps1, eps2, d1, d2 and n are required");
    return cfg;
}

struct sweep_row {
    experiment_config cell;
    trial_status status = trial_status::ok;
    double theta = std::numeric_limits<double>::quiet_NaN();
    double gamma = std::numeric_limits<double>::quiet_NaN();
    metric_stats latency1, latency2, latency_max, distortion1, distortion2, unknown_load;
    double w1_star = std::numeric_limits<double>::quiet_NaN();
    double w2_star = std::numeric_limits<double>::quiet_NaN();
    double w_plus = std::numeric_limits<double>::quiet_NaN();
};

/// Cells iterate in fixed order eps1 > eps2 > eps12 > d1 > d2 > n; cell i
/// runs with base seed derive_seed(cfg.seed, i). Infeasible cells are marked
/// and do not abort the sweep.
inline std::vector<sweep_row> run_sweep(const sweep_config& cfg) {
    std::vector<sweep_row> rows;
    const std::vector<double> eps12_list =
        cfg.eps12.empty() ? std::vector<double>{-1.0} : cfg.eps12;  // -1: derive per cell
    std::uint64_t cell_index = 0;
    for (double e1 : cfg.eps1)
        for (double e2 : cfg.eps2)
            for (double e12 : eps12_list)
                for (double d1 : cfg.d1)
                    for (double d2 : cfg.d2)
                        for (std::uint64_t n : cfg.n) {
                            sweep_row row;
                            row.cell.scheme = cfg.scheme;
                            row.cell.params = {e1, e2, e12 < 0.0 ? e1 * e2 : e12};
                            row.cell.demands = {d1, d2};
                            row.cell.n = n;
                            row.cell.trials = cfg.trials;
                            row.cell.base_seed = derive_seed(cfg.seed, cell_index++);
                            row.w1_star = w_star(d1, e1);
                            row.w2_star = w_star(d2, e2);
                            row.w_plus = std::max(row.w1_star, row.w2_star);
                            try {
                                const trials_result res = run_trials(row.cell);
                                row.theta = res.bounds.feasible
                                                ? res.bounds.theta
                                                : std::numeric_limits<double>::quiet_NaN();
                                row.gamma = res.bounds.feasible
                                                ? res.bounds.gamma
                                                : std::numeric_limits<double>::quiet_NaN();
                                row.latency1 = res.agg.latency1;
                                row.latency2 = res.agg.latency2;
                                row.latency_max = res.agg.latency_max;
                                row.distortion1 = res.agg.distortion1;
                                row.distortion2 = res.agg.distortion2;
                                row.unknown_load = res.agg.unknown_load;
                            } catch (const infeasible_error&) {
                                row.status = trial_status::infeasible;
                            } catch (const runtime_exceeded_error&) {
                                row.status = trial_status::runtime_exceeded;
                            }
                            rows.push_back(row);
                        }
    return rows;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<sweep_row>& rows) {
    os << "# schema: " << sweep_csv_schema << "\n";
    os << "scheme,eps1,eps2,eps12,d1,d2,n,trials,theta,gamma,mean_latency1,mean_latency2,"
          "mean_latency_max,mean_distortion1,mean_distortion2,mean_unknown_load,w1_star,w2_star,"
          "w_plus,status\n";
    for (const sweep_row& r : rows) {
        os << to_string(r.cell.scheme) << ',' << fmt_double(r.cell.params.eps1) << ','
           << fmt_double(r.cell.params.eps2) << ',' << fmt_double(r.cell.params.eps12) << ','
           << fmt_double(r.cell.demands.d1) << ',' << fmt_double(r.cell.demands.d2) << ','
           << r.cell.n << ',' << r.cell.trials << ',';
        if (r.status == trial_status::ok) {
            os << fmt_double(r.theta) << ',' << fmt_double(r.gamma) << ','
               << fmt_double(r.latency1.mean) << ',' << fmt_double(r.latency2.mean) << ','
               << fmt_double(r.latency_max.mean) << ',' << fmt_double(r.distortion1.mean) << ','
               << fmt_double(r.distortion2.mean) << ',' << fmt_double(r.unknown_load.mean) << ',';
        } else {
            os << ",,,,,,,,";
        }
        os << fmt_double(r.w1_star) << ',' << fmt_double(r.w2_star) << ',' << fmt_double(r.w_plus)
           << ',' << to_string(r.status) << '\n';
    }
}

}  // namespace ebcast
