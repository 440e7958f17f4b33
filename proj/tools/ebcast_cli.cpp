// Command-line front end: closed-form bounds, Monte Carlo simulation,
// repetition-race verification, parameter sweeps and per-slot traces.
//
// Exit codes: 0 success, 2 validation error, 3 infeasible demand,
// 4 runtime cap exceeded.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "ebcast/ebcast.hpp"

namespace {

struct channel_flags {
    double eps1 = 0.0;
    double eps2 = 0.0;
    double eps12 = -1.0;  // default: independent erasures eps1 * eps2

    ebcast::channel_params params() const {
        return {eps1, eps2, eps12 < 0.0 ? eps1 * eps2 : eps12};
    }
};

void add_channel_flags(CLI::App* cmd, channel_flags& ch) {
    cmd->add_option("--eps1", ch.eps1, "Erasure rate of user 1 (stronger)")->required();
    cmd->add_option("--eps2", ch.eps2, "Erasure rate of user 2 (weaker)")->required();
    cmd->add_option("--eps12", ch.eps12, "Simultaneous-erasure probability (default eps1*eps2)");
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty()) {
        std::cout << content;
        return;
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ebcast::validation_error(ebcast::violation::range, "cannot open " + path);
    os << content;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-user erasure broadcast with feedback: bounds and simulation"};
    app.require_subcommand(1);

    channel_flags ch_bounds, ch_sim, ch_race, ch_trace;
    double d1 = 0.0, d2 = 0.0, d1_trace = 0.0, d2_trace = 0.0;
    std::string scheme = "universal", scheme_trace = "universal";
    std::string format = "csv", out_path, sweep_out, config_path, trace_out;
    std::uint64_t n = 10000, n_trace = 1000, runs = 100000;
    std::uint64_t seed = 0, race_seed = 0, trace_seed = 0;
    std::uint32_t trials = 1;

    CLI::App* cmd_bounds = app.add_subcommand("bounds", "Closed-form latencies and scheme parameters");
    add_channel_flags(cmd_bounds, ch_bounds);
    cmd_bounds->add_option("--d1", d1, "Distortion allowed to user 1")->required();
    cmd_bounds->add_option("--d2", d2, "Distortion allowed to user 2")->required();

    CLI::App* cmd_sim = app.add_subcommand("simulate", "Monte Carlo trials of a coding scheme");
    cmd_sim->add_option("--scheme", scheme, "universal | one-sided")->required();
    add_channel_flags(cmd_sim, ch_sim);
    cmd_sim->add_option("--d1", d1, "Distortion allowed to user 1")->required();
    cmd_sim->add_option("--d2", d2, "Distortion allowed to user 2")->required();
    cmd_sim->add_option("--n", n, "Source block length")->required();
    cmd_sim->add_option("--trials", trials, "Number of independent trials")->required();
    cmd_sim->add_option("--seed", seed, "Base seed")->required();
    cmd_sim->add_option("--format", format, "csv | json");
    cmd_sim->add_option("--out", out_path, "Output file (default stdout)");

    CLI::App* cmd_race = app.add_subcommand("race", "Verify the repetition race probability");
    add_channel_flags(cmd_race, ch_race);
    cmd_race->add_option("--runs", runs, "Number of repetition runs")->required();
    cmd_race->add_option("--seed", race_seed, "Seed")->required();

    CLI::App* cmd_sweep = app.add_subcommand("sweep", "Run a (params, demands) grid");
    cmd_sweep->add_option("--config", config_path, "Grid config file")->required();
    cmd_sweep->add_option("--out", sweep_out, "Output file (default stdout)");

    CLI::App* cmd_trace = app.add_subcommand("trace", "Per-slot transcript of one run");
    cmd_trace->add_option("--scheme", scheme_trace, "universal | one-sided")->required();
    add_channel_flags(cmd_trace, ch_trace);
    cmd_trace->add_option("--d1", d1_trace, "Distortion allowed to user 1")->required();
    cmd_trace->add_option("--d2", d2_trace, "Distortion allowed to user 2")->required();
    cmd_trace->add_option("--n", n_trace, "Source block length")->required();
    cmd_trace->add_option("--seed", trace_seed, "Seed")->required();
    cmd_trace->add_option("--out", trace_out, "Output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (cmd_bounds->parsed()) {
            const ebcast::bounds_report rep =
                ebcast::make_bounds_report(ch_bounds.params(), {d1, d2});
            std::cout << ebcast::to_json(rep).dump(2) << '\n';
            return rep.feasible ? 0 : 3;
        }
        if (cmd_sim->parsed()) {
            ebcast::experiment_config cfg;
            cfg.scheme = ebcast::parse_scheme(scheme);
            cfg.params = ch_sim.params();
            cfg.demands = {d1, d2};
            cfg.n = n;
            cfg.trials = trials;
            cfg.base_seed = seed;
            if (format == "csv")
                cfg.format = ebcast::output_format::csv;
            else if (format == "json")
                cfg.format = ebcast::output_format::json;
            else
                throw ebcast::validation_error(ebcast::violation::range,
                                               "--format must be csv or json");
            const ebcast::trials_result res = ebcast::run_trials(cfg);
            std::ostringstream os;
            ebcast::write_trials(os, res);
            write_output(out_path, os.str());
            return 0;
        }
        if (cmd_race->parsed()) {
            const ebcast::race_check rc = ebcast::verify_race(ch_race.params(), runs, race_seed);
            nlohmann::json j;
            j["empirical"] = rc.empirical;
            j["analytic"] = rc.analytic;
            j["deviation"] = rc.deviation;
            j["runs"] = rc.runs;
            std::cout << j.dump(2) << '\n';
            return 0;
        }
        if (cmd_sweep->parsed()) {
            std::ifstream is(config_path);
            if (!is)
                throw ebcast::validation_error(ebcast::violation::range,
                                               "cannot open " + config_path);
            const ebcast::sweep_config cfg = ebcast::parse_sweep_config(is);
            const std::vector<ebcast::sweep_row> rows = ebcast::run_sweep(cfg);
            std::ostringstream os;
            ebcast::write_sweep_csv(os, rows);
            write_output(sweep_out, os.str());
            return 0;
        }
        if (cmd_trace->parsed()) {
            const ebcast::channel_params params = ch_trace.params();
            const ebcast::demand_pair demands{d1_trace, d2_trace};
            ebcast::xoshiro256ss gen(trace_seed);
            const ebcast::source_block src = ebcast::random_source(n_trace, gen);
            std::ostringstream os;
            if (ebcast::parse_scheme(scheme_trace) == ebcast::scheme_kind::universal) {
                const ebcast::universal_result res =
                    ebcast::run_universal(src, params, demands, gen);
                ebcast::write_trace_csv(os, res.trace);
            } else {
                const ebcast::onesided_result res =
                    ebcast::run_onesided(src, params, demands, gen);
                ebcast::write_trace_csv(os, res.trace);
            }
            write_output(trace_out, os.str());
            return 0;
        }
    } catch (const ebcast::infeasible_error& e) {
        std::cerr << "infeasible: " << e.what() << '\n';
        return 3;
    } catch (const ebcast::runtime_exceeded_error& e) {
        std::cerr << "runtime cap exceeded: " << e.what() << '\n';
        return 4;
    } catch (const ebcast::error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
