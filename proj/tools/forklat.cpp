// forklat: batch front-end for redundancy latency/cost experiments.
// Parses scenario configs, runs analytic reports, simulations, sweeps and
// strategy recommendations, and writes plot-ready CSV tables.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "forklat/experiment.hpp"
#include "forklat/presets.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out;
    std::string records_out;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::optional<int> replications;
    std::optional<long> num_jobs;
    bool dump_config = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
    auto* c = cmd->add_option("--config", args.config_path, "scenario config file");
    if (config_required) c->required();
    cmd->add_option("--out", args.out, "output CSV path");
    cmd->add_option("--seed", args.seed, "master seed (fallback: FORKLAT_SEED, then 12345)");
    cmd->add_option("--jobs", args.jobs, "max parallel worker threads");
    cmd->add_option("--replications", args.replications, "independent replications");
    cmd->add_option("--num-jobs", args.num_jobs, "jobs per replication");
    cmd->add_option("--records", args.records_out,
                    "per-job record CSV from the first replication (simulate mode)");
    cmd->add_flag("--dump-config", args.dump_config,
                  "print the canonical config and exit without running");
}

std::optional<std::uint64_t> env_seed() {
    const char* env = std::getenv("FORKLAT_SEED");
    if (env == nullptr || *env == '\0') return std::nullopt;
    try {
        return static_cast<std::uint64_t>(std::stoull(env));
    } catch (const std::exception&) {
        throw forklat::ConfigInvalid("FORKLAT_SEED is not an integer");
    }
}

void apply_overrides(forklat::ExperimentSpec& spec, const CommonArgs& args,
                     forklat::Mode mode) {
    spec.mode = mode;
    if (!args.out.empty()) spec.out = args.out;
    if (!args.records_out.empty()) spec.records_out = args.records_out;
    if (args.seed)
        spec.seed = *args.seed;
    else if (auto s = env_seed())
        spec.seed = *s;
    if (args.jobs) spec.jobs = *args.jobs;
    if (args.replications) spec.replications = *args.replications;
    if (args.num_jobs) spec.num_jobs = *args.num_jobs;
}

int run_mode(const CommonArgs& args, forklat::Mode mode) {
    forklat::ExperimentSpec spec = forklat::parse_config_file(args.config_path);
    apply_overrides(spec, args, mode);
    if (args.dump_config) {
        std::cout << forklat::dump_config(spec);
        return 0;
    }
    return forklat::run_experiment(spec, std::cout);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fork-join redundancy latency/cost workbench"};
    app.require_subcommand(1);

    CommonArgs analyze_args, simulate_args, sweep_args, recommend_args, validate_args;
    auto* analyze = app.add_subcommand("analyze", "closed-form values and bounds");
    add_common(analyze, analyze_args, true);
    auto* simulate = app.add_subcommand("simulate", "discrete-event simulation");
    add_common(simulate, simulate_args, true);
    auto* sweep = app.add_subcommand("sweep", "parameter sweep (analytic + simulated)");
    add_common(sweep, sweep_args, true);
    auto* recommend =
        app.add_subcommand("recommend", "redundancy strategy recommendation");
    add_common(recommend, recommend_args, true);
    auto* validate =
        app.add_subcommand("validate", "recommendation vs simulated baselines");
    add_common(validate, validate_args, true);

    CommonArgs preset_args;
    std::string preset_name;
    auto* preset = app.add_subcommand("preset", "run a named built-in study");
    preset->add_option("name", preset_name, "preset name")->required();
    add_common(preset, preset_args, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (analyze->parsed()) return run_mode(analyze_args, forklat::Mode::Analyze);
        if (simulate->parsed()) return run_mode(simulate_args, forklat::Mode::Simulate);
        if (sweep->parsed()) return run_mode(sweep_args, forklat::Mode::Sweep);
        if (recommend->parsed()) return run_mode(recommend_args, forklat::Mode::Recommend);
        if (validate->parsed()) return run_mode(validate_args, forklat::Mode::Validate);
        if (preset->parsed()) {
            forklat::PresetOptions opt;
            if (preset_args.num_jobs) opt.num_jobs = *preset_args.num_jobs;
            if (preset_args.replications) opt.replications = *preset_args.replications;
            if (preset_args.seed)
                opt.seed = *preset_args.seed;
            else if (auto s = env_seed())
                opt.seed = *s;
            opt.threads = preset_args.jobs.value_or(0);
            if (opt.threads <= 0)
                opt.threads = static_cast<int>(
                    std::max(1u, std::thread::hardware_concurrency()));
            auto rows = forklat::run_preset(preset_name, opt);
            std::string out = preset_args.out.empty() ? preset_name + ".csv" : preset_args.out;
            forklat::write_csv(out, rows);
            std::cout << "wrote " << rows.size() << " rows to " << out << "\n";
            return 0;
        }
    } catch (const forklat::Infeasible& e) {
        std::cerr << "error: infeasible strategy query: " << e.what() << "\n";
        return 2;
    } catch (const forklat::NonFiniteMoment& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const forklat::ConfigInvalid& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
