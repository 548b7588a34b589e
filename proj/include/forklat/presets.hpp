#pragma once

#include <string>
#include <vector>

#include "forklat/experiment.hpp"

namespace forklat {

// Built-in parameter studies at desk scale. Each emits plot-ready CSV rows:
// analytic values where theory applies next to simulated means with CIs.
struct PresetOptions {
    long num_jobs = -1;  // -1: preset default
    int replications = -1;
    std::uint64_t seed = 12345;
    int threads = 1;
};

inline std::vector<std::string> preset_names() {
    return {"fig7", "fig8", "fig9", "fig11", "fig12", "fig13", "fig14", "fig16"};
}

namespace detail {

inline std::vector<double> lambda_grid(double capacity, int points = 12) {
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i)
        grid.push_back(capacity * (0.05 + 0.9 * static_cast<double>(i) / (points - 1)));
    return grid;
}

inline SystemConfig preset_config(const std::string& dist_spec, int n, int r_f, int r,
                                  int k, double lambda, DispatchPolicy policy,
                                  long num_jobs, std::uint64_t seed) {
    SystemConfig cfg;
    cfg.n = n;
    cfg.r_f = r_f;
    cfg.r = r;
    cfg.k = k;
    cfg.lambda = lambda;
    cfg.policy = policy;
    cfg.dist = parse_distribution(dist_spec);
    cfg.dist_spec = dist_spec;
    cfg.num_jobs = num_jobs;
    cfg.seed = seed;
    return cfg;
}

inline void append(std::vector<CsvRow>& rows, std::vector<CsvRow> more) {
    rows.insert(rows.end(), more.begin(), more.end());
}

// Full fork-join vs fork-early-cancel over a shared load grid.
inline std::vector<CsvRow> early_cancel_comparison(const std::string& name,
                                                   const std::string& dist_spec,
                                                   const PresetOptions& opt) {
    const int n = 4;
    long jobs = opt.num_jobs > 0 ? opt.num_jobs : 10000;
    int reps = opt.replications > 0 ? opt.replications : 20;
    ServiceDistribution dist = parse_distribution(dist_spec);
    double cap_fj = 1.0 / order_stat_mean(dist, 1, n);
    double cap_ec = n / mean(dist);
    std::vector<CsvRow> rows;
    for (double lambda : lambda_grid(std::min(cap_fj, cap_ec))) {
        SystemConfig fj = preset_config(dist_spec, n, n, n, 1, lambda,
                                        DispatchPolicy::UniformRandom, jobs, opt.seed);
        append(rows, analyze_rows(fj, name));
        append(rows, simulate_rows(fj, reps, opt.threads, name));
        SystemConfig ec = preset_config(dist_spec, n, n, 1, 1, lambda,
                                        DispatchPolicy::UniformRandom, jobs, opt.seed);
        append(rows, analyze_rows(ec, name));
        append(rows, simulate_rows(ec, reps, opt.threads, name));
    }
    return rows;
}

inline std::vector<CsvRow> preset_fig9(const PresetOptions& opt) {
    const std::string dist_spec = "pareto(1,2.2)";
    const int n = 12;
    long jobs = opt.num_jobs > 0 ? opt.num_jobs : 20000;
    int reps = opt.replications > 0 ? opt.replications : 20;
    ServiceDistribution dist = parse_distribution(dist_spec);
    const int widths[] = {1, 2, 3, 4, 6, 12};
    std::vector<CsvRow> rows;
    auto run_cell = [&](int r, double lambda) {
        SystemConfig cfg = preset_config(dist_spec, n, r, r, 1, lambda,
                                         DispatchPolicy::GroupRandom, jobs, opt.seed);
        append(rows, analyze_rows(cfg, "fig9"));
        append(rows, simulate_rows(cfg, reps, opt.threads, "fig9"));
    };
    // Per-width cells at half of each width's own capacity.
    for (int r : widths)
        run_cell(r, 0.5 * n / (r * order_stat_mean(dist, 1, r)));
    // Fixed moderate load across widths: half the capacity of full fork.
    double lambda_fixed = 0.5 * n / (12 * order_stat_mean(dist, 1, 12));
    for (int r : widths) run_cell(r, lambda_fixed);
    return rows;
}

inline std::vector<CsvRow> preset_quorum_sweep(const std::string& name,
                                               const PresetOptions& opt) {
    const std::string dist_spec = "pareto(0.5,2.5)";
    const int n = 10;
    const double lambda = 0.5;
    long jobs = opt.num_jobs > 0 ? opt.num_jobs : 5000;
    int reps = opt.replications > 0 ? opt.replications : 20;
    std::vector<CsvRow> rows;
    for (int k = 1; k <= n; ++k) {
        SystemConfig cfg = preset_config(dist_spec, n, n, n, k, lambda,
                                         DispatchPolicy::UniformRandom, jobs, opt.seed);
        append(rows, analyze_rows(cfg, name));
        append(rows, simulate_rows(cfg, reps, opt.threads, name));
    }
    return rows;
}

inline std::vector<CsvRow> preset_fig13(const PresetOptions& opt) {
    const int n = 10;
    const double lambda = 0.5;
    long jobs = opt.num_jobs > 0 ? opt.num_jobs : 3000;
    int reps = opt.replications > 0 ? opt.replications : 10;
    std::vector<CsvRow> rows;
    for (double delta : {2.0, 4.0, 6.0}) {
        for (int k = 1; k <= n; ++k) {
            std::string dist_spec =
                "sexp(" + detail::fmt_g(delta / k) + ",1)";
            SystemConfig cfg = preset_config(dist_spec, n, n, n, k, lambda,
                                             DispatchPolicy::UniformRandom, jobs, opt.seed);
            append(rows, analyze_rows(cfg, "fig13"));
            append(rows, simulate_rows(cfg, reps, opt.threads, "fig13"));
            CsvRow limit = scenario_row("fig13", cfg);
            limit.metric = "latency_zero_load_limit";
            limit.value = diversity_parallelism_limit(delta, 1.0, n, k);
            limit.provenance = "harmonic-limit";
            rows.push_back(std::move(limit));
        }
    }
    return rows;
}

inline std::vector<CsvRow> preset_fig14(const PresetOptions& opt) {
    const std::string dist_spec = "sexp(1,0.5)";
    const int n = 6, r = 3;
    long jobs = opt.num_jobs > 0 ? opt.num_jobs : 15000;
    int reps = opt.replications > 0 ? opt.replications : 20;
    ServiceDistribution dist = parse_distribution(dist_spec);
    double cap = n / (r * order_stat_mean(dist, 1, r));
    std::vector<CsvRow> rows;
    for (double lambda : lambda_grid(cap)) {
        for (DispatchPolicy policy :
             {DispatchPolicy::GroupRandom, DispatchPolicy::UniformRandom}) {
            SystemConfig cfg =
                preset_config(dist_spec, n, r, r, 1, lambda, policy, jobs, opt.seed);
            append(rows, analyze_rows(cfg, "fig14"));
            append(rows, simulate_rows(cfg, reps, opt.threads, "fig14"));
        }
    }
    return rows;
}

inline std::vector<CsvRow> preset_fig16(const PresetOptions& opt) {
    ExperimentSpec spec;
    spec.mode = Mode::Validate;
    spec.n = 10;
    spec.k = 1;
    spec.lambda = 0.7;
    spec.dist_spec = "pareto(1,2.2)";
    spec.gamma = 5.0;
    spec.r_max = 8;
    spec.num_jobs = opt.num_jobs > 0 ? opt.num_jobs : 20000;
    spec.replications = opt.replications > 0 ? opt.replications : 20;
    spec.seed = opt.seed;
    StrategyQuery q = spec.to_query();
    StrategyResult rec = recommend(q);
    SimBudget budget{spec.num_jobs, spec.replications, spec.seed,
                     DispatchPolicy::UniformRandom, opt.threads};
    ValidationReport vrep = validate_recommendation(q, rec, budget);
    std::vector<CsvRow> rows = recommend_rows(spec, rec);
    append(rows, validation_rows(spec, vrep));
    for (CsvRow& r : rows) r.mode = "fig16";
    return rows;
}

}  // namespace detail

inline std::vector<CsvRow> run_preset(const std::string& name, const PresetOptions& opt) {
    if (name == "fig7") return detail::early_cancel_comparison("fig7", "sexp(2,0.5)", opt);
    if (name == "fig8")
        return detail::early_cancel_comparison("fig8", "hyper(0.1,1.5,0.5)", opt);
    if (name == "fig9") return detail::preset_fig9(opt);
    if (name == "fig11") return detail::preset_quorum_sweep("fig11", opt);
    if (name == "fig12") return detail::preset_quorum_sweep("fig12", opt);
    if (name == "fig13") return detail::preset_fig13(opt);
    if (name == "fig14") return detail::preset_fig14(opt);
    if (name == "fig16") return detail::preset_fig16(opt);
    throw ConfigInvalid("unknown preset: " + name + " (available: fig7 fig8 fig9 fig11 "
                        "fig12 fig13 fig14 fig16)");
}

}  // namespace forklat
