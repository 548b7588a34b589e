#pragma once

#include <atomic>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "forklat/analytic.hpp"
#include "forklat/simulate.hpp"
#include "forklat/strategy.hpp"
#include "forklat/tail_classify.hpp"

namespace forklat {

enum class Mode { Analyze, Simulate, Sweep, Recommend, Validate };

inline const char* to_string(Mode m) {
    switch (m) {
        case Mode::Analyze: return "analyze";
        case Mode::Simulate: return "simulate";
        case Mode::Sweep: return "sweep";
        case Mode::Recommend: return "recommend";
        case Mode::Validate: return "validate";
    }
    return "?";
}

inline Mode parse_mode(const std::string& s) {
    if (s == "analyze") return Mode::Analyze;
    if (s == "simulate") return Mode::Simulate;
    if (s == "sweep") return Mode::Sweep;
    if (s == "recommend") return Mode::Recommend;
    if (s == "validate") return Mode::Validate;
    throw ParseError("unknown mode: " + s);
}

struct SweepAxis {
    std::string param;  // lambda | r | k | n
    std::vector<double> values;
};

// A full batch-run description; everything the CLI reads from a config file.
struct ExperimentSpec {
    Mode mode = Mode::Analyze;
    int n = 1;
    int r_f = -1;  // -1: defaults to r if given, else n
    int r = -1;    // -1: defaults to r_f
    int k = 1;
    double lambda = 0.0;
    DispatchPolicy policy = DispatchPolicy::UniformRandom;
    std::string dist_spec = "exp(1)";
    long num_jobs = 10000;
    long warmup_jobs = -1;
    int replications = 20;
    std::uint64_t seed = 12345;
    std::optional<SweepAxis> sweep;
    double gamma = kInf;
    int r_max = -1;  // -1: n
    std::string out = "forklat_out.csv";
    std::string records_out;  // per-job record dump (simulate mode), "" = off
    int jobs = 0;  // parallel workers; 0 = hardware concurrency

    int resolved_r_f() const { return r_f > 0 ? r_f : (r > 0 ? r : n); }
    int resolved_r() const { return r > 0 ? r : resolved_r_f(); }
    int resolved_r_max() const { return r_max > 0 ? r_max : n; }

    SystemConfig to_config() const {
        SystemConfig cfg;
        cfg.n = n;
        cfg.r_f = resolved_r_f();
        cfg.r = resolved_r();
        cfg.k = k;
        cfg.lambda = lambda;
        cfg.policy = policy;
        cfg.dist = parse_distribution(dist_spec);
        cfg.dist_spec = dist_spec;
        cfg.num_jobs = num_jobs;
        cfg.warmup_jobs = warmup_jobs;
        cfg.seed = seed;
        return cfg;
    }

    StrategyQuery to_query() const {
        StrategyQuery q;
        q.dist = parse_distribution(dist_spec);
        q.dist_spec = dist_spec;
        q.n = n;
        q.k = k;
        q.lambda = lambda;
        q.gamma = gamma;
        q.r_max = resolved_r_max();
        return q;
    }
};

// ---------------------------------------------------------------------------
// Config file: flat `key = value` lines, '#' comments, dotted keys for the
// sweep axis. Diff-friendly and emitted canonically by dump_config.

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::string fmt_g(double v) {
    if (v == kInf) return "inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string fmt_g12(double v) {
    if (v == kInf) return "inf";
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline double parse_double(const std::string& s, const std::string& key) {
    if (s == "inf") return kInf;
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (trim(s.substr(used)).empty()) return v;
    } catch (const std::exception&) {
    }
    throw ParseError("config: bad number for " + key + ": '" + s + "'");
}

inline long parse_long(const std::string& s, const std::string& key) {
    try {
        std::size_t used = 0;
        long v = std::stol(s, &used);
        if (trim(s.substr(used)).empty()) return v;
    } catch (const std::exception&) {
    }
    throw ParseError("config: bad integer for " + key + ": '" + s + "'");
}

}  // namespace detail

inline ExperimentSpec parse_config(std::istream& in) {
    ExperimentSpec spec;
    std::string line;
    int lineno = 0;
    bool saw_sweep_param = false, saw_sweep_values = false;
    SweepAxis axis;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::string t = detail::trim(line);
        if (t.empty()) continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ParseError("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = detail::trim(t.substr(0, eq));
        std::string val = detail::trim(t.substr(eq + 1));
        if (key == "mode")
            spec.mode = parse_mode(val);
        else if (key == "n")
            spec.n = static_cast<int>(detail::parse_long(val, key));
        else if (key == "r_f")
            spec.r_f = static_cast<int>(detail::parse_long(val, key));
        else if (key == "r")
            spec.r = static_cast<int>(detail::parse_long(val, key));
        else if (key == "k")
            spec.k = static_cast<int>(detail::parse_long(val, key));
        else if (key == "lambda")
            spec.lambda = detail::parse_double(val, key);
        else if (key == "dist")
            spec.dist_spec = val;
        else if (key == "policy")
            spec.policy = parse_policy(val);
        else if (key == "num_jobs")
            spec.num_jobs = detail::parse_long(val, key);
        else if (key == "warmup_jobs")
            spec.warmup_jobs = detail::parse_long(val, key);
        else if (key == "replications")
            spec.replications = static_cast<int>(detail::parse_long(val, key));
        else if (key == "seed")
            spec.seed = static_cast<std::uint64_t>(detail::parse_long(val, key));
        else if (key == "gamma")
            spec.gamma = detail::parse_double(val, key);
        else if (key == "r_max")
            spec.r_max = static_cast<int>(detail::parse_long(val, key));
        else if (key == "out")
            spec.out = val;
        else if (key == "records_out")
            spec.records_out = val;
        else if (key == "jobs")
            spec.jobs = static_cast<int>(detail::parse_long(val, key));
        else if (key == "sweep.param") {
            axis.param = val;
            saw_sweep_param = true;
        } else if (key == "sweep.values") {
            std::stringstream ss(val);
            std::string item;
            while (std::getline(ss, item, ','))
                axis.values.push_back(detail::parse_double(detail::trim(item), key));
            saw_sweep_values = true;
        } else {
            throw ParseError("config line " + std::to_string(lineno) + ": unknown key '" +
                             key + "'");
        }
    }
    if (saw_sweep_param != saw_sweep_values)
        throw ParseError("config: sweep.param and sweep.values must be given together");
    if (saw_sweep_param) {
        if (axis.param != "lambda" && axis.param != "r" && axis.param != "k" &&
            axis.param != "n")
            throw ParseError("config: sweep.param must be one of lambda, r, k, n");
        if (axis.values.empty()) throw ParseError("config: sweep.values is empty");
        spec.sweep = std::move(axis);
    }
    // Parse the distribution eagerly so bad specs fail at load time.
    parse_distribution(spec.dist_spec);
    return spec;
}

inline ExperimentSpec parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("config: cannot open " + path);
    return parse_config(in);
}

inline std::string dump_config(const ExperimentSpec& spec) {
    std::ostringstream out;
    out << "mode = " << to_string(spec.mode) << "\n";
    out << "n = " << spec.n << "\n";
    out << "r_f = " << spec.resolved_r_f() << "\n";
    out << "r = " << spec.resolved_r() << "\n";
    out << "k = " << spec.k << "\n";
    out << "lambda = " << detail::fmt_g(spec.lambda) << "\n";
    out << "dist = " << spec.dist_spec << "\n";
    out << "policy = " << to_string(spec.policy) << "\n";
    out << "num_jobs = " << spec.num_jobs << "\n";
    out << "warmup_jobs = " << spec.warmup_jobs << "\n";
    out << "replications = " << spec.replications << "\n";
    out << "seed = " << spec.seed << "\n";
    if (spec.gamma != kInf) out << "gamma = " << detail::fmt_g(spec.gamma) << "\n";
    if (spec.r_max > 0) out << "r_max = " << spec.r_max << "\n";
    if (spec.sweep) {
        out << "sweep.param = " << spec.sweep->param << "\n";
        out << "sweep.values = ";
        for (std::size_t i = 0; i < spec.sweep->values.size(); ++i) {
            if (i) out << ", ";
            out << detail::fmt_g(spec.sweep->values[i]);
        }
        out << "\n";
    }
    out << "out = " << spec.out << "\n";
    if (!spec.records_out.empty()) out << "records_out = " << spec.records_out << "\n";
    out << "jobs = " << spec.jobs << "\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// CSV output. Long format, one metric per row, shared by every mode.

inline constexpr const char* kCsvHeader =
    "mode,n,r_f,r,k,lambda,dist,policy,metric,value,ci_halfwidth,provenance,status";

struct CsvRow {
    std::string mode;
    int n = 0, r_f = 0, r = 0, k = 0;
    double lambda = 0;
    std::string dist;
    std::string policy;
    std::string metric;
    double value = 0;
    std::optional<double> ci;
    std::string provenance;
    std::string status = "ok";
};

namespace detail {

inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

}  // namespace detail

inline std::string to_csv_line(const CsvRow& row) {
    std::ostringstream out;
    out << detail::csv_quote(row.mode) << ',' << row.n << ',' << row.r_f << ',' << row.r
        << ',' << row.k << ',' << detail::fmt_g12(row.lambda) << ','
        << detail::csv_quote(row.dist) << ',' << detail::csv_quote(row.policy) << ','
        << detail::csv_quote(row.metric) << ',' << detail::fmt_g12(row.value) << ','
        << (row.ci ? detail::fmt_g12(*row.ci) : std::string()) << ','
        << detail::csv_quote(row.provenance) << ',' << detail::csv_quote(row.status);
    return out.str();
}

inline void write_csv(const std::string& path, const std::vector<CsvRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open output file: " + path);
    out << kCsvHeader << "\n";
    for (const CsvRow& r : rows) out << to_csv_line(r) << "\n";
}

// Per-job dump from one retained replication.
inline void write_job_records(const std::string& path, const std::vector<JobRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open records file: " + path);
    out << "job_id,arrival,latency,cost,num_started,num_finished\n";
    for (const JobRecord& rec : records)
        out << rec.job_id << ',' << detail::fmt_g12(rec.arrival_time) << ','
            << detail::fmt_g12(rec.latency) << ',' << detail::fmt_g12(rec.cost) << ','
            << rec.num_started << ',' << rec.num_finished << "\n";
}

// ---------------------------------------------------------------------------
// Row builders

namespace detail {

inline CsvRow scenario_row(const std::string& mode, const SystemConfig& cfg) {
    CsvRow row;
    row.mode = mode;
    row.n = cfg.n;
    row.r_f = cfg.r_f;
    row.r = cfg.r;
    row.k = cfg.k;
    row.lambda = cfg.lambda;
    row.dist = cfg.dist_spec;
    row.policy = to_string(cfg.policy);
    return row;
}

inline void append_bound_rows(std::vector<CsvRow>& rows, CsvRow base,
                              const std::string& name, const Bound& b) {
    if (!b.informative()) return;
    if (b.exact) {
        CsvRow row = base;
        row.metric = name + "_exact";
        row.value = *b.exact;
        row.provenance = b.exact_provenance;
        rows.push_back(std::move(row));
        return;
    }
    if (!b.lower_provenance.empty()) {
        CsvRow row = base;
        row.metric = name + "_lower";
        row.value = b.lower;
        row.provenance = b.lower_provenance;
        rows.push_back(std::move(row));
    }
    if (!b.upper_provenance.empty()) {
        CsvRow row = base;
        row.metric = name + "_upper";
        row.value = b.upper;
        if (b.std_error) row.ci = *b.std_error;
        row.provenance = b.upper_provenance;
        rows.push_back(std::move(row));
    }
}

inline void append_report_rows(std::vector<CsvRow>& rows, const std::string& mode,
                               const SystemConfig& cfg, const AnalyticReport& rep) {
    CsvRow base = scenario_row(mode, cfg);
    append_bound_rows(rows, base, "latency", rep.latency);
    append_bound_rows(rows, base, "cost", rep.cost);
    if (rep.capacity) {
        CsvRow row = base;
        row.metric = "capacity";
        row.value = *rep.capacity;
        row.provenance = rep.capacity_provenance;
        rows.push_back(std::move(row));
    }
}

}  // namespace detail

// Analytic rows for an arbitrary (n, r_f, r, k) scenario. Exact results and
// bounds where the theory provides them, group-style estimates otherwise.
inline std::vector<CsvRow> analyze_rows(const SystemConfig& cfg,
                                        const std::string& mode = "analyze") {
    cfg.validate();
    std::vector<CsvRow> rows;
    const bool full_fork = cfg.r_f == cfg.n;
    const bool no_early_cancel = cfg.r == cfg.r_f;

    if (cfg.k == 1 && no_early_cancel && full_fork) {
        detail::append_report_rows(rows, mode, cfg, fork_join_k1(cfg.dist, cfg.n, cfg.lambda));
        return rows;
    }
    if (cfg.k == 1 && cfg.r == 1 && full_fork) {
        detail::append_report_rows(rows, mode, cfg,
                                   fork_early_cancel_k1(cfg.dist, cfg.n, cfg.lambda));
        return rows;
    }
    if (cfg.k == 1 && no_early_cancel && cfg.n % cfg.r == 0 &&
        cfg.policy == DispatchPolicy::GroupRandom) {
        detail::append_report_rows(rows, mode, cfg,
                                   group_based_partial_fork(cfg.dist, cfg.n, cfg.r, cfg.lambda));
        return rows;
    }
    if (cfg.k > 1 && no_early_cancel && full_fork) {
        detail::append_report_rows(
            rows, mode, cfg, general_k_latency_bounds(cfg.dist, cfg.n, cfg.k, cfg.lambda));
        AnalyticReport costs = general_k_cost_bounds(cfg.dist, cfg.n, cfg.k);
        CsvRow base = detail::scenario_row(mode, cfg);
        detail::append_bound_rows(rows, base, "cost", costs.cost);
        return rows;
    }
    if (cfg.k > 1 && cfg.r == cfg.k && full_fork) {
        try {
            auto samples = mg1_response_samples(
                cfg.dist, cfg.lambda * cfg.k / cfg.n, 20000, cfg.seed ^ 0xfeedULL);
            detail::append_report_rows(
                rows, mode, cfg,
                early_cancel_general_k(cfg.dist, cfg.n, cfg.k, cfg.lambda, samples));
        } catch (const Unstable&) {
            CsvRow row = detail::scenario_row(mode, cfg);
            row.metric = "latency_upper";
            row.value = kInf;
            row.provenance = "monte-carlo-max-response-bound";
            row.status = "unstable";
            rows.push_back(std::move(row));
            CsvRow cost = detail::scenario_row(mode, cfg);
            cost.metric = "cost_exact";
            cost.value = cfg.k * mean(cfg.dist);
            cost.provenance = "quorum-service-cost";
            rows.push_back(std::move(cost));
        }
        return rows;
    }

    // General (n, r_f, r, k): report the policy-agnostic group-style
    // estimates at the configured retain width.
    double m1 = order_stat_mean(cfg.dist, cfg.k, cfg.r);
    double m2 = order_stat_second_moment(cfg.dist, cfg.k, cfg.r);
    double denom = cfg.n - cfg.lambda * cfg.r * m1;
    CsvRow base = detail::scenario_row(mode, cfg);
    CsvRow lat = base;
    lat.metric = "latency_estimate";
    lat.value = denom > 0 ? m1 + cfg.lambda * cfg.r * m2 / (2.0 * denom) : kInf;
    lat.provenance = "split-merge-estimate";
    rows.push_back(std::move(lat));
    CsvRow cost = base;
    cost.metric = "cost_estimate";
    cost.value = cfg.r * m1;
    cost.provenance = "split-merge-estimate";
    rows.push_back(std::move(cost));
    return rows;
}

inline std::vector<CsvRow> summary_rows(const SystemConfig& cfg, const RunSummary& sum,
                                        const std::string& mode = "simulate") {
    std::vector<CsvRow> rows;
    CsvRow base = detail::scenario_row(mode, cfg);
    CsvRow lat = base;
    lat.metric = "mean_latency";
    lat.value = sum.mean_latency;
    lat.ci = sum.latency_ci;
    lat.provenance = "simulated";
    if (sum.divergence_suspected) lat.status = "divergence-suspected";
    rows.push_back(std::move(lat));
    CsvRow cost = base;
    cost.metric = "mean_cost";
    cost.value = sum.mean_cost;
    cost.ci = sum.cost_ci;
    cost.provenance = "simulated";
    rows.push_back(std::move(cost));
    double util = 0;
    for (double u : sum.server_utilization) util += u;
    CsvRow ur = base;
    ur.metric = "utilization_mean";
    ur.value = sum.server_utilization.empty() ? 0 : util / sum.server_utilization.size();
    ur.provenance = "simulated";
    rows.push_back(std::move(ur));
    return rows;
}

inline std::vector<CsvRow> simulate_rows(const SystemConfig& cfg, int replications,
                                         int threads, const std::string& mode = "simulate") {
    return summary_rows(cfg, simulate(cfg, replications, false, threads), mode);
}

// ---------------------------------------------------------------------------
// Sweeps

namespace detail {

inline SystemConfig apply_axis(const ExperimentSpec& spec, const std::string& param,
                               double value) {
    ExperimentSpec cell = spec;
    auto to_int = [&](double v) {
        int i = static_cast<int>(v);
        if (static_cast<double>(i) != v)
            throw ConfigInvalid("sweep: non-integer value for " + param);
        return i;
    };
    if (param == "lambda") {
        cell.lambda = value;
    } else if (param == "r") {
        int rv = to_int(value);
        bool tied = spec.resolved_r_f() == spec.resolved_r();
        cell.r = rv;
        cell.r_f = tied ? rv : spec.resolved_r_f();
    } else if (param == "k") {
        cell.k = to_int(value);
    } else if (param == "n") {
        cell.n = to_int(value);
    } else {
        throw ConfigInvalid("sweep: unknown parameter " + param);
    }
    SystemConfig cfg = cell.to_config();
    cfg.validate();
    return cfg;
}

}  // namespace detail

// Runs analytic plus simulated rows per sweep cell. Cells run in parallel;
// row order is by cell index, never completion order. Invalid or failing
// cells are flushed with a status token instead of aborting the sweep.
inline std::vector<CsvRow> sweep_rows(const ExperimentSpec& spec, int threads) {
    if (!spec.sweep) throw ConfigInvalid("sweep: no axis configured");
    const SweepAxis& axis = *spec.sweep;
    std::vector<std::vector<CsvRow>> per_cell(axis.values.size());

    auto run_cell = [&](std::size_t idx) {
        double value = axis.values[idx];
        std::vector<CsvRow>& rows = per_cell[idx];
        try {
            SystemConfig cfg = detail::apply_axis(spec, axis.param, value);
            rows = analyze_rows(cfg, "sweep");
            std::vector<CsvRow> sim = simulate_rows(cfg, spec.replications, 1, "sweep");
            rows.insert(rows.end(), sim.begin(), sim.end());
        } catch (const Error& e) {
            CsvRow row;
            row.mode = "sweep";
            row.n = spec.n;
            row.r_f = spec.resolved_r_f();
            row.r = spec.resolved_r();
            row.k = spec.k;
            row.lambda = spec.lambda;
            if (axis.param == "lambda") row.lambda = value;
            if (axis.param == "r") row.r = static_cast<int>(value);
            if (axis.param == "k") row.k = static_cast<int>(value);
            if (axis.param == "n") row.n = static_cast<int>(value);
            row.dist = spec.dist_spec;
            row.policy = to_string(spec.policy);
            row.metric = "cell";
            row.value = std::nan("");
            row.provenance = "none";
            std::string what = e.what();
            row.status = "failed: " + what.substr(0, what.find(','));
            rows.push_back(std::move(row));
        }
    };

    int workers = threads > 0 ? threads
                              : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<int>(workers, static_cast<int>(axis.values.size()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < axis.values.size(); ++i) run_cell(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < axis.values.size();
                     i = next.fetch_add(1))
                    run_cell(i);
            });
        for (auto& t : pool) t.join();
    }

    std::vector<CsvRow> rows;
    for (auto& cell : per_cell) rows.insert(rows.end(), cell.begin(), cell.end());
    return rows;
}

// ---------------------------------------------------------------------------
// Strategy modes

inline std::vector<CsvRow> recommend_rows(const ExperimentSpec& spec,
                                          const StrategyResult& rec) {
    std::vector<CsvRow> rows;
    for (const CurvePoint& p : rec.table) {
        CsvRow base;
        base.mode = "recommend";
        base.n = spec.n;
        base.r_f = spec.resolved_r_max();
        base.r = p.r;
        base.k = spec.k;
        base.lambda = spec.lambda;
        base.dist = spec.dist_spec;
        base.policy = to_string(spec.policy);
        base.status = p.feasible ? "ok" : "infeasible";
        CsvRow lat = base;
        lat.metric = "latency_estimate";
        lat.value = p.latency_estimate;
        lat.provenance = "split-merge-estimate";
        rows.push_back(std::move(lat));
        CsvRow cost = base;
        cost.metric = "cost_estimate";
        cost.value = p.cost_estimate;
        cost.provenance = "split-merge-estimate";
        rows.push_back(std::move(cost));
    }
    CsvRow star;
    star.mode = "recommend";
    star.n = spec.n;
    star.r_f = rec.r_f_star;
    star.r = rec.r_star;
    star.k = spec.k;
    star.lambda = spec.lambda;
    star.dist = spec.dist_spec;
    star.policy = to_string(spec.policy);
    star.metric = "r_star";
    star.value = rec.r_star;
    star.provenance = std::string("strategy-argmin; binding=") + to_string(rec.binding);
    rows.push_back(star);
    star.metric = "r_f_star";
    star.value = rec.r_f_star;
    rows.push_back(star);
    return rows;
}

inline std::vector<CsvRow> validation_rows(const ExperimentSpec& spec,
                                           const ValidationReport& report) {
    std::vector<CsvRow> rows;
    for (const ValidationRow& vr : report.rows) {
        CsvRow base;
        base.mode = "validate";
        base.n = spec.n;
        base.r_f = vr.r_f;
        base.r = vr.r;
        base.k = spec.k;
        base.lambda = spec.lambda;
        base.dist = spec.dist_spec;
        base.policy = to_string(spec.policy);
        CsvRow lat = base;
        lat.metric = "mean_latency";
        lat.value = vr.sim.mean_latency;
        lat.ci = vr.sim.latency_ci;
        lat.provenance = "simulated; " + vr.label;
        rows.push_back(std::move(lat));
        CsvRow cost = base;
        cost.metric = "mean_cost";
        cost.value = vr.sim.mean_cost;
        cost.ci = vr.sim.cost_ci;
        cost.provenance = "simulated; " + vr.label;
        rows.push_back(std::move(cost));
        if (std::isfinite(vr.latency_estimate)) {
            CsvRow est = base;
            est.metric = "latency_estimate";
            est.value = vr.latency_estimate;
            est.provenance = "split-merge-estimate";
            rows.push_back(std::move(est));
            CsvRow cst = base;
            cst.metric = "cost_estimate";
            cst.value = vr.cost_estimate;
            cst.provenance = "split-merge-estimate";
            rows.push_back(std::move(cst));
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Top-level runner: writes the CSV, prints a human-readable report, returns
// a process exit status.

inline int run_experiment(const ExperimentSpec& spec, std::ostream& report) {
    int threads = spec.jobs > 0 ? spec.jobs
                                : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    std::vector<CsvRow> rows;
    switch (spec.mode) {
        case Mode::Analyze: {
            SystemConfig cfg = spec.to_config();
            rows = analyze_rows(cfg);
            report << "analyze: " << cfg.dist_spec << " n=" << cfg.n << " r_f=" << cfg.r_f
                   << " r=" << cfg.r << " k=" << cfg.k << " lambda=" << cfg.lambda << "\n";
            for (const CsvRow& r : rows)
                report << "  " << r.metric << " = " << detail::fmt_g12(r.value) << "  ["
                       << r.provenance << "]\n";
            break;
        }
        case Mode::Simulate: {
            SystemConfig cfg = spec.to_config();
            bool retain = !spec.records_out.empty();
            RunSummary sum = simulate(cfg, spec.replications, retain, threads);
            if (retain) {
                write_job_records(spec.records_out, sum.records);
                report << "wrote " << sum.records.size() << " job records to "
                       << spec.records_out << "\n";
            }
            rows = summary_rows(cfg, sum);
            report << "simulate: mean latency = " << detail::fmt_g12(sum.mean_latency)
                   << " +- " << detail::fmt_g12(sum.latency_ci)
                   << ", mean cost = " << detail::fmt_g12(sum.mean_cost) << " +- "
                   << detail::fmt_g12(sum.cost_ci) << " (" << sum.jobs_measured
                   << " jobs measured)\n";
            if (sum.divergence_suspected)
                report << "  note: latency still climbing over the run; the system may be "
                          "past its stability threshold\n";
            break;
        }
        case Mode::Sweep: {
            rows = sweep_rows(spec, threads);
            report << "sweep over " << spec.sweep->param << ": " << spec.sweep->values.size()
                   << " cells\n";
            break;
        }
        case Mode::Recommend: {
            StrategyQuery q = spec.to_query();
            StrategyResult rec = recommend(q);
            rows = recommend_rows(spec, rec);
            report << "recommend: r_f* = " << rec.r_f_star << ", r* = " << rec.r_star
                   << "\nbinding constraint: " << to_string(rec.binding) << "\n";
            TailClass tc = classify_tail(q.dist);
            report << "tail class: " << to_string(tc.label) << " (" << tc.evidence << ")\n";
            for (const CurvePoint& p : rec.table)
                report << "  r=" << p.r << "  T^=" << detail::fmt_g12(p.latency_estimate)
                       << "  C^=" << detail::fmt_g12(p.cost_estimate)
                       << (p.feasible ? "" : "  (infeasible)") << "\n";
            break;
        }
        case Mode::Validate: {
            StrategyQuery q = spec.to_query();
            StrategyResult rec = recommend(q);
            SimBudget budget;
            budget.num_jobs = spec.num_jobs;
            budget.replications = spec.replications;
            budget.seed = spec.seed;
            budget.threads = threads;
            ValidationReport vrep = validate_recommendation(q, rec, budget);
            rows = recommend_rows(spec, rec);
            std::vector<CsvRow> vrows = validation_rows(spec, vrep);
            rows.insert(rows.end(), vrows.begin(), vrows.end());
            report << "recommend: r_f* = " << rec.r_f_star << ", r* = " << rec.r_star
                   << "\nbinding constraint: " << to_string(rec.binding) << "\n";
            for (const ValidationRow& vr : vrep.rows)
                report << "  " << vr.label << " (r_f=" << vr.r_f << ", r=" << vr.r
                       << "): E[T] = " << detail::fmt_g12(vr.sim.mean_latency) << " +- "
                       << detail::fmt_g12(vr.sim.latency_ci)
                       << ", E[C] = " << detail::fmt_g12(vr.sim.mean_cost) << " +- "
                       << detail::fmt_g12(vr.sim.cost_ci) << "\n";
            report << "cost budget respected: " << (vrep.budget_respected ? "yes" : "no")
                   << "\n";
            break;
        }
    }
    write_csv(spec.out, rows);
    report << "wrote " << rows.size() << " rows to " << spec.out << "\n";
    if (spec.mode == Mode::Sweep) {
        bool any_ok = false;
        for (const CsvRow& r : rows) any_ok = any_ok || r.status == "ok";
        return any_ok ? 0 : 1;
    }
    return 0;
}

}  // namespace forklat
