#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "forklat/analytic.hpp"
#include "forklat/simulate.hpp"

namespace forklat {

// How much redundancy to buy: fork wide (up to the network cap r_max), keep
// r copies past the early-cancellation point, subject to a server-time
// budget gamma per job.
struct StrategyQuery {
    ServiceDistribution dist = exponential(1.0);
    std::string dist_spec = "exp(1)";
    int n = 1;
    int k = 1;
    double lambda = 0.0;
    double gamma = kInf;  // computing-cost budget, server-time per job
    int r_max = 1;        // fork-width cap

    void validate() const {
        if (!(k >= 1 && k <= r_max && r_max <= n))
            throw ConfigInvalid("strategy: need 1 <= k <= r_max <= n");
        if (!(gamma > 0)) throw ConfigInvalid("strategy: need gamma > 0");
        if (!(lambda >= 0)) throw ConfigInvalid("strategy: need lambda >= 0");
    }
};

struct CurvePoint {
    int r;
    double latency_estimate;  // +inf when the estimate is past saturation
    double cost_estimate;
    bool feasible;  // finite latency and within the cost budget
};

enum class BindingConstraint { None, CostBudget, ForkCap };

inline const char* to_string(BindingConstraint b) {
    switch (b) {
        case BindingConstraint::None: return "none";
        case BindingConstraint::CostBudget: return "cost-budget";
        case BindingConstraint::ForkCap: return "fork-cap";
    }
    return "?";
}

struct StrategyResult {
    int r_f_star;
    int r_star;
    std::vector<CurvePoint> table;
    BindingConstraint binding;
};

// Group-style latency/cost estimates over r in [k, r_max]:
//   cost(r) = r E[X_{k:r}]
//   latency(r) = E[X_{k:r}] + lambda r E[X_{k:r}^2] / (2 (n - lambda r E[X_{k:r}]))
inline std::vector<CurvePoint> estimate_curves(const StrategyQuery& q) {
    q.validate();
    std::vector<CurvePoint> table;
    table.reserve(static_cast<std::size_t>(q.r_max - q.k + 1));
    for (int r = q.k; r <= q.r_max; ++r) {
        double m1, m2;
        try {
            m1 = order_stat_mean(q.dist, q.k, r);
            m2 = order_stat_second_moment(q.dist, q.k, r);
        } catch (const NonFiniteMoment& e) {
            throw NonFiniteMoment(std::string(e.what()) + " (at r=" + std::to_string(r) + ")");
        }
        double cost = r * m1;
        double denom = q.n - q.lambda * r * m1;
        double latency = denom > 0 ? m1 + q.lambda * r * m2 / (2.0 * denom) : kInf;
        table.push_back({r, latency, cost, std::isfinite(latency) && cost <= q.gamma});
    }
    return table;
}

// Fork as wide as the network cap allows, keep the latency-minimizing retain
// width within the budget. The reported binding constraint is the one that
// limits the candidate set: the budget if it excludes any r in range,
// otherwise the fork cap when it is below the cluster size.
inline StrategyResult recommend(const StrategyQuery& q) {
    std::vector<CurvePoint> table = estimate_curves(q);
    const CurvePoint* best = nullptr;
    double min_cost = kInf;
    bool budget_excludes = false;
    for (const CurvePoint& p : table) {
        min_cost = std::min(min_cost, p.cost_estimate);
        if (p.cost_estimate > q.gamma) budget_excludes = true;
        if (!p.feasible) continue;
        if (best == nullptr || p.latency_estimate < best->latency_estimate) best = &p;
    }
    if (best == nullptr)
        throw Infeasible("no retain width satisfies the cost budget " +
                             std::to_string(q.gamma) + "; smallest achievable cost is " +
                             std::to_string(min_cost),
                         min_cost);
    StrategyResult res;
    res.r_f_star = q.r_max;
    res.r_star = best->r;
    res.binding = budget_excludes ? BindingConstraint::CostBudget
                  : q.r_max < q.n ? BindingConstraint::ForkCap
                                  : BindingConstraint::None;
    res.table = std::move(table);
    return res;
}

struct SimBudget {
    long num_jobs = 20000;
    int replications = 20;
    std::uint64_t seed = 12345;
    // Policy for the plain partial-fork baselines. The recommended system
    // always forks uniformly at random (its fork width exceeds its retain
    // width, which group dispatch cannot express).
    DispatchPolicy policy = DispatchPolicy::UniformRandom;
    int threads = 1;
};

struct ValidationRow {
    std::string label;  // "recommended" or "baseline"
    int r_f;
    int r;
    RunSummary sim;
    double latency_estimate;  // from the strategy curves (NaN when r > r_max)
    double cost_estimate;
};

struct ValidationReport {
    std::vector<ValidationRow> rows;
    bool budget_respected;  // recommendation's simulated E[C] <= gamma (+ CI)
};

// Closes the loop: simulate the recommendation next to every plain
// partial-fork baseline (r_f = r) over the same r range.
inline ValidationReport validate_recommendation(const StrategyQuery& q,
                                                const StrategyResult& rec,
                                                const SimBudget& budget) {
    auto make_config = [&](int r_f, int r, DispatchPolicy policy) {
        SystemConfig cfg;
        cfg.n = q.n;
        cfg.r_f = r_f;
        cfg.r = r;
        cfg.k = q.k;
        cfg.lambda = q.lambda;
        cfg.policy = policy;
        cfg.dist = q.dist;
        cfg.dist_spec = q.dist_spec;
        cfg.num_jobs = budget.num_jobs;
        cfg.seed = budget.seed;
        return cfg;
    };
    auto estimate_at = [&](int r) -> const CurvePoint* {
        for (const CurvePoint& p : rec.table)
            if (p.r == r) return &p;
        return nullptr;
    };

    ValidationReport report;
    {
        ValidationRow row;
        row.label = "recommended";
        row.r_f = rec.r_f_star;
        row.r = rec.r_star;
        row.sim = simulate(
            make_config(rec.r_f_star, rec.r_star, DispatchPolicy::UniformRandom),
            budget.replications, false, budget.threads);
        const CurvePoint* p = estimate_at(rec.r_star);
        row.latency_estimate = p ? p->latency_estimate : std::nan("");
        row.cost_estimate = p ? p->cost_estimate : std::nan("");
        report.rows.push_back(std::move(row));
    }
    for (int r = q.k; r <= q.r_max; ++r) {
        ValidationRow row;
        row.label = "baseline";
        row.r_f = r;
        row.r = r;
        row.sim = simulate(make_config(r, r, budget.policy), budget.replications, false,
                           budget.threads);
        const CurvePoint* p = estimate_at(r);
        row.latency_estimate = p ? p->latency_estimate : std::nan("");
        row.cost_estimate = p ? p->cost_estimate : std::nan("");
        report.rows.push_back(std::move(row));
    }
    const ValidationRow& rec_row = report.rows.front();
    report.budget_respected =
        rec_row.sim.mean_cost <= q.gamma + rec_row.sim.cost_ci;
    return report;
}

}  // namespace forklat
