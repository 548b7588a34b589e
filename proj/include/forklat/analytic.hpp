#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "forklat/order_stats.hpp"
#include "forklat/rng.hpp"

namespace forklat {

// Mean response time of an M/G/1 queue (Pollaczek-Khinchine); +inf at or
// above saturation so load sweeps produce total curves.
inline double mg1_response_mean(double ex, double ex2, double lambda) {
    double rho = lambda * ex;
    if (rho >= 1.0) return kInf;
    return ex + lambda * ex2 / (2.0 * (1.0 - rho));
}

// Probability an arrival waits in an M/M/n queue with offered load a = lambda/mu
// Erlangs. Uses the blocking-probability recurrence, which stays in (0,1] and
// is stable for n up to at least 1e4.
inline double erlang_c_wait_probability(int n, double a) {
    if (n < 1) throw std::invalid_argument("erlang_c: need n >= 1");
    if (!(a >= 0)) throw std::invalid_argument("erlang_c: offered load must be >= 0");
    if (a >= n) return 1.0;
    double b = 1.0;
    for (int j = 1; j <= n; ++j) b = a * b / (j + a * b);
    double rho = a / n;
    return b / (1.0 - rho * (1.0 - b));
}

// Mean waiting time in an M/M/n queue with per-server mean service ex.
inline double mmn_mean_wait(int n, double lambda, double ex) {
    double a = lambda * ex;
    if (a >= n) return kInf;
    if (lambda == 0) return 0.0;
    return erlang_c_wait_probability(n, a) * ex / (n - a);
}

// One metric of a report: exact value when theory gives one, otherwise the
// tightest known bracket. Provenance labels name the producing method.
struct Bound {
    double lower = 0.0;
    double upper = kInf;
    std::optional<double> exact;
    std::optional<double> std_error;  // set only for Monte-Carlo estimates
    std::string lower_provenance;
    std::string upper_provenance;
    std::string exact_provenance;

    void set_exact(double v, const std::string& label) {
        exact = v;
        lower = v;
        upper = v;
        exact_provenance = label;
        lower_provenance = label;
        upper_provenance = label;
    }
    bool informative() const {
        return exact.has_value() || !lower_provenance.empty() || !upper_provenance.empty();
    }
};

struct ScenarioRef {
    int n = 1;
    int r_f = 1;
    int r = 1;
    int k = 1;
    double lambda = 0.0;
    std::string dist_spec;
};

struct AnalyticReport {
    ScenarioRef scenario;
    Bound latency;  // time
    Bound cost;     // server-time per job
    std::optional<double> capacity;  // jobs per unit time
    std::string capacity_provenance;
};

namespace detail {

inline double require_finite_moment(double v, const std::string& what) {
    if (!std::isfinite(v)) throw NonFiniteMoment(what + " is not finite");
    return v;
}

}  // namespace detail

// Full fork, first finisher wins: the system behaves as one M/G/1 queue with
// service time min(X_1..X_n), so latency and cost are exact.
inline AnalyticReport fork_join_k1(const ServiceDistribution& dist, int n, double lambda) {
    if (n < 1) throw std::invalid_argument("fork_join_k1: need n >= 1");
    if (!(lambda >= 0)) throw std::invalid_argument("fork_join_k1: need lambda >= 0");
    double m1 = order_stat_mean(dist, 1, n);
    double m2 = order_stat_second_moment(dist, 1, n);
    AnalyticReport rep;
    rep.scenario = {n, n, n, 1, lambda, to_spec_string(dist)};
    rep.latency.set_exact(mg1_response_mean(m1, m2, lambda), "mg1-pollaczek-khinchine");
    rep.cost.set_exact(n * m1, "replicated-min-cost");
    rep.capacity = 1.0 / m1;
    rep.capacity_provenance = "utilization-stability";
    return rep;
}

// Full fork with cancellation at first service start: equivalent to an M/G/n
// queue. Latency uses the standard Erlang-C based approximation, reported as
// a bracket [E[X], approximation] rather than an exact value.
inline AnalyticReport fork_early_cancel_k1(const ServiceDistribution& dist, int n,
                                           double lambda) {
    if (n < 1) throw std::invalid_argument("fork_early_cancel_k1: need n >= 1");
    if (!(lambda >= 0)) throw std::invalid_argument("fork_early_cancel_k1: need lambda >= 0");
    double ex = detail::require_finite_moment(mean(dist), "E[X]");
    double ex2 = detail::require_finite_moment(second_moment(dist), "E[X^2]");
    AnalyticReport rep;
    rep.scenario = {n, n, 1, 1, lambda, to_spec_string(dist)};
    rep.cost.set_exact(ex, "single-copy-service-cost");
    rep.capacity = n / ex;
    rep.capacity_provenance = "utilization-stability";
    double rho = lambda * ex / n;
    if (rho >= 1.0) {
        rep.latency.lower = kInf;
        rep.latency.upper = kInf;
    } else {
        rep.latency.lower = ex;
        rep.latency.upper = ex + ex2 / (2.0 * ex * ex) * mmn_mean_wait(n, lambda, ex);
    }
    rep.latency.lower_provenance = "zero-wait-bound";
    rep.latency.upper_provenance = "mgn-erlang-c-approximation";
    return rep;
}

// Disjoint groups of r servers, each an independent full-fork system fed a
// 1/(n/r) thinning of the arrivals. Exact for the group-based random policy.
inline AnalyticReport group_based_partial_fork(const ServiceDistribution& dist, int n,
                                               int r, double lambda) {
    if (r < 1) throw std::invalid_argument("group_based_partial_fork: need r >= 1");
    if (n < 1 || n % r != 0)
        throw IndivisibleGroup("group size " + std::to_string(r) +
                               " does not divide server count " + std::to_string(n));
    double m1 = order_stat_mean(dist, 1, r);
    double m2 = order_stat_second_moment(dist, 1, r);
    AnalyticReport rep;
    rep.scenario = {n, r, r, 1, lambda, to_spec_string(dist)};
    double denom = n - lambda * r * m1;
    rep.latency.set_exact(denom > 0 ? m1 + lambda * r * m2 / (2.0 * denom) : kInf,
                          "mg1-pollaczek-khinchine");
    rep.cost.set_exact(r * m1, "replicated-min-cost");
    rep.capacity = n / (r * m1);
    rep.capacity_provenance = "utilization-stability";
    return rep;
}

// Quorum of k out of n with full fork. The upper bound blocks all servers
// until the quorum completes (split-merge); the lower bound lets every prior
// job finish after a single task.
inline AnalyticReport general_k_latency_bounds(const ServiceDistribution& dist, int n,
                                               int k, double lambda) {
    if (k < 1 || n < 1 || k > n)
        throw std::invalid_argument("general_k_latency_bounds: need 1 <= k <= n");
    if (!(lambda >= 0))
        throw std::invalid_argument("general_k_latency_bounds: need lambda >= 0");
    double mk1 = order_stat_mean(dist, k, n);
    double mk2 = order_stat_second_moment(dist, k, n);
    double m11 = order_stat_mean(dist, 1, n);
    double m12 = order_stat_second_moment(dist, 1, n);
    AnalyticReport rep;
    rep.scenario = {n, n, n, k, lambda, to_spec_string(dist)};
    if (k == 1) {
        rep.latency.set_exact(mg1_response_mean(mk1, mk2, lambda), "mg1-pollaczek-khinchine");
        return rep;
    }
    rep.latency.upper = mg1_response_mean(mk1, mk2, lambda);
    double rho1 = lambda * m11;
    rep.latency.lower = rho1 >= 1.0 ? kInf : mk1 + lambda * m12 / (2.0 * (1.0 - rho1));
    rep.latency.upper_provenance = "split-merge-mg1-bound";
    rep.latency.lower_provenance = "single-task-wait-bound";
    return rep;
}

// Cost bracket for the k-of-n quorum. At least n-k+1 tasks of each job start
// together; the brackets account for the k-1 stragglers that may start early.
inline AnalyticReport general_k_cost_bounds(const ServiceDistribution& dist, int n, int k) {
    if (k < 1 || n < 1 || k > n)
        throw std::invalid_argument("general_k_cost_bounds: need 1 <= k <= n");
    double ex = detail::require_finite_moment(mean(dist), "E[X]");
    double min_rest = order_stat_mean(dist, 1, n - k + 1);
    double sum_low = 0;
    for (int i = 1; i <= k; ++i) sum_low += order_stat_mean(dist, i, n);
    AnalyticReport rep;
    rep.scenario = {n, n, n, k, 0.0, to_spec_string(dist)};
    rep.cost.upper = (k - 1) * ex + (n - k + 1) * min_rest;
    rep.cost.lower = sum_low + (n - k) * min_rest;
    // Guard the bracket against quadrature round-off when the bounds coincide.
    if (rep.cost.lower > rep.cost.upper &&
        rep.cost.lower - rep.cost.upper < 1e-9 * rep.cost.upper)
        rep.cost.lower = rep.cost.upper;
    rep.cost.upper_provenance = "staggered-start-cost-bound";
    rep.cost.lower_provenance = "order-stat-sum-cost-bound";
    return rep;
}

// Plug-in estimate of E[max(R_1..R_k)] from an empirical response-time
// sample, via integrating 1 - F^k over the observed support.
inline double empirical_max_order_mean(std::vector<double> samples, int k) {
    std::sort(samples.begin(), samples.end());
    auto n = static_cast<double>(samples.size());
    double value = 0;
    double prev = 0;
    std::size_t i = 0;
    while (i < samples.size()) {
        double x = samples[i];
        std::size_t j = i;
        while (j < samples.size() && samples[j] == x) ++j;
        if (x > prev) {
            double f = static_cast<double>(i) / n;
            value += (1.0 - std::pow(f, k)) * (x - prev);
            prev = x;
        }
        i = j;
    }
    return value;
}

// Quorum variant with cancellation at the k-th service start. Cost is exact;
// the latency bound needs stationary M/G/1 response samples drawn at the
// thinned per-server rate lambda*k/n (see mg1_response_samples).
inline AnalyticReport early_cancel_general_k(const ServiceDistribution& dist, int n, int k,
                                             double lambda,
                                             std::span<const double> response_samples,
                                             std::uint64_t bootstrap_seed = 0x9e3779b9) {
    if (k < 1 || n < 1 || k > n)
        throw std::invalid_argument("early_cancel_general_k: need 1 <= k <= n");
    double ex = detail::require_finite_moment(mean(dist), "E[X]");
    if (lambda * k * ex / n >= 1.0)
        throw Unstable("early_cancel_general_k: per-server load at or above 1");
    if (response_samples.size() < 10000)
        throw InsufficientSamples("early_cancel_general_k: need at least 10^4 response samples");

    std::vector<double> samples(response_samples.begin(), response_samples.end());
    double estimate = empirical_max_order_mean(samples, k);

    // Bootstrap standard error of the plug-in estimator.
    const int resamples = 200;
    std::mt19937_64 rng(bootstrap_seed);
    std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
    double acc = 0, acc2 = 0;
    std::vector<double> boot(samples.size());
    for (int b = 0; b < resamples; ++b) {
        for (auto& v : boot) v = samples[pick(rng)];
        double e = empirical_max_order_mean(boot, k);
        acc += e;
        acc2 += e * e;
    }
    double var = std::max(0.0, acc2 / resamples - (acc / resamples) * (acc / resamples));

    AnalyticReport rep;
    rep.scenario = {n, n, k, k, lambda, to_spec_string(dist)};
    rep.cost.set_exact(k * ex, "quorum-service-cost");
    rep.capacity = n / (k * ex);
    rep.capacity_provenance = "utilization-stability";
    rep.latency.upper = estimate;
    rep.latency.std_error = std::sqrt(var / (1.0 - 1.0 / resamples));
    rep.latency.upper_provenance = "monte-carlo-max-response-bound";
    return rep;
}

inline double harmonic(int n) {
    double h = 0;
    for (int i = 1; i <= n; ++i) h += 1.0 / i;
    return h;
}

// Zero-load latency of a k-of-n quorum when the per-task work is a 1/k share
// plus an exponential tail: delta/k + (H_n - H_{n-k})/mu. Trades parallelism
// (first term) against diversity (second).
inline double diversity_parallelism_limit(double delta_total, double mu, int n, int k) {
    if (k < 1 || n < 1 || k > n)
        throw std::invalid_argument("diversity_parallelism_limit: need 1 <= k <= n");
    if (!(mu > 0)) throw std::invalid_argument("diversity_parallelism_limit: need mu > 0");
    if (!(delta_total >= 0))
        throw std::invalid_argument("diversity_parallelism_limit: need delta >= 0");
    return delta_total / k + (harmonic(n) - harmonic(n - k)) / mu;
}

// Highest arrival rate a symmetric policy can sustain: n / E[C].
inline double stability_capacity(double cost_per_job, int n) {
    if (!(cost_per_job > 0))
        throw std::invalid_argument("stability_capacity: need cost > 0");
    return n / cost_per_job;
}

}  // namespace forklat
