#include <catch2/catch.hpp>

#include <cmath>

#include "forklat/analytic.hpp"
#include "forklat/simulate.hpp"

using namespace forklat;

TEST_CASE("full fork-join with quorum one behaves as an M/G/1 queue") {
    // min of 4 Exp(0.5) draws is Exp(2): response 0.5 + 0.25*0.5/(2*(1-0.125))
    auto rep = fork_join_k1(exponential(0.5), 4, 0.25);
    CHECK(*rep.latency.exact == Approx(0.5714285714285714).epsilon(1e-6));
    CHECK(*rep.cost.exact == Approx(2.0).epsilon(1e-6));
    CHECK(*rep.capacity == Approx(2.0).epsilon(1e-6));
    CHECK(rep.latency.lower == rep.latency.upper);
}

TEST_CASE("single server at zero load serves in one bare service time") {
    for (const auto& d : {exponential(0.5), shifted_exponential(2.0, 0.5),
                          pareto(1.0, 2.5), uniform(0.5, 2.5)}) {
        auto rep = fork_join_k1(d, 1, 0.0);
        CHECK(*rep.latency.exact == Approx(mean(d)).epsilon(1e-6));
        CHECK(*rep.cost.exact == Approx(mean(d)).epsilon(1e-6));
    }
}

TEST_CASE("pure exponential replication is free") {
    // with no shift, n E[X_{1:n}] stays 1/mu for every n
    for (int n = 1; n <= 8; ++n) {
        auto rep = fork_join_k1(shifted_exponential(0.0, 0.5), n, 0.1);
        CHECK(*rep.cost.exact == Approx(2.0).epsilon(1e-6));
    }
}

TEST_CASE("latency is infinite at and above the stability threshold") {
    auto d = shifted_exponential(2.0, 0.5);
    double cap = 1.0 / order_stat_mean(d, 1, 4);
    CHECK(std::isinf(*fork_join_k1(d, 4, cap).latency.exact));
    CHECK(std::isinf(*fork_join_k1(d, 4, cap * 1.5).latency.exact));
    CHECK(std::isfinite(*fork_join_k1(d, 4, cap * 0.99).latency.exact));
}

TEST_CASE("latency grows with load and diverges at capacity") {
    auto d = pareto(1.0, 2.5);
    double cap = 1.0 / order_stat_mean(d, 1, 5);
    double prev = 0;
    for (int i = 0; i <= 10; ++i) {
        double lambda = cap * i / 10.0;
        double t = *fork_join_k1(d, 5, lambda).latency.exact;
        CHECK(t >= prev);
        prev = t;
    }
    CHECK(std::isinf(prev));
}

TEST_CASE("erlang C against direct small-n formulas") {
    // n=1 waiting probability is the utilization itself
    CHECK(erlang_c_wait_probability(1, 0.3) == Approx(0.3).epsilon(1e-12));
    // n=2: C = a^2 / (a^2 + 2(1 - rho)(1 + a)) with rho = a/2
    for (double a : {0.2, 0.8, 1.5, 1.9}) {
        double rho = a / 2;
        double want = a * a / (a * a + 2 * (1 - rho) * (1 + a));
        CHECK(erlang_c_wait_probability(2, a) == Approx(want).epsilon(1e-12));
    }
    // direct factorial evaluation for a mid-size n
    int n = 5;
    double a = 3.0;
    double sum = 0, term = 1;
    for (int j = 0; j < n; ++j) {
        if (j > 0) term *= a / j;
        sum += term;
    }
    double an = term * a / n;  // a^n/n!
    double rho = a / n;
    double want = an / ((1 - rho) * sum + an);
    CHECK(erlang_c_wait_probability(n, a) == Approx(want).epsilon(1e-12));
    CHECK(erlang_c_wait_probability(1000, 300.0) < 1e-6);
}

TEST_CASE("early cancellation with one server recovers the M/G/1 response") {
    auto d = shifted_exponential(2.0, 0.5);
    double lambda = 0.2;
    auto rep = fork_early_cancel_k1(d, 1, lambda);
    double want = mg1_response_mean(mean(d), second_moment(d), lambda);
    CHECK(rep.latency.upper == Approx(want).epsilon(1e-9));
    CHECK(!rep.latency.exact.has_value());
    CHECK(*rep.cost.exact == Approx(mean(d)));
}

TEST_CASE("early cancellation latency tends to the bare mean at light load") {
    auto rep = fork_early_cancel_k1(shifted_exponential(2.0, 0.5), 4, 1e-9);
    CHECK(rep.latency.upper == Approx(4.0).epsilon(1e-6));
    CHECK(rep.latency.lower == Approx(4.0));
    CHECK(*rep.capacity == Approx(1.0));
    auto sat = fork_early_cancel_k1(shifted_exponential(2.0, 0.5), 4, 1.0);
    CHECK(std::isinf(sat.latency.upper));
    CHECK(*sat.cost.exact == Approx(4.0));
}

TEST_CASE("group-based forking reduces to full fork at one group") {
    auto d = pareto(1.0, 2.2);
    auto full = fork_join_k1(d, 6, 0.4);
    auto grouped = group_based_partial_fork(d, 6, 6, 0.4);
    CHECK(*grouped.latency.exact == Approx(*full.latency.exact).epsilon(1e-9));
    CHECK(*grouped.cost.exact == Approx(*full.cost.exact).epsilon(1e-9));
    CHECK(*grouped.capacity == Approx(*full.capacity).epsilon(1e-9));
}

TEST_CASE("group size one is a bank of independent M/G/1 queues") {
    auto d = shifted_exponential(1.0, 0.5);
    int n = 6;
    double lambda = 0.9;
    auto rep = group_based_partial_fork(d, n, 1, lambda);
    double want = mg1_response_mean(mean(d), second_moment(d), lambda / n);
    CHECK(*rep.latency.exact == Approx(want).epsilon(1e-9));
    CHECK(*rep.cost.exact == Approx(mean(d)).epsilon(1e-6));
}

TEST_CASE("group width must divide the cluster") {
    CHECK_THROWS_AS(group_based_partial_fork(exponential(1.0), 6, 4, 0.1),
                    IndivisibleGroup);
}

TEST_CASE("general quorum bounds collapse to the exact value at k=1") {
    auto d = pareto(0.5, 2.5);
    auto bounds = general_k_latency_bounds(d, 10, 1, 0.5);
    auto exact = fork_join_k1(d, 10, 0.5);
    CHECK(bounds.latency.exact.has_value());
    CHECK(*bounds.latency.exact == Approx(*exact.latency.exact).epsilon(1e-9));
}

TEST_CASE("general quorum bounds order correctly and meet at zero load") {
    auto d = pareto(0.5, 2.5);
    for (int k = 1; k <= 10; ++k) {
        auto rep = general_k_latency_bounds(d, 10, k, 0.5);
        CHECK(rep.latency.lower <= rep.latency.upper);
        auto zero = general_k_latency_bounds(d, 10, k, 0.0);
        double service = order_stat_mean(d, k, 10);
        CHECK(zero.latency.lower == Approx(service).epsilon(1e-9));
        CHECK(zero.latency.upper == Approx(service).epsilon(1e-9));
    }
}

TEST_CASE("cost bounds coincide at the quorum extremes") {
    auto d = pareto(0.5, 2.5);
    int n = 10;
    auto k1 = general_k_cost_bounds(d, n, 1);
    CHECK(k1.cost.lower == Approx(k1.cost.upper).epsilon(1e-9));
    CHECK(k1.cost.upper == Approx(n * order_stat_mean(d, 1, n)).epsilon(1e-9));
    auto kn = general_k_cost_bounds(d, n, n);
    CHECK(kn.cost.lower == Approx(kn.cost.upper).epsilon(1e-6));
    CHECK(kn.cost.upper == Approx(n * mean(d)).epsilon(1e-6));
    for (int k = 1; k <= n; ++k) {
        auto rep = general_k_cost_bounds(d, n, k);
        CHECK(rep.cost.lower <= rep.cost.upper);
    }
}

TEST_CASE("early cancellation with a quorum has load-independent cost") {
    auto d = shifted_exponential(1.0, 0.25);  // mean 5
    auto samples = mg1_response_samples(d, 0.05, 10000, 3);
    auto rep = early_cancel_general_k(d, 10, 3, 0.1, samples);
    CHECK(*rep.cost.exact == Approx(15.0).epsilon(1e-12));
    auto rep2 = early_cancel_general_k(d, 10, 3, 0.15, samples);
    CHECK(*rep2.cost.exact == *rep.cost.exact);
}

TEST_CASE("early cancellation latency bound for k=1 is the sample mean") {
    auto d = exponential(1.0);
    auto samples = mg1_response_samples(d, 0.2, 20000, 11);
    double m = 0;
    for (double v : samples) m += v;
    m /= static_cast<double>(samples.size());
    auto rep = early_cancel_general_k(d, 10, 1, 2.0, samples);
    CHECK(rep.latency.upper == Approx(m).epsilon(1e-12));
    CHECK(rep.latency.std_error.value() > 0);
}

TEST_CASE("early cancellation rejects bad inputs") {
    auto d = exponential(1.0);
    std::vector<double> few(100, 1.0);
    CHECK_THROWS_AS(early_cancel_general_k(d, 10, 4, 0.5, few), InsufficientSamples);
    std::vector<double> enough(10000, 1.0);
    CHECK_THROWS_AS(early_cancel_general_k(d, 10, 4, 2.6, enough), Unstable);
}

TEST_CASE("max of empirical response draws via the plug-in estimator") {
    // two equally likely values a < b: E[max of k] = b - (b-a)/2^k
    std::vector<double> samples;
    for (int i = 0; i < 5000; ++i) {
        samples.push_back(1.0);
        samples.push_back(3.0);
    }
    CHECK(empirical_max_order_mean(samples, 1) == Approx(2.0));
    CHECK(empirical_max_order_mean(samples, 2) == Approx(3.0 - 2.0 / 4));
    CHECK(empirical_max_order_mean(samples, 3) == Approx(3.0 - 2.0 / 8));
}

TEST_CASE("diversity-parallelism limit evaluates the harmonic formula") {
    CHECK(diversity_parallelism_limit(0.0, 1.0, 10, 1) == Approx(0.1).epsilon(1e-12));
    CHECK(diversity_parallelism_limit(3.0, 2.0, 6, 6) ==
          Approx(0.5 + harmonic(6) / 2.0).epsilon(1e-12));
    // interior optimum at delta = 4, n = 10
    int best = 1;
    double best_v = kInf;
    for (int k = 1; k <= 10; ++k) {
        double v = diversity_parallelism_limit(4.0, 1.0, 10, k);
        if (v < best_v) {
            best_v = v;
            best = k;
        }
    }
    CHECK(best > 1);
    CHECK(best < 10);
}

TEST_CASE("capacity is cluster size over per-job cost") {
    CHECK(stability_capacity(2.0, 4) == Approx(2.0));
    // exponential service keeps capacity at n mu regardless of group width
    auto d = exponential(0.5);
    for (int r : {1, 2, 3, 6}) {
        auto rep = group_based_partial_fork(d, 6, r, 0.1);
        CHECK(*rep.capacity == Approx(6 * 0.5).epsilon(1e-6));
    }
}

TEST_CASE("replication cost direction follows the tail class") {
    // log-concave: cost grows with n; log-convex: cost shrinks
    double prev = 0;
    for (int n = 1; n <= 10; ++n) {
        double c = *fork_join_k1(shifted_exponential(1.0, 0.5), n, 0.0).cost.exact;
        CHECK(c >= prev - 1e-7);
        prev = c;
    }
    prev = kInf;
    for (int n = 1; n <= 10; ++n) {
        double c = *fork_join_k1(hyper_exponential(0.1, 1.5, 0.5), n, 0.0).cost.exact;
        CHECK(c <= prev + 1e-7);
        prev = c;
    }
}

TEST_CASE("with arrivals scaling in n, latency direction follows the tail class") {
    // log-convex: E[T] decreases with n when lambda = lambda0 * n
    auto convex = hyper_exponential(0.1, 1.5, 0.5);
    double lambda0 = 0.25 / mean(convex);
    double prev = kInf;
    for (int n = 1; n <= 8; ++n) {
        double t = *fork_join_k1(convex, n, lambda0 * n).latency.exact;
        CHECK(t <= prev + 1e-9);
        prev = t;
    }
    // log-concave in heavy traffic: E[T] increases with n once the queueing
    // term dominates
    auto concave = shifted_exponential(1.0, 0.5);
    double lambda0c = 0.08;
    prev = 0;
    for (int n = 6; n <= 10; ++n) {
        double t = *fork_join_k1(concave, n, lambda0c * n).latency.exact;
        CHECK(t >= prev - 1e-9);
        prev = t;
    }
}

TEST_CASE("moment divergence propagates as NonFiniteMoment") {
    CHECK_THROWS_AS(fork_join_k1(pareto(1.0, 0.9), 2, 0.1), NonFiniteMoment);
    CHECK_THROWS_AS(fork_early_cancel_k1(pareto(1.0, 1.5), 2, 0.1), NonFiniteMoment);
    CHECK_THROWS_AS(general_k_cost_bounds(pareto(1.0, 0.9), 4, 2), NonFiniteMoment);
}
