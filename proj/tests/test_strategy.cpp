#include <catch2/catch.hpp>

#include <cmath>

#include "forklat/analytic.hpp"
#include "forklat/strategy.hpp"

using namespace forklat;

namespace {

StrategyQuery make_query(const std::string& dist_spec, int n, int k, double lambda,
                         double gamma, int r_max) {
    StrategyQuery q;
    q.dist = parse_distribution(dist_spec);
    q.dist_spec = dist_spec;
    q.n = n;
    q.k = k;
    q.lambda = lambda;
    q.gamma = gamma;
    q.r_max = r_max;
    return q;
}

}  // namespace

TEST_CASE("estimates coincide with the group-based closed form when r divides n") {
    auto q = make_query("pareto(1,2.2)", 12, 1, 0.8, kInf, 12);
    auto curves = estimate_curves(q);
    for (const CurvePoint& p : curves) {
        if (12 % p.r != 0) continue;
        auto want = group_based_partial_fork(q.dist, 12, p.r, 0.8);
        INFO("r=" << p.r);
        CHECK(p.latency_estimate == Approx(*want.latency.exact).epsilon(1e-9));
        CHECK(p.cost_estimate == Approx(*want.cost.exact).epsilon(1e-9));
    }
}

TEST_CASE("at zero load the latency estimate is the bare order statistic") {
    auto q = make_query("sexp(1,0.5)", 8, 1, 0.0, kInf, 8);
    auto curves = estimate_curves(q);
    double prev = kInf;
    for (const CurvePoint& p : curves) {
        CHECK(p.latency_estimate == Approx(order_stat_mean(q.dist, 1, p.r)).epsilon(1e-9));
        CHECK(p.latency_estimate <= prev + 1e-12);
        prev = p.latency_estimate;
    }
}

TEST_CASE("exponential cost estimate is flat in the retain width") {
    auto q = make_query("exp(0.5)", 8, 1, 0.4, kInf, 8);
    for (const CurvePoint& p : estimate_curves(q))
        CHECK(p.cost_estimate == Approx(2.0).epsilon(1e-6));
}

TEST_CASE("estimates go infinite past the stability edge instead of negative") {
    auto q = make_query("sexp(2,0.5)", 4, 1, 0.38, kInf, 4);
    // r = 4: lambda * r * E[X_{1:4}] = 0.38*4*2.5 = 3.8 < 4 stable;
    // push lambda up so large r saturates
    q.lambda = 1.2;
    auto curves = estimate_curves(q);
    for (const CurvePoint& p : curves) {
        INFO("r=" << p.r);
        if (p.r >= 2) {
            CHECK(std::isinf(p.latency_estimate));
            CHECK_FALSE(p.feasible);
        } else {
            CHECK(p.latency_estimate > 0);
        }
    }
}

TEST_CASE("divergent moments name the offending width") {
    auto q = make_query("pareto(1,1.5)", 6, 2, 0.1, kInf, 6);
    // k=2, r=2: max of 2 needs alpha(r-k+1) = 1.5 > 2 for the second moment
    try {
        estimate_curves(q);
        FAIL("expected NonFiniteMoment");
    } catch (const NonFiniteMoment& e) {
        CHECK(std::string(e.what()).find("r=2") != std::string::npos);
    }
}

TEST_CASE("the budget-limited scenario picks the in-budget argmin") {
    auto q = make_query("pareto(1,2.2)", 10, 1, 0.7, 5.0, 8);
    auto rec = recommend(q);
    CHECK(rec.r_f_star == 8);
    CHECK(rec.r_star == 3);
    CHECK(rec.binding == BindingConstraint::CostBudget);
    // the reported argmin is the feasible minimum of the table
    for (const CurvePoint& p : rec.table)
        if (p.feasible) {
            auto at = [&](int r) {
                for (const CurvePoint& c : rec.table)
                    if (c.r == r) return c;
                FAIL("missing r");
                return rec.table.front();
            };
            CHECK(at(rec.r_star).latency_estimate <= p.latency_estimate + 1e-12);
        }
    CHECK(rec.table.front().r == 1);
    CHECK(rec.table.back().r == 8);
}

TEST_CASE("the cap-limited mixture scenario forks as wide as allowed") {
    auto q = make_query("mix(0.5:exp(2),0.5:sexp(1,1.5))", 10, 1, 0.3, 2.0, 5);
    auto rec = recommend(q);
    CHECK(rec.r_f_star == 5);
    CHECK(rec.r_star == 5);
    CHECK(rec.binding == BindingConstraint::ForkCap);
}

TEST_CASE("unbounded queries on log-convex tails keep every replica") {
    auto q = make_query("hyper(0.1,1.5,0.5)", 6, 1, 0.0, kInf, 6);
    double cap = 6 / (6 * order_stat_mean(q.dist, 1, 6));
    q.lambda = 0.85 * cap;
    auto rec = recommend(q);
    CHECK(rec.r_star == 6);
    CHECK(rec.binding == BindingConstraint::None);
}

TEST_CASE("ties break toward fewer replicas") {
    // a single-atom trace gives identical estimates for every width at zero load
    auto q = make_query("exp(1)", 6, 1, 0.0, kInf, 6);
    q.dist = empirical({2.0});
    auto rec = recommend(q);
    CHECK(rec.r_star == 1);
}

TEST_CASE("an impossible budget reports the smallest achievable cost") {
    auto q = make_query("sexp(1,0.25)", 6, 1, 0.1, 1.0, 6);
    try {
        recommend(q);
        FAIL("expected Infeasible");
    } catch (const Infeasible& e) {
        CHECK(e.min_cost == Approx(mean(q.dist)).epsilon(1e-6));
    }
}

TEST_CASE("recommendation is deterministic and respects the budget") {
    auto q = make_query("pareto(1,2.2)", 10, 1, 0.7, 5.0, 8);
    auto a = recommend(q);
    auto b = recommend(q);
    CHECK(a.r_star == b.r_star);
    auto cost_at = [&](int r) {
        for (const CurvePoint& p : a.table)
            if (p.r == r) return p.cost_estimate;
        return kInf;
    };
    CHECK(cost_at(a.r_star) <= q.gamma);
}

TEST_CASE("relaxing either constraint never worsens the chosen estimate") {
    auto value_at = [](const StrategyResult& rec) {
        for (const CurvePoint& p : rec.table)
            if (p.r == rec.r_star) return p.latency_estimate;
        return kInf;
    };
    double prev = kInf;
    for (double gamma : {2.0, 3.0, 4.0, 6.0, 10.0}) {
        auto rec = recommend(make_query("pareto(1,2.2)", 10, 1, 0.7, gamma, 8));
        double v = value_at(rec);
        CHECK(v <= prev + 1e-12);
        prev = v;
    }
    prev = kInf;
    for (int r_max = 1; r_max <= 10; ++r_max) {
        auto rec = recommend(make_query("pareto(1,2.2)", 10, 1, 0.7, kInf, r_max));
        double v = value_at(rec);
        CHECK(v <= prev + 1e-12);
        prev = v;
    }
}

TEST_CASE("the split-merge style estimate upper-bounds simulated latency for k > 1") {
    auto q = make_query("exp(1)", 6, 2, 0.5, kInf, 5);
    auto curves = estimate_curves(q);
    for (const CurvePoint& p : curves) {
        if (p.r != 3) continue;
        SystemConfig cfg;
        cfg.n = 6;
        cfg.r_f = 5;
        cfg.r = 3;
        cfg.k = 2;
        cfg.lambda = 0.5;
        cfg.dist = q.dist;
        cfg.dist_spec = q.dist_spec;
        cfg.num_jobs = 8000;
        cfg.seed = 5;
        auto sum = simulate(cfg, 10);
        CHECK(sum.mean_latency <= p.latency_estimate + sum.latency_ci);
    }
}

TEST_CASE("validation compares the recommendation against every baseline") {
    auto q = make_query("pareto(1,2.2)", 6, 1, 0.5, kInf, 3);
    auto rec = recommend(q);
    SimBudget budget;
    budget.num_jobs = 3000;
    budget.replications = 5;
    budget.seed = 9;
    auto report = validate_recommendation(q, rec, budget);
    REQUIRE(report.rows.size() == 4);  // recommended + r in {1,2,3}
    CHECK(report.rows[0].label == "recommended");
    CHECK(report.rows[0].r_f == 3);
    for (std::size_t i = 1; i < report.rows.size(); ++i) {
        CHECK(report.rows[i].label == "baseline");
        CHECK(report.rows[i].r_f == report.rows[i].r);
        CHECK(report.rows[i].sim.mean_latency > 0);
    }
}

TEST_CASE("extra canceled probes never hurt the retained-width baseline") {
    // forking wider than the retain width only helps find short queues
    auto q = make_query("pareto(1,2.2)", 10, 1, 0.7, 5.0, 8);
    auto rec = recommend(q);
    REQUIRE(rec.r_f_star > rec.r_star);
    SimBudget budget;
    budget.num_jobs = 6000;
    budget.replications = 10;
    budget.seed = 77;
    auto report = validate_recommendation(q, rec, budget);
    const ValidationRow* recommended = &report.rows[0];
    const ValidationRow* plain = nullptr;
    for (const auto& row : report.rows)
        if (row.label == "baseline" && row.r == rec.r_star) plain = &row;
    REQUIRE(plain != nullptr);
    CHECK(recommended->sim.mean_latency <=
          plain->sim.mean_latency + recommended->sim.latency_ci + plain->sim.latency_ci);
}

TEST_CASE("group-based baselines match the estimates in simulation") {
    auto q = make_query("sexp(1,0.5)", 6, 1, 0.8, kInf, 3);
    auto rec = recommend(q);
    SimBudget budget;
    budget.num_jobs = 8000;
    budget.replications = 10;
    budget.seed = 31;
    budget.policy = DispatchPolicy::GroupRandom;
    auto report = validate_recommendation(q, rec, budget);
    for (const ValidationRow& row : report.rows) {
        if (row.label != "baseline" || 6 % row.r != 0) continue;
        INFO("r=" << row.r);
        CHECK(std::abs(row.sim.mean_latency - row.latency_estimate) <=
              row.sim.latency_ci);
        CHECK(std::abs(row.sim.mean_cost - row.cost_estimate) <= row.sim.cost_ci);
    }
}

TEST_CASE("query invariants are enforced") {
    CHECK_THROWS_AS(estimate_curves(make_query("exp(1)", 4, 2, 0.1, kInf, 1)),
                    ConfigInvalid);
    CHECK_THROWS_AS(estimate_curves(make_query("exp(1)", 4, 1, 0.1, 0.0, 4)),
                    ConfigInvalid);
    CHECK_THROWS_AS(estimate_curves(make_query("exp(1)", 4, 1, -0.5, kInf, 4)),
                    ConfigInvalid);
}
