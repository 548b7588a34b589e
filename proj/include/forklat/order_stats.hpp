#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <string>
#include <vector>

#include "forklat/distribution.hpp"
#include "forklat/errors.hpp"

namespace forklat {

enum class MomentKind { first, second };

struct OrderStatMoment {
    int k;
    int n;
    MomentKind moment;
    double value;
};

namespace detail {

// 7-point Gauss / 15-point Kronrod pair (QUADPACK dqk15 nodes and weights).
inline constexpr double kKronrodX[8] = {
    0.991455371120812639207, 0.949107912342758524526, 0.864864423359769072790,
    0.741531185599394439864, 0.586087235467691130295, 0.405845151377397166907,
    0.207784955007898467601, 0.0};
inline constexpr double kKronrodW[8] = {
    0.022935322010529224964, 0.063092092629978553291, 0.104790010322250183840,
    0.140653259715525918745, 0.169004726639267902827, 0.190350578064785409913,
    0.204432940075298892414, 0.209482141084727828013};
inline constexpr double kGaussW[4] = {
    0.129484966168869693271, 0.279705391489276667901, 0.381830050505118944950,
    0.417959183673469387755};

struct GK15Result {
    double integral;
    double error;
};

template <typename F>
GK15Result gk15(const F& f, double a, double b) {
    double c = 0.5 * (a + b);
    double h = 0.5 * (b - a);
    double fc = f(c);
    double resk = kKronrodW[7] * fc;
    double resg = kGaussW[3] * fc;
    for (int j = 0; j < 7; ++j) {
        double x = h * kKronrodX[j];
        double f1 = f(c - x);
        double f2 = f(c + x);
        resk += kKronrodW[j] * (f1 + f2);
        if (j % 2 == 1) resg += kGaussW[j / 2] * (f1 + f2);
    }
    return {resk * h, std::abs((resk - resg) * h)};
}

// Worst-segment-first adaptive integration.
template <typename F>
double integrate(const F& f, std::vector<double> knots, double rel_tol) {
    struct Seg {
        double a, b, integral, error;
        bool operator<(const Seg& o) const { return error < o.error; }
    };
    std::priority_queue<Seg> segs;
    double total = 0, err = 0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        if (!(knots[i + 1] > knots[i])) continue;
        auto r = gk15(f, knots[i], knots[i + 1]);
        segs.push({knots[i], knots[i + 1], r.integral, r.error});
        total += r.integral;
        err += r.error;
    }
    const int max_splits = 4000;
    for (int i = 0; i < max_splits && err > rel_tol * std::max(std::abs(total), 1e-300);
         ++i) {
        Seg worst = segs.top();
        segs.pop();
        double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            // Interval at floating-point resolution; accept its estimate.
            err -= worst.error;
            continue;
        }
        auto left = gk15(f, worst.a, mid);
        auto right = gk15(f, mid, worst.b);
        total += left.integral + right.integral - worst.integral;
        err += left.error + right.error - worst.error;
        segs.push({worst.a, mid, left.integral, left.error});
        segs.push({mid, worst.b, right.integral, right.error});
    }
    return total;
}

inline double log_binomial(int n, int j) {
    return std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0);
}

}  // namespace detail

// Pr(X_{k:n} > x) given F(x) and Fbar(x) of the parent: the binomial sum over
// fewer than k successes, with log-domain coefficients so large n is safe.
inline double order_stat_tail(double cdf_x, double tail_x, int k, int n) {
    if (tail_x >= 1.0) return 1.0;
    if (tail_x <= 0.0) return 0.0;
    double log_f = std::log(cdf_x);
    double log_fb = std::log(tail_x);
    double sum = 0;
    for (int j = 0; j < k; ++j) {
        double term = (j == 0 ? 0.0 : detail::log_binomial(n, j) + j * log_f) +
                      (n - j) * log_fb;
        sum += std::exp(term);
    }
    return std::min(sum, 1.0);
}

// True when E[X_{k:n}^m] is finite: the order-statistic tail decays like the
// (n-k+1)-th power of the parent tail, so only a power-law parent can diverge.
inline bool order_stat_moment_finite(const ServiceDistribution& d, int k, int n, int m) {
    auto heavy = heavy_tail_coeff(d);
    if (!heavy) return true;
    return heavy->alpha * (n - k + 1) > m;
}

namespace detail {

// Exact step sum for an empirical parent: the order-statistic tail is
// constant between consecutive distinct sample values.
inline double empirical_order_stat_moment(const Empirical& e, int k, int n, int m) {
    const auto& s = *e.samples;
    auto total = static_cast<double>(s.size());
    double value = 0;
    double prev = 0;
    std::size_t leq = 0;  // samples <= prev
    std::size_t i = 0;
    while (i < s.size()) {
        double x = s[i];
        std::size_t j = i;
        while (j < s.size() && s[j] == x) ++j;
        if (x > prev) {
            double f = static_cast<double>(leq) / total;  // CDF on [prev, x)
            double t = order_stat_tail(f, 1.0 - f, k, n);
            value += t * (std::pow(x, m) - std::pow(prev, m));
            prev = x;
        }
        leq = j;
        i = j;
    }
    return value;
}

// Truncation remainder for power-law tails: beyond x_hi the parent CDF is
// 1 - O(1e-10), so the j-th binomial term integrates in closed form.
inline double power_tail_remainder(const HeavyTail& heavy, double x_hi, int k, int n,
                                   int m) {
    double rem = 0;
    for (int j = 0; j < k; ++j) {
        double power = heavy.alpha * (n - j);
        double log_term = log_binomial(n, j) + (n - j) * std::log(heavy.coeff) +
                          std::log(static_cast<double>(m)) +
                          (m - power) * std::log(x_hi) - std::log(power - m);
        rem += std::exp(log_term);
    }
    return rem;
}

}  // namespace detail

// E[X_{k:n}^m] by quadrature of the tail identity
//   E[Y^m] = int_0^inf m x^(m-1) Pr(Y > x) dx.
// Relative error target 1e-6 for parametric families; empirical parents are
// summed exactly over their steps.
inline OrderStatMoment order_stat_moment(const ServiceDistribution& d, int k, int n,
                                         MomentKind moment) {
    if (k < 1 || n < 1 || k > n)
        throw std::invalid_argument("order_stat_moment: need 1 <= k <= n");
    int m = moment == MomentKind::first ? 1 : 2;
    if (!order_stat_moment_finite(d, k, n, m))
        throw NonFiniteMoment("order statistic moment diverges for " + to_spec_string(d) +
                              " with k=" + std::to_string(k) + " n=" + std::to_string(n) +
                              " m=" + std::to_string(m));

    if (const auto* e = std::get_if<Empirical>(&d.v))
        return {k, n, moment, detail::empirical_order_stat_moment(*e, k, n, m)};

    double x_hi = quantile_tail(d, 1e-10);
    std::vector<double> knots{0.0, x_hi};
    collect_breakpoints(d, knots);
    knots.erase(std::remove_if(knots.begin(), knots.end(),
                               [&](double x) { return x < 0 || x > x_hi; }),
                knots.end());
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    // Seed a geometric ladder across wide intervals so sharply concentrated
    // integrands (power-law tails span many decades) are sampled at every
    // scale; otherwise the first quadrature pass can see only zeros and
    // report false convergence.
    {
        std::vector<double> ladder;
        for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
            double a = knots[i], b = knots[i + 1];
            double lo = a > 0 ? a : b * std::pow(4.0, -10);
            if (b / lo > 8.0)
                for (double x = lo * 4; x < b; x *= 4) ladder.push_back(x);
        }
        knots.insert(knots.end(), ladder.begin(), ladder.end());
        std::sort(knots.begin(), knots.end());
        knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    }

    auto integrand = [&](double x) {
        double fb = tail(d, x);
        double t = order_stat_tail(1.0 - fb, fb, k, n);
        return m == 1 ? t : 2.0 * x * t;
    };
    double value = detail::integrate(integrand, std::move(knots), 1e-9);
    if (auto heavy = heavy_tail_coeff(d))
        value += detail::power_tail_remainder(*heavy, x_hi, k, n, m);
    return {k, n, moment, value};
}

inline double order_stat_mean(const ServiceDistribution& d, int k, int n) {
    return order_stat_moment(d, k, n, MomentKind::first).value;
}

inline double order_stat_second_moment(const ServiceDistribution& d, int k, int n) {
    return order_stat_moment(d, k, n, MomentKind::second).value;
}

}  // namespace forklat
