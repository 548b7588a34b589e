#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "forklat/distribution.hpp"

namespace forklat {

// Shape of log Pr(X > x): concave tails reward spreading replicas out and
// canceling early, convex tails reward maximum replication.
enum class TailLabel { LogConcave, LogConvex, Exponential, Neither };

struct TailClass {
    TailLabel label;
    std::string evidence;
};

inline const char* to_string(TailLabel l) {
    switch (l) {
        case TailLabel::LogConcave: return "log-concave";
        case TailLabel::LogConvex: return "log-convex";
        case TailLabel::Exponential: return "exponential";
        case TailLabel::Neither: return "neither";
    }
    return "?";
}

namespace detail {

// Second-difference test of log Fbar on an even grid over [0, q_0.999].
// Points with Fbar < 1e-9 are excluded (log is numerically meaningless
// there); since the tail is nonincreasing the kept points are a prefix.
inline TailClass classify_numeric(const ServiceDistribution& d) {
    constexpr int grid_points = 512;
    constexpr double eps = 1e-6;
    double hi = quantile_tail(d, 1e-3);
    std::vector<double> logs;
    logs.reserve(grid_points);
    bool flat = false;
    double prev_tail = 2.0;
    for (int i = 0; i < grid_points; ++i) {
        double x = hi * static_cast<double>(i) / (grid_points - 1);
        double t = tail(d, x);
        if (t < 1e-9) break;
        if (t >= prev_tail && i > 0) flat = true;
        prev_tail = t;
        logs.push_back(std::log(t));
    }
    if (flat)
        return {TailLabel::Neither,
                "numeric test: tail is not strictly decreasing on the grid "
                "(atoms or flat segments), classification undefined"};
    bool all_le = true, all_ge = true, any_neg = false, any_pos = false;
    for (std::size_t i = 1; i + 1 < logs.size(); ++i) {
        double d2 = logs[i + 1] - 2 * logs[i] + logs[i - 1];
        if (d2 > eps) {
            all_le = false;
            any_pos = true;
        }
        if (d2 < -eps) {
            all_ge = false;
            any_neg = true;
        }
    }
    if (all_le && all_ge)
        return {TailLabel::Exponential,
                "numeric test: second differences of log tail within tolerance of zero"};
    if (all_le && any_neg)
        return {TailLabel::LogConcave, "numeric test: second differences of log tail <= 0"};
    if (all_ge && any_pos)
        return {TailLabel::LogConvex, "numeric test: second differences of log tail >= 0"};
    return {TailLabel::Neither, "numeric test: second differences change sign"};
}

}  // namespace detail

inline TailClass classify_tail(const ServiceDistribution& d) {
    struct V {
        const ServiceDistribution& self;
        TailClass operator()(const Exponential&) const {
            return {TailLabel::Exponential,
                    "known family: exponential tail is both log-concave and log-convex"};
        }
        TailClass operator()(const ShiftedExponential& e) const {
            if (e.shift == 0)
                return {TailLabel::Exponential,
                        "known family: zero shift degenerates to exponential"};
            return {TailLabel::LogConcave,
                    "known family: shifted exponential tail is log-concave"};
        }
        TailClass operator()(const HyperExponential& h) const {
            if (h.p == 0 || h.p == 1 || h.rate1 == h.rate2)
                return {TailLabel::Exponential,
                        "known family: degenerate mixture is a single exponential"};
            return {TailLabel::LogConvex,
                    "known family: mixture of exponentials has a log-convex tail"};
        }
        TailClass operator()(const Pareto&) const {
            return {TailLabel::Neither,
                    "known family: power-law tail is log-convex beyond the scale "
                    "but not below it"};
        }
        TailClass operator()(const UniformDist&) const {
            return {TailLabel::LogConcave,
                    "known family: uniform over an interval is log-concave"};
        }
        TailClass operator()(const WeibullDist& w) const {
            if (w.shape >= 1)
                return {TailLabel::LogConcave,
                        "known family: weibull with shape >= 1 is log-concave"};
            return {TailLabel::LogConvex,
                    "known family: weibull with shape < 1 is log-convex"};
        }
        TailClass operator()(const Mixture&) const {
            // Mixtures of log-concave parts need not be log-concave.
            return detail::classify_numeric(self);
        }
        TailClass operator()(const Empirical&) const { return detail::classify_numeric(self); }
    };
    return std::visit(V{d}, d.v);
}

}  // namespace forklat
