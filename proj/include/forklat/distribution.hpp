#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "forklat/errors.hpp"
#include "forklat/rng.hpp"

namespace forklat {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct ServiceDistribution;

struct Exponential {
    double rate;  // E[X] = 1/rate
};

struct ShiftedExponential {
    double shift;
    double rate;
};

// Two-branch mixture of exponentials; branch 1 (rate1) occurs with
// probability p.
struct HyperExponential {
    double p;
    double rate1;
    double rate2;
};

struct Pareto {
    double scale;  // x_m, left edge of the support
    double shape;  // alpha
};

struct UniformDist {
    double lo;
    double hi;
};

struct WeibullDist {
    double shape;  // c
    double scale;  // s
};

struct Mixture {
    std::vector<double> weights;  // positive, sum to 1
    std::vector<ServiceDistribution> components;
};

// Step-function law over a fixed set of observed service times.
struct Empirical {
    std::shared_ptr<const std::vector<double>> samples;  // sorted ascending
    std::string source_path;                             // "" if built in memory
};

struct ServiceDistribution {
    std::variant<Exponential, ShiftedExponential, HyperExponential, Pareto,
                 UniformDist, WeibullDist, Mixture, Empirical>
        v;
};

// ---------------------------------------------------------------------------
// Constructors (validate parameter ranges once, at the boundary)

inline ServiceDistribution exponential(double rate) {
    if (!(rate > 0)) throw std::invalid_argument("exponential: rate must be > 0");
    return {Exponential{rate}};
}

inline ServiceDistribution shifted_exponential(double shift, double rate) {
    if (!(shift >= 0)) throw std::invalid_argument("shifted exponential: shift must be >= 0");
    if (!(rate > 0)) throw std::invalid_argument("shifted exponential: rate must be > 0");
    return {ShiftedExponential{shift, rate}};
}

inline ServiceDistribution hyper_exponential(double p, double rate1, double rate2) {
    if (!(p >= 0 && p <= 1)) throw std::invalid_argument("hyperexponential: p must be in [0,1]");
    if (!(rate1 > 0) || !(rate2 > 0))
        throw std::invalid_argument("hyperexponential: rates must be > 0");
    return {HyperExponential{p, rate1, rate2}};
}

inline ServiceDistribution pareto(double scale, double shape) {
    if (!(scale > 0)) throw std::invalid_argument("pareto: scale must be > 0");
    if (!(shape > 0)) throw std::invalid_argument("pareto: shape must be > 0");
    return {Pareto{scale, shape}};
}

inline ServiceDistribution uniform(double lo, double hi) {
    if (!(lo >= 0)) throw std::invalid_argument("uniform: lo must be >= 0");
    if (!(hi > lo)) throw std::invalid_argument("uniform: hi must be > lo");
    return {UniformDist{lo, hi}};
}

inline ServiceDistribution weibull(double shape, double scale) {
    if (!(shape > 0)) throw std::invalid_argument("weibull: shape must be > 0");
    if (!(scale > 0)) throw std::invalid_argument("weibull: scale must be > 0");
    return {WeibullDist{shape, scale}};
}

inline ServiceDistribution mixture(std::vector<double> weights,
                                   std::vector<ServiceDistribution> components) {
    if (weights.empty() || weights.size() != components.size())
        throw std::invalid_argument("mixture: need one weight per component");
    double sum = 0;
    for (double w : weights) {
        if (!(w > 0)) throw std::invalid_argument("mixture: weights must be > 0");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("mixture: weights must sum to 1");
    for (double& w : weights) w /= sum;
    Mixture m{std::move(weights), std::move(components)};
    return {std::move(m)};
}

inline ServiceDistribution empirical(std::vector<double> samples,
                                     std::string source_path = "") {
    if (samples.empty()) throw std::invalid_argument("empirical: need at least one sample");
    for (double s : samples)
        if (!(s >= 0) || !std::isfinite(s))
            throw std::invalid_argument("empirical: samples must be finite and >= 0");
    std::sort(samples.begin(), samples.end());
    Empirical e{std::make_shared<const std::vector<double>>(std::move(samples)),
                std::move(source_path)};
    return {std::move(e)};
}

// ---------------------------------------------------------------------------
// Tail Pr(X > x)

inline double tail(const ServiceDistribution& d, double x);

namespace detail {

struct TailVisitor {
    double x;
    double operator()(const Exponential& e) const {
        return x <= 0 ? 1.0 : std::exp(-e.rate * x);
    }
    double operator()(const ShiftedExponential& e) const {
        return x <= e.shift ? 1.0 : std::exp(-e.rate * (x - e.shift));
    }
    double operator()(const HyperExponential& h) const {
        if (x <= 0) return 1.0;
        return h.p * std::exp(-h.rate1 * x) + (1 - h.p) * std::exp(-h.rate2 * x);
    }
    double operator()(const Pareto& p) const {
        return x < p.scale ? 1.0 : std::pow(p.scale / x, p.shape);
    }
    double operator()(const UniformDist& u) const {
        if (x <= u.lo) return 1.0;
        if (x >= u.hi) return 0.0;
        return (u.hi - x) / (u.hi - u.lo);
    }
    double operator()(const WeibullDist& w) const {
        return x <= 0 ? 1.0 : std::exp(-std::pow(x / w.scale, w.shape));
    }
    double operator()(const Mixture& m) const {
        double t = 0;
        for (std::size_t i = 0; i < m.weights.size(); ++i)
            t += m.weights[i] * tail(m.components[i], x);
        return t;
    }
    double operator()(const Empirical& e) const {
        const auto& s = *e.samples;
        auto it = std::upper_bound(s.begin(), s.end(), x);
        return static_cast<double>(s.end() - it) / static_cast<double>(s.size());
    }
};

}  // namespace detail

inline double tail(const ServiceDistribution& d, double x) {
    return std::visit(detail::TailVisitor{x}, d.v);
}

inline double cdf(const ServiceDistribution& d, double x) { return 1.0 - tail(d, x); }

// ---------------------------------------------------------------------------
// Raw moments E[X^m], m in {1,2}; +inf when the moment diverges.

inline double moment(const ServiceDistribution& d, int m);

namespace detail {

struct MomentVisitor {
    int m;
    double operator()(const Exponential& e) const {
        return m == 1 ? 1.0 / e.rate : 2.0 / (e.rate * e.rate);
    }
    double operator()(const ShiftedExponential& e) const {
        double inv = 1.0 / e.rate;
        if (m == 1) return e.shift + inv;
        return e.shift * e.shift + 2 * e.shift * inv + 2 * inv * inv;
    }
    double operator()(const HyperExponential& h) const {
        if (m == 1) return h.p / h.rate1 + (1 - h.p) / h.rate2;
        return 2 * h.p / (h.rate1 * h.rate1) + 2 * (1 - h.p) / (h.rate2 * h.rate2);
    }
    double operator()(const Pareto& p) const {
        if (p.shape <= m) return kInf;
        return p.shape * std::pow(p.scale, m) / (p.shape - m);
    }
    double operator()(const UniformDist& u) const {
        if (m == 1) return 0.5 * (u.lo + u.hi);
        return (u.hi * u.hi + u.hi * u.lo + u.lo * u.lo) / 3.0;
    }
    double operator()(const WeibullDist& w) const {
        return std::pow(w.scale, m) * std::tgamma(1.0 + m / w.shape);
    }
    double operator()(const Mixture& mx) const {
        double v = 0;
        for (std::size_t i = 0; i < mx.weights.size(); ++i)
            v += mx.weights[i] * moment(mx.components[i], m);
        return v;
    }
    double operator()(const Empirical& e) const {
        double v = 0;
        for (double s : *e.samples) v += m == 1 ? s : s * s;
        return v / static_cast<double>(e.samples->size());
    }
};

}  // namespace detail

inline double moment(const ServiceDistribution& d, int m) {
    return std::visit(detail::MomentVisitor{m}, d.v);
}

inline double mean(const ServiceDistribution& d) { return moment(d, 1); }
inline double second_moment(const ServiceDistribution& d) { return moment(d, 2); }

// ---------------------------------------------------------------------------
// Tail quantile: smallest x with Pr(X > x) <= t.

inline double quantile_tail(const ServiceDistribution& d, double t);

namespace detail {

inline double bisect_tail(const ServiceDistribution& d, double t, double hi) {
    double lo = 0.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (tail(d, mid) <= t)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

struct QuantileVisitor {
    const ServiceDistribution& self;
    double t;
    double operator()(const Exponential& e) const { return std::log(1.0 / t) / e.rate; }
    double operator()(const ShiftedExponential& e) const {
        return e.shift + std::log(1.0 / t) / e.rate;
    }
    double operator()(const HyperExponential& h) const {
        double hi = std::log(1.0 / t) / std::min(h.rate1, h.rate2) + 1.0;
        return bisect_tail(self, t, hi);
    }
    double operator()(const Pareto& p) const { return p.scale * std::pow(t, -1.0 / p.shape); }
    double operator()(const UniformDist& u) const { return u.hi - t * (u.hi - u.lo); }
    double operator()(const WeibullDist& w) const {
        return w.scale * std::pow(std::log(1.0 / t), 1.0 / w.shape);
    }
    double operator()(const Mixture& m) const {
        // If every component tail is <= t, the mixture tail is too.
        double hi = 0;
        for (const auto& c : m.components) hi = std::max(hi, quantile_tail(c, t));
        return bisect_tail(self, t, hi + 1.0);
    }
    double operator()(const Empirical& e) const {
        // tail(s[j]) is nonincreasing in j; find the first sample where it
        // drops to <= t (the last sample always qualifies, tail = 0).
        const auto& s = *e.samples;
        std::size_t lo = 0, hi = s.size() - 1;
        while (lo < hi) {
            std::size_t mid = lo + (hi - lo) / 2;
            if (tail(self, s[mid]) <= t)
                hi = mid;
            else
                lo = mid + 1;
        }
        return s[lo];
    }
};

}  // namespace detail

inline double quantile_tail(const ServiceDistribution& d, double t) {
    if (!(t > 0 && t < 1)) throw std::invalid_argument("quantile_tail: t must be in (0,1)");
    return std::visit(detail::QuantileVisitor{d, t}, d.v);
}

// ---------------------------------------------------------------------------
// Sampling. One value per call; the caller owns the stream, so identical
// seeds give identical draw sequences.

inline double sample(const ServiceDistribution& d, std::mt19937_64& rng);

namespace detail {

struct SampleVisitor {
    std::mt19937_64& rng;
    double operator()(const Exponential& e) const { return exp_draw(rng, e.rate); }
    double operator()(const ShiftedExponential& e) const {
        return e.shift + exp_draw(rng, e.rate);
    }
    double operator()(const HyperExponential& h) const {
        double branch = uniform01(rng);
        return exp_draw(rng, branch < h.p ? h.rate1 : h.rate2);
    }
    double operator()(const Pareto& p) const {
        return p.scale * std::pow(1.0 - uniform01(rng), -1.0 / p.shape);
    }
    double operator()(const UniformDist& u) const {
        return u.lo + (u.hi - u.lo) * uniform01(rng);
    }
    double operator()(const WeibullDist& w) const {
        return w.scale * std::pow(-std::log1p(-uniform01(rng)), 1.0 / w.shape);
    }
    double operator()(const Mixture& m) const {
        double u = uniform01(rng);
        double acc = 0;
        for (std::size_t i = 0; i < m.weights.size(); ++i) {
            acc += m.weights[i];
            if (u < acc || i + 1 == m.weights.size()) return sample(m.components[i], rng);
        }
        return sample(m.components.back(), rng);
    }
    double operator()(const Empirical& e) const {
        const auto& s = *e.samples;
        std::uniform_int_distribution<std::size_t> pick(0, s.size() - 1);
        return s[pick(rng)];
    }
};

}  // namespace detail

inline double sample(const ServiceDistribution& d, std::mt19937_64& rng) {
    return std::visit(detail::SampleVisitor{rng}, d.v);
}

// ---------------------------------------------------------------------------
// Structural helpers used by the order-statistic quadrature.

// Points where the tail has a kink or a support edge.
inline void collect_breakpoints(const ServiceDistribution& d, std::vector<double>& out) {
    struct V {
        std::vector<double>& out;
        void operator()(const Exponential&) const {}
        void operator()(const ShiftedExponential& e) const {
            if (e.shift > 0) out.push_back(e.shift);
        }
        void operator()(const HyperExponential&) const {}
        void operator()(const Pareto& p) const { out.push_back(p.scale); }
        void operator()(const UniformDist& u) const {
            out.push_back(u.lo);
            out.push_back(u.hi);
        }
        void operator()(const WeibullDist&) const {}
        void operator()(const Mixture& m) const {
            for (const auto& c : m.components) collect_breakpoints(c, out);
        }
        void operator()(const Empirical& e) const {
            // Keep at most a handful; the adaptive integrator handles the rest.
            const auto& s = *e.samples;
            out.push_back(s.front());
            out.push_back(s.back());
        }
    };
    std::visit(V{out}, d.v);
}

// Dominant power-law behaviour of the tail, if any: tail(x) ~ coeff * x^-alpha
// as x -> inf. Used for moment-finiteness checks and truncation remainders.
struct HeavyTail {
    double alpha;
    double coeff;
};

inline std::optional<HeavyTail> heavy_tail_coeff(const ServiceDistribution& d) {
    struct V {
        std::optional<HeavyTail> operator()(const Exponential&) const { return std::nullopt; }
        std::optional<HeavyTail> operator()(const ShiftedExponential&) const {
            return std::nullopt;
        }
        std::optional<HeavyTail> operator()(const HyperExponential&) const {
            return std::nullopt;
        }
        std::optional<HeavyTail> operator()(const Pareto& p) const {
            return HeavyTail{p.shape, std::pow(p.scale, p.shape)};
        }
        std::optional<HeavyTail> operator()(const UniformDist&) const { return std::nullopt; }
        std::optional<HeavyTail> operator()(const WeibullDist&) const { return std::nullopt; }
        std::optional<HeavyTail> operator()(const Mixture& m) const {
            std::optional<HeavyTail> acc;
            for (std::size_t i = 0; i < m.components.size(); ++i) {
                auto h = heavy_tail_coeff(m.components[i]);
                if (!h) continue;
                h->coeff *= m.weights[i];
                if (!acc || h->alpha < acc->alpha)
                    acc = h;
                else if (h->alpha == acc->alpha)
                    acc->coeff += h->coeff;
            }
            return acc;
        }
        std::optional<HeavyTail> operator()(const Empirical&) const { return std::nullopt; }
    };
    return std::visit(V{}, d.v);
}

inline bool is_empirical(const ServiceDistribution& d) {
    return std::holds_alternative<Empirical>(d.v);
}

inline bool contains_empirical(const ServiceDistribution& d) {
    if (is_empirical(d)) return true;
    if (const auto* m = std::get_if<Mixture>(&d.v)) {
        for (const auto& c : m->components)
            if (contains_empirical(c)) return true;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Spec grammar:
//   exp(mu) | sexp(delta,mu) | hyper(p,mu1,mu2) | pareto(xm,alpha) |
//   uniform(lo,hi) | weibull(c,s) | mix(w1:spec1, w2:spec2, ...) | trace(path)

inline ServiceDistribution load_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("trace: cannot open file: " + path);
    std::vector<double> samples;
    std::string line;
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::size_t pos = 0;
        while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
        if (pos == line.size()) continue;
        try {
            std::size_t used = 0;
            double v = std::stod(line.substr(pos), &used);
            for (std::size_t i = pos + used; i < line.size(); ++i)
                if (!std::isspace(static_cast<unsigned char>(line[i])))
                    throw ParseError("trace: trailing junk in line: " + line);
            if (!(v >= 0) || !std::isfinite(v))
                throw ParseError("trace: service times must be finite and >= 0");
            samples.push_back(v);
        } catch (const std::invalid_argument&) {
            throw ParseError("trace: malformed number in line: " + line);
        }
    }
    if (samples.empty()) throw ParseError("trace: no samples in file: " + path);
    return empirical(std::move(samples), path);
}

namespace detail {

class SpecParser {
  public:
    explicit SpecParser(const std::string& text) : s_(text) {}

    ServiceDistribution parse() {
        ServiceDistribution d = parse_spec();
        skip_ws();
        if (pos_ != s_.size()) fail("trailing characters after distribution spec");
        return d;
    }

  private:
    const std::string& s_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError("distribution spec: " + msg + " in '" + s_ + "'");
    }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    void expect(char c) {
        skip_ws();
        if (pos_ >= s_.size() || s_[pos_] != c)
            fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    bool peek(char c) {
        skip_ws();
        return pos_ < s_.size() && s_[pos_] == c;
    }

    std::string ident() {
        skip_ws();
        std::size_t start = pos_;
        while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (pos_ == start) fail("expected distribution name");
        return s_.substr(start, pos_ - start);
    }

    double number() {
        skip_ws();
        std::size_t used = 0;
        double v;
        try {
            v = std::stod(s_.substr(pos_), &used);
        } catch (const std::exception&) {
            fail("expected a number");
        }
        pos_ += used;
        return v;
    }

    std::string path_until_close() {
        skip_ws();
        std::size_t close = s_.find(')', pos_);
        if (close == std::string::npos) fail("unterminated trace(path)");
        std::string p = s_.substr(pos_, close - pos_);
        while (!p.empty() && std::isspace(static_cast<unsigned char>(p.back()))) p.pop_back();
        if (p.empty()) fail("trace: empty path");
        pos_ = close;
        return p;
    }

    ServiceDistribution parse_spec() {
        std::string name = ident();
        expect('(');
        ServiceDistribution d = parse_body(name);
        expect(')');
        return d;
    }

    ServiceDistribution parse_body(const std::string& name) {
        try {
            if (name == "exp") return exponential(number());
            if (name == "sexp") {
                double delta = number();
                expect(',');
                return shifted_exponential(delta, number());
            }
            if (name == "hyper") {
                double p = number();
                expect(',');
                double m1 = number();
                expect(',');
                return hyper_exponential(p, m1, number());
            }
            if (name == "pareto") {
                double xm = number();
                expect(',');
                return pareto(xm, number());
            }
            if (name == "uniform") {
                double lo = number();
                expect(',');
                return uniform(lo, number());
            }
            if (name == "weibull") {
                double c = number();
                expect(',');
                return weibull(c, number());
            }
            if (name == "mix") {
                std::vector<double> ws;
                std::vector<ServiceDistribution> cs;
                for (;;) {
                    ws.push_back(number());
                    expect(':');
                    cs.push_back(parse_spec());
                    if (!peek(',')) break;
                    expect(',');
                }
                return mixture(std::move(ws), std::move(cs));
            }
            if (name == "trace") return load_trace(path_until_close());
        } catch (const std::invalid_argument& e) {
            fail(e.what());
        }
        fail("unknown distribution '" + name + "'");
    }
};

inline std::string fmt_param(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

inline ServiceDistribution parse_distribution(const std::string& spec) {
    return detail::SpecParser(spec).parse();
}

// Regenerates a spec string that parses back to the same distribution.
inline std::string to_spec_string(const ServiceDistribution& d) {
    using detail::fmt_param;
    struct V {
        std::string operator()(const Exponential& e) const {
            return "exp(" + fmt_param(e.rate) + ")";
        }
        std::string operator()(const ShiftedExponential& e) const {
            return "sexp(" + fmt_param(e.shift) + "," + fmt_param(e.rate) + ")";
        }
        std::string operator()(const HyperExponential& h) const {
            return "hyper(" + fmt_param(h.p) + "," + fmt_param(h.rate1) + "," +
                   fmt_param(h.rate2) + ")";
        }
        std::string operator()(const Pareto& p) const {
            return "pareto(" + fmt_param(p.scale) + "," + fmt_param(p.shape) + ")";
        }
        std::string operator()(const UniformDist& u) const {
            return "uniform(" + fmt_param(u.lo) + "," + fmt_param(u.hi) + ")";
        }
        std::string operator()(const WeibullDist& w) const {
            return "weibull(" + fmt_param(w.shape) + "," + fmt_param(w.scale) + ")";
        }
        std::string operator()(const Mixture& m) const {
            std::string s = "mix(";
            for (std::size_t i = 0; i < m.weights.size(); ++i) {
                if (i) s += ",";
                s += fmt_param(m.weights[i]) + ":" + to_spec_string(m.components[i]);
            }
            return s + ")";
        }
        std::string operator()(const Empirical& e) const {
            if (!e.source_path.empty()) return "trace(" + e.source_path + ")";
            return "trace(<memory:" + std::to_string(e.samples->size()) + ">)";
        }
    };
    return std::visit(V{}, d.v);
}

}  // namespace forklat
