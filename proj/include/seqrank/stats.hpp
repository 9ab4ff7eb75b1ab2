#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "seqrank/error.hpp"
#include "seqrank/metrics.hpp"

namespace seqrank {

/// Regularized incomplete beta I_x(a, b), by the modified Lentz continued fraction.
inline double incomplete_beta(double a, double b, double x)
{
    if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0 && x <= 1.0)) {
        throw Error("incomplete_beta: domain error");
    }
    if (x == 0.0) {
        return 0.0;
    }
    if (x == 1.0) {
        return 1.0;
    }
    if (x > (a + 1.0) / (a + b + 2.0)) {
        return 1.0 - incomplete_beta(b, a, 1.0 - x);
    }
    const double front =
        std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x)) / a;

    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    double f = 1.0;
    double c = 1.0;
    double d = 0.0;
    for (int i = 0; i <= 1000; ++i) {
        const int m = i / 2;
        double num;
        if (i == 0) {
            num = 1.0;
        } else if (i % 2 == 0) {
            num = (m * (b - m) * x) / ((a + 2.0 * m - 1.0) * (a + 2.0 * m));
        } else {
            num = -((a + m) * (a + b + m) * x) / ((a + 2.0 * m) * (a + 2.0 * m + 1.0));
        }
        d = 1.0 + num * d;
        if (std::abs(d) < tiny) {
            d = tiny;
        }
        d = 1.0 / d;
        c = 1.0 + num / c;
        if (std::abs(c) < tiny) {
            c = tiny;
        }
        const double cd = c * d;
        f *= cd;
        if (std::abs(1.0 - cd) < eps) {
            return front * (f - 1.0);
        }
    }
    throw Error("incomplete_beta: continued fraction did not converge");
}

/// Student t cumulative distribution with `df` degrees of freedom.
inline double student_t_cdf(double x, double df)
{
    if (!(df > 0.0)) {
        throw Error("student_t_cdf: df must be > 0");
    }
    if (std::isinf(x)) {
        return x > 0 ? 1.0 : 0.0;
    }
    const double tail = 0.5 * incomplete_beta(df / 2.0, 0.5, df / (df + x * x));
    return x >= 0.0 ? 1.0 - tail : tail;
}

/// Inverse of student_t_cdf by bisection on a bracket grown geometrically.
inline double student_t_quantile(double p, double df)
{
    if (!(p > 0.0 && p < 1.0)) {
        throw Error("student_t_quantile: p must lie in (0, 1)");
    }
    if (p == 0.5) {
        return 0.0;
    }
    if (p < 0.5) {
        return -student_t_quantile(1.0 - p, df);
    }
    double lo = 0.0;
    double hi = 1.0;
    while (student_t_cdf(hi, df) < p) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) {
            throw Error("student_t_quantile: bracket overflow");
        }
    }
    for (int i = 0; i < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++i) {
        const double mid = 0.5 * (lo + hi);
        (student_t_cdf(mid, df) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct TTestResult {
    double t = 0.0;
    std::size_t df = 0;
    double p = 1.0; // two-sided
    std::size_t n = 0;
    double mean_difference = 0.0;
};

/// Paired two-sided t-test on d_i = a_i - b_i, topics taken in id order.
/// Zero variance: mean 0 gives (t = 0, p = 1); otherwise t = +-inf and p = 0.
inline TTestResult paired_t_test(const std::map<std::string, double>& a, const std::map<std::string, double>& b)
{
    if (a.size() != b.size() || !std::equal(a.begin(), a.end(), b.begin(),
                                            [](const auto& x, const auto& y) { return x.first == y.first; })) {
        throw Error("paired t-test requires identical topic sets");
    }
    const std::size_t n = a.size();
    if (n < 2) {
        throw Error("paired t-test requires at least 2 topics");
    }
    std::vector<double> d;
    d.reserve(n);
    for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib) {
        d.push_back(ia->second - ib->second);
    }
    const double mean = compensated_sum(d) / static_cast<double>(n);
    std::vector<double> sq;
    sq.reserve(n);
    for (double v : d) {
        sq.push_back((v - mean) * (v - mean));
    }
    const double sd = std::sqrt(compensated_sum(sq) / static_cast<double>(n - 1));

    TTestResult r;
    r.n = n;
    r.df = n - 1;
    r.mean_difference = mean;
    const bool constant = std::all_of(d.begin(), d.end(), [&](double v) { return v == d.front(); });
    if (constant || sd == 0.0) {
        if (mean == 0.0) {
            r.t = 0.0;
            r.p = 1.0;
        } else {
            r.t = std::copysign(std::numeric_limits<double>::infinity(), mean);
            r.p = 0.0;
        }
        return r;
    }
    r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
    const double df = static_cast<double>(r.df);
    r.p = std::clamp(incomplete_beta(df / 2.0, 0.5, df / (df + r.t * r.t)), 0.0, 1.0);
    return r;
}

/// Per-topic values restricted to topics evaluated in both reports.
inline TTestResult paired_t_test(const MetricReport& a, const MetricReport& b)
{
    std::map<std::string, double> x;
    std::map<std::string, double> y;
    for (const auto& [topic, v] : a.per_topic) {
        if (auto it = b.per_topic.find(topic); it != b.per_topic.end()) {
            x.emplace(topic, v);
            y.emplace(topic, it->second);
        }
    }
    return paired_t_test(x, y);
}

inline double bonferroni_adjust(double p, std::size_t comparisons)
{
    if (comparisons < 1) {
        throw Error("bonferroni: need at least one comparison");
    }
    if (!(p >= 0.0 && p <= 1.0)) {
        throw Error("bonferroni: p must lie in [0, 1]");
    }
    return std::min(1.0, p * static_cast<double>(comparisons));
}

struct ConfidenceInterval {
    double mean = 0.0;
    double half_width = 0.0;
};

/// Mean and two-sided 95% half-width t_{0.975, n-1} * s / sqrt(n).
inline ConfidenceInterval mean_ci95(const std::vector<double>& samples)
{
    const std::size_t n = samples.size();
    if (n < 2) {
        throw Error("confidence interval requires at least 2 samples");
    }
    if (std::all_of(samples.begin(), samples.end(), [&](double v) { return v == samples.front(); })) {
        return {samples.front(), 0.0};
    }
    const double mean = compensated_sum(samples) / static_cast<double>(n);
    std::vector<double> sq;
    sq.reserve(n);
    for (double v : samples) {
        sq.push_back((v - mean) * (v - mean));
    }
    const double sd = std::sqrt(compensated_sum(sq) / static_cast<double>(n - 1));
    return {mean, student_t_quantile(0.975, static_cast<double>(n - 1)) * sd / std::sqrt(static_cast<double>(n))};
}

} // namespace seqrank
