#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace dml {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

inline double mean_of(std::span<const double> x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

// Population (biased) variance.
inline double pop_variance(std::span<const double> x) {
    double m = mean_of(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size());
}

inline double pop_std(std::span<const double> x) { return std::sqrt(pop_variance(x)); }

// Unbiased (n-1) variance; requires n >= 2.
inline double sample_variance(std::span<const double> x) {
    double m = mean_of(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

// Quantile with linear interpolation between order statistics (numpy convention).
inline double quantile_sorted(std::span<const double> sorted, double q) {
    std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    double h = q * static_cast<double>(n - 1);
    std::size_t lo = static_cast<std::size_t>(std::floor(h));
    if (lo >= n - 1) return sorted[n - 1];
    double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline double quantile_of(std::span<const double> x, double q) {
    std::vector<double> s(x.begin(), x.end());
    std::sort(s.begin(), s.end());
    return quantile_sorted(s, q);
}

inline double median_of(std::span<const double> x) { return quantile_of(x, 0.5); }

// ---- distribution functions ----

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Survival function of chi-squared with 1 degree of freedom.
inline double chi2_sf_1df(double x) {
    if (x <= 0.0) return 1.0;
    return std::erfc(std::sqrt(x / 2.0));
}

namespace detail {

// Continued-fraction evaluation for the regularized incomplete beta function
// (modified Lentz method).
inline double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-15;
    constexpr double kFpMin = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace detail

// Regularized incomplete beta I_x(a, b).
inline double betainc(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                   a * std::log(x) + b * std::log(1.0 - x);
    double bt = std::exp(ln_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return bt * detail::betacf(a, b, x) / a;
    }
    return 1.0 - bt * detail::betacf(b, a, 1.0 - x) / b;
}

// Two-tailed p-value for Student's t with df degrees of freedom.
inline double t_two_tailed_p(double t, double df) {
    if (df <= 0.0) return kMissing;
    return betainc(df / 2.0, 0.5, df / (df + t * t));
}

// Exact binomial tail probabilities for Binomial(n, 1/2).
inline double binom_pmf_half(int k, int n) {
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                    std::lgamma(n - k + 1.0) - n * std::log(2.0));
}

// P(X >= k) under Binomial(n, 1/2).
inline double binom_sf_half(int k, int n) {
    if (k <= 0) return 1.0;
    if (k > n) return 0.0;
    double p = 0.0;
    for (int i = k; i <= n; ++i) p += binom_pmf_half(i, n);
    return std::min(1.0, p);
}

// P(X <= k) under Binomial(n, 1/2).
inline double binom_cdf_half(int k, int n) {
    if (k < 0) return 0.0;
    if (k >= n) return 1.0;
    double p = 0.0;
    for (int i = 0; i <= k; ++i) p += binom_pmf_half(i, n);
    return std::min(1.0, p);
}

}  // namespace dml
