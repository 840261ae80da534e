#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "dml/mathutil.hpp"

namespace dml {

struct StatResult {
    double statistic = 0.0;
    double degrees_of_freedom = kMissing;  // absent for McNemar's fixed 1-df convention
    double p_value = 1.0;
};

// Two-tail independent-sample Welch's t-test with Welch-Satterthwaite df.
inline StatResult welch_t(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2)
        throw std::invalid_argument("insufficient samples for Welch's test");
    double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    double va = sample_variance(a), vb = sample_variance(b);
    if (va <= 0.0 && vb <= 0.0) {
        if (mean_of(a) == mean_of(b)) return {0.0, na + nb - 2.0, 1.0};
        throw std::invalid_argument("zero-variance samples with unequal means");
    }
    double sa = va / na, sb = vb / nb;
    double t = (mean_of(a) - mean_of(b)) / std::sqrt(sa + sb);
    double df = (sa + sb) * (sa + sb) /
                (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    double p = t == 0.0 ? 1.0 : t_two_tailed_p(t, df);
    return {t, df, p};
}

// McNemar's chi-squared test with continuity correction; b and c are the
// discordant-pair counts. b == c clamps the statistic to 0.
inline StatResult mcnemar_counts(int b, int c) {
    if (b + c == 0) throw std::invalid_argument("no discordant pairs");
    if (b == c) return {0.0, kMissing, 1.0};
    double d = std::fabs(static_cast<double>(b) - c) - 1.0;
    double chi2 = std::max(0.0, d) * std::max(0.0, d) / (b + c);
    return {chi2, kMissing, chi2_sf_1df(chi2)};
}

inline StatResult mcnemar(std::span<const int> preds_a, std::span<const int> preds_b,
                          std::span<const int> truth) {
    if (preds_a.size() != truth.size() || preds_b.size() != truth.size())
        throw std::invalid_argument("length mismatch");
    int b = 0, c = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        bool a_right = preds_a[i] == truth[i];
        bool b_right = preds_b[i] == truth[i];
        if (a_right && !b_right) ++b;
        if (!a_right && b_right) ++c;
    }
    return mcnemar_counts(b, c);
}

// ---- Gaussian kernel density estimation ----

struct KdeEstimate {
    std::vector<double> grid;
    std::vector<double> density;
    double bandwidth = 0.0;
};

// Silverman's rule of thumb: 0.9 * min(s, IQR/1.34) * n^(-1/5).
inline double silverman_bandwidth(std::span<const double> samples) {
    double s = std::sqrt(sample_variance(samples));
    double iqr = quantile_of(samples, 0.75) - quantile_of(samples, 0.25);
    double spread = iqr > 0.0 ? std::min(s, iqr / 1.34) : s;
    return 0.9 * spread * std::pow(static_cast<double>(samples.size()), -0.2);
}

inline KdeEstimate gaussian_kde(std::span<const double> samples, double bandwidth = 0.0,
                                int grid_points = 512) {
    if (samples.size() < 2) throw std::invalid_argument("need at least 2 samples");
    double h = bandwidth > 0.0 ? bandwidth : silverman_bandwidth(samples);
    if (h <= 0.0) throw std::invalid_argument("zero-spread sample (bandwidth 0)");
    if (grid_points < 2) throw std::invalid_argument("need at least 2 grid points");
    double lo = *std::min_element(samples.begin(), samples.end()) - 4.0 * h;
    double hi = *std::max_element(samples.begin(), samples.end()) + 4.0 * h;
    KdeEstimate kde;
    kde.bandwidth = h;
    kde.grid.resize(grid_points);
    kde.density.resize(grid_points);
    const double norm = 1.0 / (static_cast<double>(samples.size()) * h * std::sqrt(2.0 * M_PI));
    for (int g = 0; g < grid_points; ++g) {
        double x = lo + (hi - lo) * g / (grid_points - 1);
        kde.grid[g] = x;
        double d = 0.0;
        for (double s : samples) {
            double z = (x - s) / h;
            d += std::exp(-0.5 * z * z);
        }
        kde.density[g] = norm * d;
    }
    return kde;
}

inline double trapezoid_integral(std::span<const double> x, std::span<const double> y) {
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
        area += (x[i + 1] - x[i]) * (y[i + 1] + y[i]) / 2.0;
    return area;
}

}  // namespace dml
