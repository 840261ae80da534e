#pragma once

// Shared by the unit tests and the acceptance suite.

#include <algorithm>
#include <cmath>
#include <vector>

#include "dml/svm.hpp"

namespace svm_oracle {

using dml::Mat;

// Projected-gradient ascent on the dual QP (bias handled via the augmented
// constant-1 coordinate), run to high precision as an independent oracle.
double oracle_dual_optimum(const Mat& X, const std::vector<int>& y, double C,
                           const std::vector<double>& weights) {
    const std::size_t n = X.n_rows, p = X.n_cols;
    std::vector<double> alpha(n, 0.0);
    std::vector<double> upper(n);
    for (std::size_t i = 0; i < n; ++i) upper[i] = C * (weights.empty() ? 1.0 : weights[i]);

    // Gram matrix of the augmented vectors
    std::vector<std::vector<double>> Q(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double dot = 1.0;
            for (std::size_t c = 0; c < p; ++c) dot += X.at(i, c) * X.at(j, c);
            Q[i][j] = y[i] * y[j] * dot;
        }
    double lip = 0.0;
    for (std::size_t i = 0; i < n; ++i) lip += Q[i][i];
    double eta = 1.0 / lip;
    for (int it = 0; it < 2000000; ++it) {
        double move = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double g = 1.0;
            for (std::size_t j = 0; j < n; ++j) g -= Q[i][j] * alpha[j];
            double a_new = std::clamp(alpha[i] + eta * g, 0.0, upper[i]);
            move = std::max(move, std::fabs(a_new - alpha[i]));
            alpha[i] = a_new;
        }
        if (move < 1e-13) break;
    }
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        obj += alpha[i];
        for (std::size_t j = 0; j < n; ++j) obj -= 0.5 * alpha[i] * Q[i][j] * alpha[j];
    }
    return obj;
}

}  // namespace svm_oracle
