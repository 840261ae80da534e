#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dml/mathutil.hpp"
#include "dml/matrix.hpp"
#include "dml/rng.hpp"

namespace dml {

// ---- standardization ----

struct Standardizer {
    std::vector<double> means;
    std::vector<double> stds;  // population std; zero-std columns use divisor 1
};

inline Standardizer fit_standardizer(const Mat& X) {
    if (X.n_rows == 0) throw std::invalid_argument("cannot standardize empty matrix");
    Standardizer s;
    s.means.resize(X.n_cols);
    s.stds.resize(X.n_cols);
    for (std::size_t c = 0; c < X.n_cols; ++c) {
        double m = 0.0;
        for (std::size_t r = 0; r < X.n_rows; ++r) m += X.at(r, c);
        m /= static_cast<double>(X.n_rows);
        double v = 0.0;
        for (std::size_t r = 0; r < X.n_rows; ++r) {
            double d = X.at(r, c) - m;
            v += d * d;
        }
        v /= static_cast<double>(X.n_rows);
        s.means[c] = m;
        s.stds[c] = v > 0.0 ? std::sqrt(v) : 1.0;
    }
    return s;
}

inline Mat apply_standardizer(const Standardizer& s, const Mat& X) {
    if (X.n_cols != s.means.size())
        throw std::invalid_argument("standardizer column count mismatch");
    Mat out = X;
    for (std::size_t r = 0; r < X.n_rows; ++r)
        for (std::size_t c = 0; c < X.n_cols; ++c)
            out.at(r, c) = (X.at(r, c) - s.means[c]) / s.stds[c];
    return out;
}

// ---- linear SVM ----

struct SvmConfig {
    double C = 1.0;
    double tolerance = 1e-4;
    int max_iterations = 10000;  // outer passes
    std::vector<double> sample_weights;  // empty = all ones
    std::uint64_t seed = 0;
};

struct LinearModel {
    std::vector<double> weights;
    double bias = 0.0;
};

inline double decision_value(const LinearModel& m, std::span<const double> x) {
    if (x.size() != m.weights.size()) throw std::invalid_argument("dimension mismatch");
    return std::inner_product(x.begin(), x.end(), m.weights.begin(), m.bias);
}

// Predicted label in {-1,+1}; exact zero predicts +1 (DECEPTIVE).
inline int predict_sign(double f) { return f >= 0.0 ? 1 : -1; }

struct SvmFit {
    LinearModel model;
    std::vector<double> alpha;
    int passes = 0;
    bool converged = false;
};

// L2-regularized L1-hinge SVM by dual coordinate descent; the bias is realized
// by augmenting a constant-1 column, so the box constraint is 0 <= a_i <= C*s_i.
inline SvmFit train_svm_full(const Mat& X, std::span<const int> y, const SvmConfig& config) {
    const std::size_t n = X.n_rows, p = X.n_cols;
    if (config.C <= 0.0) throw std::invalid_argument("C must be positive");
    if (!config.sample_weights.empty() && config.sample_weights.size() != n)
        throw std::invalid_argument("sample_weights size mismatch");
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < n; ++i) {
        double s = config.sample_weights.empty() ? 1.0 : config.sample_weights[i];
        if (s < 0.0) throw std::invalid_argument("negative sample weight");
        if (s == 0.0) continue;
        (y[i] > 0 ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg) throw std::invalid_argument("both classes must be present");
    for (double v : X.data)
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite feature value");

    std::vector<double> upper(n), qii(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = config.sample_weights.empty() ? 1.0 : config.sample_weights[i];
        upper[i] = config.C * s;
        auto xi = X.row(i);
        qii[i] = std::inner_product(xi.begin(), xi.end(), xi.begin(), 1.0);  // +1 for bias col
    }

    std::vector<double> alpha(n, 0.0);
    std::vector<double> w(p, 0.0);
    double b = 0.0;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = make_rng(config.seed);

    SvmFit fit;
    for (int pass = 0; pass < config.max_iterations; ++pass) {
        shuffle(order, rng);
        double max_violation = 0.0;
        for (std::size_t i : order) {
            if (upper[i] == 0.0) continue;
            auto xi = X.row(i);
            double f = std::inner_product(xi.begin(), xi.end(), w.begin(), b);
            double g = y[i] * f - 1.0;
            double pg = g;
            if (alpha[i] <= 0.0) pg = std::min(g, 0.0);
            else if (alpha[i] >= upper[i]) pg = std::max(g, 0.0);
            max_violation = std::max(max_violation, std::fabs(pg));
            if (pg == 0.0) continue;
            double a_new = std::clamp(alpha[i] - g / qii[i], 0.0, upper[i]);
            double delta = (a_new - alpha[i]) * y[i];
            if (delta == 0.0) continue;
            alpha[i] = a_new;
            for (std::size_t c = 0; c < p; ++c) w[c] += delta * xi[c];
            b += delta;
        }
        fit.passes = pass + 1;
        if (max_violation <= config.tolerance) {
            fit.converged = true;
            break;
        }
    }
    fit.model.weights = std::move(w);
    fit.model.bias = b;
    fit.alpha = std::move(alpha);
    return fit;
}

inline LinearModel train_svm(const Mat& X, std::span<const int> y, const SvmConfig& config) {
    return train_svm_full(X, y, config).model;
}

inline double dual_objective(const Mat& X, std::span<const int> y,
                             std::span<const double> alpha, const LinearModel& m) {
    double norm2 = std::inner_product(m.weights.begin(), m.weights.end(), m.weights.begin(),
                                      m.bias * m.bias);
    double asum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
    (void)X;
    (void)y;
    return asum - 0.5 * norm2;
}

inline double primal_objective(const Mat& X, std::span<const int> y, const SvmConfig& config,
                               const LinearModel& m) {
    double norm2 = std::inner_product(m.weights.begin(), m.weights.end(), m.weights.begin(),
                                      m.bias * m.bias);
    double loss = 0.0;
    for (std::size_t i = 0; i < X.n_rows; ++i) {
        double s = config.sample_weights.empty() ? 1.0 : config.sample_weights[i];
        loss += s * std::max(0.0, 1.0 - y[i] * decision_value(m, X.row(i)));
    }
    return 0.5 * norm2 + config.C * loss;
}

// ---- Platt scaling ----

struct PlattParams {
    double A = 0.0;
    double B = 0.0;

    double probability(double f) const { return 1.0 / (1.0 + std::exp(A * f + B)); }
};

// Newton's method with backtracking on the sigmoid NLL with smoothed targets
// (Platt 1999, in the numerically stable form of Lin, Weng & Keerthi 2007).
inline PlattParams fit_platt(std::span<const double> decision_values, std::span<const int> labels) {
    const std::size_t n = decision_values.size();
    if (n != labels.size()) throw std::invalid_argument("length mismatch");
    double n_pos = 0, n_neg = 0;
    for (int y : labels) (y > 0 ? n_pos : n_neg) += 1.0;
    if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("both classes must be present");
    for (double f : decision_values)
        if (!std::isfinite(f)) throw std::invalid_argument("non-finite decision value");

    const double hi = (n_pos + 1.0) / (n_pos + 2.0);
    const double lo = 1.0 / (n_neg + 2.0);
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = labels[i] > 0 ? hi : lo;

    double a = 0.0, b = std::log((n_neg + 1.0) / (n_pos + 1.0));
    auto nll = [&](double A, double B) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double z = A * decision_values[i] + B;
            // t*z + log(1 + exp(-z)), stable in both tails
            if (z >= 0)
                s += t[i] * z + std::log1p(std::exp(-z));
            else
                s += (t[i] - 1.0) * z + std::log1p(std::exp(z));
        }
        return s;
    };

    double fval = nll(a, b);
    constexpr int kMaxIter = 100;
    constexpr double kMinStep = 1e-10, kSigma = 1e-12, kEps = 1e-7;
    for (int it = 0; it < kMaxIter; ++it) {
        double h11 = kSigma, h22 = kSigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double z = a * decision_values[i] + b;
            double p = z >= 0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
            double q = 1.0 - p;  // q = sigmoid(z)
            double d1 = t[i] - p;
            double d2 = p * q;
            g1 += decision_values[i] * d1;
            g2 += d1;
            h11 += decision_values[i] * decision_values[i] * d2;
            h22 += d2;
            h21 += decision_values[i] * d2;
        }
        if (std::fabs(g1) < kEps && std::fabs(g2) < kEps) break;
        double det = h11 * h22 - h21 * h21;
        double da = -(h22 * g1 - h21 * g2) / det;
        double db = -(-h21 * g1 + h11 * g2) / det;
        double gd = g1 * da + g2 * db;
        double step = 1.0;
        while (step >= kMinStep) {
            double f_new = nll(a + step * da, b + step * db);
            if (f_new < fval + 1e-4 * step * gd) {
                a += step * da;
                b += step * db;
                fval = f_new;
                break;
            }
            step /= 2.0;
        }
        if (step < kMinStep) break;
    }
    return {a, b};
}

inline double platt_nll(const PlattParams& p, std::span<const double> decision_values,
                        std::span<const int> labels) {
    double n_pos = 0, n_neg = 0;
    for (int y : labels) (y > 0 ? n_pos : n_neg) += 1.0;
    double hi = (n_pos + 1.0) / (n_pos + 2.0), lo = 1.0 / (n_neg + 2.0);
    double s = 0.0;
    for (std::size_t i = 0; i < decision_values.size(); ++i) {
        double t = labels[i] > 0 ? hi : lo;
        double z = p.A * decision_values[i] + p.B;
        if (z >= 0)
            s += t * z + std::log1p(std::exp(-z));
        else
            s += (t - 1.0) * z + std::log1p(std::exp(z));
    }
    return s;
}

// ---- C grid search ----

inline const std::vector<double>& default_c_grid() {
    static const std::vector<double> grid = {0.001, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0};
    return grid;
}

// Stratified fold assignment on labels only (no speaker grouping).
inline std::vector<int> stratified_fold_assignment(std::span<const int> y, int k, Rng& rng) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < y.size(); ++i) (y[i] > 0 ? pos : neg).push_back(i);
    shuffle(pos, rng);
    shuffle(neg, rng);
    std::vector<int> fold(y.size(), 0);
    int f = 0;
    for (std::size_t i : pos) fold[i] = f++ % k;
    for (std::size_t i : neg) fold[i] = f++ % k;
    return fold;
}

// Grid value maximizing mean inner-CV accuracy; ties break to the smallest C.
inline double tune_c(const Mat& X, std::span<const int> y, std::span<const double> grid,
                     int inner_folds, std::uint64_t seed) {
    if (grid.empty()) throw std::invalid_argument("empty C grid");
    if (X.n_rows < static_cast<std::size_t>(inner_folds))
        throw std::invalid_argument("fewer rows than inner folds");
    Rng rng = make_rng(seed, 0xC);
    auto fold = stratified_fold_assignment(y, inner_folds, rng);

    std::vector<double> sorted_grid(grid.begin(), grid.end());
    std::sort(sorted_grid.begin(), sorted_grid.end());
    double best_c = sorted_grid[0];
    double best_acc = -1.0;
    for (double c : sorted_grid) {
        double correct = 0.0, total = 0.0;
        for (int f = 0; f < inner_folds; ++f) {
            std::vector<std::size_t> tr, te;
            for (std::size_t i = 0; i < X.n_rows; ++i) (fold[i] == f ? te : tr).push_back(i);
            if (te.empty() || tr.empty()) continue;
            std::vector<int> ytr, yte;
            for (auto i : tr) ytr.push_back(y[i]);
            for (auto i : te) yte.push_back(y[i]);
            bool pos = false, neg = false;
            for (int v : ytr) (v > 0 ? pos : neg) = true;
            if (!pos || !neg) continue;
            Mat Xtr = X.select_rows(tr), Xte = X.select_rows(te);
            SvmConfig fold_cfg;
            fold_cfg.C = c;
            fold_cfg.seed = seed_combine(seed, f);
            auto model = train_svm(Xtr, ytr, fold_cfg);
            for (std::size_t i = 0; i < te.size(); ++i) {
                if (predict_sign(decision_value(model, Xte.row(i))) == yte[i]) correct += 1.0;
                total += 1.0;
            }
        }
        double acc = total > 0 ? correct / total : 0.0;
        if (acc > best_acc + 1e-12) {
            best_acc = acc;
            best_c = c;
        }
    }
    return best_c;
}

// ---- model serialization ----

inline nlohmann::json linear_model_to_json(const LinearModel& m) {
    return {{"weights", m.weights}, {"bias", m.bias}};
}

inline LinearModel linear_model_from_json(const nlohmann::json& j) {
    return {j.at("weights").get<std::vector<double>>(), j.at("bias").get<double>()};
}

}  // namespace dml
