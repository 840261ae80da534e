#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "dml/matrix.hpp"
#include "dml/parallel.hpp"
#include "dml/rng.hpp"

namespace dml {

struct ForestConfig {
    int n_trees = 256;
    int min_samples_leaf = 1;
    int max_depth = 0;  // 0 = unlimited
    bool bootstrap = true;
    std::uint64_t seed = 0;
    int workers = 0;
};

namespace detail {

inline double gini(double n_pos, double n_total) {
    if (n_total == 0.0) return 0.0;
    double p = n_pos / n_total;
    return 2.0 * p * (1.0 - p);
}

struct TreeGrower {
    const Mat& X;
    std::span<const int> y;  // +1 / -1
    const ForestConfig& cfg;
    Rng rng;
    std::size_t mtry;
    double n_total;
    std::vector<double>& importance;  // mean decrease in Gini impurity, this tree
    std::vector<std::size_t> feature_pool;

    TreeGrower(const Mat& X_, std::span<const int> y_, const ForestConfig& cfg_, Rng rng_,
               std::vector<double>& imp)
        : X(X_), y(y_), cfg(cfg_), rng(rng_), importance(imp) {
        mtry = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::sqrt(static_cast<double>(X.n_cols))));
        feature_pool.resize(X.n_cols);
        std::iota(feature_pool.begin(), feature_pool.end(), 0);
    }

    void grow(std::vector<std::size_t>& samples, int depth) {
        double n = static_cast<double>(samples.size());
        double n_pos = 0.0;
        for (auto i : samples)
            if (y[i] > 0) n_pos += 1.0;
        double node_gini = gini(n_pos, n);
        if (node_gini == 0.0 || samples.size() < 2 * static_cast<std::size_t>(cfg.min_samples_leaf) ||
            samples.size() < 2 || (cfg.max_depth > 0 && depth >= cfg.max_depth))
            return;

        // sample mtry candidate features without replacement
        for (std::size_t i = 0; i < mtry; ++i) {
            std::size_t j = i + uniform_index(rng, feature_pool.size() - i);
            std::swap(feature_pool[i], feature_pool[j]);
        }

        double best_gain = 0.0;
        std::size_t best_feat = 0;
        double best_thresh = 0.0;
        std::vector<std::pair<double, int>> vals(samples.size());
        for (std::size_t fi = 0; fi < mtry; ++fi) {
            std::size_t f = feature_pool[fi];
            for (std::size_t i = 0; i < samples.size(); ++i)
                vals[i] = {X.at(samples[i], f), y[samples[i]]};
            std::sort(vals.begin(), vals.end());
            double left_pos = 0.0, left_n = 0.0;
            for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
                left_n += 1.0;
                if (vals[i].second > 0) left_pos += 1.0;
                if (vals[i].first == vals[i + 1].first) continue;
                if (left_n < cfg.min_samples_leaf || n - left_n < cfg.min_samples_leaf) continue;
                double right_n = n - left_n;
                double right_pos = n_pos - left_pos;
                double gain = node_gini - (left_n / n) * gini(left_pos, left_n) -
                              (right_n / n) * gini(right_pos, right_n);
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feat = f;
                    best_thresh = (vals[i].first + vals[i + 1].first) / 2.0;
                }
            }
        }
        if (best_gain <= 0.0) return;

        importance[best_feat] += (n / n_total) * best_gain;
        std::vector<std::size_t> left, right;
        for (auto i : samples) (X.at(i, best_feat) <= best_thresh ? left : right).push_back(i);
        if (left.empty() || right.empty()) return;
        grow(left, depth + 1);
        grow(right, depth + 1);
    }
};

}  // namespace detail

// Mean decrease in Gini impurity per feature, averaged over trees. Each tree is
// grown on a bootstrap sample with sqrt(p) feature subsampling at every split.
inline std::vector<double> forest_importance(const Mat& X, std::span<const int> y,
                                             const ForestConfig& cfg) {
    if (X.n_rows < 2) throw std::invalid_argument("need at least 2 rows");
    if (X.n_rows != y.size()) throw std::invalid_argument("label count mismatch");
    if (cfg.n_trees < 1) throw std::invalid_argument("n_trees must be >= 1");
    bool pos = false, neg = false;
    for (int v : y) (v > 0 ? pos : neg) = true;
    if (!pos || !neg) throw std::invalid_argument("both classes must be present");

    std::vector<std::vector<double>> per_tree(cfg.n_trees);
    parallel_for(
        cfg.n_trees,
        [&](std::size_t t) {
            Rng rng = make_rng(cfg.seed, t);
            std::vector<std::size_t> samples(X.n_rows);
            if (cfg.bootstrap) {
                for (auto& s : samples) s = uniform_index(rng, X.n_rows);
            } else {
                std::iota(samples.begin(), samples.end(), 0);
            }
            per_tree[t].assign(X.n_cols, 0.0);
            detail::TreeGrower grower(X, y, cfg, std::move(rng), per_tree[t]);
            grower.n_total = static_cast<double>(samples.size());
            grower.grow(samples, 0);
        },
        cfg.workers);

    std::vector<double> importance(X.n_cols, 0.0);
    for (const auto& imp : per_tree)
        for (std::size_t c = 0; c < X.n_cols; ++c) importance[c] += imp[c];
    for (double& v : importance) v /= static_cast<double>(cfg.n_trees);
    return importance;
}

}  // namespace dml
