#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dml/corpus.hpp"
#include "dml/mathutil.hpp"

namespace dml {

struct RocPoint {
    double fpr;
    double tpr;
};

struct MetricSet {
    double roc_auc = kMissing;  // MISSING when only one class is present
    double pr_auc = kMissing;
    double accuracy = 0.0;
    double weighted_f1 = 0.0;
    std::vector<RocPoint> roc;
};

// ROC-AUC as the rank statistic: probability that a random positive outranks a
// random negative, with half credit for score ties.
inline double roc_auc_rank(std::span<const double> scores, std::span<const int> truth) {
    std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double n_pos = 0, n_neg = 0;
    for (int t : truth) (t > 0 ? n_pos : n_neg) += 1.0;
    if (n_pos == 0 || n_neg == 0) return kMissing;
    // midranks over tie groups
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            if (truth[order[k]] > 0) rank_sum_pos += midrank;
        i = j;
    }
    return (rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

inline std::vector<RocPoint> roc_points(std::span<const double> scores,
                                        std::span<const int> truth) {
    std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    double n_pos = 0, n_neg = 0;
    for (int t : truth) (t > 0 ? n_pos : n_neg) += 1.0;
    std::vector<RocPoint> pts{{0.0, 0.0}};
    double tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            if (truth[order[j]] > 0) tp += 1.0; else fp += 1.0;
            ++j;
        }
        pts.push_back({n_neg > 0 ? fp / n_neg : 0.0, n_pos > 0 ? tp / n_pos : 0.0});
        i = j;
    }
    return pts;
}

// Trapezoid area under precision-recall points swept over distinct thresholds.
inline double pr_auc_trapezoid(std::span<const double> scores, std::span<const int> truth) {
    std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    double n_pos = 0;
    for (int t : truth)
        if (t > 0) n_pos += 1.0;
    if (n_pos == 0 || n_pos == static_cast<double>(n)) return kMissing;
    std::vector<std::pair<double, double>> pts;  // (recall, precision)
    double tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            if (truth[order[j]] > 0) tp += 1.0; else fp += 1.0;
            ++j;
        }
        pts.emplace_back(tp / n_pos, tp / (tp + fp));
        i = j;
    }
    double area = 0.0;
    double prev_r = 0.0, prev_p = pts.front().second;
    for (const auto& [r, p] : pts) {
        area += (r - prev_r) * (p + prev_p) / 2.0;
        prev_r = r;
        prev_p = p;
    }
    return area;
}

// scores rank toward DECEPTIVE (+1); predicted/true labels are +1/-1.
inline MetricSet compute_metrics(std::span<const double> scores, std::span<const int> predicted,
                                 std::span<const int> truth) {
    if (scores.size() != predicted.size() || scores.size() != truth.size())
        throw std::invalid_argument("length mismatch");
    if (scores.empty()) throw std::invalid_argument("empty prediction set");
    MetricSet m;
    m.roc_auc = roc_auc_rank(scores, truth);
    m.pr_auc = pr_auc_trapezoid(scores, truth);
    if (!is_missing(m.roc_auc)) m.roc = roc_points(scores, truth);

    double correct = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i)
        if (predicted[i] == truth[i]) correct += 1.0;
    m.accuracy = correct / static_cast<double>(truth.size());

    // support-weighted mean of per-class F1
    double f1_sum = 0.0;
    for (int cls : {+1, -1}) {
        double tp = 0, fp = 0, fn = 0, support = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            if (truth[i] == cls) support += 1.0;
            if (predicted[i] == cls && truth[i] == cls) tp += 1.0;
            if (predicted[i] == cls && truth[i] != cls) fp += 1.0;
            if (predicted[i] != cls && truth[i] == cls) fn += 1.0;
        }
        double f1 = (2.0 * tp + fp + fn) > 0.0 ? 2.0 * tp / (2.0 * tp + fp + fn) : 0.0;
        f1_sum += f1 * support / static_cast<double>(truth.size());
    }
    m.weighted_f1 = f1_sum;
    return m;
}

}  // namespace dml
