#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dml/featurize.hpp"
#include "dml/forest.hpp"
#include "dml/mathutil.hpp"
#include "dml/matrix.hpp"
#include "dml/rng.hpp"

namespace dml {

// ---- degenerate-feature removal ----

enum class ColumnFate { Keep, DropHasMissing, DropZeroVariance };

struct DegeneracyMask {
    std::vector<ColumnFate> fates;

    std::vector<std::size_t> kept_indices() const {
        std::vector<std::size_t> idx;
        for (std::size_t c = 0; c < fates.size(); ++c)
            if (fates[c] == ColumnFate::Keep) idx.push_back(c);
        return idx;
    }
};

// Fitted on training rows only; the mask is reusable on test rows.
inline DegeneracyMask fit_degeneracy_mask(const Mat& X) {
    if (X.n_rows == 0) throw std::invalid_argument("need at least 1 row");
    DegeneracyMask mask;
    mask.fates.resize(X.n_cols, ColumnFate::Keep);
    for (std::size_t c = 0; c < X.n_cols; ++c) {
        bool missing = false;
        bool constant = true;
        double first = X.at(0, c);
        for (std::size_t r = 0; r < X.n_rows; ++r) {
            double v = X.at(r, c);
            if (is_missing(v)) {
                missing = true;
                break;
            }
            if (v != first) constant = false;
        }
        if (missing)
            mask.fates[c] = ColumnFate::DropHasMissing;
        else if (constant)
            mask.fates[c] = ColumnFate::DropZeroVariance;
    }
    return mask;
}

inline Mat apply_mask(const DegeneracyMask& mask, const Mat& X) {
    if (X.n_cols != mask.fates.size()) throw std::invalid_argument("mask column count mismatch");
    return X.select_cols(mask.kept_indices());
}

// ---- Boruta ----

struct BorutaConfig {
    int max_iterations = 500;
    double alpha = 0.05;
    bool bonferroni = true;  // corrected over undecided features
    ForestConfig forest;
    std::uint64_t seed = 0;

    void check() const {
        if (alpha <= 0.0 || alpha >= 1.0) throw std::invalid_argument("alpha must be in (0,1)");
        if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
    }
};

enum class FeatureStatus { Confirmed, Rejected, Tentative };

inline const char* status_name(FeatureStatus s) {
    switch (s) {
        case FeatureStatus::Confirmed: return "CONFIRMED";
        case FeatureStatus::Rejected: return "REJECTED";
        case FeatureStatus::Tentative: return "TENTATIVE";
    }
    return "?";
}

struct SelectionReport {
    std::vector<FeatureStatus> status;
    std::vector<int> hits;
    int iterations_completed = 0;

    std::vector<std::size_t> confirmed_indices() const {
        std::vector<std::size_t> idx;
        for (std::size_t c = 0; c < status.size(); ++c)
            if (status[c] == FeatureStatus::Confirmed) idx.push_back(c);
        return idx;
    }
};

// All-relevant selection: per iteration each undecided column is raced against
// independently permuted shadow copies; cumulative hits against the best shadow
// feed a two-sided binomial test at level alpha.
inline SelectionReport boruta_select(const Mat& X, std::span<const int> y,
                                     const BorutaConfig& config) {
    config.check();
    const std::size_t p = X.n_cols;
    SelectionReport report;
    report.status.assign(p, FeatureStatus::Tentative);
    report.hits.assign(p, 0);

    for (int iter = 1; iter <= config.max_iterations; ++iter) {
        std::vector<std::size_t> undecided;
        for (std::size_t c = 0; c < p; ++c)
            if (report.status[c] == FeatureStatus::Tentative) undecided.push_back(c);
        if (undecided.empty()) break;

        // The shadow pool keeps the size of the original feature set: the bar a
        // survivor must clear is the maximum of p noise draws, the same
        // distribution the luckiest original column was drawn from. Shrinking
        // the pool with the undecided set would let a sample-lucky noise
        // column race a handful of its own permutations and win its way to
        // CONFIRMED.
        const std::size_t n_shadows = std::max<std::size_t>(p, 5);
        Rng rng = make_rng(config.seed, iter);
        Mat Xiter(X.n_rows, undecided.size() + n_shadows);
        std::vector<std::size_t> perm(X.n_rows);
        for (std::size_t j = 0; j < undecided.size(); ++j)
            for (std::size_t r = 0; r < X.n_rows; ++r) Xiter.at(r, j) = X.at(r, undecided[j]);
        for (std::size_t j = 0; j < n_shadows; ++j) {
            std::size_t src = undecided[j % undecided.size()];
            std::iota(perm.begin(), perm.end(), 0);
            shuffle(perm, rng);
            for (std::size_t r = 0; r < X.n_rows; ++r)
                Xiter.at(r, undecided.size() + j) = X.at(perm[r], src);
        }

        ForestConfig fc = config.forest;
        fc.seed = seed_combine(config.seed, 0xF0, iter);
        auto importance = forest_importance(Xiter, y, fc);
        double max_shadow = 0.0;
        for (std::size_t j = 0; j < n_shadows; ++j)
            max_shadow = std::max(max_shadow, importance[undecided.size() + j]);
        for (std::size_t j = 0; j < undecided.size(); ++j)
            if (importance[j] > max_shadow) report.hits[undecided[j]]++;

        report.iterations_completed = iter;

        // The correction stays over the original feature count: every column
        // is a member of the test family whether or not it has been decided,
        // and shrinking the divisor with the undecided set loosens the
        // threshold exactly when the sample-lucky stragglers are being tested.
        double threshold = config.alpha / 2.0;
        if (config.bonferroni) threshold /= static_cast<double>(p);
        for (std::size_t c : undecided) {
            int h = report.hits[c];
            if (binom_sf_half(h, iter) < threshold)
                report.status[c] = FeatureStatus::Confirmed;
            else if (binom_cdf_half(h, iter) < threshold)
                report.status[c] = FeatureStatus::Rejected;
        }
    }
    return report;
}

// CSV export: feature name, status, hits, iterations.
inline std::string selection_report_csv(const SelectionReport& report,
                                        std::span<const FeatureName> names) {
    std::ostringstream out;
    out << "feature,status,hits,iterations\n";
    for (std::size_t c = 0; c < report.status.size(); ++c) {
        out << (c < names.size() ? names[c].canonical() : "col_" + std::to_string(c)) << ","
            << status_name(report.status[c]) << "," << report.hits[c] << ","
            << report.iterations_completed << "\n";
    }
    return out.str();
}

}  // namespace dml
