#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dml/corpus.hpp"
#include "dml/io.hpp"
#include "dml/matrix.hpp"
#include "dml/rng.hpp"
#include "dml/svm.hpp"

namespace dml {

enum class Strategy {
    Unimodal,
    Early,
    VoteHard,
    VoteSoft,
    StackHard,
    StackSoft,
    HybridHard,
    HybridSoft,
    Bagging,
    AdaBoost,
};

inline const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::Unimodal: return "unimodal";
        case Strategy::Early: return "early";
        case Strategy::VoteHard: return "vote_hard";
        case Strategy::VoteSoft: return "vote_soft";
        case Strategy::StackHard: return "stack_hard";
        case Strategy::StackSoft: return "stack_soft";
        case Strategy::HybridHard: return "hybrid_hard";
        case Strategy::HybridSoft: return "hybrid_soft";
        case Strategy::Bagging: return "bagging";
        case Strategy::AdaBoost: return "adaboost";
    }
    return "?";
}

inline Strategy parse_strategy(const std::string& s) {
    for (Strategy st : {Strategy::Unimodal, Strategy::Early, Strategy::VoteHard,
                        Strategy::VoteSoft, Strategy::StackHard, Strategy::StackSoft,
                        Strategy::HybridHard, Strategy::HybridSoft, Strategy::Bagging,
                        Strategy::AdaBoost})
        if (s == strategy_name(st)) return st;
    throw std::invalid_argument("unknown strategy: " + s);
}

// Non-empty modality subset in canonical order affect < visual < vocal < verbal.
struct ModalityCombo {
    std::vector<Modality> modalities;

    std::string name() const {
        std::string s;
        for (auto m : modalities) {
            if (!s.empty()) s += "+";
            s += modality_name(m);
        }
        return s;
    }
};

inline ModalityCombo make_combo(std::vector<Modality> mods) {
    std::sort(mods.begin(), mods.end(),
              [](Modality a, Modality b) { return static_cast<int>(a) < static_cast<int>(b); });
    mods.erase(std::unique(mods.begin(), mods.end()), mods.end());
    if (mods.empty()) throw std::invalid_argument("empty modality combo");
    return {std::move(mods)};
}

// All subsets of size >= 2, canonical order; count = 2^m - m - 1.
inline std::vector<ModalityCombo> enumerate_combos(std::span<const Modality> modalities) {
    if (modalities.size() < 2) throw std::invalid_argument("need at least 2 modalities");
    std::vector<Modality> sorted(modalities.begin(), modalities.end());
    std::sort(sorted.begin(), sorted.end(),
              [](Modality a, Modality b) { return static_cast<int>(a) < static_cast<int>(b); });
    std::vector<ModalityCombo> combos;
    std::size_t m = sorted.size();
    for (std::size_t bits = 1; bits < (std::size_t{1} << m); ++bits) {
        if (std::popcount(bits) < 2) continue;
        ModalityCombo combo;
        for (std::size_t i = 0; i < m; ++i)
            if (bits & (std::size_t{1} << i)) combo.modalities.push_back(sorted[i]);
        combos.push_back(std::move(combo));
    }
    std::sort(combos.begin(), combos.end(), [](const ModalityCombo& a, const ModalityCombo& b) {
        if (a.modalities.size() != b.modalities.size())
            return a.modalities.size() < b.modalities.size();
        return a.modalities < b.modalities;
    });
    return combos;
}

// One feature block of a modality, aligned row-wise with the others.
struct Block {
    Modality modality = Modality::Affect;
    std::vector<std::string> feature_names;
    Mat X;
};

inline Mat concat_blocks(std::span<const Block> blocks) {
    Mat out;
    for (const auto& b : blocks) out = hcat(out, b.X);
    return out;
}

inline std::vector<std::string> concat_names(std::span<const Block> blocks) {
    std::vector<std::string> names;
    for (const auto& b : blocks)
        names.insert(names.end(), b.feature_names.begin(), b.feature_names.end());
    return names;
}

// ---- trained building blocks ----

struct SvmPipeline {
    Standardizer standardizer;
    LinearModel model;
    PlattParams platt;
    std::vector<std::string> feature_names;
    double C = 1.0;

    double decision(std::span<const double> x) const {
        if (x.size() != standardizer.means.size())
            throw std::invalid_argument("pipeline dimension mismatch");
        double f = model.bias;
        for (std::size_t c = 0; c < x.size(); ++c)
            f += model.weights[c] * (x[c] - standardizer.means[c]) / standardizer.stds[c];
        return f;
    }

    double probability(std::span<const double> x) const { return platt.probability(decision(x)); }
};

struct TrainOptions {
    std::vector<double> c_grid = default_c_grid();
    int inner_folds = 5;
    int platt_folds = 3;
    int n_estimators = 50;
    double tolerance = 1e-4;
    int max_iterations = 10000;
    std::uint64_t seed = 0;
};

namespace detail {

inline SvmConfig base_svm_config(const TrainOptions& opt, double C, std::uint64_t seed) {
    SvmConfig cfg;
    cfg.C = C;
    cfg.tolerance = opt.tolerance;
    cfg.max_iterations = opt.max_iterations;
    cfg.seed = seed;
    return cfg;
}

// Standardize + SVM at a fixed C, Platt fitted on in-sample decision values.
// Used for the internal out-of-fold loops where the caller provides holdout.
inline SvmPipeline fit_svm_platt(const Mat& X, std::span<const int> y, double C,
                                 const TrainOptions& opt, std::uint64_t seed) {
    SvmPipeline p;
    p.C = C;
    p.standardizer = fit_standardizer(X);
    Mat Xs = apply_standardizer(p.standardizer, X);
    p.model = train_svm(Xs, y, base_svm_config(opt, C, seed));
    std::vector<double> f(X.n_rows);
    for (std::size_t i = 0; i < X.n_rows; ++i) f[i] = decision_value(p.model, Xs.row(i));
    p.platt = fit_platt(f, y);
    return p;
}

}  // namespace detail

// Full pipeline: standardize on the training rows, grid-search C, train the
// SVM, then calibrate Platt on out-of-fold decision values from an internal
// stratified split (falls back to in-sample values when folds degenerate).
inline SvmPipeline train_pipeline(const Mat& X, std::span<const int> y,
                                  std::vector<std::string> names, const TrainOptions& opt,
                                  std::uint64_t seed) {
    SvmPipeline p;
    p.feature_names = std::move(names);
    p.standardizer = fit_standardizer(X);
    Mat Xs = apply_standardizer(p.standardizer, X);
    p.C = opt.c_grid.size() == 1
              ? opt.c_grid[0]
              : tune_c(Xs, y, opt.c_grid, std::min<int>(opt.inner_folds, (int)X.n_rows),
                       seed_combine(seed, 1));
    p.model = train_svm(Xs, y, detail::base_svm_config(opt, p.C, seed_combine(seed, 2)));

    // out-of-fold decision values for calibration
    std::vector<double> oof(X.n_rows, kMissing);
    Rng rng = make_rng(seed, 3);
    auto fold = stratified_fold_assignment(y, opt.platt_folds, rng);
    bool ok = true;
    for (int f = 0; f < opt.platt_folds && ok; ++f) {
        std::vector<std::size_t> tr, te;
        for (std::size_t i = 0; i < X.n_rows; ++i) (fold[i] == f ? te : tr).push_back(i);
        std::vector<int> ytr;
        for (auto i : tr) ytr.push_back(y[i]);
        bool pos = false, neg = false;
        for (int v : ytr) (v > 0 ? pos : neg) = true;
        if (tr.empty() || te.empty() || !pos || !neg) {
            ok = false;
            break;
        }
        Mat Xtr = Xs.select_rows(tr);
        auto sub = train_svm(Xtr, ytr, detail::base_svm_config(opt, p.C, seed_combine(seed, 4, f)));
        for (auto i : te) oof[i] = decision_value(sub, Xs.row(i));
    }
    std::vector<double> fvals(X.n_rows);
    for (std::size_t i = 0; i < X.n_rows; ++i)
        fvals[i] = (ok && !is_missing(oof[i])) ? oof[i] : decision_value(p.model, Xs.row(i));
    p.platt = fit_platt(fvals, y);
    return p;
}

// ---- fusion models ----

struct FusionModel {
    Strategy strategy = Strategy::Unimodal;
    ModalityCombo combo;
    std::vector<SvmPipeline> bases;   // per modality, or per estimator for bagging/adaboost
    std::optional<SvmPipeline> meta;  // stacking and hybrid fusion
    std::vector<double> alphas;       // adaboost round weights
};

inline FusionModel train_unimodal(const Block& block, std::span<const int> y,
                                  const TrainOptions& opt) {
    FusionModel m;
    m.strategy = Strategy::Unimodal;
    m.combo = make_combo({block.modality});
    m.bases.push_back(train_pipeline(block.X, y, block.feature_names, opt, opt.seed));
    return m;
}

inline FusionModel train_early_fusion(std::span<const Block> blocks, std::span<const int> y,
                                      const TrainOptions& opt) {
    std::vector<Modality> mods;
    for (const auto& b : blocks) mods.push_back(b.modality);
    FusionModel m;
    m.strategy = Strategy::Early;
    m.combo = make_combo(mods);
    m.bases.push_back(train_pipeline(concat_blocks(blocks), y, concat_names(blocks), opt,
                                     opt.seed));
    return m;
}

inline std::vector<SvmPipeline> train_base_models(std::span<const Block> blocks,
                                                  std::span<const int> y,
                                                  const TrainOptions& opt) {
    std::vector<SvmPipeline> bases;
    for (std::size_t b = 0; b < blocks.size(); ++b)
        bases.push_back(train_pipeline(blocks[b].X, y, blocks[b].feature_names, opt,
                                       seed_combine(opt.seed, 100 + b)));
    return bases;
}

inline FusionModel train_vote(bool soft, std::span<const Block> blocks, std::span<const int> y,
                              const TrainOptions& opt) {
    if (blocks.size() < 2) throw std::invalid_argument("voting needs >= 2 base models");
    std::vector<Modality> mods;
    for (const auto& b : blocks) mods.push_back(b.modality);
    FusionModel m;
    m.strategy = soft ? Strategy::VoteSoft : Strategy::VoteHard;
    m.combo = make_combo(mods);
    m.bases = train_base_models(blocks, y, opt);
    return m;
}

// Out-of-fold base-model prediction columns on the training rows (internal
// stratified split, speaker-agnostic). hard: labels in {-1,+1}; soft: Platt
// probabilities of DECEPTIVE.
inline Mat oof_meta_features(std::span<const Block> blocks, std::span<const int> y,
                             std::span<const SvmPipeline> full_bases, bool soft,
                             const TrainOptions& opt, std::uint64_t seed) {
    std::size_t n = blocks.front().X.n_rows;
    Mat meta(n, blocks.size());
    Rng rng = make_rng(seed, 7);
    int k = std::min<int>(opt.platt_folds, static_cast<int>(n));
    auto fold = stratified_fold_assignment(y, k, rng);
    for (int f = 0; f < k; ++f) {
        std::vector<std::size_t> tr, te;
        for (std::size_t i = 0; i < n; ++i) (fold[i] == f ? te : tr).push_back(i);
        std::vector<int> ytr;
        for (auto i : tr) ytr.push_back(y[i]);
        bool pos = false, neg = false;
        for (int v : ytr) (v > 0 ? pos : neg) = true;
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            if (te.empty() || tr.empty() || !pos || !neg) {
                // degenerate split: fall back to the full-fit base model
                for (auto i : te) {
                    double out = soft ? full_bases[b].probability(blocks[b].X.row(i))
                                      : predict_sign(full_bases[b].decision(blocks[b].X.row(i)));
                    meta.at(i, b) = out;
                }
                continue;
            }
            Mat Xtr = blocks[b].X.select_rows(tr);
            auto sub = detail::fit_svm_platt(Xtr, ytr, full_bases[b].C, opt,
                                             seed_combine(seed, 8 + b, f));
            for (auto i : te) {
                double d = sub.decision(blocks[b].X.row(i));
                meta.at(i, b) = soft ? sub.platt.probability(d)
                                     : static_cast<double>(predict_sign(d));
            }
        }
    }
    return meta;
}

inline std::vector<std::string> meta_feature_names(std::span<const Block> blocks, bool soft) {
    std::vector<std::string> names;
    for (const auto& b : blocks)
        names.push_back(std::string("meta:") + modality_name(b.modality) +
                        (soft ? ":prob" : ":label"));
    return names;
}

inline FusionModel train_stacking(bool soft, std::span<const Block> blocks,
                                  std::span<const int> y, const TrainOptions& opt) {
    if (blocks.size() < 2) throw std::invalid_argument("stacking needs >= 2 base models");
    std::vector<Modality> mods;
    for (const auto& b : blocks) mods.push_back(b.modality);
    FusionModel m;
    m.strategy = soft ? Strategy::StackSoft : Strategy::StackHard;
    m.combo = make_combo(mods);
    m.bases = train_base_models(blocks, y, opt);
    Mat meta = oof_meta_features(blocks, y, m.bases, soft, opt, seed_combine(opt.seed, 20));
    m.meta = train_pipeline(meta, y, meta_feature_names(blocks, soft), opt,
                            seed_combine(opt.seed, 21));
    return m;
}

inline FusionModel train_hybrid(bool soft, std::span<const Block> blocks, std::span<const int> y,
                                const TrainOptions& opt) {
    std::vector<Modality> mods;
    for (const auto& b : blocks) mods.push_back(b.modality);
    FusionModel m;
    m.strategy = soft ? Strategy::HybridSoft : Strategy::HybridHard;
    m.combo = make_combo(mods);
    m.bases = train_base_models(blocks, y, opt);
    Mat meta = oof_meta_features(blocks, y, m.bases, soft, opt, seed_combine(opt.seed, 30));
    Mat X = hcat(concat_blocks(blocks), meta);
    auto names = concat_names(blocks);
    for (const auto& mn : meta_feature_names(blocks, soft)) names.push_back(mn);
    m.meta = train_pipeline(X, y, std::move(names), opt, seed_combine(opt.seed, 31));
    return m;
}

inline FusionModel train_bagging(std::span<const Block> blocks, std::span<const int> y,
                                 const TrainOptions& opt) {
    std::vector<Modality> mods;
    for (const auto& b : blocks) mods.push_back(b.modality);
    FusionModel m;
    m.strategy = Strategy::Bagging;
    m.combo = make_combo(mods);
    Mat X = concat_blocks(blocks);
    auto names = concat_names(blocks);

    // C tuned once on the full training fold and shared across estimators
    Standardizer s = fit_standardizer(X);
    Mat Xs = apply_standardizer(s, X);
    double C = opt.c_grid.size() == 1
                   ? opt.c_grid[0]
                   : tune_c(Xs, y, opt.c_grid, std::min<int>(opt.inner_folds, (int)X.n_rows),
                            seed_combine(opt.seed, 40));

    Rng rng = make_rng(opt.seed, 41);
    for (int e = 0; e < opt.n_estimators; ++e) {
        std::vector<std::size_t> idx(X.n_rows);
        std::vector<int> ye(X.n_rows);
        for (int attempt = 0;; ++attempt) {
            for (std::size_t i = 0; i < X.n_rows; ++i) {
                idx[i] = uniform_index(rng, X.n_rows);
                ye[i] = y[idx[i]];
            }
            bool pos = false, neg = false;
            for (int v : ye) (v > 0 ? pos : neg) = true;
            if ((pos && neg) || attempt > 1000) break;
        }
        Mat Xe = X.select_rows(idx);
        auto pipe = detail::fit_svm_platt(Xe, ye, C, opt, seed_combine(opt.seed, 42, e));
        pipe.feature_names = names;
        m.bases.push_back(std::move(pipe));
    }
    return m;
}

inline FusionModel train_adaboost(std::span<const Block> blocks, std::span<const int> y,
                                  const TrainOptions& opt) {
    std::vector<Modality> mods;
    for (const auto& b : blocks) mods.push_back(b.modality);
    FusionModel m;
    m.strategy = Strategy::AdaBoost;
    m.combo = make_combo(mods);
    Mat X = concat_blocks(blocks);
    auto names = concat_names(blocks);
    const std::size_t n = X.n_rows;

    Standardizer s = fit_standardizer(X);
    Mat Xs = apply_standardizer(s, X);
    // base-learner C tuned once on the unweighted training fold
    double C = opt.c_grid.size() == 1
                   ? opt.c_grid[0]
                   : tune_c(Xs, y, opt.c_grid, std::min<int>(opt.inner_folds, (int)n),
                            seed_combine(opt.seed, 50));

    std::vector<double> d(n, 1.0 / static_cast<double>(n));
    for (int round = 0; round < opt.n_estimators; ++round) {
        SvmConfig cfg = detail::base_svm_config(opt, C, seed_combine(opt.seed, 51, round));
        cfg.sample_weights.assign(d.begin(), d.end());
        for (double& w : cfg.sample_weights) w *= static_cast<double>(n);  // keep C scale stable
        LinearModel lm;
        try {
            lm = train_svm(Xs, y, cfg);
        } catch (const std::invalid_argument&) {
            break;  // weights collapsed onto a single class
        }
        std::vector<int> h(n);
        double eps = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            h[i] = predict_sign(decision_value(lm, Xs.row(i)));
            if (h[i] != y[i]) eps += d[i];
        }
        if (eps >= 0.5) break;  // round rejected
        double alpha;
        bool perfect = eps == 0.0;
        alpha = perfect ? std::log(1e12) : std::log((1.0 - eps) / eps);
        SvmPipeline pipe;
        pipe.standardizer = s;
        pipe.model = std::move(lm);
        pipe.feature_names = names;
        pipe.C = C;
        m.bases.push_back(std::move(pipe));
        m.alphas.push_back(alpha);
        if (perfect) break;
        double z = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (h[i] != y[i]) d[i] *= std::exp(alpha);
            z += d[i];
        }
        for (double& w : d) w /= z;
    }
    if (m.bases.empty()) {
        // first round failed: single unweighted model with alpha 1
        auto pipe = detail::fit_svm_platt(X, y, C, opt, seed_combine(opt.seed, 52));
        pipe.feature_names = names;
        m.bases.push_back(std::move(pipe));
        m.alphas.push_back(1.0);
    }
    return m;
}

inline FusionModel train_strategy(Strategy strategy, std::span<const Block> blocks,
                                  std::span<const int> y, const TrainOptions& opt) {
    switch (strategy) {
        case Strategy::Unimodal:
            if (blocks.size() != 1) throw std::invalid_argument("unimodal needs exactly 1 block");
            return train_unimodal(blocks.front(), y, opt);
        case Strategy::Early: return train_early_fusion(blocks, y, opt);
        case Strategy::VoteHard: return train_vote(false, blocks, y, opt);
        case Strategy::VoteSoft: return train_vote(true, blocks, y, opt);
        case Strategy::StackHard: return train_stacking(false, blocks, y, opt);
        case Strategy::StackSoft: return train_stacking(true, blocks, y, opt);
        case Strategy::HybridHard: return train_hybrid(false, blocks, y, opt);
        case Strategy::HybridSoft: return train_hybrid(true, blocks, y, opt);
        case Strategy::Bagging: return train_bagging(blocks, y, opt);
        case Strategy::AdaBoost: return train_adaboost(blocks, y, opt);
    }
    throw std::logic_error("unhandled strategy");
}

// ---- prediction ----

struct Scored {
    std::vector<double> scores;  // rank toward DECEPTIVE
    std::vector<int> preds;      // +1 DECEPTIVE / -1 TRUTHFUL
};

inline Scored predict(const FusionModel& m, std::span<const Block> blocks) {
    std::size_t n = blocks.front().X.n_rows;
    Scored out;
    out.scores.resize(n);
    out.preds.resize(n);
    auto finish_sign = [&](std::size_t i, double score) {
        out.scores[i] = score;
        out.preds[i] = predict_sign(score);
    };
    switch (m.strategy) {
        case Strategy::Unimodal:
        case Strategy::Early: {
            Mat X = concat_blocks(blocks);
            for (std::size_t i = 0; i < n; ++i) finish_sign(i, m.bases[0].decision(X.row(i)));
            break;
        }
        case Strategy::VoteHard: {
            for (std::size_t i = 0; i < n; ++i) {
                int votes = 0;
                double mean_f = 0.0;
                for (std::size_t b = 0; b < m.bases.size(); ++b) {
                    double f = m.bases[b].decision(blocks[b].X.row(i));
                    votes += predict_sign(f);
                    mean_f += f / static_cast<double>(m.bases.size());
                }
                out.scores[i] = mean_f;
                // majority; ties by mean decision value, then DECEPTIVE
                out.preds[i] = votes != 0 ? (votes > 0 ? 1 : -1) : predict_sign(mean_f);
            }
            break;
        }
        case Strategy::VoteSoft: {
            for (std::size_t i = 0; i < n; ++i) {
                double mean_p = 0.0;
                for (std::size_t b = 0; b < m.bases.size(); ++b)
                    mean_p += m.bases[b].probability(blocks[b].X.row(i)) /
                              static_cast<double>(m.bases.size());
                out.scores[i] = mean_p;
                out.preds[i] = mean_p >= 0.5 ? 1 : -1;
            }
            break;
        }
        case Strategy::StackHard:
        case Strategy::StackSoft: {
            bool soft = m.strategy == Strategy::StackSoft;
            for (std::size_t i = 0; i < n; ++i) {
                std::vector<double> mf(m.bases.size());
                for (std::size_t b = 0; b < m.bases.size(); ++b) {
                    double f = m.bases[b].decision(blocks[b].X.row(i));
                    mf[b] = soft ? m.bases[b].platt.probability(f)
                                 : static_cast<double>(predict_sign(f));
                }
                finish_sign(i, m.meta->decision(mf));
            }
            break;
        }
        case Strategy::HybridHard:
        case Strategy::HybridSoft: {
            bool soft = m.strategy == Strategy::HybridSoft;
            Mat X = concat_blocks(blocks);
            for (std::size_t i = 0; i < n; ++i) {
                std::vector<double> x(X.row(i).begin(), X.row(i).end());
                for (std::size_t b = 0; b < m.bases.size(); ++b) {
                    double f = m.bases[b].decision(blocks[b].X.row(i));
                    x.push_back(soft ? m.bases[b].platt.probability(f)
                                     : static_cast<double>(predict_sign(f)));
                }
                finish_sign(i, m.meta->decision(x));
            }
            break;
        }
        case Strategy::Bagging: {
            Mat X = concat_blocks(blocks);
            for (std::size_t i = 0; i < n; ++i) {
                int votes = 0;
                double mean_f = 0.0;
                for (const auto& base : m.bases) {
                    double f = base.decision(X.row(i));
                    votes += predict_sign(f);
                    mean_f += f / static_cast<double>(m.bases.size());
                }
                out.scores[i] = mean_f;
                out.preds[i] = votes != 0 ? (votes > 0 ? 1 : -1) : predict_sign(mean_f);
            }
            break;
        }
        case Strategy::AdaBoost: {
            Mat X = concat_blocks(blocks);
            for (std::size_t i = 0; i < n; ++i) {
                double score = 0.0;
                for (std::size_t e = 0; e < m.bases.size(); ++e)
                    score += m.alphas[e] * predict_sign(m.bases[e].decision(X.row(i)));
                finish_sign(i, score);
            }
            break;
        }
    }
    return out;
}

// ---- SVM-weight feature importance ----

struct ImportanceEntry {
    std::string feature;
    double mean_abs_weight = 0.0;
};

struct ImportanceReport {
    std::vector<ImportanceEntry> ranked;  // descending
};

// Mean |w_i| per feature across all linear estimators that contain it.
inline ImportanceReport svm_weight_importance(const FusionModel& m, std::size_t top_k = 25) {
    if (m.strategy == Strategy::VoteHard || m.strategy == Strategy::VoteSoft)
        throw std::invalid_argument("pure voting has no feature-level weights");
    std::vector<std::string> order;           // canonical first-appearance order
    std::map<std::string, std::pair<double, int>> acc;  // sum |w|, count
    auto add_pipeline = [&](const SvmPipeline& p) {
        for (std::size_t c = 0; c < p.feature_names.size(); ++c) {
            auto [it, inserted] = acc.try_emplace(p.feature_names[c], 0.0, 0);
            if (inserted) order.push_back(p.feature_names[c]);
            it->second.first += std::fabs(p.model.weights[c]);
            it->second.second += 1;
        }
    };
    // stacking's named estimator is the meta model; otherwise the bases carry weights
    if (m.strategy == Strategy::StackHard || m.strategy == Strategy::StackSoft) {
        add_pipeline(*m.meta);
    } else {
        for (const auto& b : m.bases) add_pipeline(b);
        if (m.meta) add_pipeline(*m.meta);
    }
    ImportanceReport report;
    for (const auto& name : order)
        report.ranked.push_back({name, acc[name].first / acc[name].second});
    std::stable_sort(report.ranked.begin(), report.ranked.end(),
                     [](const ImportanceEntry& a, const ImportanceEntry& b) {
                         return a.mean_abs_weight > b.mean_abs_weight;
                     });
    if (report.ranked.size() > top_k) report.ranked.resize(top_k);
    return report;
}

inline std::string importance_csv(const ImportanceReport& r) {
    std::string out = "feature,mean_abs_weight\n";
    for (const auto& e : r.ranked) out += e.feature + "," + fmt_double(e.mean_abs_weight) + "\n";
    return out;
}

}  // namespace dml
