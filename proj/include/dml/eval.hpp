#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dml/corpus.hpp"
#include "dml/featurize.hpp"
#include "dml/fusion.hpp"
#include "dml/metrics.hpp"
#include "dml/parallel.hpp"
#include "dml/select.hpp"
#include "dml/stats.hpp"

namespace dml {

// ---- speaker-disjoint stratified fold plans ----

struct Fold {
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
};

struct FoldPlan {
    int k = 5;
    int repeats = 10;
    std::uint64_t seed = 0;
    std::vector<std::vector<Fold>> plans;  // [repeat][fold]
};

// Speakers are shuffled, ordered by video count descending, then greedily
// assigned to the fold that best tracks the proportional per-class targets.
inline FoldPlan build_fold_plan(std::span<const std::string> groups,
                                std::span<const Label> labels, int k = 5, int repeats = 10,
                                std::uint64_t seed = 0) {
    if (groups.size() != labels.size()) throw std::invalid_argument("length mismatch");
    std::map<std::string, std::vector<std::size_t>> by_speaker;
    for (std::size_t i = 0; i < groups.size(); ++i) by_speaker[groups[i]].push_back(i);
    if (k < 2 || static_cast<std::size_t>(k) > by_speaker.size())
        throw std::invalid_argument("k must be in [2, number of speakers]");

    std::vector<std::string> speakers;
    for (const auto& [s, _] : by_speaker) speakers.push_back(s);
    double target_t = 0.0, target_d = 0.0;
    for (Label l : labels) (l == Label::Truthful ? target_t : target_d) += 1.0;
    target_t /= k;
    target_d /= k;

    FoldPlan plan;
    plan.k = k;
    plan.repeats = repeats;
    plan.seed = seed;
    for (int rep = 0; rep < repeats; ++rep) {
        auto order = speakers;
        Rng rng = make_rng(seed, rep);
        shuffle(order, rng);
        std::stable_sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
            return by_speaker[a].size() > by_speaker[b].size();
        });

        std::vector<double> fold_t(k, 0.0), fold_d(k, 0.0);
        std::vector<std::vector<std::size_t>> fold_rows(k);
        for (const auto& speaker : order) {
            const auto& vids = by_speaker[speaker];
            double add_t = 0.0, add_d = 0.0;
            for (auto v : vids) (labels[v] == Label::Truthful ? add_t : add_d) += 1.0;
            int best = 0;
            double best_cost = 0.0;
            for (int f = 0; f < k; ++f) {
                // change in squared deviation from the per-class targets
                auto dev = [](double v, double target) { return (v - target) * (v - target); };
                double cost = dev(fold_t[f] + add_t, target_t) - dev(fold_t[f], target_t) +
                              dev(fold_d[f] + add_d, target_d) - dev(fold_d[f], target_d);
                if (f == 0 || cost < best_cost - 1e-12 ||
                    (cost < best_cost + 1e-12 &&
                     fold_rows[f].size() < fold_rows[best].size())) {
                    best = f;
                    best_cost = cost;
                }
            }
            fold_t[best] += add_t;
            fold_d[best] += add_d;
            for (auto v : vids) fold_rows[best].push_back(v);
        }

        std::vector<Fold> folds(k);
        for (int f = 0; f < k; ++f) {
            std::sort(fold_rows[f].begin(), fold_rows[f].end());
            folds[f].test_rows = fold_rows[f];
            for (int g = 0; g < k; ++g)
                if (g != f)
                    folds[f].train_rows.insert(folds[f].train_rows.end(), fold_rows[g].begin(),
                                               fold_rows[g].end());
            std::sort(folds[f].train_rows.begin(), folds[f].train_rows.end());
        }
        plan.plans.push_back(std::move(folds));
    }
    return plan;
}

// ---- affect group analysis (valence/arousal per-video statistics) ----

struct AffectContrast {
    std::string channel;  // valence / arousal
    std::string stat;     // mean / median / std / min / max
    double deceptive_mean = 0.0;
    double truthful_mean = 0.0;
    StatResult welch;
};

struct AffectPanel {
    std::string name;  // e.g. mean_valence
    KdeEstimate deceptive;
    KdeEstimate truthful;
};

struct AffectAnalysis {
    std::vector<AffectContrast> contrasts;
    std::vector<AffectPanel> panels;
};

inline AffectAnalysis affect_group_analysis(const CorpusManifest& manifest,
                                            int grid_points = 512) {
    // per-video statistics of each affect channel, split by class
    std::map<std::string, std::map<std::string, std::pair<std::vector<double>,
                                                          std::vector<double>>>> stats;
    const char* stat_names[] = {"mean", "median", "std", "min", "max"};
    for (const auto& r : manifest.records) {
        for (const auto& s : r.affect) {
            std::span<const double> v = s.values;
            double vals[] = {mean_of(v), median_of(v), pop_std(v),
                             *std::min_element(v.begin(), v.end()),
                             *std::max_element(v.begin(), v.end())};
            for (int i = 0; i < 5; ++i) {
                auto& bucket = stats[s.channel_id][stat_names[i]];
                (r.label == Label::Deceptive ? bucket.first : bucket.second).push_back(vals[i]);
            }
        }
    }
    auto counts = manifest.counts();
    if (counts.n_truthful < 2 || counts.n_deceptive < 2)
        throw std::invalid_argument("insufficient samples for Welch's test");

    AffectAnalysis out;
    for (const char* channel : {"valence", "arousal"}) {
        for (const char* stat : stat_names) {
            const auto& [dec, tru] = stats[channel][stat];
            AffectContrast c;
            c.channel = channel;
            c.stat = stat;
            c.deceptive_mean = mean_of(dec);
            c.truthful_mean = mean_of(tru);
            c.welch = welch_t(dec, tru);
            out.contrasts.push_back(std::move(c));
        }
    }
    for (const char* channel : {"valence", "arousal"}) {
        for (const char* stat : {"mean", "std"}) {
            const auto& [dec, tru] = stats[channel][stat];
            AffectPanel p;
            p.name = std::string(stat) + "_" + channel;
            p.deceptive = gaussian_kde(dec, 0.0, grid_points);
            p.truthful = gaussian_kde(tru, 0.0, grid_points);
            out.panels.push_back(std::move(p));
        }
    }
    return out;
}

// ---- experiment runner ----

enum class SelectionMode { None, PerFold, Global };

inline const char* selection_mode_name(SelectionMode m) {
    switch (m) {
        case SelectionMode::None: return "none";
        case SelectionMode::PerFold: return "per_fold";
        case SelectionMode::Global: return "global";
    }
    return "?";
}

inline SelectionMode parse_selection_mode(const std::string& s) {
    if (s == "none") return SelectionMode::None;
    if (s == "per_fold") return SelectionMode::PerFold;
    if (s == "global") return SelectionMode::Global;
    throw std::invalid_argument("unknown selection mode: " + s);
}

struct RunConfig {
    std::vector<Strategy> strategies = {Strategy::Unimodal, Strategy::Early, Strategy::VoteHard,
                                        Strategy::VoteSoft, Strategy::StackHard,
                                        Strategy::StackSoft, Strategy::HybridHard,
                                        Strategy::HybridSoft, Strategy::Bagging,
                                        Strategy::AdaBoost};
    std::vector<ModalityCombo> combos;  // empty = all size>=2 subsets
    SelectionMode selection = SelectionMode::PerFold;
    BorutaConfig boruta;
    TrainOptions train;
    int k = 5;
    int repeats = 10;
    std::uint64_t seed = 0;
    int workers = 0;
};

struct FoldPrediction {
    std::string video_id;
    int repeat = 0;
    int fold = 0;
    double score = 0.0;
    int pred = 0;
    int truth = 0;
};

struct EvalCell {
    Strategy strategy = Strategy::Unimodal;
    ModalityCombo combo;
    std::vector<MetricSet> fold_metrics;   // repeats * k entries
    MetricSet mean;                        // arithmetic means across folds
    std::vector<FoldPrediction> predictions;  // pooled out-of-fold
};

struct EvalReport {
    RunConfig config;
    std::vector<EvalCell> cells;
    std::vector<std::string> global_selected;  // canonical names (GLOBAL mode only)

    const EvalCell* find(Strategy s, const ModalityCombo& combo) const {
        for (const auto& c : cells)
            if (c.strategy == s && c.combo.name() == combo.name()) return &c;
        return nullptr;
    }
};

namespace detail {

inline std::vector<int> to_pm1(std::span<const Label> labels) {
    std::vector<int> y(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == Label::Deceptive ? 1 : -1;
    return y;
}

struct ModalityColumns {
    std::map<Modality, std::vector<std::size_t>> cols;  // into the FeatureMatrix schema
};

inline std::map<Modality, std::vector<std::size_t>> schema_columns(
    std::span<const FeatureName> schema) {
    std::map<Modality, std::vector<std::size_t>> out;
    for (std::size_t c = 0; c < schema.size(); ++c) out[schema[c].modality].push_back(c);
    return out;
}

// Per-modality selected columns for one fold: degeneracy mask plus (optionally)
// Boruta-confirmed features. A modality whose confirmed set is empty falls
// back to its non-degenerate columns so every cell stays trainable.
struct FoldSelection {
    std::map<Modality, std::vector<std::size_t>> selected;  // original column indices
    SelectionReport boruta;                                 // over kept columns (if run)
    std::vector<std::size_t> kept;                          // mask survivors
};

inline FoldSelection select_for_rows(const FeatureMatrix& fm, std::span<const std::size_t> rows,
                                     SelectionMode mode, const BorutaConfig& boruta_cfg,
                                     std::uint64_t seed) {
    Mat train(rows.size(), fm.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto src = fm.row(rows[i]);
        std::copy(src.begin(), src.end(), train.row(i).begin());
    }
    FoldSelection sel;
    auto mask = fit_degeneracy_mask(train);
    sel.kept = mask.kept_indices();

    std::vector<std::size_t> chosen;
    if (mode == SelectionMode::None) {
        chosen = sel.kept;
    } else {
        Mat masked = train.select_cols(sel.kept);
        std::vector<Label> labels;
        for (auto r : rows) labels.push_back(fm.labels[r]);
        auto y = to_pm1(labels);
        BorutaConfig cfg = boruta_cfg;
        cfg.seed = seed;
        sel.boruta = boruta_select(masked, y, cfg);
        for (auto j : sel.boruta.confirmed_indices()) chosen.push_back(sel.kept[j]);
    }

    auto by_modality = schema_columns(fm.columns);
    for (const auto& [m, all_cols] : by_modality) {
        std::set<std::size_t> in_mod(all_cols.begin(), all_cols.end());
        std::vector<std::size_t>& dst = sel.selected[m];
        for (auto c : chosen)
            if (in_mod.count(c)) dst.push_back(c);
        if (dst.empty())
            for (auto c : sel.kept)
                if (in_mod.count(c)) dst.push_back(c);
    }
    return sel;
}

inline Block make_block(const FeatureMatrix& fm, Modality m,
                        std::span<const std::size_t> cols, std::span<const std::size_t> rows) {
    Block b;
    b.modality = m;
    for (auto c : cols) b.feature_names.push_back(fm.columns[c].canonical());
    b.X = Mat(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) b.X.at(i, j) = fm.at(rows[i], cols[j]);
    return b;
}

inline MetricSet mean_metrics(std::span<const MetricSet> folds) {
    MetricSet mean;
    double auc_sum = 0.0, pr_sum = 0.0, acc_sum = 0.0, f1_sum = 0.0;
    double auc_n = 0.0, pr_n = 0.0;
    for (const auto& m : folds) {
        if (!is_missing(m.roc_auc)) {
            auc_sum += m.roc_auc;
            auc_n += 1.0;
        }
        if (!is_missing(m.pr_auc)) {
            pr_sum += m.pr_auc;
            pr_n += 1.0;
        }
        acc_sum += m.accuracy;
        f1_sum += m.weighted_f1;
    }
    mean.roc_auc = auc_n > 0 ? auc_sum / auc_n : kMissing;
    mean.pr_auc = pr_n > 0 ? pr_sum / pr_n : kMissing;
    mean.accuracy = acc_sum / static_cast<double>(folds.size());
    mean.weighted_f1 = f1_sum / static_cast<double>(folds.size());
    return mean;
}

}  // namespace detail

// The cell list for a config: unimodal cells per modality, then multimodal
// strategies per combo.
inline std::vector<std::pair<Strategy, ModalityCombo>> plan_cells(const RunConfig& config) {
    std::vector<std::pair<Strategy, ModalityCombo>> cells;
    const std::vector<Modality> all = {Modality::Affect, Modality::Visual, Modality::Vocal,
                                       Modality::Verbal};
    std::vector<ModalityCombo> combos = config.combos;
    if (combos.empty()) combos = enumerate_combos(all);
    for (Strategy s : config.strategies) {
        if (s == Strategy::Unimodal) {
            for (Modality m : all) cells.emplace_back(s, make_combo({m}));
        } else {
            for (const auto& combo : combos)
                if (combo.modalities.size() >= 2) cells.emplace_back(s, combo);
        }
    }
    return cells;
}

inline EvalReport run_experiment(const CorpusManifest& manifest, const RunConfig& config,
                                 const FeatureMatrix* cached_features = nullptr,
                                 const AttributeCatalog* catalog = nullptr) {
    AttributeCatalog cat = catalog ? *catalog : default_catalog();
    FeatureMatrix fm =
        cached_features ? *cached_features : featurize_corpus(manifest, cat, config.workers);
    auto y_all = detail::to_pm1(fm.labels);

    FoldPlan plan = build_fold_plan(fm.groups, fm.labels, config.k, config.repeats,
                                    seed_combine(config.seed, 0xF01D));

    EvalReport report;
    report.config = config;

    std::optional<detail::FoldSelection> global_sel;
    if (config.selection == SelectionMode::Global) {
        std::vector<std::size_t> all_rows(fm.rows());
        std::iota(all_rows.begin(), all_rows.end(), 0);
        global_sel = detail::select_for_rows(fm, all_rows, SelectionMode::Global, config.boruta,
                                             seed_combine(config.seed, 0xB0));
        std::set<std::size_t> sel_union;
        for (const auto& [m, cols] : global_sel->selected)
            sel_union.insert(cols.begin(), cols.end());
        for (auto c : sel_union) report.global_selected.push_back(fm.columns[c].canonical());
    }

    auto cells = plan_cells(config);
    const int n_folds = config.k * config.repeats;
    std::vector<std::vector<MetricSet>> cell_fold_metrics(cells.size(),
                                                          std::vector<MetricSet>(n_folds));
    std::vector<std::vector<std::vector<FoldPrediction>>> cell_preds(
        cells.size(), std::vector<std::vector<FoldPrediction>>(n_folds));

    // Boruta already parallelizes over trees, so per-fold selection runs the
    // fold loop serially; otherwise folds run in parallel.
    bool folds_parallel = config.selection != SelectionMode::PerFold;
    parallel_for(
        static_cast<std::size_t>(n_folds),
        [&](std::size_t fold_idx) {
            int rep = static_cast<int>(fold_idx) / config.k;
            int f = static_cast<int>(fold_idx) % config.k;
            const Fold& fold = plan.plans[rep][f];
            std::uint64_t fold_seed = seed_combine(config.seed, rep, f);

            detail::FoldSelection sel;
            if (config.selection == SelectionMode::Global) {
                sel = *global_sel;
            } else {
                BorutaConfig bc = config.boruta;
                bc.forest.workers = folds_parallel ? 1 : config.workers;
                sel = detail::select_for_rows(fm, fold.train_rows, config.selection, bc,
                                              seed_combine(fold_seed, 0xB1));
            }

            std::vector<int> ytr, yte;
            for (auto r : fold.train_rows) ytr.push_back(y_all[r]);
            for (auto r : fold.test_rows) yte.push_back(y_all[r]);

            std::map<Modality, Block> train_blocks, test_blocks;
            for (const auto& [m, cols] : sel.selected) {
                train_blocks[m] = detail::make_block(fm, m, cols, fold.train_rows);
                test_blocks[m] = detail::make_block(fm, m, cols, fold.test_rows);
            }

            for (std::size_t ci = 0; ci < cells.size(); ++ci) {
                const auto& [strategy, combo] = cells[ci];
                std::vector<Block> tr, te;
                for (Modality m : combo.modalities) {
                    tr.push_back(train_blocks.at(m));
                    te.push_back(test_blocks.at(m));
                }
                TrainOptions opt = config.train;
                opt.seed = seed_combine(fold_seed, 0xCE11, ci);
                FusionModel model = train_strategy(strategy, tr, ytr, opt);
                Scored scored = predict(model, te);
                cell_fold_metrics[ci][fold_idx] =
                    compute_metrics(scored.scores, scored.preds, yte);
                auto& preds = cell_preds[ci][fold_idx];
                for (std::size_t i = 0; i < fold.test_rows.size(); ++i)
                    preds.push_back({fm.video_ids[fold.test_rows[i]], rep, f, scored.scores[i],
                                     scored.preds[i], yte[i]});
            }
        },
        folds_parallel ? config.workers : 1);

    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
        EvalCell cell;
        cell.strategy = cells[ci].first;
        cell.combo = cells[ci].second;
        cell.fold_metrics = std::move(cell_fold_metrics[ci]);
        cell.mean = detail::mean_metrics(cell.fold_metrics);
        for (auto& fold_preds : cell_preds[ci])
            cell.predictions.insert(cell.predictions.end(), fold_preds.begin(),
                                    fold_preds.end());
        report.cells.push_back(std::move(cell));
    }
    return report;
}

// Leave-one-out AUC drop per modality of the full combo.
inline std::map<Modality, double> ablation(const EvalReport& report,
                                           const ModalityCombo& full_combo, Strategy strategy) {
    const EvalCell* full = report.find(strategy, full_combo);
    if (!full) throw std::invalid_argument("report missing full-combo cell");
    std::map<Modality, double> deltas;
    for (Modality m : full_combo.modalities) {
        std::vector<Modality> rest;
        for (Modality o : full_combo.modalities)
            if (o != m) rest.push_back(o);
        ModalityCombo reduced = make_combo(rest);
        const EvalCell* cell = rest.size() == 1 ? report.find(Strategy::Unimodal, reduced)
                                                : report.find(strategy, reduced);
        if (!cell) throw std::invalid_argument("report missing leave-one-out cell " +
                                               reduced.name());
        deltas[m] = full->mean.roc_auc - cell->mean.roc_auc;
    }
    return deltas;
}

// ---- report serialization ----

inline nlohmann::json metricset_to_json(const MetricSet& m) {
    nlohmann::json j;
    j["roc_auc"] = is_missing(m.roc_auc) ? nlohmann::json() : nlohmann::json(m.roc_auc);
    j["pr_auc"] = is_missing(m.pr_auc) ? nlohmann::json() : nlohmann::json(m.pr_auc);
    j["accuracy"] = m.accuracy;
    j["weighted_f1"] = m.weighted_f1;
    return j;
}

inline nlohmann::json run_config_to_json(const RunConfig& c) {
    nlohmann::json j;
    nlohmann::json strategies = nlohmann::json::array();
    for (auto s : c.strategies) strategies.push_back(strategy_name(s));
    j["strategies"] = strategies;
    nlohmann::json combos = nlohmann::json::array();
    for (const auto& combo : c.combos) combos.push_back(combo.name());
    j["combos"] = combos;
    j["selection"] = selection_mode_name(c.selection);
    j["boruta"] = {{"max_iterations", c.boruta.max_iterations},
                   {"alpha", c.boruta.alpha},
                   {"bonferroni", c.boruta.bonferroni},
                   {"n_trees", c.boruta.forest.n_trees}};
    j["train"] = {{"c_grid", c.train.c_grid},
                  {"inner_folds", c.train.inner_folds},
                  {"n_estimators", c.train.n_estimators},
                  {"tolerance", c.train.tolerance}};
    j["k"] = c.k;
    j["repeats"] = c.repeats;
    j["seed"] = c.seed;
    return j;
}

inline nlohmann::json report_to_json(const EvalReport& r) {
    nlohmann::json j;
    j["config"] = run_config_to_json(r.config);
    j["global_selected"] = r.global_selected;
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : r.cells) {
        nlohmann::json jc;
        jc["strategy"] = strategy_name(c.strategy);
        jc["combo"] = c.combo.name();
        jc["mean"] = metricset_to_json(c.mean);
        nlohmann::json folds = nlohmann::json::array();
        for (const auto& m : c.fold_metrics) folds.push_back(metricset_to_json(m));
        jc["folds"] = folds;
        nlohmann::json preds = nlohmann::json::array();
        for (const auto& p : c.predictions)
            preds.push_back({{"video_id", p.video_id},
                             {"repeat", p.repeat},
                             {"fold", p.fold},
                             {"score", p.score},
                             {"pred", p.pred},
                             {"truth", p.truth}});
        jc["predictions"] = preds;
        cells.push_back(jc);
    }
    j["cells"] = cells;
    return j;
}

// Flat CSV: one row per cell with mean metrics.
inline std::string report_csv(const EvalReport& r) {
    std::ostringstream out;
    out << "strategy,combo,mean_roc_auc,mean_pr_auc,mean_accuracy,mean_weighted_f1\n";
    for (const auto& c : r.cells) {
        out << strategy_name(c.strategy) << "," << c.combo.name() << ","
            << (is_missing(c.mean.roc_auc) ? "MISSING" : fmt_double(c.mean.roc_auc)) << ","
            << (is_missing(c.mean.pr_auc) ? "MISSING" : fmt_double(c.mean.pr_auc)) << ","
            << fmt_double(c.mean.accuracy) << "," << fmt_double(c.mean.weighted_f1) << "\n";
    }
    return out.str();
}

// ROC points over the pooled out-of-fold predictions of one cell.
inline std::string cell_roc_csv(const EvalCell& cell) {
    std::vector<double> scores;
    std::vector<int> truth;
    for (const auto& p : cell.predictions) {
        scores.push_back(p.score);
        truth.push_back(p.truth);
    }
    std::ostringstream out;
    out << "fpr,tpr\n";
    for (const auto& pt : roc_points(scores, truth))
        out << fmt_double(pt.fpr) << "," << fmt_double(pt.tpr) << "\n";
    return out.str();
}

}  // namespace dml
