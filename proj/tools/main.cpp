// deceptml: command-line surface for the multimodal deception-detection
// pipeline. Subcommands: synth, featurize, select, run, analyze, report.
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dml/corpus.hpp"
#include "dml/eval.hpp"
#include "dml/featurize.hpp"
#include "dml/fusion.hpp"
#include "dml/io.hpp"
#include "dml/select.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex8(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%08llx", static_cast<unsigned long long>(h & 0xffffffffull));
    return buf;
}

// --config <file> holds a JSON mirror of the flag names (without dashes);
// values fill in any option the user did not pass on the command line.
void apply_config_file(CLI::App* cmd, const std::string& config_path) {
    if (config_path.empty()) return;
    json cfg = json::parse(dml::read_text_file(config_path));
    if (!cfg.is_object()) throw CLI::ValidationError("--config", "config file must be a JSON object");
    for (auto& [key, value] : cfg.items()) {
        CLI::Option* opt = cmd->get_option_no_throw("--" + key);
        if (!opt || opt->count() > 0) continue;
        std::vector<std::string> args;
        if (value.is_array())
            for (const auto& v : value) args.push_back(v.is_string() ? v.get<std::string>() : v.dump());
        else if (value.is_boolean())
            args.push_back(value.get<bool>() ? "true" : "false");
        else
            args.push_back(value.is_string() ? value.get<std::string>() : value.dump());
        opt->add_result(args);
        opt->run_callback();
    }
}

// Minimal SVG polyline plot for the optional --svg output.
std::string svg_line_plot(const std::string& title,
                          const std::vector<std::pair<std::vector<double>, std::vector<double>>>& series,
                          const std::vector<std::string>& colors) {
    const double w = 640, h = 480, pad = 48;
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool first = true;
    for (const auto& [xs, ys] : series)
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (first) {
                xmin = xmax = xs[i];
                ymin = ymax = ys[i];
                first = false;
            }
            xmin = std::min(xmin, xs[i]);
            xmax = std::max(xmax, xs[i]);
            ymin = std::min(ymin, ys[i]);
            ymax = std::max(ymax, ys[i]);
        }
    if (xmax - xmin < 1e-12) xmax = xmin + 1;
    if (ymax - ymin < 1e-12) ymax = ymin + 1;
    auto sx = [&](double x) { return pad + (x - xmin) / (xmax - xmin) * (w - 2 * pad); };
    auto sy = [&](double y) { return h - pad - (y - ymin) / (ymax - ymin) * (h - 2 * pad); };
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\">" << title << "</text>\n"
        << "<rect x=\"" << pad << "\" y=\"" << pad << "\" width=\"" << w - 2 * pad
        << "\" height=\"" << h - 2 * pad << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        out << "<polyline fill=\"none\" stroke=\"" << colors[s % colors.size()]
            << "\" stroke-width=\"1.5\" points=\"";
        const auto& [xs, ys] = series[s];
        for (std::size_t i = 0; i < xs.size(); ++i)
            out << sx(xs[i]) << "," << sy(ys[i]) << (i + 1 < xs.size() ? " " : "");
        out << "\"/>\n";
    }
    out << "</svg>\n";
    return out.str();
}

struct CorpusFlags {
    std::string corpus_path;
    bool synth = false;
};

void add_corpus_flags(CLI::App* cmd, CorpusFlags& f) {
    auto* c = cmd->add_option("--corpus", f.corpus_path, "Path to a corpus manifest JSON");
    auto* s = cmd->add_flag("--synth", f.synth, "Use the default synthetic corpus (needs --seed)");
    c->excludes(s);
}

dml::CorpusManifest resolve_corpus(const CorpusFlags& f, std::uint64_t seed) {
    if (f.synth) return dml::generate_synthetic(dml::SyntheticSpec{}, seed);
    if (f.corpus_path.empty())
        throw CLI::ValidationError("corpus", "exactly one of --corpus or --synth is required");
    return dml::load_manifest(f.corpus_path);
}

int cmd_synth(std::uint64_t seed, const std::string& out, dml::SyntheticSpec spec,
              bool videos_set, bool class_split_set, bool speakers_set) {
    if (videos_set && !class_split_set) {
        spec.n_truthful = spec.n_videos / 2;
        spec.n_deceptive = spec.n_videos - spec.n_truthful;
    }
    if (videos_set && !speakers_set) spec.n_speakers = (spec.n_videos + 1) / 2;
    auto manifest = dml::generate_synthetic(spec, seed);
    dml::save_manifest(manifest, out);
    auto c = manifest.counts();
    std::cout << manifest.records.size() << " videos, " << c.n_truthful << " truthful, " << c.n_deceptive
              << " deceptive, " << c.n_speakers << " speakers\n";
    std::cout << "wrote " << (fs::path(out) / "manifest.json").string() << "\n";
    return kExitOk;
}

int cmd_featurize(const CorpusFlags& corpus_flags, std::uint64_t seed, const std::string& out,
                  const std::string& catalog_path, int workers) {
    auto manifest = resolve_corpus(corpus_flags, seed);
    dml::AttributeCatalog catalog =
        catalog_path.empty()
            ? dml::default_catalog()
            : dml::catalog_from_json(json::parse(dml::read_text_file(catalog_path)));
    auto fm = dml::featurize_corpus(manifest, catalog, workers);
    fs::create_directories(out);
    dml::write_text_file(fs::path(out) / "features.csv", dml::feature_matrix_csv(fm));
    dml::write_text_file(fs::path(out) / "catalog.json", dml::catalog_to_json(catalog).dump(2) + "\n");
    std::cout << fm.rows() << " videos x " << fm.cols() << " features\n";
    std::cout << "wrote " << (fs::path(out) / "features.csv").string() << "\n";
    return kExitOk;
}

int cmd_select(const CorpusFlags& corpus_flags, std::uint64_t seed, const std::string& out,
               dml::BorutaConfig boruta, int workers) {
    auto manifest = resolve_corpus(corpus_flags, seed);
    auto fm = dml::featurize_corpus(manifest, dml::default_catalog(), workers);
    dml::Mat X(fm.rows(), fm.cols());
    std::copy(fm.cells.begin(), fm.cells.end(), X.data.begin());
    auto mask = dml::fit_degeneracy_mask(X);
    auto kept = mask.kept_indices();
    dml::Mat Xk = X.select_cols(kept);
    std::vector<int> y;
    for (auto l : fm.labels) y.push_back(l == dml::Label::Deceptive ? 1 : -1);
    boruta.seed = dml::seed_combine(seed, 0xB0);
    boruta.forest.workers = workers;
    auto report = dml::boruta_select(Xk, y, boruta);
    std::vector<dml::FeatureName> kept_names;
    for (auto c : kept) kept_names.push_back(fm.columns[c]);
    fs::create_directories(out);
    dml::write_text_file(fs::path(out) / "selection.csv",
                         dml::selection_report_csv(report, kept_names));
    std::size_t confirmed = report.confirmed_indices().size();
    std::cout << confirmed << " confirmed of " << kept.size() << " candidate features ("
              << fm.cols() - kept.size() << " dropped as degenerate) after "
              << report.iterations_completed << " iterations\n";
    std::cout << "wrote " << (fs::path(out) / "selection.csv").string() << "\n";
    return kExitOk;
}

int cmd_run(const CorpusFlags& corpus_flags, std::uint64_t seed, const std::string& out,
            int workers, dml::RunConfig config, bool quick, bool svg) {
    if (quick) {
        config.selection = dml::SelectionMode::None;
        config.strategies = {dml::Strategy::Unimodal};
        config.combos.clear();
    }
    config.seed = seed;
    config.workers = workers;
    auto manifest = resolve_corpus(corpus_flags, seed);

    json resolved = dml::run_config_to_json(config);
    resolved["corpus"] = corpus_flags.synth ? "synthetic" : corpus_flags.corpus_path;
    std::string resolved_str = resolved.dump(2) + "\n";
    fs::path run_dir = fs::path(out) / ("run_" + std::to_string(seed) + "_" +
                                        hex8(fnv1a(resolved_str)));
    fs::create_directories(run_dir);
    dml::write_text_file(run_dir / "config.json", resolved_str);

    auto report = dml::run_experiment(manifest, config);
    dml::write_text_file(run_dir / "report.json", dml::report_to_json(report).dump(2) + "\n");
    dml::write_text_file(run_dir / "report.csv", dml::report_csv(report));

    const dml::EvalCell* best = nullptr;
    for (const auto& cell : report.cells) {
        std::string stem = std::string(dml::strategy_name(cell.strategy)) + "_" +
                           cell.combo.name();
        for (char& ch : stem)
            if (ch == '+') ch = '-';
        dml::write_text_file(run_dir / ("roc_" + stem + ".csv"), dml::cell_roc_csv(cell));
        if (svg) {
            auto pts = [&] {
                std::vector<double> fpr, tpr, sc;
                std::vector<int> tr;
                for (const auto& p : cell.predictions) {
                    sc.push_back(p.score);
                    tr.push_back(p.truth);
                }
                for (const auto& pt : dml::roc_points(sc, tr)) {
                    fpr.push_back(pt.fpr);
                    tpr.push_back(pt.tpr);
                }
                return std::make_pair(fpr, tpr);
            }();
            dml::write_text_file(run_dir / ("roc_" + stem + ".svg"),
                                 svg_line_plot("ROC " + stem, {pts}, {"steelblue"}));
        }
        bool better = !best || (!dml::is_missing(cell.mean.roc_auc) &&
                                (dml::is_missing(best->mean.roc_auc) ||
                                 cell.mean.roc_auc > best->mean.roc_auc));
        if (better) best = &cell;
    }

    // Top-25 weight importances for the best cell, refit on the full corpus.
    if (best && best->strategy != dml::Strategy::VoteHard &&
        best->strategy != dml::Strategy::VoteSoft) {
        auto fm = dml::featurize_corpus(manifest, dml::default_catalog(), workers);
        std::vector<std::size_t> all_rows(fm.rows());
        std::iota(all_rows.begin(), all_rows.end(), 0);
        dml::SelectionMode mode = config.selection == dml::SelectionMode::None
                                      ? dml::SelectionMode::None
                                      : dml::SelectionMode::Global;
        auto sel = dml::detail::select_for_rows(fm, all_rows, mode, config.boruta,
                                                dml::seed_combine(seed, 0xB2));
        std::vector<dml::Block> blocks;
        for (dml::Modality m : best->combo.modalities)
            blocks.push_back(dml::detail::make_block(fm, m, sel.selected.at(m), all_rows));
        std::vector<int> y;
        for (auto l : fm.labels) y.push_back(l == dml::Label::Deceptive ? 1 : -1);
        dml::TrainOptions opt = config.train;
        opt.seed = dml::seed_combine(seed, 0x1417);
        auto model = dml::train_strategy(best->strategy, blocks, y, opt);
        dml::write_text_file(run_dir / "importance.csv",
                             dml::importance_csv(dml::svm_weight_importance(model, 25)));
    }

    std::cout << "run directory: " << run_dir.string() << "\n";
    std::cout << report.cells.size() << " cells x " << config.k * config.repeats << " folds\n";
    if (best)
        std::cout << "best cell: " << dml::strategy_name(best->strategy) << " on "
                  << best->combo.name() << " (mean roc_auc "
                  << dml::fmt_double(best->mean.roc_auc) << ")\n";
    return kExitOk;
}

int cmd_analyze(const CorpusFlags& corpus_flags, std::uint64_t seed, const std::string& out,
                int grid_points, bool svg) {
    auto manifest = resolve_corpus(corpus_flags, seed);
    auto analysis = dml::affect_group_analysis(manifest, grid_points);
    fs::create_directories(out);

    std::ostringstream table;
    table << "channel,stat,deceptive_mean,truthful_mean,welch_t,welch_df,welch_p\n";
    for (const auto& c : analysis.contrasts)
        table << c.channel << "," << c.stat << "," << dml::fmt_double(c.deceptive_mean) << ","
              << dml::fmt_double(c.truthful_mean) << "," << dml::fmt_double(c.welch.statistic)
              << "," << dml::fmt_double(c.welch.degrees_of_freedom) << ","
              << dml::fmt_double(c.welch.p_value) << "\n";
    dml::write_text_file(fs::path(out) / "affect_contrasts.csv", table.str());

    for (const auto& panel : analysis.panels) {
        std::ostringstream csv;
        csv << "class,x,density\n";
        for (std::size_t i = 0; i < panel.deceptive.grid.size(); ++i)
            csv << "deceptive," << dml::fmt_double(panel.deceptive.grid[i]) << ","
                << dml::fmt_double(panel.deceptive.density[i]) << "\n";
        for (std::size_t i = 0; i < panel.truthful.grid.size(); ++i)
            csv << "truthful," << dml::fmt_double(panel.truthful.grid[i]) << ","
                << dml::fmt_double(panel.truthful.density[i]) << "\n";
        dml::write_text_file(fs::path(out) / ("kde_" + panel.name + ".csv"), csv.str());
        if (svg)
            dml::write_text_file(
                fs::path(out) / ("kde_" + panel.name + ".svg"),
                svg_line_plot("KDE " + panel.name,
                              {{panel.deceptive.grid, panel.deceptive.density},
                               {panel.truthful.grid, panel.truthful.density}},
                              {"firebrick", "steelblue"}));
    }
    std::cout << analysis.contrasts.size() << " contrasts, " << analysis.panels.size()
              << " KDE panels written to " << out << "\n";
    return kExitOk;
}

int cmd_report(const std::string& run_dir) {
    fs::path path = fs::path(run_dir) / "report.json";
    if (!fs::exists(path)) throw std::runtime_error("no report.json under " + run_dir);
    json j = json::parse(dml::read_text_file(path));
    std::printf("%-12s %-28s %9s %9s %9s %9s\n", "strategy", "combo", "roc_auc", "pr_auc",
                "accuracy", "wf1");
    for (const auto& cell : j.at("cells")) {
        const auto& m = cell.at("mean");
        auto num = [&](const char* key) {
            return m.at(key).is_null() ? std::string("MISSING")
                                       : dml::fmt_double(m.at(key).get<double>()).substr(0, 9);
        };
        std::printf("%-12s %-28s %9s %9s %9s %9s\n",
                    cell.at("strategy").get<std::string>().c_str(),
                    cell.at("combo").get<std::string>().c_str(), num("roc_auc").c_str(),
                    num("pr_auc").c_str(), num("accuracy").c_str(), num("weighted_f1").c_str());
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deceptml: multimodal deception-detection pipeline"};
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    std::string out = "out";
    int workers = 0;
    std::string config_path;
    auto add_globals = [&](CLI::App* cmd) {
        cmd->add_option("--seed", seed, "Random seed");
        cmd->add_option("--out", out, "Output directory");
        cmd->add_option("--workers", workers, "Worker threads (0 = all cores)");
        cmd->add_option("--config", config_path, "JSON file mirroring the flags");
    };

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
    dml::SyntheticSpec spec;
    add_globals(synth);
    auto* videos_opt = synth->add_option("--videos", spec.n_videos, "Total videos");
    auto* truthful_opt = synth->add_option("--truthful", spec.n_truthful, "Truthful videos");
    auto* deceptive_opt = synth->add_option("--deceptive", spec.n_deceptive, "Deceptive videos");
    auto* speakers_opt = synth->add_option("--speakers", spec.n_speakers, "Speakers");
    synth->add_option("--frames", spec.stream_length_frames, "Frames per stream");
    synth->add_option("--fps", spec.frames_per_second, "Frames per second");
    synth->add_option("--snr-affect", spec.snr_affect, "Affect signal strength");
    synth->add_option("--snr-visual", spec.snr_visual, "Visual signal strength");
    synth->add_option("--snr-vocal", spec.snr_vocal, "Vocal signal strength");
    synth->add_option("--snr-verbal", spec.snr_verbal, "Verbal signal strength");

    // featurize
    auto* featurize = app.add_subcommand("featurize", "Extract the feature matrix");
    CorpusFlags feat_corpus;
    std::string catalog_path;
    add_globals(featurize);
    add_corpus_flags(featurize, feat_corpus);
    featurize->add_option("--catalog", catalog_path, "Attribute catalog JSON (default: built-in)");

    // select
    auto* select = app.add_subcommand("select", "Boruta feature selection on a corpus");
    CorpusFlags sel_corpus;
    dml::BorutaConfig sel_boruta;
    sel_boruta.max_iterations = 100;
    add_globals(select);
    add_corpus_flags(select, sel_corpus);
    select->add_option("--iterations", sel_boruta.max_iterations, "Boruta iterations");
    select->add_option("--alpha", sel_boruta.alpha, "Boruta significance level");
    select->add_option("--trees", sel_boruta.forest.n_trees, "Forest size");

    // run
    auto* run = app.add_subcommand("run", "Cross-validated fusion experiment");
    CorpusFlags run_corpus;
    dml::RunConfig run_config;
    run_config.boruta.max_iterations = 100;
    std::vector<std::string> strategy_names, combo_names;
    std::string selection_name = "per_fold";
    bool quick = false, svg = false;
    add_globals(run);
    add_corpus_flags(run, run_corpus);
    run->add_option("--strategies", strategy_names, "Strategies (comma-separated)")
        ->delimiter(',');
    run->add_option("--combos", combo_names,
                    "Modality combos, e.g. affect,visual,vocal (repeat flag for several)")
        ->take_all();
    run->add_option("--selection", selection_name, "none | per_fold | global");
    run->add_option("--iterations", run_config.boruta.max_iterations, "Boruta iterations");
    run->add_option("--alpha", run_config.boruta.alpha, "Boruta significance level");
    run->add_option("--trees", run_config.boruta.forest.n_trees, "Forest size");
    run->add_option("--k", run_config.k, "Folds");
    run->add_option("--repeats", run_config.repeats, "Cross-validation repeats");
    run->add_option("--estimators", run_config.train.n_estimators, "Bagging/AdaBoost rounds");
    run->add_flag("--quick", quick, "No selection, unimodal cells only");
    run->add_flag("--svg", svg, "Also emit SVG line plots");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Affect group statistics and KDEs");
    CorpusFlags ana_corpus;
    int grid_points = 512;
    bool ana_svg = false;
    add_globals(analyze);
    add_corpus_flags(analyze, ana_corpus);
    analyze->add_option("--grid-points", grid_points, "KDE grid resolution");
    analyze->add_flag("--svg", ana_svg, "Also emit SVG line plots");

    // report
    auto* report = app.add_subcommand("report", "Print the summary table of a run directory");
    std::string report_dir;
    report->add_option("--run", report_dir, "Run directory")->required();

    try {
        app.parse(argc, argv);
        for (auto* cmd : {synth, featurize, select, run, analyze, report})
            if (cmd->parsed()) apply_config_file(cmd, config_path);

        if (synth->parsed())
            return cmd_synth(seed, out, spec, videos_opt->count() > 0,
                             truthful_opt->count() > 0 || deceptive_opt->count() > 0,
                             speakers_opt->count() > 0);
        if (featurize->parsed()) return cmd_featurize(feat_corpus, seed, out, catalog_path, workers);
        if (select->parsed()) return cmd_select(sel_corpus, seed, out, sel_boruta, workers);
        if (run->parsed()) {
            if (!strategy_names.empty()) {
                run_config.strategies.clear();
                for (const auto& s : strategy_names)
                    run_config.strategies.push_back(dml::parse_strategy(s));
            }
            for (const auto& c : combo_names) {
                std::vector<dml::Modality> mods;
                std::stringstream ss(c);
                std::string tok;
                while (std::getline(ss, tok, ',')) mods.push_back(dml::parse_modality(tok));
                run_config.combos.push_back(dml::make_combo(mods));
            }
            run_config.selection = dml::parse_selection_mode(selection_name);
            return cmd_run(run_corpus, seed, out, workers, run_config, quick, svg);
        }
        if (analyze->parsed()) return cmd_analyze(ana_corpus, seed, out, grid_points, ana_svg);
        if (report->parsed()) return cmd_report(report_dir);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
