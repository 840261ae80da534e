#include <doctest.h>

#include <random>
#include <vector>

#include "dml/forest.hpp"
#include "dml/select.hpp"

using namespace dml;

namespace {

// Planted-signal dataset: the first n_signal columns differ between classes
// by `effect` standard deviations, the rest are pure noise.
struct Planted {
    Mat X;
    std::vector<int> y;
};

Planted make_planted(int n, int n_signal, int n_noise, double effect, unsigned seed) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    Planted p{Mat(n, n_signal + n_noise), std::vector<int>(n)};
    for (int i = 0; i < n; ++i) {
        p.y[i] = i % 2 ? 1 : -1;
        for (int c = 0; c < n_signal; ++c)
            p.X.at(i, c) = noise(gen) + (p.y[i] > 0 ? effect : 0.0);
        for (int c = n_signal; c < n_signal + n_noise; ++c) p.X.at(i, c) = noise(gen);
    }
    return p;
}

}  // namespace

TEST_CASE("degeneracy mask drops missing and constant columns") {
    Mat X(4, 3);
    for (std::size_t r = 0; r < 4; ++r) {
        X.at(r, 0) = static_cast<double>(r);  // fine
        X.at(r, 1) = 7.0;                     // constant
        X.at(r, 2) = static_cast<double>(r) * 2.0;
    }
    X.at(2, 2) = kMissing;
    auto mask = fit_degeneracy_mask(X);
    CHECK(mask.fates[0] == ColumnFate::Keep);
    CHECK(mask.fates[1] == ColumnFate::DropZeroVariance);
    CHECK(mask.fates[2] == ColumnFate::DropHasMissing);
    auto kept = mask.kept_indices();
    REQUIRE(kept.size() == 1);
    CHECK(kept[0] == 0);
    auto Xk = apply_mask(mask, X);
    CHECK(Xk.n_cols == 1);
    CHECK(Xk.at(3, 0) == 3.0);
}

TEST_CASE("forest importance is zero for a constant-included permuted setting") {
    // a feature identical for both classes gets (near) zero importance,
    // a perfectly separating feature dominates
    int n = 60;
    Mat X(n, 2);
    std::vector<int> y(n);
    std::mt19937 gen(3);
    std::normal_distribution<double> noise(0.0, 0.1);
    for (int i = 0; i < n; ++i) {
        y[i] = i % 2 ? 1 : -1;
        X.at(i, 0) = y[i] + noise(gen);  // separating
        X.at(i, 1) = noise(gen);         // uninformative
    }
    ForestConfig cfg;
    cfg.n_trees = 64;
    cfg.seed = 5;
    auto imp = forest_importance(X, y, cfg);
    CHECK(imp[0] > 4.0 * imp[1]);
    CHECK(imp[0] > 0.0);
}

TEST_CASE("forest importance is deterministic and parallel-invariant") {
    auto planted = make_planted(50, 3, 10, 1.0, 11);
    ForestConfig cfg;
    cfg.n_trees = 32;
    cfg.seed = 9;
    cfg.workers = 1;
    auto a = forest_importance(planted.X, planted.y, cfg);
    cfg.workers = 4;
    auto b = forest_importance(planted.X, planted.y, cfg);
    CHECK(a == b);
}

TEST_CASE("Boruta confirms planted features and rejects noise") {
    auto planted = make_planted(120, 5, 40, 1.5, 21);
    BorutaConfig cfg;
    cfg.max_iterations = 60;
    cfg.forest.n_trees = 128;
    cfg.seed = 2;
    auto report = boruta_select(planted.X, planted.y, cfg);
    int confirmed_signal = 0, confirmed_noise = 0;
    for (std::size_t c = 0; c < report.status.size(); ++c) {
        if (report.status[c] == FeatureStatus::Confirmed) {
            if (c < 5)
                ++confirmed_signal;
            else
                ++confirmed_noise;
        }
    }
    CHECK(confirmed_signal >= 4);
    CHECK(confirmed_noise <= 1);
}

TEST_CASE("Boruta on pure noise confirms nothing") {
    auto planted = make_planted(80, 0, 30, 0.0, 33);
    BorutaConfig cfg;
    cfg.max_iterations = 40;
    cfg.forest.n_trees = 64;
    cfg.seed = 4;
    auto report = boruta_select(planted.X, planted.y, cfg);
    CHECK(report.confirmed_indices().empty());
}

TEST_CASE("alpha approaching zero keeps everything tentative") {
    auto planted = make_planted(60, 3, 10, 2.0, 13);
    BorutaConfig cfg;
    cfg.max_iterations = 20;
    cfg.alpha = 1e-12;
    cfg.forest.n_trees = 64;
    cfg.seed = 6;
    auto report = boruta_select(planted.X, planted.y, cfg);
    for (auto s : report.status) CHECK(s == FeatureStatus::Tentative);
}

TEST_CASE("Boruta is deterministic given the seed") {
    auto planted = make_planted(60, 2, 15, 1.2, 40);
    BorutaConfig cfg;
    cfg.max_iterations = 15;
    cfg.forest.n_trees = 32;
    cfg.seed = 10;
    auto a = boruta_select(planted.X, planted.y, cfg);
    auto b = boruta_select(planted.X, planted.y, cfg);
    CHECK(a.status == b.status);
    CHECK(a.hits == b.hits);
}

TEST_CASE("selection report CSV lists one row per feature") {
    auto planted = make_planted(40, 1, 4, 2.0, 50);
    BorutaConfig cfg;
    cfg.max_iterations = 10;
    cfg.forest.n_trees = 32;
    cfg.seed = 1;
    auto report = boruta_select(planted.X, planted.y, cfg);
    std::vector<FeatureName> names;
    for (int c = 0; c < 5; ++c)
        names.push_back({Modality::Affect, "valence", "col" + std::to_string(c)});
    auto csv = selection_report_csv(report, names);
    CHECK(csv.find("feature,status,hits,iterations") == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);  // header + 5 rows
}

TEST_CASE("config validation") {
    BorutaConfig cfg;
    cfg.alpha = 0.0;
    CHECK_THROWS(cfg.check());
    cfg.alpha = 0.05;
    cfg.max_iterations = 0;
    CHECK_THROWS(cfg.check());
}
