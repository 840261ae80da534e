#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "dml/fusion.hpp"

using namespace dml;

namespace {

// Two well-separated Gaussian blobs per block, one block per modality.
std::vector<Block> make_blocks(int n, std::vector<Modality> mods, double effect, unsigned seed,
                               int cols_per_block = 3) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<Block> blocks;
    for (std::size_t b = 0; b < mods.size(); ++b) {
        Block blk;
        blk.modality = mods[b];
        blk.X = Mat(n, cols_per_block);
        for (int c = 0; c < cols_per_block; ++c)
            blk.feature_names.push_back(std::string(modality_name(mods[b])) + ":f" +
                                        std::to_string(c));
        for (int i = 0; i < n; ++i)
            for (int c = 0; c < cols_per_block; ++c)
                blk.X.at(i, c) = noise(gen) + (i % 2 ? effect : 0.0);
        blocks.push_back(std::move(blk));
    }
    return blocks;
}

std::vector<int> make_labels(int n) {
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) y[i] = i % 2 ? 1 : -1;
    return y;
}

// A hand-built pipeline with identity standardization: decision(x) = w.x + b.
SvmPipeline manual_pipeline(std::vector<double> w, double b) {
    SvmPipeline p;
    p.standardizer.means.assign(w.size(), 0.0);
    p.standardizer.stds.assign(w.size(), 1.0);
    p.model.weights = std::move(w);
    p.model.bias = b;
    p.platt = {-1.0, 0.0};  // probability = 1/(1+exp(-f)), monotone increasing in f
    for (std::size_t c = 0; c < p.model.weights.size(); ++c)
        p.feature_names.push_back("f" + std::to_string(c));
    return p;
}

}  // namespace

TEST_CASE("combo enumeration: counts, canonical order, names") {
    std::vector<Modality> all = {Modality::Verbal, Modality::Affect, Modality::Vocal,
                                 Modality::Visual};
    auto combos = enumerate_combos(all);
    CHECK(combos.size() == 11);  // 2^4 - 4 - 1
    // sorted by size then lexicographic modality order
    CHECK(combos.front().modalities.size() == 2);
    CHECK(combos.back().modalities.size() == 4);
    CHECK(combos.front().name() == "affect+visual");
    CHECK(combos.back().name() == "affect+visual+vocal+verbal");
    int pairs = 0, triples = 0, quads = 0;
    for (const auto& c : combos) {
        if (c.modalities.size() == 2) ++pairs;
        if (c.modalities.size() == 3) ++triples;
        if (c.modalities.size() == 4) ++quads;
    }
    CHECK(pairs == 6);
    CHECK(triples == 4);
    CHECK(quads == 1);

    std::vector<Modality> three = {Modality::Affect, Modality::Visual, Modality::Vocal};
    CHECK(enumerate_combos(three).size() == 4);  // 2^3 - 3 - 1
    std::vector<Modality> one = {Modality::Affect};
    CHECK_THROWS_AS((void)enumerate_combos(one), std::invalid_argument);
}

TEST_CASE("make_combo sorts, dedupes, rejects empty") {
    auto c = make_combo({Modality::Vocal, Modality::Affect, Modality::Vocal});
    REQUIRE(c.modalities.size() == 2);
    CHECK(c.modalities[0] == Modality::Affect);
    CHECK(c.modalities[1] == Modality::Vocal);
    CHECK(c.name() == "affect+vocal");
    CHECK_THROWS_AS((void)make_combo({}), std::invalid_argument);
}

TEST_CASE("strategy names round-trip through the parser") {
    for (Strategy s : {Strategy::Unimodal, Strategy::Early, Strategy::VoteHard,
                       Strategy::VoteSoft, Strategy::StackHard, Strategy::StackSoft,
                       Strategy::HybridHard, Strategy::HybridSoft, Strategy::Bagging,
                       Strategy::AdaBoost})
        CHECK(parse_strategy(strategy_name(s)) == s);
    CHECK_THROWS_AS((void)parse_strategy("nonsense"), std::invalid_argument);
}

TEST_CASE("early fusion on a single block equals the unimodal model") {
    auto blocks = make_blocks(40, {Modality::Visual}, 1.2, 11);
    auto y = make_labels(40);
    TrainOptions opt;
    opt.seed = 5;
    auto uni = train_unimodal(blocks[0], y, opt);
    auto early = train_early_fusion(blocks, y, opt);
    REQUIRE(uni.bases.size() == 1);
    REQUIRE(early.bases.size() == 1);
    CHECK(uni.bases[0].C == early.bases[0].C);
    REQUIRE(uni.bases[0].model.weights.size() == early.bases[0].model.weights.size());
    for (std::size_t c = 0; c < uni.bases[0].model.weights.size(); ++c)
        CHECK(uni.bases[0].model.weights[c] == early.bases[0].model.weights[c]);
    CHECK(uni.bases[0].model.bias == early.bases[0].model.bias);
    auto pu = predict(uni, blocks);
    auto pe = predict(early, blocks);
    for (std::size_t i = 0; i < pu.scores.size(); ++i) {
        CHECK(pu.scores[i] == pe.scores[i]);
        CHECK(pu.preds[i] == pe.preds[i]);
    }
}

TEST_CASE("hard vote arithmetic matches a hand-built majority oracle") {
    // three bases over three 1-column blocks, decision(x) = x
    FusionModel m;
    m.strategy = Strategy::VoteHard;
    m.combo = make_combo({Modality::Affect, Modality::Visual, Modality::Vocal});
    for (int b = 0; b < 3; ++b) m.bases.push_back(manual_pipeline({1.0}, 0.0));

    std::vector<Block> blocks(3);
    blocks[0].modality = Modality::Affect;
    blocks[1].modality = Modality::Visual;
    blocks[2].modality = Modality::Vocal;
    // row 0: votes (+,+,-) -> +1 ; row 1: votes (-,-,+) -> -1
    double vals[2][3] = {{2.0, 0.5, -4.0}, {-1.0, -0.5, 0.25}};
    for (int b = 0; b < 3; ++b) {
        blocks[b].X = Mat(2, 1);
        blocks[b].feature_names = {"f0"};
        for (int i = 0; i < 2; ++i) blocks[b].X.at(i, 0) = vals[i][b];
    }
    auto p = predict(m, blocks);
    CHECK(p.preds[0] == 1);
    CHECK(p.preds[1] == -1);
    CHECK(p.scores[0] == doctest::Approx((2.0 + 0.5 - 4.0) / 3.0).epsilon(1e-12));
    CHECK(p.scores[1] == doctest::Approx((-1.0 - 0.5 + 0.25) / 3.0).epsilon(1e-12));
}

TEST_CASE("hard vote with an even panel breaks ties by mean decision value") {
    FusionModel m;
    m.strategy = Strategy::VoteHard;
    m.combo = make_combo({Modality::Affect, Modality::Visual});
    m.bases.push_back(manual_pipeline({1.0}, 0.0));
    m.bases.push_back(manual_pipeline({1.0}, 0.0));
    std::vector<Block> blocks(2);
    blocks[0].modality = Modality::Affect;
    blocks[1].modality = Modality::Visual;
    double vals[2][2] = {{3.0, -1.0}, {0.5, -2.0}};  // ties: means +1.0 and -0.75
    for (int b = 0; b < 2; ++b) {
        blocks[b].X = Mat(2, 1);
        blocks[b].feature_names = {"f0"};
        for (int i = 0; i < 2; ++i) blocks[b].X.at(i, 0) = vals[i][b];
    }
    auto p = predict(m, blocks);
    CHECK(p.preds[0] == 1);
    CHECK(p.preds[1] == -1);
}

TEST_CASE("soft vote averages Platt probabilities and thresholds at 0.5") {
    FusionModel m;
    m.strategy = Strategy::VoteSoft;
    m.combo = make_combo({Modality::Affect, Modality::Visual});
    m.bases.push_back(manual_pipeline({1.0}, 0.0));
    m.bases.push_back(manual_pipeline({1.0}, 0.0));
    std::vector<Block> blocks(2);
    blocks[0].modality = Modality::Affect;
    blocks[1].modality = Modality::Visual;
    blocks[0].X = Mat(1, 1);
    blocks[1].X = Mat(1, 1);
    blocks[0].feature_names = {"f0"};
    blocks[1].feature_names = {"f0"};
    blocks[0].X.at(0, 0) = 2.0;
    blocks[1].X.at(0, 0) = -1.0;
    auto p = predict(m, blocks);
    double p0 = 1.0 / (1.0 + std::exp(-2.0));
    double p1 = 1.0 / (1.0 + std::exp(1.0));
    CHECK(p.scores[0] == doctest::Approx((p0 + p1) / 2.0).epsilon(1e-12));
    CHECK(p.preds[0] == ((p0 + p1) / 2.0 >= 0.5 ? 1 : -1));
}

TEST_CASE("stacking trains one base per modality plus a meta model") {
    auto blocks = make_blocks(60, {Modality::Affect, Modality::Vocal}, 1.0, 3);
    auto y = make_labels(60);
    TrainOptions opt;
    opt.seed = 9;
    for (bool soft : {false, true}) {
        auto m = train_strategy(soft ? Strategy::StackSoft : Strategy::StackHard, blocks, y, opt);
        CHECK(m.bases.size() == 2);
        REQUIRE(m.meta.has_value());
        CHECK(m.meta->feature_names.size() == 2);
        auto p = predict(m, blocks);
        REQUIRE(p.preds.size() == 60);
        int correct = 0;
        for (int i = 0; i < 60; ++i) correct += p.preds[i] == y[i];
        CHECK(correct > 45);  // signal is strong; stacking must pick it up
    }
}

TEST_CASE("hybrid meta model sees raw features plus one base output per modality") {
    auto blocks = make_blocks(50, {Modality::Affect, Modality::Visual}, 1.0, 17, 2);
    auto y = make_labels(50);
    TrainOptions opt;
    opt.seed = 21;
    auto m = train_strategy(Strategy::HybridSoft, blocks, y, opt);
    CHECK(m.bases.size() == 2);
    REQUIRE(m.meta.has_value());
    CHECK(m.meta->feature_names.size() == 2 * 2 + 2);  // raw columns + base outputs
    auto p = predict(m, blocks);
    CHECK(p.preds.size() == 50);
}

TEST_CASE("bagging trains n_estimators bases and decides by majority") {
    auto blocks = make_blocks(40, {Modality::Affect}, 1.5, 23);
    auto y = make_labels(40);
    TrainOptions opt;
    opt.seed = 4;
    opt.n_estimators = 7;
    auto m = train_strategy(Strategy::Bagging, blocks, y, opt);
    CHECK(m.bases.size() == 7);
    auto p = predict(m, blocks);
    int correct = 0;
    for (int i = 0; i < 40; ++i) correct += p.preds[i] == y[i];
    CHECK(correct > 32);
}

TEST_CASE("adaboost: separable data stops after one near-certain round") {
    auto blocks = make_blocks(30, {Modality::Affect}, 8.0, 31);
    auto y = make_labels(30);
    TrainOptions opt;
    opt.seed = 2;
    opt.n_estimators = 10;
    auto m = train_strategy(Strategy::AdaBoost, blocks, y, opt);
    REQUIRE(m.bases.size() == 1);  // perfect first round terminates boosting
    REQUIRE(m.alphas.size() == 1);
    CHECK(m.alphas[0] == doctest::Approx(std::log(1e12)).epsilon(1e-12));
    auto p = predict(m, blocks);
    for (int i = 0; i < 30; ++i) CHECK(p.preds[i] == y[i]);
}

TEST_CASE("adaboost training error respects the exponential bound") {
    // err_train <= prod_m 2*sqrt(eps_m (1 - eps_m)); eps recovered from alpha
    auto blocks = make_blocks(80, {Modality::Affect, Modality::Visual}, 0.6, 41, 2);
    auto y = make_labels(80);
    TrainOptions opt;
    opt.seed = 13;
    opt.n_estimators = 12;
    auto m = train_strategy(Strategy::AdaBoost, blocks, y, opt);
    REQUIRE(!m.bases.empty());
    REQUIRE(m.alphas.size() == m.bases.size());
    double bound = 1.0;
    bool standard_rounds = true;
    for (double a : m.alphas) {
        if (a >= std::log(1e12) - 1e-9) {  // perfect round: bound collapses to 0
            bound = 0.0;
            break;
        }
        if (a == 1.0 && m.alphas.size() == 1) standard_rounds = false;  // fallback model
        double eps = 1.0 / (1.0 + std::exp(a));
        bound *= 2.0 * std::sqrt(eps * (1.0 - eps));
    }
    if (standard_rounds) {
        auto p = predict(m, blocks);
        double err = 0.0;
        for (int i = 0; i < 80; ++i) err += p.preds[i] != y[i];
        err /= 80.0;
        CHECK(err <= bound + 1e-9);
    }
}

TEST_CASE("train_strategy validates block counts") {
    auto two = make_blocks(20, {Modality::Affect, Modality::Visual}, 1.0, 5);
    auto one = make_blocks(20, {Modality::Affect}, 1.0, 5);
    auto y = make_labels(20);
    TrainOptions opt;
    CHECK_THROWS_AS((void)train_strategy(Strategy::Unimodal, two, y, opt),
                    std::invalid_argument);
    CHECK_NOTHROW((void)train_strategy(Strategy::Unimodal, one, y, opt));
}

TEST_CASE("svm weight importance ranks the separating feature first") {
    // column 0 carries all the signal, column 1 is pure noise
    std::mt19937 gen(77);
    std::normal_distribution<double> noise(0.0, 1.0);
    Block blk;
    blk.modality = Modality::Affect;
    blk.X = Mat(60, 2);
    blk.feature_names = {"affect:signal", "affect:noise"};
    std::vector<int> y(60);
    for (int i = 0; i < 60; ++i) {
        y[i] = i % 2 ? 1 : -1;
        blk.X.at(i, 0) = noise(gen) + (y[i] > 0 ? 2.0 : 0.0);
        blk.X.at(i, 1) = noise(gen);
    }
    TrainOptions opt;
    opt.seed = 1;
    auto m = train_unimodal(blk, y, opt);
    auto imp = svm_weight_importance(m, 10);
    REQUIRE(imp.ranked.size() == 2);
    CHECK(imp.ranked[0].feature == "affect:signal");
    CHECK(imp.ranked[0].mean_abs_weight > imp.ranked[1].mean_abs_weight);

    auto top1 = svm_weight_importance(m, 1);
    REQUIRE(top1.ranked.size() == 1);
    CHECK(top1.ranked[0].feature == "affect:signal");

    FusionModel vote;
    vote.strategy = Strategy::VoteHard;
    CHECK_THROWS_AS((void)svm_weight_importance(vote), std::invalid_argument);

    auto csv = importance_csv(top1);
    CHECK(csv.rfind("feature,mean_abs_weight\naffect:signal,", 0) == 0);
}

TEST_CASE("stacking importance reports the meta model weights only") {
    auto blocks = make_blocks(40, {Modality::Affect, Modality::Vocal}, 1.2, 8);
    auto y = make_labels(40);
    TrainOptions opt;
    opt.seed = 6;
    auto m = train_strategy(Strategy::StackSoft, blocks, y, opt);
    auto imp = svm_weight_importance(m);
    CHECK(imp.ranked.size() == 2);  // one meta weight per modality
}

TEST_CASE("training is deterministic for a fixed seed") {
    auto blocks = make_blocks(50, {Modality::Affect, Modality::Visual}, 0.8, 19);
    auto y = make_labels(50);
    for (Strategy s : {Strategy::Early, Strategy::VoteSoft, Strategy::StackHard,
                       Strategy::HybridSoft, Strategy::Bagging, Strategy::AdaBoost}) {
        TrainOptions opt;
        opt.seed = 99;
        opt.n_estimators = 5;
        auto a = train_strategy(s, blocks, y, opt);
        auto b = train_strategy(s, blocks, y, opt);
        auto pa = predict(a, blocks);
        auto pb = predict(b, blocks);
        REQUIRE(pa.scores.size() == pb.scores.size());
        for (std::size_t i = 0; i < pa.scores.size(); ++i) {
            CHECK(pa.scores[i] == pb.scores[i]);
            CHECK(pa.preds[i] == pb.preds[i]);
        }
    }
}
