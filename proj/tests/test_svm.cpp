#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "dml/svm.hpp"

#include "svm_oracle.hpp"

using namespace dml;

namespace {

Mat make_mat(const std::vector<std::vector<double>>& rows) {
    Mat m(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) m.at(r, c) = rows[r][c];
    return m;
}

// moved to svm_oracle.hpp
using svm_oracle::oracle_dual_optimum;

}  // namespace

TEST_CASE("dual objective matches the brute-force QP oracle on random datasets") {
    std::mt19937 gen(99);
    std::uniform_real_distribution<double> val(-2.0, 2.0);
    std::uniform_int_distribution<int> n_dist(2, 8), p_dist(1, 3);
    std::uniform_real_distribution<double> c_dist(0.05, 10.0);
    int tested = 0;
    for (int trial = 0; trial < 200 && tested < 100; ++trial) {
        std::size_t n = n_dist(gen), p = p_dist(gen);
        Mat X(n, p);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = (gen() & 1) ? 1 : -1;
            for (std::size_t c = 0; c < p; ++c) X.at(i, c) = val(gen);
        }
        bool pos = false, neg = false;
        for (int v : y) (v > 0 ? pos : neg) = true;
        if (!pos || !neg) continue;
        ++tested;
        SvmConfig cfg;
        cfg.C = c_dist(gen);
        cfg.tolerance = 1e-10;
        cfg.max_iterations = 2000000;
        cfg.seed = trial;
        auto fit = train_svm_full(X, y, cfg);
        double got = dual_objective(X, y, fit.alpha, fit.model);
        double want = oracle_dual_optimum(X, y, cfg.C, {});
        INFO("trial=" << trial << " n=" << n << " p=" << p << " C=" << cfg.C);
        CHECK(got == doctest::Approx(want).epsilon(1e-6).scale(1));
    }
    CHECK(tested == 100);
}

TEST_CASE("separable data reaches zero training error") {
    Mat X = make_mat({{2.0, 0.1}, {2.5, -0.3}, {3.0, 0.2}, {-2.0, 0.0}, {-2.2, 0.4}, {-3.1, -0.2}});
    std::vector<int> y = {1, 1, 1, -1, -1, -1};
    SvmConfig cfg;
    cfg.C = 10.0;
    cfg.tolerance = 1e-8;
    auto model = train_svm(X, y, cfg);
    for (std::size_t i = 0; i < X.n_rows; ++i)
        CHECK(predict_sign(decision_value(model, X.row(i))) == y[i]);
}

TEST_CASE("integer sample weights equal row duplication") {
    std::mt19937 gen(5);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    Mat X(6, 2);
    std::vector<int> y = {1, -1, 1, -1, 1, -1};
    for (auto& v : X.data) v = val(gen);
    std::vector<double> w = {2.0, 1.0, 3.0, 1.0, 1.0, 2.0};

    Mat Xdup(10, 2);
    std::vector<int> ydup;
    std::size_t r = 0;
    for (std::size_t i = 0; i < 6; ++i)
        for (int k = 0; k < static_cast<int>(w[i]); ++k) {
            for (std::size_t c = 0; c < 2; ++c) Xdup.at(r, c) = X.at(i, c);
            ydup.push_back(y[i]);
            ++r;
        }
    SvmConfig weighted;
    weighted.C = 1.0;
    weighted.tolerance = 1e-10;
    weighted.max_iterations = 500000;
    weighted.sample_weights = w;
    SvmConfig plain = weighted;
    plain.sample_weights.clear();

    auto mw = train_svm(X, y, weighted);
    auto md = train_svm(Xdup, ydup, plain);
    for (std::size_t c = 0; c < 2; ++c)
        CHECK(mw.weights[c] == doctest::Approx(md.weights[c]).epsilon(1e-6).scale(1));
    CHECK(mw.bias == doctest::Approx(md.bias).epsilon(1e-6).scale(1));
}

TEST_CASE("weak duality: dual objective never exceeds the primal") {
    std::mt19937 gen(31);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        Mat X(12, 4);
        for (auto& v : X.data) v = val(gen);
        std::vector<int> y(12);
        for (std::size_t i = 0; i < 12; ++i) y[i] = i % 2 ? 1 : -1;
        SvmConfig cfg;
        cfg.C = 2.0;
        cfg.seed = trial;
        auto fit = train_svm_full(X, y, cfg);
        CHECK(dual_objective(X, y, fit.alpha, fit.model) <=
              primal_objective(X, y, cfg, fit.model) + 1e-9);
    }
}

TEST_CASE("training requires both classes and positive C") {
    Mat X = make_mat({{1.0}, {2.0}});
    std::vector<int> y_same = {1, 1};
    SvmConfig cfg;
    CHECK_THROWS(train_svm(X, y_same, cfg));
    std::vector<int> y = {1, -1};
    cfg.C = 0.0;
    CHECK_THROWS(train_svm(X, y, cfg));
}

TEST_CASE("standardizer closed form and zero-variance handling") {
    Mat X = make_mat({{1.0, 5.0}, {3.0, 5.0}, {5.0, 5.0}});
    auto s = fit_standardizer(X);
    CHECK(s.means[0] == doctest::Approx(3.0));
    CHECK(s.stds[0] == doctest::Approx(std::sqrt(8.0 / 3.0)));
    CHECK(s.means[1] == doctest::Approx(5.0));
    CHECK(s.stds[1] == 1.0);  // zero-variance column divides by 1
    auto Z = apply_standardizer(s, X);
    CHECK(Z.at(0, 0) == doctest::Approx(-2.0 / std::sqrt(8.0 / 3.0)));
    CHECK(Z.at(1, 1) == 0.0);
    // column means 0, population stds 1 after standardization
    auto s2 = fit_standardizer(Z);
    CHECK(s2.means[0] == doctest::Approx(0.0).epsilon(1e-12).scale(1));
    CHECK(s2.stds[0] == doctest::Approx(1.0));
}

TEST_CASE("Platt fit is at a local optimum of the smoothed NLL") {
    std::mt19937 gen(8);
    std::normal_distribution<double> noise(0.0, 0.8);
    std::vector<double> f(60);
    std::vector<int> y(60);
    for (int i = 0; i < 60; ++i) {
        y[i] = i % 2 ? 1 : -1;
        f[i] = 1.2 * y[i] + noise(gen);
    }
    auto p = fit_platt(f, y);
    double base = platt_nll(p, f, y);
    for (double da : {-1e-4, 1e-4})
        for (double db : {-1e-4, 0.0, 1e-4})
            CHECK(platt_nll({p.A + da, p.B + db}, f, y) >= base - 1e-9);
    // well-separated scores give probability increasing with the margin
    CHECK(p.probability(2.0) > p.probability(0.0));
    CHECK(p.probability(0.0) > p.probability(-2.0));
    CHECK(p.probability(3.0) > 0.5);
    CHECK(p.probability(-3.0) < 0.5);
}

TEST_CASE("Platt on uninformative scores yields the smoothed base rate") {
    // all decision values identical: probability must not depend on f
    std::vector<double> f(10, 0.5);
    std::vector<int> y = {1, 1, 1, -1, -1, -1, -1, -1, -1, -1};
    auto p = fit_platt(f, y);
    double prob = p.probability(0.5);
    // NLL optimum at p = mean smoothed target = (3*(4/5) + 7*(1/9)) / 10
    double expect = (3.0 * (4.0 / 5.0) + 7.0 * (1.0 / 9.0)) / 10.0;
    CHECK(prob == doctest::Approx(expect).epsilon(1e-3));
}

TEST_CASE("tune_c ties break toward the smallest C") {
    // trivially separable: every C scores the same, smallest must win
    Mat X = make_mat({{5.0}, {6.0}, {7.0}, {-5.0}, {-6.0}, {-7.0},
                      {5.5}, {6.5}, {7.5}, {-5.5}, {-6.5}, {-7.5}});
    std::vector<int> y = {1, 1, 1, -1, -1, -1, 1, 1, 1, -1, -1, -1};
    double c = tune_c(X, y, std::vector<double>{1.0, 0.01, 100.0}, 3, 4);
    CHECK(c == 0.01);
}

TEST_CASE("linear model JSON round-trip") {
    LinearModel m;
    m.weights = {0.25, -1.5, 3.75};
    m.bias = -0.125;
    auto j = linear_model_to_json(m);
    auto back = linear_model_from_json(j);
    CHECK(back.weights == m.weights);
    CHECK(back.bias == m.bias);
}

TEST_CASE("deterministic training given the same seed") {
    std::mt19937 gen(17);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    Mat X(20, 5);
    for (auto& v : X.data) v = val(gen);
    std::vector<int> y(20);
    for (std::size_t i = 0; i < 20; ++i) y[i] = i % 3 == 0 ? 1 : -1;
    SvmConfig cfg;
    cfg.seed = 77;
    auto a = train_svm(X, y, cfg);
    auto b = train_svm(X, y, cfg);
    CHECK(a.weights == b.weights);
    CHECK(a.bias == b.bias);
}
