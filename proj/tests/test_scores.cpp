#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "ood/errors.hpp"
#include "ood/sampler.hpp"
#include "ood/scores.hpp"
#include "test_util.hpp"

using namespace ood;

TEST_CASE("score method names round trip") {
    for (ScoreMethod m : all_score_methods()) {
        CHECK(parse_score_method(score_method_name(m)) == m);
    }
    CHECK(all_score_methods().size() == 9);
    CHECK(score_method_name(ScoreMethod::SE) == "SE");
    CHECK(score_method_name(ScoreMethod::MaxLogitDet) == "MLE_ML");
    CHECK(score_method_name(ScoreMethod::MaxLogitElv) == "EL_ML");
    CHECK(score_method_name(ScoreMethod::KnnPlusDet) == "MLE_kNN+");
    CHECK(score_method_name(ScoreMethod::KnnPlusElv) == "EL_kNN+");
    CHECK_THROWS_AS(parse_score_method("bogus"), ConfigError);
}

TEST_CASE("softmax") {
    SUBCASE("uniform logits") {
        const auto p = softmax(std::vector<double>{3.0, 3.0, 3.0, 3.0});
        for (double v : p) CHECK(v == doctest::Approx(0.25).epsilon(1e-14));
    }
    SUBCASE("shift invariance") {
        std::mt19937_64 rng(5);
        const auto z = testutil::random_vector(rng, 5, -2, 2);
        auto shifted = z;
        for (double& v : shifted) v += 123.5;
        const auto a = softmax(z);
        const auto b = softmax(shifted);
        for (int i = 0; i < 5; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
    }
    SUBCASE("large logits stay finite") {
        const auto p = softmax(std::vector<double>{1000.0, 0.0});
        CHECK(p[0] == doctest::Approx(1.0));
        CHECK(p[1] == doctest::Approx(0.0));
        CHECK(std::isfinite(p[0]));
    }
}

TEST_CASE("softmax_entropy") {
    SUBCASE("uniform logits hit log K") {
        CHECK(softmax_entropy(std::vector<double>{0.0, 0.0}) ==
              doctest::Approx(std::numbers::ln2).epsilon(1e-14));
        CHECK(softmax_entropy(std::vector<double>{7.0, 7.0, 7.0}) ==
              doctest::Approx(std::log(3.0)).epsilon(1e-14));
    }
    SUBCASE("frozen reference value") {
        // H(softmax([1, 0, -1])), computed independently at high precision.
        CHECK(softmax_entropy(std::vector<double>{1.0, 0.0, -1.0}) ==
              doctest::Approx(0.832395581839938873).epsilon(1e-14));
    }
    SUBCASE("saturated logits give near-zero entropy") {
        CHECK(softmax_entropy(std::vector<double>{60.0, 0.0}) < 1e-12);
        CHECK(softmax_entropy(std::vector<double>{60.0, 0.0}) >= 0.0);
    }
    SUBCASE("bounds hold on random logits") {
        std::mt19937_64 rng(6);
        for (int t = 0; t < 50; ++t) {
            const int k = 2 + static_cast<int>(t % 5);
            const double h = softmax_entropy(testutil::random_vector(rng, k, -4, 4));
            CHECK(h >= 0.0);
            CHECK(h <= std::log(static_cast<double>(k)) + 1e-12);
        }
    }
}

TEST_CASE("max_logit_score orientation") {
    // Higher = more OOD, so confident (large max logit) inputs score lower.
    CHECK(max_logit_score(std::vector<double>{5.0, 0.0}) ==
          doctest::Approx(-5.0));
    CHECK(max_logit_score(std::vector<double>{-1.0, -3.0}) ==
          doctest::Approx(1.0));
    CHECK(max_logit_score(std::vector<double>{5.0, 0.0}) <
          max_logit_score(std::vector<double>{0.5, 0.0}));
}

TEST_CASE("predictive_entropy and mutual_information") {
    SUBCASE("identical rows: PE = row entropy, MI = 0") {
        LogitEnsemble ens{3, {{1.0, 0.0, -1.0}, {1.0, 0.0, -1.0}, {1.0, 0.0, -1.0}}};
        CHECK(predictive_entropy(ens) ==
              doctest::Approx(0.832395581839938873).epsilon(1e-13));
        CHECK(mutual_information(ens) == doctest::Approx(0.0));
        CHECK(mutual_information(ens) >= 0.0);
    }
    SUBCASE("disagreeing confident rows: PE = ln2, MI ~ ln2") {
        LogitEnsemble ens{2, {{60.0, 0.0}, {0.0, 60.0}}};
        CHECK(predictive_entropy(ens) == doctest::Approx(std::numbers::ln2).epsilon(1e-9));
        CHECK(mutual_information(ens) == doctest::Approx(std::numbers::ln2).epsilon(1e-9));
    }
    SUBCASE("0 <= MI <= PE <= log K on random ensembles") {
        std::mt19937_64 rng(7);
        for (int t = 0; t < 200; ++t) {
            const int k = 2 + t % 4;
            const int m = 1 + t % 6;
            LogitEnsemble ens{k, {}};
            for (int i = 0; i < m; ++i)
                ens.rows.push_back(testutil::random_vector(rng, k, -5, 5));
            const double pe = predictive_entropy(ens);
            const double mi = mutual_information(ens);
            CHECK(mi >= 0.0);
            CHECK(mi <= pe + 1e-12);
            CHECK(pe <= std::log(static_cast<double>(k)) + 1e-12);
        }
    }
    SUBCASE("MI matches a direct recomputation") {
        std::mt19937_64 rng(8);
        LogitEnsemble ens{3, {}};
        for (int i = 0; i < 5; ++i)
            ens.rows.push_back(testutil::random_vector(rng, 3, -3, 3));
        double mean_row_entropy = 0.0;
        for (const auto& row : ens.rows) mean_row_entropy += softmax_entropy(row);
        mean_row_entropy /= 5.0;
        CHECK(mutual_information(ens) ==
              doctest::Approx(predictive_entropy(ens) - mean_row_entropy).epsilon(1e-12));
    }
}

TEST_CASE("knn_score and knn_plus_score") {
    // Two well-separated class clusters in 2D logit space.
    std::vector<std::vector<double>> refs = {
        {0.0, 0.0}, {0.1, 0.0}, {0.0, 0.1}, {0.1, 0.1},   // class 0
        {5.0, 5.0}, {5.1, 5.0}, {5.0, 5.1}, {5.1, 5.1},   // class 1
    };
    std::vector<int> labels = {0, 0, 0, 0, 1, 1, 1, 1};
    LogitIndex index(refs, labels);

    SUBCASE("knn_score equals the raw kth distance") {
        const std::vector<double> q = {1.0, 1.0};
        CHECK(knn_score(index, q, 2, false) ==
              doctest::Approx(index.kth_neighbor_distance(q, 2, false)).epsilon(1e-14));
    }
    SUBCASE("knn_plus_score reduces for C = 2") {
        // With two classes the correction is d_class(c*) - d_class(other), so
        // the score is d_knn + d_near - d_far.
        const std::vector<double> q = {0.3, -0.2};
        const double d_knn = index.kth_neighbor_distance(q, 2, false);
        const double d0 = index.kth_neighbor_distance_in_class(q, 2, 0);
        const double d1 = index.kth_neighbor_distance_in_class(q, 2, 1);
        const double near = std::min(d0, d1);
        const double far = std::max(d0, d1);
        CHECK(knn_plus_score(index, q, 2, false) ==
              doctest::Approx(d_knn + near - far).epsilon(1e-12));
    }
    SUBCASE("points between clusters score higher than points inside") {
        const std::vector<double> inside = {0.05, 0.05};
        const std::vector<double> between = {2.5, 2.5};
        CHECK(knn_score(index, between, 2, false) > knn_score(index, inside, 2, false));
        CHECK(knn_plus_score(index, between, 2, false) >
              knn_plus_score(index, inside, 2, false));
    }
    SUBCASE("ties in the argmin class go to the smallest class id") {
        // Symmetric reference set: the query is equidistant from both classes.
        LogitIndex sym({{-1.0}, {1.0}}, {0, 1});
        // c* = 0 by the tie rule; the score is d_knn + d0 - d1 = 1 + 1 - 1 = 1.
        CHECK(knn_plus_score(sym, std::vector<double>{0.0}, 1, false) ==
              doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("score_dataset") {
    // A tiny trained-free setup: fixed point weights, a collapsed posterior
    // around them, and indices built from a few reference rows.
    NetworkArch arch{2, {}, 2};
    PointWeights w(arch, {1.0, 0.0, 0.0, 1.0, 0.0, 0.0});  // identity logits
    VariationalPosterior collapsed(arch, w.values, std::vector<double>(6, -40.0));
    const auto samples = draw_weight_samples(collapsed, {3, 1});

    std::vector<std::vector<double>> ref_inputs = {
        {0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}, {2.0, 0.0}, {0.0, 2.0}};
    std::vector<int> ref_labels = {0, 0, 1, 1, 0, 1};
    std::vector<std::vector<double>> det_vecs, elv_vecs;
    for (const auto& x : ref_inputs) {
        det_vecs.push_back(forward_logits(w, x));
        elv_vecs.push_back(expected_logit_vector(logit_ensemble(samples, x)));
    }
    LogitIndex det_index(det_vecs, ref_labels);
    LogitIndex elv_index(elv_vecs, ref_labels);

    ScoringArtifacts art;
    art.point_weights = &w;
    art.weight_samples = &samples;
    art.det_index = &det_index;
    art.elv_index = &elv_index;
    art.k = 2;

    std::vector<std::vector<double>> queries = {{0.5, 0.5}, {-3.0, 2.0}, {4.0, 4.0}};

    SUBCASE("every method produces one finite score per input") {
        for (ScoreMethod m : all_score_methods()) {
            const auto s = score_dataset(m, art, queries);
            REQUIRE(s.size() == queries.size());
            for (double v : s) CHECK(std::isfinite(v));
        }
    }
    SUBCASE("collapsed posterior: ELV methods equal deterministic methods") {
        const auto det_ml = score_dataset(ScoreMethod::MaxLogitDet, art, queries);
        const auto elv_ml = score_dataset(ScoreMethod::MaxLogitElv, art, queries);
        const auto det_knn = score_dataset(ScoreMethod::KnnDet, art, queries);
        const auto elv_knn = score_dataset(ScoreMethod::KnnElv, art, queries);
        const auto det_kp = score_dataset(ScoreMethod::KnnPlusDet, art, queries);
        const auto elv_kp = score_dataset(ScoreMethod::KnnPlusElv, art, queries);
        for (std::size_t i = 0; i < queries.size(); ++i) {
            CHECK(elv_ml[i] == doctest::Approx(det_ml[i]).epsilon(1e-10));
            CHECK(elv_knn[i] == doctest::Approx(det_knn[i]).epsilon(1e-10));
            CHECK(elv_kp[i] == doctest::Approx(det_kp[i]).epsilon(1e-10));
        }
    }
    SUBCASE("SE matches entropy of the deterministic logits") {
        const auto s = score_dataset(ScoreMethod::SE, art, queries);
        for (std::size_t i = 0; i < queries.size(); ++i)
            CHECK(s[i] ==
                  doctest::Approx(softmax_entropy(forward_logits(w, queries[i])))
                      .epsilon(1e-12));
    }
    SUBCASE("missing artifacts raise ConfigError") {
        ScoringArtifacts empty;
        CHECK_THROWS_AS(score_dataset(ScoreMethod::SE, empty, queries), ConfigError);
        CHECK_THROWS_AS(score_dataset(ScoreMethod::PE, empty, queries), ConfigError);
        ScoringArtifacts no_index;
        no_index.point_weights = &w;
        no_index.weight_samples = &samples;
        CHECK_THROWS_AS(score_dataset(ScoreMethod::KnnDet, no_index, queries), ConfigError);
        CHECK_THROWS_AS(score_dataset(ScoreMethod::KnnPlusElv, no_index, queries),
                        ConfigError);
    }
}
