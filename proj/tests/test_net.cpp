#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "ood/net.hpp"
#include "ood/serialize.hpp"
#include "test_util.hpp"

using namespace ood;

TEST_CASE("arch weight count and validation") {
    NetworkArch arch{2, {3}, 2};
    CHECK(arch.weight_count() == (2 + 1) * 3 + (3 + 1) * 2);

    NetworkArch no_hidden{4, {}, 3};
    CHECK(no_hidden.weight_count() == (4 + 1) * 3);

    CHECK_THROWS_AS((NetworkArch{0, {}, 2}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((NetworkArch{2, {}, 1}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((NetworkArch{2, {0}, 2}.validate()), std::invalid_argument);
}

TEST_CASE("sigma_from_rho") {
    CHECK(sigma_from_rho({0.0})[0] == doctest::Approx(std::numbers::ln2).epsilon(1e-14));
    CHECK(sigma_from_rho({40.0})[0] == doctest::Approx(40.0).epsilon(1e-12));
    // frozen from a high-precision evaluation of log(1+e^-5)
    CHECK(sigma_from_rho({-5.0})[0] ==
          doctest::Approx(0.0067153484891180686).epsilon(1e-12));
    CHECK_THROWS_AS(sigma_from_rho({std::nan("")}), std::invalid_argument);

    SUBCASE("monotone and positive on a grid") {
        double prev = 0.0;
        for (double x = -30.0; x <= 30.0; x += 0.25) {
            const double s = sigma_from_rho({x})[0];
            CHECK(s > 0.0);
            CHECK(s > prev);
            prev = s;
        }
    }
}

TEST_CASE("init_posterior is seeded and statistically centered") {
    NetworkArch arch{99, {100}, 2};  // 10202 weights
    const auto a = init_posterior(arch, 7);
    const auto b = init_posterior(arch, 7);
    CHECK(a.mu == b.mu);
    CHECK(a.rho == b.rho);
    CHECK(init_posterior(arch, 8).mu != a.mu);

    const std::size_t n = arch.weight_count();
    const double se = PosteriorInit{}.stddev() / std::sqrt(static_cast<double>(n));
    double mu_mean = 0.0, rho_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mu_mean += a.mu[i];
        rho_mean += a.rho[i];
    }
    mu_mean /= static_cast<double>(n);
    rho_mean /= static_cast<double>(n);
    CHECK(std::abs(mu_mean - 0.0) < 5 * se);
    CHECK(std::abs(rho_mean - (-5.0)) < 5 * se);
}

TEST_CASE("sample_weights") {
    NetworkArch arch{1, {}, 2};  // 4 weights
    VariationalPosterior post(arch, {1.0, 1.0, 1.0, 1.0}, {0.0, 0.0, 0.0, 0.0});

    SUBCASE("zero noise returns mu") {
        const std::vector<double> eps(4, 0.0);
        CHECK(sample_weights(post, eps).values == post.mu);
    }
    SUBCASE("symmetric about mu") {
        const std::vector<double> eps = {0.5, -1.0, 2.0, 0.25};
        std::vector<double> neg(eps);
        for (double& e : neg) e = -e;
        const auto wp = sample_weights(post, eps).values;
        const auto wm = sample_weights(post, neg).values;
        for (int i = 0; i < 4; ++i)
            CHECK(wp[i] + wm[i] == doctest::Approx(2.0 * post.mu[i]).epsilon(1e-14));
    }
    SUBCASE("mu=1 rho=0 eps=2 gives 1+2ln2") {
        const std::vector<double> eps = {2.0, 0.0, 0.0, 0.0};
        CHECK(sample_weights(post, eps).values[0] ==
              doctest::Approx(1.0 + 2.0 * std::numbers::ln2).epsilon(1e-14));
    }
    SUBCASE("linear in eps") {
        std::mt19937_64 rng(3);
        const auto e1 = testutil::random_vector(rng, 4);
        const auto e2 = testutil::random_vector(rng, 4);
        std::vector<double> sum(4);
        for (int i = 0; i < 4; ++i) sum[i] = e1[i] + e2[i];
        const auto w0 = sample_weights(post, std::vector<double>(4, 0.0)).values;
        const auto w1 = sample_weights(post, e1).values;
        const auto w2 = sample_weights(post, e2).values;
        const auto w12 = sample_weights(post, sum).values;
        for (int i = 0; i < 4; ++i)
            CHECK(w12[i] - w0[i] ==
                  doctest::Approx((w1[i] - w0[i]) + (w2[i] - w0[i])).epsilon(1e-12));
    }
    SUBCASE("length mismatch") {
        CHECK_THROWS_AS(sample_weights(post, std::vector<double>(3, 0.0)),
                        std::invalid_argument);
    }
}

TEST_CASE("forward_logits") {
    SUBCASE("all-zero weights give zero logits at any depth") {
        NetworkArch arch{2, {3, 4}, 2};
        PointWeights w(arch, std::vector<double>(arch.weight_count(), 0.0));
        for (double z : forward_logits(w, std::vector<double>{0.3, -0.7}))
            CHECK(z == 0.0);
    }
    SUBCASE("pure affine net is Wx+b") {
        NetworkArch arch{2, {}, 2};
        // W = [[1,0],[0,1]], b = [0.5, -0.25]
        PointWeights w(arch, {1.0, 0.0, 0.0, 1.0, 0.5, -0.25});
        const auto z = forward_logits(w, std::vector<double>{2.0, 3.0});
        CHECK(z[0] == doctest::Approx(2.5).epsilon(1e-15));
        CHECK(z[1] == doctest::Approx(2.75).epsilon(1e-15));
    }
    SUBCASE("2-3-2 net matches scalar recomputation") {
        NetworkArch arch{2, {3}, 2};
        const std::vector<double> w1 = {0.1, -0.2, 0.3, 0.4, -0.5, 0.6};  // 3x2
        const std::vector<double> b1 = {0.01, -0.02, 0.03};
        const std::vector<double> w2 = {0.7, -0.8, 0.9, -1.0, 1.1, -1.2};  // 2x3
        const std::vector<double> b2 = {0.05, -0.05};
        std::vector<double> flat;
        for (auto v : {w1, b1, w2, b2}) flat.insert(flat.end(), v.begin(), v.end());
        PointWeights w(arch, flat);

        const std::vector<double> x = {0.4, -0.9};
        // independent scalar recomputation
        double h[3];
        for (int o = 0; o < 3; ++o) {
            const double pre = w1[2 * o] * x[0] + w1[2 * o + 1] * x[1] + b1[o];
            h[o] = std::log1p(std::exp(pre));
        }
        double expect[2];
        for (int o = 0; o < 2; ++o)
            expect[o] = w2[3 * o] * h[0] + w2[3 * o + 1] * h[1] + w2[3 * o + 2] * h[2] + b2[o];

        const auto z = forward_logits(w, x);
        CHECK(z[0] == doctest::Approx(expect[0]).epsilon(1e-14));
        CHECK(z[1] == doctest::Approx(expect[1]).epsilon(1e-14));
    }
    SUBCASE("dimension mismatch") {
        NetworkArch arch{2, {}, 2};
        PointWeights w(arch, std::vector<double>(arch.weight_count(), 0.1));
        CHECK_THROWS_AS(forward_logits(w, std::vector<double>{1.0}),
                        std::invalid_argument);
    }
}

TEST_CASE("logit gradients match central finite differences") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        NetworkArch arch{2, {3}, 2};
        auto weights = testutil::random_vector(rng, arch.weight_count());
        const auto x = testutil::random_vector(rng, 2);
        const auto proj = testutil::random_vector(rng, 2);  // scalarize the logits

        ForwardTrace trace;
        auto logits = forward_logits_traced(arch, weights, x, trace);
        std::vector<double> grad(arch.weight_count(), 0.0);
        backward_logits(arch, weights, trace, proj, grad);

        const double h = 1e-5;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            auto eval = [&](double delta) {
                auto wv = weights;
                wv[i] += delta;
                const auto z = forward_logits(PointWeights(arch, wv), x);
                return proj[0] * z[0] + proj[1] * z[1];
            };
            const double fd = (eval(h) - eval(-h)) / (2 * h);
            const double scale = std::max({std::abs(fd), std::abs(grad[i]), 1e-8});
            CHECK(std::abs(grad[i] - fd) / scale < 1e-4);
        }
    }
}

TEST_CASE("weight file round trips") {
    std::mt19937_64 rng(5);
    const auto values = testutil::random_vector(rng, 37);
    const std::string bin = "test_weights_roundtrip.bin";
    const std::string csv = "test_weights_roundtrip.csv";
    save_weights_binary(values, bin);
    CHECK(load_weights_binary(bin) == values);
    save_weights_csv(values, csv);
    const auto back = load_weights_csv(csv);
    REQUIRE(back.size() == values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        CHECK(back[i] == doctest::Approx(values[i]).epsilon(1e-15));
    std::remove(bin.c_str());
    std::remove(csv.c_str());
}
