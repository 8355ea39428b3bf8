#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "chebsr/measures.hpp"

using namespace chebsr;

namespace {

DiscreteMeasure random_measure(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> pt(-1.0, 1.0), w(-2.0, 2.0);
    std::vector<double> t(static_cast<std::size_t>(n)), a(static_cast<std::size_t>(n));
    for (auto& v : t) v = pt(rng);
    for (auto& v : a) v = w(rng);
    return {t, a};
}

}  // namespace

TEST(DiscreteMeasure, SortsAndMergesCoincidentPoints) {
    const DiscreteMeasure mu({0.5, -0.2, 0.5, 0.1}, {1.0, 2.0, 3.0, -1.0});
    EXPECT_EQ(mu.support(), (std::vector<double>{-0.2, 0.1, 0.5}));
    EXPECT_EQ(mu.weights(), (std::vector<double>{2.0, -1.0, 4.0}));
}

TEST(DiscreteMeasure, CancellingWeightsAreDropped) {
    const DiscreteMeasure mu({0.3, 0.3, -0.4}, {1.5, -1.5, 2.0});
    EXPECT_EQ(mu.size(), 1u);
    EXPECT_EQ(mu.support()[0], -0.4);
}

TEST(DiscreteMeasure, RejectsBadInput) {
    EXPECT_THROW(DiscreteMeasure({0.0, 1.2}, {1.0, 1.0}), std::domain_error);
    EXPECT_THROW(DiscreteMeasure({0.0}, {1.0, 2.0}), std::invalid_argument);
    EXPECT_THROW(DiscreteMeasure({0.0}, {std::numeric_limits<double>::infinity()}), std::invalid_argument);
}

TEST(Moments, SpecExamples) {
    const double r2 = std::sqrt(2.0);
    const auto c = moments(DiscreteMeasure({0.0}, {1.0}), 4);
    const std::vector<double> expect{1, 0, -r2, 0, r2};
    for (int k = 0; k <= 4; ++k) EXPECT_NEAR(c(k), expect[static_cast<std::size_t>(k)], 1e-15);

    const auto c1 = moments(DiscreteMeasure({1.0}, {2.0}), 3);
    EXPECT_DOUBLE_EQ(c1(0), 2.0);
    for (int k = 1; k <= 3; ++k) EXPECT_NEAR(c1(k), 2 * r2, 1e-15);

    const auto c0 = moments(DiscreteMeasure(), 2);
    EXPECT_EQ(c0.size(), 3);
    EXPECT_EQ(c0.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Moments, AreLinear) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const auto mu = random_measure(rng, 4), nu = random_measure(rng, 3);
        const Eigen::VectorXd lhs = moments(mu + nu, 20);
        const Eigen::VectorXd rhs = moments(mu, 20) + moments(nu, 20);
        EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(TvNorm, SpecExamples) {
    EXPECT_DOUBLE_EQ(tv_norm(DiscreteMeasure({-0.5, 0.5}, {3.0, -2.0})), 5.0);
    EXPECT_DOUBLE_EQ(tv_norm(DiscreteMeasure()), 0.0);
    EXPECT_DOUBLE_EQ(tv_norm(DiscreteMeasure({-0.1, 0.2, 0.3}, {0.5, -0.25, 1.0})), 1.75);
}

TEST(TvNorm, HomogeneousAndSubadditive) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        const auto mu = random_measure(rng, 5), nu = random_measure(rng, 5);
        EXPECT_NEAR(tv_norm(mu.scaled(-2.5)), 2.5 * tv_norm(mu), 1e-12);
        EXPECT_LE(tv_norm(mu + nu), tv_norm(mu) + tv_norm(nu) + 1e-12);
    }
}

TEST(MinSeparation, SpecExamples) {
    const double h = std::sqrt(2.0) / 2.0;
    EXPECT_NEAR(min_separation(std::vector<double>{-h, h}), 1.57080, 1e-5);
    EXPECT_TRUE(std::isinf(min_separation(std::vector<double>{0.3})));
    EXPECT_NEAR(min_separation(std::vector<double>{1.0, -1.0}), 0.0, 1e-15);
}

TEST(MinSeparation, InvariantUnderPermutation) {
    std::vector<double> t{-0.8, 0.1, 0.45, 0.9, -0.2};
    const double ref = min_separation(t);
    std::sort(t.begin(), t.end());
    do {
        EXPECT_EQ(min_separation(t), ref);
    } while (std::next_permutation(t.begin(), t.end()));
}

TEST(EdgeDistance, SpecExamples) {
    EXPECT_NEAR(edge_distance(std::vector<double>{0.5}), 1.04720, 1e-5);
    EXPECT_TRUE(std::isinf(edge_distance(std::vector<double>{1.0})));
    EXPECT_NEAR(edge_distance(std::vector<double>{0.0}), kPi / 2, 1e-15);
}

TEST(SeparationOk, SpecExamples) {
    EXPECT_TRUE(separation_ok(std::vector<double>{0.0}, 64));
    const double a = std::cos(1.0), b = std::cos(1.1);
    EXPECT_FALSE(separation_ok(std::vector<double>{b, a}, 64));
    EXPECT_FALSE(separation_ok(std::vector<double>{0.99999}, 128));
    EXPECT_THROW((void)separation_ok(std::vector<double>{0.0}, 0), std::invalid_argument);
}

TEST(SeparationOk, ThresholdIsFivePiOverM) {
    // Two points symmetric about 0 at arccos distance exactly 5 pi / m.
    const int m = 40;
    const double gap = 5 * kPi / m;
    const std::vector<double> ok{std::cos(kPi / 2 + gap / 2 + 1e-12), std::cos(kPi / 2 - gap / 2 - 1e-12)};
    const std::vector<double> close{std::cos(kPi / 2 + gap / 2 - 1e-6), std::cos(kPi / 2 - gap / 2 + 1e-6)};
    EXPECT_TRUE(separation_ok(ok, m));
    EXPECT_FALSE(separation_ok(close, m));
}
