#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "chebsr/measures.hpp"
#include "chebsr/spline_model.hpp"

using namespace chebsr;

namespace {

const double r2 = std::sqrt(2.0);

double binomial(int n, int k) {
    double b = 1.0;
    for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
    return b;
}

struct RandomSpline {
    NonUniformSpline f;
    std::vector<double> knots, jumps;
};

// Builds a spline piece by piece: P_i = P_{i-1} + (a_i / d!) (t - t_i)^d,
// expanded with the binomial theorem.
RandomSpline random_spline(std::mt19937_64& rng, int d, int s) {
    std::uniform_real_distribution<double> coef(-1.0, 1.0), jump(0.5, 2.0), pt(-0.95, 0.95);
    std::vector<double> knots;
    while (static_cast<int>(knots.size()) < s) {
        const double t = pt(rng);
        bool far = true;
        for (double k : knots) far = far && std::abs(k - t) > 0.05;
        if (far) knots.push_back(t);
    }
    std::sort(knots.begin(), knots.end());
    std::vector<double> piece(static_cast<std::size_t>(d + 1));
    for (double& v : piece) v = coef(rng);
    std::vector<std::vector<double>> pieces{piece};
    std::vector<double> jumps;
    double dfact = 1.0;
    for (int i = 2; i <= d; ++i) dfact *= i;
    for (double tk : knots) {
        const double a = (coef(rng) < 0 ? -1.0 : 1.0) * jump(rng);
        jumps.push_back(a);
        for (int j = 0; j <= d; ++j) {
            piece[static_cast<std::size_t>(j)] += a / dfact * binomial(d, j) * std::pow(-tk, d - j);
        }
        pieces.push_back(piece);
    }
    return {NonUniformSpline(d, knots, pieces), knots, jumps};
}

// Spike moments by the cosine formula.
Eigen::VectorXd direct_spike_moments(const std::vector<double>& t, const std::vector<double>& a, int m) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(m + 1);
    for (std::size_t j = 0; j < t.size(); ++j) {
        for (int k = 0; k <= m; ++k) c(k) += a[j] * (k == 0 ? 1.0 : r2 * std::cos(k * std::acos(t[j])));
    }
    return c;
}

}  // namespace

TEST(NonUniformSpline, RejectsNonSmoothPieces) {
    // d = 1 with a value jump at the knot.
    EXPECT_THROW(NonUniformSpline(1, {0.0}, {{0.0, 1.0}, {1.0, 1.0}}), std::invalid_argument);
    EXPECT_THROW(NonUniformSpline(1, {0.5, 0.0}, {{0.0}, {0.0}, {0.0}}), std::invalid_argument);
    EXPECT_THROW(NonUniformSpline(0, {0.0}, {{1.0}}), std::invalid_argument);
}

TEST(NonUniformSpline, PieceSelectionAtKnots) {
    const NonUniformSpline f(0, {0.0}, {{0.0}, {1.0}});
    EXPECT_EQ(f(-0.5), 0.0);
    EXPECT_EQ(f(0.0), 1.0);
    EXPECT_EQ(f(1.0), 1.0);
}

TEST(DistributionalDerivative, SpecExamples) {
    const auto step = distributional_derivative(NonUniformSpline(0, {0.0}, {{0.0}, {1.0}}));
    ASSERT_EQ(step.size(), 1u);
    EXPECT_EQ(step.support()[0], 0.0);
    EXPECT_EQ(step.weights()[0], 1.0);

    // slope 2 then slope -1 at 0.5: 2t on the left, 1.5 - t on the right.
    const auto kink = distributional_derivative(NonUniformSpline(1, {0.5}, {{0.0, 2.0}, {1.5, -1.0}}));
    ASSERT_EQ(kink.size(), 1u);
    EXPECT_EQ(kink.support()[0], 0.5);
    EXPECT_NEAR(kink.weights()[0], -3.0, 1e-15);

    const auto none = distributional_derivative(NonUniformSpline(2, {0.1}, {{1, 2, 3}, {1, 2, 3}}));
    EXPECT_TRUE(none.empty());
}

TEST(TransferMatrices, SpecExamples) {
    const auto w = transfer_matrices(1, 0);
    ASSERT_EQ(w.w1.rows(), 1);
    ASSERT_EQ(w.w1.cols(), 2);
    EXPECT_EQ(w.w1(0, 0), -1.0);
    EXPECT_EQ(w.w1(0, 1), 1.0);

    const auto w2 = transfer_matrices(2, 0);
    ASSERT_EQ(w2.w2.rows(), 2);
    EXPECT_NEAR(w2.w2(0, 0), r2, 1e-15);
    EXPECT_NEAR(w2.w2(0, 1), r2, 1e-15);
    EXPECT_THROW((void)transfer_matrices(2, 2), std::invalid_argument);
}

TEST(ProjectionVector, SpecExamples) {
    const NonUniformSpline one(0, {}, {{1.0}});
    const auto p = projection_vector(one, 6);
    for (int k = 1; k <= 6; ++k) EXPECT_NEAR(p(k - 1), r2 * (1 - std::pow(-1.0, k)), 1e-13);

    const NonUniformSpline zero(1, {}, {{0.0, 0.0}});
    EXPECT_EQ(projection_vector(zero, 5).cwiseAbs().maxCoeff(), 0.0);

    const NonUniformSpline step(0, {0.0}, {{0.0}, {1.0}});
    EXPECT_NEAR(projection_vector(step, 4)(1), 2 * r2, 1e-13);
}

TEST(MomentsViaTransfer, StepSplineGivesDeltaMoments) {
    const NonUniformSpline step(0, {0.0}, {{0.0}, {1.0}});
    const auto c = moments_via_transfer(projection_vector(step, 4), boundary_vector(step), 4, 0);
    const std::vector<double> expect{1, 0, -r2, 0, r2};
    for (int k = 0; k <= 4; ++k) EXPECT_NEAR(c(k), expect[static_cast<std::size_t>(k)], 1e-13);
}

TEST(MomentsViaTransfer, GlobalPolynomialGivesZeroAndIsLinear) {
    const NonUniformSpline g(2, {}, {{0.3, -1.0, 2.0}});
    const auto c = moments_via_transfer(projection_vector(g, 9), boundary_vector(g), 9, 2);
    EXPECT_LT(c.cwiseAbs().maxCoeff(), 1e-11);

    std::mt19937_64 rng(8);
    const auto rs = random_spline(rng, 2, 3);
    auto b = boundary_vector(rs.f);
    const auto c1 = moments_via_transfer(projection_vector(rs.f, 10), b, 10, 2);
    for (double& v : b.values) v *= 2;
    const auto c2 = moments_via_transfer(2 * projection_vector(rs.f, 10), b, 10, 2);
    EXPECT_LT((c2 - 2 * c1).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(MomentsViaTransfer, DimensionMismatchThrows) {
    BoundaryVector b{{0.0, 1.0}};
    EXPECT_THROW((void)moments_via_transfer(Eigen::VectorXd::Zero(3), b, 5, 0), std::invalid_argument);
}

TEST(MomentsViaTransfer, AgreesWithDirectSpikeMoments) {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> deg(0, 3), knots(1, 4);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int d = deg(rng), s = knots(rng);
        const int m = d + 1 + static_cast<int>(rng() % 16);
        const auto rs = random_spline(rng, d, s);
        const auto via = moments_via_transfer(projection_vector(rs.f, m), boundary_vector(rs.f), m, d);
        const auto direct = direct_spike_moments(rs.knots, rs.jumps, m);
        worst = std::max(worst, (via - direct).cwiseAbs().maxCoeff());
    }
    EXPECT_LE(worst, 1e-8);
}

TEST(IntegrateFromSpikes, SpecExamples) {
    const auto constant = integrate_from_spikes(DiscreteMeasure(), BoundaryVector{{1.0, 1.0}}, 0);
    EXPECT_EQ(constant.spline(-0.3), 1.0);
    EXPECT_EQ(constant.right_boundary_residual, 0.0);

    const auto step = integrate_from_spikes(DiscreteMeasure({0.0}, {1.0}), BoundaryVector{{0.0, 1.0}}, 0);
    EXPECT_EQ(step.spline(-0.5), 0.0);
    EXPECT_EQ(step.spline(0.5), 1.0);
    EXPECT_EQ(step.right_boundary_residual, 0.0);

    EXPECT_THROW((void)integrate_from_spikes(DiscreteMeasure(), BoundaryVector{{0.0, 1.0, 2.0, 3.0}}, 0),
                 std::invalid_argument);
}

TEST(IntegrateFromSpikes, RoundTripsRandomSplines) {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        const int d = static_cast<int>(trial % 4);
        const auto rs = random_spline(rng, d, 1 + trial % 4);
        const auto back = integrate_from_spikes(distributional_derivative(rs.f), boundary_vector(rs.f), d);
        EXPECT_LT(back.right_boundary_residual, 1e-9);
        for (int i = 0; i <= 200; ++i) {
            const double t = -1.0 + i / 100.0;
            EXPECT_NEAR(back.spline(t), rs.f(t), 1e-9);
        }
    }
}

TEST(NonUniformSpline, DerivativeJumpsVanishBelowTopOrder) {
    std::mt19937_64 rng(9);
    const auto rs = random_spline(rng, 3, 4);
    for (double t : rs.knots) {
        for (int l = 0; l < 3; ++l) {
            const double left = mono::eval(rs.f.pieces()[rs.f.piece_index(t) - 1], t, l);
            EXPECT_NEAR(left, rs.f(t, l), 1e-9 * (1 + std::abs(left)));
        }
    }
}
