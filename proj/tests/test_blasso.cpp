#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "chebsr/blasso.hpp"

using namespace chebsr;

namespace {

// Separated support drawn uniformly in angle, rejecting draws closer than
// 5 pi / m to each other or to the endpoints' mirror.
std::vector<double> separated_support(std::mt19937_64& rng, int count, int m) {
    std::uniform_real_distribution<double> angle(0.0, kPi);
    for (;;) {
        std::vector<double> t;
        for (int i = 0; i < count; ++i) t.push_back(std::cos(angle(rng)));
        if (separation_ok(t, m)) {
            std::sort(t.begin(), t.end());
            return t;
        }
    }
}

double hausdorff_arccos(const std::vector<double>& a, const std::vector<double>& b) {
    auto one_way = [](const std::vector<double>& p, const std::vector<double>& q) {
        double worst = 0.0;
        for (double u : p) {
            double best = std::numeric_limits<double>::infinity();
            for (double v : q) best = std::min(best, std::abs(std::acos(u) - std::acos(v)));
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(one_way(a, b), one_way(b, a));
}

double phi(int k, double t) { return k == 0 ? 1.0 : std::sqrt(2.0) * std::cos(k * std::acos(t)); }

double grid_sup(const ChebPoly& p, int points) {
    double s = 0.0;
    for (int i = 0; i < points; ++i) s = std::max(s, std::abs(eval_poly(p, std::cos(kPi * (i + 0.5) / points))));
    return s;
}

}  // namespace

TEST(AssembleDualSdp, ShapeAndZeroCertificate) {
    const int m = 6;
    const auto obs = simulate(DiscreteMeasure({0.2}, {1.0}), m, 1, 0.0, 0);
    const double lambda = 0.7;
    const auto p = assemble_dual_sdp(obs, lambda);
    EXPECT_NO_THROW(p.validate());
    EXPECT_EQ(p.free_dim, m + 1);
    ASSERT_EQ(p.psd_block_dims.size(), 2u);
    EXPECT_EQ(p.psd_block_dims[0], m + 1);
    EXPECT_EQ(p.psd_block_dims[1], m + 1);
    for (int k = 0; k <= 1; ++k) EXPECT_EQ(p.quadratic(k, k), 0.0);
    for (int k = 2; k <= m; ++k) EXPECT_EQ(p.quadratic(k, k), 1.0);
    for (int k = 0; k <= m; ++k) EXPECT_EQ(p.linear(k), obs.y(k));

    // alpha = 0 with Q = lambda / (m + 1) I satisfies every row.
    Eigen::VectorXd lhs = Eigen::VectorXd::Zero(p.rows());
    for (const auto& e : p.psd_entries) lhs(e.row) += e.value * (e.i == e.j ? lambda / (m + 1) : 0.0);
    EXPECT_LT((lhs - p.rhs).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_THROW((void)assemble_dual_sdp(obs, 0.0), std::invalid_argument);
}

TEST(SolveBlasso, ZeroDataGivesEmptyMeasure) {
    for (int d : {-1, 0, 2}) {
        const Observation obs{.y = Eigen::VectorXd::Zero(13), .d = d, .m = 12};
        const auto sol = solve_blasso(obs, 0.5);
        EXPECT_TRUE(sol.measure.empty()) << "d=" << d;
        EXPECT_NEAR(sol.primal_objective, 0.0, 1e-9);
        EXPECT_LT(sol.dual.alpha.cwiseAbs().maxCoeff(), 1e-6);
    }
}

TEST(SolveBlasso, NoiselessSingleSpike) {
    const auto obs = simulate(DiscreteMeasure({0.0}, {2.0}), 16, -1, 0.0, 0);
    const auto sol = solve_blasso(obs, 1e-6);
    ASSERT_EQ(sol.measure.size(), 1u);
    EXPECT_LE(std::abs(std::acos(sol.measure.support()[0]) - kPi / 2), 1e-4);
    EXPECT_NEAR(sol.measure.weights()[0], 2.0, 2e-4);
    EXPECT_FALSE(sol.degenerate);
}

TEST(SolveBlasso, NoiselessExactRecoveryOnSeparatedSupports) {
    std::mt19937_64 rng(64);
    std::uniform_real_distribution<double> amp(1.0, 2.0);
    const int m = 64;
    for (int trial = 0; trial < 20; ++trial) {
        const auto t = separated_support(rng, 1 + trial % 5, m);
        std::vector<double> a;
        for (std::size_t i = 0; i < t.size(); ++i) a.push_back((rng() & 1 ? 1.0 : -1.0) * amp(rng));
        const DiscreteMeasure x(t, a);
        const double lambda = 1e-6;
        const auto obs = simulate(x, m, -1, 0.0, 0);
        const auto sol = solve_blasso(obs, lambda);
        ASSERT_EQ(sol.measure.size(), x.size()) << "trial " << trial;
        EXPECT_LE(hausdorff_arccos(sol.measure.support(), x.support()), 1e-4) << "trial " << trial;
        for (std::size_t i = 0; i < x.size(); ++i) {
            EXPECT_LE(std::abs(sol.measure.weights()[i] - x.weights()[i]), 1e-4 * std::abs(x.weights()[i]))
                << "trial " << trial;
        }
        EXPECT_LE(sol.duality_gap, 1e-6) << "trial " << trial;
        EXPECT_LE(sol.kkt_residuals.tv_identity_gap, 1e-6 * lambda) << "trial " << trial;
        EXPECT_LE(sol.kkt_residuals.feasibility_gap, 1e-6 * lambda) << "trial " << trial;
    }
}

TEST(SolveBlasso, NoisySolutionsSatisfyOptimalityInvariants) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 12; ++trial) {
        const int d = trial % 4 - 1;
        const int m = 20 + 4 * (trial % 3);
        const auto t = separated_support(rng, 3, m);
        const DiscreteMeasure x(t, {1.5, -1.0, 2.0});
        const double sigma = 0.01;
        const auto obs = simulate(x, m, d, sigma, 100 + static_cast<std::uint64_t>(trial));
        const double lambda = lambda_rice(sigma, m, d, 1.0);
        const auto sol = solve_blasso(obs, lambda);
        SCOPED_TRACE("trial " + std::to_string(trial));

        // Dual feasibility of the SDP solution on a 4m grid.
        EXPECT_LE(grid_sup(sol.dual.dual_poly, 4 * m), lambda * (1 + 1e-6));
        // Strong duality.
        EXPECT_LE(std::abs(sol.primal_objective + sol.dual_objective), 1e-6 * (1 + std::abs(sol.primal_objective)));
        ASSERT_FALSE(sol.degenerate);
        EXPECT_LE(sol.measure.size(), static_cast<std::size_t>(m + 1));
        // Atom signs agree with the subgradient polynomial.
        const ChebPoly P = subgradient_poly(sol.measure, obs, sol.multipliers);
        for (std::size_t i = 0; i < sol.measure.size(); ++i) {
            const double v = eval_poly(P, sol.measure.support()[i]);
            EXPECT_GT(v * sol.measure.weights()[i], 0.0);
            EXPECT_NEAR(std::abs(v), lambda, 1e-6 * lambda);
        }
        // Exact moments of order <= d are matched.
        const Eigen::VectorXd c = moments(sol.measure, m);
        for (int k = 0; k <= d; ++k) EXPECT_NEAR(c(k), obs.y(k), 1e-9 * (1 + std::abs(obs.y(k))));
        EXPECT_LE(sol.kkt_residuals.tv_identity_gap, 1e-6 * lambda);
        EXPECT_LE(sol.kkt_residuals.feasibility_gap, 1e-6 * lambda);
    }
}

TEST(SolveBlasso, ConstantDualFallsBackToGridFit) {
    // Only the mean is observed above the level; the dual sits at the constant lambda.
    const int m = 8;
    Eigen::VectorXd y = Eigen::VectorXd::Zero(m + 1);
    y(0) = 3.0;
    const double lambda = 1.0;
    const auto sol = solve_blasso(Observation{.y = y, .d = -1, .m = m}, lambda);
    EXPECT_TRUE(sol.degenerate);
    for (double w : sol.measure.weights()) EXPECT_GT(w, 0.0);
    // Optimal value: 1/2 lambda^2 + lambda (y_0 - lambda), attained by any
    // positive measure of mass y_0 - lambda with vanishing higher moments.
    const double optimum = 0.5 * lambda * lambda + lambda * (y(0) - lambda);
    EXPECT_NEAR(sol.primal_objective, optimum, 1e-6 * optimum);
    EXPECT_NEAR(tv_norm(sol.measure), y(0) - lambda, 1e-6);
}

TEST(FitWeights, LeastSquaresWithoutPenalty) {
    const auto obs = simulate(DiscreteMeasure({0.0}, {2.0}), 10, -1, 0.0, 0);
    const auto fit = fit_weights({0.0}, obs, 0.0, {1.0});
    ASSERT_EQ(fit.weights.size(), 1u);
    EXPECT_NEAR(fit.weights[0], 2.0, 1e-13);
}

TEST(FitWeights, SingleAtomShrinksByLambda) {
    const int m = 10;
    const double t = 0.3, lambda = 0.25;
    const auto obs = simulate(DiscreteMeasure({t, -0.6}, {1.5, 0.4}), m, -1, 0.02, 9);
    double dot = 0.0, norm2 = 0.0;
    for (int k = 0; k <= m; ++k) {
        dot += phi(k, t) * obs.y(k);
        norm2 += phi(k, t) * phi(k, t);
    }
    const auto fit = fit_weights({t}, obs, lambda, {1.0});
    ASSERT_EQ(fit.weights.size(), 1u);
    EXPECT_NEAR(fit.weights[0], (dot - lambda) / norm2, 1e-13);
}

TEST(FitWeights, ExactMomentPinsTheWeight) {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(7);
    y(0) = 1.7;
    y(3) = 0.4;
    const auto fit = fit_weights({0.0}, Observation{.y = y, .d = 0, .m = 6}, 0.3, {1.0});
    ASSERT_EQ(fit.weights.size(), 1u);
    EXPECT_NEAR(fit.weights[0], 1.7, 1e-13);
}

TEST(FitWeights, DropsAtomsThatContradictTheirSign) {
    const int m = 16;
    const auto obs = simulate(DiscreteMeasure({-0.5}, {1.0}), m, -1, 0.0, 0);
    const auto fit = fit_weights({-0.5, 0.5}, obs, 0.01, {1.0, 1.0});
    ASSERT_EQ(fit.support.size(), 1u);
    EXPECT_EQ(fit.support[0], -0.5);
    EXPECT_GT(fit.weights[0], 0.0);
}

TEST(FitWeights, RankDeficientMomentRowsAreNamed) {
    // phi_1(0) = 0, so a nonzero first moment cannot be matched by an atom at 0.
    Eigen::VectorXd y = Eigen::VectorXd::Zero(9);
    y(0) = 1.0;
    y(1) = 0.5;
    try {
        (void)fit_weights({0.0}, Observation{.y = y, .d = 1, .m = 8}, 0.1, {1.0});
        FAIL() << "expected an error";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("{1}"), std::string::npos) << e.what();
    }
    // The relaxed fit reports the row instead of throwing.
    const auto loose = fit_weights({0.0}, Observation{.y = y, .d = 1, .m = 8}, 0.1, {1.0}, true);
    EXPECT_EQ(loose.unmatched, std::vector<int>{1});
    EXPECT_EQ(loose.multipliers(1), 0.0);
}

TEST(SolveBlasso, FewerLevelPointsThanPinnedMoments) {
    // Two atoms against four pinned rows: off by a hair in position, the
    // fixed-support fit cannot match the moments, so the atoms must move.
    const double h = std::sqrt(0.5);
    const DiscreteMeasure x({-h, h}, {60000.0, -50000.0});
    const auto obs = simulate(x, 10, 3, 0.0, 0);
    EXPECT_THROW((void)fit_weights({-h + 1e-6, h}, obs, 1.0, {1.0, -1.0}), MomentMismatch);
    for (double lambda : {1.0, 100.0}) {
        SCOPED_TRACE(lambda);
        const auto sol = solve_blasso(obs, lambda);
        ASSERT_EQ(sol.measure.size(), 2u);
        EXPECT_LE(hausdorff_arccos(sol.measure.support(), x.support()), 1e-6);
        EXPECT_NEAR(sol.measure.weights()[0], 60000.0, 1e-3);
        EXPECT_NEAR(sol.measure.weights()[1], -50000.0, 1e-3);
        const Eigen::VectorXd c = moments(sol.measure, 10);
        for (int k = 0; k <= 3; ++k) EXPECT_NEAR(c(k), obs.y(k), 1e-9 * obs.y.head(4).cwiseAbs().maxCoeff());
        EXPECT_LE(sol.duality_gap, 1e-6);
        EXPECT_LE(sol.kkt_residuals.feasibility_gap, 1e-6 * lambda);
        EXPECT_LE(sol.kkt_residuals.tv_identity_gap, 1e-9 * lambda * tv_norm(sol.measure));
    }
}

TEST(VerifyFirstOrder, EmptyMeasureAndPerturbation) {
    const Observation zero{.y = Eigen::VectorXd::Zero(9), .d = -1, .m = 8};
    const auto r0 = verify_first_order(DiscreteMeasure(), zero, 0.5, Eigen::VectorXd::Zero(0));
    EXPECT_EQ(r0.tv_identity_gap, 0.0);
    EXPECT_EQ(r0.feasibility_gap, 0.0);

    const DiscreteMeasure x({-0.4, 0.35}, {1.2, -0.8});
    const auto obs = simulate(x, 24, -1, 0.0, 0);
    const double lambda = 1e-3;
    const auto sol = solve_blasso(obs, lambda);
    const auto r = verify_first_order(sol, obs);
    EXPECT_LE(r.tv_identity_gap, 1e-6 * lambda);
    EXPECT_LE(r.feasibility_gap, 1e-6 * lambda);

    std::vector<double> w = sol.measure.weights();
    w[0] *= 2.0;
    const auto bad = verify_first_order(DiscreteMeasure(sol.measure.support(), w), obs, lambda, sol.multipliers);
    EXPECT_GT(bad.tv_identity_gap + bad.feasibility_gap, 1e-3);
}

TEST(SolveBlasso, RejectsNonPositiveLambda) {
    const Observation obs{Eigen::VectorXd::Zero(5), 4, -1};
    EXPECT_THROW((void)solve_blasso(obs, 0.0), std::invalid_argument);
    EXPECT_THROW((void)solve_blasso(obs, -1.0), std::invalid_argument);
}
