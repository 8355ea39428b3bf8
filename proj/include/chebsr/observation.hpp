#pragma once

// Observation model: exact low-order moments, Gaussian-perturbed high-order
// moments, the spline variant built from a polynomial approximation, and the
// regularization levels calibrated by the Rice method.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chebsr/cheb_core.hpp"
#include "chebsr/measures.hpp"
#include "chebsr/spline_model.hpp"

namespace chebsr {

/// Seeded standard normal stream.
///
/// Algorithm: std::mt19937_64 (fully specified by the C++ standard) produces
/// 64-bit words; the top 53 bits give u = (w >> 11) * 2^-53 in [0, 1). Pairs
/// (u1, u2) go through Box-Muller with r = sqrt(-2 ln(1 - u1)), yielding
/// r cos(2 pi u2) and then r sin(2 pi u2). The standard library's normal
/// distribution is avoided because its algorithm is implementation-defined.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double operator()() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log1p(-u1));
        spare_ = r * std::sin(2.0 * kPi * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * kPi * u2);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Moment vector y_0..y_m; orders 0..d are exact, the rest carry noise of
/// standard deviation sigma. d = -1 means every order is noisy.
struct Observation {
    Eigen::VectorXd y;
    int d = -1;
    int m = 0;
    double sigma = 0.0;

    void validate() const {
        if (d < -1) throw std::invalid_argument("Observation: d must be >= -1");
        if (m <= d) throw std::invalid_argument("Observation: need m > d");
        if (y.size() != m + 1) {
            throw std::invalid_argument("Observation: y has " + std::to_string(y.size()) + " entries, expected m+1 = " +
                                        std::to_string(m + 1));
        }
        if (!(sigma >= 0.0)) throw std::invalid_argument("Observation: sigma must be nonnegative");
    }
};

[[nodiscard]] inline Observation simulate(const DiscreteMeasure& x, int m, int d, double sigma, std::uint64_t seed) {
    if (d < -1 || m <= d) throw std::invalid_argument("simulate: need m > d >= -1");
    if (!(sigma >= 0.0)) throw std::invalid_argument("simulate: sigma must be nonnegative");
    Observation obs{moments(x, m), d, m, sigma};
    if (sigma > 0.0) {
        GaussianStream g(seed);
        for (int k = d + 1; k <= m; ++k) obs.y(k) += sigma * g();
    }
    return obs;
}

/// y from a projection-like vector theta and boundary data, through the
/// transfer identity.
[[nodiscard]] inline Observation assemble_y_from_projection(const Eigen::VectorXd& theta, const BoundaryVector& b,
                                                            int m, int d, double sigma = 0.0) {
    Observation obs{moments_via_transfer(theta, b, m, d), d, m, sigma};
    obs.validate();
    return obs;
}

namespace detail {

// Row k-d-1, column j: Lebesgue pairing of phi_j with phi_k^{(d+1)}.
inline Eigen::MatrixXd theta_matrix(int m, int d) {
    const int n = m - d;
    Eigen::MatrixXd A(n, n);
    for (int k = d + 1; k <= m; ++k) {
        for (int j = 0; j < n; ++j) {
            std::vector<double> e(static_cast<std::size_t>(j + 1), 0.0);
            e[static_cast<std::size_t>(j)] = (j == 0) ? 1.0 : kSqrt2;
            A(k - d - 1, j) = pair_with_phi_derivative(e, k, d + 1, -1.0, 1.0);
        }
    }
    return A;
}

}  // namespace detail

/// (<P, phi_k^{(d+1)}>)_{k=d+1..m} for P of degree at most m-d-1.
[[nodiscard]] inline Eigen::VectorXd theta_of_polynomial(const ChebPoly& P, int m, int d) {
    if (d < 0 || m <= d) throw std::invalid_argument("theta_of_polynomial: need m > d >= 0");
    const int limit = m - d - 1;
    for (int j = limit + 1; j <= P.degree_bound(); ++j) {
        if (P.coeffs[static_cast<std::size_t>(j)] != 0.0) {
            throw std::invalid_argument("theta_of_polynomial: polynomial degree exceeds m-d-1 = " +
                                        std::to_string(limit));
        }
    }
    const auto g = tseries::from_phi(P.coeffs);
    Eigen::VectorXd out(m - d);
    for (int k = d + 1; k <= m; ++k) {
        out(k - d - 1) = detail::pair_with_phi_derivative(g, k, d + 1, -1.0, 1.0);
    }
    return out;
}

/// The unique P of degree <= m-d-1 with theta_of_polynomial(P) = theta.
[[nodiscard]] inline ChebPoly polynomial_from_theta(const Eigen::VectorXd& theta, int m, int d) {
    if (d < 0 || m <= d) throw std::invalid_argument("polynomial_from_theta: need m > d >= 0");
    if (theta.size() != m - d) throw std::invalid_argument("polynomial_from_theta: theta must have m-d entries");
    const Eigen::VectorXd coeffs = detail::theta_matrix(m, d).partialPivLu().solve(theta);
    return ChebPoly(std::vector<double>(coeffs.data(), coeffs.data() + coeffs.size()));
}

/// A random polynomial approximation of f whose pairings are
/// N(p(f), sigma^2 I).
[[nodiscard]] inline ChebPoly simulate_polynomial_approximation(const NonUniformSpline& f, int m, double sigma,
                                                                std::uint64_t seed) {
    const int d = f.degree();
    Eigen::VectorXd theta = projection_vector(f, m);
    if (sigma > 0.0) {
        GaussianStream g(seed);
        for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) += sigma * g();
    }
    return polynomial_from_theta(theta, m, d);
}

namespace detail {
inline void check_rice_args(double sigma, int m, int d, const char* who) {
    if (!(sigma >= 0.0)) throw std::invalid_argument(std::string(who) + ": sigma must be nonnegative");
    if (d < -1 || m <= d) throw std::invalid_argument(std::string(who) + ": need m > d >= -1");
}
}  // namespace detail

/// sigma * sqrt(8 (1 + eta) (m - d) log(5 (m + d + 1))).
[[nodiscard]] inline double lambda_rice(double sigma, int m, int d, double eta) {
    detail::check_rice_args(sigma, m, d, "lambda_rice");
    if (!(eta >= 0.0)) throw std::invalid_argument("lambda_rice: eta must be nonnegative");
    return sigma * std::sqrt(8.0 * (1.0 + eta) * (m - d) * std::log(5.0 * (m + d + 1)));
}

/// The level used by the spline recovery algorithm: twice lambda_rice.
[[nodiscard]] inline double lambda_algorithm(double sigma, int m, int d, double alpha) {
    return 2.0 * lambda_rice(sigma, m, d, alpha);
}

/// sigma0 * m (m-1) ... (m-d), i.e. sigma0 m! / (m-d-1)!.
[[nodiscard]] inline double scaled_sigma(double sigma0, int m, int d) {
    if (d < 0 || m <= d) throw std::invalid_argument("scaled_sigma: need m > d >= 0");
    double s = sigma0;
    for (int j = 0; j <= d; ++j) s *= static_cast<double>(m - j);
    return s;
}

/// The eta = 0 level sigma * sqrt(8 (m - d) log(5 (m + d + 1))).
[[nodiscard]] inline double rice_threshold(double sigma, int m, int d) { return lambda_rice(sigma, m, d, 0.0); }

/// min(1, exp(-(u^2 - lambda_R^2) / (8 sigma^2 (m - d)))): bound on the
/// probability that the sup of the noise polynomial exceeds u.
[[nodiscard]] inline double rice_tail_bound(double u, double sigma, int m, int d) {
    detail::check_rice_args(sigma, m, d, "rice_tail_bound");
    if (!(sigma > 0.0)) throw std::invalid_argument("rice_tail_bound: sigma must be positive");
    const double floor_u = sigma * std::sqrt(2.0 * (m - d));
    if (!(u > floor_u)) {
        throw std::invalid_argument("rice_tail_bound: level must exceed sigma sqrt(2(m-d)) = " + std::to_string(floor_u));
    }
    const double lr = rice_threshold(sigma, m, d);
    return std::min(1.0, std::exp(-(u * u - lr * lr) / (8.0 * sigma * sigma * (m - d))));
}

}  // namespace chebsr
