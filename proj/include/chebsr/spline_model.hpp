#pragma once

// Non-uniform splines of degree d, their (d+1)-th distributional derivative,
// and the moment transfer identity
//
//   c(f^{(d+1)}) = [ 0             W1 ] [ p(f) ]
//                  [ (-1)^{d+1} I  W2 ] [ b    ]
//
// where p(f) collects the Lebesgue pairings <f, phi_k^{(d+1)}> for k = d+1..m
// and b is the boundary vector of endpoint derivatives.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "chebsr/cheb_core.hpp"
#include "chebsr/measures.hpp"

namespace chebsr {

namespace mono {

/// l-th derivative of sum c_i t^i at t.
[[nodiscard]] inline double eval(std::span<const double> c, double t, int order = 0) {
    double acc = 0.0;
    for (std::size_t idx = c.size(); idx-- > static_cast<std::size_t>(std::max(order, 0));) {
        double fall = 1.0;
        for (int j = 0; j < order; ++j) fall *= static_cast<double>(idx) - j;
        acc = acc * t + fall * c[idx];
    }
    return acc;
}

[[nodiscard]] inline double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

/// Monomial coefficients of scale * (t - c)^d.
[[nodiscard]] inline std::vector<double> shifted_power(double c, int d, double scale) {
    std::vector<double> out(static_cast<std::size_t>(d + 1), 0.0);
    double binom = 1.0;
    for (int i = 0; i <= d; ++i) {
        out[static_cast<std::size_t>(i)] = scale * binom * std::pow(-c, d - i);
        binom = binom * (d - i) / (i + 1);
    }
    return out;
}

}  // namespace mono

/// 2(d+1) endpoint values: the derivatives 0..d of the first piece at -1,
/// followed by the derivatives 0..d of the last piece at +1.
struct BoundaryVector {
    std::vector<double> values;

    [[nodiscard]] int degree() const {
        if (values.empty() || values.size() % 2 != 0) {
            throw std::invalid_argument("BoundaryVector: length must be 2(d+1), got " +
                                        std::to_string(values.size()));
        }
        return static_cast<int>(values.size() / 2) - 1;
    }
    [[nodiscard]] double left(int l) const { return values.at(static_cast<std::size_t>(l)); }
    [[nodiscard]] double right(int l) const {
        return values.at(static_cast<std::size_t>(degree() + 1 + l));
    }
    [[nodiscard]] Eigen::VectorXd as_vector() const {
        return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    }
};

/// Piecewise polynomial with pieces P_0..P_s split at knots t_1 < ... < t_s.
/// Piece i is active on [t_i, t_{i+1}); the last piece also owns t = 1.
/// Pieces are monomial coefficient vectors of length d+1 in the global variable t.
class NonUniformSpline {
public:
    NonUniformSpline(int degree, std::vector<double> knots, std::vector<std::vector<double>> pieces)
        : degree_(degree), knots_(std::move(knots)), pieces_(std::move(pieces)) {
        if (degree_ < 0) throw std::invalid_argument("NonUniformSpline: negative degree");
        if (pieces_.size() != knots_.size() + 1) {
            throw std::invalid_argument("NonUniformSpline: need exactly one more piece than knots");
        }
        for (std::size_t i = 0; i < knots_.size(); ++i) {
            require_in_interval(knots_[i], "NonUniformSpline knot");
            if (i > 0 && !(knots_[i] > knots_[i - 1])) {
                throw std::invalid_argument("NonUniformSpline: knots must be strictly increasing");
            }
        }
        for (auto& p : pieces_) {
            if (p.size() > static_cast<std::size_t>(degree_ + 1)) {
                throw std::invalid_argument("NonUniformSpline: piece exceeds the spline degree");
            }
            p.resize(static_cast<std::size_t>(degree_ + 1), 0.0);
        }
        check_smoothness();
    }

    [[nodiscard]] int degree() const { return degree_; }
    [[nodiscard]] const std::vector<double>& knots() const { return knots_; }
    [[nodiscard]] const std::vector<std::vector<double>>& pieces() const { return pieces_; }

    [[nodiscard]] std::size_t piece_index(double t) const {
        return static_cast<std::size_t>(std::upper_bound(knots_.begin(), knots_.end(), t) - knots_.begin());
    }

    [[nodiscard]] double operator()(double t, int order = 0) const {
        require_in_interval(t, "NonUniformSpline");
        return mono::eval(pieces_[piece_index(t)], t, order);
    }

    /// Largest |P_{i-1}^{(l)}(t_i) - P_i^{(l)}(t_i)| over knots and l < d,
    /// relative to the size of the pieces.
    [[nodiscard]] double smoothness_defect() const {
        double worst = 0.0;
        for (std::size_t i = 0; i < knots_.size(); ++i) {
            for (int l = 0; l < degree_; ++l) {
                const double a = mono::eval(pieces_[i], knots_[i], l);
                const double b = mono::eval(pieces_[i + 1], knots_[i], l);
                worst = std::max(worst, std::abs(a - b) / (1.0 + std::max(std::abs(a), std::abs(b))));
            }
        }
        return worst;
    }

private:
    void check_smoothness() const {
        if (smoothness_defect() > 1e-9) {
            throw std::invalid_argument("NonUniformSpline: pieces do not join with C^{d-1} smoothness");
        }
    }

    int degree_;
    std::vector<double> knots_;
    std::vector<std::vector<double>> pieces_;
};

[[nodiscard]] inline BoundaryVector boundary_vector(const NonUniformSpline& f) {
    const int d = f.degree();
    BoundaryVector b;
    b.values.resize(static_cast<std::size_t>(2 * (d + 1)));
    for (int l = 0; l <= d; ++l) {
        b.values[static_cast<std::size_t>(l)] = mono::eval(f.pieces().front(), -1.0, l);
        b.values[static_cast<std::size_t>(d + 1 + l)] = mono::eval(f.pieces().back(), 1.0, l);
    }
    return b;
}

/// f^{(d+1)} as the atomic measure of d-th derivative jumps at the knots.
/// Jumps at the level of rounding noise are treated as absent.
[[nodiscard]] inline DiscreteMeasure distributional_derivative(const NonUniformSpline& f) {
    const int d = f.degree();
    const double dfact = mono::factorial(d);
    const auto top = [&](std::size_t i) { return dfact * f.pieces()[i][static_cast<std::size_t>(d)]; };
    double scale = 0.0;
    for (std::size_t i = 0; i < f.pieces().size(); ++i) scale = std::max(scale, std::abs(top(i)));
    std::vector<double> t, a;
    for (std::size_t i = 0; i < f.knots().size(); ++i) {
        const double jump = top(i + 1) - top(i);
        if (std::abs(jump) <= 1e-12 * scale) continue;
        t.push_back(f.knots()[i]);
        a.push_back(jump);
    }
    return {std::move(t), std::move(a)};
}

struct TransferMatrices {
    Eigen::MatrixXd w1;  ///< (d+1) x 2(d+1): orders 0..d
    Eigen::MatrixXd w2;  ///< (m-d) x 2(d+1): boundary part of orders d+1..m
};

/// Boundary coefficients of c_k(f^{(d+1)}) from repeated integration by parts.
[[nodiscard]] inline TransferMatrices transfer_matrices(int m, int d) {
    if (d < 0 || m <= d) {
        throw std::invalid_argument("transfer_matrices: need m > d >= 0 (got m=" + std::to_string(m) +
                                    ", d=" + std::to_string(d) + ")");
    }
    const int cols = 2 * (d + 1);
    Eigen::MatrixXd all = Eigen::MatrixXd::Zero(m + 1, cols);
    all(0, d) = -1.0;
    all(0, 2 * d + 1) = 1.0;
    for (int k = 1; k <= m; ++k) {
        for (int l = 0; l <= std::min(k, d); ++l) {
            const double w = kSqrt2 * endpoint_weight(k, l);
            all(k, d + 1 + (d - l)) += (l % 2 == 0 ? 1.0 : -1.0) * w;
            all(k, d - l) += (k % 2 == 0 ? -1.0 : 1.0) * w;
        }
    }
    return {all.topRows(d + 1), all.bottomRows(m - d)};
}

namespace detail {

// integral over [lo, hi] of g * phi_k^{(order)}. The integrand has large
// coefficients that largely cancel, so the work is done in long double on
// the integer T-series of T_k^{(order)}, with sqrt(2) applied at the end.
inline double pair_with_phi_derivative(std::span<const double> g, int k, int order, double lo, double hi) {
    using ld = long double;
    std::vector<double> e(static_cast<std::size_t>(k + 1), 0.0);
    e[static_cast<std::size_t>(k)] = 1.0;
    const auto h = tseries::derivative(e, order);
    std::vector<ld> prod(g.size() + h.size(), 0.0L);
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (std::size_t j = 0; j < h.size(); ++j) {
            const ld v = 0.5L * static_cast<ld>(g[i]) * static_cast<ld>(h[j]);
            prod[i + j] += v;
            prod[i > j ? i - j : j - i] += v;
        }
    }
    const std::size_t n = prod.size();
    std::vector<ld> prim(n + 1, 0.0L);
    auto coef = [&](std::size_t q) { return q < n ? prod[q] : 0.0L; };
    prim[1] = coef(0) - 0.5L * coef(2);
    for (std::size_t q = 2; q <= n; ++q) prim[q] = (coef(q - 1) - coef(q + 1)) / (2.0L * static_cast<ld>(q));
    auto eval = [&](ld t) {
        ld b1 = 0.0L, b2 = 0.0L;
        for (std::size_t q = prim.size() - 1; q >= 1; --q) {
            const ld b0 = prim[q] + 2.0L * t * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        return prim[0] + t * b1 - b2;
    };
    const ld scale = (k == 0) ? 1.0L : std::sqrt(2.0L);
    return static_cast<double>(scale * (eval(hi) - eval(lo)));
}

}  // namespace detail

/// <f, phi_k^{(d+1)}> for k = d+1..m, integrated exactly piece by piece.
[[nodiscard]] inline Eigen::VectorXd projection_vector(const NonUniformSpline& f, int m) {
    const int d = f.degree();
    if (m <= d) throw std::invalid_argument("projection_vector: need m > d");
    std::vector<std::vector<double>> piece_t;
    for (const auto& p : f.pieces()) piece_t.push_back(tseries::from_monomial(p));
    std::vector<double> edges{-1.0};
    edges.insert(edges.end(), f.knots().begin(), f.knots().end());
    edges.push_back(1.0);

    Eigen::VectorXd out(m - d);
    for (int k = d + 1; k <= m; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < piece_t.size(); ++i) {
            if (edges[i + 1] > edges[i]) acc += detail::pair_with_phi_derivative(piece_t[i], k, d + 1, edges[i], edges[i + 1]);
        }
        out(k - d - 1) = acc;
    }
    return out;
}

/// Block product of the transfer identity.
[[nodiscard]] inline Eigen::VectorXd moments_via_transfer(const Eigen::VectorXd& p, const BoundaryVector& b, int m,
                                                          int d) {
    if (b.degree() != d) throw std::invalid_argument("moments_via_transfer: boundary vector length does not match d");
    if (p.size() != m - d) {
        throw std::invalid_argument("moments_via_transfer: projection vector must have m-d entries");
    }
    const auto W = transfer_matrices(m, d);
    const Eigen::VectorXd bv = b.as_vector();
    Eigen::VectorXd c(m + 1);
    c.head(d + 1) = W.w1 * bv;
    c.tail(m - d) = ((d + 1) % 2 == 0 ? 1.0 : -1.0) * p + W.w2 * bv;
    return c;
}

struct SplineReconstruction {
    NonUniformSpline spline;
    /// P_s^{(l)}(1) - b_right(l) for l = 0..d.
    std::vector<double> right_boundary_mismatch;
    double right_boundary_residual = 0.0;  ///< max |mismatch|
};

/// The unique spline whose (d+1)-th derivative is the given spikes and whose
/// left boundary data is the first half of b. The right half of b is only
/// compared, not imposed.
[[nodiscard]] inline SplineReconstruction integrate_from_spikes(const DiscreteMeasure& spikes, const BoundaryVector& b,
                                                                int d) {
    if (b.degree() != d) {
        throw std::invalid_argument("integrate_from_spikes: boundary vector has length " +
                                    std::to_string(b.values.size()) + ", expected " + std::to_string(2 * (d + 1)));
    }
    std::vector<double> piece(static_cast<std::size_t>(d + 1), 0.0);
    for (int l = 0; l <= d; ++l) {
        const auto term = mono::shifted_power(-1.0, l, b.left(l) / mono::factorial(l));
        for (std::size_t i = 0; i < term.size(); ++i) piece[i] += term[i];
    }
    std::vector<std::vector<double>> pieces{piece};
    for (std::size_t k = 0; k < spikes.size(); ++k) {
        const auto term = mono::shifted_power(spikes.support()[k], d, spikes.weights()[k] / mono::factorial(d));
        for (std::size_t i = 0; i < term.size(); ++i) piece[i] += term[i];
        pieces.push_back(piece);
    }
    NonUniformSpline spline(d, spikes.support(), std::move(pieces));
    std::vector<double> mismatch(static_cast<std::size_t>(d + 1));
    double worst = 0.0;
    for (int l = 0; l <= d; ++l) {
        mismatch[static_cast<std::size_t>(l)] = mono::eval(spline.pieces().back(), 1.0, l) - b.right(l);
        worst = std::max(worst, std::abs(mismatch[static_cast<std::size_t>(l)]));
    }
    return {std::move(spline), std::move(mismatch), worst};
}

}  // namespace chebsr
