#pragma once

// Chebyshev basis machinery on [-1, 1].
//
// Two coefficient conventions appear in this library:
//   * ChebPoly holds coefficients in the orthonormal system
//     phi_0 = 1, phi_k = sqrt(2) T_k  (k >= 1).
//   * The tseries:: helpers work on plain Chebyshev-T coefficients
//     c_0 T_0 + c_1 T_1 + ...; they are the arithmetic layer underneath.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>

namespace chebsr {

inline constexpr double kSqrt2 = std::numbers::sqrt2;
inline constexpr double kPi = std::numbers::pi;

inline void require_in_interval(double t, const char* what) {
    if (!(t >= -1.0 && t <= 1.0)) {
        throw std::domain_error(std::string(what) + ": point " + std::to_string(t) +
                                " lies outside [-1, 1]");
    }
}

/// phi_k(t): 1 for k = 0, sqrt(2) cos(k arccos t) otherwise.
[[nodiscard]] inline double eval_phi(int k, double t) {
    if (k < 0) throw std::invalid_argument("eval_phi: negative basis order");
    require_in_interval(t, "eval_phi");
    if (k == 0) return 1.0;
    return kSqrt2 * std::cos(static_cast<double>(k) * std::acos(t));
}

/// Polynomial expanded in the orthonormal phi system.
struct ChebPoly {
    std::vector<double> coeffs{0.0};

    ChebPoly() = default;
    explicit ChebPoly(std::vector<double> c) : coeffs(std::move(c)) {
        if (coeffs.empty()) throw std::invalid_argument("ChebPoly: needs at least one coefficient");
    }

    [[nodiscard]] int degree_bound() const { return static_cast<int>(coeffs.size()) - 1; }
    [[nodiscard]] double operator()(double t) const;
};

namespace tseries {

/// Clenshaw recurrence for sum c_k T_k(t). No domain check: callers use it
/// for antiderivatives evaluated at +-1 as well as interior points.
[[nodiscard]] inline double clenshaw(std::span<const double> c, double t) {
    if (c.empty()) return 0.0;
    double b1 = 0.0, b2 = 0.0;
    for (std::size_t k = c.size() - 1; k >= 1; --k) {
        const double b0 = c[k] + 2.0 * t * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    return c[0] + t * b1 - b2;
}

[[nodiscard]] inline std::vector<double> from_phi(std::span<const double> alpha) {
    std::vector<double> c(alpha.begin(), alpha.end());
    for (std::size_t k = 1; k < c.size(); ++k) c[k] *= kSqrt2;
    return c;
}

[[nodiscard]] inline ChebPoly to_phi(std::span<const double> c) {
    std::vector<double> alpha(c.begin(), c.end());
    if (alpha.empty()) alpha.push_back(0.0);
    for (std::size_t k = 1; k < alpha.size(); ++k) alpha[k] /= kSqrt2;
    return ChebPoly(std::move(alpha));
}

/// Coefficients of d/dt, one degree lower (a single zero for constants).
[[nodiscard]] inline std::vector<double> derivative(std::span<const double> c) {
    const std::size_t n = c.size();
    if (n <= 1) return {0.0};
    std::vector<double> d(n - 1, 0.0);
    // d_{k-1} = d_{k+1} + 2 k c_k, then halve d_0.
    for (std::size_t k = n - 1; k >= 1; --k) {
        const double next = (k + 1 < n - 1) ? d[k + 1] : 0.0;
        d[k - 1] = next + 2.0 * static_cast<double>(k) * c[k];
    }
    d[0] *= 0.5;
    return d;
}

[[nodiscard]] inline std::vector<double> derivative(std::span<const double> c, int order) {
    std::vector<double> d(c.begin(), c.end());
    for (int i = 0; i < order; ++i) d = derivative(d);
    return d;
}

/// Antiderivative with zero constant term in the T basis.
[[nodiscard]] inline std::vector<double> antiderivative(std::span<const double> c) {
    const std::size_t n = c.size();
    std::vector<double> a(n + 1, 0.0);
    auto coef = [&](std::size_t k) { return k < n ? c[k] : 0.0; };
    for (std::size_t k = 1; k <= n; ++k) {
        if (k == 1) {
            a[1] = coef(0) - 0.5 * coef(2);
        } else {
            a[k] = (coef(k - 1) - coef(k + 1)) / (2.0 * static_cast<double>(k));
        }
    }
    return a;
}

/// Product via T_i T_j = (T_{i+j} + T_{|i-j|}) / 2.
[[nodiscard]] inline std::vector<double> multiply(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) return {0.0};
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0.0) continue;
        for (std::size_t j = 0; j < b.size(); ++j) {
            const double h = 0.5 * a[i] * b[j];
            out[i + j] += h;
            out[i > j ? i - j : j - i] += h;
        }
    }
    return out;
}

/// Monomial coefficients (increasing powers) to T coefficients, by Horner's
/// rule with t*T_0 = T_1 and t*T_k = (T_{k+1} + T_{k-1}) / 2.
[[nodiscard]] inline std::vector<double> from_monomial(std::span<const double> mono) {
    if (mono.empty()) return {0.0};
    std::vector<double> c{mono.back()};
    for (std::size_t idx = mono.size() - 1; idx-- > 0;) {
        std::vector<double> next(c.size() + 1, 0.0);
        for (std::size_t k = 0; k < c.size(); ++k) {
            if (k == 0) {
                next[1] += c[0];
            } else {
                next[k + 1] += 0.5 * c[k];
                next[k - 1] += 0.5 * c[k];
            }
        }
        next[0] += mono[idx];
        c = std::move(next);
    }
    return c;
}

/// Trigonometric form: p(cos theta) = sum c_k cos(k theta), with its first two
/// theta-derivatives. Stable all the way to the endpoints.
struct ThetaValue {
    double value, d1, d2;
};

[[nodiscard]] inline ThetaValue eval_theta(std::span<const double> c, double theta) {
    ThetaValue v{0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < c.size(); ++k) {
        const double kd = static_cast<double>(k);
        const double ck = std::cos(kd * theta), sk = std::sin(kd * theta);
        v.value += c[k] * ck;
        v.d1 -= c[k] * kd * sk;
        v.d2 -= c[k] * kd * kd * ck;
    }
    return v;
}

/// Drops trailing coefficients below rel_tol * max|c| (keeps at least one).
[[nodiscard]] inline std::vector<double> trimmed(std::span<const double> c, double rel_tol) {
    double scale = 0.0;
    for (double v : c) scale = std::max(scale, std::abs(v));
    std::size_t n = c.size();
    while (n > 1 && std::abs(c[n - 1]) <= rel_tol * scale) --n;
    return {c.begin(), c.begin() + static_cast<std::ptrdiff_t>(std::max<std::size_t>(n, 1))};
}

/// Eigenvalues of the colleague matrix, i.e. all complex roots of sum c_k T_k.
/// Leading coefficient must be nonzero (trim first).
[[nodiscard]] inline std::vector<std::complex<double>> colleague_roots(std::span<const double> c) {
    const std::size_t n = c.size() - 1;
    if (c.empty() || n == 0) return {};
    if (n == 1) return {std::complex<double>(-c[0] / c[1], 0.0)};
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    const auto N = static_cast<Eigen::Index>(n);
    A(0, 1) = 1.0;
    for (Eigen::Index j = 1; j < N - 1; ++j) {
        A(j, j - 1) = 0.5;
        A(j, j + 1) = 0.5;
    }
    for (Eigen::Index j = 0; j < N; ++j) A(N - 1, j) = -c[static_cast<std::size_t>(j)] / (2.0 * c[n]);
    A(N - 1, N - 2) += 0.5;
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, /*computeEigenvectors=*/false);
    std::vector<std::complex<double>> roots;
    roots.reserve(n);
    for (Eigen::Index i = 0; i < N; ++i) roots.push_back(es.eigenvalues()(i));
    return roots;
}

}  // namespace tseries

/// Clenshaw evaluation of sum alpha_k phi_k(t).
[[nodiscard]] inline double eval_poly(const ChebPoly& p, double t) {
    require_in_interval(t, "eval_poly");
    const auto c = tseries::from_phi(p.coeffs);
    return tseries::clenshaw(c, t);
}

inline double ChebPoly::operator()(double t) const { return eval_poly(*this, t); }

/// d(u, v) = |arccos u - arccos v|.
[[nodiscard]] inline double arccos_distance(double u, double v) {
    require_in_interval(u, "arccos_distance");
    require_in_interval(v, "arccos_distance");
    return std::abs(std::acos(u) - std::acos(v));
}

/// w_{k,l} = T_k^{(l)}(1) = prod_{j<l} (k^2 - j^2) / (2j + 1), zero when k < l.
/// T_k^{(l)}(-1) = (-1)^{k+l} w_{k,l}.
[[nodiscard]] inline double endpoint_weight(int k, int l) {
    if (k < 0 || l < 0) throw std::invalid_argument("endpoint_weight: negative order");
    if (k < l) return 0.0;
    // Numerator and denominator are accumulated separately so that the
    // integer-valued cases stay exact as long as they fit in 53 bits.
    long double num = 1.0L, den = 1.0L;
    const long double kk = static_cast<long double>(k) * static_cast<long double>(k);
    for (int j = 0; j < l; ++j) {
        num *= kk - static_cast<long double>(j) * j;
        den *= 2.0L * j + 1.0L;
    }
    return static_cast<double>(num / den);
}

/// Points cos(pi j / (n-1)), j = 0..n-1, returned in increasing order.
[[nodiscard]] inline std::vector<double> chebyshev_extrema_grid(int n) {
    if (n < 2) throw std::invalid_argument("chebyshev_extrema_grid: need at least two points");
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) g[static_cast<std::size_t>(n - 1 - j)] = std::cos(kPi * j / (n - 1));
    return g;
}

/// Thrown by unit_level_roots when the polynomial is numerically constant at
/// level lambda, so its level set is the whole interval.
class ConstantDual : public std::runtime_error {
public:
    explicit ConstantDual(double value)
        : std::runtime_error("dual polynomial is numerically constant at the level"), value_(value) {}
    [[nodiscard]] double value() const { return value_; }

private:
    double value_;
};

namespace detail {

// Local maximiser of |p(cos theta)| on [lo, hi]: Brent, then Newton on the
// theta-derivative to push the location to full precision.
inline double refine_abs_max(std::span<const double> c, double lo, double hi, double start) {
    auto neg_abs = [&](double th) { return -std::abs(tseries::eval_theta(c, th).value); };
    auto [theta, fval] = boost::math::tools::brent_find_minima(neg_abs, lo, hi, std::numeric_limits<double>::digits / 2);
    if (-neg_abs(start) > -fval) theta = start;
    for (int it = 0; it < 8; ++it) {
        if (theta <= 0.0 || theta >= kPi) break;  // endpoints are stationary in theta
        const auto v = tseries::eval_theta(c, theta);
        if (v.d2 == 0.0) break;
        const double step = v.d1 / v.d2;
        const double cand = theta - step;
        if (!(cand >= lo && cand <= hi)) break;
        if (std::abs(tseries::eval_theta(c, cand).value) + 1e-300 < std::abs(v.value)) break;
        theta = cand;
        if (std::abs(step) < 1e-16) break;
    }
    return theta;
}

}  // namespace detail

/// Location and value of max |p| on [-1, 1].
struct SupPoint {
    double t = 1.0;
    double value = 0.0;  ///< |p(t)|
};

/// Grid-refined maximiser of |p|: dense theta grid, then local refinement of
/// every grid-local maximum.
[[nodiscard]] inline SupPoint sup_point(const ChebPoly& p) {
    const auto c = tseries::from_phi(p.coeffs);
    const int m = std::max(1, p.degree_bound());
    const int n = 8 * (m + 1);
    const double h = kPi / n;
    std::vector<double> vals(static_cast<std::size_t>(n + 1));
    for (int i = 0; i <= n; ++i) vals[static_cast<std::size_t>(i)] = std::abs(tseries::eval_theta(c, i * h).value);
    const auto top = std::max_element(vals.begin(), vals.end());
    double best = *top, best_theta = static_cast<double>(top - vals.begin()) * h;
    for (int i = 0; i <= n; ++i) {
        const double v = vals[static_cast<std::size_t>(i)];
        const bool left = (i == 0) || v >= vals[static_cast<std::size_t>(i - 1)];
        const bool right = (i == n) || v >= vals[static_cast<std::size_t>(i + 1)];
        if (!(left && right)) continue;
        const double lo = std::max(0.0, (i - 1) * h), hi = std::min(kPi, (i + 1) * h);
        const double th = detail::refine_abs_max(c, lo, hi, i * h);
        const double val = std::abs(tseries::eval_theta(c, th).value);
        if (val > best) {
            best = val;
            best_theta = th;
        }
    }
    return {std::cos(best_theta), best};
}

[[nodiscard]] inline double sup_norm(const ChebPoly& p) { return sup_point(p).value; }

/// Points where |p| reaches the level lambda (up to relative slack tau).
///
/// Candidates come from the colleague-matrix roots of lambda^2 - p^2 (plus the
/// endpoints); each is refined to the nearby local maximiser of |p|, kept if
/// |p| >= lambda (1 - tau), and near-duplicates within 0.5/m in arccos distance
/// are merged. Result is sorted increasingly.
[[nodiscard]] inline std::vector<double> unit_level_roots(const ChebPoly& p, double lambda, double tau) {
    if (!(lambda > 0.0)) throw std::invalid_argument("unit_level_roots: lambda must be positive");
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("unit_level_roots: tau must lie in (0, 1)");

    const int m = p.degree_bound();
    const auto c = tseries::from_phi(p.coeffs);

    // Degenerate case: |p| numerically constant over a 4m-point grid.
    {
        const int n = std::max(4 * m, 2);
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (double t : chebyshev_extrema_grid(n)) {
            const double v = std::abs(tseries::clenshaw(c, t));
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (hi - lo < 1e-9 * lambda) {
            if (hi >= lambda * (1.0 - tau)) throw ConstantDual(tseries::clenshaw(c, 0.0));
            return {};
        }
    }

    // 1 - (p / lambda)^2 in the T basis.
    std::vector<double> scaled(c);
    for (double& v : scaled) v /= lambda;
    auto q = tseries::multiply(scaled, scaled);
    for (double& v : q) v = -v;
    q[0] += 1.0;
    q = tseries::trimmed(q, 1e-14);

    const double radius = 0.5 / std::max(m, 1);
    const double imag_tol = std::max(1e-8, 1.0 / std::max(m, 1));
    std::vector<double> thetas{0.0, kPi};
    for (const auto& z : tseries::colleague_roots(q)) {
        if (std::abs(z.imag()) > imag_tol) continue;
        if (z.real() < -1.0 - imag_tol || z.real() > 1.0 + imag_tol) continue;
        thetas.push_back(std::acos(std::clamp(z.real(), -1.0, 1.0)));
    }

    struct Hit {
        double theta, level;
    };
    std::vector<Hit> hits;
    const double floor_level = lambda * (1.0 - tau);
    for (double th0 : thetas) {
        const double lo = std::max(0.0, th0 - radius), hi = std::min(kPi, th0 + radius);
        const double th = detail::refine_abs_max(c, lo, hi, th0);
        const double level = std::abs(tseries::eval_theta(c, th).value);
        if (level >= floor_level) hits.push_back({th, level});
    }
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.theta < b.theta; });

    std::vector<Hit> merged;
    for (const auto& h : hits) {
        if (!merged.empty() && h.theta - merged.back().theta <= radius) {
            if (h.level > merged.back().level) merged.back() = h;
        } else {
            merged.push_back(h);
        }
    }
    std::vector<double> out;
    out.reserve(merged.size());
    for (auto it = merged.rbegin(); it != merged.rend(); ++it) out.push_back(std::cos(it->theta));
    return out;
}

}  // namespace chebsr
