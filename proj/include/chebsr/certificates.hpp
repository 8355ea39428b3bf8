#pragma once

// Constructive dual certificates on [-1, 1].
//
// The support T is mapped to a symmetric point set X on the unit circle
// (x = 1/2 +- arccos(t) / (2 pi)), a trigonometric interpolant built from the
// squared Fejer kernel is solved for there, and the result is pulled back to
// an algebraic polynomial through theta = 2 pi (x - 1/2), t = cos theta.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "chebsr/cheb_core.hpp"
#include "chebsr/measures.hpp"

namespace chebsr {

/// Certificate constants.
struct CertificateConstants {
    static constexpr double c0 = 2.0 * std::numbers::pi * 0.1649;
    static constexpr double C1 = 0.00424;
    static constexpr double C2 = 0.25;
    static constexpr double Ca = 0.00848;
    static constexpr double Cb = 0.00879;
};

struct SymmetrizedSupport {
    std::vector<double> points;  ///< sorted, in [0, 1)
    /// For each input point, the indices of its images in `points`
    /// (one index when both images coincide).
    std::vector<std::vector<std::size_t>> images;
};

/// X = 1/2 +- arccos(T) / (2 pi), with coincident images merged. The images 0
/// and 1 of t = -1 are the same point of the circle and are stored as 0.
[[nodiscard]] inline SymmetrizedSupport symmetrize_support(const std::vector<double>& T) {
    struct Img {
        double x;
        std::size_t owner;
    };
    std::vector<Img> raw;
    for (std::size_t j = 0; j < T.size(); ++j) {
        require_in_interval(T[j], "symmetrize_support");
        const double h = std::acos(T[j]) / (2.0 * kPi);
        for (double x : {0.5 - h, 0.5 + h}) raw.push_back({x >= 1.0 ? x - 1.0 : x, j});
    }
    std::sort(raw.begin(), raw.end(), [](const Img& a, const Img& b) { return a.x < b.x; });
    SymmetrizedSupport out;
    out.images.resize(T.size());
    for (const auto& r : raw) {
        if (out.points.empty() || std::abs(r.x - out.points.back()) > 1e-14) out.points.push_back(r.x);
        auto& im = out.images[r.owner];
        const std::size_t idx = out.points.size() - 1;
        if (std::find(im.begin(), im.end(), idx) == im.end()) im.push_back(idx);
    }
    return out;
}

/// K(t) = [sin(M pi t) / (M sin(pi t))]^4 with M = m/2 + 1, a trigonometric
/// polynomial of degree m in t with period 1. Evaluated through its Fourier
/// coefficients, so integers need no special treatment.
class FejerKernelSq {
public:
    explicit FejerKernelSq(int m) : m_(m) {
        if (m < 2 || m % 2 != 0) {
            throw std::invalid_argument("FejerKernelSq: degree must be even and >= 2, got " + std::to_string(m));
        }
        const int M = m / 2 + 1;
        // D^2 = (1/M^2) sum_{|n|<M} (M - |n|) e^{2 pi i n t}; K = (D^2)^2.
        const double scale = 1.0 / (static_cast<double>(M) * M * M * M);
        coeff_.assign(static_cast<std::size_t>(m + 1), 0.0);
        for (int k = 0; k <= m; ++k) {
            double acc = 0.0;
            for (int n = -(M - 1); n <= M - 1; ++n) {
                const int r = k - n;
                if (std::abs(r) <= M - 1) acc += static_cast<double>(M - std::abs(n)) * (M - std::abs(r));
            }
            coeff_[static_cast<std::size_t>(k)] = acc * scale;
        }
    }

    [[nodiscard]] int degree() const { return m_; }
    [[nodiscard]] const std::vector<double>& coefficients() const { return coeff_; }

    /// K^{(order)}(t) for order 0..3.
    [[nodiscard]] double operator()(double t, int order = 0) const {
        if (order < 0 || order > 3) throw std::invalid_argument("FejerKernelSq: derivative order must be 0..3");
        double acc = (order == 0) ? coeff_[0] : 0.0;
        for (int k = 1; k <= m_; ++k) {
            const double w = 2.0 * kPi * k;
            const double arg = w * t;
            double f = 0.0;
            switch (order) {
                case 0: f = std::cos(arg); break;
                case 1: f = -w * std::sin(arg); break;
                case 2: f = -w * w * std::cos(arg); break;
                default: f = w * w * w * std::sin(arg); break;
            }
            acc += 2.0 * coeff_[static_cast<std::size_t>(k)] * f;
        }
        return acc;
    }

private:
    int m_;
    std::vector<double> coeff_;
};

enum class CertificateKind { SignedInterpolant, QIC };

[[nodiscard]] inline const char* to_string(CertificateKind k) {
    return k == CertificateKind::SignedInterpolant ? "signed_interpolant" : "qic";
}

struct Certificate {
    CertificateKind kind = CertificateKind::QIC;
    int m = 0;
    std::vector<double> support;
    std::vector<double> targets;   ///< unit values at the support points
    int anchor = -1;               ///< index of the +1 point for SignedInterpolant
    SymmetrizedSupport circle;
    Eigen::VectorXd kernel_weights;  ///< alpha_i on K(x - x_i)
    Eigen::VectorXd slope_weights;   ///< beta_i on K'(x - x_i)
    std::vector<double> cosine_coeffs;  ///< p(theta) = sum a_k cos(k theta)
    ChebPoly poly;                 ///< the certificate on [-1, 1]
    double rcond = 0.0;            ///< reciprocal condition estimate of the interpolation system
    double odd_residual = 0.0;     ///< max |p(theta) - p(-theta)| / 2 over a test grid

    /// p^{(order)}(theta), theta in [0, pi].
    [[nodiscard]] double trig(double theta, int order = 0) const {
        double acc = 0.0;
        for (std::size_t k = 0; k < cosine_coeffs.size(); ++k) {
            const double kd = static_cast<double>(k);
            const double a = cosine_coeffs[k];
            switch (order) {
                case 0: acc += a * std::cos(kd * theta); break;
                case 1: acc -= a * kd * std::sin(kd * theta); break;
                default: acc -= a * kd * kd * std::cos(kd * theta); break;
            }
        }
        return acc;
    }
};

/// Builds the certificate of the given kind. For SignedInterpolant the
/// targets must be +1 at exactly one point (the anchor) and -1 elsewhere; the
/// trigonometric interpolant of those values is returned as (p + 1) / 2, which
/// is 1 at the anchor and 0 at the other support points. For QIC the
/// interpolant of the given unit values is returned as is.
[[nodiscard]] inline Certificate build_certificate(const std::vector<double>& T, int m,
                                                   const std::vector<double>& targets, CertificateKind kind,
                                                   bool require_separation = true) {
    if (T.empty()) throw std::invalid_argument("build_certificate: empty support");
    if (targets.size() != T.size()) throw std::invalid_argument("build_certificate: one target per support point");
    for (std::size_t j = 1; j < T.size(); ++j) {
        if (!(T[j] > T[j - 1])) throw std::invalid_argument("build_certificate: support must be strictly increasing");
    }
    for (double v : targets) {
        if (std::abs(std::abs(v) - 1.0) > 1e-12) throw std::invalid_argument("build_certificate: targets must have modulus 1");
    }
    if (require_separation && !separation_ok(T, m)) {
        throw std::invalid_argument("build_certificate: support violates the separation condition for m = " +
                                    std::to_string(m));
    }
    const FejerKernelSq K(m);

    Certificate c;
    c.kind = kind;
    c.m = m;
    c.support = T;
    c.targets = targets;
    if (kind == CertificateKind::SignedInterpolant) {
        int plus = 0;
        for (std::size_t j = 0; j < targets.size(); ++j) {
            if (targets[j] > 0) {
                ++plus;
                c.anchor = static_cast<int>(j);
            }
        }
        if (plus != 1) throw std::invalid_argument("build_certificate: signed interpolant needs exactly one +1 target");
    }
    c.circle = symmetrize_support(T);
    const auto& X = c.circle.points;
    const auto n = static_cast<Eigen::Index>(X.size());
    Eigen::VectorXd v(n);
    for (std::size_t j = 0; j < T.size(); ++j) {
        for (std::size_t idx : c.circle.images[j]) v(static_cast<Eigen::Index>(idx)) = targets[j];
    }

    // Unknowns (alpha, m beta); rows q(x_l) = v_l and q'(x_l) / m = 0. The
    // factors of m balance the kernel derivatives, which grow like m^order.
    const double md = static_cast<double>(m);
    Eigen::MatrixXd A(2 * n, 2 * n);
    for (Eigen::Index l = 0; l < n; ++l) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double u = X[static_cast<std::size_t>(l)] - X[static_cast<std::size_t>(i)];
            A(l, i) = K(u, 0);
            A(l, n + i) = K(u, 1) / md;
            A(n + l, i) = K(u, 1) / md;
            A(n + l, n + i) = K(u, 2) / (md * md);
        }
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(2 * n);
    rhs.head(n) = v;
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    c.rcond = lu.rcond();
    if (!(c.rcond > 1e-14)) {
        throw std::runtime_error("build_certificate: interpolation system is numerically singular (rcond " +
                                 std::to_string(c.rcond) + ")");
    }
    const Eigen::VectorXd sol = lu.solve(rhs);
    c.kernel_weights = sol.head(n);
    c.slope_weights = sol.tail(n) / md;

    auto qtilde = [&](double x) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double u = x - X[static_cast<std::size_t>(i)];
            acc += c.kernel_weights(i) * K(u, 0) + c.slope_weights(i) * K(u, 1);
        }
        return acc;
    };

    // DCT-I on theta_j = pi j / m recovers the cosine coefficients exactly.
    std::vector<double> samples(static_cast<std::size_t>(m + 1));
    for (int j = 0; j <= m; ++j) samples[static_cast<std::size_t>(j)] = qtilde(0.5 + 0.5 * j / md);
    c.cosine_coeffs.assign(static_cast<std::size_t>(m + 1), 0.0);
    for (int k = 0; k <= m; ++k) {
        double acc = 0.0;
        for (int j = 0; j <= m; ++j) {
            const double w = (j == 0 || j == m) ? 0.5 : 1.0;
            acc += w * samples[static_cast<std::size_t>(j)] * std::cos(kPi * k * j / md);
        }
        acc *= 2.0 / md;
        if (k == 0 || k == m) acc *= 0.5;
        c.cosine_coeffs[static_cast<std::size_t>(k)] = acc;
    }
    const int probes = 4 * m;
    for (int i = 1; i < probes; ++i) {
        const double h = 0.5 * i / probes;
        c.odd_residual = std::max(c.odd_residual, 0.5 * std::abs(qtilde(0.5 + h) - qtilde(0.5 - h)));
    }

    std::vector<double> phi(static_cast<std::size_t>(m + 1));
    for (int k = 0; k <= m; ++k) {
        double a = c.cosine_coeffs[static_cast<std::size_t>(k)];
        if (kind == CertificateKind::SignedInterpolant) a = (k == 0) ? 0.5 * (a + 1.0) : 0.5 * a;
        phi[static_cast<std::size_t>(k)] = (k == 0) ? a : a / kSqrt2;
    }
    c.poly = ChebPoly(std::move(phi));
    return c;
}

struct PropertyMargin {
    std::string name;
    double worst_margin = std::numeric_limits<double>::infinity();  ///< +inf when no grid point applies
    long points = 0;
};

struct CertificateReport {
    CertificateKind kind = CertificateKind::QIC;
    int m = 0;
    int grid_size = 0;
    double interpolation_error = 0.0;
    std::vector<PropertyMargin> properties;
    double bernstein_ratio = 0.0;  ///< max |p''| / m^2 on the grid
    double odd_residual = 0.0;
    double rcond = 0.0;
    bool passed = false;

    [[nodiscard]] const PropertyMargin& property(const std::string& name) const {
        for (const auto& p : properties) {
            if (p.name == name) return p;
        }
        throw std::out_of_range("CertificateReport: no property " + name);
    }
};

inline constexpr double kMarginTolerance = -1e-9;
inline constexpr double kInterpolationTolerance = 1e-8;

/// Checks the certified inequalities on an arccos-uniform grid of
/// `grid_size` points and reports the worst margin of each.
[[nodiscard]] inline CertificateReport verify_certificate(const Certificate& c, int grid_size) {
    if (grid_size < 10 * c.m) throw std::invalid_argument("verify_certificate: grid_size must be at least 10 m");
    using K = CertificateConstants;
    const double md = c.m;
    const double near = K::c0 / md;
    const auto& T = c.support;
    std::vector<double> thetaT(T.size());
    for (std::size_t l = 0; l < T.size(); ++l) thetaT[l] = std::acos(T[l]);

    CertificateReport r;
    r.kind = c.kind;
    r.m = c.m;
    r.grid_size = grid_size;
    r.rcond = c.rcond;
    r.odd_residual = c.odd_residual;

    for (std::size_t l = 0; l < T.size(); ++l) {
        double want = c.targets[l];
        if (c.kind == CertificateKind::SignedInterpolant) want = (static_cast<int>(l) == c.anchor) ? 1.0 : 0.0;
        r.interpolation_error = std::max(r.interpolation_error, std::abs(eval_poly(c.poly, T[l]) - want));
    }

    auto update = [&](PropertyMargin& p, double margin) {
        p.worst_margin = std::min(p.worst_margin, margin);
        ++p.points;
    };
    const auto coeffs = tseries::from_phi(c.poly.coeffs);

    if (c.kind == CertificateKind::SignedInterpolant) {
        PropertyMargin p3lo{"near_anchor_lower"}, p3hi{"near_anchor_upper"};
        PropertyMargin p4lo{"near_other_lower"}, p4hi{"near_other_upper"};
        PropertyMargin p5lo{"far_lower"}, p5hi{"far_upper"};
        const auto j = static_cast<std::size_t>(c.anchor);
        for (int i = 0; i < grid_size; ++i) {
            const double th = kPi * i / (grid_size - 1);
            const double q = tseries::clenshaw(coeffs, std::cos(th));
            bool far = true;
            for (std::size_t l = 0; l < T.size(); ++l) {
                const double dist = std::abs(th - thetaT[l]);
                if (dist > near) continue;
                far = false;
                const double pinch = md * md * dist * dist;
                if (l == j) {
                    update(p3lo, q - (1.0 - K::C2 * pinch));
                    update(p3hi, (1.0 - K::C1 * pinch) - q);
                } else {
                    update(p4lo, q - K::C1 * pinch);
                    update(p4hi, K::C2 * pinch - q);
                }
            }
            if (far) {
                update(p5lo, q - K::c0 * K::c0 * K::C1);
                update(p5hi, (1.0 - K::c0 * K::c0 * K::C1) - q);
            }
        }
        r.properties = {p3lo, p3hi, p4lo, p4hi, p5lo, p5hi};
    } else {
        PropertyMargin p2{"near_pinch"}, p3{"far_gap"}, qic{"qic"};
        for (int i = 0; i < grid_size; ++i) {
            const double th = kPi * i / (grid_size - 1);
            const double gap = 1.0 - std::abs(tseries::clenshaw(coeffs, std::cos(th)));
            double nearest = std::numeric_limits<double>::infinity();
            for (double tl : thetaT) nearest = std::min(nearest, std::abs(th - tl));
            if (nearest <= near) {
                update(p2, gap - 2.0 * K::C1 * md * md * nearest * nearest);
            } else {
                update(p3, gap - 2.0 * K::c0 * K::c0 * K::C1);
            }
            update(qic, gap - std::min(K::Ca * md * md * nearest * nearest, K::Cb));
        }
        r.properties = {p2, p3, qic};
    }

    // Bernstein: the trigonometric form has |p''| <= m^2 sup |p|.
    for (int i = 0; i < grid_size; ++i) {
        const double th = kPi * i / (grid_size - 1);
        r.bernstein_ratio = std::max(r.bernstein_ratio, std::abs(c.trig(th, 2)) / (md * md));
    }

    r.passed = r.interpolation_error <= kInterpolationTolerance;
    for (const auto& p : r.properties) r.passed = r.passed && p.worst_margin >= kMarginTolerance;
    return r;
}

}  // namespace chebsr
