#pragma once

// Recovery guarantees evaluated as numeric margins: the global and local
// control sums, the localization radius for large spikes, the same checks
// on spline derivatives, and the prediction inequality on random test
// polynomials.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "chebsr/cheb_core.hpp"
#include "chebsr/measures.hpp"
#include "chebsr/observation.hpp"
#include "chebsr/spline_model.hpp"

namespace chebsr {

struct RecoveryConstants {
    double c0 = 1.0361;
    double c1 = 235.85;
    double c2 = 220.72;
};

inline constexpr RecoveryConstants kRecoveryConstants{};

struct LocalizationEntry {
    std::size_t index = 0;   ///< position in the true support
    double location = 0.0;
    double amplitude = 0.0;
    double required_radius = 0.0;
    double achieved_distance = 0.0;  ///< arccos distance to the nearest recovered point
    [[nodiscard]] bool ok() const { return achieved_distance <= required_radius; }
};

struct RecoveryReport {
    int m = 0;
    double lambda = 0.0;
    double global_control = 0.0;
    double global_bound = 0.0;
    std::vector<double> local_controls;
    double local_bound = 0.0;
    std::vector<LocalizationEntry> localization;
    /// NaN until evaluate_lemma6 fills it.
    double lemma6_margin = std::numeric_limits<double>::quiet_NaN();
    RecoveryConstants constants = kRecoveryConstants;

    [[nodiscard]] bool global_ok() const { return global_control <= global_bound; }
    [[nodiscard]] bool local_ok() const {
        return std::all_of(local_controls.begin(), local_controls.end(), [&](double v) { return v <= local_bound; });
    }
    [[nodiscard]] bool localization_ok() const {
        return std::all_of(localization.begin(), localization.end(), [](const auto& e) { return e.ok(); });
    }
    [[nodiscard]] bool lemma6_ok() const { return std::isnan(lemma6_margin) || lemma6_margin <= 0.0; }
    [[nodiscard]] bool passed() const { return global_ok() && local_ok() && localization_ok() && lemma6_ok(); }
};

namespace detail {

inline double nearest_distance(double t, const std::vector<double>& points) {
    double best = std::numeric_limits<double>::infinity();
    for (double s : points) best = std::min(best, arccos_distance(t, s));
    return best;
}

inline void require_positive_m(int m, const char* who) {
    if (m < 1) throw std::invalid_argument(std::string(who) + ": m must be positive");
}

}  // namespace detail

/// sum_k |a_k| min(m^2 d(T, t_k)^2, c0^2). A recovered point with an empty
/// T counts at the cap c0^2.
[[nodiscard]] inline double global_control(const DiscreteMeasure& xhat, const std::vector<double>& T, int m,
                                           const RecoveryConstants& k = kRecoveryConstants) {
    detail::require_positive_m(m, "global_control");
    const double cap = k.c0 * k.c0;
    double sum = 0.0;
    for (std::size_t j = 0; j < xhat.size(); ++j) {
        const double dist = detail::nearest_distance(xhat.support()[j], T);
        const double scaled = std::isinf(dist) ? cap : std::min(m * m * dist * dist, cap);
        sum += std::abs(xhat.weights()[j]) * scaled;
    }
    return sum;
}

/// For each true spike, |a_i - (recovered mass within the closed arccos ball
/// of radius c0/m)|.
[[nodiscard]] inline std::vector<double> local_control(const DiscreteMeasure& xhat, const DiscreteMeasure& x, int m,
                                                       const RecoveryConstants& k = kRecoveryConstants) {
    detail::require_positive_m(m, "local_control");
    const double radius = k.c0 / m;
    std::vector<double> out;
    out.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double mass = 0.0;
        for (std::size_t j = 0; j < xhat.size(); ++j) {
            if (arccos_distance(x.support()[i], xhat.support()[j]) <= radius) mass += xhat.weights()[j];
        }
        out.push_back(std::abs(x.weights()[i] - mass));
    }
    return out;
}

/// sqrt(c1 lambda / (|a| - c2 lambda)) / m, or +infinity when |a| <= c2 lambda.
[[nodiscard]] inline double localization_radius(double amplitude, double lambda, int m,
                                                const RecoveryConstants& k = kRecoveryConstants) {
    detail::require_positive_m(m, "localization_radius");
    const double excess = std::abs(amplitude) - k.c2 * lambda;
    if (!(excess > 0.0)) return std::numeric_limits<double>::infinity();
    return std::sqrt(k.c1 * lambda / excess) / m;
}

/// Global, local and localization checks of xhat against the target x.
[[nodiscard]] inline RecoveryReport recovery_report(const DiscreteMeasure& xhat, const DiscreteMeasure& x, double lambda,
                                                    int m, const RecoveryConstants& k = kRecoveryConstants) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("recovery_report: lambda must be nonnegative");
    RecoveryReport r;
    r.m = m;
    r.lambda = lambda;
    r.constants = k;
    r.global_control = global_control(xhat, x.support(), m, k);
    r.global_bound = k.c1 * lambda;
    r.local_controls = local_control(xhat, x, m, k);
    r.local_bound = k.c2 * lambda;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double a = x.weights()[i];
        const double radius = localization_radius(a, lambda, m, k);
        if (std::isinf(radius)) continue;
        r.localization.push_back(
            {i, x.support()[i], a, radius, detail::nearest_distance(x.support()[i], xhat.support())});
    }
    return r;
}

/// The same checks applied to the (d+1)-th distributional derivatives, where
/// the jumps of the d-th derivative act as amplitudes.
[[nodiscard]] inline RecoveryReport theorem2_report(const NonUniformSpline& fhat, const NonUniformSpline& f,
                                                    double lambda, int m,
                                                    const RecoveryConstants& k = kRecoveryConstants) {
    if (fhat.degree() != f.degree()) {
        throw std::invalid_argument("theorem2_report: degree mismatch (" + std::to_string(fhat.degree()) + " vs " +
                                    std::to_string(f.degree()) + ")");
    }
    return recovery_report(distributional_derivative(fhat), distributional_derivative(f), lambda, m, k);
}

/// Random test polynomials of degree m: standard Gaussian phi-coefficients
/// divided by the maximum of |P| over the Chebyshev extrema grid of 4m + 1
/// points.
[[nodiscard]] inline std::vector<ChebPoly> random_unit_polynomials(int m, int count, std::uint64_t seed) {
    detail::require_positive_m(m, "random_unit_polynomials");
    const auto grid = chebyshev_extrema_grid(4 * m + 1);
    GaussianStream g(seed);
    std::vector<ChebPoly> out;
    out.reserve(static_cast<std::size_t>(std::max(count, 0)));
    for (int n = 0; n < count; ++n) {
        std::vector<double> c(static_cast<std::size_t>(m + 1));
        for (double& v : c) v = g();
        ChebPoly p(std::move(c));
        double sup = 0.0;
        for (double t : grid) sup = std::max(sup, std::abs(p(t)));
        for (double& v : p.coeffs) v /= sup;
        out.push_back(std::move(p));
    }
    return out;
}

[[nodiscard]] inline double integrate_against(const ChebPoly& p, const DiscreteMeasure& mu) {
    double s = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j) s += mu.weights()[j] * p(mu.support()[j]);
    return s;
}

/// max over the test polynomials of |int P d(xhat - x)| - (lambda + lambda0).
[[nodiscard]] inline double lemma6_margin(const DiscreteMeasure& xhat, const DiscreteMeasure& x, double lambda,
                                          double lambda0, int m, int trials, std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("lemma6_margin: trials must be at least 1");
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& p : random_unit_polynomials(m, trials, seed)) {
        worst = std::max(worst, std::abs(integrate_against(p, xhat) - integrate_against(p, x)));
    }
    return worst - (lambda + lambda0);
}

inline void evaluate_lemma6(RecoveryReport& r, const DiscreteMeasure& xhat, const DiscreteMeasure& x, double lambda0,
                            int trials, std::uint64_t seed) {
    r.lemma6_margin = lemma6_margin(xhat, x, r.lambda, lambda0, r.m, trials, seed);
}

}  // namespace chebsr
