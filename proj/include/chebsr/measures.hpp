#pragma once

// Finite signed atomic measures on [-1, 1] and the separation geometry used by
// the recovery guarantees.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "chebsr/cheb_core.hpp"

namespace chebsr {

/// sum_k a_k delta_{t_k}, kept canonical: support strictly increasing, no zero
/// weights. Coincident input points have their weights summed.
class DiscreteMeasure {
public:
    DiscreteMeasure() = default;

    DiscreteMeasure(std::vector<double> support, std::vector<double> weights) {
        if (support.size() != weights.size()) {
            throw std::invalid_argument("DiscreteMeasure: support and weights differ in length");
        }
        std::vector<std::size_t> order(support.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (double t : support) require_in_interval(t, "DiscreteMeasure");
        for (double a : weights) {
            if (!std::isfinite(a)) throw std::invalid_argument("DiscreteMeasure: non-finite weight");
        }
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t i, std::size_t j) { return support[i] < support[j]; });
        for (std::size_t idx : order) {
            if (!support_.empty() && support_.back() == support[idx]) {
                weights_.back() += weights[idx];
            } else {
                support_.push_back(support[idx]);
                weights_.push_back(weights[idx]);
            }
        }
        std::size_t keep = 0;
        for (std::size_t i = 0; i < support_.size(); ++i) {
            if (weights_[i] == 0.0) continue;
            support_[keep] = support_[i];
            weights_[keep] = weights_[i];
            ++keep;
        }
        support_.resize(keep);
        weights_.resize(keep);
    }

    [[nodiscard]] const std::vector<double>& support() const { return support_; }
    [[nodiscard]] const std::vector<double>& weights() const { return weights_; }
    [[nodiscard]] std::size_t size() const { return support_.size(); }
    [[nodiscard]] bool empty() const { return support_.empty(); }

    [[nodiscard]] DiscreteMeasure operator+(const DiscreteMeasure& other) const {
        auto s = support_;
        auto w = weights_;
        s.insert(s.end(), other.support_.begin(), other.support_.end());
        w.insert(w.end(), other.weights_.begin(), other.weights_.end());
        return {std::move(s), std::move(w)};
    }

    [[nodiscard]] DiscreteMeasure scaled(double c) const {
        auto w = weights_;
        for (double& v : w) v *= c;
        return {support_, std::move(w)};
    }

private:
    std::vector<double> support_;
    std::vector<double> weights_;
};

/// Generalized moments c_k = sum_j a_j phi_k(t_j), k = 0..m.
[[nodiscard]] inline Eigen::VectorXd moments(const DiscreteMeasure& mu, int m) {
    if (m < 0) throw std::invalid_argument("moments: negative order");
    Eigen::VectorXd c = Eigen::VectorXd::Zero(m + 1);
    for (std::size_t j = 0; j < mu.size(); ++j) {
        const double a = mu.weights()[j];
        const double theta = std::acos(mu.support()[j]);
        c(0) += a;
        for (int k = 1; k <= m; ++k) c(k) += a * kSqrt2 * std::cos(k * theta);
    }
    return c;
}

[[nodiscard]] inline double tv_norm(const DiscreteMeasure& mu) {
    double s = 0.0;
    for (double a : mu.weights()) s += std::abs(a);
    return s;
}

/// Smallest min(d, pi - d) over distinct pairs; +infinity with fewer than two points.
[[nodiscard]] inline double min_separation(std::span<const double> T) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < T.size(); ++i) {
        for (std::size_t j = i + 1; j < T.size(); ++j) {
            const double dist = arccos_distance(T[i], T[j]);
            best = std::min(best, std::min(dist, kPi - dist));
        }
    }
    return best;
}

/// Arccos distance from the points of T other than +-1 to the nearest endpoint.
[[nodiscard]] inline double edge_distance(std::span<const double> T) {
    double best = std::numeric_limits<double>::infinity();
    for (double t : T) {
        require_in_interval(t, "edge_distance");
        if (t == 1.0 || t == -1.0) continue;
        best = std::min({best, arccos_distance(t, 1.0), arccos_distance(t, -1.0)});
    }
    return best;
}

/// min(min_separation, 2 edge_distance) >= 5 pi / m.
[[nodiscard]] inline bool separation_ok(std::span<const double> T, int m) {
    if (m < 1) throw std::invalid_argument("separation_ok: m must be positive");
    return std::min(min_separation(T), 2.0 * edge_distance(T)) >= 5.0 * kPi / m;
}

}  // namespace chebsr
