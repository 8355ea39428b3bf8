#pragma once

// TV-regularised moment fitting with exact low-order moments:
//
//   minimize_mu  1/2 sum_{k>d} (c_k(mu) - y_k)^2 + lambda ||mu||_TV
//   subject to   c_k(mu) = y_k for k <= d,
//
// solved through its dual
//
//   minimize_alpha  <alpha, y> + 1/2 sum_{k>d} alpha_k^2
//   subject to      |sum_k alpha_k phi_k| <= lambda on [-1, 1].
//
// Sign convention: at the optimum alpha_k = c_k(x) - y_k for k > d, and the
// primal atoms sit where -sum alpha_k phi_k equals lambda times their sign.
// That polynomial, -sum alpha_k phi_k, is what DualSolution::dual_poly holds.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "chebsr/cheb_core.hpp"
#include "chebsr/measures.hpp"
#include "chebsr/observation.hpp"
#include "chebsr/sdp.hpp"

namespace chebsr {

/// Raised when the SDP does not reach the requested accuracy.
class SolverFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DualSolution {
    Eigen::VectorXd alpha;  ///< minimiser of the dual program
    ChebPoly dual_poly;     ///< -sum alpha_k phi_k; equals lambda * sign(a_i) on the support
    double objective = 0.0;
};

struct KktResiduals {
    double tv_identity_gap = 0.0;   ///< |lambda ||x||_TV - sum_i a_i P(t_i)|
    double feasibility_gap = 0.0;   ///< max(0, sup |P| - lambda)
};

struct PrimalSolution {
    DiscreteMeasure measure;
    DualSolution dual;
    KktResiduals kkt_residuals;
    bool degenerate = false;
    /// Multipliers of the exact-moment constraints (orders 0..d), entering the
    /// subgradient polynomial alongside the residuals y_k - c_k for k > d.
    Eigen::VectorXd multipliers;
    double lambda = 0.0;
    double primal_objective = 0.0;
    double dual_objective = 0.0;  ///< dual program value at alpha (minimisation form)
    double duality_gap = 0.0;     ///< |primal + dual| / max(|primal|, |dual|)
    int sdp_iterations = 0;
    sdp::Status sdp_status = sdp::Status::MaxIter;
    double elapsed_seconds = 0.0;
};

struct BlassoOptions {
    double level_tol = 1e-4;         ///< tau in the level-set extraction
    double sign_floor = 0.9;         ///< atoms with |P(t)|/lambda below this are rejected
    bool polish = true;              ///< Newton refinement of positions and weights
    int fallback_grid = 512;         ///< grid size for the constant-dual fallback
    int exchange_rounds = 8;         ///< max atoms added where the subgradient overshoots
    sdp::SdpOptions sdp{};
};

/// Dual program as an SDP. Free variables are alpha_0..alpha_m. Block 0
/// certifies lambda + sum alpha_k phi_k >= 0 and block 1 certifies
/// lambda - sum alpha_k phi_k >= 0 through the Gram (trace) parameterisation
/// of nonnegative cosine polynomials: r_k = sum_j Q_{j+k, j} with
/// r_0 = lambda +- alpha_0 and r_k = +-alpha_k / sqrt(2).
[[nodiscard]] inline sdp::SdpProblem assemble_dual_sdp(const Observation& obs, double lambda) {
    obs.validate();
    if (!(lambda > 0.0)) throw std::invalid_argument("assemble_dual_sdp: lambda must be positive");
    const int m = obs.m;
    const int n = m + 1;
    sdp::SdpProblem p;
    p.psd_block_dims = {n, n};
    p.free_dim = n;
    p.linear = obs.y;
    p.quadratic = Eigen::MatrixXd::Zero(n, n);
    for (int k = obs.d + 1; k <= m; ++k) p.quadratic(k, k) = 1.0;
    p.rhs = Eigen::VectorXd::Zero(2 * n);
    for (int b = 0; b < 2; ++b) {
        const double sgn = (b == 0) ? 1.0 : -1.0;
        for (int k = 0; k <= m; ++k) {
            const int row = b * n + k;
            for (int j = 0; j + k < n; ++j) p.psd_entries.push_back({row, b, j + k, j, 1.0});
            p.free_entries.push_back({row, k, k == 0 ? -sgn : -sgn / kSqrt2});
            if (k == 0) p.rhs(row) = lambda;
        }
    }
    return p;
}

namespace detail {

inline Eigen::MatrixXd basis_matrix(const std::vector<double>& support, int m) {
    Eigen::MatrixXd Phi(m + 1, static_cast<Eigen::Index>(support.size()));
    for (std::size_t j = 0; j < support.size(); ++j) {
        const double th = std::acos(support[j]);
        Phi(0, static_cast<Eigen::Index>(j)) = 1.0;
        for (int k = 1; k <= m; ++k) Phi(k, static_cast<Eigen::Index>(j)) = kSqrt2 * std::cos(k * th);
    }
    return Phi;
}

}  // namespace detail

/// Raised when a fixed support cannot reproduce the pinned low-order moments.
class MomentMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct WeightFit {
    std::vector<double> support;  ///< atoms kept after sign checks
    std::vector<double> weights;
    Eigen::VectorXd multipliers;  ///< constraint multipliers for orders 0..d
    std::vector<int> unmatched;   ///< pinned rows left unmatched (relaxed fits only)
};

/// Weights on a fixed support with given signs: minimises
/// 1/2 sum_{k>d} (c_k - y_k)^2 + lambda sum_i s_i a_i subject to c_k = y_k
/// for k <= d. Atoms whose weight disagrees with its sign are dropped and the
/// fit repeated. Pinned rows that the support cannot reproduce raise
/// MomentMismatch, unless `relaxed` is set, in which case they are reported
/// in `unmatched` and their multipliers left at zero.
[[nodiscard]] inline WeightFit fit_weights(const std::vector<double>& support, const Observation& obs, double lambda,
                                           const std::vector<double>& signs, bool relaxed = false) {
    obs.validate();
    if (support.empty()) throw std::invalid_argument("fit_weights: empty support");
    if (signs.size() != support.size()) throw std::invalid_argument("fit_weights: one sign per support point");
    if (!(lambda >= 0.0)) throw std::invalid_argument("fit_weights: lambda must be nonnegative");
    const int m = obs.m, d = obs.d;
    const int ne = d + 1, nn = m - d;

    std::vector<double> pts = support, sg = signs;
    for (std::size_t round = 0; round <= support.size(); ++round) {
        const auto s = static_cast<Eigen::Index>(pts.size());
        const Eigen::MatrixXd Phi = detail::basis_matrix(pts, m);
        const Eigen::MatrixXd PhiN = Phi.bottomRows(nn);
        Eigen::MatrixXd PhiE = Phi.topRows(ne);

        // Independent equality rows, chosen greedily in order of increasing k.
        std::vector<int> rows_kept, rows_dropped;
        {
            Eigen::MatrixXd acc(0, s);
            for (int k = 0; k < ne; ++k) {
                Eigen::MatrixXd trial(acc.rows() + 1, s);
                trial << acc, PhiE.row(k);
                Eigen::FullPivLU<Eigen::MatrixXd> lu(trial);
                lu.setThreshold(1e-10);
                if (lu.rank() == trial.rows()) {
                    acc = trial;
                    rows_kept.push_back(k);
                } else {
                    rows_dropped.push_back(k);
                }
            }
        }
        const auto nk = static_cast<Eigen::Index>(rows_kept.size());
        // [ I      PhiN   0     ] [r]   [y_N       ]
        // [ PhiN'  0     -PhiE' ] [a] = [lambda s  ]
        // [ 0      PhiE   0     ] [v]   [y_E       ]
        const Eigen::Index dim = nn + s + nk;
        Eigen::MatrixXd K = Eigen::MatrixXd::Zero(dim, dim);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
        K.topLeftCorner(nn, nn).setIdentity();
        K.block(0, nn, nn, s) = PhiN;
        K.block(nn, 0, s, nn) = PhiN.transpose();
        for (Eigen::Index q = 0; q < nk; ++q) {
            K.block(nn, nn + s + q, s, 1) = -PhiE.row(rows_kept[static_cast<std::size_t>(q)]).transpose();
            K.block(nn + s + q, nn, 1, s) = PhiE.row(rows_kept[static_cast<std::size_t>(q)]);
            rhs(nn + s + q) = obs.y(rows_kept[static_cast<std::size_t>(q)]);
        }
        rhs.head(nn) = obs.y.tail(nn);
        for (Eigen::Index i = 0; i < s; ++i) rhs(nn + i) = lambda * sg[static_cast<std::size_t>(i)];
        Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
        if (!lu.isInvertible()) {
            throw std::runtime_error("fit_weights: singular weight system (support points too close)");
        }
        const Eigen::VectorXd sol = lu.solve(rhs);
        const Eigen::VectorXd a = sol.segment(nn, s);

        std::vector<int> unmatched;
        if (!rows_dropped.empty()) {
            const Eigen::VectorXd cE = PhiE * a;
            const double scale = 1.0 + obs.y.head(ne).cwiseAbs().maxCoeff();
            std::vector<int> bad;
            for (int k : rows_dropped) {
                if (std::abs(cE(k) - obs.y(k)) > 1e-9 * scale) bad.push_back(k);
            }
            if (!bad.empty() && !relaxed) {
                std::ostringstream msg;
                msg << "fit_weights: exact moment rows {";
                for (std::size_t i = 0; i < bad.size(); ++i) msg << (i ? ", " : "") << bad[i];
                msg << "} are linearly dependent on the support and cannot be matched";
                throw MomentMismatch(msg.str());
            }
            unmatched = std::move(bad);
        }

        std::vector<double> keep_t, keep_a, keep_s;
        for (Eigen::Index i = 0; i < s; ++i) {
            if (sg[static_cast<std::size_t>(i)] * a(i) > 0.0) {
                keep_t.push_back(pts[static_cast<std::size_t>(i)]);
                keep_a.push_back(a(i));
                keep_s.push_back(sg[static_cast<std::size_t>(i)]);
            }
        }
        if (keep_t.size() == pts.size() || lambda == 0.0) {
            WeightFit out;
            out.support = pts;
            out.weights.assign(a.data(), a.data() + a.size());
            // The subgradient polynomial carries +multipliers; the stacked
            // system above solved for their negatives.
            out.multipliers = Eigen::VectorXd::Zero(ne);
            for (Eigen::Index q = 0; q < nk; ++q) out.multipliers(rows_kept[static_cast<std::size_t>(q)]) = -sol(nn + s + q);
            out.unmatched = std::move(unmatched);
            return out;
        }
        if (keep_t.empty()) {
            throw std::runtime_error("fit_weights: every atom disagrees with its sign");
        }
        pts = std::move(keep_t);
        sg = std::move(keep_s);
    }
    throw std::runtime_error("fit_weights: sign pruning did not settle");
}

/// Subgradient polynomial of a primal candidate: multipliers on orders 0..d,
/// residuals y_k - c_k(x) on orders d+1..m.
[[nodiscard]] inline ChebPoly subgradient_poly(const DiscreteMeasure& x, const Observation& obs,
                                               const Eigen::VectorXd& multipliers) {
    const Eigen::VectorXd c = moments(x, obs.m);
    std::vector<double> coeffs(static_cast<std::size_t>(obs.m + 1), 0.0);
    for (int k = 0; k <= obs.m; ++k) {
        coeffs[static_cast<std::size_t>(k)] = (k <= obs.d) ? multipliers(k) : obs.y(k) - c(k);
    }
    return ChebPoly(std::move(coeffs));
}

[[nodiscard]] inline double primal_objective(const DiscreteMeasure& x, const Observation& obs, double lambda) {
    const Eigen::VectorXd c = moments(x, obs.m);
    const int nn = obs.m - obs.d;
    return 0.5 * (c.tail(nn) - obs.y.tail(nn)).squaredNorm() + lambda * tv_norm(x);
}

[[nodiscard]] inline double dual_objective(const Eigen::VectorXd& alpha, const Observation& obs) {
    const int nn = obs.m - obs.d;
    return alpha.dot(obs.y) + 0.5 * alpha.tail(nn).squaredNorm();
}

/// First-order residuals of a primal candidate with its constraint multipliers.
[[nodiscard]] inline KktResiduals verify_first_order(const DiscreteMeasure& x, const Observation& obs, double lambda,
                                                     const Eigen::VectorXd& multipliers) {
    const ChebPoly P = subgradient_poly(x, obs, multipliers);
    double pairing = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) pairing += x.weights()[i] * eval_poly(P, x.support()[i]);
    KktResiduals r;
    r.tv_identity_gap = std::abs(lambda * tv_norm(x) - pairing);
    r.feasibility_gap = std::max(0.0, sup_norm(P) - lambda);
    return r;
}

[[nodiscard]] inline KktResiduals verify_first_order(const PrimalSolution& sol, const Observation& obs) {
    return verify_first_order(sol.measure, obs, sol.lambda, sol.multipliers);
}

namespace detail {

// Active-set (Lawson-Hanson style) solver for
//   minimise 1/2 ||A b - y||^2 + c'b  subject to b >= 0.
inline Eigen::VectorXd nonnegative_qp(const Eigen::MatrixXd& A, const Eigen::VectorXd& y, const Eigen::VectorXd& c,
                                      int max_iter = 2000) {
    const Eigen::Index n = A.cols();
    const Eigen::MatrixXd Q = A.transpose() * A;
    const Eigen::VectorXd q = A.transpose() * y - c;  // negative gradient at b = 0
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    std::vector<char> passive(static_cast<std::size_t>(n), 0);
    const double tol = 1e-12 * (1.0 + q.cwiseAbs().maxCoeff());

    auto solve_passive = [&](std::vector<Eigen::Index>& idx) {
        idx.clear();
        for (Eigen::Index i = 0; i < n; ++i) {
            if (passive[static_cast<std::size_t>(i)]) idx.push_back(i);
        }
        const auto k = static_cast<Eigen::Index>(idx.size());
        Eigen::MatrixXd Qp(k, k);
        Eigen::VectorXd qp(k);
        for (Eigen::Index r = 0; r < k; ++r) {
            qp(r) = q(idx[static_cast<std::size_t>(r)]);
            for (Eigen::Index s = 0; s < k; ++s) Qp(r, s) = Q(idx[static_cast<std::size_t>(r)], idx[static_cast<std::size_t>(s)]);
        }
        return Eigen::VectorXd(Qp.completeOrthogonalDecomposition().solve(qp));
    };

    for (int it = 0; it < max_iter; ++it) {
        const Eigen::VectorXd grad = q - Q * b;
        Eigen::Index best = -1;
        double best_val = tol;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!passive[static_cast<std::size_t>(i)] && grad(i) > best_val) {
                best_val = grad(i);
                best = i;
            }
        }
        if (best < 0) break;
        passive[static_cast<std::size_t>(best)] = 1;
        for (int inner = 0; inner < max_iter; ++inner) {
            std::vector<Eigen::Index> idx;
            const Eigen::VectorXd zp = solve_passive(idx);
            bool feasible = true;
            for (Eigen::Index r = 0; r < zp.size(); ++r) feasible = feasible && zp(r) > 0.0;
            if (feasible) {
                b.setZero();
                for (std::size_t r = 0; r < idx.size(); ++r) b(idx[r]) = zp(static_cast<Eigen::Index>(r));
                break;
            }
            double step = 1.0;
            for (std::size_t r = 0; r < idx.size(); ++r) {
                const double zr = zp(static_cast<Eigen::Index>(r));
                if (zr <= 0.0) step = std::min(step, b(idx[r]) / (b(idx[r]) - zr));
            }
            for (std::size_t r = 0; r < idx.size(); ++r) {
                b(idx[r]) += step * (zp(static_cast<Eigen::Index>(r)) - b(idx[r]));
                if (b(idx[r]) <= 1e-15) {
                    b(idx[r]) = 0.0;
                    passive[static_cast<std::size_t>(idx[r])] = 0;
                }
            }
        }
    }
    return b;
}

// Newton refinement of the optimality system on a fixed sign pattern:
//   P(theta_i) = lambda s_i,  P'(theta_i) = 0 (interior atoms),  c_k = y_k (k <= d),
// where P carries multipliers on orders <= d and residuals y_k - c_k above.
// Atoms at the endpoints stay put. Returns nullopt if the iteration fails to
// reduce the residual or breaks the sign pattern.
struct Polished {
    std::vector<double> support, weights;
    Eigen::VectorXd multipliers;
};

inline std::optional<Polished> newton_polish(const std::vector<double>& support, const std::vector<double>& weights,
                                             const Eigen::VectorXd& multipliers, const Observation& obs,
                                             double lambda) {
    const int m = obs.m, d = obs.d, ne = d + 1;
    const auto s = static_cast<Eigen::Index>(support.size());
    std::vector<double> theta(support.size());
    std::vector<Eigen::Index> free_pos(support.size(), -1);
    Eigen::Index nfree = 0;
    for (std::size_t i = 0; i < support.size(); ++i) {
        theta[i] = std::acos(support[i]);
        if (support[i] > -1.0 && support[i] < 1.0) free_pos[i] = nfree++;
    }
    std::vector<double> sgn(support.size());
    for (std::size_t i = 0; i < weights.size(); ++i) sgn[i] = weights[i] > 0 ? 1.0 : -1.0;

    Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(weights.data(), s);
    Eigen::VectorXd mult = multipliers;
    const Eigen::Index neq = s + nfree + ne;
    const Eigen::Index nunk = s + nfree + ne;
    const double dscale = 1.0 / std::max(1, m);

    // phi_k(cos th) and its first two theta-derivatives.
    auto basis = [&](double th, Eigen::VectorXd& f0, Eigen::VectorXd& f1, Eigen::VectorXd& f2) {
        f0.resize(m + 1);
        f1.resize(m + 1);
        f2.resize(m + 1);
        f0(0) = 1.0;
        f1(0) = 0.0;
        f2(0) = 0.0;
        for (int k = 1; k <= m; ++k) {
            const double ck = std::cos(k * th), sk = std::sin(k * th);
            f0(k) = kSqrt2 * ck;
            f1(k) = -kSqrt2 * k * sk;
            f2(k) = -kSqrt2 * k * k * ck;
        }
    };

    auto evaluate = [&](const std::vector<double>& th, const Eigen::VectorXd& av, const Eigen::VectorXd& mv,
                        Eigen::VectorXd& F, Eigen::MatrixXd* J) {
        std::vector<Eigen::VectorXd> F0(th.size()), F1(th.size()), F2(th.size());
        Eigen::VectorXd c = Eigen::VectorXd::Zero(m + 1);
        for (std::size_t j = 0; j < th.size(); ++j) {
            basis(th[j], F0[j], F1[j], F2[j]);
            c += av(static_cast<Eigen::Index>(j)) * F0[j];
        }
        Eigen::VectorXd coef(m + 1);  // coefficients of P
        for (int k = 0; k <= m; ++k) coef(k) = (k <= d) ? mv(k) : obs.y(k) - c(k);
        F.resize(neq);
        if (J) J->setZero(neq, nunk);
        for (Eigen::Index i = 0; i < s; ++i) {
            const auto iu = static_cast<std::size_t>(i);
            F(i) = coef.dot(F0[iu]) - lambda * sgn[iu];
            if (free_pos[iu] >= 0) F(s + free_pos[iu]) = dscale * coef.dot(F1[iu]);
        }
        for (int k = 0; k < ne; ++k) F(s + nfree + k) = c(k) - obs.y(k);
        if (!J) return;
        for (Eigen::Index i = 0; i < s; ++i) {
            const auto iu = static_cast<std::size_t>(i);
            for (Eigen::Index j = 0; j < s; ++j) {
                const auto ju = static_cast<std::size_t>(j);
                // d/da_j and d/dtheta_j of the high-order part -sum_{k>d} c_k phi_k
                const double g00 = F0[ju].tail(m - d).dot(F0[iu].tail(m - d));
                const double g01 = F0[ju].tail(m - d).dot(F1[iu].tail(m - d));
                (*J)(i, j) = -g00;
                if (free_pos[iu] >= 0) (*J)(s + free_pos[iu], j) = -dscale * g01;
                if (free_pos[ju] >= 0) {
                    const double h10 = F1[ju].tail(m - d).dot(F0[iu].tail(m - d));
                    const double h11 = F1[ju].tail(m - d).dot(F1[iu].tail(m - d));
                    (*J)(i, s + free_pos[ju]) = -av(j) * h10;
                    if (free_pos[iu] >= 0) (*J)(s + free_pos[iu], s + free_pos[ju]) = -dscale * av(j) * h11;
                }
            }
            if (free_pos[iu] >= 0) {
                (*J)(i, s + free_pos[iu]) += coef.dot(F1[iu]);
                (*J)(s + free_pos[iu], s + free_pos[iu]) += dscale * coef.dot(F2[iu]);
            }
            for (int k = 0; k < ne; ++k) {
                (*J)(i, s + nfree + k) = F0[iu](k);
                if (free_pos[iu] >= 0) (*J)(s + free_pos[iu], s + nfree + k) = dscale * F1[iu](k);
            }
        }
        for (int k = 0; k < ne; ++k) {
            for (Eigen::Index j = 0; j < s; ++j) {
                const auto ju = static_cast<std::size_t>(j);
                (*J)(s + nfree + k, j) = F0[ju](k);
                if (free_pos[ju] >= 0) (*J)(s + nfree + k, s + free_pos[ju]) = av(j) * F1[ju](k);
            }
        }
    };

    Eigen::VectorXd F;
    Eigen::MatrixXd J;
    evaluate(theta, a, mult, F, &J);
    double fnorm = F.norm();
    const double target = 1e-15 * (1.0 + obs.y.cwiseAbs().maxCoeff() + lambda);
    for (int it = 0; it < 30 && fnorm > target; ++it) {
        const Eigen::VectorXd step = J.fullPivLu().solve(-F);
        if (!step.allFinite()) return std::nullopt;
        double t = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 20; ++ls, t *= 0.5) {
            std::vector<double> th2 = theta;
            for (std::size_t i = 0; i < theta.size(); ++i) {
                if (free_pos[i] >= 0) th2[i] += t * step(s + free_pos[i]);
            }
            const Eigen::VectorXd a2 = a + t * step.head(s);
            Eigen::VectorXd m2 = mult + t * step.tail(ne);
            bool ok = true;
            for (std::size_t i = 0; i < th2.size(); ++i) {
                ok = ok && sgn[i] * a2(static_cast<Eigen::Index>(i)) > 0.0;
                if (free_pos[i] >= 0) ok = ok && th2[i] > 0.0 && th2[i] < kPi;
            }
            for (std::size_t i = 0; ok && i < th2.size(); ++i) {
                if (free_pos[i] < 0) continue;
                for (std::size_t j = 0; j < th2.size(); ++j) {
                    if (j != i && std::abs(th2[i] - th2[j]) < 1e-9) ok = false;
                }
            }
            if (!ok) continue;
            Eigen::VectorXd F2v;
            evaluate(th2, a2, m2, F2v, nullptr);
            if (F2v.norm() < fnorm) {
                theta = std::move(th2);
                a = a2;
                mult = m2;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        evaluate(theta, a, mult, F, &J);
        const double prev = fnorm;
        fnorm = F.norm();
        if (fnorm > 0.5 * prev && fnorm < 1e3 * target) break;
    }
    Polished out;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        out.support.push_back(free_pos[i] >= 0 ? std::cos(theta[i]) : support[i]);
        out.weights.push_back(a(static_cast<Eigen::Index>(i)));
    }
    out.multipliers = mult;
    return out;
}

// Signed fit on a candidate support, amplitude-floor pruning, and an
// optional Newton polish that is kept only if it lowers the primal objective.
struct Refit {
    DiscreteMeasure measure;
    Eigen::VectorXd multipliers;
};

inline double pinned_mismatch(const DiscreteMeasure& x, const Observation& obs) {
    if (obs.d < 0) return 0.0;
    const int ne = obs.d + 1;
    const Eigen::VectorXd c = moments(x, obs.m);
    return (c.head(ne) - obs.y.head(ne)).cwiseAbs().maxCoeff() / (1.0 + obs.y.head(ne).cwiseAbs().maxCoeff());
}

// When the level set has fewer atoms than pinned rows, no fixed-position fit
// can match them; `mult_hint` (the SDP multipliers) seeds a Newton solve that
// moves the atoms until it does.
inline Refit refit(const std::vector<double>& pts, const std::vector<double>& signs, const Observation& obs,
                   double lambda, bool polish, const Eigen::VectorXd& mult_hint) {
    WeightFit fit;
    try {
        fit = fit_weights(pts, obs, lambda, signs);
    } catch (const MomentMismatch&) {
        if (!polish) throw;
        WeightFit loose = fit_weights(pts, obs, lambda, signs, true);
        for (int k : loose.unmatched) loose.multipliers(k) = mult_hint(k);
        const auto pol = newton_polish(loose.support, loose.weights, loose.multipliers, obs, lambda);
        if (pol) {
            Refit cand{DiscreteMeasure(pol->support, pol->weights), pol->multipliers};
            if (cand.measure.size() == pol->support.size() && pinned_mismatch(cand.measure, obs) <= 1e-9) return cand;
        }
        throw;
    }
    const double floor_amp = std::max(1e-8, 1e-6 * lambda);
    auto prune = [&](const std::vector<double>& t, const std::vector<double>& a) {
        std::vector<double> t2, s2;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (std::abs(a[i]) >= floor_amp) {
                t2.push_back(t[i]);
                s2.push_back(a[i] > 0 ? 1.0 : -1.0);
            }
        }
        return std::pair{t2, s2};
    };
    const WeightFit unpruned = fit;
    auto [t2, s2] = prune(fit.support, fit.weights);
    if (t2.empty()) return {DiscreteMeasure(), Eigen::VectorXd::Zero(obs.d + 1)};
    if (t2.size() != fit.support.size()) fit = fit_weights(t2, obs, lambda, s2);
    Refit out{DiscreteMeasure(fit.support, fit.weights), fit.multipliers};
    if (!polish) return out;
    const auto pol = newton_polish(fit.support, fit.weights, fit.multipliers, obs, lambda);
    if (!pol) return out;
    auto [t3, s3] = prune(pol->support, pol->weights);
    Refit cand{DiscreteMeasure(pol->support, pol->weights), pol->multipliers};
    if (t3.size() != pol->support.size() || cand.measure.size() != pol->support.size()) {
        // The polish drove an atom below the floor: drop it and refit there.
        if (t3.empty()) return out;
        const WeightFit again = fit_weights(t3, obs, lambda, s3);
        cand = {DiscreteMeasure(again.support, again.weights), again.multipliers};
    }
    const double base = primal_objective(out.measure, obs, lambda);
    Refit best = primal_objective(cand.measure, obs, lambda) <= base + 1e-12 * (1.0 + std::abs(base)) ? cand : out;
    if (t2.size() != unpruned.support.size()) {
        // Pruning first can discard an atom that only becomes useful once the
        // positions move; try polishing the full fit as well.
        const auto wide = newton_polish(unpruned.support, unpruned.weights, unpruned.multipliers, obs, lambda);
        if (wide) {
            auto [t4, s4] = prune(wide->support, wide->weights);
            Refit alt{DiscreteMeasure(wide->support, wide->weights), wide->multipliers};
            if (t4.size() == wide->support.size() && alt.measure.size() == wide->support.size() &&
                pinned_mismatch(alt.measure, obs) <= 1e-9 &&
                primal_objective(alt.measure, obs, lambda) < primal_objective(best.measure, obs, lambda)) {
                best = std::move(alt);
            }
        }
    }
    return best;
}

}  // namespace detail

/// Full pipeline: dual SDP, level-set support, signed weight fit, pruning,
/// Newton polish, and the optimality bookkeeping.
[[nodiscard]] inline PrimalSolution solve_blasso(const Observation& obs, double lambda, const BlassoOptions& opts = {}) {
    const auto start = std::chrono::steady_clock::now();
    obs.validate();
    if (!(lambda > 0.0)) throw std::invalid_argument("solve_blasso: lambda must be positive");
    const int m = obs.m, d = obs.d, ne = d + 1;

    const sdp::SdpProblem prob = assemble_dual_sdp(obs, lambda);
    const sdp::SdpSolution sdp_sol = sdp::solve(prob, opts.sdp);
    if (sdp_sol.status != sdp::Status::Solved) {
        std::ostringstream msg;
        msg << "solve_blasso: SDP ended with status " << sdp::to_string(sdp_sol.status) << " after "
            << sdp_sol.iterations << " iterations (relative gap " << sdp_sol.gap << ", primal residual "
            << sdp_sol.primal_residual << ", dual residual " << sdp_sol.dual_residual << ")";
        throw SolverFailure(msg.str());
    }

    PrimalSolution out;
    out.lambda = lambda;
    out.sdp_iterations = sdp_sol.iterations;
    out.sdp_status = sdp_sol.status;
    out.dual.alpha = sdp_sol.free_vector;
    out.dual.dual_poly = ChebPoly(std::vector<double>(out.dual.alpha.data(), out.dual.alpha.data() + m + 1));
    for (double& v : out.dual.dual_poly.coeffs) v = -v;
    out.dual.objective = dual_objective(out.dual.alpha, obs);
    out.dual_objective = out.dual.objective;
    out.multipliers = -out.dual.alpha.head(ne);

    std::vector<double> support;
    try {
        support = unit_level_roots(out.dual.dual_poly, lambda, opts.level_tol);
    } catch (const ConstantDual& cd) {
        // The level set is the whole interval: fit sign-constrained weights on
        // a fine grid instead.
        out.degenerate = true;
        const double sign = cd.value() >= 0.0 ? 1.0 : -1.0;
        const auto grid = chebyshev_extrema_grid(opts.fallback_grid);
        const Eigen::MatrixXd Phi = detail::basis_matrix(grid, m);
        const double penalty = 1e6;
        Eigen::MatrixXd A(m + 1, Phi.cols());
        Eigen::VectorXd yy(m + 1);
        for (int k = 0; k <= m; ++k) {
            const double wk = (k <= d) ? penalty : 1.0;
            A.row(k) = wk * sign * Phi.row(k);
            yy(k) = wk * obs.y(k);
        }
        const Eigen::VectorXd b =
            detail::nonnegative_qp(A, yy, Eigen::VectorXd::Constant(Phi.cols(), lambda));
        std::vector<double> t, a;
        for (Eigen::Index i = 0; i < b.size(); ++i) {
            if (b(i) > 0.0) {
                t.push_back(grid[static_cast<std::size_t>(i)]);
                a.push_back(sign * b(i));
            }
        }
        out.measure = DiscreteMeasure(std::move(t), std::move(a));
    }

    if (!out.degenerate && !support.empty()) {
        std::vector<double> pts, signs;
        for (double t : support) {
            const double v = eval_poly(out.dual.dual_poly, t) / lambda;
            if (std::abs(v) < opts.sign_floor) continue;
            pts.push_back(t);
            signs.push_back(v > 0 ? 1.0 : -1.0);
        }
        if (!pts.empty()) {
            auto current = detail::refit(pts, signs, obs, lambda, opts.polish, out.multipliers);
            double current_obj = primal_objective(current.measure, obs, lambda);
            // Exchange: while the subgradient polynomial overshoots the level,
            // add its maximiser to the support and refit.
            for (int round = 0; round < opts.exchange_rounds; ++round) {
                const ChebPoly P = subgradient_poly(current.measure, obs, current.multipliers);
                const SupPoint top = sup_point(P);
                if (top.value <= lambda * (1.0 + 1e-9)) break;
                std::vector<double> t3 = current.measure.support(), s3;
                if (std::find(t3.begin(), t3.end(), top.t) != t3.end()) break;
                for (double w : current.measure.weights()) s3.push_back(w > 0 ? 1.0 : -1.0);
                t3.push_back(top.t);
                s3.push_back(eval_poly(P, top.t) > 0 ? 1.0 : -1.0);
                detail::Refit cand;
                try {
                    cand = detail::refit(t3, s3, obs, lambda, opts.polish, out.multipliers);
                } catch (const std::runtime_error&) {
                    break;
                }
                const double cand_obj = primal_objective(cand.measure, obs, lambda);
                if (!(cand_obj < current_obj)) break;
                current = std::move(cand);
                current_obj = cand_obj;
            }
            out.measure = std::move(current.measure);
            out.multipliers = std::move(current.multipliers);
        }
    }

    out.primal_objective = primal_objective(out.measure, obs, lambda);
    const double denom = std::max({std::abs(out.primal_objective), std::abs(out.dual_objective),
                                   std::numeric_limits<double>::min()});
    out.duality_gap = (out.primal_objective == 0.0 && out.dual_objective == 0.0)
                          ? 0.0
                          : std::abs(out.primal_objective + out.dual_objective) / denom;
    out.kkt_residuals = verify_first_order(out.measure, obs, lambda, out.multipliers);
    out.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

}  // namespace chebsr
