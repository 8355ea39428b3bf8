#pragma once

// Dense primal-dual interior-point solver for
//
//   minimize    sum_b <C_b, X_b> + g'w + 1/2 w'Hw
//   subject to  sum_b A_b(X_b) + B w = rhs,   X_b PSD,   w free.
//
// The dual is
//
//   maximize    rhs'z - 1/2 w'Hw
//   subject to  C_b - A_b*(z) = S_b PSD,   Hw + g = B'z.
//
// Iterations follow the HKM search direction with a Mehrotra
// predictor-corrector and a common primal/dual step length, which keeps the
// coupling equation Hw + g = B'z linear along the step.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace chebsr::sdp {

/// Coefficient `value` on entry X_ij (i >= j) of PSD block `block` in
/// constraint `row`. Off-diagonal entries refer to the symmetric pair, so the
/// implied constraint matrix holds value/2 at (i,j) and at (j,i).
struct PsdEntry {
    int row;
    int block;
    int i;
    int j;
    double value;
};

struct FreeEntry {
    int row;
    int var;
    double value;
};

struct SdpProblem {
    std::vector<int> psd_block_dims;
    int free_dim = 0;
    Eigen::MatrixXd quadratic;            ///< H, free_dim x free_dim, PSD
    Eigen::VectorXd linear;               ///< g, free_dim
    std::vector<Eigen::MatrixXd> psd_cost;  ///< C_b; empty means zero cost
    std::vector<PsdEntry> psd_entries;
    std::vector<FreeEntry> free_entries;
    Eigen::VectorXd rhs;

    [[nodiscard]] int rows() const { return static_cast<int>(rhs.size()); }

    [[nodiscard]] long variable_dimension() const {
        long n = free_dim;
        for (int d : psd_block_dims) n += static_cast<long>(d) * (d + 1) / 2;
        return n;
    }

    void validate() const {
        const int nb = static_cast<int>(psd_block_dims.size());
        for (int d : psd_block_dims) {
            if (d <= 0) throw std::invalid_argument("SdpProblem: PSD block dimensions must be positive");
        }
        if (free_dim < 0) throw std::invalid_argument("SdpProblem: negative free dimension");
        if (quadratic.rows() != free_dim || quadratic.cols() != free_dim) {
            throw std::invalid_argument("SdpProblem: quadratic form must be free_dim x free_dim");
        }
        if (linear.size() != free_dim) throw std::invalid_argument("SdpProblem: linear term must have free_dim entries");
        if (!psd_cost.empty()) {
            if (static_cast<int>(psd_cost.size()) != nb) {
                throw std::invalid_argument("SdpProblem: one cost matrix per PSD block");
            }
            for (int b = 0; b < nb; ++b) {
                if (psd_cost[b].rows() != psd_block_dims[b] || psd_cost[b].cols() != psd_block_dims[b]) {
                    throw std::invalid_argument("SdpProblem: cost matrix " + std::to_string(b) + " has wrong size");
                }
            }
        }
        if (rows() > variable_dimension()) {
            throw std::invalid_argument("SdpProblem: more constraints than variables");
        }
        for (const auto& e : psd_entries) {
            if (e.row < 0 || e.row >= rows() || e.block < 0 || e.block >= nb) {
                throw std::invalid_argument("SdpProblem: PSD entry refers to a missing row or block");
            }
            const int n = psd_block_dims[e.block];
            if (e.j < 0 || e.i < e.j || e.i >= n) {
                throw std::invalid_argument("SdpProblem: PSD entry index must satisfy 0 <= j <= i < dim");
            }
        }
        for (const auto& e : free_entries) {
            if (e.row < 0 || e.row >= rows() || e.var < 0 || e.var >= free_dim) {
                throw std::invalid_argument("SdpProblem: free entry refers to a missing row or variable");
            }
        }
        if (free_dim > 0) {
            if (!quadratic.isApprox(quadratic.transpose(), 1e-12) && quadratic.norm() > 0) {
                throw std::invalid_argument("SdpProblem: quadratic form is not symmetric");
            }
            const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(quadratic, Eigen::EigenvaluesOnly);
            if (es.eigenvalues().minCoeff() < -1e-12 * (1.0 + quadratic.cwiseAbs().maxCoeff())) {
                throw std::invalid_argument("SdpProblem: quadratic form is not positive semidefinite");
            }
        }
    }
};

enum class Status { Solved, MaxIter, Infeasible };

[[nodiscard]] inline const char* to_string(Status s) {
    switch (s) {
        case Status::Solved: return "solved";
        case Status::MaxIter: return "max_iter";
        case Status::Infeasible: return "infeasible";
    }
    return "unknown";
}

struct SdpSolution {
    std::vector<Eigen::MatrixXd> psd_blocks;
    Eigen::VectorXd free_vector;
    Eigen::VectorXd multipliers;             ///< z
    std::vector<Eigen::MatrixXd> dual_slacks;  ///< S_b
    double objective_value = 0.0;
    double dual_objective = 0.0;
    double gap = 0.0;                 ///< relative duality gap
    double primal_residual = 0.0;     ///< ||rhs - A(X) - Bw||_inf
    double dual_residual = 0.0;       ///< relative, scaled problem
    int iterations = 0;
    Status status = Status::MaxIter;
    /// Total infeasibility ||Rp|| + ||Rd|| + ||Rf|| of the scaled problem after
    /// each accepted step. With a common step length a it contracts by the
    /// factor (1 - a); a halving safeguard rejects steps where rounding would
    /// make it grow, so the log is nonincreasing up to kMeritSlack.
    std::vector<double> merit_log;
};

/// Absolute rounding allowance on the merit log (scaled problem units).
inline constexpr double kMeritSlack = 1e-12;

struct SdpOptions {
    double tol = 1e-8;
    int max_iter = 100;
    double step_fraction = 0.95;
};

namespace detail {

// A constraint matrix restricted to one block, as (i, j, v) triplets with the
// PsdEntry semantics.
struct Triplets {
    std::vector<int> i, j;
    std::vector<double> v;
};

struct Workspace {
    int nb = 0, rows = 0, nfree = 0, total_dim = 0;
    std::vector<int> dims;
    // per block: the rows that touch it and their triplets
    std::vector<std::vector<int>> block_rows;
    std::vector<std::vector<Triplets>> block_mats;
    Eigen::MatrixXd B;  // rows x nfree (dense, small)
    Eigen::MatrixXd H;
    Eigen::VectorXd g, rhs;
    std::vector<Eigen::MatrixXd> C;
};

inline double inner(const Triplets& t, const Eigen::MatrixXd& Y) {
    double acc = 0.0;
    for (std::size_t k = 0; k < t.v.size(); ++k) {
        const int a = t.i[k], b = t.j[k];
        acc += (a == b) ? t.v[k] * Y(a, a) : 0.5 * t.v[k] * (Y(a, b) + Y(b, a));
    }
    return acc;
}

inline void add_adjoint(const Triplets& t, double z, Eigen::MatrixXd& out) {
    for (std::size_t k = 0; k < t.v.size(); ++k) {
        const int a = t.i[k], b = t.j[k];
        if (a == b) {
            out(a, a) += z * t.v[k];
        } else {
            out(a, b) += 0.5 * z * t.v[k];
            out(b, a) += 0.5 * z * t.v[k];
        }
    }
}

// X * A written into the n x n block `out` (assumed zeroed).
template <class Out>
inline void right_multiply(const Eigen::MatrixXd& X, const Triplets& t, Out&& out) {
    for (std::size_t k = 0; k < t.v.size(); ++k) {
        const int a = t.i[k], b = t.j[k];
        if (a == b) {
            out.col(a) += t.v[k] * X.col(a);
        } else {
            out.col(b) += 0.5 * t.v[k] * X.col(a);
            out.col(a) += 0.5 * t.v[k] * X.col(b);
        }
    }
}

inline Eigen::VectorXd apply_A(const Workspace& ws, const std::vector<Eigen::MatrixXd>& X) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(ws.rows);
    for (int b = 0; b < ws.nb; ++b) {
        for (std::size_t q = 0; q < ws.block_rows[b].size(); ++q) {
            out(ws.block_rows[b][q]) += inner(ws.block_mats[b][q], X[b]);
        }
    }
    return out;
}

inline std::vector<Eigen::MatrixXd> apply_At(const Workspace& ws, const Eigen::VectorXd& z) {
    std::vector<Eigen::MatrixXd> out;
    for (int b = 0; b < ws.nb; ++b) {
        out.emplace_back(Eigen::MatrixXd::Zero(ws.dims[b], ws.dims[b]));
        for (std::size_t q = 0; q < ws.block_rows[b].size(); ++q) {
            add_adjoint(ws.block_mats[b][q], z(ws.block_rows[b][q]), out.back());
        }
    }
    return out;
}

inline Eigen::MatrixXd sym(const Eigen::MatrixXd& Y) { return 0.5 * (Y + Y.transpose()); }

// Largest step a with X + a D still positive definite (infinity if none).
inline double max_step(const Eigen::MatrixXd& X, const Eigen::MatrixXd& D) {
    const Eigen::LLT<Eigen::MatrixXd> llt(X);
    if (llt.info() != Eigen::Success) return 0.0;
    Eigen::MatrixXd W = llt.matrixL().solve(D);
    W = llt.matrixL().solve(W.transpose()).transpose();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym(W), Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    return lo < 0.0 ? -1.0 / lo : std::numeric_limits<double>::infinity();
}

inline double frob_inner(const std::vector<Eigen::MatrixXd>& A, const std::vector<Eigen::MatrixXd>& B) {
    double s = 0.0;
    for (std::size_t b = 0; b < A.size(); ++b) s += A[b].cwiseProduct(B[b]).sum();
    return s;
}

inline double frob_norm(const std::vector<Eigen::MatrixXd>& A) {
    double s = 0.0;
    for (const auto& M : A) s += M.squaredNorm();
    return std::sqrt(s);
}

}  // namespace detail

/// Solves the problem to relative accuracy opts.tol. Deterministic.
[[nodiscard]] inline SdpSolution solve(const SdpProblem& prob, const SdpOptions& opts = {}) {
    if (!(opts.tol > 0.0)) throw std::invalid_argument("sdp::solve: tol must be positive");
    prob.validate();

    using detail::sym;
    detail::Workspace ws;
    ws.nb = static_cast<int>(prob.psd_block_dims.size());
    ws.rows = prob.rows();
    ws.nfree = prob.free_dim;
    ws.dims = prob.psd_block_dims;
    for (int d : ws.dims) ws.total_dim += d;

    // Row normalisation: every constraint row gets unit coefficient norm.
    Eigen::VectorXd row_norm = Eigen::VectorXd::Zero(ws.rows);
    for (const auto& e : prob.psd_entries) row_norm(e.row) += e.value * e.value * (e.i == e.j ? 1.0 : 0.5);
    for (const auto& e : prob.free_entries) row_norm(e.row) += e.value * e.value;
    for (Eigen::Index r = 0; r < row_norm.size(); ++r) {
        row_norm(r) = row_norm(r) > 0.0 ? std::sqrt(row_norm(r)) : 1.0;
    }

    // Variable and objective scales: X = r X', objective = r s f'.
    const double rhs_scale = ws.rows > 0 ? (prob.rhs.array() / row_norm.array()).abs().maxCoeff() : 0.0;
    const double r = (ws.rows > 0 && rhs_scale > 0.0) ? rhs_scale : 1.0;
    double s = 0.0;
    if (ws.nfree > 0) s = std::max(s, prob.linear.cwiseAbs().maxCoeff());
    for (const auto& C : prob.psd_cost) s = std::max(s, C.cwiseAbs().maxCoeff());
    if (ws.nfree > 0) s = std::max(s, r * prob.quadratic.cwiseAbs().maxCoeff());
    if (!(s > 0.0)) s = 1.0;

    ws.rhs = prob.rhs.array() / row_norm.array() / r;
    ws.g = prob.linear / s;
    ws.H = prob.quadratic * (r / s);
    for (int b = 0; b < ws.nb; ++b) {
        ws.C.push_back(prob.psd_cost.empty() ? Eigen::MatrixXd::Zero(ws.dims[b], ws.dims[b])
                                             : Eigen::MatrixXd(prob.psd_cost[b] / s));
    }
    ws.B = Eigen::MatrixXd::Zero(ws.rows, ws.nfree);
    for (const auto& e : prob.free_entries) ws.B(e.row, e.var) += e.value / row_norm(e.row);

    ws.block_rows.resize(ws.nb);
    ws.block_mats.resize(ws.nb);
    {
        std::vector<std::vector<int>> slot(ws.nb, std::vector<int>(ws.rows, -1));
        for (const auto& e : prob.psd_entries) {
            int& q = slot[e.block][e.row];
            if (q < 0) {
                q = static_cast<int>(ws.block_rows[e.block].size());
                ws.block_rows[e.block].push_back(e.row);
                ws.block_mats[e.block].emplace_back();
            }
            auto& t = ws.block_mats[e.block][q];
            t.i.push_back(e.i);
            t.j.push_back(e.j);
            t.v.push_back(e.value / row_norm(e.row));
        }
    }

    // Initial point.
    std::vector<Eigen::MatrixXd> X, S;
    for (int b = 0; b < ws.nb; ++b) {
        X.emplace_back(Eigen::MatrixXd::Identity(ws.dims[b], ws.dims[b]));
        S.emplace_back(Eigen::MatrixXd::Identity(ws.dims[b], ws.dims[b]));
    }
    Eigen::VectorXd z = Eigen::VectorXd::Zero(ws.rows);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(ws.nfree);

    const double rhs_norm = ws.rhs.norm();
    double cost_norm = ws.g.norm();
    for (const auto& C : ws.C) cost_norm += C.norm();

    struct Residuals {
        Eigen::VectorXd rp, rf;
        std::vector<Eigen::MatrixXd> rd;
        double mu, pobj, dobj, pinf, dinf, gap, merit;
    };
    auto residuals = [&](const std::vector<Eigen::MatrixXd>& Xc, const Eigen::VectorXd& wc, const Eigen::VectorXd& zc,
                         const std::vector<Eigen::MatrixXd>& Sc) {
        Residuals R;
        R.rp = ws.rhs - detail::apply_A(ws, Xc) - ws.B * wc;
        R.rd = detail::apply_At(ws, zc);
        for (int b = 0; b < ws.nb; ++b) R.rd[b] = ws.C[b] - R.rd[b] - Sc[b];
        R.rf = ws.B.transpose() * zc - ws.g - ws.H * wc;
        const double xs = detail::frob_inner(Xc, Sc);
        R.mu = ws.total_dim > 0 ? xs / ws.total_dim : 0.0;
        R.pobj = detail::frob_inner(ws.C, Xc) + ws.g.dot(wc) + 0.5 * wc.dot(ws.H * wc);
        R.dobj = ws.rhs.dot(zc) - 0.5 * wc.dot(ws.H * wc);
        R.pinf = R.rp.norm() / (1.0 + rhs_norm);
        R.dinf = (detail::frob_norm(R.rd) + R.rf.norm()) / (1.0 + cost_norm);
        const double denom = 1.0 + std::abs(R.pobj) + std::abs(R.dobj);
        R.gap = std::max(std::abs(R.pobj - R.dobj), xs) / denom;
        R.merit = R.rp.norm() + detail::frob_norm(R.rd) + R.rf.norm();
        return R;
    };

    SdpSolution sol;
    Residuals R = residuals(X, w, z, S);
    sol.merit_log.push_back(R.merit);
    const int ksize = ws.rows + ws.nfree;

    int it = 0;
    for (; it < opts.max_iter; ++it) {
        if (R.pinf <= opts.tol && R.dinf <= opts.tol && R.gap <= opts.tol) {
            sol.status = Status::Solved;
            break;
        }
        if (ws.rows > 0 && z.cwiseAbs().maxCoeff() > 1e12 && R.pinf > opts.tol) {
            sol.status = Status::Infeasible;
            break;
        }

        std::vector<Eigen::MatrixXd> Sinv;
        for (int b = 0; b < ws.nb; ++b) {
            const Eigen::LLT<Eigen::MatrixXd> llt(S[b]);
            Sinv.push_back(llt.solve(Eigen::MatrixXd::Identity(ws.dims[b], ws.dims[b])));
            Sinv.back() = sym(Sinv.back());
        }

        // Schur complement M_pq = <A_p, X A_q S^{-1}>, block by block. The
        // products X A_q are stacked vertically so one GEMM handles all rows.
        Eigen::MatrixXd K = Eigen::MatrixXd::Zero(ksize, ksize);
        for (int b = 0; b < ws.nb; ++b) {
            const int n = ws.dims[b];
            const auto& brows = ws.block_rows[b];
            const auto nr = static_cast<Eigen::Index>(brows.size());
            if (nr == 0) continue;
            Eigen::MatrixXd XA = Eigen::MatrixXd::Zero(nr * n, n);
            for (Eigen::Index q = 0; q < nr; ++q) {
                detail::right_multiply(X[b], ws.block_mats[b][static_cast<std::size_t>(q)], XA.middleRows(q * n, n));
            }
            const Eigen::MatrixXd Y = XA * Sinv[b];
            for (Eigen::Index q = 0; q < nr; ++q) {
                const Eigen::MatrixXd Yq = Y.middleRows(q * n, n);
                for (Eigen::Index p = 0; p < nr; ++p) {
                    K(brows[static_cast<std::size_t>(p)], brows[static_cast<std::size_t>(q)]) +=
                        detail::inner(ws.block_mats[b][static_cast<std::size_t>(p)], Yq);
                }
            }
        }
        K.topLeftCorner(ws.rows, ws.rows) = sym(K.topLeftCorner(ws.rows, ws.rows));
        K.topRightCorner(ws.rows, ws.nfree) = ws.B;
        K.bottomLeftCorner(ws.nfree, ws.rows) = ws.B.transpose();
        K.bottomRightCorner(ws.nfree, ws.nfree) = -ws.H;
        const Eigen::PartialPivLU<Eigen::MatrixXd> lu(K);

        // Direction for target sigma*mu with second-order term `corr`
        // (X_aff S_aff S^{-1} from the predictor, or zero).
        struct Dir {
            std::vector<Eigen::MatrixXd> dX, dS;
            Eigen::VectorXd dz, dw;
        };
        auto direction = [&](double target, const std::vector<Eigen::MatrixXd>* corr) {
            std::vector<Eigen::MatrixXd> T(ws.nb);
            for (int b = 0; b < ws.nb; ++b) {
                T[b] = target * Sinv[b] - X[b] - X[b] * R.rd[b] * Sinv[b];
                if (corr) T[b] -= (*corr)[b];
                T[b] = sym(T[b]);
            }
            Eigen::VectorXd rhsk(ksize);
            rhsk.head(ws.rows) = R.rp - detail::apply_A(ws, T);
            rhsk.tail(ws.nfree) = -R.rf;
            const Eigen::VectorXd sol_k = lu.solve(rhsk);
            Dir D;
            D.dz = sol_k.head(ws.rows);
            D.dw = sol_k.tail(ws.nfree);
            D.dS = detail::apply_At(ws, D.dz);
            for (int b = 0; b < ws.nb; ++b) {
                D.dS[b] = R.rd[b] - D.dS[b];
                Eigen::MatrixXd dX = target * Sinv[b] - X[b] - X[b] * D.dS[b] * Sinv[b];
                if (corr) dX -= (*corr)[b];
                D.dX.push_back(sym(dX));
            }
            return D;
        };
        auto step_limit = [&](const Dir& D) {
            double a = std::numeric_limits<double>::infinity();
            for (int b = 0; b < ws.nb; ++b) {
                a = std::min(a, detail::max_step(X[b], D.dX[b]));
                a = std::min(a, detail::max_step(S[b], D.dS[b]));
            }
            return a;
        };

        const Dir pred = direction(0.0, nullptr);
        double sigma = 0.0;
        std::vector<Eigen::MatrixXd> corr;
        if (ws.nb > 0) {
            const double a_aff = std::min(1.0, step_limit(pred));
            double xs_aff = 0.0;
            for (int b = 0; b < ws.nb; ++b) {
                xs_aff += (X[b] + a_aff * pred.dX[b]).cwiseProduct(S[b] + a_aff * pred.dS[b]).sum();
            }
            const double mu_aff = xs_aff / ws.total_dim;
            sigma = std::clamp(std::pow(mu_aff / R.mu, 3.0), 0.0, 1.0);
            for (int b = 0; b < ws.nb; ++b) corr.push_back(pred.dX[b] * pred.dS[b] * Sinv[b]);
        }
        const Dir D = ws.nb > 0 ? direction(sigma * R.mu, &corr) : pred;
        double alpha = ws.nb > 0 ? std::min(1.0, opts.step_fraction * step_limit(D)) : 1.0;

        // Safeguard: halve the step while the merit function would increase.
        Residuals Rn;
        std::vector<Eigen::MatrixXd> Xn(ws.nb), Sn(ws.nb);
        Eigen::VectorXd zn, wn;
        for (int tries = 0;; ++tries) {
            for (int b = 0; b < ws.nb; ++b) {
                Xn[b] = X[b] + alpha * D.dX[b];
                Sn[b] = S[b] + alpha * D.dS[b];
            }
            zn = z + alpha * D.dz;
            wn = w + alpha * D.dw;
            Rn = residuals(Xn, wn, zn, Sn);
            if (Rn.merit <= R.merit + kMeritSlack || tries >= 30) break;
            alpha *= 0.5;
        }
        if (!(Rn.merit <= R.merit + kMeritSlack)) {
            // No decrease along this direction: stop rather than log an increase.
            break;
        }
        X = std::move(Xn);
        S = std::move(Sn);
        z = std::move(zn);
        w = std::move(wn);
        R = std::move(Rn);
        sol.merit_log.push_back(R.merit);
    }
    if (sol.status != Status::Solved && sol.status != Status::Infeasible) {
        if (R.pinf <= opts.tol && R.dinf <= opts.tol && R.gap <= opts.tol) sol.status = Status::Solved;
    }
    sol.iterations = it;

    // Undo the scalings.
    for (int b = 0; b < ws.nb; ++b) {
        // Interior iterates are positive definite; clip eigenvalues anyway so
        // the returned blocks are PSD by construction.
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(X[b]);
        const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
        sol.psd_blocks.push_back(r * es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose());
        sol.dual_slacks.push_back(s * S[b]);
    }
    sol.free_vector = r * w;
    sol.multipliers = s * (z.array() / row_norm.array()).matrix();
    sol.objective_value = r * s * R.pobj;
    sol.dual_objective = r * s * R.dobj;
    sol.gap = R.gap;
    sol.dual_residual = R.dinf;
    {
        Eigen::VectorXd ax = Eigen::VectorXd::Zero(ws.rows);
        for (const auto& e : prob.psd_entries) ax(e.row) += e.value * sol.psd_blocks[e.block](e.i, e.j);
        for (const auto& e : prob.free_entries) ax(e.row) += e.value * sol.free_vector(e.var);
        sol.primal_residual = ws.rows > 0 ? (prob.rhs - ax).cwiseAbs().maxCoeff() : 0.0;
    }
    return sol;
}

/// Plain-text dump of a problem for debugging. Format:
///   blocks <count> <dim...>
///   free <dim>
///   rows <count>
///   rhs <values...>
///   linear <values...>
///   quadratic <i> <j> <value>      (nonzero upper-triangle entries)
///   cost <block> <i> <j> <value>   (nonzero lower-triangle entries)
///   psd <row> <block> <i> <j> <value>
///   free_entry <row> <var> <value>
inline void write_problem(std::ostream& os, const SdpProblem& p) {
    os.precision(17);
    os << "blocks " << p.psd_block_dims.size();
    for (int d : p.psd_block_dims) os << ' ' << d;
    os << "\nfree " << p.free_dim << "\nrows " << p.rows() << "\nrhs";
    for (Eigen::Index i = 0; i < p.rhs.size(); ++i) os << ' ' << p.rhs(i);
    os << "\nlinear";
    for (Eigen::Index i = 0; i < p.linear.size(); ++i) os << ' ' << p.linear(i);
    os << '\n';
    for (Eigen::Index i = 0; i < p.quadratic.rows(); ++i) {
        for (Eigen::Index j = i; j < p.quadratic.cols(); ++j) {
            if (p.quadratic(i, j) != 0.0) os << "quadratic " << i << ' ' << j << ' ' << p.quadratic(i, j) << '\n';
        }
    }
    for (std::size_t b = 0; b < p.psd_cost.size(); ++b) {
        for (Eigen::Index i = 0; i < p.psd_cost[b].rows(); ++i) {
            for (Eigen::Index j = 0; j <= i; ++j) {
                if (p.psd_cost[b](i, j) != 0.0) os << "cost " << b << ' ' << i << ' ' << j << ' ' << p.psd_cost[b](i, j) << '\n';
            }
        }
    }
    for (const auto& e : p.psd_entries) {
        os << "psd " << e.row << ' ' << e.block << ' ' << e.i << ' ' << e.j << ' ' << e.value << '\n';
    }
    for (const auto& e : p.free_entries) os << "free_entry " << e.row << ' ' << e.var << ' ' << e.value << '\n';
}

}  // namespace chebsr::sdp
