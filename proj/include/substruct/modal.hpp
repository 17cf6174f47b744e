#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "substruct/model.hpp"

namespace substruct {

/// Eigenvalues (rad^2/s^2) with mass-normalized mode shape columns.
struct ModalData {
    VectorXd eigenvalues;
    MatrixXd mode_shapes;
    std::vector<DofLabel> dof_labels;

    int n_modes() const { return static_cast<int>(eigenvalues.size()); }
};

namespace detail {

/// Deterministic sign convention: largest-magnitude entry of each column positive.
inline void fix_signs(MatrixXd& shapes) {
    for (int c = 0; c < shapes.cols(); ++c) {
        int idx = 0;
        shapes.col(c).cwiseAbs().maxCoeff(&idx);
        if (shapes(idx, c) < 0.0) shapes.col(c) = -shapes.col(c);
    }
}

/// Within each (near-)degenerate eigenvalue cluster the eigenvector basis is
/// arbitrary; rotate it to a canonical orientation (column-pivoted QR of the
/// transposed cluster block) so repeated solves and perturbed models return
/// reproducible, comparable shapes.
inline void canonicalize_degenerate_clusters(const VectorXd& eigenvalues, MatrixXd& shapes) {
    const int n = static_cast<int>(eigenvalues.size());
    if (n == 0) return;
    const double abs_max = eigenvalues.cwiseAbs().maxCoeff();
    int start = 0;
    while (start < n) {
        int end = start + 1;
        while (end < n) {
            const double a = eigenvalues(end - 1), b = eigenvalues(end);
            const double tol = 1e-8 * std::max(std::abs(a), std::abs(b)) + 1e-9 * abs_max;
            if (std::abs(b - a) > tol) break;
            ++end;
        }
        const int m = end - start;
        if (m > 1) {
            const MatrixXd cluster = shapes.middleCols(start, m);
            // project onto a fixed generic probe so the rotation depends only
            // on the invariant subspace, never on the solver's internal basis
            MatrixXd probe(cluster.rows(), m);
            for (int r = 0; r < probe.rows(); ++r)
                for (int j = 0; j < m; ++j) {
                    std::uint64_t h = 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(r) + 1);
                    h ^= 0xbf58476d1ce4e5b9ULL * (static_cast<std::uint64_t>(j) + 1);
                    h = (h ^ (h >> 30)) * 0x94d049bb133111ebULL;
                    h ^= h >> 31;
                    probe(r, j) = static_cast<double>(h % 2000001) / 1000000.0 - 1.0;
                }
            const MatrixXd y = cluster.transpose() * probe;
            const Eigen::HouseholderQR<MatrixXd> qr(y);
            MatrixXd q = qr.householderQ();
            const MatrixXd r_fac = q.transpose() * y;
            for (int j = 0; j < m; ++j)
                if (r_fac(j, j) < 0.0) q.col(j) = -q.col(j);
            shapes.middleCols(start, m) = cluster * q;
        }
        start = end;
    }
}

/// Same eigensolve carried out in extended precision.  Used where two
/// algebraic routes must agree to 1e-10 relative despite ill-conditioned
/// intermediate factorizations (CB/DCB theta-invariance checks).
inline std::pair<VectorXd, MatrixXd> generalized_eig_precise(const MatrixXd& k, const MatrixXd& m) {
    using MatrixXl = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    const MatrixXl kl = k.cast<long double>();
    const MatrixXl ml = m.cast<long double>();
    Eigen::LLT<MatrixXl> llt(ml);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("generalized_eig: mass matrix not positive definite");
    const MatrixXl ident = MatrixXl::Identity(m.rows(), m.cols());
    const MatrixXl l_inv = llt.matrixL().solve(ident);
    MatrixXl std_form = l_inv * kl * l_inv.transpose();
    std_form = 0.5 * (std_form + std_form.transpose().eval());
    Eigen::SelfAdjointEigenSolver<MatrixXl> es(std_form);
    if (es.info() != Eigen::Success) throw std::runtime_error("generalized_eig: eigensolve failed");
    const MatrixXl vectors = l_inv.transpose() * es.eigenvectors();
    return {es.eigenvalues().cast<double>(), vectors.cast<double>()};
}

}  // namespace detail

/// Lowest n eigenpairs of K phi = lambda M phi with M positive definite.
inline ModalData generalized_eig(const MatrixXd& k, const MatrixXd& m, int n_modes) {
    if (k.rows() != k.cols() || m.rows() != m.cols() || k.rows() != m.rows())
        throw std::invalid_argument("generalized_eig: dimension mismatch");
    if (n_modes < 1 || n_modes > k.rows())
        throw std::invalid_argument("generalized_eig: n_modes out of range");

    Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> solver(k, m,
                                                              Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    if (solver.info() != Eigen::Success) {
        const double res = (m - m.transpose()).norm();
        throw std::runtime_error(
            "generalized_eig: factorization failed (is M positive definite? asymmetry residual " +
            std::to_string(res) + ")");
    }
    VectorXd eigenvalues = solver.eigenvalues();
    MatrixXd shapes = solver.eigenvectors();
    detail::canonicalize_degenerate_clusters(eigenvalues, shapes);

    // Rayleigh-quotient refinement: eigenvalue error becomes quadratic in the
    // eigenvector error, which matters for tight cross-solver comparisons.
    for (int i = 0; i < n_modes; ++i) {
        const VectorXd& v = shapes.col(i);
        eigenvalues(i) = v.dot(k * v) / v.dot(m * v);
    }

    ModalData out;
    out.eigenvalues = eigenvalues.head(n_modes);
    out.mode_shapes = shapes.leftCols(n_modes);
    detail::fix_signs(out.mode_shapes);
    return out;
}

/// Rotate shapes within degenerate eigenvalue clusters to the canonical
/// orientation and apply the sign convention.  Expanded reduced-basis shapes
/// must go through this before MAC comparison against a full-model solve,
/// since both sides otherwise pick arbitrary bases of the repeated-eigenvalue
/// subspaces of a symmetric structure.
inline void canonicalize_shapes(const VectorXd& eigenvalues, MatrixXd& shapes) {
    detail::canonicalize_degenerate_clusters(eigenvalues, shapes);
    detail::fix_signs(shapes);
}

/// MAC[i,j] between columns of phi_t and phi_r; scale and sign invariant.
inline MatrixXd mac_matrix(const MatrixXd& phi_t, const MatrixXd& phi_r) {
    if (phi_t.rows() != phi_r.rows()) throw std::invalid_argument("mac_matrix: row count mismatch");
    const VectorXd nt = phi_t.colwise().squaredNorm();
    const VectorXd nr = phi_r.colwise().squaredNorm();
    if ((nt.array() == 0.0).any() || (nr.array() == 0.0).any())
        throw std::invalid_argument("mac_matrix: zero-norm column");
    const MatrixXd cross = phi_t.transpose() * phi_r;
    MatrixXd mac(phi_t.cols(), phi_r.cols());
    for (int i = 0; i < mac.rows(); ++i)
        for (int j = 0; j < mac.cols(); ++j) mac(i, j) = cross(i, j) * cross(i, j) / (nt(i) * nr(j));
    return mac;
}

/// Rotate candidate shapes within each (near-)degenerate reference cluster
/// onto the reference basis (orthogonal Procrustes).  A reduced model cannot
/// reproduce an arbitrary basis of a repeated-eigenvalue subspace column by
/// column; only the subspace is well defined, so per-mode MAC comparison
/// requires this alignment first.
inline void align_degenerate_clusters(const ModalData& reference, ModalData& candidate, int n) {
    if (reference.n_modes() < n || candidate.n_modes() < n)
        throw std::invalid_argument("align_degenerate_clusters: fewer than n modes");
    const VectorXd& ev = reference.eigenvalues;
    const double abs_max = ev.head(n).cwiseAbs().maxCoeff();
    int start = 0;
    while (start < n) {
        int end = start + 1;
        while (end < n) {
            const double a = ev(end - 1), b = ev(end);
            const double tol = 1e-6 * std::max(std::abs(a), std::abs(b)) + 1e-9 * abs_max;
            if (std::abs(b - a) > tol) break;
            ++end;
        }
        const int m = end - start;
        if (m > 1) {
            const MatrixXd cand = candidate.mode_shapes.middleCols(start, m);
            const MatrixXd cross = cand.transpose() * reference.mode_shapes.middleCols(start, m);
            Eigen::JacobiSVD<MatrixXd> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
            const MatrixXd q = svd.matrixU() * svd.matrixV().transpose();
            candidate.mode_shapes.middleCols(start, m) = cand * q;
        }
        start = end;
    }
}

/// Greedy MAC-maximizing assignment of candidate modes to reference modes.
struct ModeMatch {
    std::vector<int> permutation;     // reference mode i -> candidate column
    std::vector<int> low_confidence;  // reference modes whose best MAC < 0.5
};

inline ModeMatch match_modes(const ModalData& reference, const ModalData& candidate) {
    if (candidate.n_modes() < reference.n_modes())
        throw std::invalid_argument("match_modes: candidate has fewer modes than reference");
    const MatrixXd mac = mac_matrix(reference.mode_shapes, candidate.mode_shapes);
    const int nr = reference.n_modes();
    const int nc = candidate.n_modes();

    ModeMatch out;
    out.permutation.resize(nr, -1);
    std::vector<bool> used(nc, false);
    for (int i = 0; i < nr; ++i) {
        int best = -1;
        double best_val = -1.0;
        for (int j = 0; j < nc; ++j)
            if (!used[j] && mac(i, j) > best_val) {
                best_val = mac(i, j);
                best = j;
            }
        out.permutation[i] = best;
        used[best] = true;
        if (best_val < 0.5) out.low_confidence.push_back(i);
    }
    return out;
}

/// Mean squared relative eigenvalue error over the first n matched modes.
inline double freq_error(const ModalData& model, const ModalData& data, int n) {
    if (model.n_modes() < n || data.n_modes() < n)
        throw std::invalid_argument("freq_error: fewer than n modes available");
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double y = data.eigenvalues(i);
        if (y <= 0.0) throw std::invalid_argument("freq_error: nonpositive data eigenvalue");
        const double e = (model.eigenvalues(i) - y) / y;
        sum += e * e;
    }
    return sum / n;
}

/// Mean squared deviation of the n x n MAC matrix from identity.
inline double mac_error(const ModalData& model, const ModalData& data, int n) {
    if (model.n_modes() < n || data.n_modes() < n)
        throw std::invalid_argument("mac_error: fewer than n modes available");
    const MatrixXd mac = mac_matrix(data.mode_shapes.leftCols(n), model.mode_shapes.leftCols(n));
    const MatrixXd dev = mac - MatrixXd::Identity(n, n);
    return dev.squaredNorm() / (static_cast<double>(n) * n);
}

inline double objective_j(const ModalData& model, const ModalData& data, int n) {
    return freq_error(model, data, n) + mac_error(model, data, n);
}

}  // namespace substruct
