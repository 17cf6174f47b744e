#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "substruct/cms_cb.hpp"
#include "substruct/modal.hpp"
#include "substruct/model.hpp"

namespace substruct {

/// Dual Craig-Bampton ingredients for one substructure at theta = 1:
/// rigid-body modes, kept free-interface modes, and the residual
/// flexibility left after removing the retained modal content.
struct DcbBasis {
    MatrixXd rigid_modes;         // DOFs x n_rbm, mass-normalized
    MatrixXd free_modes;          // DOFs x kept, mass-normalized
    VectorXd kept_eigenvalues;    // Sigma_r diagonal
    MatrixXd residual_flexibility;  // F0, symmetric
    MatrixXd mass;                // copies kept for dual assembly products
    MatrixXd stiffness;

    int dim() const { return static_cast<int>(mass.rows()); }
    int n_rigid() const { return static_cast<int>(rigid_modes.cols()); }
    int n_kept() const { return static_cast<int>(free_modes.cols()); }
};

namespace detail {

/// Rigid modes have eigenvalues at least 1e-6 below the first flexible one.
/// A 3D substructure carries at most 6; pick the largest consistent count.
inline int count_rigid_modes(const VectorXd& eigenvalues) {
    const int n = static_cast<int>(eigenvalues.size());
    const int max_rbm = std::min(6, n - 1);
    for (int j = max_rbm; j >= 1; --j) {
        bool ok = true;
        for (int k = 0; k < j; ++k)
            if (!(std::abs(eigenvalues(k)) < 1e-6 * eigenvalues(j))) ok = false;
        if (ok) return j;
    }
    return 0;
}

}  // namespace detail

/// Free-interface eigendecomposition with spectrally exact residual flexibility
/// F0 = K^+ - Phi_r Sigma_r^-1 Phi_r^T (sum over discarded flexible modes).
inline DcbBasis dcb_reduce(const SubstructureModel& sub, int n_modes) {
    const int n = sub.dim();
    const ModalData all = generalized_eig(sub.stiffness, sub.mass, n);

    DcbBasis basis;
    basis.mass = sub.mass;
    basis.stiffness = sub.stiffness;

    const int n_rbm = detail::count_rigid_modes(all.eigenvalues);
    const int n_flex = n - n_rbm;
    if (n_modes < 1 || n_modes > n_flex)
        throw std::invalid_argument("dcb_reduce: n_modes exceeds flexible mode count");

    basis.rigid_modes = all.mode_shapes.middleCols(0, n_rbm);
    basis.free_modes = all.mode_shapes.middleCols(n_rbm, n_modes);
    basis.kept_eigenvalues = all.eigenvalues.segment(n_rbm, n_modes);

    basis.residual_flexibility = MatrixXd::Zero(n, n);
    for (int k = n_rbm + n_modes; k < n; ++k)
        basis.residual_flexibility +=
            all.mode_shapes.col(k) * all.mode_shapes.col(k).transpose() / all.eigenvalues(k);
    return basis;
}

/// Result of the dual eigensolve: physical pairs plus filtering bookkeeping.
struct DcbModalResult {
    ModalData modes;     // in reduced coordinates
    int n_solved = 0;
    int n_filtered = 0;  // multiplier-dominated or below the rigid threshold
};

/// Dual coupling with Lagrange multipliers, coordinates (alpha1, alpha2, q1,
/// q2, mu).  All theta-independent products are cached; reassembly at theta
/// scales stiffness blocks by theta_i and attachment columns by 1/theta_i.
class DcbAssembly {
public:
    DcbAssembly(DcbBasis lower, DcbBasis upper, const InterfaceMap& map, const AssemblyMap& assembly_map)
        : lower_(std::move(lower)), upper_(std::move(upper)), assembly_map_(assembly_map) {
        n_lambda_ = map.size();
        const int n1 = lower_.dim(), n2 = upper_.dim();

        // signed Boolean selector: +1 on the lower side, -1 on the upper side
        b_lower_ = MatrixXd::Zero(n1, n_lambda_);
        b_upper_ = MatrixXd::Zero(n2, n_lambda_);
        for (int p = 0; p < n_lambda_; ++p) {
            const auto [d1, d2] = map.pairs[p];
            if (d1 < 0 || d1 >= n1 || d2 < 0 || d2 >= n2)
                throw std::runtime_error("dcb_assemble: interface map index out of range");
            b_lower_(d1, p) = 1.0;
            b_upper_(d2, p) = -1.0;
        }

        precompute(lower_, b_lower_, pre_[0]);
        precompute(upper_, b_upper_, pre_[1]);

        // The raw multiplier coordinates are interface forces, orders of
        // magnitude apart from the modal coordinates; rescale them (a
        // congruence, eigenvalues unchanged) so the stiffness coupling
        // columns match the modal stiffness diagonal.  This keeps the reduced
        // pair numerically workable and makes the spurious-mode energy filter
        // scale-free, including in the keep-all limit where the multiplier
        // block is massless.
        double k_ref = 0.0;
        int k_count = 0;
        for (int i = 0; i < 2; ++i) {
            k_ref += pre_[i].k_pp.diagonal().cwiseAbs().sum();
            k_count += static_cast<int>(pre_[i].k_pp.rows());
        }
        k_ref /= k_count;
        VectorXd d = VectorXd::Ones(n_lambda_);
        for (int p = 0; p < n_lambda_; ++p) {
            double g2 = 0.0;
            for (int i = 0; i < 2; ++i)
                g2 += (pre_[i].p_b.col(p) - pre_[i].k_pa.col(p)).squaredNorm();
            if (g2 > 0.0) d(p) = k_ref / std::sqrt(g2);
        }
        for (int i = 0; i < 2; ++i) {
            auto& pr = pre_[i];
            pr.attachment = pr.attachment * d.asDiagonal();
            pr.m_pa = pr.m_pa * d.asDiagonal();
            pr.k_pa = pr.k_pa * d.asDiagonal();
            pr.p_b = pr.p_b * d.asDiagonal();
            pr.m_aa = d.asDiagonal() * pr.m_aa * d.asDiagonal();
            pr.k_aa = d.asDiagonal() * pr.k_aa * d.asDiagonal();
            pr.a_b = d.asDiagonal() * pr.a_b * d.asDiagonal();
        }
    }

    int n_lambda() const { return n_lambda_; }
    int reduced_dim() const {
        return lower_.n_rigid() + upper_.n_rigid() + lower_.n_kept() + upper_.n_kept() + n_lambda_;
    }
    int mu_offset() const { return reduced_dim() - n_lambda_; }
    const DcbBasis& lower() const { return lower_; }
    const DcbBasis& upper() const { return upper_; }

    ReducedSystem reduced_at(const DamageState& theta) const {
        theta.validate();
        if (theta.theta.size() != 2) throw std::invalid_argument("dcb_assemble: theta must have 2 entries");
        const int nred = reduced_dim();
        const int mu = mu_offset();
        ReducedSystem sys;
        sys.mass = MatrixXd::Zero(nred, nred);
        sys.stiffness = MatrixXd::Zero(nred, nred);

        for (int i = 0; i < 2; ++i) {
            const double th = theta.theta(i);
            const double s = 1.0 / th;
            const auto& pr = pre_[i];
            const std::vector<int>& ix = coord_indices(i);
            const int m = static_cast<int>(ix.size());

            for (int a = 0; a < m; ++a)
                for (int b = 0; b < m; ++b) {
                    sys.mass(ix[a], ix[b]) += pr.m_pp(a, b);
                    sys.stiffness(ix[a], ix[b]) += th * pr.k_pp(a, b);
                }
            for (int a = 0; a < m; ++a)
                for (int p = 0; p < n_lambda_; ++p) {
                    const double mv = -s * pr.m_pa(a, p);
                    // theta * (1/theta) cancels on the stiffness cross block
                    const double kv = -pr.k_pa(a, p) + pr.p_b(a, p);
                    sys.mass(ix[a], mu + p) += mv;
                    sys.mass(mu + p, ix[a]) += mv;
                    sys.stiffness(ix[a], mu + p) += kv;
                    sys.stiffness(mu + p, ix[a]) += kv;
                }
            for (int p = 0; p < n_lambda_; ++p)
                for (int q = 0; q < n_lambda_; ++q) {
                    sys.mass(mu + p, mu + q) += s * s * pr.m_aa(p, q);
                    sys.stiffness(mu + p, mu + q) +=
                        s * pr.k_aa(p, q) - s * (pr.a_b(p, q) + pr.a_b(q, p));
                }
        }
        sys.mass = 0.5 * (sys.mass + sys.mass.transpose().eval());
        sys.stiffness = 0.5 * (sys.stiffness + sys.stiffness.transpose().eval());
        return sys;
    }

    /// Physical displacements u_i = R alpha + Phi q - (1/theta_i) F0 B mu,
    /// averaged across the interface in the assembled global layout.
    MatrixXd expand(const DamageState& theta, const MatrixXd& reduced_shapes) const {
        theta.validate();
        if (reduced_shapes.rows() != reduced_dim())
            throw std::invalid_argument("dcb_expand: shape dimension mismatch");
        const int cols = static_cast<int>(reduced_shapes.cols());
        const MatrixXd mu = reduced_shapes.bottomRows(n_lambda_);

        MatrixXd global = MatrixXd::Zero(assembly_map_.dim, cols);
        VectorXd count = VectorXd::Zero(assembly_map_.dim);
        for (int i = 0; i < 2; ++i) {
            const auto& pr = pre_[i];
            const std::vector<int>& ix = coord_indices(i);
            MatrixXd sub_coords(ix.size(), cols);
            for (size_t a = 0; a < ix.size(); ++a) sub_coords.row(a) = reduced_shapes.row(ix[a]);
            const MatrixXd u = pr.modes * sub_coords - (1.0 / theta.theta(i)) * pr.attachment * mu;
            const std::vector<int>& to_global =
                (i == 0) ? assembly_map_.lower_to_global : assembly_map_.upper_to_global;
            for (int r = 0; r < u.rows(); ++r) {
                global.row(to_global[r]) += u.row(r);
                count(to_global[r]) += 1.0;
            }
        }
        for (int r = 0; r < global.rows(); ++r) global.row(r) /= count(r);
        return global;
    }

    /// Interface incompatibility B^T u of per-substructure expansions (dual
    /// assembly only enforces it weakly).
    MatrixXd compatibility_residual(const DamageState& theta, const MatrixXd& reduced_shapes) const {
        const int cols = static_cast<int>(reduced_shapes.cols());
        const MatrixXd mu = reduced_shapes.bottomRows(n_lambda_);
        MatrixXd res = MatrixXd::Zero(n_lambda_, cols);
        for (int i = 0; i < 2; ++i) {
            const auto& pr = pre_[i];
            const std::vector<int>& ix = coord_indices(i);
            MatrixXd sub_coords(ix.size(), cols);
            for (size_t a = 0; a < ix.size(); ++a) sub_coords.row(a) = reduced_shapes.row(ix[a]);
            const MatrixXd u = pr.modes * sub_coords - (1.0 / theta.theta(i)) * pr.attachment * mu;
            res += ((i == 0) ? b_lower_ : b_upper_).transpose() * u;
        }
        return res;
    }

private:
    struct Precomputed {
        MatrixXd modes;       // P = [R Phi]
        MatrixXd attachment;  // A = F0 * B_i (unit interface force responses)
        MatrixXd m_pp, m_pa, m_aa;
        MatrixXd k_pp, k_pa, k_aa;
        MatrixXd p_b;  // P^T B_i
        MatrixXd a_b;  // A^T B_i
    };

    static void precompute(const DcbBasis& basis, const MatrixXd& b_sel, Precomputed& pr) {
        const int m = basis.n_rigid() + basis.n_kept();
        pr.modes.resize(basis.dim(), m);
        pr.modes << basis.rigid_modes, basis.free_modes;
        pr.attachment = basis.residual_flexibility * b_sel;
        pr.m_pp = pr.modes.transpose() * basis.mass * pr.modes;
        pr.m_pa = pr.modes.transpose() * basis.mass * pr.attachment;
        pr.m_aa = pr.attachment.transpose() * basis.mass * pr.attachment;
        pr.k_pp = pr.modes.transpose() * basis.stiffness * pr.modes;
        pr.k_pa = pr.modes.transpose() * basis.stiffness * pr.attachment;
        pr.k_aa = pr.attachment.transpose() * basis.stiffness * pr.attachment;
        pr.p_b = pr.modes.transpose() * b_sel;
        pr.a_b = pr.attachment.transpose() * b_sel;
    }

    /// Reduced coordinate indices of substructure i, sub-local order (alpha_i, q_i).
    const std::vector<int>& coord_indices(int i) const {
        if (coord_cache_[i].empty()) {
            const int r1 = lower_.n_rigid(), r2 = upper_.n_rigid();
            const int q1 = lower_.n_kept();
            std::vector<int>& v = coord_cache_[i];
            if (i == 0) {
                for (int a = 0; a < r1; ++a) v.push_back(a);
                for (int a = 0; a < q1; ++a) v.push_back(r1 + r2 + a);
            } else {
                for (int a = 0; a < r2; ++a) v.push_back(r1 + a);
                for (int a = 0; a < upper_.n_kept(); ++a) v.push_back(r1 + r2 + q1 + a);
            }
        }
        return coord_cache_[i];
    }

    DcbBasis lower_;
    DcbBasis upper_;
    AssemblyMap assembly_map_;
    int n_lambda_ = 0;
    MatrixXd b_lower_, b_upper_;
    Precomputed pre_[2];
    mutable std::vector<int> coord_cache_[2];
};

inline ReducedSystem dcb_assemble(const DcbAssembly& assembly, const DamageState& theta) {
    return assembly.reduced_at(theta);
}

/// Solve the dual reduced pair and strip nonphysical modes.  The pair is
/// symmetric but the mass carries a (near-)singular multiplier block by
/// construction, so the PD-mass solver does not apply; the pencil is solved
/// by QZ, eigenvalues are re-evaluated as Rayleigh quotients of the symmetric
/// matrices, and eigenpairs that are mass-invisible, dominated by multiplier
/// coordinates (energy fraction > 0.9), or below the rigid threshold are
/// discarded.
inline DcbModalResult dcb_eigenvalues(const DcbAssembly& assembly, const ReducedSystem& system, int n) {
    const int nred = system.dim();
    const int n_lambda = assembly.n_lambda();
    Eigen::GeneralizedEigenSolver<MatrixXd> ges;
    ges.compute(system.stiffness, system.mass, true);
    if (ges.info() != Eigen::Success) throw std::runtime_error("dcb_eigenvalues: QZ iteration failed");

    const double m_scale = system.mass.cwiseAbs().maxCoeff();

    const double beta_max = ges.betas().cwiseAbs().maxCoeff();

    // real candidate vectors: real eigenvectors directly, conjugate pairs as
    // the real/imaginary parts spanning their 2D invariant subspace; vectors
    // of infinite eigenvalues (beta = 0) are defective-chain garbage when the
    // multiplier block is massless and are dropped outright
    std::vector<VectorXd> raw;
    for (int k = 0; k < nred; ++k) {
        if (std::abs(ges.betas()(k)) <= 1e-8 * beta_max) continue;
        const Eigen::VectorXcd w = ges.eigenvectors().col(k);
        const double im_frac = std::abs(ges.alphas()(k).imag()) <=
                                       1e-12 * std::abs(ges.alphas()(k).real())
                                   ? 0.0
                                   : 1.0;
        if (im_frac == 0.0) {
            raw.push_back(w.real());
            continue;
        }
        if (ges.alphas()(k).imag() < 0.0) continue;  // conjugate partner already handled
        VectorXd re = w.real(), im = w.imag();
        raw.push_back(re);
        // keep the imaginary part only if it adds a direction
        const double re2 = re.dot(system.mass * re);
        if (re2 > 0.0) im -= re * (re.dot(system.mass * im) / re2);
        if (im.norm() > 1e-6 * w.real().norm() + 1e-12) raw.push_back(im);
    }

    struct Candidate {
        double lambda;
        VectorXd shape;
    };
    std::vector<Candidate> cands;
    for (VectorXd& v : raw) {
        const double total = v.squaredNorm();
        if (total == 0.0) continue;
        const double m_energy = v.dot(system.mass * v);
        if (m_energy <= 1e-10 * total * m_scale) continue;  // mass-invisible (infinite eigenvalue)
        if (v.tail(n_lambda).squaredNorm() > 0.9 * total) continue;  // multiplier-dominated
        Candidate c;
        c.shape = v / std::sqrt(m_energy);
        c.lambda = c.shape.dot(system.stiffness * c.shape);
        cands.push_back(std::move(c));
    }
    std::sort(cands.begin(), cands.end(),
              [](const Candidate& a, const Candidate& b) { return a.lambda < b.lambda; });

    // rigid threshold relative to the first positive surviving eigenvalue
    double lambda_ref = 0.0;
    for (const Candidate& c : cands)
        if (c.lambda > 0.0) {
            lambda_ref = c.lambda;
            break;
        }
    std::vector<const Candidate*> kept;
    for (const Candidate& c : cands)
        if (c.lambda >= 1e-6 * lambda_ref) kept.push_back(&c);

    if (static_cast<int>(kept.size()) < n)
        throw std::runtime_error("dcb_eigenvalues: only " + std::to_string(kept.size()) +
                                 " physical modes recoverable, " + std::to_string(n) + " requested");

    DcbModalResult out;
    out.n_solved = nred;
    out.n_filtered = nred - static_cast<int>(kept.size());
    out.modes.eigenvalues.resize(n);
    out.modes.mode_shapes.resize(nred, n);
    for (int i = 0; i < n; ++i) {
        out.modes.eigenvalues(i) = kept[i]->lambda;
        out.modes.mode_shapes.col(i) = kept[i]->shape;
    }

    // QZ eigenvalues are accurate through the Rayleigh quotient but the
    // vectors inherit contamination from the ill-conditioned multiplier
    // block; polish each mode with shifted inverse iteration
    for (int i = 0; i < n; ++i) {
        const double sigma = out.modes.eigenvalues(i) * (1.0 - 1e-7);
        Eigen::PartialPivLU<MatrixXd> lu(system.stiffness - sigma * system.mass);
        VectorXd v = out.modes.mode_shapes.col(i);
        for (int it = 0; it < 2; ++it) {
            v = lu.solve(system.mass * v);
            // keep degenerate partners independent
            for (int j = 0; j < i; ++j)
                if (std::abs(out.modes.eigenvalues(j) - out.modes.eigenvalues(i)) <=
                    1e-6 * std::abs(out.modes.eigenvalues(i)))
                    v -= out.modes.mode_shapes.col(j) *
                         out.modes.mode_shapes.col(j).dot(system.mass * v);
            const double m_e = v.dot(system.mass * v);
            if (!(m_e > 0.0)) break;
            v /= std::sqrt(m_e);
        }
        out.modes.mode_shapes.col(i) = v;
        out.modes.eigenvalues(i) = v.dot(system.stiffness * v) / v.dot(system.mass * v);
    }
    detail::canonicalize_degenerate_clusters(out.modes.eigenvalues, out.modes.mode_shapes);
    detail::fix_signs(out.modes.mode_shapes);
    // canonicalization may rotate within a near-degenerate cluster; restore
    // the Rayleigh quotient of each returned column
    for (int i = 0; i < n; ++i) {
        const VectorXd& v = out.modes.mode_shapes.col(i);
        out.modes.eigenvalues(i) = v.dot(system.stiffness * v) / v.dot(system.mass * v);
    }
    return out;
}

inline MatrixXd dcb_expand(const DcbAssembly& assembly, const DamageState& theta,
                           const MatrixXd& reduced_shapes) {
    return assembly.expand(theta, reduced_shapes);
}

}  // namespace substruct
