#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "substruct/modal.hpp"
#include "substruct/model.hpp"

namespace substruct {

/// Assembled reduced mass/stiffness pair ready for eigenanalysis.
struct ReducedSystem {
    MatrixXd stiffness;
    MatrixXd mass;

    int dim() const { return static_cast<int>(stiffness.rows()); }
};

/// Craig-Bampton projection data for one substructure, built at theta = 1.
struct CbBasis {
    MatrixXd fixed_interface_modes;  // internal x kept, mass-normalized w.r.t. M_ii
    MatrixXd constraint_modes;       // internal x boundary
    MatrixXd reduction;              // [[Phi, Psi], [0, I]]
    int kept_modes = 0;
    MatrixXd k0_reduced;  // R^T K0 R in the permuted (internal-first) ordering
    MatrixXd m0_reduced;
    Partition partition;
    std::vector<int> boundary_dofs;  // original substructure indices, partition order

    int n_boundary() const { return static_cast<int>(boundary_dofs.size()); }
    int reduced_dim() const { return kept_modes + n_boundary(); }
};

/// Fixed-interface modes plus constraint modes; reduced blocks cached at theta = 1.
inline CbBasis cb_reduce(const SubstructureModel& sub, int n_modes) {
    Partition p = partition_dofs(sub);
    if (n_modes < 1 || n_modes > p.n_internal)
        throw std::invalid_argument("cb_reduce: n_modes out of range");

    CbBasis basis;
    basis.partition = std::move(p);
    basis.boundary_dofs = sub.boundary_dofs;
    basis.kept_modes = n_modes;

    const Partition& part = basis.partition;
    // extended precision plus diagonal equilibration keeps the constraint
    // modes identical across theta-scaled copies of K_ii; the raw matrix mixes
    // translational and rotational stiffness scales, and its condition number
    // would otherwise leak solve noise into the near-singular boundary block
    using MatrixXl = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    using VectorXl = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
    const MatrixXl kii_l = part.k_ii.cast<long double>();
    if ((kii_l.diagonal().array() <= 0.0L).any())
        throw std::runtime_error("cb_reduce: K_ii has a nonpositive diagonal entry");
    const VectorXl scale = kii_l.diagonal().array().sqrt().inverse();
    Eigen::LDLT<MatrixXl> kii(scale.asDiagonal() * kii_l * scale.asDiagonal());
    if (kii.info() != Eigen::Success || !kii.isPositive())
        throw std::runtime_error("cb_reduce: K_ii factorization failed (disconnected internal mesh?)");
    const MatrixXl rhs = scale.asDiagonal() * part.k_ib.cast<long double>();
    basis.constraint_modes = (-(scale.asDiagonal() * kii.solve(rhs))).cast<double>();

    auto [fixed_vals, fixed_vecs] = detail::generalized_eig_precise(part.k_ii, part.m_ii);
    detail::canonicalize_degenerate_clusters(fixed_vals, fixed_vecs);
    basis.fixed_interface_modes = fixed_vecs.leftCols(n_modes);
    detail::fix_signs(basis.fixed_interface_modes);

    const int ni = part.n_internal, nb = part.n_boundary;
    basis.reduction = MatrixXd::Zero(ni + nb, n_modes + nb);
    basis.reduction.topLeftCorner(ni, n_modes) = basis.fixed_interface_modes;
    basis.reduction.topRightCorner(ni, nb) = basis.constraint_modes;
    basis.reduction.bottomRightCorner(nb, nb) = MatrixXd::Identity(nb, nb);

    MatrixXd m_perm(ni + nb, ni + nb), k_perm(ni + nb, ni + nb);
    m_perm << part.m_ii, part.m_ib, part.m_ib.transpose(), part.m_bb;
    k_perm << part.k_ii, part.k_ib, part.k_ib.transpose(), part.k_bb;
    const MatrixXl r_l = basis.reduction.cast<long double>();
    basis.k0_reduced = (r_l.transpose() * k_perm.cast<long double>() * r_l).cast<double>();
    basis.m0_reduced = (r_l.transpose() * m_perm.cast<long double>() * r_l).cast<double>();
    basis.k0_reduced = 0.5 * (basis.k0_reduced + basis.k0_reduced.transpose().eval());
    basis.m0_reduced = 0.5 * (basis.m0_reduced + basis.m0_reduced.transpose().eval());
    return basis;
}

/// Primal coupling of two CB-reduced substructures with shared boundary
/// coordinates; reassembly at any theta reuses the theta = 1 blocks.
class CbAssembly {
public:
    CbAssembly(CbBasis lower, CbBasis upper, const InterfaceMap& map, const AssemblyMap& assembly_map)
        : lower_(std::move(lower)), upper_(std::move(upper)), assembly_map_(assembly_map) {
        const int nb = lower_.n_boundary();
        if (upper_.n_boundary() != nb || map.size() != nb)
            throw std::runtime_error("cb_assemble: boundary dimension mismatch between bases");

        const int nq1 = lower_.kept_modes, nq2 = upper_.kept_modes;
        coupling_ = MatrixXd::Zero(nq1 + nb + nq2 + nb, nq1 + nq2 + nb);
        coupling_.block(0, 0, nq1, nq1).setIdentity();
        coupling_.block(nq1 + nb, nq1, nq2, nq2).setIdentity();
        for (int p = 0; p < nb; ++p) {
            const auto [d1, d2] = map.pairs[p];
            coupling_(nq1 + boundary_position(lower_, d1), nq1 + nq2 + p) = 1.0;
            coupling_(nq1 + nb + nq2 + boundary_position(upper_, d2), nq1 + nq2 + p) = 1.0;
        }
    }

    const CbBasis& lower() const { return lower_; }
    const CbBasis& upper() const { return upper_; }
    const MatrixXd& coupling() const { return coupling_; }
    int reduced_dim() const { return static_cast<int>(coupling_.cols()); }

    /// K_CB = L^T blockdiag(theta_i * K0_i) L; mass is theta-independent.
    ReducedSystem reduced_at(const DamageState& theta) const {
        theta.validate();
        if (theta.theta.size() != 2) throw std::invalid_argument("cb_assemble: theta must have 2 entries");
        const int n1 = lower_.reduced_dim(), n2 = upper_.reduced_dim();
        MatrixXd k_blk = MatrixXd::Zero(n1 + n2, n1 + n2);
        MatrixXd m_blk = MatrixXd::Zero(n1 + n2, n1 + n2);
        k_blk.topLeftCorner(n1, n1) = theta.theta(0) * lower_.k0_reduced;
        k_blk.bottomRightCorner(n2, n2) = theta.theta(1) * upper_.k0_reduced;
        m_blk.topLeftCorner(n1, n1) = lower_.m0_reduced;
        m_blk.bottomRightCorner(n2, n2) = upper_.m0_reduced;

        ReducedSystem sys;
        sys.stiffness = coupling_.transpose() * k_blk * coupling_;
        sys.mass = coupling_.transpose() * m_blk * coupling_;
        sys.stiffness = 0.5 * (sys.stiffness + sys.stiffness.transpose().eval());
        sys.mass = 0.5 * (sys.mass + sys.mass.transpose().eval());
        return sys;
    }

    /// Map reduced-coordinate shapes back to the assembled physical DOFs.
    MatrixXd expand(const MatrixXd& reduced_shapes) const {
        if (reduced_shapes.rows() != reduced_dim())
            throw std::invalid_argument("cb_expand: shape dimension mismatch");
        const MatrixXd sub_coords = coupling_ * reduced_shapes;
        const int n1 = lower_.reduced_dim();
        const MatrixXd x1 = expand_substructure(lower_, sub_coords.topRows(n1));
        const MatrixXd x2 = expand_substructure(upper_, sub_coords.bottomRows(upper_.reduced_dim()));

        MatrixXd global(assembly_map_.dim, reduced_shapes.cols());
        for (int r = 0; r < x1.rows(); ++r) global.row(assembly_map_.lower_to_global[r]) = x1.row(r);
        for (int r = 0; r < x2.rows(); ++r) global.row(assembly_map_.upper_to_global[r]) = x2.row(r);
        return global;
    }

private:
    static int boundary_position(const CbBasis& basis, int dof) {
        for (int i = 0; i < basis.n_boundary(); ++i)
            if (basis.boundary_dofs[i] == dof) return i;
        throw std::runtime_error("cb_assemble: interface map references a non-boundary DOF");
    }

    static MatrixXd expand_substructure(const CbBasis& basis, const MatrixXd& coords) {
        const MatrixXd permuted = basis.reduction * coords;  // internal-first ordering
        MatrixXd physical(permuted.rows(), permuted.cols());
        for (int r = 0; r < permuted.rows(); ++r)
            physical.row(basis.partition.permutation[r]) = permuted.row(r);
        return physical;
    }

    CbBasis lower_;
    CbBasis upper_;
    AssemblyMap assembly_map_;
    MatrixXd coupling_;  // L
};

inline ReducedSystem cb_assemble(const CbAssembly& assembly, const DamageState& theta) {
    return assembly.reduced_at(theta);
}

inline ModalData cb_eigenvalues(const ReducedSystem& system, int n) {
    return generalized_eig(system.stiffness, system.mass, n);
}

inline MatrixXd cb_expand(const CbAssembly& assembly, const MatrixXd& reduced_shapes) {
    return assembly.expand(reduced_shapes);
}

}  // namespace substruct
