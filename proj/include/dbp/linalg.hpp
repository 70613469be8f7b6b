#pragma once

#include <vector>

#include "dbp/common.hpp"

namespace dbp::linalg {

struct Svd
{
    cmat U;  // m x k, orthonormal columns
    rvec s;  // k, descending
    cmat V;  // n x k, A = U diag(s) V^H
};

/// Thin SVD with a reproducible phase convention: the largest-magnitude
/// entry of every left singular vector is real and positive (ties go to the
/// lowest row index); right vectors are rotated to keep A = U S V^H.
Svd svd(const cmat& A);

/// Rows r of U^H for the r dominant left singular vectors of A (r x m).
/// When r exceeds the rank basis the rows are completed orthonormally.
cmat dominant_row_basis(const cmat& A, int r);

/// Orthonormal basis (r x n, orthonormal rows) of the row space of V.
cmat orthonormal_rows(const cmat& V);

/// Solves A X = B for Hermitian positive definite A. Throws NumericalError
/// when A is not numerically positive definite.
cmat hpd_solve(const cmat& A, const cmat& B);

cmat hpd_inverse(const cmat& A);

/// log2 det(A) for Hermitian positive definite A.
double log2det_hpd(const cmat& A);

/// Minimum-norm solution of A x = b for Hermitian PSD A, discarding
/// eigen-directions below rel_tol * lambda_max.
cvec psd_min_norm_solve(const cmat& A, const cvec& b, double rel_tol = 1e-12);

cmat blkdiag(const std::vector<cmat>& blocks);

/// Projector onto the row space of a matrix with orthonormal rows.
cmat row_projector(const cmat& rows);

inline cmat hermitian_part(const cmat& A) { return 0.5 * (A + A.adjoint()); }

} // namespace dbp::linalg
