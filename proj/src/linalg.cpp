#include "dbp/linalg.hpp"

#include <cmath>

namespace dbp::linalg {

Svd svd(const cmat& A)
{
    Eigen::BDCSVD<cmat> dec(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Svd out{dec.matrixU(), dec.singularValues(), dec.matrixV()};
    for (Eigen::Index k = 0; k < out.U.cols(); ++k) {
        Eigen::Index arg = 0;
        double best = -1.0;
        for (Eigen::Index r = 0; r < out.U.rows(); ++r) {
            // strict comparison with a relative guard keeps the lowest index on ties
            const double mag = std::abs(out.U(r, k));
            if (mag > best * (1.0 + 1e-12)) {
                best = mag;
                arg = r;
            }
        }
        if (best <= 0.0)
            continue;
        const cplx phase = std::conj(out.U(arg, k)) / best;
        out.U.col(k) *= phase;
        out.V.col(k) *= phase;
    }
    return out;
}

cmat dominant_row_basis(const cmat& A, int r)
{
    require_dims(r >= 0 && r <= A.rows(), "dominant_row_basis: rank request exceeds dimension");
    const Svd d = svd(A);
    if (r <= d.U.cols())
        return d.U.leftCols(r).adjoint();
    // wide request on a short-and-fat thin SVD: complete the basis with the
    // orthogonal complement from a Householder QR
    Eigen::HouseholderQR<cmat> qr(d.U);
    const cmat Q = qr.householderQ() * cmat::Identity(A.rows(), A.rows());
    cmat basis(A.rows(), r);
    basis.leftCols(d.U.cols()) = d.U;
    basis.rightCols(r - d.U.cols()) = Q.middleCols(d.U.cols(), r - d.U.cols());
    return basis.adjoint();
}

cmat orthonormal_rows(const cmat& V)
{
    // row space of V == column space of V^H
    const Svd d = svd(V.adjoint());
    return d.U.adjoint();
}

cmat hpd_solve(const cmat& A, const cmat& B)
{
    Eigen::LLT<cmat> llt(hermitian_part(A));
    if (llt.info() != Eigen::Success)
        throw NumericalError("matrix is not positive definite");
    cmat X = llt.solve(B);
    if (!X.allFinite())
        throw NumericalError("non-finite solution of positive definite system");
    return X;
}

cmat hpd_inverse(const cmat& A)
{
    return hpd_solve(A, cmat::Identity(A.rows(), A.cols()));
}

double log2det_hpd(const cmat& A)
{
    Eigen::LLT<cmat> llt(hermitian_part(A));
    if (llt.info() != Eigen::Success)
        throw NumericalError("log-det of a non positive definite matrix");
    double acc = 0.0;
    const cmat& L = llt.matrixLLT();
    for (Eigen::Index i = 0; i < L.rows(); ++i)
        acc += std::log2(L(i, i).real());
    return 2.0 * acc;
}

cvec psd_min_norm_solve(const cmat& A, const cvec& b, double rel_tol)
{
    Eigen::SelfAdjointEigenSolver<cmat> es(hermitian_part(A));
    if (es.info() != Eigen::Success)
        throw NumericalError("eigendecomposition failed");
    const rvec& lam = es.eigenvalues();
    const double top = lam.size() ? std::max(lam.maxCoeff(), 0.0) : 0.0;
    const cmat& Q = es.eigenvectors();
    cvec coeff = Q.adjoint() * b;
    for (Eigen::Index i = 0; i < lam.size(); ++i)
        coeff(i) = (lam(i) > rel_tol * top && lam(i) > 0.0) ? coeff(i) / lam(i) : cplx{};
    return Q * coeff;
}

cmat blkdiag(const std::vector<cmat>& blocks)
{
    Eigen::Index rows = 0, cols = 0;
    for (const auto& b : blocks) {
        rows += b.rows();
        cols += b.cols();
    }
    cmat out = cmat::Zero(rows, cols);
    Eigen::Index r = 0, c = 0;
    for (const auto& b : blocks) {
        out.block(r, c, b.rows(), b.cols()) = b;
        r += b.rows();
        c += b.cols();
    }
    return out;
}

cmat row_projector(const cmat& rows)
{
    return rows.adjoint() * rows;
}

} // namespace dbp::linalg
