#include <gtest/gtest.h>

#include <cmath>

#include "dbp/metrics.hpp"
#include "dbp/rng.hpp"

using namespace dbp;

namespace {

// Textbook Cholesky and substitution that count every complex multiply.
struct Counter
{
    std::int64_t n = 0;
    cplx mul(cplx a, cplx b)
    {
        ++n;
        return a * b;
    }
};

cmat cholesky(const cmat& A, Counter& c)
{
    const Eigen::Index n = A.rows();
    cmat L = cmat::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        cplx d = A(j, j);
        for (Eigen::Index k = 0; k < j; ++k)
            d -= c.mul(L(j, k), std::conj(L(j, k)));
        L(j, j) = std::sqrt(d.real());
        for (Eigen::Index i = j + 1; i < n; ++i) {
            cplx s = A(i, j);
            for (Eigen::Index k = 0; k < j; ++k)
                s -= c.mul(L(i, k), std::conj(L(j, k)));
            L(i, j) = s / L(j, j);
        }
    }
    return L;
}

cvec forward(const cmat& L, const cvec& b, Counter& c)
{
    cvec x(b.size());
    for (Eigen::Index i = 0; i < b.size(); ++i) {
        cplx s = b(i);
        for (Eigen::Index k = 0; k < i; ++k)
            s -= c.mul(L(i, k), x(k));
        x(i) = s / L(i, i);
    }
    return x;
}

cvec backward(const cmat& L, const cvec& b, Counter& c)
{
    const Eigen::Index n = b.size();
    cvec x(n);
    for (Eigen::Index i = n - 1; i >= 0; --i) {
        cplx s = b(i);
        for (Eigen::Index k = i + 1; k < n; ++k)
            s -= c.mul(std::conj(L(k, i)), x(k));
        x(i) = s / L(i, i);
    }
    return x;
}

} // namespace

TEST(Metrics, CholeskyCountMatchesInstrumentedFactorization)
{
    Rng rng(1, "test.chol");
    for (int n : {1, 4, 16}) {
        const cmat G = rng.cgauss(n, n);
        const cmat A = G * G.adjoint() + cmat::Identity(n, n);
        Counter c;
        const cmat L = cholesky(A, c);
        EXPECT_LT((L * L.adjoint() - A).norm(), 1e-10);
        EXPECT_EQ(c.n, metrics::cmac_cholesky(n)) << n;
        Counter f;
        forward(L, rng.cgauss(n, 1), f);
        EXPECT_EQ(f.n, metrics::cmac_triangular_solve(n));
    }
}

TEST(Metrics, LmmseEqualizationCountMatchesInstrumentedRun)
{
    // M=16, L=4, one subcarrier, two symbols
    auto cfg = model::SystemConfig::with_equal_split(16, 2);
    cfg.L = 4;
    cfg.n_sc = 1;
    cfg.n_sym = 2;
    Rng rng(2, "test.eq");
    const cmat H = rng.cgauss(16, 4);
    Counter c;
    cmat R = cmat::Identity(16, 16);
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j)
            for (int l = 0; l < 4; ++l)
                R(i, j) += c.mul(H(i, l), std::conj(H(j, l)));
    const cmat Lc = cholesky(R, c);
    cmat W(16, 4);
    for (int l = 0; l < 4; ++l)
        W.col(l) = backward(Lc, forward(Lc, H.col(l), c), c);
    const cmat G = W.adjoint();
    for (int t = 0; t < 2; ++t) {
        const cvec y = rng.cgauss(16, 1);
        for (int l = 0; l < 4; ++l)
            for (int m = 0; m < 16; ++m)
                c.mul(G(l, m), y(m));
    }
    EXPECT_LT((G - H.adjoint() * R.inverse()).norm(), 1e-9);
    EXPECT_EQ(c.n, metrics::flops_lmmse_eq(cfg));
}

TEST(Metrics, LmmseEstimationCountMatchesInstrumentedRun)
{
    auto cfg = model::SystemConfig::with_equal_split(16, 2);
    cfg.L = 1;
    cfg.n_sc = 1;
    Rng rng(3, "test.ce");
    const cmat G = rng.cgauss(16, 16);
    const cmat Rh = G * G.adjoint();
    const cmat A = Rh + cmat::Identity(16, 16);
    Counter c;
    const cmat L = cholesky(A, c);
    const cvec z = backward(L, forward(L, rng.cgauss(16, 1), c), c);
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j)
            c.mul(Rh(i, j), z(j));
    EXPECT_EQ(c.n, metrics::flops_lmmse_ce(cfg));
}

TEST(Metrics, ExponentFitRecoversPowerLaw)
{
    std::vector<double> x{2, 4, 8, 16}, y;
    for (double v : x)
        y.push_back(5.0 * std::pow(v, 2.5));
    EXPECT_NEAR(metrics::fit_exponent(x, y), 2.5, 1e-12);
    EXPECT_THROW(metrics::fit_exponent({1.0}, {1.0}), Error);
}

TEST(Metrics, ReportBalanceIsMaxOverMean)
{
    metrics::RunArtifacts run;
    run.dn_cmacs = {10, 20, 30};
    run.cn_cmacs = 100;
    const auto r = metrics::report(run);
    EXPECT_DOUBLE_EQ(r.balance, 1.5);
    EXPECT_EQ(r.flops_cmacs, 160);
    EXPECT_EQ(r.per_node_flops.size(), 4u);
    EXPECT_EQ(metrics::report({}).balance, 0.0);
}
