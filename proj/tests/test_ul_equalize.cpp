#include <gtest/gtest.h>

#include <omp.h>

#include "dbp/linalg.hpp"
#include "dbp/rng.hpp"
#include "dbp/ul_equalize.hpp"

using namespace dbp;
using namespace dbp::ul;

namespace {

model::SystemConfig config(int M = 8, int C = 2, int L = 2, int n_sc = 4)
{
    auto cfg = model::SystemConfig::with_equal_split(M, C);
    cfg.L = L;
    cfg.n_sc = n_sc;
    cfg.n_sym = 14;
    cfg.noise_var = 0.1;
    cfg.seed = 21;
    return cfg;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// DN i only hears user i, so the received covariance is block diagonal.
UplinkScene block_orthogonal_scene()
{
    auto scene = random_scene(config(8, 2, 2, 3), 2, 0);
    for (int j = 0; j < scene.n_sc(); ++j) {
        scene.H[j].block(0, 1, 4, 1).setZero();
        scene.H[j].block(4, 0, 4, 1).setZero();
    }
    return scene;
}

} // namespace

TEST(Lmmse, ObjectiveIsSumOfPerSubcarrierMse)
{
    const auto scene = random_scene(config(), 2, 1);
    double sum = 0.0;
    for (int j = 0; j < scene.n_sc(); ++j)
        sum += filter_mse(scene, j, lmmse_equalizer(scene, j));
    EXPECT_NEAR(lmmse_objective(scene), sum, 1e-12 * sum);
}

TEST(Lmmse, PerturbationsNeverHelp)
{
    const auto scene = random_scene(config(), 1, 2);
    Rng rng(1, "test.perturb");
    const cmat W = lmmse_equalizer(scene, 0);
    const double best = filter_mse(scene, 0, W);
    for (int t = 0; t < 50; ++t)
        EXPECT_GE(filter_mse(scene, 0, W + 1e-3 * rng.cgauss(W.rows(), W.cols())), best);
}

TEST(Jcde, IdentityCompressorGivesLmmse)
{
    const auto scene = random_scene(config(), 2, 3);
    CompressionDesign d;
    for (int m : scene.cfg.m_sizes)
        d.V.push_back(cmat::Identity(m, m));
    d.U = optimal_equalizers(scene, d.V);
    EXPECT_LT(rel(jcde_objective(scene, d), lmmse_objective(scene)), 1e-10);
}

TEST(Jcde, CompressorIsBlockDiagonal)
{
    const auto scene = random_scene(config(), 2, 4);
    const auto d = jcde_bcd(scene, {2, 3});
    const cmat V = d.compressor();
    ASSERT_EQ(V.rows(), 5);
    ASSERT_EQ(V.cols(), 8);
    EXPECT_EQ(V.block(0, 4, 2, 4).norm(), 0.0);
    EXPECT_EQ(V.block(2, 0, 3, 4).norm(), 0.0);
    EXPECT_EQ(d.ranks(), (std::vector<int>{2, 3}));
    EXPECT_EQ(d.ranks_total(), 5);
}

TEST(Jcde, RejectsOversizedRank)
{
    const auto scene = random_scene(config(), 1, 0);
    EXPECT_THROW(jcde_bcd(scene, {5, 1}), ConfigError);
    EXPECT_THROW(jcde_bcd(scene, {1}), ConfigError);
}

TEST(Bcd, LosslessCompressionReachesLmmse)
{
    for (std::uint64_t t = 0; t < 5; ++t) {
        const auto scene = random_scene(config(), 2, t);
        const auto d = jcde_bcd(scene, {4, 4});
        EXPECT_LT(rel(jcde_objective(scene, d), lmmse_objective(scene)), 1e-8) << t;
    }
}

TEST(Bcd, ObjectiveNeverIncreases)
{
    for (std::uint64_t t = 0; t < 5; ++t) {
        const auto scene = random_scene(config(8, 2, 3, 6), 3, t);
        const auto d = jcde_bcd(scene, {1, 2});
        ASSERT_GE(d.trace.size(), 3u);
        for (std::size_t k = 1; k < d.trace.size(); ++k)
            EXPECT_LE(d.trace[k].objective, d.trace[k - 1].objective + 1e-10 * std::abs(d.trace[k - 1].objective));
        EXPECT_GE(jcde_objective(scene, d), lmmse_objective(scene) * (1 - 1e-12));
    }
}

TEST(Bcd, BeatsRandomRestarts)
{
    // oracle: best of several random starting compressors run to convergence
    const auto scene = random_scene(config(6, 2, 2, 2), 2, 9);
    const double ours = jcde_objective(scene, jcde_bcd(scene, {1, 1}));
    Rng rng(3, "test.restart");
    double oracle = std::numeric_limits<double>::infinity();
    for (int s = 0; s < 20; ++s) {
        SolverOptions opt;
        opt.initial = std::vector<cmat>{rng.cgauss(1, 3), rng.cgauss(1, 3)};
        oracle = std::min(oracle, jcde_objective(scene, jcde_bcd(scene, {1, 1}, opt)));
    }
    EXPECT_LE(ours, oracle * (1 + 1e-3));
}

TEST(Admm, AgreesWithDirectBlockSolve)
{
    for (std::uint64_t t = 0; t < 3; ++t) {
        const auto scene = random_scene(config(), 2, t);
        const auto a = jcde_bcd(scene, {1, 1});
        const auto b = jcde_bcd_admm(scene, {1, 1});
        EXPECT_LT(rel(jcde_objective(scene, b), jcde_objective(scene, a)), 1e-3) << t;
        const cmat Pa = linalg::row_projector(linalg::orthonormal_rows(a.compressor()));
        const cmat Pb = linalg::row_projector(linalg::orthonormal_rows(b.compressor()));
        EXPECT_LT((Pa - Pb).norm() / Pa.norm(), 1e-3) << t;
        bool has_inner = false;
        for (const auto& row : b.trace)
            has_inner = has_inner || row.inner > 0;
        EXPECT_TRUE(has_inner);
    }
}

TEST(SvdAgg, SingleProbeOnFlatChannelMatchesBcd)
{
    const auto scene = random_scene(config(8, 2, 2, 4), 1, 5);
    const double bcd = jcde_objective(scene, jcde_bcd(scene, {1, 1}));
    const double agg = jcde_objective(scene, svd_agg(scene, {1, 1}, 1));
    EXPECT_LT(rel(agg, bcd), 1e-6);
}

TEST(SvdAgg, IsNoBetterThanJointDesign)
{
    for (std::uint64_t t = 0; t < 3; ++t) {
        const auto scene = random_scene(config(8, 2, 2, 6), 3, t);
        const double bcd = jcde_objective(scene, jcde_bcd(scene, {2, 2}));
        const double agg = jcde_objective(scene, svd_agg(scene, {2, 2}, 3));
        EXPECT_GE(agg, bcd * (1 - 1e-6)) << t;
    }
}

TEST(Fd, ExactWhenDnsSeeDisjointUsers)
{
    const auto scene = block_orthogonal_scene();
    const double fd = jcde_objective(scene, fd_scheme(scene, {1, 1}));
    const double joint = jcde_objective(scene, jcde_bcd(scene, {1, 1}));
    EXPECT_LT(rel(fd, joint), 1e-6);
}

TEST(Fd, CorrelatedNodesCostAccuracy)
{
    for (std::uint64_t t = 0; t < 3; ++t) {
        const auto scene = random_scene(config(), 2, t);
        const double fd = jcde_objective(scene, fd_scheme(scene, {2, 2}));
        const double joint = jcde_objective(scene, jcde_bcd(scene, {2, 2}));
        EXPECT_GE(fd, joint * (1 - 1e-9)) << t;
    }
}

TEST(Pd, ExactCovarianceImprovesOnFd)
{
    const auto scene = random_scene(config(), 2, 7);
    const auto fd = fd_scheme(scene, {2, 2});
    const auto pd = pd_scheme(scene, {2, 2}, {0, 0, 1e-9});
    EXPECT_LT((fd.compressor() - pd.compressor()).norm(), 1e-12);
    EXPECT_LE(jcde_objective(scene, pd), jcde_objective(scene, fd) * (1 + 1e-12));
    // exact covariance means the optimal equalizer for the FD compressor
    const auto U = optimal_equalizers(scene, pd.V);
    for (int j = 0; j < scene.n_sc(); ++j)
        EXPECT_LT((U[j] - pd.U[j]).norm(), 1e-9 * U[j].norm());
}

TEST(Pd, PilotEstimateConvergesToExactCovariance)
{
    const auto scene = random_scene(config(), 2, 8);
    const double exact = jcde_objective(scene, pd_scheme(scene, {2, 2}, {0, 0, 1e-9}));
    const double few = jcde_objective(scene, pd_scheme(scene, {2, 2}, {8, 0, 1e-9}));
    const double many = jcde_objective(scene, pd_scheme(scene, {2, 2}, {4096, 0, 1e-9}));
    EXPECT_GT(few, exact);
    EXPECT_LT(rel(many, exact), 0.05);
    EXPECT_LT(many, few);
}

TEST(Pd, FewerPilotsThanRankWarns)
{
    const auto scene = random_scene(config(), 1, 3);
    const auto d = pd_scheme(scene, {3, 3}, {2, 0, 1e-9});
    EXPECT_FALSE(d.warnings.empty());
}

TEST(Ledger, SchemesMatchAnalyticCost)
{
    const auto cfg = config(256, 4, 32, 128);
    const std::vector<int> r{16, 16, 16, 16};
    const double analytic = static_cast<double>(fabric::lcmue_cost(cfg, r));
    EXPECT_EQ(uplink_ledger(cfg, Scheme::cn_designed, r).total(), analytic);
    EXPECT_EQ(uplink_ledger(cfg, Scheme::fd, r).total(), analytic);
    const auto pd = uplink_ledger(cfg, Scheme::pd, r, 64);
    EXPECT_EQ(pd.total() - pd.total(fabric::MessageClass::pilot_signal), analytic);
    EXPECT_EQ(pd.total(fabric::MessageClass::pilot_signal), 4.0 * 16 * 64 * 128);
    EXPECT_EQ(uplink_ledger(cfg, Scheme::centralized, r).total(),
              static_cast<double>(fabric::centralized_eq_cost(cfg)));
}

TEST(Equalize, AppliesCompressorThenFilter)
{
    const auto scene = random_scene(config(), 2, 1);
    const auto d = jcde_bcd(scene, {2, 2});
    Rng rng(4, "test.apply");
    const cvec y = rng.cgauss(8, 1);
    const auto out = equalize_apply(scene, d, 1, y);
    EXPECT_LT((out.s_hat - d.U[1] * d.compressor() * y).norm(), 1e-12);
    EXPECT_LT((out.sinr - filter_sinr(scene, 1, effective_filter(d, 1))).norm(), 1e-12);
}

TEST(Equalize, LmmseSinrMatchesClosedForm)
{
    // for the LMMSE filter, SINR_l = 1 / mse_l - 1
    const auto scene = random_scene(config(), 1, 6);
    const cmat W = lmmse_equalizer(scene, 0);
    const rvec s = filter_sinr(scene, 0, W);
    const cmat E = cmat::Identity(2, 2) - W * scene.H[0];
    for (int l = 0; l < 2; ++l)
        EXPECT_NEAR(s(l), 1.0 / E(l, l).real() - 1.0, 1e-8);
}

TEST(Parallel, BcdIsBitwiseIdenticalToSerial)
{
    omp_set_num_threads(4);
    const auto scene = random_scene(config(8, 2, 2, 8), 3, 2);
    SolverOptions ser, par;
    par.exec = Exec::parallel;
    const auto a = jcde_bcd(scene, {2, 2}, ser);
    const auto b = jcde_bcd(scene, {2, 2}, par);
    ASSERT_EQ(a.trace.size(), b.trace.size());
    for (std::size_t k = 0; k < a.trace.size(); ++k)
        EXPECT_EQ(a.trace[k].objective, b.trace[k].objective);
    for (int i = 0; i < 2; ++i)
        EXPECT_EQ(a.V[i], b.V[i]);
    EXPECT_EQ(lmmse_objective(scene, Exec::serial), lmmse_objective(scene, Exec::parallel));
    const auto fa = fd_scheme(scene, {2, 2}, ser);
    const auto fb = fd_scheme(scene, {2, 2}, par);
    EXPECT_EQ(fa.compressor(), fb.compressor());
}
