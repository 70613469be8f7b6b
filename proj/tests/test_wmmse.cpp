#include <gtest/gtest.h>

#include <omp.h>

#include "dbp/rng.hpp"
#include "dbp/wmmse.hpp"

using namespace dbp;
using namespace dbp::wmmse;

namespace {

Problem single_user(const cmat& H, double noise, double budget, int d)
{
    Problem p;
    p.tx = {{static_cast<int>(H.cols()), 0, false}};
    p.rx = {{static_cast<int>(H.rows()), noise * cmat::Identity(H.rows(), H.rows())}};
    p.groups = {{0, 0, d}};
    p.channel = {{H}};
    p.pool_budget = {budget};
    return p;
}

// K single-antenna-pair links sharing one band, each tx with its own pool
Problem interference(int K, int n_ant, std::uint64_t seed)
{
    Rng rng(seed, "test.ifc");
    Problem p;
    p.channel.assign(K, std::vector<cmat>(K));
    for (int k = 0; k < K; ++k) {
        p.tx.push_back({n_ant, k, false});
        p.rx.push_back({n_ant, 0.5 * cmat::Identity(n_ant, n_ant)});
        p.groups.push_back({k, k, 1});
        p.pool_budget.push_back(1.0);
        for (int r = 0; r < K; ++r)
            p.channel[k][r] = rng.cgauss(n_ant, n_ant);
    }
    return p;
}

double waterfilling_capacity(const cmat& H, double noise, double budget)
{
    Eigen::SelfAdjointEigenSolver<cmat> es(H.adjoint() * H / noise);
    std::vector<double> g;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()(i) > 1e-12)
            g.push_back(es.eigenvalues()(i));
    std::sort(g.rbegin(), g.rend());
    // drop the weakest modes until the water level covers every active one
    for (std::size_t n = g.size(); n >= 1; --n) {
        double inv = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            inv += 1.0 / g[i];
        const double level = (budget + inv) / static_cast<double>(n);
        if (level > 1.0 / g[n - 1]) {
            double c = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                c += std::log2(level * g[i]);
            return c;
        }
    }
    return 0.0;
}

} // namespace

TEST(BisectMu, ZeroWhenAlreadyFeasible)
{
    rvec l(2), c(2);
    l << 1.0, 2.0;
    c << 0.1, 0.1;
    EXPECT_EQ(bisect_mu({l}, {c}, 1.0), 0.0);
}

TEST(BisectMu, MeetsBudgetFromTheFeasibleSide)
{
    rvec l(3), c(3);
    l << 0.0, 0.5, 2.0;
    c << 1.0, 2.0, 3.0;
    const double mu = bisect_mu({l}, {c}, 0.7);
    double p = 0.0;
    for (int i = 0; i < 3; ++i)
        p += c(i) / std::pow(l(i) + mu, 2);
    EXPECT_LE(p, 0.7);
    EXPECT_NEAR(p, 0.7, 1e-9);
}

TEST(Wmmse, SingleUserReachesWaterfillingCapacity)
{
    Rng rng(1, "test.su");
    for (int t = 0; t < 5; ++t) {
        const cmat H = rng.cgauss(3, 4);
        Options opt;
        opt.tol = 1e-12;
        opt.max_iter = 5000;
        const auto res = solve(single_user(H, 0.3, 2.0, 3), opt);
        EXPECT_NEAR(res.sum_rate, waterfilling_capacity(H, 0.3, 2.0), 1e-4) << t;
    }
}

TEST(Wmmse, TraceIsMonotoneAndPowerFeasible)
{
    for (std::uint64_t s = 0; s < 5; ++s) {
        const auto p = interference(3, 2, s);
        const auto res = solve(p);
        for (std::size_t k = 1; k < res.trace.size(); ++k)
            EXPECT_GE(res.trace[k], res.trace[k - 1] - 1e-10 * std::abs(res.trace[k - 1]));
        for (double pw : pool_power(p, res.Z))
            EXPECT_LE(pw, 1.0 * (1 + 1e-9));
        double sum = 0.0;
        for (double r : group_rates(p, res.Z))
            sum += r;
        EXPECT_NEAR(sum, res.sum_rate, 1e-12 * sum);
    }
}

TEST(Wmmse, FillPowerUsesTheWholeBudget)
{
    Rng rng(2, "test.fill");
    auto p = single_user(rng.cgauss(2, 4), 0.1, 3.0, 1);
    Options opt;
    opt.fill_power = true;
    const auto res = solve(p, opt);
    EXPECT_NEAR(pool_power(p, res.Z)[0], 3.0, 1e-10);
}

TEST(Wmmse, DiagonalTransmitterStaysDiagonal)
{
    Rng rng(3, "test.diag");
    Problem p;
    p.tx = {{2, 0, true}};
    p.rx = {{2, 0.2 * cmat::Identity(2, 2)}};
    p.groups = {{0, 0, 2}};
    p.channel = {{rng.cgauss(2, 2)}};
    p.pool_budget = {1.0};
    const auto res = solve(p);
    const cmat& Z = res.Z[0];
    EXPECT_EQ(Z(0, 1), cplx(0, 0));
    EXPECT_EQ(Z(1, 0), cplx(0, 0));
    EXPECT_GT(res.sum_rate, 0.0);
}

TEST(Wmmse, ValidateCatchesInconsistentProblems)
{
    auto p = interference(2, 2, 0);
    p.groups[0].tx = 5;
    EXPECT_THROW(p.validate(), Error);
    p = interference(2, 2, 0);
    p.channel[0][0] = cmat::Zero(3, 2);
    EXPECT_THROW(p.validate(), DimensionError);
    p = interference(2, 2, 0);
    p.pool_budget[1] = 0.0;
    EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Wmmse, ParallelIsBitwiseIdenticalToSerial)
{
    omp_set_num_threads(4);
    const auto p = interference(4, 2, 7);
    Options ser, par;
    par.exec = Exec::parallel;
    const auto a = solve(p, ser);
    const auto b = solve(p, par);
    EXPECT_EQ(a.trace, b.trace);
    for (std::size_t g = 0; g < a.Z.size(); ++g)
        EXPECT_EQ(a.Z[g], b.Z[g]);
}
