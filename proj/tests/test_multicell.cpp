#include <gtest/gtest.h>

#include <omp.h>

#include "dbp/multicell.hpp"
#include "dbp/rng.hpp"

using namespace dbp;
using namespace dbp::mc;

namespace {

MultiCellScene toy(int cells, int M, std::uint64_t trial, double gain = 0.5)
{
    return random_scene(cells, M, 2, 1, 0.1, 1.0, gain, 41, trial);
}

} // namespace

TEST(Scene, CrossLinksAreScaledCopies)
{
    const auto a = toy(2, 4, 0, 0.25);
    const auto b = toy(2, 4, 0, 1.0);
    EXPECT_LT((a.H[0][1] * 2.0 - b.H[0][1]).norm(), 1e-12);
    EXPECT_EQ(a.H[0][0], b.H[0][0]);
    EXPECT_THROW(toy(2, 4, 0, -1.0), ConfigError);
}

TEST(Vpc, SplitReconstructsTheImage)
{
    Rng rng(1, "test.split");
    const cmat H = rng.cgauss(3, 5), Z = rng.cgauss(5, 2);
    const auto s = vpc_split(Z, H);
    EXPECT_LT((s.G * s.p.cast<cplx>().asDiagonal() - H * Z).norm(), 1e-12);
    for (Eigen::Index c = 0; c < 2; ++c)
        EXPECT_NEAR(s.p(c), Z.col(c).norm(), 1e-14);
}

TEST(Vpc, SplitHandlesZeroColumns)
{
    Rng rng(2, "test.zero");
    const cmat H = rng.cgauss(3, 4);
    const auto s = vpc_split(cmat::Zero(4, 1), H);
    EXPECT_EQ(s.p(0), 0.0);
    EXPECT_EQ(s.G.col(0), H.col(0));
}

TEST(Vpc, BackhaulIsIndependentOfAntennaCount)
{
    const auto a = vpc_round(toy(3, 8, 0), 2);
    const auto b = vpc_round(toy(3, 64, 0), 2);
    EXPECT_EQ(a.ledger.total_real(), b.ledger.total_real());
    // per round, every ordered pair exchanges one pair cost
    EXPECT_EQ(a.ledger.total_real(), 2 * 3 * 2 * vpc_pair_cost_real(toy(3, 8, 0)));
}

TEST(Vpc, LocalSolveNeverLosesTheWarmStartRate)
{
    const auto s = toy(2, 4, 3);
    std::vector<cmat> Z{single_cell_wmmse(s, 0, cmat()), single_cell_wmmse(s, 1, cmat())};
    std::vector<std::vector<cmat>> G(2, std::vector<cmat>(2));
    std::vector<rvec> p(2);
    for (int l = 0; l < 2; ++l)
        for (int k = 0; k < 2; ++k) {
            const auto sp = vpc_split(Z[l], s.H[k][l]);
            G[k][l] = sp.G;
            p[l] = sp.p;
        }
    const auto loc = vpc_local_solve(s, 0, G, Z[0], p);
    ASSERT_FALSE(loc.trace.empty());
    EXPECT_GE(loc.trace.back(), loc.trace.front() - 1e-10);
    EXPECT_LE(loc.Z.squaredNorm(), 1.0 + 1e-9);
    EXPECT_EQ(loc.virtual_p[0].size(), 0);
    EXPECT_EQ(loc.virtual_p[1].size(), 1);
}

TEST(Mcp, RespectsPerBaseStationBudgets)
{
    const auto s = toy(3, 4, 1);
    const auto sol = mcp_centralized(s);
    for (const auto& Z : sol.Z)
        EXPECT_LE(Z.squaredNorm(), 1.0 + 1e-9);
    for (std::size_t k = 1; k < sol.trace.size(); ++k)
        EXPECT_GE(sol.trace[k], sol.trace[k - 1] - 1e-10 * std::abs(sol.trace[k - 1]));
}

TEST(Sandwich, MeanRatesAreOrdered)
{
    for (int cells : {2, 3}) {
        double tin = 0.0, vpc = 0.0, mcp = 0.0;
        for (std::uint64_t t = 0; t < 10; ++t) {
            const auto s = toy(cells, 4, t);
            tin += tin_baseline(s).sum_rate;
            vpc += vpc_round(s).solution.sum_rate;
            mcp += mcp_centralized(s).sum_rate;
        }
        EXPECT_LE(tin, vpc) << cells;
        EXPECT_LE(vpc, mcp) << cells;
    }
}

TEST(Tin, FirstRoundIgnoresOtherCells)
{
    const auto s = toy(2, 4, 2);
    const auto sol = tin_baseline(s, 1);
    EXPECT_EQ(sol.Z[0], single_cell_wmmse(s, 0, cmat::Zero(2, 2)));
    EXPECT_EQ(sol.trace.size(), 1u);
}

TEST(Parallel, VpcIsBitwiseIdenticalToSerial)
{
    omp_set_num_threads(4);
    const auto s = toy(3, 4, 5);
    const auto a = vpc_round(s, 2, 1e-9, 200, Exec::serial);
    const auto b = vpc_round(s, 2, 1e-9, 200, Exec::parallel);
    EXPECT_EQ(a.solution.trace, b.solution.trace);
    for (int l = 0; l < 3; ++l)
        EXPECT_EQ(a.solution.Z[l], b.solution.Z[l]);
}
