#include <gtest/gtest.h>

#include <sstream>

#include "dbp/fabric.hpp"

using namespace dbp;
using namespace dbp::fabric;

TEST(Topology, StarRoutesThroughOneHop)
{
    Topology t(TopologyKind::star, 3);
    EXPECT_EQ(t.cn(), 3);
    EXPECT_TRUE(t.has_link({0, 3}));
    EXPECT_FALSE(t.has_link({0, 1}));
    EXPECT_EQ(t.route({2, 3}).size(), 1u);
}

TEST(Topology, DaisyChainRoutesAlongTheChain)
{
    Topology t(TopologyKind::daisy_chain, 3);
    const auto r = t.route({2, 3});
    ASSERT_EQ(r.size(), 3u);
    EXPECT_EQ(r.front(), (Link{2, 1}));
    EXPECT_EQ(r.back(), (Link{0, 3}));
}

TEST(Topology, MeshHasNoCentralNode)
{
    Topology t(TopologyKind::mesh, 3);
    EXPECT_EQ(t.cn(), -1);
    EXPECT_TRUE(t.has_link({2, 0}));
    EXPECT_FALSE(t.routable({1, 1}));
}

TEST(Ledger, RejectsUnroutableFlows)
{
    Ledger l{Topology(TopologyKind::star, 2)};
    EXPECT_THROW(l.record({0, 5}, MessageClass::csi, 1), TopologyError);
    EXPECT_THROW(l.record({0, 2}, MessageClass::csi, -1), Error);
}

TEST(Ledger, TotalsAreTopologyIndependentButHopLoadsAreNot)
{
    Ledger star{Topology(TopologyKind::star, 3)};
    Ledger chain{Topology(TopologyKind::daisy_chain, 3)};
    for (Ledger* l : {&star, &chain})
        for (int i = 0; i < 3; ++i)
            l->record({i, 3}, MessageClass::compressed_signal, 10);
    EXPECT_EQ(star.total(), 30.0);
    EXPECT_EQ(chain.total(), 30.0);
    EXPECT_EQ(star.hop_loads_real().at({0, 3}), 20);
    // the DN next to the CN forwards everything
    EXPECT_EQ(chain.hop_loads_real().at({0, 3}), 60);
}

TEST(Ledger, HalfComplexChargesStayExact)
{
    Ledger l{Topology(TopologyKind::mesh, 2)};
    l.record_real({0, 1}, MessageClass::power_scalars, 3);
    l.record({1, 0}, MessageClass::csi, 2);
    EXPECT_EQ(l.total_real(), 7);
    EXPECT_EQ(l.total(), 3.5);
    EXPECT_EQ(l.total(MessageClass::power_scalars), 1.5);
}

TEST(Ledger, CsvRoundTrip)
{
    Ledger l{Topology(TopologyKind::star, 2)};
    l.record({0, 2}, MessageClass::pilot_signal, 5);
    l.record({2, 1}, MessageClass::design_matrix, 4);
    l.record_real({1, 2}, MessageClass::power_scalars, 1);
    std::stringstream ss;
    ss << "# schema_version=1\n";
    l.write_csv(ss);
    const Ledger back = read_ledger_csv(ss, l.topology());
    EXPECT_EQ(back.total_real(), l.total_real());
    EXPECT_EQ(back.by_class_real(), l.by_class_real());
}

TEST(Ledger, MessageClassNamesRoundTrip)
{
    for (auto c : {MessageClass::pilot_signal, MessageClass::compressed_signal, MessageClass::design_matrix,
                   MessageClass::csi, MessageClass::power_scalars})
        EXPECT_EQ(message_class_from_string(to_string(c)), c);
    EXPECT_THROW(message_class_from_string("bogus"), Error);
}

TEST(Costs, CompressionRatioExample)
{
    auto cfg = model::SystemConfig::with_equal_split(256, 4);
    cfg.L = 32;
    cfg.n_sc = 128;
    cfg.n_sym = 14;
    EXPECT_EQ(lcmue_cost(cfg, {16, 16, 16, 16}), 118784);
    EXPECT_EQ(centralized_eq_cost(cfg), 458752);
    EXPECT_EQ(centralized_ce_cost(cfg), 256 * 128);
}

TEST(Costs, DesignIsRedeliveredOnSchedule)
{
    auto cfg = model::SystemConfig::with_equal_split(8, 2);
    cfg.n_sc = 2;
    cfg.n_sym = 3;
    const std::int64_t design = 4 * 2 * 2;
    const std::int64_t data = 2 * 3 * 4;
    EXPECT_EQ(lcmue_cost(cfg, {2, 2}, 4, 2), 2 * design + 4 * data);
    EXPECT_EQ(lcmue_cost(cfg, {2, 2}, 3, 2), 2 * design + 3 * data);
}
