#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "dbp/model.hpp"

namespace dbp::fabric {

enum class TopologyKind
{
    star,         // DNs 0..C-1, CN = node C, every DN linked to the CN
    daisy_chain,  // CN = node C attached to DN 0, DN i linked to DN i+1
    mesh          // C peer nodes (base stations), every ordered pair linked
};

struct Link
{
    int src;
    int dst;
    friend auto operator<=>(const Link&, const Link&) = default;
};

class Topology
{
public:
    Topology(TopologyKind kind, int n_dn);

    TopologyKind kind() const { return kind_; }
    int n_dn() const { return n_dn_; }
    /// Central node id; -1 for mesh.
    int cn() const { return kind_ == TopologyKind::mesh ? -1 : n_dn_; }
    int n_nodes() const { return kind_ == TopologyKind::mesh ? n_dn_ : n_dn_ + 1; }

    /// Physical one-hop link.
    bool has_link(Link l) const;

    /// End-to-end flows are accepted between any two distinct nodes that
    /// the topology connects.
    bool routable(Link l) const;

    /// Physical hops carrying an end-to-end flow.
    std::vector<Link> route(Link l) const;

private:
    bool valid_node(int n) const { return n >= 0 && n < n_nodes(); }

    TopologyKind kind_;
    int n_dn_;
};

enum class MessageClass
{
    pilot_signal,
    compressed_signal,
    design_matrix,
    csi,
    power_scalars
};

std::string to_string(MessageClass c);
MessageClass message_class_from_string(const std::string& s);

struct LedgerEntry
{
    Link link;
    MessageClass cls;
    std::int64_t n_real;  // real scalars; one complex scalar = 2

    double n_complex() const { return static_cast<double>(n_real) / 2.0; }
};

/// Append-only record of end-to-end transfers for one run. Costs are kept
/// in real-scalar units so half-complex charges stay exact.
class Ledger
{
public:
    explicit Ledger(Topology topo) : topo_(topo) {}

    void record(Link link, MessageClass cls, std::int64_t n_complex);
    void record_real(Link link, MessageClass cls, std::int64_t n_real);

    const Topology& topology() const { return topo_; }
    const std::vector<LedgerEntry>& entries() const { return entries_; }

    double total() const { return static_cast<double>(total_real()) / 2.0; }
    std::int64_t total_real() const;
    double total(MessageClass c) const;
    std::int64_t total_real(MessageClass c) const;
    std::map<MessageClass, std::int64_t> by_class_real() const;

    /// Volume carried by each physical link once flows are routed.
    std::map<Link, std::int64_t> hop_loads_real() const;

    void write_csv(std::ostream& os) const;

private:
    Topology topo_;
    std::vector<LedgerEntry> entries_;
};

/// Re-reads an exported ledger; every row is re-recorded through `record`.
Ledger read_ledger_csv(std::istream& is, const Topology& topo);

/// Raw pilot upload for one user and one pilot occasion: M * n_sc.
std::int64_t centralized_ce_cost(const model::SystemConfig& cfg);

/// Raw uplink data upload for one coherence block: M * n_sc * n_sym.
std::int64_t centralized_eq_cost(const model::SystemConfig& cfg);

/// sum_i M_i r_i (compressor delivery) + n_sc n_sym sum_i r_i (compressed
/// data), for one coherence block. With n_blocks > 1 the compressor is
/// re-delivered once every `design_every` blocks.
std::int64_t lcmue_cost(const model::SystemConfig& cfg, const std::vector<int>& r_list,
                        int n_blocks = 1, int design_every = 1);

} // namespace dbp::fabric
