#include "dbp/fabric.hpp"

#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>

namespace dbp::fabric {

Topology::Topology(TopologyKind kind, int n_dn) : kind_(kind), n_dn_(n_dn)
{
    if (n_dn < 1)
        throw ConfigError("topology needs at least one node");
}

bool Topology::has_link(Link l) const
{
    if (!valid_node(l.src) || !valid_node(l.dst) || l.src == l.dst)
        return false;
    switch (kind_) {
    case TopologyKind::star:
        return l.src == cn() || l.dst == cn();
    case TopologyKind::daisy_chain: {
        const auto chain_pos = [&](int n) { return n == cn() ? -1 : n; };
        return std::abs(chain_pos(l.src) - chain_pos(l.dst)) == 1;
    }
    case TopologyKind::mesh:
        return true;
    }
    return false;
}

bool Topology::routable(Link l) const
{
    return valid_node(l.src) && valid_node(l.dst) && l.src != l.dst;
}

std::vector<Link> Topology::route(Link l) const
{
    if (!routable(l))
        throw TopologyError("no route between nodes " + std::to_string(l.src) + " and " +
                            std::to_string(l.dst));
    if (has_link(l))
        return {l};
    std::vector<Link> hops;
    if (kind_ == TopologyKind::star) {
        hops.push_back({l.src, cn()});
        hops.push_back({cn(), l.dst});
        return hops;
    }
    // daisy chain: the CN sits at position -1, before DN 0
    const auto pos = [&](int n) { return n == cn() ? -1 : n; };
    const auto node = [&](int p) { return p == -1 ? cn() : p; };
    const int step = pos(l.dst) > pos(l.src) ? 1 : -1;
    for (int p = pos(l.src); p != pos(l.dst); p += step)
        hops.push_back({node(p), node(p + step)});
    return hops;
}

std::string to_string(MessageClass c)
{
    switch (c) {
    case MessageClass::pilot_signal:
        return "pilot_signal";
    case MessageClass::compressed_signal:
        return "compressed_signal";
    case MessageClass::design_matrix:
        return "design_matrix";
    case MessageClass::csi:
        return "csi";
    case MessageClass::power_scalars:
        return "power_scalars";
    }
    return "unknown";
}

MessageClass message_class_from_string(const std::string& s)
{
    for (auto c : {MessageClass::pilot_signal, MessageClass::compressed_signal,
                   MessageClass::design_matrix, MessageClass::csi, MessageClass::power_scalars})
        if (to_string(c) == s)
            return c;
    throw ConfigError("unknown message class '" + s + "'");
}

void Ledger::record(Link link, MessageClass cls, std::int64_t n_complex)
{
    record_real(link, cls, 2 * n_complex);
}

void Ledger::record_real(Link link, MessageClass cls, std::int64_t n_real)
{
    if (!topo_.routable(link))
        throw TopologyError("unknown link " + std::to_string(link.src) + "->" +
                            std::to_string(link.dst));
    if (n_real < 0)
        throw DomainError("negative transfer volume");
    entries_.push_back({link, cls, n_real});
}

std::int64_t Ledger::total_real() const
{
    std::int64_t t = 0;
    for (const auto& e : entries_)
        t += e.n_real;
    return t;
}

std::int64_t Ledger::total_real(MessageClass c) const
{
    std::int64_t t = 0;
    for (const auto& e : entries_)
        if (e.cls == c)
            t += e.n_real;
    return t;
}

double Ledger::total(MessageClass c) const
{
    return static_cast<double>(total_real(c)) / 2.0;
}

std::map<MessageClass, std::int64_t> Ledger::by_class_real() const
{
    std::map<MessageClass, std::int64_t> out;
    for (const auto& e : entries_)
        out[e.cls] += e.n_real;
    return out;
}

std::map<Link, std::int64_t> Ledger::hop_loads_real() const
{
    std::map<Link, std::int64_t> out;
    for (const auto& e : entries_)
        for (const auto& hop : topo_.route(e.link))
            out[hop] += e.n_real;
    return out;
}

namespace {

std::string format_complex_count(std::int64_t n_real)
{
    std::string s = std::to_string(n_real / 2);
    if (n_real % 2)
        s += ".5";
    return s;
}

} // namespace

void Ledger::write_csv(std::ostream& os) const
{
    os << "link_src,link_dst,class,n_complex\n";
    for (const auto& e : entries_)
        os << e.link.src << ',' << e.link.dst << ',' << to_string(e.cls) << ','
           << format_complex_count(e.n_real) << '\n';
}

Ledger read_ledger_csv(std::istream& is, const Topology& topo)
{
    Ledger ledger(topo);
    std::string line;
    // leading '#' lines carry file metadata such as the schema version
    while (std::getline(is, line) && !line.empty() && line[0] == '#') {
    }
    if (line != "link_src,link_dst,class,n_complex")
        throw ConfigError("ledger CSV: missing or unexpected header");
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty())
            continue;
        std::stringstream ss(line);
        std::string src, dst, cls, n;
        if (!std::getline(ss, src, ',') || !std::getline(ss, dst, ',') ||
            !std::getline(ss, cls, ',') || !std::getline(ss, n))
            throw ConfigError("ledger CSV line " + std::to_string(lineno) + ": expected 4 fields");
        std::int64_t n_real = 0;
        const auto dot = n.find('.');
        if (dot == std::string::npos) {
            n_real = 2 * std::stoll(n);
        } else {
            if (n.substr(dot) != ".5")
                throw ConfigError("ledger CSV line " + std::to_string(lineno) +
                                  ": counts are whole or half complex scalars");
            n_real = 2 * std::stoll(n.substr(0, dot)) + 1;
        }
        ledger.record_real({std::stoi(src), std::stoi(dst)}, message_class_from_string(cls), n_real);
    }
    return ledger;
}

std::int64_t centralized_ce_cost(const model::SystemConfig& cfg)
{
    return static_cast<std::int64_t>(cfg.M) * cfg.n_sc;
}

std::int64_t centralized_eq_cost(const model::SystemConfig& cfg)
{
    return static_cast<std::int64_t>(cfg.M) * cfg.n_sc * cfg.n_sym;
}

std::int64_t lcmue_cost(const model::SystemConfig& cfg, const std::vector<int>& r_list,
                        int n_blocks, int design_every)
{
    require(static_cast<int>(r_list.size()) == cfg.C, "r_list must have C entries");
    require(n_blocks >= 1 && design_every >= 1, "n_blocks and design_every must be >= 1");
    std::int64_t design = 0, r_sum = 0;
    for (int i = 0; i < cfg.C; ++i) {
        if (r_list[i] < 0)
            throw ConfigError("compressed dimension must be >= 0");
        if (r_list[i] > cfg.m_sizes[i])
            throw ConfigError("compressed dimension r_i exceeds M_i");
        design += static_cast<std::int64_t>(cfg.m_sizes[i]) * r_list[i];
        r_sum += r_list[i];
    }
    const std::int64_t deliveries = (n_blocks + design_every - 1) / design_every;
    return deliveries * design + static_cast<std::int64_t>(n_blocks) * cfg.n_sc * cfg.n_sym * r_sum;
}

} // namespace dbp::fabric
