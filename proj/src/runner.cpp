#include "dbp/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <omp.h>
#include <yaml-cpp/yaml.h>

#include <json.hpp>

#include "dbp/chanest.hpp"
#include "dbp/dl_precode.hpp"
#include "dbp/fabric.hpp"
#include "dbp/metrics.hpp"
#include "dbp/multicell.hpp"
#include "dbp/serialize.hpp"
#include "dbp/ul_equalize.hpp"

namespace dbp::runner {

namespace fs = std::filesystem;
using fabric::Ledger;
using fabric::MessageClass;

const std::map<std::string, std::vector<std::string>>& algorithms()
{
    static const std::map<std::string, std::vector<std::string>> ids = {
        {"chanest", {"dmmse", "age", "eag"}},
        {"ul-eq", {"lmmse", "bcd", "admm", "svd-agg", "fd", "pd"}},
        {"dl-precode", {"wmmse", "zf", "lcp-wmmse", "lcp-zf"}},
        {"multicell", {"centralized", "vpc", "tin"}},
        {"sweep", {"centralized-ce", "centralized-eq", "lcmue"}},
    };
    return ids;
}

namespace {

std::string where(const std::string& origin, const YAML::Node& n, const std::string& field)
{
    const auto m = n.Mark();
    std::string s = origin;
    if (m.line >= 0)
        s += ":" + std::to_string(m.line + 1);
    return s + ": field '" + field + "'";
}

template <typename T>
T get(const std::string& origin, const YAML::Node& n, const std::string& field)
{
    try {
        return n.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(where(origin, n, field) + ": wrong type");
    }
}

void check_keys(const std::string& origin, const YAML::Node& map, const std::set<std::string>& allowed,
                const std::string& section)
{
    if (!map.IsMap())
        throw ConfigError(where(origin, map, section) + ": expected a mapping");
    for (const auto& kv : map) {
        const auto key = kv.first.as<std::string>();
        if (!allowed.count(key))
            throw ConfigError(where(origin, kv.first, section.empty() ? key : section + "." + key) +
                              ": unknown field");
    }
}

const std::set<std::string> kSystemKeys = {"M", "C", "m_sizes", "L", "K", "n_sc", "n_sym",
                                           "noise_var", "snr_db", "p_max"};
const std::set<std::string> kParamKeys = {"eta", "sparsity", "delay_span", "profile", "topology",
                                          "r", "rho", "n_probe", "n_pilot", "n_taps", "n_blocks",
                                          "design_every", "tol", "max_iter", "n_rx", "streams",
                                          "cross_gain", "n_rounds"};
const std::set<std::string> kSweepable = {"M", "C", "L", "K", "n_sc", "n_sym", "noise_var", "snr_db",
                                          "p_max", "eta", "sparsity", "delay_span", "r", "rho",
                                          "n_probe", "n_pilot", "n_taps", "n_rx", "streams",
                                          "cross_gain", "n_rounds", "n_blocks"};

int as_count(double v, const std::string& name)
{
    const double r = std::round(v);
    if (std::abs(v - r) > 1e-9)
        throw ConfigError("sweep value " + io::fmt(v) + " for '" + name + "' must be an integer");
    return static_cast<int>(r);
}

void set_value(ExperimentSpec& s, const std::string& name, double v)
{
    auto& c = s.cfg;
    auto& p = s.params;
    if (name == "M") c.M = as_count(v, name);
    else if (name == "C") c.C = as_count(v, name);
    else if (name == "L") c.L = as_count(v, name);
    else if (name == "K") c.K = as_count(v, name);
    else if (name == "n_sc") c.n_sc = as_count(v, name);
    else if (name == "n_sym") c.n_sym = as_count(v, name);
    else if (name == "noise_var") c.noise_var = v;
    else if (name == "snr_db") c.noise_var = std::pow(10.0, -v / 10.0);
    else if (name == "p_max") c.p_max = v;
    else if (name == "eta") p.eta = v;
    else if (name == "sparsity") p.sparsity = v;
    else if (name == "delay_span") p.delay_span = v;
    else if (name == "r") p.r = {as_count(v, name)};
    else if (name == "rho") p.rho = v;
    else if (name == "n_probe") p.n_probe = as_count(v, name);
    else if (name == "n_pilot") p.n_pilot = as_count(v, name);
    else if (name == "n_taps") p.n_taps = as_count(v, name);
    else if (name == "n_rx") p.n_rx = as_count(v, name);
    else if (name == "streams") p.streams = as_count(v, name);
    else if (name == "cross_gain") p.cross_gain = v;
    else if (name == "n_rounds") p.n_rounds = as_count(v, name);
    else if (name == "n_blocks") p.n_blocks = as_count(v, name);
    else throw ConfigError("parameter '" + name + "' cannot be swept");
}

void resplit(ExperimentSpec& s)
{
    if (!s.explicit_split && s.cfg.C >= 1 && s.cfg.M >= s.cfg.C) {
        const auto split = model::SystemConfig::with_equal_split(s.cfg.M, s.cfg.C);
        s.cfg.m_sizes = split.m_sizes;
    }
}

} // namespace

ExperimentSpec parse_spec(const std::string& text, const std::string& origin)
{
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(origin + ":" + std::to_string(e.mark.line + 1) + ": parse error: " + e.msg);
    }
    if (!root.IsMap())
        throw ConfigError(origin + ": top level must be a mapping");
    check_keys(origin, root,
               {"schema_version", "name", "experiment", "algorithm", "system", "params", "sweep",
                "trials", "seed"},
               "");

    ExperimentSpec s;
    if (root["schema_version"]) {
        s.schema_version = get<int>(origin, root["schema_version"], "schema_version");
        if (s.schema_version != 1)
            throw ConfigError(where(origin, root["schema_version"], "schema_version") +
                              ": unsupported version " + std::to_string(s.schema_version));
    }
    if (root["name"])
        s.name = get<std::string>(origin, root["name"], "name");
    if (root["experiment"])
        s.experiment = get<std::string>(origin, root["experiment"], "experiment");
    if (!root["algorithm"])
        throw ConfigError(origin + ": field 'algorithm' is required");
    s.algorithm = get<std::string>(origin, root["algorithm"], "algorithm");
    if (root["trials"])
        s.trials = get<int>(origin, root["trials"], "trials");
    if (root["seed"])
        s.cfg.seed = get<std::uint64_t>(origin, root["seed"], "seed");

    bool have_m = false;
    if (const auto sys = root["system"]) {
        check_keys(origin, sys, kSystemKeys, "system");
        auto& c = s.cfg;
        const auto num = [&](const char* k, auto& dst) {
            if (sys[k]) {
                dst = get<std::decay_t<decltype(dst)>>(origin, sys[k], std::string("system.") + k);
                return true;
            }
            return false;
        };
        have_m = num("M", c.M);
        num("C", c.C);
        num("L", c.L);
        num("K", c.K);
        num("n_sc", c.n_sc);
        num("n_sym", c.n_sym);
        num("p_max", c.p_max);
        const bool nv = num("noise_var", c.noise_var);
        if (sys["snr_db"]) {
            if (nv)
                throw ConfigError(where(origin, sys["snr_db"], "system.snr_db") +
                                  ": give either noise_var or snr_db, not both");
            c.noise_var = std::pow(10.0, -get<double>(origin, sys["snr_db"], "system.snr_db") / 10.0);
        }
        if (sys["m_sizes"]) {
            c.m_sizes = get<std::vector<int>>(origin, sys["m_sizes"], "system.m_sizes");
            s.explicit_split = true;
        }
    }
    if (!have_m)
        throw ConfigError(origin + ": field 'system.M' is required");

    if (const auto par = root["params"]) {
        check_keys(origin, par, kParamKeys, "params");
        auto& p = s.params;
        const auto num = [&](const char* k, auto& dst) {
            if (par[k])
                dst = get<std::decay_t<decltype(dst)>>(origin, par[k], std::string("params.") + k);
        };
        num("eta", p.eta);
        num("sparsity", p.sparsity);
        num("delay_span", p.delay_span);
        num("profile", p.profile);
        num("topology", p.topology);
        num("rho", p.rho);
        num("n_probe", p.n_probe);
        num("n_pilot", p.n_pilot);
        num("n_taps", p.n_taps);
        num("n_blocks", p.n_blocks);
        num("design_every", p.design_every);
        num("tol", p.tol);
        num("max_iter", p.max_iter);
        num("n_rx", p.n_rx);
        num("streams", p.streams);
        num("cross_gain", p.cross_gain);
        num("n_rounds", p.n_rounds);
        if (par["r"])
            p.r = par["r"].IsSequence() ? get<std::vector<int>>(origin, par["r"], "params.r")
                                        : std::vector<int>{get<int>(origin, par["r"], "params.r")};
    }

    if (const auto sw = root["sweep"]) {
        check_keys(origin, sw, {"parameter", "values"}, "sweep");
        if (!sw["parameter"] || !sw["values"])
            throw ConfigError(where(origin, sw, "sweep") + ": needs 'parameter' and 'values'");
        s.sweep_parameter = get<std::string>(origin, sw["parameter"], "sweep.parameter");
        s.sweep_values = get<std::vector<double>>(origin, sw["values"], "sweep.values");
        if (!kSweepable.count(s.sweep_parameter))
            throw ConfigError(where(origin, sw["parameter"], "sweep.parameter") + ": '" +
                              s.sweep_parameter + "' cannot be swept");
        if (s.sweep_values.empty())
            throw ConfigError(where(origin, sw["values"], "sweep.values") + ": must be nonempty");
    }
    resplit(s);
    return s;
}

ExperimentSpec load_spec(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_spec(ss.str(), path.string());
}

ExperimentSpec at_sweep_point(const ExperimentSpec& spec, double value)
{
    ExperimentSpec s = spec;
    if (spec.sweep_parameter.empty())
        return s;
    set_value(s, spec.sweep_parameter, value);
    if (spec.sweep_parameter == "M" || spec.sweep_parameter == "C")
        resplit(s);
    return s;
}

void validate(const ExperimentSpec& spec)
{
    const auto& ids = algorithms();
    const auto it = ids.find(spec.experiment);
    if (it == ids.end()) {
        std::string all;
        for (const auto& [k, v] : ids)
            all += (all.empty() ? "" : ", ") + k;
        throw ConfigError("unknown experiment '" + spec.experiment + "' (valid: " + all + ")");
    }
    bool known = false;
    std::string valid;
    for (const auto& a : it->second) {
        known = known || a == spec.algorithm;
        valid += (valid.empty() ? "" : ", ") + a;
    }
    if (!known)
        throw ConfigError("unknown algorithm id '" + spec.algorithm + "' for " + spec.experiment +
                          " (valid: " + valid + ")");
    require(spec.trials >= 1, "trials must be >= 1");
    const auto& p = spec.params;
    require(p.profile == "uniform" || p.profile == "exp-decay", "params.profile must be uniform or exp-decay");
    require(p.topology == "star" || p.topology == "daisy-chain", "params.topology must be star or daisy-chain");
    std::vector<double> points = spec.sweep_values;
    if (points.empty())
        points.push_back(0.0);
    for (double v : points) {
        const auto s = at_sweep_point(spec, v);
        s.cfg.validate();
        if (!s.params.r.empty())
            require(s.params.r.size() == 1 || static_cast<int>(s.params.r.size()) == s.cfg.C,
                    "params.r needs one entry or one per DN");
    }
}

namespace {

struct TrialOutput
{
    Row row;
    std::optional<Ledger> ledger;
    std::string trace_csv;
    std::string design_txt;
};

std::vector<int> r_list(const ExperimentSpec& s)
{
    const auto& c = s.cfg;
    std::vector<int> r(c.C);
    for (int i = 0; i < c.C; ++i) {
        if (s.params.r.empty())
            r[i] = std::min(c.L, c.m_sizes[i]);
        else
            r[i] = s.params.r.size() == 1 ? s.params.r[0] : s.params.r[i];
        if (r[i] > c.m_sizes[i])
            throw ConfigError("compressed dimension r_i exceeds M_i");
    }
    return r;
}

fabric::TopologyKind topology(const ExperimentSpec& s)
{
    return s.params.topology == "daisy-chain" ? fabric::TopologyKind::daisy_chain
                                              : fabric::TopologyKind::star;
}

int count_increases(const std::vector<double>& v, bool ascending)
{
    int bad = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        const double slack = 1e-10 * std::max(1.0, std::abs(v[i - 1]));
        if (ascending ? v[i] < v[i - 1] - slack : v[i] > v[i - 1] + slack)
            ++bad;
    }
    return bad;
}

TrialOutput chanest_trial(const ExperimentSpec& s, int trial)
{
    const auto& cfg = s.cfg;
    model::SynthesisOptions so;
    so.sparsity = s.params.sparsity;
    so.delay_span = s.params.delay_span;
    so.shape = s.params.profile == "exp-decay" ? model::ProfileShape::exp_decay : model::ProfileShape::uniform;
    const auto [ch, prof] = model::synthesize_channel(cfg, so, trial);
    const auto Y = model::observe_pilot(cfg, ch, cfg.noise_var, trial);
    const auto w = chanest::dmmse_weights(prof, cfg.noise_var);

    const auto central = chanest::centralized_dmmse(cfg, Y, w);
    chanest::Estimate est = central;
    if (s.algorithm == "age")
        est = chanest::age_estimate(cfg, Y, w, prof, s.params.eta, topology(s));
    else if (s.algorithm == "eag")
        est = chanest::eag_estimate(cfg, Y, w, prof, s.params.eta, topology(s));

    double power = 0.0;
    for (const auto& b : ch.blocks)
        power += b.squaredNorm();
    const double mse = chanest::squared_error(est.per_dn, ch.blocks) / power;
    const double mse_c = chanest::squared_error(central.per_dn, ch.blocks) / power;
    const double raw = static_cast<double>(fabric::centralized_ce_cost(cfg));
    const auto rep = metrics::report({est.ledger, est.dn_cmacs, est.cn_cmacs, 0.0});
    std::int64_t dn_max = 0;
    for (auto f : est.dn_cmacs)
        dn_max = std::max(dn_max, f);

    TrialOutput out;
    out.row.metrics = {
        {"mse", mse},
        {"mse_centralized", mse_c},
        {"upload", est.ledger.total(MessageClass::pilot_signal)},
        {"download", est.ledger.total(MessageClass::csi)},
        {"fronthaul", est.ledger.total()},
        {"raw_volume", raw},
        {"upload_fraction", est.ledger.total(MessageClass::pilot_signal) / raw},
        {"dn_cmacs_max", static_cast<double>(dn_max)},
        {"cn_cmacs", static_cast<double>(est.cn_cmacs)},
        {"balance", rep.balance},
    };
    out.ledger = est.ledger;
    return out;
}

TrialOutput ul_trial(const ExperimentSpec& s, int trial)
{
    const auto scene = ul::random_scene(s.cfg, s.params.n_taps, trial);
    const auto r = r_list(s);
    ul::SolverOptions so;
    so.tol = s.params.tol;
    so.max_iter = s.params.max_iter;
    const double ref = ul::lmmse_objective(scene);

    TrialOutput out;
    double objective = ref;
    ul::CompressionDesign d;
    ul::Scheme scheme = ul::Scheme::cn_designed;
    if (s.algorithm == "lmmse") {
        scheme = ul::Scheme::centralized;
    } else {
        if (s.algorithm == "bcd")
            d = ul::jcde_bcd(scene, r, so);
        else if (s.algorithm == "admm")
            d = ul::jcde_bcd_admm(scene, r, so, {s.params.rho, 1e-10, 20000});
        else if (s.algorithm == "svd-agg")
            d = ul::svd_agg(scene, r, s.params.n_probe, so);
        else if (s.algorithm == "fd") {
            d = ul::fd_scheme(scene, r, so);
            scheme = ul::Scheme::fd;
        } else {
            d = ul::pd_scheme(scene, r, {s.params.n_pilot, static_cast<std::uint64_t>(trial), 1e-9}, so);
            scheme = ul::Scheme::pd;
        }
        objective = ul::jcde_objective(scene, d);
    }
    const auto ledger = ul::uplink_ledger(s.cfg, scheme, r, s.params.n_pilot, topology(s));
    const double pilots = ledger.total(MessageClass::pilot_signal);

    std::vector<double> objs;
    for (const auto& t : d.trace)
        objs.push_back(t.objective);
    double sinr = 0.0;
    int n_sinr = 0;
    for (int j = 0; j < scene.n_sc(); ++j) {
        const cmat G = s.algorithm == "lmmse" ? ul::lmmse_equalizer(scene, j) : ul::effective_filter(d, j);
        const rvec v = ul::filter_sinr(scene, j, G);
        for (Eigen::Index l = 0; l < v.size(); ++l, ++n_sinr)
            sinr += 10.0 * std::log10(v(l));
    }
    out.row.metrics = {
        {"objective", objective},
        {"lmmse_objective", ref},
        {"gap_rel", objective / ref - 1.0},
        {"fronthaul", ledger.total() - pilots},
        {"pilot_upload", pilots},
        {"fronthaul_analytic", s.algorithm == "lmmse" ? static_cast<double>(fabric::centralized_eq_cost(s.cfg))
                                                      : static_cast<double>(fabric::lcmue_cost(s.cfg, r))},
        {"iterations", static_cast<double>(d.iterations)},
        {"converged", d.converged ? 1.0 : 0.0},
        {"monotone_violations", static_cast<double>(count_increases(objs, false))},
        {"mean_sinr_db", n_sinr ? sinr / n_sinr : 0.0},
    };
    out.ledger = ledger;
    if (!d.trace.empty()) {
        std::ostringstream os;
        io::write_trace_csv(os, d.trace);
        out.trace_csv = os.str();
        std::ostringstream ds;
        io::write_compression_design(ds, d);
        out.design_txt = ds.str();
    }
    return out;
}

TrialOutput dl_trial(const ExperimentSpec& s, int trial)
{
    const auto scene = dl::random_scene(s.cfg, s.params.n_rx, s.params.streams, s.params.n_taps, trial);
    const bool lcp = s.algorithm.rfind("lcp-", 0) == 0;
    const bool use_zf = s.algorithm == "zf" || s.algorithm == "lcp-zf";

    TrialOutput out;
    dl::PrecoderSet base;
    std::vector<double> trace;
    int iterations = 0;
    if (use_zf) {
        base = dl::zf_precode(scene);
    } else {
        auto w = dl::wmmse_precode(scene, s.params.tol, s.params.max_iter);
        base = std::move(w.precoders);
        trace = std::move(w.trace);
        iterations = w.iterations;
    }
    const double base_rate = dl::rate_eval(scene, base).sum_rate;
    dl::PrecoderSet final_p = base;
    double residual = 0.0;
    std::optional<Ledger> ledger;
    if (lcp) {
        const auto r = r_list(s);
        const auto design = dl::lcp_mf(scene, base, r);
        for (double x : design.residual)
            residual += x;
        final_p = design.precoders(s.cfg.p_max);
        ledger = dl::lcp_ledger(s.cfg, r, topology(s));
        std::ostringstream ds;
        io::write_lcp_design(ds, design);
        out.design_txt = ds.str();
    } else {
        Ledger l{fabric::Topology(topology(s), s.cfg.C)};
        for (int i = 0; i < s.cfg.C; ++i)
            l.record({s.cfg.C, i}, MessageClass::compressed_signal,
                     static_cast<std::int64_t>(s.cfg.m_sizes[i]) * s.cfg.n_sc * s.cfg.n_sym);
        ledger = l;
        std::ostringstream ps;
        io::write_precoders(ps, s.cfg, final_p);
        out.design_txt = ps.str();
    }
    out.row.metrics = {
        {"sum_rate", dl::rate_eval(scene, final_p).sum_rate},
        {"base_sum_rate", base_rate},
        {"power", final_p.power()},
        {"residual", residual},
        {"fronthaul", ledger->total()},
        {"iterations", static_cast<double>(iterations)},
        {"monotone_violations", static_cast<double>(count_increases(trace, true))},
    };
    out.ledger = ledger;
    return out;
}

TrialOutput mc_trial(const ExperimentSpec& s, int trial)
{
    const auto& c = s.cfg;
    const auto scene = mc::random_scene(c.K, c.M, s.params.n_rx, s.params.streams, c.noise_var, c.p_max,
                                        s.params.cross_gain, c.seed, trial);
    TrialOutput out;
    mc::Solution sol;
    Ledger ledger{fabric::Topology(fabric::TopologyKind::mesh, c.K)};
    if (s.algorithm == "centralized") {
        sol = mc::mcp_centralized(scene, s.params.tol, s.params.max_iter);
        // BS 0 hosts the joint solve: CSI in, precoders out
        std::int64_t csi = 0;
        for (int n : scene.n_rx)
            csi += static_cast<std::int64_t>(n) * scene.M;
        for (int l = 1; l < c.K; ++l) {
            ledger.record({l, 0}, MessageClass::csi, csi);
            ledger.record({0, l}, MessageClass::design_matrix, static_cast<std::int64_t>(scene.M) * scene.d);
        }
    } else if (s.algorithm == "tin") {
        sol = mc::tin_baseline(scene, s.params.n_rounds, s.params.tol, s.params.max_iter);
    } else {
        auto res = mc::vpc_round(scene, s.params.n_rounds, s.params.tol, s.params.max_iter);
        sol = std::move(res.solution);
        ledger = std::move(res.ledger);
    }
    out.row.metrics = {
        {"sum_rate", sol.sum_rate},
        {"backhaul", ledger.total()},
        {"iterations", static_cast<double>(sol.iterations)},
    };
    out.ledger = ledger;
    return out;
}

TrialOutput sweep_trial(const ExperimentSpec& s, int)
{
    const auto& c = s.cfg;
    Ledger ledger{fabric::Topology(topology(s), c.C)};
    const int cn = c.C;
    double analytic = 0.0;
    if (s.algorithm == "centralized-ce") {
        for (int u = 0; u < c.L; ++u)
            for (int i = 0; i < c.C; ++i)
                ledger.record({i, cn}, MessageClass::pilot_signal, static_cast<std::int64_t>(c.m_sizes[i]) * c.n_sc);
        analytic = static_cast<double>(fabric::centralized_ce_cost(c)) * c.L;
    } else if (s.algorithm == "centralized-eq") {
        for (int b = 0; b < s.params.n_blocks; ++b)
            for (int i = 0; i < c.C; ++i)
                ledger.record({i, cn}, MessageClass::compressed_signal,
                              static_cast<std::int64_t>(c.m_sizes[i]) * c.n_sc * c.n_sym);
        analytic = static_cast<double>(fabric::centralized_eq_cost(c)) * s.params.n_blocks;
    } else {
        const auto r = r_list(s);
        for (int b = 0; b < s.params.n_blocks; ++b)
            for (int i = 0; i < c.C; ++i) {
                if (b % s.params.design_every == 0)
                    ledger.record({cn, i}, MessageClass::design_matrix, static_cast<std::int64_t>(c.m_sizes[i]) * r[i]);
                ledger.record({i, cn}, MessageClass::compressed_signal,
                              static_cast<std::int64_t>(c.n_sc) * c.n_sym * r[i]);
            }
        analytic = static_cast<double>(fabric::lcmue_cost(c, r, s.params.n_blocks, s.params.design_every));
    }
    TrialOutput out;
    out.row.metrics = {
        {"fronthaul", ledger.total()},
        {"fronthaul_analytic", analytic},
        {"ratio_to_centralized_eq", analytic / (static_cast<double>(fabric::centralized_eq_cost(c)) * s.params.n_blocks)},
        {"flops_lmmse_ce", static_cast<double>(metrics::flops_lmmse_ce(c))},
        {"flops_lmmse_eq", static_cast<double>(metrics::flops_lmmse_eq(c))},
    };
    out.ledger = ledger;
    return out;
}

TrialOutput dispatch(const ExperimentSpec& s, int trial)
{
    if (s.experiment == "chanest")
        return chanest_trial(s, trial);
    if (s.experiment == "ul-eq")
        return ul_trial(s, trial);
    if (s.experiment == "dl-precode")
        return dl_trial(s, trial);
    if (s.experiment == "multicell")
        return mc_trial(s, trial);
    return sweep_trial(s, trial);
}

void write_text(const fs::path& p, const std::string& body, std::vector<fs::path>& files)
{
    std::ofstream out(p, std::ios::binary);
    if (!out)
        throw ConfigError("cannot write " + p.string());
    out << body;
    files.push_back(p);
}

} // namespace

Row run_trial(const ExperimentSpec& point, int trial)
{
    auto out = dispatch(point, trial);
    out.row.trial = trial;
    return out.row;
}

void apply_thread_env()
{
    if (const char* env = std::getenv("DBP_THREADS")) {
        char* end = nullptr;
        const long n = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || n < 1)
            throw ConfigError("DBP_THREADS must be a positive integer");
        omp_set_num_threads(static_cast<int>(n));
    }
}

RunResult run(const ExperimentSpec& spec, const fs::path& out_dir, const RunOptions& opt)
{
    validate(spec);
    std::vector<double> values = spec.sweep_values;
    const bool swept = !values.empty();
    if (!swept)
        values.push_back(0.0);
    const int n_points = static_cast<int>(values.size());
    const int n_jobs = n_points * spec.trials;

    std::vector<ExperimentSpec> points;
    for (double v : values)
        points.push_back(at_sweep_point(spec, v));

    std::vector<TrialOutput> outs(n_jobs);
    std::vector<std::exception_ptr> errors(n_jobs);
    const auto t0 = std::chrono::steady_clock::now();
#pragma omp parallel for schedule(dynamic)
    for (int job = 0; job < n_jobs; ++job) {
        const int p = job / spec.trials, t = job % spec.trials;
        try {
            outs[job] = dispatch(points[p], t);
            outs[job].row.sweep_value = values[p];
            outs[job].row.trial = t;
        } catch (...) {
            errors[job] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    const double wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    RunResult res;
    fs::create_directories(out_dir);

    std::ostringstream csv;
    csv << "schema_version,name,experiment,algorithm,sweep_parameter,sweep_value,trial,seed";
    for (const auto& [k, v] : outs.front().row.metrics)
        csv << ',' << k;
    csv << '\n';
    for (const auto& o : outs) {
        csv << io::kSchemaVersion << ',' << spec.name << ',' << spec.experiment << ',' << spec.algorithm << ','
            << (swept ? spec.sweep_parameter : "") << ',' << (swept ? io::fmt(o.row.sweep_value) : "") << ','
            << o.row.trial << ',' << spec.cfg.seed;
        for (const auto& [k, v] : o.row.metrics)
            csv << ',' << io::fmt(v);
        csv << '\n';
        res.rows.push_back(o.row);
    }
    write_text(out_dir / "results.csv", csv.str(), res.files);

    nlohmann::ordered_json agg;
    agg["schema_version"] = io::kSchemaVersion;
    agg["name"] = spec.name;
    agg["experiment"] = spec.experiment;
    agg["algorithm"] = spec.algorithm;
    agg["sweep_parameter"] = swept ? spec.sweep_parameter : "";
    agg["trials"] = spec.trials;
    agg["seed"] = spec.cfg.seed;
    agg["rows"] = nlohmann::ordered_json::array();
    for (int p = 0; p < n_points; ++p) {
        nlohmann::ordered_json row;
        if (swept)
            row["sweep_value"] = values[p];
        row["n"] = spec.trials;
        nlohmann::ordered_json m;
        const auto& names = outs[static_cast<std::size_t>(p) * spec.trials].row.metrics;
        for (std::size_t k = 0; k < names.size(); ++k) {
            double sum = 0.0;
            for (int t = 0; t < spec.trials; ++t)
                sum += outs[static_cast<std::size_t>(p) * spec.trials + t].row.metrics[k].second;
            const double mean = sum / spec.trials;
            double ss = 0.0;
            for (int t = 0; t < spec.trials; ++t) {
                const double dv = outs[static_cast<std::size_t>(p) * spec.trials + t].row.metrics[k].second - mean;
                ss += dv * dv;
            }
            const double sd = spec.trials > 1 ? std::sqrt(ss / (spec.trials - 1)) : 0.0;
            m[names[k].first] = {{"mean", mean}, {"std", sd}};
        }
        row["metrics"] = m;
        agg["rows"].push_back(row);
    }
    write_text(out_dir / "aggregate.json", agg.dump(2) + "\n", res.files);

    if (opt.write_artifacts) {
        for (int p = 0; p < n_points; ++p) {
            const auto& o = outs[static_cast<std::size_t>(p) * spec.trials];
            const std::string tag = "_s" + std::to_string(p);
            if (o.ledger) {
                std::ostringstream ls;
                ls << "# schema_version=" << io::kSchemaVersion << '\n';
                o.ledger->write_csv(ls);
                write_text(out_dir / ("ledger" + tag + ".csv"), ls.str(), res.files);
            }
            if (!o.trace_csv.empty())
                write_text(out_dir / ("trace" + tag + ".csv"), o.trace_csv, res.files);
            if (!o.design_txt.empty())
                write_text(out_dir / ("design" + tag + ".txt"), o.design_txt, res.files);
        }
    }

    if (!opt.quiet) {
        std::cerr << spec.experiment << '/' << spec.algorithm << ": " << n_points << " point(s) x "
                  << spec.trials << " trial(s) in " << static_cast<long long>(wall_ms) << " ms -> "
                  << out_dir.string() << '\n';
    }
    return res;
}

} // namespace dbp::runner
