#pragma once

#include <cstdint>
#include <vector>

#include "dbp/fabric.hpp"
#include "dbp/model.hpp"
#include "dbp/wmmse.hpp"

namespace dbp::dl {

/// Single-BS downlink to cfg.K multi-antenna users over n_sc subcarriers.
struct DownlinkScene
{
    model::SystemConfig cfg;
    std::vector<int> n_rx;                   // N_k
    std::vector<int> streams;                // L_k
    std::vector<std::vector<cmat>> H;        // [j][k], N_k x M (DN blocks are column slices)
    std::vector<std::vector<double>> noise;  // [j][k], sigma^2

    int n_users() const { return static_cast<int>(n_rx.size()); }
    int n_sc() const { return static_cast<int>(H.size()); }
    int total_streams() const;
    void validate() const;
};

DownlinkScene random_scene(const model::SystemConfig& cfg, int n_rx, int streams, int n_taps = 1,
                           std::uint64_t trial = 0);

struct PrecoderSet
{
    std::vector<std::vector<cmat>> Z;  // [j][k], M x L_k
    double p_max = 1.0;

    double power() const;
    cmat block(const model::SystemConfig& cfg, int j, int k, int dn) const;  // M_i x L_k
};

struct RateReport
{
    std::vector<std::vector<double>> rate;  // [j][k]
    double sum_rate = 0.0;
};

RateReport rate_eval(const DownlinkScene& scene, const PrecoderSet& P, Exec exec = Exec::serial);

struct WmmseReport
{
    PrecoderSet precoders;
    std::vector<double> trace;
    int iterations = 0;
    bool converged = false;
};

/// Weighted-MMSE ascent over all subcarriers sharing one power budget.
/// Runs from the equal-power start and from one start per user that gives
/// that user most of the budget, keeping the best; ties go to the earliest.
/// Final precoders are scaled to the full budget.
WmmseReport wmmse_precode(const DownlinkScene& scene, double tol = 1e-9, int max_iter = 500,
                          Exec exec = Exec::serial);

/// Zero-forcing (N_k == L_k) or block diagonalization (N_k > L_k) with equal
/// power per stream.
PrecoderSet zf_precode(const DownlinkScene& scene);

struct LcpDesign
{
    std::vector<cmat> V;                             // per DN, r_i x M_i (applied as V_i^H)
    std::vector<std::vector<std::vector<cmat>>> U;   // [i][j][k], r_i x L_k
    std::vector<rvec> singular_values;               // per DN, full spectrum of the stacked precoder
    std::vector<double> residual;                    // per DN, ||Z_i - V_i^H U_i||_F^2 before scaling
    double scale = 1.0;                              // global power scaling applied to U

    /// Stacked effective precoder sum_i rows V_i^H U_{i,k}^{(j)}, M x L_k.
    cmat effective(int j, int k) const;
    PrecoderSet precoders(double p_max) const;
};

struct LcpOptions
{
    bool per_user_scaling = false;  // restore each user's input power before the global scaling
};

/// Low-rank factorization of each DN's stacked precoder [Z_i^(1) ... Z_i^(N_sc)]
/// by truncated SVD, scaled so the power budget is met with equality.
LcpDesign lcp_mf(const DownlinkScene& scene, const PrecoderSet& P, const std::vector<int>& r_list,
                 const LcpOptions& opt = {});

/// Fronthaul of one coherence block: compressors and compressed symbols, CN -> DN.
fabric::Ledger lcp_ledger(const model::SystemConfig& cfg, const std::vector<int>& r_list,
                          fabric::TopologyKind topology = fabric::TopologyKind::star);

/// One transmitter per subcarrier in a single power pool.
wmmse::Problem as_wmmse_problem(const DownlinkScene& scene);

} // namespace dbp::dl
