#pragma once

#include <cstdint>
#include <vector>

#include "dbp/fabric.hpp"
#include "dbp/model.hpp"

namespace dbp::chanest {

/// Per-bin shrinkage R / (R + noise_var) in the angle/delay domain.
struct DmmseWeights
{
    rmat values;  // M x n_sc, entries in [0, 1]
};

/// Bins each DN uploads to the CN.
struct WindowMask
{
    std::vector<Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>> keep;  // per DN, M_i x n_sc

    std::int64_t kept(int dn) const;
    std::int64_t kept_total() const;
};

struct Estimate
{
    cmat angle_delay;           // M x n_sc global angle/delay estimate
    std::vector<cmat> per_dn;   // antenna/frequency estimates, M_i x n_sc
    fabric::Ledger ledger;
    WindowMask window;
    std::vector<std::int64_t> dn_cmacs;  // complex multiply-adds per DN
    std::int64_t cn_cmacs = 0;
};

DmmseWeights dmmse_weights(const model::PowerProfile& profile, double noise_var);

/// Centralized reference: all raw observations at the CN.
Estimate centralized_dmmse(const model::SystemConfig& cfg, const std::vector<cmat>& Y,
                           const DmmseWeights& w);

/// Aggregate-then-estimate: windowed antenna/delay uploads, CN-side DMMSE,
/// windowed download, local shrinkage for the remaining bins.
Estimate age_estimate(const model::SystemConfig& cfg, const std::vector<cmat>& Y,
                      const DmmseWeights& w, const model::PowerProfile& profile, double eta,
                      fabric::TopologyKind topology = fabric::TopologyKind::star);

/// Estimate-then-aggregate: each DN estimates in its local angle/delay
/// domain, uploads the bins it finds significant, the CN refines the
/// aggregate with the same weights.
Estimate eag_estimate(const model::SystemConfig& cfg, const std::vector<cmat>& Y,
                      const DmmseWeights& w, const model::PowerProfile& profile, double eta,
                      fabric::TopologyKind topology = fabric::TopologyKind::star);

/// ||est - truth||_F^2 / ||truth||_F^2.
double mse(const cmat& est, const cmat& truth);

/// Unnormalized ||est - truth||_F^2 summed over DN blocks.
double squared_error(const std::vector<cmat>& est, const std::vector<cmat>& truth);

/// Indices of the top-k entries by magnitude; ties go to the lowest
/// (row, column). `eligible`, when given, restricts the candidates.
Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> top_k_window(
    const cmat& X, std::int64_t k,
    const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>* eligible = nullptr);

/// Number of bins kept for a fraction eta of n bins.
std::int64_t window_size(double eta, std::int64_t n);

} // namespace dbp::chanest
