#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dbp/fabric.hpp"
#include "dbp/model.hpp"

namespace dbp::ul {

/// Multi-user uplink over n_sc subcarriers. Symbols are unit power and
/// i.i.d.; noise is zero-mean with per-(subcarrier, DN) covariance.
struct UplinkScene
{
    model::SystemConfig cfg;
    std::vector<cmat> H;                       // per subcarrier, stacked M x L
    std::vector<std::vector<cmat>> noise_cov;  // [j][i], M_i x M_i

    int n_sc() const { return static_cast<int>(H.size()); }
    cmat block(int j, int dn) const;  // H_{i,j}, M_i x L
    cmat noise(int j) const;          // blkdiag of the per-DN covariances, M x M
    cmat ry(int j) const;             // H_j H_j^H + noise(j)
    void validate() const;
};

/// i.i.d. CN(0,1) multipath taps, white noise cfg.noise_var. n_taps = 1 gives a
/// frequency-flat channel.
UplinkScene random_scene(const model::SystemConfig& cfg, int n_taps = 1, std::uint64_t trial = 0);

/// Restriction of a scene to DN i as a one-DN system.
UplinkScene local_scene(const UplinkScene& scene, int dn);

struct TraceRow
{
    int iteration;
    std::string step;  // "U" or "V"
    double objective;
    double primal = 0.0;  // ADMM only: last inner ||V_a - V_b||_F
    int inner = 0;        // ADMM only: inner iterations used
};

struct CompressionDesign
{
    std::vector<cmat> V;  // per DN, r_i x M_i
    std::vector<cmat> U;  // per subcarrier, L x r
    std::vector<TraceRow> trace;
    int iterations = 0;
    bool converged = true;
    std::vector<std::string> warnings;

    cmat compressor() const;  // blkdiag(V_1..V_C), r x M
    std::vector<int> ranks() const;
    int ranks_total() const;
};

struct SolverOptions
{
    double tol = 1e-10;
    int max_iter = 200;
    Exec exec = Exec::serial;
    /// Warm start for V; otherwise the dominant local channel directions.
    std::optional<std::vector<cmat>> initial;
};

struct AdmmOptions
{
    double rho = 1.0;
    double inner_tol = 1e-10;
    int max_inner = 20000;
};

/// W_j = H_j^H (H_j H_j^H + R_u)^{-1}, L x M.
cmat lmmse_equalizer(const UplinkScene& scene, int j);

/// Closed-form MSE of the centralized LMMSE equalizer summed over subcarriers.
double lmmse_objective(const UplinkScene& scene, Exec exec = Exec::serial);

/// E||s_j - G_j y_j||^2 on subcarrier j for a full L x M filter G_j.
double filter_mse(const UplinkScene& scene, int j, const cmat& G);

/// Sum_j E||s_j - U_j V y_j||^2 in closed form.
double jcde_objective(const UplinkScene& scene, const CompressionDesign& d,
                      Exec exec = Exec::serial);

/// U_j = H_j^H V^H (V R_y V^H)^{-1} for every subcarrier.
std::vector<cmat> optimal_equalizers(const UplinkScene& scene, const std::vector<cmat>& V,
                                     Exec exec = Exec::serial);

/// Top-r_i left singular directions of [H_{i,1} ... H_{i,N}].
std::vector<cmat> initial_compressors(const UplinkScene& scene, const std::vector<int>& r_list);

/// Block coordinate descent: U-step, then a Gauss-Seidel sweep of exact
/// V_i block minimizations.
CompressionDesign jcde_bcd(const UplinkScene& scene, const std::vector<int>& r_list,
                           const SolverOptions& opt = {});

/// Same outer loop as jcde_bcd; each V_i block update is solved by a
/// consensus ADMM on the split V_i = V_{i,a} = V_{i,b}.
CompressionDesign jcde_bcd_admm(const UplinkScene& scene, const std::vector<int>& r_list,
                                const SolverOptions& opt = {}, const AdmmOptions& admm = {});

/// Single-carrier designs on n_probe evenly spaced subcarriers, merged per DN
/// by a truncated SVD of the stacked row spaces.
CompressionDesign svd_agg(const UplinkScene& scene, const std::vector<int>& r_list, int n_probe,
                          const SolverOptions& opt = {});

/// Local compressors from each DN's own channel; the CN equalizes assuming
/// a block-diagonal received covariance.
CompressionDesign fd_scheme(const UplinkScene& scene, const std::vector<int>& r_list,
                            const SolverOptions& opt = {});

struct PdOptions
{
    int n_pilot = 64;  // 0: exact compressed covariance
    std::uint64_t trial = 0;
    double loading = 1e-9;  // relative diagonal loading when n_pilot < r
};

/// FD compressors; the CN estimates the compressed-domain covariance from
/// compressed pilots and forms LMMSE equalizers from the estimate.
CompressionDesign pd_scheme(const UplinkScene& scene, const std::vector<int>& r_list,
                            const PdOptions& pd = {}, const SolverOptions& opt = {});

enum class Scheme
{
    centralized,  // raw samples to the CN
    cn_designed,  // BCD, ADMM, SVD-AGG: compressors delivered CN -> DN
    fd,           // compressors uploaded DN -> CN
    pd            // as fd, plus compressed pilots (pilot_signal class)
};

/// Fronthaul for one coherence block of an uplink run.
fabric::Ledger uplink_ledger(const model::SystemConfig& cfg, Scheme scheme,
                             const std::vector<int>& r_list, int n_pilot = 0,
                             fabric::TopologyKind topology = fabric::TopologyKind::star);

struct Equalized
{
    cvec s_hat;
    rvec sinr;  // per user, from second moments
};

/// s_hat = U_j V y_j plus per-user post-equalization SINR.
Equalized equalize_apply(const UplinkScene& scene, const CompressionDesign& d, int j,
                         const cvec& y);

/// Per-user SINR of an arbitrary L x M filter on subcarrier j.
rvec filter_sinr(const UplinkScene& scene, int j, const cmat& G);

/// Effective filter U_j V on subcarrier j.
cmat effective_filter(const CompressionDesign& d, int j);

} // namespace dbp::ul
