#pragma once

#include <cstdint>
#include <vector>

#include "dbp/fabric.hpp"
#include "dbp/wmmse.hpp"

namespace dbp::mc {

/// One scheduled user per cell; BS l has M antennas and budget p_max.
struct MultiCellScene
{
    int M = 1;
    std::vector<int> n_rx;              // N_i
    int d = 1;                          // streams per user
    std::vector<std::vector<cmat>> H;   // [user i][BS l], N_i x M
    std::vector<double> noise;          // sigma_i^2
    double p_max = 1.0;

    int n_cells() const { return static_cast<int>(n_rx.size()); }
    void validate() const;
};

/// i.i.d. CN(0,1) direct channels, CN(0, cross_gain) cross channels. The
/// cross draws of every (user, BS) pair come from their own substream and
/// are scaled versions of the same unit draw for every cross_gain.
MultiCellScene random_scene(int n_cells, int M, int n_rx, int d, double noise_var, double p_max,
                            double cross_gain, std::uint64_t seed, std::uint64_t trial = 0);

struct Solution
{
    std::vector<cmat> Z;  // per cell, M x d
    std::vector<double> rate;
    double sum_rate = 0.0;
    std::vector<double> trace;  // solver sum-rate trace or per-round true sum rate
    int iterations = 0;
    bool converged = false;
};

std::vector<double> cell_rates(const MultiCellScene& scene, const std::vector<cmat>& Z,
                               Exec exec = Exec::serial);

/// Joint WMMSE over all cells with one power pool per BS.
Solution mcp_centralized(const MultiCellScene& scene, double tol = 1e-9, int max_iter = 1000,
                         Exec exec = Exec::serial);

/// Per-cell WMMSE ignoring every other cell.
cmat single_cell_wmmse(const MultiCellScene& scene, int cell, const cmat& interference,
                       double tol = 1e-9, int max_iter = 1000);

/// Each cell treats the interference of the previous round as noise; the
/// first round sees thermal noise only.
Solution tin_baseline(const MultiCellScene& scene, int n_rounds = 5, double tol = 1e-9,
                      int max_iter = 1000, Exec exec = Exec::serial);

struct VpcSplit
{
    cmat G;   // N x d, H z_s / ||z_s||
    rvec p;   // d, column norms
};

/// H Z = G diag(p). A zero column gives p = 0 and direction H e_0.
VpcSplit vpc_split(const cmat& Z, const cmat& H);

struct LocalSolve
{
    cmat Z;                        // M x d
    std::vector<rvec> virtual_p;   // per cell; the own entry is empty
    std::vector<double> trace;
};

/// BS `cell` maximizes the sum rate over its own precoder and the virtual
/// power diagonals of the other BSs. G[k][l] is BS l's split image at user
/// k; Z0 and p0 warm start the solve.
LocalSolve vpc_local_solve(const MultiCellScene& scene, int cell,
                           const std::vector<std::vector<cmat>>& G, const cmat& Z0,
                           const std::vector<rvec>& p0, double tol = 1e-9, int max_iter = 1000);

struct VpcResult
{
    Solution solution;
    fabric::Ledger ledger;
};

/// n_rounds of exchange then simultaneous local solves, starting from
/// single-cell WMMSE precoders.
VpcResult vpc_round(const MultiCellScene& scene, int n_rounds = 5, double tol = 1e-9,
                    int max_iter = 1000, Exec exec = Exec::serial);

/// Backhaul per round and ordered BS pair, in real scalars.
std::int64_t vpc_pair_cost_real(const MultiCellScene& scene);

} // namespace dbp::mc
