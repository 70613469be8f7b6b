#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dbp/fabric.hpp"
#include "dbp/model.hpp"

namespace dbp::metrics {

//
// Complex multiply-add (cmac) counting rules. Only multiplications are
// counted; divisions, square roots and additions are free.
//   matmul (m x n)(n x p)       m n p
//   Cholesky of an n x n HPD    (n^3 - n) / 6
//   triangular solve, n x n     n (n - 1) / 2 per right-hand side
//   SVD of m x n, m >= n        14 m n^2 (reported only, never asserted)
//

/// Per-user, per-subcarrier LMMSE channel estimation with a full M x M
/// covariance: Cholesky of (R + sigma^2 I), forward and back substitution,
/// then the M x M covariance applied to the solved vector.
std::int64_t flops_lmmse_ce(const model::SystemConfig& cfg);

/// Centralized LMMSE equalization per coherence block: covariance
/// H H^H (M^2 L), Cholesky, L solves, and the L x M filter applied to
/// every symbol.
std::int64_t flops_lmmse_eq(const model::SystemConfig& cfg);

std::int64_t cmac_cholesky(std::int64_t n);
std::int64_t cmac_triangular_solve(std::int64_t n);
std::int64_t cmac_svd(std::int64_t m, std::int64_t n);

/// Slope of the least-squares line through (log x, log y).
double fit_exponent(const std::vector<double>& x, const std::vector<double>& y);

struct CostReport
{
    double fronthaul_complex = 0.0;
    std::int64_t flops_cmacs = 0;
    std::vector<std::int64_t> per_node_flops;  // DNs first, then the CN when present
    double balance = 0.0;                      // max / mean over DNs; 0 for an empty run
    double wall_time_ms = 0.0;
};

struct RunArtifacts
{
    std::optional<fabric::Ledger> ledger;
    std::vector<std::int64_t> dn_cmacs;
    std::optional<std::int64_t> cn_cmacs;
    double wall_time_ms = 0.0;
};

CostReport report(const RunArtifacts& run);

} // namespace dbp::metrics
