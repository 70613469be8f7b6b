#pragma once

#include <optional>
#include <vector>

#include "dbp/common.hpp"

namespace dbp::wmmse {

//
// Generic weighted-MMSE sum-rate solver. A transmitter serves one or more
// stream groups; each group is received by one receiver. Transmitters in
// the same power pool share one trace budget. A diagonal transmitter (used
// for virtual power control) has n_ant == streams and a diagonal precoder.
//

struct Tx
{
    int n_ant;
    int pool = 0;
    bool diagonal = false;
};

struct Rx
{
    int n_ant;
    cmat noise_cov;  // n_ant x n_ant, Hermitian positive definite
};

struct Group
{
    int tx;
    int rx;
    int n_streams;
};

struct Problem
{
    std::vector<Tx> tx;
    std::vector<Rx> rx;
    std::vector<Group> groups;
    std::vector<std::vector<cmat>> channel;  // [tx][rx], rx.n_ant x tx.n_ant; empty = no coupling
    std::vector<double> pool_budget;

    const cmat* link(int t, int r) const;
    void validate() const;
};

struct Options
{
    double tol = 1e-9;
    int max_iter = 500;
    Exec exec = Exec::serial;
    /// Scale the final precoders up to the budget (single pool only).
    bool fill_power = false;
    std::optional<std::vector<cmat>> initial;
};

struct Result
{
    std::vector<cmat> Z;       // per group, tx.n_ant x n_streams
    std::vector<double> rate;  // per group, bits/channel use
    double sum_rate = 0.0;
    std::vector<double> trace;  // sum rate after initialization and every iteration
    int iterations = 0;
    bool converged = false;
};

/// log2 det(J) - log2 det(J - S S^H) for every group.
std::vector<double> group_rates(const Problem& p, const std::vector<cmat>& Z,
                                Exec exec = Exec::serial);

/// Sum of ||Z_g||_F^2 per pool.
std::vector<double> pool_power(const Problem& p, const std::vector<cmat>& Z);

/// Equal power per group along each link's dominant right singular directions.
std::vector<cmat> default_init(const Problem& p);

Result solve(const Problem& p, const Options& opt = {});

/// Smallest mu >= 0 with sum_k c_k / (lambda_k + mu)^2 <= budget; returns 0
/// when mu = 0 already satisfies it.
double bisect_mu(const std::vector<rvec>& lambda, const std::vector<rvec>& c, double budget);

} // namespace dbp::wmmse
