#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dbp/common.hpp"

namespace dbp::model {

/// Dimensional and physical parameters of one simulated system.
struct SystemConfig
{
    int M = 1;                 // total BS antennas
    int C = 1;                 // distributed nodes
    std::vector<int> m_sizes;  // antennas per DN, sums to M
    int L = 1;                 // single-antenna users
    int K = 1;                 // cells / multi-antenna users, context dependent
    int n_sc = 1;              // subcarriers
    int n_sym = 1;             // symbols per coherence block
    double noise_var = 1.0;
    double p_max = 1.0;
    std::uint64_t seed = 0;

    /// Config with m_sizes split as evenly as possible (first DNs get the
    /// remainder).
    static SystemConfig with_equal_split(int M, int C);

    void validate() const;

    /// First stacked antenna row owned by DN i.
    int offset(int dn) const;
};

struct Bin
{
    int row;
    int col;
    friend bool operator==(const Bin&, const Bin&) = default;
};

enum class ProfileShape
{
    uniform,
    exp_decay
};

/// Nonnegative per-bin power of the angle/delay channel.
struct PowerProfile
{
    rmat values;  // M x n_sc
};

/// Single-user pilot-model channel.
struct ChannelSet
{
    std::vector<cmat> blocks;  // per DN, M_i x n_sc, antenna/frequency
    cmat truth_ad;             // M x n_sc, angle/delay
    std::vector<Bin> support;  // row-major sorted
};

struct SynthesisOptions
{
    double sparsity = 1.0;
    ProfileShape shape = ProfileShape::uniform;
    /// Fraction of the delay axis (leading taps) the support is drawn from.
    double delay_span = 1.0;
};

/// Support and profile depend only on cfg.seed; fading coefficients are
/// drawn from the (seed, trial) substream, so Monte-Carlo over `trial`
/// samples one fixed power profile.
std::pair<ChannelSet, PowerProfile> synthesize_channel(const SystemConfig& cfg,
                                                       const SynthesisOptions& opt,
                                                       std::uint64_t trial = 0);

/// Unitary DFT matrix, F[a,b] = exp(-2 pi i a b / n) / sqrt(n).
cmat dft_matrix(int n);

/// F_M^H X F_N^H.
cmat to_angle_delay(const cmat& X);

/// Inverse of to_angle_delay: F_M X F_N.
cmat from_angle_delay(const cmat& X);

/// R_i^H X F_N^H where R_i is DN i's horizontal slice of F_M (M_i x M).
cmat partial_angle_transform(const SystemConfig& cfg, const cmat& block, int dn);

/// Splits a stacked M-row matrix into per-DN blocks.
std::vector<cmat> split_rows(const SystemConfig& cfg, const cmat& stacked);

cmat stack_rows(const std::vector<cmat>& blocks);

/// Y_i = H_i + N_i with identity pilot; noise per DN from its own substream.
std::vector<cmat> observe_pilot(const SystemConfig& cfg, const ChannelSet& ch, double noise_var,
                                std::uint64_t trial = 0);

} // namespace dbp::model
