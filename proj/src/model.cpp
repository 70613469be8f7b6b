#include "dbp/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "dbp/rng.hpp"

namespace dbp::model {

SystemConfig SystemConfig::with_equal_split(int M, int C)
{
    require(C >= 1 && M >= C, "with_equal_split: need M >= C >= 1");
    SystemConfig cfg;
    cfg.M = M;
    cfg.C = C;
    cfg.m_sizes.assign(C, M / C);
    for (int i = 0; i < M % C; ++i)
        ++cfg.m_sizes[i];
    return cfg;
}

void SystemConfig::validate() const
{
    require(C >= 1, "C must be >= 1");
    require(static_cast<int>(m_sizes.size()) == C, "m_sizes must have C entries");
    for (int m : m_sizes)
        require(m >= 1, "every M_i must be >= 1");
    require(std::accumulate(m_sizes.begin(), m_sizes.end(), 0) == M, "sum(m_sizes) must equal M");
    require(L >= 1, "L must be >= 1");
    require(K >= 1, "K must be >= 1");
    require(n_sc >= 1, "n_sc must be >= 1");
    require(n_sym >= 1, "n_sym must be >= 1");
    require(noise_var >= 0.0, "noise_var must be >= 0");
    require(p_max > 0.0, "p_max must be > 0");
}

int SystemConfig::offset(int dn) const
{
    require(dn >= 0 && dn < C, "DN index out of range");
    return std::accumulate(m_sizes.begin(), m_sizes.begin() + dn, 0);
}

cmat dft_matrix(int n)
{
    cmat F(n, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            const auto k = (static_cast<long long>(a) * b) % n;
            const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / n;
            F(a, b) = scale * cplx(std::cos(ang), std::sin(ang));
        }
    return F;
}

cmat to_angle_delay(const cmat& X)
{
    const cmat FM = dft_matrix(static_cast<int>(X.rows()));
    const cmat FN = dft_matrix(static_cast<int>(X.cols()));
    return FM.adjoint() * X * FN.adjoint();
}

cmat from_angle_delay(const cmat& X)
{
    const cmat FM = dft_matrix(static_cast<int>(X.rows()));
    const cmat FN = dft_matrix(static_cast<int>(X.cols()));
    return FM * X * FN;
}

cmat partial_angle_transform(const SystemConfig& cfg, const cmat& block, int dn)
{
    require(dn >= 0 && dn < cfg.C, "partial_angle_transform: DN index out of range");
    require_dims(block.rows() == cfg.m_sizes[dn], "partial_angle_transform: block rows != M_i");
    require_dims(block.cols() == cfg.n_sc, "partial_angle_transform: block cols != n_sc");
    const cmat FM = dft_matrix(cfg.M);
    const cmat FN = dft_matrix(cfg.n_sc);
    const cmat slice = FM.middleRows(cfg.offset(dn), cfg.m_sizes[dn]);
    return slice.adjoint() * block * FN.adjoint();
}

std::vector<cmat> split_rows(const SystemConfig& cfg, const cmat& stacked)
{
    require_dims(stacked.rows() == cfg.M, "split_rows: row count != M");
    std::vector<cmat> out;
    out.reserve(cfg.C);
    int r = 0;
    for (int i = 0; i < cfg.C; ++i) {
        out.push_back(stacked.middleRows(r, cfg.m_sizes[i]));
        r += cfg.m_sizes[i];
    }
    return out;
}

cmat stack_rows(const std::vector<cmat>& blocks)
{
    Eigen::Index rows = 0;
    for (const auto& b : blocks)
        rows += b.rows();
    cmat out(rows, blocks.empty() ? 0 : blocks.front().cols());
    Eigen::Index r = 0;
    for (const auto& b : blocks) {
        require_dims(b.cols() == out.cols(), "stack_rows: column mismatch");
        out.middleRows(r, b.rows()) = b;
        r += b.rows();
    }
    return out;
}

std::pair<ChannelSet, PowerProfile> synthesize_channel(const SystemConfig& cfg,
                                                       const SynthesisOptions& opt,
                                                       std::uint64_t trial)
{
    cfg.validate();
    if (!(opt.sparsity > 0.0 && opt.sparsity <= 1.0))
        throw ConfigError("sparsity must lie in (0, 1]");
    if (!(opt.delay_span > 0.0 && opt.delay_span <= 1.0))
        throw ConfigError("delay_span must lie in (0, 1]");

    const long long total = static_cast<long long>(cfg.M) * cfg.n_sc;
    const auto n_support = static_cast<long long>(std::ceil(opt.sparsity * static_cast<double>(total) - 1e-9));
    const int span_cols = std::max(1, static_cast<int>(std::ceil(opt.delay_span * cfg.n_sc - 1e-9)));
    const long long candidates = static_cast<long long>(cfg.M) * span_cols;
    if (n_support < 1)
        throw ConfigError("sparsity * M * n_sc must be >= 1");
    if (n_support > candidates)
        throw ConfigError("support does not fit in the requested delay span");

    // support: partial Fisher-Yates over the candidate bins (row-major ids)
    Rng support_rng(cfg.seed, "model.support");
    std::vector<long long> ids(candidates);
    std::iota(ids.begin(), ids.end(), 0LL);
    for (long long k = 0; k < n_support; ++k) {
        const auto j = k + static_cast<long long>(support_rng.below(static_cast<std::uint64_t>(candidates - k)));
        std::swap(ids[k], ids[j]);
    }
    ids.resize(n_support);
    std::sort(ids.begin(), ids.end());

    ChannelSet ch;
    PowerProfile prof{rmat::Zero(cfg.M, cfg.n_sc)};
    for (long long id : ids)
        ch.support.push_back({static_cast<int>(id / span_cols), static_cast<int>(id % span_cols)});

    double mass = 0.0;
    const double tau = std::max(1.0, span_cols / 3.0);
    for (const auto& b : ch.support) {
        const double w = opt.shape == ProfileShape::uniform ? 1.0 : std::exp(-b.col / tau);
        prof.values(b.row, b.col) = w;
        mass += w;
    }
    // mean entry power of the antenna/frequency channel is one
    prof.values *= static_cast<double>(total) / mass;

    Rng coeff_rng(cfg.seed, "model.coeff", 0, trial);
    ch.truth_ad = cmat::Zero(cfg.M, cfg.n_sc);
    for (const auto& b : ch.support)
        ch.truth_ad(b.row, b.col) = coeff_rng.cgauss(prof.values(b.row, b.col));

    ch.blocks = split_rows(cfg, from_angle_delay(ch.truth_ad));
    return {std::move(ch), std::move(prof)};
}

std::vector<cmat> observe_pilot(const SystemConfig& cfg, const ChannelSet& ch, double noise_var,
                                std::uint64_t trial)
{
    if (noise_var < 0.0)
        throw ConfigError("noise_var must be >= 0");
    require_dims(static_cast<int>(ch.blocks.size()) == cfg.C, "observe_pilot: block count != C");
    std::vector<cmat> Y;
    Y.reserve(cfg.C);
    for (int i = 0; i < cfg.C; ++i) {
        const cmat& H = ch.blocks[i];
        if (noise_var == 0.0) {
            Y.push_back(H);
            continue;
        }
        Rng rng(cfg.seed, "model.pilot_noise", static_cast<std::uint64_t>(i), trial);
        Y.push_back(H + rng.cgauss(H.rows(), H.cols(), noise_var));
    }
    return Y;
}

} // namespace dbp::model
