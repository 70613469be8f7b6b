#include "dbp/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace dbp::metrics {

std::int64_t cmac_cholesky(std::int64_t n)
{
    return (n * n * n - n) / 6;
}

std::int64_t cmac_triangular_solve(std::int64_t n)
{
    return n * (n - 1) / 2;
}

std::int64_t cmac_svd(std::int64_t m, std::int64_t n)
{
    if (m < n)
        std::swap(m, n);
    return 14 * m * n * n;
}

std::int64_t flops_lmmse_ce(const model::SystemConfig& cfg)
{
    const std::int64_t M = cfg.M;
    const std::int64_t per = cmac_cholesky(M) + 2 * cmac_triangular_solve(M) + M * M;
    return static_cast<std::int64_t>(cfg.n_sc) * cfg.L * per;
}

std::int64_t flops_lmmse_eq(const model::SystemConfig& cfg)
{
    const std::int64_t M = cfg.M, L = cfg.L;
    const std::int64_t design = M * M * L + cmac_cholesky(M) + 2 * L * cmac_triangular_solve(M);
    const std::int64_t apply = static_cast<std::int64_t>(cfg.n_sym) * L * M;
    return static_cast<std::int64_t>(cfg.n_sc) * (design + apply);
}

double fit_exponent(const std::vector<double>& x, const std::vector<double>& y)
{
    require(x.size() == y.size() && x.size() >= 2, "fit_exponent needs >= 2 paired points");
    double sx = 0.0, sy = 0.0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        require(x[i] > 0.0 && y[i] > 0.0, "fit_exponent needs positive data");
        sx += std::log(x[i]);
        sy += std::log(y[i]);
    }
    const double mx = sx / n, my = sy / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    require(sxx > 0.0, "fit_exponent needs distinct x values");
    return sxy / sxx;
}

CostReport report(const RunArtifacts& run)
{
    CostReport r;
    if (run.ledger)
        r.fronthaul_complex = run.ledger->total();
    r.per_node_flops = run.dn_cmacs;
    if (run.cn_cmacs)
        r.per_node_flops.push_back(*run.cn_cmacs);
    for (auto f : r.per_node_flops) {
        if (f < 0)
            throw DomainError("negative operation count");
        r.flops_cmacs += f;
    }
    if (!run.dn_cmacs.empty()) {
        double sum = 0.0, mx = 0.0;
        for (auto f : run.dn_cmacs) {
            sum += static_cast<double>(f);
            mx = std::max(mx, static_cast<double>(f));
        }
        const double mean = sum / static_cast<double>(run.dn_cmacs.size());
        r.balance = mean > 0.0 ? mx / mean : 0.0;
    }
    r.wall_time_ms = run.wall_time_ms;
    return r;
}

} // namespace dbp::metrics
