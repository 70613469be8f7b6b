#include "dbp/dl_precode.hpp"

#include <cmath>
#include <numbers>

#include "dbp/linalg.hpp"
#include "dbp/rng.hpp"

namespace dbp::dl {

using model::SystemConfig;

int DownlinkScene::total_streams() const
{
    int t = 0;
    for (int l : streams)
        t += l;
    return t;
}

void DownlinkScene::validate() const
{
    cfg.validate();
    require(!n_rx.empty() && n_rx.size() == streams.size(), "one (N_k, L_k) pair per user");
    for (std::size_t k = 0; k < n_rx.size(); ++k)
        require(n_rx[k] >= streams[k] && streams[k] >= 1, "need N_k >= L_k >= 1");
    require_dims(!H.empty() && noise.size() == H.size(), "channels and noise per subcarrier");
    for (std::size_t j = 0; j < H.size(); ++j) {
        require_dims(H[j].size() == n_rx.size() && noise[j].size() == n_rx.size(), "one channel per user");
        for (std::size_t k = 0; k < n_rx.size(); ++k) {
            require_dims(H[j][k].rows() == n_rx[k] && H[j][k].cols() == cfg.M, "user channel must be N_k x M");
            require(noise[j][k] > 0.0, "downlink noise variance must be > 0");
        }
    }
}

DownlinkScene random_scene(const SystemConfig& cfg, int n_rx, int streams, int n_taps,
                           std::uint64_t trial)
{
    cfg.validate();
    require(n_taps >= 1, "n_taps must be >= 1");
    DownlinkScene s;
    s.cfg = cfg;
    s.n_rx.assign(cfg.K, n_rx);
    s.streams.assign(cfg.K, streams);
    s.H.assign(cfg.n_sc, std::vector<cmat>(cfg.K));
    s.noise.assign(cfg.n_sc, std::vector<double>(cfg.K, cfg.noise_var));
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_taps));
    for (int k = 0; k < cfg.K; ++k) {
        Rng rng(cfg.seed, "dl.channel", static_cast<std::uint64_t>(k), trial);
        std::vector<cmat> taps;
        for (int t = 0; t < n_taps; ++t)
            taps.push_back(rng.cgauss(n_rx, cfg.M));
        for (int j = 0; j < cfg.n_sc; ++j) {
            cmat Hk = cmat::Zero(n_rx, cfg.M);
            for (int t = 0; t < n_taps; ++t) {
                const double ang = -2.0 * std::numbers::pi * static_cast<double>((static_cast<long long>(j) * t) % cfg.n_sc) / cfg.n_sc;
                Hk += cplx(std::cos(ang), std::sin(ang)) * taps[t];
            }
            s.H[j][k] = scale * Hk;
        }
    }
    s.validate();
    return s;
}

double PrecoderSet::power() const
{
    double p = 0.0;
    for (const auto& row : Z)
        for (const auto& z : row)
            p += z.squaredNorm();
    return p;
}

cmat PrecoderSet::block(const SystemConfig& cfg, int j, int k, int dn) const
{
    return Z.at(j).at(k).middleRows(cfg.offset(dn), cfg.m_sizes.at(dn));
}

wmmse::Problem as_wmmse_problem(const DownlinkScene& scene)
{
    scene.validate();
    const int N = scene.n_sc(), K = scene.n_users();
    wmmse::Problem p;
    p.pool_budget = {scene.cfg.p_max};
    p.channel.assign(N, std::vector<cmat>(static_cast<std::size_t>(N) * K));
    for (int j = 0; j < N; ++j) {
        p.tx.push_back({scene.cfg.M, 0, false});
        for (int k = 0; k < K; ++k) {
            const int r = j * K + k;
            p.rx.push_back({scene.n_rx[k], scene.noise[j][k] * cmat::Identity(scene.n_rx[k], scene.n_rx[k])});
            p.groups.push_back({j, r, scene.streams[k]});
            p.channel[j][r] = scene.H[j][k];
        }
    }
    return p;
}

namespace {

std::vector<cmat> flatten(const DownlinkScene& scene, const PrecoderSet& P)
{
    require_dims(static_cast<int>(P.Z.size()) == scene.n_sc(), "precoders: one row per subcarrier");
    std::vector<cmat> Z;
    for (int j = 0; j < scene.n_sc(); ++j) {
        require_dims(static_cast<int>(P.Z[j].size()) == scene.n_users(), "precoders: one per user");
        for (int k = 0; k < scene.n_users(); ++k) {
            require_dims(P.Z[j][k].rows() == scene.cfg.M && P.Z[j][k].cols() == scene.streams[k],
                         "precoder must be M x L_k");
            Z.push_back(P.Z[j][k]);
        }
    }
    return Z;
}

PrecoderSet unflatten(const DownlinkScene& scene, const std::vector<cmat>& Z)
{
    PrecoderSet P;
    P.p_max = scene.cfg.p_max;
    P.Z.assign(scene.n_sc(), std::vector<cmat>(scene.n_users()));
    for (int j = 0; j < scene.n_sc(); ++j)
        for (int k = 0; k < scene.n_users(); ++k)
            P.Z[j][k] = Z[static_cast<std::size_t>(j) * scene.n_users() + k];
    return P;
}

} // namespace

RateReport rate_eval(const DownlinkScene& scene, const PrecoderSet& P, Exec exec)
{
    const auto problem = as_wmmse_problem(scene);
    const auto rates = wmmse::group_rates(problem, flatten(scene, P), exec);
    RateReport out;
    out.rate.assign(scene.n_sc(), std::vector<double>(scene.n_users()));
    for (int j = 0; j < scene.n_sc(); ++j)
        for (int k = 0; k < scene.n_users(); ++k) {
            out.rate[j][k] = rates[static_cast<std::size_t>(j) * scene.n_users() + k];
            out.sum_rate += out.rate[j][k];
        }
    return out;
}

WmmseReport wmmse_precode(const DownlinkScene& scene, double tol, int max_iter, Exec exec)
{
    const auto problem = as_wmmse_problem(scene);
    wmmse::Options opt;
    opt.tol = tol;
    opt.max_iter = max_iter;
    opt.exec = exec;
    // sum rate is increasing in a common scaling of all precoders
    opt.fill_power = true;
    auto best = wmmse::solve(problem, opt);
    const int K = scene.n_users();
    if (K < 2)
        return {unflatten(scene, best.Z), best.trace, best.iterations, best.converged};
    // equal-power ascent can stall at a shared-power stationary point; also try
    // one start per user that hands that user most of the budget
    const auto base = wmmse::default_init(problem);
    const double favoured = 0.9 + 0.1 / K, other = 0.1 / K;
    for (int fav = 0; fav < K; ++fav) {
        auto init = base;
        for (std::size_t g = 0; g < init.size(); ++g)
            init[g] *= std::sqrt(K * (static_cast<int>(g) % K == fav ? favoured : other));
        opt.initial = std::move(init);
        auto res = wmmse::solve(problem, opt);
        if (res.sum_rate > best.sum_rate)
            best = std::move(res);
    }
    return {unflatten(scene, best.Z), best.trace, best.iterations, best.converged};
}

PrecoderSet zf_precode(const DownlinkScene& scene)
{
    scene.validate();
    const int K = scene.n_users(), M = scene.cfg.M;
    const int total_rx = [&] {
        int t = 0;
        for (int n : scene.n_rx)
            t += n;
        return t;
    }();
    const double per_stream = scene.cfg.p_max / (static_cast<double>(scene.n_sc()) * scene.total_streams());
    bool plain_zf = true;
    for (int k = 0; k < K; ++k)
        plain_zf = plain_zf && scene.n_rx[k] == scene.streams[k];

    PrecoderSet P;
    P.p_max = scene.cfg.p_max;
    P.Z.assign(scene.n_sc(), std::vector<cmat>(K));
    for (int j = 0; j < scene.n_sc(); ++j) {
        cmat Hs(total_rx, M);
        int row = 0;
        for (int k = 0; k < K; ++k) {
            Hs.middleRows(row, scene.n_rx[k]) = scene.H[j][k];
            row += scene.n_rx[k];
        }
        const auto sv = linalg::svd(Hs);
        if (total_rx > M || sv.s.size() < total_rx || sv.s(total_rx - 1) <= 1e-10 * sv.s(0))
            throw NumericalError("zero-forcing needs a full row rank stacked channel on subcarrier " +
                                 std::to_string(j));
        cmat dirs(M, scene.total_streams());
        if (plain_zf) {
            // H^H (H H^H)^{-1}
            dirs = Hs.adjoint() * linalg::hpd_inverse(Hs * Hs.adjoint());
        } else {
            int col = 0;
            row = 0;
            for (int k = 0; k < K; ++k) {
                cmat others(total_rx - scene.n_rx[k], M);
                int o = 0;
                for (int q = 0; q < K; ++q)
                    if (q != k) {
                        others.middleRows(o, scene.n_rx[q]) = scene.H[j][q];
                        o += scene.n_rx[q];
                    }
                // null space of the other users' channels
                Eigen::BDCSVD<cmat> full(others, Eigen::ComputeFullV);
                const int rank = static_cast<int>(others.rows());
                const cmat null = others.rows() ? cmat(full.matrixV().rightCols(M - rank)) : cmat(cmat::Identity(M, M));
                const cmat eff = scene.H[j][k] * null;
                const auto es = linalg::svd(eff);
                dirs.middleCols(col, scene.streams[k]) = null * es.V.leftCols(scene.streams[k]);
                col += scene.streams[k];
                row += scene.n_rx[k];
            }
        }
        int col = 0;
        for (int k = 0; k < K; ++k) {
            cmat Zk = dirs.middleCols(col, scene.streams[k]);
            for (Eigen::Index c = 0; c < Zk.cols(); ++c)
                Zk.col(c) *= std::sqrt(per_stream) / Zk.col(c).norm();
            P.Z[j][k] = Zk;
            col += scene.streams[k];
        }
    }
    return P;
}

cmat LcpDesign::effective(int j, int k) const
{
    Eigen::Index rows = 0;
    for (const auto& v : V)
        rows += v.cols();
    const Eigen::Index cols = U.at(0).at(j).at(k).cols();
    cmat out(rows, cols);
    Eigen::Index r = 0;
    for (std::size_t i = 0; i < V.size(); ++i) {
        out.middleRows(r, V[i].cols()) = V[i].adjoint() * U[i][j][k];
        r += V[i].cols();
    }
    return out;
}

PrecoderSet LcpDesign::precoders(double p_max) const
{
    PrecoderSet P;
    P.p_max = p_max;
    const std::size_t N = U.at(0).size(), K = U.at(0).at(0).size();
    P.Z.assign(N, std::vector<cmat>(K));
    for (std::size_t j = 0; j < N; ++j)
        for (std::size_t k = 0; k < K; ++k)
            P.Z[j][k] = effective(static_cast<int>(j), static_cast<int>(k));
    return P;
}

LcpDesign lcp_mf(const DownlinkScene& scene, const PrecoderSet& P, const std::vector<int>& r_list,
                 const LcpOptions& opt)
{
    scene.validate();
    flatten(scene, P);
    const auto& cfg = scene.cfg;
    require(static_cast<int>(r_list.size()) == cfg.C, "r_list must have C entries");
    const int N = scene.n_sc(), K = scene.n_users();
    const int width = N * scene.total_streams();

    LcpDesign d;
    d.U.resize(cfg.C);
    for (int i = 0; i < cfg.C; ++i) {
        const int Mi = cfg.m_sizes[i], ri = r_list[i];
        require(ri >= 0 && ri <= Mi, "compressed dimension r_i must lie in [0, M_i]");
        cmat Zt(Mi, width);
        int c = 0;
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < K; ++k) {
                Zt.middleCols(c, scene.streams[k]) = P.block(cfg, j, k, i);
                c += scene.streams[k];
            }
        const auto sv = linalg::svd(Zt);
        const int keep = std::min<int>(ri, static_cast<int>(sv.s.size()));
        // U_i: top right-singular rows; V_i^H = Z_i U_i^H is the least-squares fit
        cmat Ut = cmat::Zero(ri, width);
        Ut.topRows(keep) = sv.V.leftCols(keep).adjoint();
        cmat Vh = Zt * Ut.adjoint();  // M_i x r_i
        d.V.push_back(Vh.adjoint());
        d.singular_values.push_back(sv.s);
        d.residual.push_back((Zt - Vh * Ut).squaredNorm());

        d.U[i].assign(N, std::vector<cmat>(K));
        c = 0;
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < K; ++k) {
                d.U[i][j][k] = Ut.middleCols(c, scene.streams[k]);
                c += scene.streams[k];
            }
    }

    if (opt.per_user_scaling) {
        for (int k = 0; k < K; ++k) {
            double want = 0.0, have = 0.0;
            for (int j = 0; j < N; ++j) {
                want += P.Z[j][k].squaredNorm();
                have += d.effective(j, k).squaredNorm();
            }
            if (have <= 0.0)
                continue;
            const double s = std::sqrt(want / have);
            for (int i = 0; i < cfg.C; ++i)
                for (int j = 0; j < N; ++j)
                    d.U[i][j][k] *= s;
        }
    }

    double power = 0.0;
    for (int j = 0; j < N; ++j)
        for (int k = 0; k < K; ++k)
            power += d.effective(j, k).squaredNorm();
    if (power > 0.0) {
        d.scale = std::sqrt(cfg.p_max / power);
        for (auto& per_dn : d.U)
            for (auto& row : per_dn)
                for (auto& u : row)
                    u *= d.scale;
    }
    return d;
}

fabric::Ledger lcp_ledger(const SystemConfig& cfg, const std::vector<int>& r_list,
                          fabric::TopologyKind topology)
{
    cfg.validate();
    require(static_cast<int>(r_list.size()) == cfg.C, "r_list must have C entries");
    const fabric::Topology topo(topology, cfg.C);
    fabric::Ledger ledger(topo);
    for (int i = 0; i < cfg.C; ++i) {
        require(r_list[i] >= 0 && r_list[i] <= cfg.m_sizes[i], "compressed dimension r_i exceeds M_i");
        ledger.record({topo.cn(), i}, fabric::MessageClass::design_matrix,
                      static_cast<std::int64_t>(cfg.m_sizes[i]) * r_list[i]);
        ledger.record({topo.cn(), i}, fabric::MessageClass::compressed_signal,
                      static_cast<std::int64_t>(cfg.n_sc) * cfg.n_sym * r_list[i]);
    }
    return ledger;
}

} // namespace dbp::dl
