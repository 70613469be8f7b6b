#include "dbp/multicell.hpp"

#include <cmath>

#include "dbp/rng.hpp"

namespace dbp::mc {

void MultiCellScene::validate() const
{
    const int C = n_cells();
    require(C >= 1, "need at least one cell");
    require(M >= 1 && d >= 1, "need M >= 1 and d >= 1");
    require(p_max > 0.0, "p_max must be > 0");
    require_dims(static_cast<int>(H.size()) == C && static_cast<int>(noise.size()) == C,
                 "one channel row and noise variance per user");
    for (int i = 0; i < C; ++i) {
        require(d <= n_rx[i] && d <= M, "streams must satisfy d <= min(N_i, M)");
        require(noise[i] > 0.0, "noise variance must be > 0");
        require_dims(static_cast<int>(H[i].size()) == C, "one channel per (user, BS)");
        for (int l = 0; l < C; ++l)
            require_dims(H[i][l].rows() == n_rx[i] && H[i][l].cols() == M, "channel must be N_i x M");
    }
}

MultiCellScene random_scene(int n_cells, int M, int n_rx, int d, double noise_var, double p_max,
                            double cross_gain, std::uint64_t seed, std::uint64_t trial)
{
    require(cross_gain >= 0.0, "cross_gain must be >= 0");
    MultiCellScene s;
    s.M = M;
    s.d = d;
    s.p_max = p_max;
    s.n_rx.assign(n_cells, n_rx);
    s.noise.assign(n_cells, noise_var);
    s.H.assign(n_cells, std::vector<cmat>(n_cells));
    for (int i = 0; i < n_cells; ++i)
        for (int l = 0; l < n_cells; ++l) {
            Rng rng(seed, "mc.channel", static_cast<std::uint64_t>(i) * n_cells + l, trial);
            const double g = i == l ? 1.0 : std::sqrt(cross_gain);
            s.H[i][l] = g * rng.cgauss(n_rx, M);
        }
    s.validate();
    return s;
}

namespace {

wmmse::Problem joint_problem(const MultiCellScene& s)
{
    const int C = s.n_cells();
    wmmse::Problem p;
    p.pool_budget.assign(C, s.p_max);
    p.channel.assign(C, std::vector<cmat>(C));
    for (int l = 0; l < C; ++l) {
        p.tx.push_back({s.M, l, false});
        p.rx.push_back({s.n_rx[l], s.noise[l] * cmat::Identity(s.n_rx[l], s.n_rx[l])});
        p.groups.push_back({l, l, s.d});
        for (int i = 0; i < C; ++i)
            p.channel[l][i] = s.H[i][l];
    }
    return p;
}

double total(const std::vector<double>& v)
{
    double t = 0.0;
    for (double x : v)
        t += x;
    return t;
}

} // namespace

std::vector<double> cell_rates(const MultiCellScene& scene, const std::vector<cmat>& Z, Exec exec)
{
    scene.validate();
    return wmmse::group_rates(joint_problem(scene), Z, exec);
}

Solution mcp_centralized(const MultiCellScene& scene, double tol, int max_iter, Exec exec)
{
    scene.validate();
    wmmse::Options opt;
    opt.tol = tol;
    opt.max_iter = max_iter;
    opt.exec = exec;
    const auto res = wmmse::solve(joint_problem(scene), opt);
    return {res.Z, res.rate, res.sum_rate, res.trace, res.iterations, res.converged};
}

cmat single_cell_wmmse(const MultiCellScene& scene, int cell, const cmat& interference, double tol,
                       int max_iter)
{
    const int N = scene.n_rx.at(cell);
    wmmse::Problem p;
    p.pool_budget = {scene.p_max};
    p.tx.push_back({scene.M, 0, false});
    cmat noise = scene.noise[cell] * cmat::Identity(N, N);
    if (interference.size())
        noise += interference;
    p.rx.push_back({N, noise});
    p.groups.push_back({0, 0, scene.d});
    p.channel = {{scene.H[cell][cell]}};
    wmmse::Options opt;
    opt.tol = tol;
    opt.max_iter = max_iter;
    opt.fill_power = true;
    return wmmse::solve(p, opt).Z[0];
}

Solution tin_baseline(const MultiCellScene& scene, int n_rounds, double tol, int max_iter, Exec exec)
{
    scene.validate();
    require(n_rounds >= 1, "n_rounds must be >= 1");
    const int C = scene.n_cells();
    Solution sol;
    sol.Z.assign(C, cmat());
    for (int round = 0; round < n_rounds; ++round) {
        std::vector<cmat> next(C);
        for_each_index(exec, C, [&](int i) {
            cmat interf = cmat::Zero(scene.n_rx[i], scene.n_rx[i]);
            if (round > 0)
                for (int l = 0; l < C; ++l)
                    if (l != i) {
                        const cmat HZ = scene.H[i][l] * sol.Z[l];
                        interf += HZ * HZ.adjoint();
                    }
            next[i] = single_cell_wmmse(scene, i, interf, tol, max_iter);
        });
        sol.Z = next;
        sol.trace.push_back(total(cell_rates(scene, sol.Z, exec)));
    }
    sol.rate = cell_rates(scene, sol.Z, exec);
    sol.sum_rate = total(sol.rate);
    sol.iterations = n_rounds;
    sol.converged = true;
    return sol;
}

VpcSplit vpc_split(const cmat& Z, const cmat& H)
{
    require_dims(H.cols() == Z.rows(), "vpc_split: H columns must match Z rows");
    VpcSplit s{cmat(H.rows(), Z.cols()), rvec(Z.cols())};
    for (Eigen::Index c = 0; c < Z.cols(); ++c) {
        const double n = Z.col(c).norm();
        s.p(c) = n;
        s.G.col(c) = n > 0.0 ? cmat(H * Z.col(c) / n) : cmat(H.col(0));
    }
    return s;
}

LocalSolve vpc_local_solve(const MultiCellScene& scene, int cell,
                           const std::vector<std::vector<cmat>>& G, const cmat& Z0,
                           const std::vector<rvec>& p0, double tol, int max_iter)
{
    scene.validate();
    const int C = scene.n_cells();
    require(cell >= 0 && cell < C, "cell index out of range");
    require_dims(static_cast<int>(G.size()) == C && static_cast<int>(p0.size()) == C,
                 "split images and powers needed for every cell");

    // tx 0 is the real BS; tx 1.. are the virtual diagonal BSs, in cell order
    wmmse::Problem p;
    p.tx.push_back({scene.M, 0, false});
    p.pool_budget.push_back(scene.p_max);
    std::vector<int> tx_of(C, 0);
    for (int l = 0; l < C; ++l) {
        if (l == cell)
            continue;
        tx_of[l] = static_cast<int>(p.tx.size());
        p.tx.push_back({scene.d, static_cast<int>(p.pool_budget.size()), true});
        p.pool_budget.push_back(scene.p_max);
    }
    p.channel.assign(p.tx.size(), std::vector<cmat>(C));
    std::vector<cmat> init(C);
    for (int k = 0; k < C; ++k) {
        p.rx.push_back({scene.n_rx[k], scene.noise[k] * cmat::Identity(scene.n_rx[k], scene.n_rx[k])});
        p.groups.push_back({tx_of[k], k, scene.d});
        for (int l = 0; l < C; ++l) {
            if (l == cell) {
                p.channel[0][k] = scene.H[k][cell];
            } else {
                require_dims(G[k][l].rows() == scene.n_rx[k] && G[k][l].cols() == scene.d,
                             "split image must be N_k x d");
                p.channel[tx_of[l]][k] = G[k][l];
            }
        }
        init[k] = k == cell ? Z0 : cmat(p0[k].cast<cplx>().asDiagonal());
    }

    wmmse::Options opt;
    opt.tol = tol;
    opt.max_iter = max_iter;
    opt.initial = init;
    const auto res = wmmse::solve(p, opt);

    LocalSolve out;
    out.Z = res.Z[cell];
    out.virtual_p.assign(C, rvec());
    for (int l = 0; l < C; ++l)
        if (l != cell)
            out.virtual_p[l] = res.Z[l].diagonal().cwiseAbs();
    out.trace = res.trace;
    return out;
}

std::int64_t vpc_pair_cost_real(const MultiCellScene& scene)
{
    std::int64_t dirs = 0;
    for (int n : scene.n_rx)
        dirs += static_cast<std::int64_t>(n) * scene.d;
    return 2 * dirs + scene.d;
}

VpcResult vpc_round(const MultiCellScene& scene, int n_rounds, double tol, int max_iter, Exec exec)
{
    scene.validate();
    require(n_rounds >= 1, "n_rounds must be >= 1");
    const int C = scene.n_cells();
    VpcResult out{{}, fabric::Ledger(fabric::Topology(fabric::TopologyKind::mesh, C))};
    Solution& sol = out.solution;

    sol.Z.resize(C);
    for_each_index(exec, C, [&](int i) { sol.Z[i] = single_cell_wmmse(scene, i, cmat(), tol, max_iter); });

    std::int64_t dirs = 0;
    for (int n : scene.n_rx)
        dirs += static_cast<std::int64_t>(n) * scene.d;

    for (int round = 0; round < n_rounds; ++round) {
        // exchange: BS l broadcasts its split images at every user and its powers
        std::vector<std::vector<cmat>> G(C, std::vector<cmat>(C));
        std::vector<rvec> p(C);
        for (int l = 0; l < C; ++l) {
            for (int k = 0; k < C; ++k) {
                const VpcSplit s = vpc_split(sol.Z[l], scene.H[k][l]);
                G[k][l] = s.G;
                p[l] = s.p;
            }
        }
        for (int l = 0; l < C; ++l)
            for (int i = 0; i < C; ++i)
                if (l != i) {
                    out.ledger.record({l, i}, fabric::MessageClass::csi, dirs);
                    out.ledger.record_real({l, i}, fabric::MessageClass::power_scalars, scene.d);
                }

        std::vector<cmat> next(C);
        for_each_index(exec, C, [&](int i) {
            next[i] = vpc_local_solve(scene, i, G, sol.Z[i], p, tol, max_iter).Z;
        });
        sol.Z = next;
        sol.trace.push_back(total(cell_rates(scene, sol.Z, exec)));
    }
    sol.rate = cell_rates(scene, sol.Z, exec);
    sol.sum_rate = total(sol.rate);
    sol.iterations = n_rounds;
    sol.converged = true;
    return out;
}

} // namespace dbp::mc
