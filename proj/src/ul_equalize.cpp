#include "dbp/ul_equalize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "dbp/linalg.hpp"
#include "dbp/rng.hpp"

namespace dbp::ul {

using model::SystemConfig;

cmat UplinkScene::block(int j, int dn) const
{
    return H.at(j).middleRows(cfg.offset(dn), cfg.m_sizes.at(dn));
}

cmat UplinkScene::noise(int j) const
{
    return linalg::blkdiag(noise_cov.at(j));
}

cmat UplinkScene::ry(int j) const
{
    return H.at(j) * H.at(j).adjoint() + noise(j);
}

void UplinkScene::validate() const
{
    cfg.validate();
    require_dims(!H.empty(), "uplink scene has no subcarriers");
    require_dims(noise_cov.size() == H.size(), "noise covariance count != subcarrier count");
    for (std::size_t j = 0; j < H.size(); ++j) {
        require_dims(H[j].rows() == cfg.M && H[j].cols() == cfg.L, "channel must be M x L");
        require_dims(static_cast<int>(noise_cov[j].size()) == cfg.C, "noise covariance needs C blocks");
        for (int i = 0; i < cfg.C; ++i)
            require_dims(noise_cov[j][i].rows() == cfg.m_sizes[i] &&
                             noise_cov[j][i].cols() == cfg.m_sizes[i],
                         "noise covariance block must be M_i x M_i");
    }
}

UplinkScene random_scene(const SystemConfig& cfg, int n_taps, std::uint64_t trial)
{
    cfg.validate();
    require(n_taps >= 1, "n_taps must be >= 1");
    UplinkScene s;
    s.cfg = cfg;
    s.H.assign(cfg.n_sc, cmat::Zero(cfg.M, cfg.L));
    s.noise_cov.resize(cfg.n_sc);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_taps));
    for (int i = 0; i < cfg.C; ++i) {
        Rng rng(cfg.seed, "ul.channel", static_cast<std::uint64_t>(i), trial);
        const int Mi = cfg.m_sizes[i];
        std::vector<cmat> taps;
        for (int t = 0; t < n_taps; ++t)
            taps.push_back(rng.cgauss(Mi, cfg.L));
        for (int j = 0; j < cfg.n_sc; ++j) {
            cmat Hij = cmat::Zero(Mi, cfg.L);
            for (int t = 0; t < n_taps; ++t) {
                const double ang = -2.0 * std::numbers::pi * static_cast<double>((static_cast<long long>(j) * t) % cfg.n_sc) / cfg.n_sc;
                Hij += cplx(std::cos(ang), std::sin(ang)) * taps[t];
            }
            s.H[j].middleRows(cfg.offset(i), Mi) = scale * Hij;
        }
    }
    for (int j = 0; j < cfg.n_sc; ++j)
        for (int i = 0; i < cfg.C; ++i)
            s.noise_cov[j].push_back(cfg.noise_var * cmat::Identity(cfg.m_sizes[i], cfg.m_sizes[i]));
    return s;
}

UplinkScene local_scene(const UplinkScene& scene, int dn)
{
    UplinkScene s;
    s.cfg = scene.cfg;
    s.cfg.M = scene.cfg.m_sizes.at(dn);
    s.cfg.C = 1;
    s.cfg.m_sizes = {s.cfg.M};
    for (int j = 0; j < scene.n_sc(); ++j) {
        s.H.push_back(scene.block(j, dn));
        s.noise_cov.push_back({scene.noise_cov[j][dn]});
    }
    return s;
}

cmat CompressionDesign::compressor() const
{
    return linalg::blkdiag(V);
}

std::vector<int> CompressionDesign::ranks() const
{
    std::vector<int> r;
    for (const auto& v : V)
        r.push_back(static_cast<int>(v.rows()));
    return r;
}

int CompressionDesign::ranks_total() const
{
    int t = 0;
    for (const auto& v : V)
        t += static_cast<int>(v.rows());
    return t;
}

cmat effective_filter(const CompressionDesign& d, int j)
{
    return d.U.at(j) * d.compressor();
}

cmat lmmse_equalizer(const UplinkScene& scene, int j)
{
    const cmat& H = scene.H.at(j);
    // W = H^H R^{-1}  <=>  W^H = R^{-1} H
    try {
        return linalg::hpd_solve(scene.ry(j), H).adjoint();
    } catch (const NumericalError&) {
        throw NumericalError("LMMSE system is singular on subcarrier " + std::to_string(j) +
                             " (zero noise and rank-deficient channel)");
    }
}

double filter_mse(const UplinkScene& scene, int j, const cmat& G)
{
    const cmat& H = scene.H.at(j);
    const cmat GH = G * H;
    const double cross = GH.trace().real();
    const double quad = (G * scene.ry(j) * G.adjoint()).trace().real();
    return static_cast<double>(scene.cfg.L) - 2.0 * cross + quad;
}

namespace {

double ordered_sum(const std::vector<double>& v)
{
    double acc = 0.0;
    for (double x : v)
        acc += x;
    return acc;
}

bool check_ranks(const UplinkScene& scene, const std::vector<int>& r_list)
{
    require(static_cast<int>(r_list.size()) == scene.cfg.C, "r_list must have C entries");
    for (int i = 0; i < scene.cfg.C; ++i) {
        require(r_list[i] >= 1, "compressed dimension r_i must be >= 1");
        require(r_list[i] <= scene.cfg.m_sizes[i], "compressed dimension r_i exceeds M_i");
    }
    return true;
}

} // namespace

double lmmse_objective(const UplinkScene& scene, Exec exec)
{
    std::vector<double> per(scene.n_sc());
    for_each_index(exec, scene.n_sc(), [&](int j) { per[j] = filter_mse(scene, j, lmmse_equalizer(scene, j)); });
    return ordered_sum(per);
}

double jcde_objective(const UplinkScene& scene, const CompressionDesign& d, Exec exec)
{
    require_dims(static_cast<int>(d.U.size()) == scene.n_sc(), "design needs one equalizer per subcarrier");
    const cmat V = d.compressor();
    std::vector<double> per(scene.n_sc());
    for_each_index(exec, scene.n_sc(), [&](int j) { per[j] = filter_mse(scene, j, d.U[j] * V); });
    return ordered_sum(per);
}

std::vector<cmat> optimal_equalizers(const UplinkScene& scene, const std::vector<cmat>& V,
                                     Exec exec)
{
    const cmat Vf = linalg::blkdiag(V);
    std::vector<cmat> U(scene.n_sc());
    for_each_index(exec, scene.n_sc(), [&](int j) {
        const cmat T = Vf * scene.ry(j) * Vf.adjoint();
        U[j] = linalg::hpd_solve(T, Vf * scene.H[j]).adjoint();
    });
    return U;
}

std::vector<cmat> initial_compressors(const UplinkScene& scene, const std::vector<int>& r_list)
{
    check_ranks(scene, r_list);
    std::vector<cmat> V;
    for (int i = 0; i < scene.cfg.C; ++i) {
        cmat wide(scene.cfg.m_sizes[i], static_cast<Eigen::Index>(scene.cfg.L) * scene.n_sc());
        for (int j = 0; j < scene.n_sc(); ++j)
            wide.middleCols(static_cast<Eigen::Index>(j) * scene.cfg.L, scene.cfg.L) = scene.block(j, i);
        V.push_back(linalg::dominant_row_basis(wide, r_list[i]));
    }
    return V;
}

namespace {

// Linear system sum_j A_j X B_j = C for one V_i block, all other blocks fixed.
struct BlockSystem
{
    std::vector<cmat> A;  // r_i x r_i
    std::vector<cmat> B;  // M_i x M_i
    cmat C;               // r_i x M_i

    cmat apply(const cmat& X) const
    {
        cmat out = cmat::Zero(X.rows(), X.cols());
        for (std::size_t j = 0; j < A.size(); ++j)
            out.noalias() += A[j] * X * B[j];
        return out;
    }

    cmat kron() const
    {
        const Eigen::Index r = C.rows(), m = C.cols();
        cmat K = cmat::Zero(r * m, r * m);
        // vec(A X B) = (B^T kron A) vec(X), column-major vec
        for (std::size_t j = 0; j < A.size(); ++j)
            for (Eigen::Index q = 0; q < m; ++q)
                for (Eigen::Index p = 0; p < m; ++p)
                    K.block(p * r, q * r, r, r) += B[j](q, p) * A[j];
        return K;
    }
};

BlockSystem block_system(const UplinkScene& scene, const std::vector<cmat>& Ry,
                         const std::vector<cmat>& U, const std::vector<cmat>& V, int i, Exec exec)
{
    const auto& cfg = scene.cfg;
    const cmat Vf = linalg::blkdiag(V);
    const int off = cfg.offset(i), Mi = cfg.m_sizes[i];
    int roff = 0;
    for (int k = 0; k < i; ++k)
        roff += static_cast<int>(V[k].rows());
    const int ri = static_cast<int>(V[i].rows());

    BlockSystem sys;
    sys.A.resize(scene.n_sc());
    sys.B.resize(scene.n_sc());
    std::vector<cmat> rhs(scene.n_sc());
    for_each_index(exec, scene.n_sc(), [&](int j) {
        const cmat Ui = U[j].middleCols(roff, ri);
        const cmat Rcol = Ry[j].middleCols(off, Mi);
        const cmat Rii = Rcol.middleRows(off, Mi);
        // contribution of the other blocks: U_j V R_y[:, i] minus the own term
        const cmat others = U[j] * (Vf * Rcol) - Ui * (V[i] * Rii);
        sys.A[j] = Ui.adjoint() * Ui;
        sys.B[j] = Rii;
        rhs[j] = Ui.adjoint() * (scene.block(j, i).adjoint() - others);
    });
    sys.C = cmat::Zero(ri, Mi);
    for (const auto& c : rhs)
        sys.C += c;
    return sys;
}

cmat solve_block_direct(const BlockSystem& sys, const cmat& Vi)
{
    const cmat K = sys.kron();
    const cmat resid = sys.C - sys.apply(Vi);
    const cvec delta = linalg::psd_min_norm_solve(K, resid.reshaped());
    return Vi + delta.reshaped(Vi.rows(), Vi.cols());
}

struct AdmmResult
{
    cmat V;
    double primal;
    int iterations;
    bool converged;
};

double lambda_max(const BlockSystem& sys, Eigen::Index r, Eigen::Index m)
{
    cmat X = cmat::Constant(r, m, cplx(1.0, 0.0));
    X /= X.norm();
    double lam = 0.0;
    for (int it = 0; it < 200; ++it) {
        const cmat Y = sys.apply(X);
        const double next = std::real((X.adjoint() * Y).trace());
        const double n = Y.norm();
        if (n == 0.0)
            return 0.0;
        X = Y / n;
        if (std::abs(next - lam) <= 1e-12 * std::abs(next))
            return std::max(next, n);
        lam = next;
    }
    return std::max(lam, sys.apply(X).norm());
}

AdmmResult solve_block_admm(const BlockSystem& sys, const cmat& Vi, const AdmmOptions& opt,
                            std::vector<std::string>& warnings)
{
    const double lmax = lambda_max(sys, Vi.rows(), Vi.cols());
    if (lmax <= 0.0)
        return {Vi, 0.0, 0, true};
    const double floor_rho = 1.2 * lmax;
    double rho = std::max(opt.rho * 2.0 * lmax, floor_rho);

    cmat Va = Vi, Vb = Vi;
    cmat Lam = cmat::Zero(Vi.rows(), Vi.cols());
    const double start_scale = 1.0 + Vi.norm() + sys.C.norm() / lmax;
    double primal = 0.0;
    for (int it = 1; it <= opt.max_inner; ++it) {
        const cmat Vb_prev = Vb;
        Va = Vb - (sys.apply(Vb) - sys.C + Lam) / rho;
        Vb = Va - (sys.apply(Va) - sys.C - Lam) / rho;
        Lam += rho * (Va - Vb);

        primal = (Va - Vb).norm();
        const double dual = rho * (Vb - Vb_prev).norm();
        if (!std::isfinite(primal) || primal > 1e8 * start_scale)
            throw NumericalError("ADMM diverged: primal residual " + std::to_string(primal) +
                                 " at inner iteration " + std::to_string(it) + ", rho " +
                                 std::to_string(rho));
        const double scale = std::max(1.0, Vb.norm());
        if (primal <= opt.inner_tol * scale && (Vb - Vb_prev).norm() <= opt.inner_tol * scale)
            return {Vb, primal, it, true};
        // residual balancing
        if (primal > 10.0 * dual)
            rho *= 2.0;
        else if (dual > 10.0 * primal)
            rho = std::max(rho / 2.0, floor_rho);
    }
    warnings.push_back("ADMM inner loop hit max_inner (primal " + std::to_string(primal) + ")");
    return {Vb, primal, opt.max_inner, false};
}

enum class VSolver
{
    direct,
    admm
};

CompressionDesign run_bcd(const UplinkScene& scene, const std::vector<int>& r_list,
                          const SolverOptions& opt, VSolver solver, const AdmmOptions& admm)
{
    scene.validate();
    check_ranks(scene, r_list);
    require(opt.tol > 0.0, "tol must be > 0");
    require(opt.max_iter >= 1, "max_iter must be >= 1");

    CompressionDesign d;
    if (opt.initial) {
        d.V = *opt.initial;
        require_dims(static_cast<int>(d.V.size()) == scene.cfg.C, "initial compressor needs C blocks");
        for (int i = 0; i < scene.cfg.C; ++i)
            require_dims(d.V[i].rows() == r_list[i] && d.V[i].cols() == scene.cfg.m_sizes[i],
                         "initial compressor block has the wrong shape");
    } else {
        d.V = initial_compressors(scene, r_list);
    }

    std::vector<cmat> Ry(scene.n_sc());
    for_each_index(opt.exec, scene.n_sc(), [&](int j) { Ry[j] = scene.ry(j); });

    d.converged = false;
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= opt.max_iter; ++it) {
        d.U = optimal_equalizers(scene, d.V, opt.exec);
        d.trace.push_back({it, "U", jcde_objective(scene, d, opt.exec)});

        double worst_primal = 0.0;
        int inner = 0;
        for (int i = 0; i < scene.cfg.C; ++i) {
            const BlockSystem sys = block_system(scene, Ry, d.U, d.V, i, opt.exec);
            if (solver == VSolver::direct) {
                d.V[i] = solve_block_direct(sys, d.V[i]);
            } else {
                const AdmmResult res = solve_block_admm(sys, d.V[i], admm, d.warnings);
                d.V[i] = res.V;
                worst_primal = std::max(worst_primal, res.primal);
                inner += res.iterations;
            }
        }
        const double obj = jcde_objective(scene, d, opt.exec);
        d.trace.push_back({it, "V", obj, worst_primal, inner});
        d.iterations = it;
        if (std::isfinite(prev) && prev - obj <= opt.tol * std::max(1.0, std::abs(prev))) {
            d.converged = true;
            break;
        }
        prev = obj;
    }
    d.U = optimal_equalizers(scene, d.V, opt.exec);
    d.trace.push_back({d.iterations + 1, "U", jcde_objective(scene, d, opt.exec)});
    if (!d.converged)
        d.warnings.push_back("BCD reached max_iter without meeting tol");
    return d;
}

} // namespace

CompressionDesign jcde_bcd(const UplinkScene& scene, const std::vector<int>& r_list,
                           const SolverOptions& opt)
{
    return run_bcd(scene, r_list, opt, VSolver::direct, {});
}

CompressionDesign jcde_bcd_admm(const UplinkScene& scene, const std::vector<int>& r_list,
                                const SolverOptions& opt, const AdmmOptions& admm)
{
    require(admm.rho > 0.0, "rho must be > 0");
    require(admm.max_inner >= 1, "max_inner must be >= 1");
    return run_bcd(scene, r_list, opt, VSolver::admm, admm);
}

namespace {

UplinkScene single_carrier(const UplinkScene& scene, int j)
{
    UplinkScene s;
    s.cfg = scene.cfg;
    s.cfg.n_sc = 1;
    s.H = {scene.H.at(j)};
    s.noise_cov = {scene.noise_cov.at(j)};
    return s;
}

} // namespace

CompressionDesign svd_agg(const UplinkScene& scene, const std::vector<int>& r_list, int n_probe,
                          const SolverOptions& opt)
{
    scene.validate();
    check_ranks(scene, r_list);
    const int N = scene.n_sc();
    require(n_probe >= 1 && n_probe <= N, "n_probe must lie in [1, n_sc]");

    std::vector<int> probes(n_probe);
    for (int p = 0; p < n_probe; ++p)
        probes[p] = static_cast<int>(std::floor((p + 0.5) * N / n_probe));

    SolverOptions inner = opt;
    inner.initial.reset();
    inner.exec = Exec::serial;
    std::vector<CompressionDesign> per(n_probe);
    for_each_index(opt.exec, n_probe, [&](int p) { per[p] = jcde_bcd(single_carrier(scene, probes[p]), r_list, inner); });

    CompressionDesign d;
    d.iterations = 0;
    for (const auto& pd : per) {
        d.iterations = std::max(d.iterations, pd.iterations);
        if (!pd.converged)
            d.converged = false;
    }
    for (int i = 0; i < scene.cfg.C; ++i) {
        const int Mi = scene.cfg.m_sizes[i], ri = r_list[i];
        cmat stack(Mi, static_cast<Eigen::Index>(ri) * n_probe);
        for (int p = 0; p < n_probe; ++p)
            stack.middleCols(static_cast<Eigen::Index>(p) * ri, ri) = linalg::orthonormal_rows(per[p].V[i]).topRows(ri).adjoint();
        d.V.push_back(linalg::dominant_row_basis(stack, ri));
    }
    d.U = optimal_equalizers(scene, d.V, opt.exec);
    d.trace.push_back({1, "U", jcde_objective(scene, d, opt.exec)});
    return d;
}

namespace {

std::vector<cmat> local_compressors(const UplinkScene& scene, const std::vector<int>& r_list,
                                    const SolverOptions& opt, CompressionDesign& d)
{
    SolverOptions inner = opt;
    inner.initial.reset();
    inner.exec = Exec::serial;
    std::vector<CompressionDesign> local(scene.cfg.C);
    for_each_index(opt.exec, scene.cfg.C, [&](int i) { local[i] = jcde_bcd(local_scene(scene, i), {r_list[i]}, inner); });
    std::vector<cmat> V;
    for (const auto& l : local) {
        V.push_back(l.V[0]);
        d.iterations = std::max(d.iterations, l.iterations);
        if (!l.converged)
            d.converged = false;
    }
    return V;
}

} // namespace

CompressionDesign fd_scheme(const UplinkScene& scene, const std::vector<int>& r_list,
                            const SolverOptions& opt)
{
    scene.validate();
    check_ranks(scene, r_list);
    CompressionDesign d;
    d.V = local_compressors(scene, r_list, opt, d);

    // CN equalizer under a block-diagonal received covariance
    const cmat Vf = d.compressor();
    d.U.resize(scene.n_sc());
    for_each_index(opt.exec, scene.n_sc(), [&](int j) {
        std::vector<cmat> blocks;
        for (int i = 0; i < scene.cfg.C; ++i) {
            const cmat Hi = scene.block(j, i);
            blocks.push_back(d.V[i] * (Hi * Hi.adjoint() + scene.noise_cov[j][i]) * d.V[i].adjoint());
        }
        d.U[j] = linalg::hpd_solve(linalg::blkdiag(blocks), Vf * scene.H[j]).adjoint();
    });
    d.trace.push_back({1, "U", jcde_objective(scene, d, opt.exec)});
    return d;
}

CompressionDesign pd_scheme(const UplinkScene& scene, const std::vector<int>& r_list,
                            const PdOptions& pd, const SolverOptions& opt)
{
    scene.validate();
    check_ranks(scene, r_list);
    require(pd.n_pilot >= 0, "n_pilot must be >= 0");
    CompressionDesign d;
    d.V = local_compressors(scene, r_list, opt, d);
    const cmat Vf = d.compressor();
    const int r = d.ranks_total(), L = scene.cfg.L;

    if (pd.n_pilot == 0) {
        d.U = optimal_equalizers(scene, d.V, opt.exec);
        d.trace.push_back({1, "U", jcde_objective(scene, d, opt.exec)});
        return d;
    }
    if (pd.n_pilot < r)
        d.warnings.push_back("fewer pilot snapshots than the compressed dimension: covariance is "
                             "ill-conditioned, diagonal loading applied");

    // noise colouring factors per (subcarrier, DN)
    d.U.resize(scene.n_sc());
    for_each_index(opt.exec, scene.n_sc(), [&](int j) {
        Rng rng(scene.cfg.seed, "ul.pd_pilot", static_cast<std::uint64_t>(j), pd.trial);
        std::vector<cmat> roots;
        for (int i = 0; i < scene.cfg.C; ++i) {
            Eigen::SelfAdjointEigenSolver<cmat> es(linalg::hermitian_part(scene.noise_cov[j][i]));
            roots.push_back(es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal());
        }
        const cmat root = linalg::blkdiag(roots);
        cmat S(L, pd.n_pilot);
        for (int t = 0; t < pd.n_pilot; ++t)
            for (int l = 0; l < L; ++l)
                S(l, t) = rng.qpsk();
        const cmat W = rng.cgauss(scene.cfg.M, pd.n_pilot);
        const cmat Z = Vf * (scene.H[j] * S + root * W);
        cmat Rhat = (Z * Z.adjoint()) / static_cast<double>(pd.n_pilot);
        const cmat Ghat = (Z * S.adjoint()) / static_cast<double>(pd.n_pilot);
        if (pd.n_pilot < r)
            Rhat += (pd.loading * std::max(Rhat.trace().real() / r, 1e-300)) * cmat::Identity(r, r);
        d.U[j] = linalg::hpd_solve(Rhat, Ghat).adjoint();
    });
    d.trace.push_back({1, "U", jcde_objective(scene, d, opt.exec)});
    return d;
}

fabric::Ledger uplink_ledger(const SystemConfig& cfg, Scheme scheme, const std::vector<int>& r_list,
                             int n_pilot, fabric::TopologyKind topology)
{
    cfg.validate();
    const fabric::Topology topo(topology, cfg.C);
    fabric::Ledger ledger(topo);
    const int cn = topo.cn();
    const std::int64_t data = static_cast<std::int64_t>(cfg.n_sc) * cfg.n_sym;
    if (scheme == Scheme::centralized) {
        for (int i = 0; i < cfg.C; ++i)
            ledger.record({i, cn}, fabric::MessageClass::compressed_signal, data * cfg.m_sizes[i]);
        return ledger;
    }
    require(static_cast<int>(r_list.size()) == cfg.C, "r_list must have C entries");
    for (int i = 0; i < cfg.C; ++i) {
        require(r_list[i] >= 0 && r_list[i] <= cfg.m_sizes[i], "compressed dimension r_i exceeds M_i");
        const std::int64_t design = static_cast<std::int64_t>(cfg.m_sizes[i]) * r_list[i];
        if (scheme == Scheme::cn_designed)
            ledger.record({cn, i}, fabric::MessageClass::design_matrix, design);
        else
            ledger.record({i, cn}, fabric::MessageClass::design_matrix, design);
        if (scheme == Scheme::pd)
            ledger.record({i, cn}, fabric::MessageClass::pilot_signal,
                          static_cast<std::int64_t>(r_list[i]) * n_pilot * cfg.n_sc);
        ledger.record({i, cn}, fabric::MessageClass::compressed_signal, data * r_list[i]);
    }
    return ledger;
}

rvec filter_sinr(const UplinkScene& scene, int j, const cmat& G)
{
    const cmat& H = scene.H.at(j);
    const cmat GH = G * H;
    const cmat noise = G * scene.noise(j) * G.adjoint();
    rvec out(G.rows());
    for (Eigen::Index l = 0; l < G.rows(); ++l) {
        const double sig = std::norm(GH(l, l));
        const double interf = GH.row(l).squaredNorm() - sig + noise(l, l).real();
        out(l) = interf > 0.0 ? sig / interf : std::numeric_limits<double>::infinity();
    }
    return out;
}

Equalized equalize_apply(const UplinkScene& scene, const CompressionDesign& d, int j, const cvec& y)
{
    require_dims(y.size() == scene.cfg.M, "received vector must have M entries");
    const cmat G = effective_filter(d, j);
    return {G * y, filter_sinr(scene, j, G)};
}

} // namespace dbp::ul
