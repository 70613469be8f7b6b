#include "dbp/wmmse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dbp/linalg.hpp"

namespace dbp::wmmse {

const cmat* Problem::link(int t, int r) const
{
    const cmat& H = channel.at(t).at(r);
    return H.size() == 0 ? nullptr : &H;
}

void Problem::validate() const
{
    require(!tx.empty() && !rx.empty() && !groups.empty(), "WMMSE problem is empty");
    require_dims(channel.size() == tx.size(), "channel needs one row per transmitter");
    for (std::size_t t = 0; t < tx.size(); ++t) {
        require(tx[t].n_ant >= 1, "transmitter needs >= 1 antenna");
        require(tx[t].pool >= 0 && tx[t].pool < static_cast<int>(pool_budget.size()),
                "transmitter pool index out of range");
        require_dims(channel[t].size() == rx.size(), "channel needs one entry per receiver");
        for (std::size_t r = 0; r < rx.size(); ++r) {
            const cmat& H = channel[t][r];
            require_dims(H.size() == 0 || (H.rows() == rx[r].n_ant && H.cols() == tx[t].n_ant),
                         "channel block shape must be rx.n_ant x tx.n_ant");
        }
    }
    for (const auto& r : rx) {
        require_dims(r.noise_cov.rows() == r.n_ant && r.noise_cov.cols() == r.n_ant,
                     "noise covariance must be n_ant x n_ant");
    }
    for (double b : pool_budget)
        require(b > 0.0, "power budget must be > 0");
    std::vector<int> per_diag(tx.size(), 0);
    for (const auto& g : groups) {
        require(g.tx >= 0 && g.tx < static_cast<int>(tx.size()), "group transmitter out of range");
        require(g.rx >= 0 && g.rx < static_cast<int>(rx.size()), "group receiver out of range");
        require(g.n_streams >= 1, "group needs >= 1 stream");
        if (tx[g.tx].diagonal) {
            require(tx[g.tx].n_ant == g.n_streams, "diagonal transmitter needs n_ant == n_streams");
            require(++per_diag[g.tx] == 1, "diagonal transmitter serves exactly one group");
        }
    }
}

namespace {

std::vector<cmat> rx_covariances(const Problem& p, const std::vector<cmat>& Z, Exec exec)
{
    std::vector<cmat> J(p.rx.size());
    for_each_index(exec, static_cast<int>(p.rx.size()), [&](int r) {
        J[r] = p.rx[r].noise_cov;
        for (std::size_t g = 0; g < p.groups.size(); ++g) {
            const cmat* H = p.link(p.groups[g].tx, r);
            if (!H)
                continue;
            const cmat HZ = *H * Z[g];
            J[r].noalias() += HZ * HZ.adjoint();
        }
    });
    return J;
}

cmat signal(const Problem& p, const std::vector<cmat>& Z, int g)
{
    const Group& gr = p.groups[g];
    const cmat* H = p.link(gr.tx, gr.rx);
    if (!H)
        return cmat::Zero(p.rx[gr.rx].n_ant, gr.n_streams);
    return *H * Z[g];
}

} // namespace

std::vector<double> group_rates(const Problem& p, const std::vector<cmat>& Z, Exec exec)
{
    require_dims(Z.size() == p.groups.size(), "one precoder per group required");
    const auto J = rx_covariances(p, Z, exec);
    std::vector<double> out(p.groups.size());
    for_each_index(exec, static_cast<int>(p.groups.size()), [&](int g) {
        const cmat S = signal(p, Z, g);
        const cmat& Jr = J[p.groups[g].rx];
        out[g] = std::max(0.0, linalg::log2det_hpd(Jr) - linalg::log2det_hpd(Jr - S * S.adjoint()));
    });
    return out;
}

std::vector<double> pool_power(const Problem& p, const std::vector<cmat>& Z)
{
    std::vector<double> out(p.pool_budget.size(), 0.0);
    for (std::size_t g = 0; g < p.groups.size(); ++g)
        out[p.tx[p.groups[g].tx].pool] += Z[g].squaredNorm();
    return out;
}

std::vector<cmat> default_init(const Problem& p)
{
    std::vector<int> per_pool(p.pool_budget.size(), 0);
    for (const auto& g : p.groups)
        ++per_pool[p.tx[g.tx].pool];
    std::vector<cmat> Z;
    for (const auto& g : p.groups) {
        const int pool = p.tx[g.tx].pool;
        const double share = p.pool_budget[pool] / per_pool[pool];
        const double amp = std::sqrt(share / g.n_streams);
        const int n = p.tx[g.tx].n_ant;
        if (p.tx[g.tx].diagonal) {
            Z.push_back(amp * cmat::Identity(n, n));
            continue;
        }
        require(g.n_streams <= n, "more streams than transmit antennas");
        const cmat* H = p.link(g.tx, g.rx);
        cmat dirs = H ? cmat(linalg::dominant_row_basis(H->adjoint(), g.n_streams).adjoint())
                      : cmat(cmat::Identity(n, g.n_streams));
        Z.push_back(amp * dirs);
    }
    return Z;
}

double bisect_mu(const std::vector<rvec>& lambda, const std::vector<rvec>& c, double budget)
{
    const auto power = [&](double mu) {
        double acc = 0.0;
        for (std::size_t t = 0; t < lambda.size(); ++t)
            for (Eigen::Index k = 0; k < lambda[t].size(); ++k) {
                if (c[t](k) <= 0.0)
                    continue;
                const double den = std::max(lambda[t](k), 0.0) + mu;
                if (den <= 0.0)
                    return std::numeric_limits<double>::infinity();
                acc += c[t](k) / (den * den);
            }
        return acc;
    };
    if (power(0.0) <= budget)
        return 0.0;
    double total = 0.0;
    for (const auto& ct : c)
        total += ct.sum();
    double lo = 0.0, hi = std::sqrt(total / budget);
    while (power(hi) > budget)
        hi *= 2.0;
    for (int it = 0; it < 400 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (power(mid) > budget)
            lo = mid;
        else
            hi = mid;
    }
    return hi;
}

Result solve(const Problem& p, const Options& opt)
{
    p.validate();
    require(opt.tol > 0.0 && opt.max_iter >= 1, "tol must be > 0 and max_iter >= 1");
    const int G = static_cast<int>(p.groups.size());
    const int T = static_cast<int>(p.tx.size());

    Result res;
    res.Z = opt.initial ? *opt.initial : default_init(p);
    require_dims(static_cast<int>(res.Z.size()) == G, "initial precoders: one per group");
    for (int g = 0; g < G; ++g)
        require_dims(res.Z[g].rows() == p.tx[p.groups[g].tx].n_ant && res.Z[g].cols() == p.groups[g].n_streams,
                     "initial precoder shape mismatch");

    std::vector<std::vector<int>> own(T);
    for (int g = 0; g < G; ++g)
        own[p.groups[g].tx].push_back(g);

    auto rates = group_rates(p, res.Z, opt.exec);
    double current = 0.0;
    for (double r : rates)
        current += r;
    res.trace.push_back(current);

    std::vector<cmat> A(G), W(G), D(G), Phi(G);
    std::vector<cmat> Q(T);
    std::vector<rvec> lam(T), cmass(T);
    for (int it = 1; it <= opt.max_iter; ++it) {
        const auto J = rx_covariances(p, res.Z, opt.exec);
        for_each_index(opt.exec, G, [&](int g) {
            const cmat S = signal(p, res.Z, g);
            A[g] = linalg::hpd_solve(J[p.groups[g].rx], S);
            const cmat E = cmat::Identity(S.cols(), S.cols()) - S.adjoint() * A[g];
            W[g] = linalg::hpd_inverse(E);
        });

        for_each_index(opt.exec, T, [&](int t) {
            const int n = p.tx[t].n_ant;
            cmat B = cmat::Zero(n, n);
            for (int g = 0; g < G; ++g) {
                const cmat* H = p.link(t, p.groups[g].rx);
                if (!H)
                    continue;
                const cmat HA = H->adjoint() * A[g];
                B.noalias() += HA * W[g] * HA.adjoint();
            }
            B = linalg::hermitian_part(B);
            for (int g : own[t]) {
                const cmat* H = p.link(t, p.groups[g].rx);
                D[g] = H ? cmat(H->adjoint() * A[g] * W[g]) : cmat(cmat::Zero(n, p.groups[g].n_streams));
            }
            if (p.tx[t].diagonal) {
                const int g = own[t].front();
                lam[t] = B.diagonal().real();
                cmass[t] = D[g].diagonal().cwiseAbs2();
            } else {
                Eigen::SelfAdjointEigenSolver<cmat> es(B);
                Q[t] = es.eigenvectors();
                lam[t] = es.eigenvalues();
                cmass[t] = rvec::Zero(n);
                for (int g : own[t]) {
                    Phi[g] = Q[t].adjoint() * D[g];
                    cmass[t] += Phi[g].rowwise().squaredNorm();
                }
            }
        });

        std::vector<double> mu(p.pool_budget.size());
        for (std::size_t pool = 0; pool < p.pool_budget.size(); ++pool) {
            std::vector<rvec> l, c;
            for (int t = 0; t < T; ++t)
                if (p.tx[t].pool == static_cast<int>(pool) && !own[t].empty()) {
                    l.push_back(lam[t]);
                    c.push_back(cmass[t]);
                }
            mu[pool] = bisect_mu(l, c, p.pool_budget[pool]);
        }

        for_each_index(opt.exec, T, [&](int t) {
            const double m = mu[p.tx[t].pool];
            rvec inv(lam[t].size());
            for (Eigen::Index k = 0; k < inv.size(); ++k) {
                const double den = std::max(lam[t](k), 0.0) + m;
                inv(k) = den > 0.0 && cmass[t](k) > 0.0 ? 1.0 / den : 0.0;
            }
            if (p.tx[t].diagonal) {
                const int g = own[t].front();
                res.Z[g] = (inv.cast<cplx>().cwiseProduct(D[g].diagonal())).asDiagonal();
                return;
            }
            for (int g : own[t])
                res.Z[g] = Q[t] * (inv.asDiagonal() * Phi[g]);
        });

        rates = group_rates(p, res.Z, opt.exec);
        double next = 0.0;
        for (double r : rates)
            next += r;
        res.trace.push_back(next);
        res.iterations = it;
        const double change = std::abs(next - current);
        current = next;
        if (change <= opt.tol * std::max(1.0, std::abs(next))) {
            res.converged = true;
            break;
        }
    }

    if (opt.fill_power && p.pool_budget.size() == 1) {
        const double used = pool_power(p, res.Z)[0];
        if (used > 0.0 && used < p.pool_budget[0]) {
            const double s = std::sqrt(p.pool_budget[0] / used);
            for (auto& z : res.Z)
                z *= s;
            rates = group_rates(p, res.Z, opt.exec);
        }
    }
    res.rate = rates;
    res.sum_rate = 0.0;
    for (double r : rates)
        res.sum_rate += r;
    return res;
}

} // namespace dbp::wmmse
