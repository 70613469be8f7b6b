#include "dbp/chanest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dbp::chanest {

using fabric::Ledger;
using fabric::MessageClass;
using fabric::Topology;
using model::SystemConfig;
using BoolArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

std::int64_t WindowMask::kept(int dn) const
{
    return keep.at(dn).count();
}

std::int64_t WindowMask::kept_total() const
{
    std::int64_t t = 0;
    for (const auto& k : keep)
        t += k.count();
    return t;
}

DmmseWeights dmmse_weights(const model::PowerProfile& profile, double noise_var)
{
    if (noise_var < 0.0)
        throw DomainError("noise_var must be >= 0");
    if ((profile.values.array() < 0.0).any())
        throw DomainError("power profile has negative entries");
    DmmseWeights w{rmat::Zero(profile.values.rows(), profile.values.cols())};
    for (Eigen::Index c = 0; c < w.values.cols(); ++c)
        for (Eigen::Index r = 0; r < w.values.rows(); ++r) {
            const double R = profile.values(r, c);
            w.values(r, c) = R > 0.0 ? R / (R + noise_var) : 0.0;
        }
    return w;
}

double mse(const cmat& est, const cmat& truth)
{
    require_dims(est.rows() == truth.rows() && est.cols() == truth.cols(), "mse: shape mismatch");
    const double p = truth.squaredNorm();
    if (p == 0.0)
        throw DomainError("mse: truth has zero power");
    return (est - truth).squaredNorm() / p;
}

double squared_error(const std::vector<cmat>& est, const std::vector<cmat>& truth)
{
    require_dims(est.size() == truth.size(), "squared_error: block count mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < est.size(); ++i)
        acc += (est[i] - truth[i]).squaredNorm();
    return acc;
}

std::int64_t window_size(double eta, std::int64_t n)
{
    return static_cast<std::int64_t>(std::floor(eta * static_cast<double>(n) + 1e-9));
}

BoolArray top_k_window(const cmat& X, std::int64_t k, const BoolArray* eligible)
{
    const Eigen::Index rows = X.rows(), cols = X.cols();
    std::vector<std::int64_t> ids;
    ids.reserve(rows * cols);
    // row-major linear ids so that ties resolve to the lowest (row, column)
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            if (!eligible || (*eligible)(r, c))
                ids.push_back(r * cols + c);
    k = std::min<std::int64_t>(k, static_cast<std::int64_t>(ids.size()));
    const auto mag = [&](std::int64_t id) { return std::norm(X(id / cols, id % cols)); };
    std::partial_sort(ids.begin(), ids.begin() + k, ids.end(), [&](std::int64_t a, std::int64_t b) {
        const double ma = mag(a), mb = mag(b);
        if (ma != mb)
            return ma > mb;
        return a < b;
    });
    BoolArray keep = BoolArray::Constant(rows, cols, false);
    for (std::int64_t t = 0; t < k; ++t)
        keep(ids[t] / cols, ids[t] % cols) = true;
    return keep;
}

namespace {

void check_inputs(const SystemConfig& cfg, const std::vector<cmat>& Y, const DmmseWeights& w)
{
    cfg.validate();
    require_dims(static_cast<int>(Y.size()) == cfg.C, "observation count != C");
    for (int i = 0; i < cfg.C; ++i)
        require_dims(Y[i].rows() == cfg.m_sizes[i] && Y[i].cols() == cfg.n_sc,
                     "observation block shape does not match the partition");
    require_dims(w.values.rows() == cfg.M && w.values.cols() == cfg.n_sc, "weight shape != M x n_sc");
}

std::int64_t prod3(std::int64_t a, std::int64_t b, std::int64_t c)
{
    return a * b * c;
}

} // namespace

Estimate centralized_dmmse(const SystemConfig& cfg, const std::vector<cmat>& Y, const DmmseWeights& w)
{
    check_inputs(cfg, Y, w);
    const Topology topo(fabric::TopologyKind::star, cfg.C);
    Estimate out{cmat(), {}, Ledger(topo), {}, std::vector<std::int64_t>(cfg.C, 0), 0};

    for (int i = 0; i < cfg.C; ++i)
        out.ledger.record({i, topo.cn()}, MessageClass::pilot_signal,
                          static_cast<std::int64_t>(cfg.m_sizes[i]) * cfg.n_sc);

    const cmat stacked = model::stack_rows(Y);
    out.angle_delay = w.values.cast<cplx>().cwiseProduct(model::to_angle_delay(stacked));
    out.per_dn = model::split_rows(cfg, model::from_angle_delay(out.angle_delay));
    const std::int64_t M = cfg.M, N = cfg.n_sc;
    out.cn_cmacs = 2 * (prod3(M, M, N) + prod3(M, N, N)) + M * N;
    return out;
}

Estimate age_estimate(const SystemConfig& cfg, const std::vector<cmat>& Y, const DmmseWeights& w,
                      const model::PowerProfile& profile, double eta, fabric::TopologyKind topology)
{
    if (!(eta >= 0.0 && eta <= 1.0))
        throw ConfigError("eta must lie in [0, 1]");
    check_inputs(cfg, Y, w);
    const double s2 = cfg.noise_var;
    const Topology topo(topology, cfg.C);
    Estimate out{cmat(), {}, Ledger(topo), {}, std::vector<std::int64_t>(cfg.C, 0), 0};

    const cmat FM = model::dft_matrix(cfg.M);
    const cmat FN = model::dft_matrix(cfg.n_sc);
    const std::int64_t M = cfg.M, N = cfg.n_sc;

    // antenna/delay power of DN i's bins: |R_i|^2 * R
    std::vector<cmat> ad(cfg.C);
    cmat aggregate = cmat::Zero(cfg.M, cfg.n_sc);
    out.window.keep.resize(cfg.C);
    for (int i = 0; i < cfg.C; ++i) {
        const std::int64_t Mi = cfg.m_sizes[i];
        ad[i] = Y[i] * FN.adjoint();
        out.window.keep[i] = top_k_window(ad[i], window_size(eta, Mi * N));
        const std::int64_t k = out.window.keep[i].count();
        out.ledger.record({i, topo.cn()}, MessageClass::pilot_signal, k);

        const cmat uploaded = out.window.keep[i].select(ad[i], cmat::Zero(Mi, N));
        const cmat slice = FM.middleRows(cfg.offset(i), Mi);
        aggregate.noalias() += slice.adjoint() * uploaded;
        out.dn_cmacs[i] += prod3(Mi, N, N);
        out.cn_cmacs += prod3(M, Mi, N);
    }

    out.angle_delay = w.values.cast<cplx>().cwiseProduct(aggregate);
    out.cn_cmacs += M * N;

    out.per_dn.resize(cfg.C);
    for (int i = 0; i < cfg.C; ++i) {
        const std::int64_t Mi = cfg.m_sizes[i];
        const cmat slice = FM.middleRows(cfg.offset(i), Mi);
        const cmat central = slice * out.angle_delay;
        out.cn_cmacs += prod3(Mi, M, N);
        const std::int64_t k = out.window.keep[i].count();
        out.ledger.record({topo.cn(), i}, MessageClass::csi, k);

        const rmat local_power = slice.cwiseAbs2() * profile.values;
        cmat merged(Mi, N);
        for (Eigen::Index c = 0; c < N; ++c)
            for (Eigen::Index r = 0; r < Mi; ++r) {
                if (out.window.keep[i](r, c)) {
                    merged(r, c) = central(r, c);
                } else {
                    const double p = local_power(r, c);
                    merged(r, c) = p > 0.0 ? (p / (p + s2)) * ad[i](r, c) : cplx{};
                }
            }
        out.dn_cmacs[i] += (Mi * N - k) + prod3(Mi, N, N);
        out.per_dn[i] = merged * FN;
    }
    return out;
}

Estimate eag_estimate(const SystemConfig& cfg, const std::vector<cmat>& Y, const DmmseWeights& w,
                      const model::PowerProfile& profile, double eta, fabric::TopologyKind topology)
{
    if (!(eta >= 0.0 && eta <= 1.0))
        throw ConfigError("eta must lie in [0, 1]");
    check_inputs(cfg, Y, w);
    const double s2 = cfg.noise_var;
    const Topology topo(topology, cfg.C);
    Estimate out{cmat(), {}, Ledger(topo), {}, std::vector<std::int64_t>(cfg.C, 0), 0};

    const cmat FM = model::dft_matrix(cfg.M);
    const cmat FN = model::dft_matrix(cfg.n_sc);
    const std::int64_t M = cfg.M, N = cfg.n_sc;

    std::vector<cmat> X(cfg.C), local(cfg.C), to_global(cfg.C);
    std::vector<cmat> FMi(cfg.C);
    out.window.keep.resize(cfg.C);
    cmat aggregate = cmat::Zero(cfg.M, cfg.n_sc);
    for (int i = 0; i < cfg.C; ++i) {
        const std::int64_t Mi = cfg.m_sizes[i];
        FMi[i] = model::dft_matrix(static_cast<int>(Mi));
        X[i] = FMi[i].adjoint() * Y[i] * FN.adjoint();
        out.dn_cmacs[i] += prod3(Mi, Mi, N) + prod3(Mi, N, N);

        // local angle/delay power: |F_Mi^H R_i|^2 * R
        const cmat slice = FM.middleRows(cfg.offset(i), Mi);
        to_global[i] = slice.adjoint() * FMi[i];  // M x Mi
        const rmat local_power = to_global[i].adjoint().cwiseAbs2() * profile.values;
        const double floor = 1e-12 * std::max(local_power.maxCoeff(), 0.0);

        local[i] = cmat::Zero(Mi, N);
        BoolArray eligible = BoolArray::Constant(Mi, N, false);
        for (Eigen::Index c = 0; c < N; ++c)
            for (Eigen::Index r = 0; r < Mi; ++r) {
                const double p = local_power(r, c);
                if (p > floor) {
                    eligible(r, c) = true;
                    local[i](r, c) = (p / (p + s2)) * X[i](r, c);
                }
            }
        out.dn_cmacs[i] += Mi * N;

        if (cfg.C == 1) {
            // the DN already holds the whole array: local estimation is final
            out.window.keep[i] = BoolArray::Constant(Mi, N, false);
            continue;
        }
        out.window.keep[i] = top_k_window(local[i], window_size(eta, Mi * N), &eligible);
        const std::int64_t k = out.window.keep[i].count();
        out.ledger.record({i, topo.cn()}, MessageClass::pilot_signal, k);
        const cmat uploaded = out.window.keep[i].select(X[i], cmat::Zero(Mi, N));
        aggregate.noalias() += to_global[i] * uploaded;
        out.cn_cmacs += prod3(M, Mi, N) + prod3(Mi, Mi, N);
    }

    out.per_dn.resize(cfg.C);
    if (cfg.C == 1) {
        out.per_dn[0] = FMi[0] * local[0] * FN;
        out.dn_cmacs[0] += prod3(M, M, N) + prod3(M, N, N);
        out.angle_delay = local[0];
        return out;
    }

    out.angle_delay = w.values.cast<cplx>().cwiseProduct(aggregate);
    out.cn_cmacs += M * N;
    for (int i = 0; i < cfg.C; ++i) {
        const std::int64_t Mi = cfg.m_sizes[i];
        const cmat refined = to_global[i].adjoint() * out.angle_delay;
        out.cn_cmacs += prod3(Mi, M, N) + prod3(Mi, Mi, N);
        const std::int64_t k = out.window.keep[i].count();
        out.ledger.record({topo.cn(), i}, MessageClass::csi, k);
        const cmat merged = out.window.keep[i].select(refined, local[i]);
        out.per_dn[i] = FMi[i] * merged * FN;
        out.dn_cmacs[i] += prod3(Mi, Mi, N) + prod3(Mi, N, N);
    }
    return out;
}

} // namespace dbp::chanest
