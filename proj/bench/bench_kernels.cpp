// Serial vs OpenMP timings of the per-subcarrier kernels.
#include <benchmark/benchmark.h>

#include "dbp/dl_precode.hpp"
#include "dbp/ul_equalize.hpp"

namespace {

dbp::model::SystemConfig config(int n_sc)
{
    auto cfg = dbp::model::SystemConfig::with_equal_split(32, 4);
    cfg.L = 4;
    cfg.K = 4;
    cfg.n_sc = n_sc;
    cfg.noise_var = 0.1;
    cfg.seed = 7;
    return cfg;
}

void lmmse_objective(benchmark::State& st, dbp::Exec exec)
{
    const auto scene = dbp::ul::random_scene(config(static_cast<int>(st.range(0))), 4);
    for (auto _ : st)
        benchmark::DoNotOptimize(dbp::ul::lmmse_objective(scene, exec));
}

void jcde_bcd(benchmark::State& st, dbp::Exec exec)
{
    const auto scene = dbp::ul::random_scene(config(static_cast<int>(st.range(0))), 4);
    dbp::ul::SolverOptions opt;
    opt.max_iter = 5;
    opt.exec = exec;
    for (auto _ : st)
        benchmark::DoNotOptimize(dbp::ul::jcde_bcd(scene, {4, 4, 4, 4}, opt).trace.size());
}

void dl_wmmse(benchmark::State& st, dbp::Exec exec)
{
    const auto scene = dbp::dl::random_scene(config(static_cast<int>(st.range(0))), 2, 1, 4);
    for (auto _ : st)
        benchmark::DoNotOptimize(dbp::dl::wmmse_precode(scene, 1e-15, 10, exec).trace.size());
}

} // namespace

BENCHMARK_CAPTURE(lmmse_objective, serial, dbp::Exec::serial)->Arg(64)->Arg(256);
BENCHMARK_CAPTURE(lmmse_objective, parallel, dbp::Exec::parallel)->Arg(64)->Arg(256);
BENCHMARK_CAPTURE(jcde_bcd, serial, dbp::Exec::serial)->Arg(16)->Arg(64);
BENCHMARK_CAPTURE(jcde_bcd, parallel, dbp::Exec::parallel)->Arg(16)->Arg(64);
BENCHMARK_CAPTURE(dl_wmmse, serial, dbp::Exec::serial)->Arg(16)->Arg(64);
BENCHMARK_CAPTURE(dl_wmmse, parallel, dbp::Exec::parallel)->Arg(16)->Arg(64);

BENCHMARK_MAIN();
