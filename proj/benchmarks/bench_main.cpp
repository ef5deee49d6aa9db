#include <benchmark/benchmark.h>

#include "pbitsim/pbit_device.hpp"
#include "pbitsim/pcircuit.hpp"
#include "pbitsim/smtj.hpp"
#include "pbitsim/trace_analysis.hpp"

using namespace pbitsim;

namespace {

smtj::TelegraphTrace trace_of(std::size_t n) {
    const smtj::SmtjParams p;
    return smtj::sample_trajectory(p, p.b_5050, static_cast<double>(n) * 1e-5, 1e-5, 1,
                                   WarningFn{});
}

void BM_SampleTrajectory(benchmark::State& state) {
    const smtj::SmtjParams p;
    const double duration = static_cast<double>(state.range(0)) * 1e-5;
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(smtj::sample_trajectory(p, p.b_5050, duration, 1e-5, seed++,
                                                         WarningFn{}));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SampleTrajectory)->Arg(100'000)->Arg(5'000'000)->Unit(benchmark::kMillisecond);

void BM_ThresholdStates(benchmark::State& state) {
    const auto trace = trace_of(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(analysis::threshold_states(trace));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ThresholdStates)->Arg(5'000'000)->Unit(benchmark::kMillisecond);

void BM_Autocorrelation(benchmark::State& state) {
    const auto trace = trace_of(5'000'000);
    const auto max_lag = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(analysis::autocorrelation(trace.values, max_lag));
    }
}
BENCHMARK(BM_Autocorrelation)->Arg(64)->Arg(2100)->Arg(20'000)->Unit(benchmark::kMillisecond);

void BM_AnalyzeDwell(benchmark::State& state) {
    const auto labeled = analysis::threshold_states(trace_of(5'000'000)).trace;
    for (auto _ : state) {
        benchmark::DoNotOptimize(analysis::analyze_dwell(labeled));
    }
}
BENCHMARK(BM_AnalyzeDwell)->Unit(benchmark::kMillisecond);

void BM_GibbsGate(benchmark::State& state) {
    const auto c = circuit::clamp(circuit::or_gate(2.0), 2, 1);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            circuit::gibbs_run(c, circuit::IdealTanh{}, static_cast<std::size_t>(state.range(0)),
                               1000, seed++));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GibbsGate)->Arg(100'000)->Unit(benchmark::kMillisecond);

void BM_BoltzmannExact(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    circuit::PCircuit c;
    c.n = n;
    c.coupling.assign(n * n, 0.0);
    c.bias.assign(n, 0.1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        c.coupling[i * n + i + 1] = c.coupling[(i + 1) * n + i] = 1.0;
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(circuit::boltzmann_exact(c));
    }
}
BENCHMARK(BM_BoltzmannExact)->Arg(3)->Arg(12)->Unit(benchmark::kMicrosecond);

void BM_TransferCurve(benchmark::State& state) {
    const device::PbitParams p = device::with_calibrated_nmos({});
    const auto grid = device::voltage_grid(0.58, 0.62, 0.002);
    for (auto _ : state) {
        benchmark::DoNotOptimize(device::transfer_curve(p, grid, 500, 0.1, p.smtj.b_5050, 1,
                                                        device::GridSeeding::Shared, WarningFn{}));
    }
}
BENCHMARK(BM_TransferCurve)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
