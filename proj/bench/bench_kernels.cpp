// Serial references against the OpenMP kernels on small but realistic grids.
// Pass --benchmark_filter to pick one pair; jobs follow OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "anneal/closed_solver.hpp"
#include "anneal/ensemble.hpp"
#include "anneal/open_solver.hpp"
#include "anneal/protocols.hpp"

using namespace anneal;

namespace {

std::shared_ptr<const Schedule> dw_schedule() {
    static const auto s = std::make_shared<const Schedule>(builtin_schedule("dw2000q-style"));
    return s;
}

EvolutionSpec closed_spec(double tau) {
    EvolutionSpec s;
    s.schedule = dw_schedule();
    s.qubit.h = 0.25;
    s.tau = tau;
    s.steps = default_closed_steps(*s.schedule, tau);
    return s;
}

ModelConfig stop_config() {
    ModelConfig c;
    c.schedule = dw_schedule();
    c.bath.g2 = 1e-6;
    c.noise.sigma = 0.028;
    c.quadrature_nodes = 9;
    return c;
}

StopGrid stop_grid() {
    std::vector<double> s;
    for (int k = 1; k <= 12; ++k) s.push_back(k / 12.0);
    return StopGrid{s, {0.125, 0.5}, {1e-6}, kDefaultRampDuration, ModelKind::open_noisy};
}

void BM_closed_accumulated(benchmark::State& st) {
    const auto s = closed_spec(5e-6);
    for (auto _ : st) benchmark::DoNotOptimize(evolve_closed(s, 1.0));
}

void BM_closed_reference(benchmark::State& st) {
    const auto s = closed_spec(5e-6);
    for (auto _ : st) benchmark::DoNotOptimize(evolve_closed_reference(s, 1.0));
}

void BM_open_interaction(benchmark::State& st) {
    OpenEvolutionSpec s{closed_spec(1e-6), BathParams{}, 0};
    s.bath.g2 = 1e-6;
    for (auto _ : st) benchmark::DoNotOptimize(evolve_open(s, 1.0));
}

void BM_open_labframe(benchmark::State& st) {
    OpenEvolutionSpec s{closed_spec(1e-6), BathParams{}, 0};
    s.bath.g2 = 1e-6;
    for (auto _ : st) benchmark::DoNotOptimize(evolve_open_labframe(s, 1.0));
}

void BM_mixture_parallel(benchmark::State& st) {
    const auto s = closed_spec(1e-6);
    const NoiseParams n{0.0, 0.028, 64, 1, SamplingScheme::stratified};
    for (auto _ : st) benchmark::DoNotOptimize(run_mixture(s, n, 1.0).p_down);
}

void BM_mixture_serial(benchmark::State& st) {
    const auto s = closed_spec(1e-6);
    const NoiseParams n{0.0, 0.028, 64, 1, SamplingScheme::stratified};
    for (auto _ : st) benchmark::DoNotOptimize(run_mixture_serial(s, n, 1.0).p_down);
}

void BM_h_stop_engine(benchmark::State& st) {
    const auto c = stop_config();
    const auto g = stop_grid();
    for (auto _ : st) benchmark::DoNotOptimize(run_h_stop(g, c).rows.size());
}

void BM_h_stop_reference(benchmark::State& st) {
    const auto c = stop_config();
    const auto g = stop_grid();
    for (auto _ : st) benchmark::DoNotOptimize(run_h_stop_reference(g, c).rows.size());
}

} // namespace

BENCHMARK(BM_closed_accumulated)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_closed_reference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_open_interaction)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_open_labframe)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_mixture_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_mixture_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_h_stop_engine)->Unit(benchmark::kMillisecond)->Iterations(1);
BENCHMARK(BM_h_stop_reference)->Unit(benchmark::kMillisecond)->Iterations(1);

BENCHMARK_MAIN();
