// Serial reference vs OpenMP kernels. Arg(0) = serial, Arg(1) = OpenMP.

#include <benchmark/benchmark.h>

#include "langchange/abm_demo.hpp"
#include "langchange/dataset.hpp"
#include "langchange/inference.hpp"
#include "langchange/wf_sim.hpp"

using namespace langchange;

namespace {

const Dataset& data() {
    static const Dataset d = load_dataset(LANGCHANGE_BENCH_DATA_DIR);
    return d;
}

// ============================================================================
// Kernels
// ============================================================================

void bm_gof(benchmark::State& state) {
    const auto& d = data();
    const auto p = OriginFixationParams::baseline(6.05e-4, d.wals.at(Article::definite));
    for (auto _ : state) {
        const auto g = state.range(0) ? monte_carlo_gof(d.histories, Article::definite, std::span(&p, 1), 20'000, 1)
                                      : monte_carlo_gof_serial(d.histories, Article::definite, std::span(&p, 1), 20'000, 1);
        benchmark::DoNotOptimize(g.p_value);
    }
    state.SetItemsProcessed(state.iterations() * 20'000);
}

void bm_dataset_likelihood(benchmark::State& state) {
    const auto& d = data();
    std::vector<OriginFixationParams> params;
    for (std::size_t i = 0; i < d.histories.size(); ++i) {
        auto p = OriginFixationParams::baseline(6e-4, d.wals.at(Article::definite));
        p.poisson_limit = false;
        p.mean_fixation = 150.0;
        p.var_fixation = 8000.0;
        params.push_back(p);
    }
    for (auto _ : state) {
        const double v = state.range(0) ? dataset_log_likelihood(d.histories, Article::definite, params)
                                        : dataset_log_likelihood_serial(d.histories, Article::definite, params);
        benchmark::DoNotOptimize(v);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.histories.size()));
}

void bm_wf_batch(benchmark::State& state) {
    SimConfig c;
    c.n = 100;
    c.s = 0.01;
    for (auto _ : state) {
        const auto b = state.range(0) ? run_batch(c, 20'000) : run_batch_serial(c, 20'000);
        benchmark::DoNotOptimize(b.fixed);
    }
    state.SetItemsProcessed(state.iterations() * 20'000);
}

void bm_abm_replicates(benchmark::State& state) {
    DemoParams p;
    p.k_capacity = 300;
    DemoRunOptions o;
    o.duration = 500;
    o.burn_in = 300;
    for (auto _ : state) {
        const auto r = state.range(0) ? run_demo_replicates(p, o, 4) : run_demo_replicates_serial(p, o, 4);
        benchmark::DoNotOptimize(r.size());
    }
    state.SetItemsProcessed(state.iterations() * 4);
}

}  // namespace

BENCHMARK(bm_gof)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(bm_dataset_likelihood)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(bm_wf_batch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(bm_abm_replicates)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
