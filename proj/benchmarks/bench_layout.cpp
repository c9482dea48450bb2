#include <benchmark/benchmark.h>

#include <random>

#include "nnm/layout.hpp"

namespace {

nnm::MapGraph random_graph(int n, std::uint64_t seed) {
    nnm::MapGraph g;
    std::vector<nnm::NodeId> ids;
    for (int i = 0; i < n; ++i) ids.push_back(g.add_node("n" + std::to_string(i)));
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, n - 1);
    for (int e = 0; e < 2 * n; ++e) {
        int a = pick(rng), b = pick(rng);
        if (a != b) g.connect(ids[a], ids[b]);
    }
    return g;
}

void BM_LayoutStep(benchmark::State& state) {
    nnm::MapGraph g = random_graph(static_cast<int>(state.range(0)), 1);
    auto p = nnm::init_positions(g, 42);
    nnm::LayoutParams params;
    for (auto _ : state) benchmark::DoNotOptimize(nnm::layout_step(g, p, params, 0));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_LayoutStep)->RangeMultiplier(2)->Range(16, 512)->Complexity(benchmark::oNSquared);

void BM_ComputeLayout(benchmark::State& state) {
    nnm::MapGraph g = random_graph(static_cast<int>(state.range(0)), 2);
    nnm::LayoutParams params;
    params.iterations = 100;
    for (auto _ : state) benchmark::DoNotOptimize(nnm::compute_layout(g, params));
}
BENCHMARK(BM_ComputeLayout)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
