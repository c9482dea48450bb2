#include <benchmark/benchmark.h>

#include "nnm/gml.hpp"

namespace {

nnm::MapGraph ring(int n) {
    nnm::MapGraph g;
    std::vector<nnm::NodeId> ids;
    for (int i = 0; i < n; ++i) {
        ids.push_back(g.add_node("node \"" + std::to_string(i) + "\"", "group " + std::to_string(i % 7)));
        g.set_position(ids.back(), {i * 1.5, -i * 0.25});
    }
    for (int i = 0; i < n; ++i) g.connect(ids[i], ids[(i + 1) % n]);
    return g;
}

void BM_ExportGml(benchmark::State& state) {
    nnm::MapGraph g = ring(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(nnm::export_gml(g));
}
BENCHMARK(BM_ExportGml)->Arg(100)->Arg(2000);

void BM_ImportGml(benchmark::State& state) {
    std::string text = nnm::export_gml(ring(static_cast<int>(state.range(0))));
    for (auto _ : state) benchmark::DoNotOptimize(nnm::import_gml(text));
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_ImportGml)->Arg(100)->Arg(2000);

} // namespace

BENCHMARK_MAIN();
