#include <benchmark/benchmark.h>

#include <random>

#include "nnm/similarity.hpp"

namespace {

std::vector<nnm::Candidate> corpus(std::size_t n) {
    static const char* words[] = {"hold", "fire", "enemy", "duty", "careful", "target", "verify",
                                  "orders", "patrol", "base", "engage", "lawful", "survivors"};
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> pick(0, 12), len(4, 16);
    std::vector<nnm::Candidate> out;
    for (std::size_t i = 0; i < n; ++i) {
        std::string text;
        for (int w = len(rng); w > 0; --w) text += std::string(text.empty() ? "" : " ") + words[pick(rng)];
        out.push_back({static_cast<std::int64_t>(i), text});
    }
    return out;
}

void BM_FindClosest(benchmark::State& state) {
    auto candidates = corpus(static_cast<std::size_t>(state.range(0)));
    nnm::HashedBagEmbedder embedder;
    for (auto _ : state)
        benchmark::DoNotOptimize(nnm::find_closest("hold fire until the target is verified", candidates, embedder, 5));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FindClosest)->Arg(100)->Arg(1000)->Arg(10000);

void BM_Embed(benchmark::State& state) {
    nnm::HashedBagEmbedder embedder;
    std::string text = corpus(1)[0].text;
    for (auto _ : state) benchmark::DoNotOptimize(embedder.embed(text));
}
BENCHMARK(BM_Embed);

} // namespace

BENCHMARK_MAIN();
