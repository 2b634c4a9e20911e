#include <benchmark/benchmark.h>

#include "crmtext/simsearch.hpp"

using namespace crmtext;

namespace {

void BM_MostSimilar(benchmark::State& state) {
    const int vocab_size = static_cast<int>(state.range(0));
    std::vector<std::string> tokens{Vocabulary::pad_token(), Vocabulary::unk_token()};
    for (int i = 0; i < vocab_size; ++i) tokens.push_back("w" + std::to_string(i));
    EmbeddingMatrix m(Vocabulary::from_tokens(tokens), 50);
    Rng rng(5);
    for (double& v : m.target().flat()) v = rng.uniform(-1.0, 1.0);

    for (auto _ : state) benchmark::DoNotOptimize(most_similar(m, "w0", 5));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(vocab_size));
}
BENCHMARK(BM_MostSimilar)->Arg(10000)->Arg(73000)->Unit(benchmark::kMillisecond);

}  // namespace
