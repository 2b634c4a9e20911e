#include <benchmark/benchmark.h>

#include "crmtext/embeddings.hpp"

using namespace crmtext;

namespace {

Vocabulary zipf_vocab(int tokens) {
    std::vector<TokenizedNote> notes;
    for (int t = 0; t < tokens; ++t) {
        // Rough 1/rank counts so the alias table sees a realistic skew.
        const int count = std::max(1, tokens / (t + 1));
        for (int k = 0; k < count; ++k)
            notes.push_back(TokenizedNote{"n" + std::to_string(t) + "_" + std::to_string(k), "",
                                          LeadLabel::none,
                                          {"tok" + std::to_string(t)}});
    }
    return Vocabulary::build(notes, 1);
}

EmbeddingMatrix random_matrix(const Vocabulary& vocab, int dim, std::uint64_t seed) {
    EmbeddingMatrix m(vocab, dim);
    Rng rng(seed);
    for (double& v : m.target().flat()) v = rng.uniform(-0.5, 0.5);
    for (double& v : m.context().flat()) v = rng.uniform(-0.5, 0.5);
    return m;
}

void BM_SgnsStep(benchmark::State& state) {
    const int dim = static_cast<int>(state.range(0));
    static Vocabulary vocab = zipf_vocab(1000);
    EmbeddingMatrix matrix = random_matrix(vocab, dim, 1);
    NegativeSampler sampler(vocab, 0.75);
    Rng rng(2);
    std::vector<std::int32_t> negs;
    std::vector<std::int32_t> forbidden{2, 3};
    for (auto _ : state) {
        negs.clear();
        sampler.sample(5, forbidden, rng, negs);
        sgns_step(matrix, TrainingPair{2, 3}, negs, 0.025);
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SgnsStep)->Arg(50)->Arg(100)->Arg(300);

void BM_GeneratePairs(benchmark::State& state) {
    Rng rng(3);
    std::vector<std::int32_t> tokens(100);
    for (auto& t : tokens) t = static_cast<std::int32_t>(2 + rng.uniform_index(500));
    for (auto _ : state) benchmark::DoNotOptimize(generate_pairs(tokens, 2));
    state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_GeneratePairs);

void BM_NegativeSampling(benchmark::State& state) {
    static Vocabulary vocab = zipf_vocab(10000);
    NegativeSampler sampler(vocab, 0.75);
    Rng rng(4);
    std::vector<std::int32_t> forbidden{2, 3, 4, 5};
    std::vector<std::int32_t> out;
    for (auto _ : state) {
        out.clear();
        sampler.sample(5, forbidden, rng, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * 5);
}
BENCHMARK(BM_NegativeSampling);

}  // namespace
