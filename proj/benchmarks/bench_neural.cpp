#include <benchmark/benchmark.h>

#include "crmtext/neural.hpp"

using namespace crmtext;

namespace {

// Production-shaped model: input length 100, 50-dim vectors, 64 hidden nodes.
ModelConfig bench_config(int classes) {
    ModelConfig cfg;
    cfg.vocab_size = 5000;
    cfg.embed_dim = 50;
    cfg.hidden = 64;
    cfg.dense = 256;
    cfg.classes = classes;
    cfg.train_embedding = false;
    cfg.seed = 7;
    return cfg;
}

Batch random_batch(const ModelConfig& cfg, std::size_t rows, std::size_t len, std::uint64_t seed) {
    Rng rng(seed);
    Batch batch;
    batch.num_rows = rows;
    batch.seq_len = len;
    batch.ids.resize(rows * len);
    for (auto& id : batch.ids)
        id = static_cast<std::int32_t>(rng.uniform_index(static_cast<std::size_t>(cfg.vocab_size)));
    batch.labels.resize(rows);
    const int label_space = cfg.head() == HeadType::sigmoid ? 2 : cfg.classes;
    for (auto& label : batch.labels)
        label = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(label_space)));
    return batch;
}

void BM_ForwardScores(benchmark::State& state) {
    static ClassifierModel model = ClassifierModel::init(bench_config(1));
    static Batch batch = random_batch(model.cfg, 1, 100, 8);
    for (auto _ : state) benchmark::DoNotOptimize(forward_scores(model, batch.row(0)));
    state.SetItemsProcessed(state.iterations() * 100);  // timesteps
}
BENCHMARK(BM_ForwardScores);

void BM_BackwardBatch(benchmark::State& state) {
    static ClassifierModel model = ClassifierModel::init(bench_config(14));
    static Batch batch = random_batch(model.cfg, 16, 100, 9);
    for (auto _ : state) benchmark::DoNotOptimize(backward(model, batch));
    state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_BackwardBatch)->Unit(benchmark::kMillisecond);

void BM_AdamStep(benchmark::State& state) {
    ClassifierModel model = ClassifierModel::init(bench_config(14));
    Gradients grads = ParamTensors::shaped(model.cfg);
    Rng rng(10);
    grads.for_each([&](const std::string&, Matrix& m) {
        for (double& v : m.flat()) v = rng.uniform(-0.01, 0.01);
    });
    AdamState adam(model.cfg);
    for (auto _ : state) adam.step(model.params, grads);
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_AdamStep)->Unit(benchmark::kMillisecond);

}  // namespace
