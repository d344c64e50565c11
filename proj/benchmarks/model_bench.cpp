#include <benchmark/benchmark.h>

#include "spamgraph/embedding.hpp"
#include "spamgraph/fixture.hpp"
#include "spamgraph/graph.hpp"
#include "spamgraph/trainer.hpp"

namespace {

using namespace spamgraph;

struct Setup {
  std::vector<ReviewRecord> records;
  std::vector<Label> labels;
  ReviewGraph graph;
  EmbeddingMatrix embeddings;
  SplitAssignment split;
  ModelConfig config;
  ModelParams<float> params;

  explicit Setup(std::size_t reviews) {
    SeparableCorpusOptions options;
    options.reviews = reviews;
    options.products = reviews / 10;
    options.spam_products = reviews / 30;
    records = make_separable_corpus(options);
    for (const auto& r : records) labels.push_back(r.label);
    graph = build_review_graph(records);
    std::vector<std::string> texts;
    for (const auto& r : records) texts.push_back(r.text);
    embeddings = hash_embed(texts, 64, 0);
    split = make_stratified_split(labels, {0.4, 0.2, 0.4}, 0);
    config.emb_dim = 64;
    params = init_params(config, 0);
  }
};

void BM_Forward(benchmark::State& state) {
  const Setup s(static_cast<std::size_t>(state.range(0)));
  const auto risk = build_risk_labels(s.split, s.labels, {}, RiskMode::eval);
  ForwardInputs<float> inputs;
  inputs.embeddings = &s.embeddings;
  inputs.risk = risk;
  inputs.graph = &s.graph;
  for (auto _ : state) benchmark::DoNotOptimize(forward(inputs, s.params, s.config));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(300)->Arg(3000)->Arg(12000)->Unit(benchmark::kMillisecond);

void BM_ForwardBackward(benchmark::State& state) {
  const Setup s(static_cast<std::size_t>(state.range(0)));
  auto batch = s.split.nodes(SplitTag::train);
  batch.resize(std::min<std::size_t>(batch.size(), 256));
  const auto risk = build_risk_labels(s.split, s.labels, batch, RiskMode::train);
  ForwardInputs<float> inputs;
  inputs.embeddings = &s.embeddings;
  inputs.risk = risk;
  inputs.graph = &s.graph;
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_gradients(s.params, s.config, inputs, s.labels, batch));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackward)->Arg(300)->Arg(3000)->Arg(12000)->Unit(benchmark::kMillisecond);

void BM_TrainEpoch(benchmark::State& state) {
  const Setup s(3000);
  TrainData data;
  data.graph = &s.graph;
  data.embeddings = &s.embeddings;
  data.split = &s.split;
  data.labels = s.labels;
  TrainConfig train_config;
  train_config.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train(data, s.config, train_config));
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

}  // namespace
