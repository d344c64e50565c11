#include <benchmark/benchmark.h>

#include "spamgraph/fixture.hpp"
#include "spamgraph/graph.hpp"

namespace {

using namespace spamgraph;

std::vector<ReviewRecord> corpus(std::size_t reviews) {
  BaseCorpusOptions options;
  options.reviews = reviews;
  options.products = reviews / 40;
  options.users = reviews / 4;
  options.seed = 1;
  return make_base_corpus(options);
}

void BM_BuildReviewGraph(benchmark::State& state) {
  const auto records = corpus(static_cast<std::size_t>(state.range(0)));
  std::size_t edges = 0;
  for (auto _ : state) {
    const auto graph = build_review_graph(records);
    edges = graph.num_entries();
    benchmark::DoNotOptimize(edges);
  }
  state.counters["entries"] = static_cast<double>(edges);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildReviewGraph)->Arg(5000)->Arg(20000)->Arg(86800)->Unit(benchmark::kMillisecond);

void BM_GraphRoundTrip(benchmark::State& state) {
  const auto graph = build_review_graph(corpus(20000));
  for (auto _ : state) {
    const auto bytes = encode_graph(graph);
    benchmark::DoNotOptimize(decode_graph(bytes));
  }
}
BENCHMARK(BM_GraphRoundTrip)->Unit(benchmark::kMillisecond);

}  // namespace
