#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "mathkg/corpus.hpp"
#include "mathkg/embed.hpp"
#include "mathkg/graphstore.hpp"
#include "mathkg/random.hpp"
#include "mathkg/tagger.hpp"

using namespace mathkg;

namespace {

std::string node_id(std::size_t i) { return "e" + std::to_string(i); }

KnowledgeGraph random_graph(std::size_t nodes, std::size_t edges, std::uint64_t seed) {
  Rng rng(seed);
  KnowledgeGraph g;
  for (std::size_t i = 0; i < nodes; ++i) {
    KnowledgeEntity e;
    e.id = node_id(i);
    e.names = {e.id};
    g.add_entity(e);
  }
  for (std::size_t k = 0; k < edges; ++k) {
    const auto a = rng.uniform_index(nodes);
    const auto b = rng.uniform_index(nodes);
    if (a == b) continue;
    g.add_triple({node_id(a), kAllRelations[rng.uniform_index(6)], node_id(b), 0.9, Provenance::Manual});
  }
  return g;
}

void BM_Viterbi(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  std::vector<TagScores> em(n);
  for (auto& row : em) {
    for (auto& v : row) v = rng.uniform(-1.0, 1.0);
  }
  TransitionMatrix trans{};
  for (auto& row : trans) {
    for (auto& v : row) v = rng.uniform(-1.0, 1.0);
  }
  TagScores start{};
  for (auto _ : state) benchmark::DoNotOptimize(viterbi(em, trans, start));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Viterbi)->Arg(10)->Arg(40)->Arg(160);

void BM_TransEEpoch(benchmark::State& state) {
  const auto g = random_graph(static_cast<std::size_t>(state.range(0)), 4 * state.range(0), 7);
  TransEOptions opts;
  opts.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train_transe(g, opts));
  state.counters["triples"] = static_cast<double>(g.num_triples());
}
BENCHMARK(BM_TransEEpoch)->Arg(100)->Arg(1000);

void BM_KHop(benchmark::State& state) {
  const auto g = random_graph(2000, 6000, 11);
  const std::vector<std::string> seeds = {node_id(0)};
  const auto k = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(k_hop_subgraph(g, seeds, k));
}
BENCHMARK(BM_KHop)->Arg(1)->Arg(2)->Arg(3);

void BM_Tokenize(benchmark::State& state) {
  const std::string sentence =
      "In a right triangle, the Pythagorean theorem relates the hypotenuse c to the legs a and b; "
      "勾股定理 is the same result, and 3, 4, 5 is the smallest example.";
  for (auto _ : state) benchmark::DoNotOptimize(tokenize(sentence));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(sentence.size()));
}
BENCHMARK(BM_Tokenize);

}  // namespace
BENCHMARK_MAIN();
