#include <benchmark/benchmark.h>

#include <random>

#include "seqlab/abstraction.hpp"
#include "seqlab/annotation.hpp"
#include "seqlab/dtw.hpp"
#include "seqlab/seqmine.hpp"
#include "seqlab/telemetry.hpp"

using namespace seqlab;
using abstraction::BehaviorState;

namespace {

std::vector<BehaviorState> random_dss(std::mt19937_64& rng, std::size_t len) {
  std::vector<BehaviorState> p;
  while (p.size() < len) {
    const auto s = abstraction::kAllStates[rng() % abstraction::kStateCount];
    if (p.empty() || p.back() != s) p.push_back(s);
  }
  return p;
}

std::vector<abstraction::DssSequence> random_corpus(std::size_t n, std::size_t len, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<abstraction::DssSequence> out;
  for (std::size_t i = 0; i < n; ++i) {
    abstraction::DssSequence d;
    d.match_id = "m";
    d.player_id = "p" + std::to_string(i);
    double t = 0.0;
    for (auto s : random_dss(rng, len)) {
      d.runs.push_back({s, 1, t});
      d.entry_times.push_back(t++);
    }
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace

static void BM_DtwPair(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_dss(rng, n);
  const auto b = random_dss(rng, n);
  for (auto _ : state) benchmark::DoNotOptimize(dtw::dtw_distance(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DtwPair)->RangeMultiplier(4)->Range(16, 1024)->Complexity(benchmark::oNSquared);

static void BM_DtwPairwise150(benchmark::State& state) {
  const auto corpus = random_corpus(150, 60, 2);
  const auto threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(dtw::pairwise_distances(corpus, {}, {}, threads));
}
BENCHMARK(BM_DtwPairwise150)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_MdsEmbed(benchmark::State& state) {
  const auto m = dtw::pairwise_distances(random_corpus(static_cast<std::size_t>(state.range(0)), 40, 3));
  for (auto _ : state) benchmark::DoNotOptimize(dtw::mds_embed(m));
}
BENCHMARK(BM_MdsEmbed)->Arg(50)->Arg(150)->Unit(benchmark::kMillisecond);

static void BM_MineNgrams(benchmark::State& state) {
  seqmine::SequenceCorpus corpus;
  corpus.sequences = random_corpus(150, static_cast<std::size_t>(state.range(0)), 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(seqmine::top_frequent_sequences(corpus, 10));
    benchmark::DoNotOptimize(seqmine::mine_ngrams(corpus, 2, 4, 0.1));
  }
}
BENCHMARK(BM_MineNgrams)->Arg(20)->Arg(100)->Arg(400);

static void BM_AbstractMatch(benchmark::State& state) {
  const auto m = telemetry::generate_synthetic_match({}, 5);
  for (auto _ : state) benchmark::DoNotOptimize(abstraction::abstract_match(m));
}
BENCHMARK(BM_AbstractMatch)->Unit(benchmark::kMillisecond);

static void BM_CohenKappa(benchmark::State& state) {
  std::mt19937_64 rng(6);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<std::string> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = "c" + std::to_string(rng() % 8);
    b[i] = "c" + std::to_string(rng() % 8);
  }
  for (auto _ : state) benchmark::DoNotOptimize(annotation::cohen_kappa(a, b));
}
BENCHMARK(BM_CohenKappa)->Arg(4800)->Arg(100000);

BENCHMARK_MAIN();
