// Serial vs OpenMP timings for the hot kernels. The second benchmark argument
// selects the backend: 0 serial, 1 parallel.

#include <map>
#include <set>
#include <random>

#include <benchmark/benchmark.h>

#include "newsloc/kernels.hpp"
#include "newsloc/umap.hpp"
#include "newsloc/vectorize.hpp"

using namespace newsloc;
using kernels::Exec;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(1) ? Exec::parallel : Exec::serial; }

Matrix random_points(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    const double shift = (i % 4) * 6.0;
    for (std::size_t d = 0; d < dim; ++d) m(i, d) = g(rng) + shift;
  }
  return m;
}

std::vector<SparseVector> random_documents(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<SparseVector> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::map<std::uint32_t, double> counts;
    for (int t = 0; t < 60; ++t) counts[static_cast<std::uint32_t>((i % 8) * 200 + rng() % 400)] += 1.0;
    SparseVector v;
    for (auto [k, c] : counts) {
      v.indices.push_back(k);
      v.values.push_back(c);
    }
    out.push_back(std::move(v));
  }
  return out;
}

void BM_HellingerKnn(benchmark::State& state) {
  const auto docs = random_documents(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(hellinger_knn(docs, 15, exec_of(state)));
  state.SetComplexityN(state.range(0));
}

void BM_CoreDistances(benchmark::State& state) {
  const auto pts = random_points(static_cast<std::size_t>(state.range(0)), 10, 2);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::core_distances(pts, 10, exec_of(state)));
}

void BM_MutualReachabilityMst(benchmark::State& state) {
  const auto pts = random_points(static_cast<std::size_t>(state.range(0)), 10, 3);
  const auto core = kernels::core_distances(pts, 10, Exec::serial);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::mutual_reachability_mst(pts, core, exec_of(state)));
}

void BM_MinDistanceToGroups(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const auto pts = random_points(n, 10, 4);
  std::vector<std::vector<std::uint32_t>> groups(8);
  for (std::size_t i = 0; i < n; i += 3) groups[i % 8].push_back(static_cast<std::uint32_t>(i));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::min_distance_to_groups(pts, groups, exec_of(state)));
}

void BM_OverlappingPairs(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(5);
  const std::size_t vocab = n * 4;
  std::vector<std::vector<std::uint32_t>> sets(n);
  std::vector<std::vector<std::uint32_t>> postings(vocab);
  for (std::size_t i = 0; i < n; ++i) {
    std::set<std::uint32_t> s;
    // Every tenth document copies most of its predecessor.
    if (i % 10 == 9) {
      for (auto id : sets[i - 1]) {
        if (rng() % 4) s.insert(id);
      }
    }
    while (s.size() < 8) s.insert(static_cast<std::uint32_t>(rng() % vocab));
    sets[i].assign(s.begin(), s.end());
    for (auto id : sets[i]) postings[id].push_back(static_cast<std::uint32_t>(i));
  }
  for (auto _ : state) benchmark::DoNotOptimize(kernels::overlapping_pairs(sets, postings, 0.5, exec_of(state)));
}

void sizes(benchmark::internal::Benchmark* b, std::initializer_list<std::int64_t> ns) {
  for (auto n : ns) {
    b->Args({n, 0});
    b->Args({n, 1});
  }
  b->ArgNames({"n", "omp"})->Unit(benchmark::kMillisecond);
}

}  // namespace

BENCHMARK(BM_HellingerKnn)->Apply([](auto* b) { sizes(b, {500, 2000}); });
BENCHMARK(BM_CoreDistances)->Apply([](auto* b) { sizes(b, {1000, 4000}); });
BENCHMARK(BM_MutualReachabilityMst)->Apply([](auto* b) { sizes(b, {1000, 4000}); });
BENCHMARK(BM_MinDistanceToGroups)->Apply([](auto* b) { sizes(b, {1000, 4000}); });
BENCHMARK(BM_OverlappingPairs)->Apply([](auto* b) { sizes(b, {10000, 50000}); });

BENCHMARK_MAIN();
