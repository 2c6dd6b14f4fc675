#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "embgen/clustering.hpp"
#include "embgen/consolidation.hpp"
#include "embgen/diagnostics.hpp"
#include "embgen/metrics.hpp"
#include "embgen/proximity.hpp"

namespace {

std::vector<std::string> random_names(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<std::string> bases(n / 4 + 1);
  for (auto& b : bases) {
    for (std::size_t i = 0, len = 5 + gen() % 10; i < len; ++i) b += static_cast<char>('a' + gen() % 26);
  }
  std::vector<std::string> names(n);
  for (auto& s : names) {
    s = bases[gen() % bases.size()];
    if (gen() % 2) s[gen() % s.size()] = static_cast<char>('a' + gen() % 26);
  }
  return names;
}

embgen::Vectors clustered_unit_vectors(std::size_t n, std::size_t dim, std::size_t centers, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  embgen::Vectors c(centers, std::vector<double>(dim));
  for (auto& v : c) {
    for (double& x : v) x = nd(gen);
  }
  embgen::Vectors out;
  for (std::size_t i = 0; i < n; ++i) {
    auto v = c[i % centers];
    double norm = 0.0;
    for (double& x : v) {
      x += 0.3 * nd(gen);
      norm += x * x;
    }
    for (double& x : v) x /= std::sqrt(norm);
    out.push_back(std::move(v));
  }
  return out;
}

void BM_GroupEntities(benchmark::State& state) {
  const auto names = random_names(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(embgen::group_entities(names, 0.85));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_GroupEntities)->Arg(100)->Arg(1000)->Arg(4000);

void BM_ClusterGroups(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto vectors = clustered_unit_vectors(n, 64, 8, 2);
  std::vector<std::size_t> members(n);
  for (std::size_t i = 0; i < n; ++i) members[i] = i;
  for (auto _ : state) benchmark::DoNotOptimize(embgen::build_cluster_groups(0, members, vectors));
}
BENCHMARK(BM_ClusterGroups)->Arg(200)->Arg(1000);

void BM_KMeansElbow(benchmark::State& state) {
  const auto points = clustered_unit_vectors(static_cast<std::size_t>(state.range(0)), 15, 6, 3);
  embgen::KMeansElbowOptions options;
  options.k_max = 30;
  for (auto _ : state) benchmark::DoNotOptimize(embgen::cluster_kmeans_elbow(points, options));
}
BENCHMARK(BM_KMeansElbow)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_OverlapMetrics(benchmark::State& state) {
  const std::string ref =
      "The Miran Crater recorded seventeen galaxy events linked to the Corvin Telescope during the survey of 1863.";
  const std::string cand = "Miran Crater recorded galaxy events linked to Corvin Telescope observations in 1863.";
  for (auto _ : state) benchmark::DoNotOptimize(embgen::overlap_metrics(cand, ref));
}
BENCHMARK(BM_OverlapMetrics);

void BM_Heterogeneity(benchmark::State& state) {
  const auto vectors = clustered_unit_vectors(static_cast<std::size_t>(state.range(0)), 64, 10, 4);
  for (auto _ : state) benchmark::DoNotOptimize(embgen::heterogeneity_stats(vectors));
}
BENCHMARK(BM_Heterogeneity)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

// The distro libbenchmark_main.a can be LTO bytecode from another compiler release.
BENCHMARK_MAIN();
