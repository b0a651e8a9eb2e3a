#include "laborscope/clustering.hpp"
#include "laborscope/factorization.hpp"
#include "laborscope/synth.hpp"
#include "laborscope/topics.hpp"
#include "laborscope/weighting.hpp"

#include <benchmark/benchmark.h>

using namespace laborscope;

namespace {

// Roughly the shape of one OES survey year: metro areas by detailed occupations.
RegionOccupationMatrix corpus_matrix(int regions, int occupations, int topics) {
  SynthSpec spec;
  spec.regions = regions;
  spec.occupations = occupations;
  spec.topics = topics;
  spec.noise_level = 0.1;
  spec.local_occupation_fraction = 0.2;
  const auto c = generate(spec);
  return to_matrix(c.table, spec.first_year);
}

void BM_Tfidf(benchmark::State& state) {
  const auto raw = corpus_matrix(static_cast<int>(state.range(0)), 800, 15);
  for (auto _ : state) benchmark::DoNotOptimize(tfidf(raw));
}
BENCHMARK(BM_Tfidf)->Arg(100)->Arg(380);

void fit_iterations(benchmark::State& state, Solver solver) {
  const auto x = tfidf(corpus_matrix(380, 800, 15));
  FitConfig cfg;
  cfg.k = static_cast<int>(state.range(0));
  cfg.solver = solver;
  cfg.max_iter = 20;
  cfg.tol = 1e-15;
  for (auto _ : state) benchmark::DoNotOptimize(fit(x, cfg));
  state.SetItemsProcessed(state.iterations() * cfg.max_iter);
}

void BM_FitMultiplicative(benchmark::State& state) { fit_iterations(state, Solver::multiplicative_update); }
void BM_FitHals(benchmark::State& state) { fit_iterations(state, Solver::hals); }
BENCHMARK(BM_FitMultiplicative)->Arg(5)->Arg(15)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FitHals)->Arg(5)->Arg(15)->Unit(benchmark::kMillisecond);

void BM_Nndsvd(benchmark::State& state) {
  const auto x = tfidf(corpus_matrix(380, 800, 15)).values;
  for (auto _ : state) benchmark::DoNotOptimize(nndsvd_init(x, 15));
}
BENCHMARK(BM_Nndsvd)->Unit(benchmark::kMillisecond);

std::vector<RegionComposition> compositions(int regions) {
  const auto x = tfidf(corpus_matrix(regions, 400, 15));
  FitConfig cfg;
  cfg.k = 15;
  cfg.max_iter = 30;
  return compose_regions(normalize(fit(x, cfg)));
}

void BM_CosineDistances(benchmark::State& state) {
  const auto comps = compositions(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(cosine_distance_matrix(comps));
}
BENCHMARK(BM_CosineDistances)->Arg(50)->Arg(380);

void BM_Cluster(benchmark::State& state) {
  const auto d = cosine_distance_matrix(compositions(static_cast<int>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(hierarchical_cluster(d, Linkage::average));
}
BENCHMARK(BM_Cluster)->Arg(50)->Arg(380)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
