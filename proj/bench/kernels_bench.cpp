// Serial reference vs OpenMP kernels. Run with --benchmark_filter to narrow.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "fanns/corpus.hpp"
#include "fanns/gls.hpp"
#include "fanns/kernels.hpp"

using namespace fanns;

namespace {

const Corpus& corpus() {
  static const Corpus c = generate_synthetic({20000, 64, 7});
  return c;
}

QuerySet queries(std::size_t n) {
  std::mt19937_64 gen(3);
  std::normal_distribution<float> normal(0.0F, 1.0F);
  QuerySet qs;
  qs.dim = corpus().dim();
  qs.data.resize(n * qs.dim);
  for (float& x : qs.data) x = normal(gen);
  return qs;
}

std::vector<float> centroids(std::size_t c) {
  const Corpus& data = corpus();
  std::vector<float> out;
  for (std::size_t i = 0; i < c; ++i) {
    const auto r = data.row(static_cast<RowId>(i * 97 % data.size()));
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

template <auto Fn>
void BM_ComputeKeys(benchmark::State& state) {
  const Corpus& c = corpus();
  const QuerySet q = queries(1);
  std::vector<float> out(c.size());
  for (auto _ : state) {
    Fn(c, q[0], out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.size()));
}

template <auto Fn>
void BM_BatchExactKnn(benchmark::State& state) {
  const Corpus& c = corpus();
  const QuerySet q = queries(32);
  const FilterMask m = build_mask(c, 0.2);
  std::vector<kernels::KnnTask> tasks;
  for (std::size_t i = 0; i < q.size(); ++i) tasks.push_back({i, i % 2 == 0 ? &m : nullptr});
  for (auto _ : state) benchmark::DoNotOptimize(Fn(c, q, 10, tasks));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(tasks.size()));
}

template <auto Fn>
void BM_AssignNearest(benchmark::State& state) {
  const Corpus& c = corpus();
  const auto cents = centroids(141);
  std::vector<std::uint32_t> labels(c.size());
  std::vector<float> dist(c.size());
  for (auto _ : state) {
    Fn(c.vectors(), c.dim(), cents, labels, dist);
    benchmark::DoNotOptimize(labels.data());
  }
}

template <auto Fn>
void BM_AssignByMetric(benchmark::State& state) {
  const Corpus& c = corpus();
  const auto cents = centroids(141);
  std::vector<float> norms(141, 1.0F);
  std::vector<std::uint32_t> labels(c.size());
  for (auto _ : state) {
    Fn(c, cents, norms, labels);
    benchmark::DoNotOptimize(labels.data());
  }
}

template <auto Fn>
void BM_GlsBatch(benchmark::State& state) {
  const Corpus& c = corpus();
  const QuerySet q = queries(16);
  const FilterMask m = build_mask(c, 0.2);
  const std::vector<const FilterMask*> masks{&m};
  for (auto _ : state) benchmark::DoNotOptimize(Fn(c, q, masks, kDefaultNeighborhood));
}

}  // namespace

BENCHMARK(BM_ComputeKeys<kernels::serial::compute_keys>)->Name("compute_keys/serial");
BENCHMARK(BM_ComputeKeys<kernels::parallel::compute_keys>)->Name("compute_keys/parallel");
BENCHMARK(BM_BatchExactKnn<kernels::serial::batch_exact_knn>)->Name("batch_exact_knn/serial");
BENCHMARK(BM_BatchExactKnn<kernels::parallel::batch_exact_knn>)->Name("batch_exact_knn/parallel");
BENCHMARK(BM_AssignNearest<kernels::serial::assign_nearest>)->Name("assign_nearest/serial");
BENCHMARK(BM_AssignNearest<kernels::parallel::assign_nearest>)->Name("assign_nearest/parallel");
BENCHMARK(BM_AssignByMetric<kernels::serial::assign_by_metric>)->Name("assign_by_metric/serial");
BENCHMARK(BM_AssignByMetric<kernels::parallel::assign_by_metric>)->Name("assign_by_metric/parallel");
BENCHMARK(BM_GlsBatch<gls_batch_serial>)->Name("gls_batch/serial");
BENCHMARK(BM_GlsBatch<gls_batch>)->Name("gls_batch/parallel");

BENCHMARK_MAIN();
