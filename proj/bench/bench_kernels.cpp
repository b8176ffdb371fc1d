// Copyright 2026 The xmlops Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Serial reference vs OpenMP kernels on the same inputs.
#include <benchmark/benchmark.h>

#include "xmlops/kernels.hpp"
#include "xmlops/random.hpp"

namespace {

using namespace xmlops;

FeatureMatrix random_rows(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  FeatureMatrix m(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) m(i, j) = rng.normal();
  }
  return m;
}

// Roughly the cost of a small linear predictor.
double linear_score(std::span<const double> x) {
  double s = 0.5;
  for (std::size_t j = 0; j < x.size(); ++j) s += (j % 2 ? -1.0 : 2.0) * x[j];
  return s;
}

double mse(std::span<const double> p, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - y[i]) * (p[i] - y[i]);
  return s / static_cast<double>(p.size());
}

template <bool Parallel>
void BM_EvaluateRows(benchmark::State& state) {
  const auto rows = random_rows(static_cast<std::size_t>(state.range(0)), 16, 1);
  for (auto _ : state) {
    auto out = Parallel ? kernels::evaluate_rows(linear_score, rows) : kernels::serial::evaluate_rows(linear_score, rows);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_SquaredDistances(benchmark::State& state) {
  const auto points = random_rows(static_cast<std::size_t>(state.range(0)), 16, 2);
  const std::vector<double> query(16, 0.25);
  for (auto _ : state) {
    auto out = Parallel ? kernels::squared_distances(query, points) : kernels::serial::squared_distances(query, points);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_HistogramCounts(benchmark::State& state) {
  const auto values = random_rows(static_cast<std::size_t>(state.range(0)), 1, 3).data();
  const std::vector<double> edges{-1.28, -0.84, -0.52, -0.25, 0.0, 0.25, 0.52, 0.84, 1.28};
  for (auto _ : state) {
    auto out = Parallel ? kernels::histogram_counts(edges, values) : kernels::serial::histogram_counts(edges, values);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_PermutedColumnScores(benchmark::State& state) {
  const auto rows = random_rows(static_cast<std::size_t>(state.range(0)), 8, 4);
  std::vector<double> labels(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) labels[i] = linear_score(rows.row(i));
  for (auto _ : state) {
    auto out = Parallel ? kernels::permuted_column_scores(linear_score, rows, labels, mse, 7, 5)
                        : kernels::serial::permuted_column_scores(linear_score, rows, labels, mse, 7, 5);
    benchmark::DoNotOptimize(out.data());
  }
}

BENCHMARK(BM_EvaluateRows<false>)->Name("evaluate_rows/serial")->Range(1 << 10, 1 << 18);
BENCHMARK(BM_EvaluateRows<true>)->Name("evaluate_rows/openmp")->Range(1 << 10, 1 << 18)->UseRealTime();
BENCHMARK(BM_SquaredDistances<false>)->Name("squared_distances/serial")->Range(1 << 10, 1 << 18);
BENCHMARK(BM_SquaredDistances<true>)->Name("squared_distances/openmp")->Range(1 << 10, 1 << 18)->UseRealTime();
BENCHMARK(BM_HistogramCounts<false>)->Name("histogram_counts/serial")->Range(1 << 10, 1 << 20);
BENCHMARK(BM_HistogramCounts<true>)->Name("histogram_counts/openmp")->Range(1 << 10, 1 << 20)->UseRealTime();
BENCHMARK(BM_PermutedColumnScores<false>)->Name("permuted_column_scores/serial")->Range(1 << 10, 1 << 16);
BENCHMARK(BM_PermutedColumnScores<true>)->Name("permuted_column_scores/openmp")->Range(1 << 10, 1 << 16)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
