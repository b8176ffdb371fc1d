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

#include "xmlops/kernels.hpp"

#include <algorithm>
#include <exception>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "xmlops/random.hpp"

namespace xmlops::kernels {
namespace {

// Captures the first exception thrown inside a parallel region so it can be
// rethrown on the calling thread.
class ExceptionSlot {
 public:
  template <typename F>
  void run(F&& f) noexcept {
    try {
      f();
    } catch (...) {
#pragma omp critical(xmlops_exception_slot)
      {
        if (!error_) error_ = std::current_exception();
      }
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::exception_ptr error_;
};

double permuted_score(const ScoreFn& score, const FeatureMatrix& rows,
                      std::span<const double> labels, const MetricFn& metric,
                      std::uint64_t seed, std::size_t column, int repeat) {
  FeatureMatrix shuffled = rows;
  const auto perm = column_permutation(seed, column, repeat, rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    shuffled(i, column) = rows(perm[i], column);
  }
  std::vector<double> predictions(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    predictions[i] = score(shuffled.row(i));
  }
  return metric(predictions, labels);
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

std::vector<std::size_t> column_permutation(std::uint64_t seed, std::size_t column,
                                            int repeat, std::size_t n) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(derive_seed(seed, column, static_cast<std::uint64_t>(repeat)));
  rng.shuffle(std::span<std::size_t>(perm));
  return perm;
}

std::size_t bin_index(std::span<const double> inner_edges, double value) {
  return static_cast<std::size_t>(
      std::lower_bound(inner_edges.begin(), inner_edges.end(), value) -
      inner_edges.begin());
}

std::vector<double> evaluate_rows(const ScoreFn& score, const FeatureMatrix& rows) {
  const auto n = static_cast<std::ptrdiff_t>(rows.rows());
  std::vector<double> out(rows.rows());
  ExceptionSlot slot;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    slot.run([&] { out[i] = score(rows.row(static_cast<std::size_t>(i))); });
  }
  slot.rethrow();
  return out;
}

std::vector<double> squared_distances(std::span<const double> query,
                                      const FeatureMatrix& points) {
  if (!points.empty() && query.size() != points.cols()) {
    throw_validation("dimension mismatch: query has " + std::to_string(query.size()) +
                     " features, points have " + std::to_string(points.cols()));
  }
  const auto n = static_cast<std::ptrdiff_t>(points.rows());
  const std::size_t d = query.size();
  std::vector<double> out(points.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto row = points.row(static_cast<std::size_t>(i));
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = row[j] - query[j];
      acc += diff * diff;
    }
    out[i] = acc;
  }
  return out;
}

std::vector<std::size_t> histogram_counts(std::span<const double> inner_edges,
                                          std::span<const double> values) {
  const std::size_t bins = inner_edges.size() + 1;
  std::vector<std::size_t> counts(bins, 0);
  const auto n = static_cast<std::ptrdiff_t>(values.size());
#pragma omp parallel
  {
    std::vector<std::size_t> local(bins, 0);
#pragma omp for schedule(static) nowait
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      ++local[bin_index(inner_edges, values[static_cast<std::size_t>(i)])];
    }
#pragma omp critical(xmlops_histogram_merge)
    for (std::size_t b = 0; b < bins; ++b) counts[b] += local[b];
  }
  return counts;
}

std::vector<std::vector<double>> permuted_column_scores(
    const ScoreFn& score, const FeatureMatrix& rows,
    std::span<const double> labels, const MetricFn& metric, std::uint64_t seed,
    int repeats) {
  const std::size_t d = rows.cols();
  std::vector<std::vector<double>> scores(d, std::vector<double>(repeats, 0.0));
  const auto tasks = static_cast<std::ptrdiff_t>(d * static_cast<std::size_t>(repeats));
  ExceptionSlot slot;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t t = 0; t < tasks; ++t) {
    const std::size_t column = static_cast<std::size_t>(t) / repeats;
    const int repeat = static_cast<int>(static_cast<std::size_t>(t) % repeats);
    slot.run([&] {
      scores[column][repeat] =
          permuted_score(score, rows, labels, metric, seed, column, repeat);
    });
  }
  slot.rethrow();
  return scores;
}

namespace serial {

std::vector<double> evaluate_rows(const ScoreFn& score, const FeatureMatrix& rows) {
  std::vector<double> out(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) out[i] = score(rows.row(i));
  return out;
}

std::vector<double> squared_distances(std::span<const double> query,
                                      const FeatureMatrix& points) {
  if (!points.empty() && query.size() != points.cols()) {
    throw_validation("dimension mismatch: query has " + std::to_string(query.size()) +
                     " features, points have " + std::to_string(points.cols()));
  }
  std::vector<double> out(points.rows());
  for (std::size_t i = 0; i < points.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < query.size(); ++j) {
      const double diff = points(i, j) - query[j];
      acc += diff * diff;
    }
    out[i] = acc;
  }
  return out;
}

std::vector<std::size_t> histogram_counts(std::span<const double> inner_edges,
                                          std::span<const double> values) {
  std::vector<std::size_t> counts(inner_edges.size() + 1, 0);
  for (double v : values) {
    std::size_t b = 0;
    while (b < inner_edges.size() && v > inner_edges[b]) ++b;
    ++counts[b];
  }
  return counts;
}

std::vector<std::vector<double>> permuted_column_scores(
    const ScoreFn& score, const FeatureMatrix& rows,
    std::span<const double> labels, const MetricFn& metric, std::uint64_t seed,
    int repeats) {
  std::vector<std::vector<double>> scores(rows.cols(),
                                          std::vector<double>(repeats, 0.0));
  for (std::size_t j = 0; j < rows.cols(); ++j) {
    for (int r = 0; r < repeats; ++r) {
      scores[j][r] = permuted_score(score, rows, labels, metric, seed, j, r);
    }
  }
  return scores;
}

}  // namespace serial
}  // namespace xmlops::kernels
