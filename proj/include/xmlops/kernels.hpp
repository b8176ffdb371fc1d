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

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "xmlops/matrix.hpp"

// Data-parallel inner loops. The default namespace holds the OpenMP
// versions; kernels::serial holds the reference implementations the tests
// compare against. Both produce bit-identical results: every parallel task
// owns its output slot and its own RNG stream.
namespace xmlops::kernels {

using ScoreFn = std::function<double(std::span<const double>)>;
using MetricFn =
    std::function<double(std::span<const double> predictions,
                         std::span<const double> labels)>;

int max_threads();

std::vector<double> evaluate_rows(const ScoreFn& score, const FeatureMatrix& rows);

std::vector<double> squared_distances(std::span<const double> query,
                                      const FeatureMatrix& points);

// counts[b] = #{v : v in bin b}, bins (-inf, e0], (e0, e1], ..., (e_last, inf).
std::vector<std::size_t> histogram_counts(std::span<const double> inner_edges,
                                          std::span<const double> values);

// scores[j][r]: metric after permuting column j with stream (seed, j, r).
std::vector<std::vector<double>> permuted_column_scores(
    const ScoreFn& score, const FeatureMatrix& rows,
    std::span<const double> labels, const MetricFn& metric, std::uint64_t seed,
    int repeats);

// The permutation used for column j, repeat r. Shared by both variants.
std::vector<std::size_t> column_permutation(std::uint64_t seed, std::size_t column,
                                            int repeat, std::size_t n);

std::size_t bin_index(std::span<const double> inner_edges, double value);

namespace serial {

std::vector<double> evaluate_rows(const ScoreFn& score, const FeatureMatrix& rows);
std::vector<double> squared_distances(std::span<const double> query,
                                      const FeatureMatrix& points);
std::vector<std::size_t> histogram_counts(std::span<const double> inner_edges,
                                          std::span<const double> values);
std::vector<std::vector<double>> permuted_column_scores(
    const ScoreFn& score, const FeatureMatrix& rows,
    std::span<const double> labels, const MetricFn& metric, std::uint64_t seed,
    int repeats);

}  // namespace serial
}  // namespace xmlops::kernels
