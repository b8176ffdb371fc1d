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

#include "doctest.h"
#include "oracles.hpp"
#include "xmlops/metrics.hpp"
#include "xmlops/random.hpp"

using namespace xmlops;

namespace {

void check_value(const MetricReport& r, const std::string& name, std::optional<double> want) {
  CAPTURE(name);
  const auto got = r.get(name);
  REQUIRE(got.has_value() == want.has_value());
  if (want) CHECK(oracle::rel_err(*got, *want) <= 1e-9);
}

}  // namespace

TEST_CASE("regression metrics agree with the oracle on random instances") {
  Rng rng(2024);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng.below(200);
    std::vector<double> p(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.normal() * 10;
      p[i] = y[i] + rng.normal();
    }
    const double tau = 0.05 + 0.9 * rng.uniform();
    const MetricReport r = compute_metrics(p, y, Task::kRegression, tau);
    check_value(r, "mae", oracle::mae(p, y));
    check_value(r, "mse", oracle::mse(p, y));
    check_value(r, "rmse", oracle::rmse(p, y));
    check_value(r, "r2", oracle::r2(p, y));
    check_value(r, "quantile_loss", oracle::quantile_loss(p, y, tau));
  }
}

TEST_CASE("classification metrics agree with the oracle on random instances") {
  Rng rng(77);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng.below(60);
    const double bias = rng.uniform();
    std::vector<double> p(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.uniform() < bias ? 1.0 : 0.0;
      p[i] = rng.uniform() < 0.8 ? y[i] : 1.0 - y[i];
    }
    const auto c = oracle::confusion(p, y);
    const MetricReport r = compute_metrics(p, y, Task::kBinaryClassification);
    check_value(r, "precision", oracle::precision(c));
    check_value(r, "recall", oracle::recall(c));
    check_value(r, "specificity", oracle::specificity(c));
    check_value(r, "f1", oracle::f1(c));
    check_value(r, "accuracy", oracle::accuracy(c));
  }
}

TEST_CASE("pinball loss at the median is half the absolute error") {
  const std::vector<double> p{1, 2, 3, 4}, y{2, 2, 5, 0};
  const MetricReport r = compute_metrics(p, y, Task::kRegression, 0.5);
  CHECK(*r.get("quantile_loss") == doctest::Approx(*r.get("mae") / 2).epsilon(1e-12));
}

TEST_CASE("degenerate denominators are reported, never NaN") {
  const std::vector<double> zeros{0, 0, 0};
  const MetricReport r = compute_metrics(zeros, zeros, Task::kBinaryClassification);
  CHECK(r.values.at("precision").reason == "no_positive_predictions");
  CHECK(r.values.at("recall").reason == "no_positive_labels");
  CHECK(r.values.at("f1").reason == "no_positives");
  CHECK(*r.get("specificity") == 1.0);
  CHECK(*r.get("accuracy") == 1.0);

  const std::vector<double> ones{1, 1};
  const MetricReport reg = compute_metrics(ones, ones, Task::kRegression);
  CHECK(reg.values.at("r2").reason == "zero_label_variance");
  CHECK(*reg.get("mse") == 0.0);
  CHECK_THROWS_AS(metric_scalar("r2", ones, ones), Error);
}

TEST_CASE("metric inputs are validated") {
  const std::vector<double> a{1, 0}, b{1};
  CHECK_THROWS_AS(compute_metrics(a, b, Task::kRegression), Error);
  CHECK_THROWS_AS(compute_metrics({}, {}, Task::kRegression), Error);
  const std::vector<double> half{0.5, 1};
  CHECK_THROWS_AS(compute_metrics(half, a, Task::kBinaryClassification), Error);
  CHECK_THROWS_AS(compute_metrics(a, a, Task::kRegression, 1.0), Error);
  CHECK_THROWS_AS(metric_direction("nope"), Error);
}

TEST_CASE("vrc agrees with the oracle") {
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    const int k = 2 + static_cast<int>(rng.below(3));
    const std::size_t n = 10 + rng.below(50);
    std::vector<std::vector<double>> pts;
    std::vector<int> a;
    for (std::size_t i = 0; i < n; ++i) {
      const int c = static_cast<int>(i % k);
      pts.push_back({c * 3.0 + rng.normal(), rng.normal()});
      a.push_back(c);
    }
    const MetricReport r = compute_clustering_metrics(FeatureMatrix::from_rows(pts), a, k);
    check_value(r, "vrc", oracle::vrc(pts, a, k));
  }
  const FeatureMatrix same = FeatureMatrix::from_rows({{1, 1}, {1, 1}, {2, 2}, {2, 2}});
  const std::vector<int> a{0, 0, 1, 1};
  CHECK(compute_clustering_metrics(same, a, 2).values.at("vrc").reason == "zero_within_dispersion");
  const std::vector<int> two{0, 1};
  CHECK(compute_clustering_metrics(FeatureMatrix::from_rows({{0.0}, {1.0}}), two, 2)
            .values.at("vrc").reason == "too_few_points");
}

TEST_CASE("metric directions") {
  CHECK(metric_direction("mse") == Direction::kLowerIsBetter);
  CHECK(metric_direction("f1") == Direction::kHigherIsBetter);
  CHECK(metric_better("mse", 1.0, 2.0));
  CHECK_FALSE(metric_better("r2", 0.5, 0.5));
  CHECK(metric_task("accuracy") == Task::kBinaryClassification);
}

TEST_CASE("custom metrics join the report for their task") {
  clear_custom_metrics();
  register_custom_metric({"max_error", Task::kRegression, Direction::kLowerIsBetter,
                          [](std::span<const double> p, std::span<const double> y) {
                            double m = 0;
                            for (std::size_t i = 0; i < p.size(); ++i) m = std::max(m, std::abs(p[i] - y[i]));
                            return MetricValue::of(m);
                          }});
  const std::vector<double> p{1, 2}, y{1, 5};
  CHECK(*compute_metrics(p, y, Task::kRegression).get("max_error") == 3.0);
  CHECK(is_known_metric("max_error"));
  CHECK_THROWS_AS(register_custom_metric({"mse", Task::kRegression, Direction::kLowerIsBetter,
                                          [](auto, auto) { return MetricValue::of(0); }}),
                  Error);
  clear_custom_metrics();
  CHECK_FALSE(is_known_metric("max_error"));
}
