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

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xmlops/matrix.hpp"
#include "xmlops/types.hpp"

namespace xmlops {

enum class Direction { kLowerIsBetter, kHigherIsBetter };

// Direction and task family of a metric; unknown names are a validation
// error. Covers the built-in suite and registered custom metrics.
Direction metric_direction(std::string_view name);
Task metric_task(std::string_view name);
bool is_known_metric(std::string_view name);
// Built-in then custom metric names reported for a task.
std::vector<std::string> metric_names(Task task);

// True if `candidate` is strictly better than `reference` for this metric.
bool metric_better(std::string_view name, double candidate, double reference);

// Regression: mae, mse, rmse, r2, quantile_loss.
// Binary classification: precision, recall, specificity, f1, accuracy.
// Predicted and true labels for classification must be 0 or 1.
MetricReport compute_metrics(std::span<const double> predictions,
                             std::span<const double> labels, Task task,
                             double tau = 0.5);

// Calinski-Harabasz variance ratio criterion for cluster assignments in
// [0, k). Reported under "vrc".
MetricReport compute_clustering_metrics(const FeatureMatrix& points,
                                        std::span<const int> assignments, int k);

// Scalar value for one named metric; throws if undefined.
double metric_scalar(std::string_view name, std::span<const double> predictions,
                     std::span<const double> labels, double tau = 0.5);

struct CustomMetric {
  std::string name;
  Task task = Task::kRegression;
  Direction direction = Direction::kLowerIsBetter;
  std::function<MetricValue(std::span<const double>, std::span<const double>)> fn;
};

// Adds a metric evaluated by compute_metrics for its task. Re-registering a
// name replaces it; built-in names are reserved.
void register_custom_metric(CustomMetric metric);
void clear_custom_metrics();

}  // namespace xmlops
