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

#include "xmlops/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace xmlops {
namespace {

struct BuiltinMetric {
  std::string_view name;
  Task task;
  Direction direction;
};

constexpr BuiltinMetric kBuiltins[] = {
    {"mae", Task::kRegression, Direction::kLowerIsBetter},
    {"mse", Task::kRegression, Direction::kLowerIsBetter},
    {"rmse", Task::kRegression, Direction::kLowerIsBetter},
    {"r2", Task::kRegression, Direction::kHigherIsBetter},
    {"quantile_loss", Task::kRegression, Direction::kLowerIsBetter},
    {"precision", Task::kBinaryClassification, Direction::kHigherIsBetter},
    {"recall", Task::kBinaryClassification, Direction::kHigherIsBetter},
    {"specificity", Task::kBinaryClassification, Direction::kHigherIsBetter},
    {"f1", Task::kBinaryClassification, Direction::kHigherIsBetter},
    {"accuracy", Task::kBinaryClassification, Direction::kHigherIsBetter},
    {"vrc", Task::kClustering, Direction::kHigherIsBetter},
};

std::mutex& custom_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, CustomMetric, std::less<>>& custom_metrics() {
  static std::map<std::string, CustomMetric, std::less<>> metrics;
  return metrics;
}

const BuiltinMetric* find_builtin(std::string_view name) {
  for (const auto& m : kBuiltins) {
    if (m.name == name) return &m;
  }
  return nullptr;
}

void check_lengths(std::span<const double> predictions,
                   std::span<const double> labels) {
  if (predictions.size() != labels.size()) {
    throw_validation("length mismatch: " + std::to_string(predictions.size()) +
                     " predictions vs " + std::to_string(labels.size()) + " labels");
  }
  if (predictions.empty()) throw_validation("metrics need at least one prediction");
}

void check_binary(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (v != 0.0 && v != 1.0) {
      throw_validation(std::string(what) + " must be 0 or 1 for binary classification");
    }
  }
}

MetricValue ratio(double num, double den, const char* reason) {
  if (den == 0.0) return MetricValue::undefined(reason);
  return MetricValue::of(num / den);
}

}  // namespace

Direction metric_direction(std::string_view name) {
  if (const auto* m = find_builtin(name)) return m->direction;
  std::lock_guard lock(custom_mutex());
  auto it = custom_metrics().find(name);
  if (it == custom_metrics().end()) {
    throw_validation("unknown metric '" + std::string(name) + "'");
  }
  return it->second.direction;
}

Task metric_task(std::string_view name) {
  if (const auto* m = find_builtin(name)) return m->task;
  std::lock_guard lock(custom_mutex());
  auto it = custom_metrics().find(name);
  if (it == custom_metrics().end()) {
    throw_validation("unknown metric '" + std::string(name) + "'");
  }
  return it->second.task;
}

bool is_known_metric(std::string_view name) {
  if (find_builtin(name)) return true;
  std::lock_guard lock(custom_mutex());
  return custom_metrics().count(name) > 0;
}

bool metric_better(std::string_view name, double candidate, double reference) {
  return metric_direction(name) == Direction::kLowerIsBetter ? candidate < reference
                                                            : candidate > reference;
}

MetricReport compute_metrics(std::span<const double> predictions,
                             std::span<const double> labels, Task task,
                             double tau) {
  check_lengths(predictions, labels);
  if (!(tau > 0.0 && tau < 1.0)) throw_validation("quantile tau must lie in (0, 1)");
  MetricReport report;
  const double n = static_cast<double>(labels.size());
  if (task == Task::kRegression) {
    double abs_sum = 0.0, sq_sum = 0.0, pinball = 0.0, label_sum = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const double e = labels[i] - predictions[i];
      abs_sum += std::abs(e);
      sq_sum += e * e;
      pinball += std::max(tau * e, (tau - 1.0) * e);
      label_sum += labels[i];
    }
    const double mean = label_sum / n;
    double sst = 0.0;
    for (double y : labels) sst += (y - mean) * (y - mean);
    const double mse = sq_sum / n;
    report.values["mae"] = MetricValue::of(abs_sum / n);
    report.values["mse"] = MetricValue::of(mse);
    report.values["rmse"] = MetricValue::of(std::sqrt(mse));
    report.values["r2"] = sst == 0.0 ? MetricValue::undefined("zero_label_variance")
                                     : MetricValue::of(1.0 - sq_sum / sst);
    report.values["quantile_loss"] = MetricValue::of(pinball / n);
  } else if (task == Task::kBinaryClassification) {
    check_binary(predictions, "predictions");
    check_binary(labels, "labels");
    double tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const bool p = predictions[i] == 1.0;
      const bool y = labels[i] == 1.0;
      tp += p && y;
      fp += p && !y;
      tn += !p && !y;
      fn += !p && y;
    }
    report.values["precision"] = ratio(tp, tp + fp, "no_positive_predictions");
    report.values["recall"] = ratio(tp, tp + fn, "no_positive_labels");
    report.values["specificity"] = ratio(tn, tn + fp, "no_negative_labels");
    report.values["f1"] = ratio(2 * tp, 2 * tp + fp + fn, "no_positives");
    report.values["accuracy"] = MetricValue::of((tp + tn) / n);
  } else {
    throw_validation("clustering metrics need points and assignments");
  }
  std::lock_guard lock(custom_mutex());
  for (const auto& [name, metric] : custom_metrics()) {
    if (metric.task == task) report.values[name] = metric.fn(predictions, labels);
  }
  return report;
}

MetricReport compute_clustering_metrics(const FeatureMatrix& points,
                                        std::span<const int> assignments, int k) {
  if (points.rows() != assignments.size()) {
    throw_validation("length mismatch between points and assignments");
  }
  if (k < 2) throw_validation("clustering metrics need k >= 2");
  if (points.empty()) throw_validation("clustering metrics need at least one point");
  const std::size_t n = points.rows();
  const std::size_t d = points.cols();
  std::vector<std::vector<double>> centroids(k, std::vector<double>(d, 0.0));
  std::vector<double> counts(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = assignments[i];
    if (c < 0 || c >= k) throw_validation("cluster assignment out of range");
    counts[c] += 1.0;
    for (std::size_t j = 0; j < d; ++j) centroids[c][j] += points(i, j);
  }
  const auto overall = points.column_means();
  for (int c = 0; c < k; ++c) {
    if (counts[c] > 0) {
      for (double& v : centroids[c]) v /= counts[c];
    }
  }
  double between = 0.0;
  for (int c = 0; c < k; ++c) {
    double dist = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = centroids[c][j] - overall[j];
      dist += diff * diff;
    }
    between += counts[c] * dist;
  }
  double within = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = points(i, j) - centroids[assignments[i]][j];
      within += diff * diff;
    }
  }
  MetricReport report;
  if (n <= static_cast<std::size_t>(k)) {
    report.values["vrc"] = MetricValue::undefined("too_few_points");
  } else if (within == 0.0) {
    report.values["vrc"] = MetricValue::undefined("zero_within_dispersion");
  } else {
    report.values["vrc"] = MetricValue::of(
        (between / (k - 1)) / (within / static_cast<double>(n - k)));
  }
  return report;
}

std::vector<std::string> metric_names(Task task) {
  std::vector<std::string> out;
  for (const auto& m : kBuiltins) {
    if (m.task == task) out.emplace_back(m.name);
  }
  std::lock_guard lock(custom_mutex());
  for (const auto& [name, m] : custom_metrics()) {
    if (m.task == task) out.push_back(name);
  }
  return out;
}

double metric_scalar(std::string_view name, std::span<const double> predictions,
                     std::span<const double> labels, double tau) {
  const Task task = metric_task(name);
  const MetricReport report = compute_metrics(predictions, labels, task, tau);
  auto it = report.values.find(std::string(name));
  if (it == report.values.end() || !it->second.value) {
    throw_precondition("metric '" + std::string(name) + "' is undefined: " +
                       (it == report.values.end() ? "not computed" : it->second.reason));
  }
  return *it->second.value;
}

void register_custom_metric(CustomMetric metric) {
  if (find_builtin(metric.name)) {
    throw_validation("metric name '" + metric.name + "' is reserved");
  }
  if (!metric.fn) throw_validation("custom metric needs a function");
  if (metric.task == Task::kClustering) {
    throw_validation("custom metrics are supported for regression and classification");
  }
  std::lock_guard lock(custom_mutex());
  const std::string name = metric.name;
  custom_metrics()[name] = std::move(metric);
}

void clear_custom_metrics() {
  std::lock_guard lock(custom_mutex());
  custom_metrics().clear();
}

}  // namespace xmlops
