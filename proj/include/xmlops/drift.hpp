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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xmlops/alerts.hpp"
#include "xmlops/data_admin.hpp"
#include "xmlops/matrix.hpp"

namespace xmlops {

inline constexpr int kDriftBins = 10;
inline constexpr std::size_t kMinBaselineSamples = 20;
inline constexpr double kPsiFloor = 1e-4;

struct FeatureBaseline {
  // Inner edges e_1 < ... < e_m; bins are (-inf, e_1], (e_1, e_2], ...,
  // (e_m, +inf). Empty for a constant feature (one degenerate bin).
  Vector inner_edges;
  Vector probabilities;
  Vector sorted_values;  // empirical CDF sample
  bool degenerate = false;
};

struct DriftBaseline {
  Id baseline_id;
  Id dataset;
  std::vector<FeatureBaseline> features;
};

struct DriftThresholds {
  double psi_alert = 0.2;
  double ks_alert = 0.3;
};

struct FeatureDrift {
  double psi = 0.0;
  double ks_statistic = 0.0;
};

struct DriftReport {
  Id baseline;
  std::optional<Id> deployment;
  std::vector<FeatureDrift> features;
  std::optional<Timestamp> window_start;
  std::optional<Timestamp> window_end;
  std::size_t window_size = 0;
  DriftThresholds thresholds;
  double epsilon = kPsiFloor;
  DriftVerdict verdict = DriftVerdict::kStable;
};

void to_json(Json& j, const FeatureBaseline& f);
void from_json(const Json& j, FeatureBaseline& f);
void to_json(Json& j, const DriftBaseline& b);
void from_json(const Json& j, DriftBaseline& b);
void to_json(Json& j, const DriftThresholds& t);
void from_json(const Json& j, DriftThresholds& t);
void to_json(Json& j, const DriftReport& r);
void from_json(const Json& j, DriftReport& r);

// Decile histogram: e_k = sorted[ceil(k n / 10) - 1] for k = 1..9, repeated
// edges merged.
FeatureBaseline fit_feature_baseline(std::span<const double> values);
DriftBaseline fit_baseline(const FeatureMatrix& rows, const Id& dataset);

// Bin probabilities of `values` under the baseline's edges.
Vector window_probabilities(const FeatureBaseline& baseline, std::span<const double> values);

// sum (p - q) ln(p / q) with both probabilities floored at epsilon.
double psi_from_probabilities(std::span<const double> p, std::span<const double> q,
                              double epsilon = kPsiFloor);
Vector psi(const DriftBaseline& baseline, const FeatureMatrix& window);

// Two-sample KS statistic over sorted samples by a merged scan.
double ks_two_sample(std::span<const double> sorted_a, std::span<const double> sorted_b);
Vector ks_statistic(const DriftBaseline& baseline, const FeatureMatrix& window);

// Labels are never an input: drift is computed from payloads alone.
DriftReport evaluate_drift(const DriftBaseline& baseline, const FeatureMatrix& window,
                           const DriftThresholds& thresholds = {});

// Persistence and alerting around the pure statistics.
class DriftMonitor {
 public:
  DriftMonitor(Store& store, DataAdmin& data, AlertBook& alerts, Clock clock);

  DriftBaseline fit_baseline(const Id& dataset_id);
  DriftBaseline get_baseline(const Id& baseline_id) const;

  // Evaluates, stores the report as the deployment's latest, and raises a
  // data_drift alert when drifting.
  DriftReport evaluate(const Id& baseline_id, const FeatureMatrix& window,
                       const DriftThresholds& thresholds,
                       const std::optional<Id>& deployment,
                       std::optional<Timestamp> window_start = std::nullopt,
                       std::optional<Timestamp> window_end = std::nullopt);
  std::optional<DriftReport> latest_report(const Id& deployment_id) const;

 private:
  Store& store_;
  DataAdmin& data_;
  AlertBook& alerts_;
  Clock clock_;
};

}  // namespace xmlops
