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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xmlops/alerts.hpp"
#include "xmlops/drift.hpp"
#include "xmlops/serving.hpp"

namespace xmlops {

struct DegradationConfig {
  std::optional<std::string> metric;  // default: mse for regression, accuracy for classifiers
  double tolerance = 0.2;
  std::size_t min_resolved = 30;
};

struct ObserveConfig {
  std::size_t performance_window = 200;
  std::size_t drift_window = 200;
  std::size_t drift_every = 50;
  DriftThresholds drift;
  DegradationConfig degradation;
  double explainer_floor = 0.5;
  std::size_t min_explanations = 20;
  std::size_t explainer_window = 200;
  bool retrain_on_drift = false;
  std::size_t new_annotation_threshold = 0;  // 0 disables the trigger
};

enum class Decision { kNoDecision, kHealthy, kDegraded };

struct DegradationDecision {
  Decision status = Decision::kNoDecision;
  std::string metric;
  std::size_t resolved = 0;
  std::optional<double> rolling;
  std::optional<double> reference;
  std::optional<double> threshold;
  std::string reason;
};

// Direction-aware and strict: a lower-is-better metric degrades when
// rolling > ref + tol |ref|, a higher-is-better one when rolling < ref - tol |ref|.
DegradationDecision decide_degradation(const std::string& metric, std::optional<double> rolling,
                                       std::optional<double> reference, std::size_t resolved,
                                       double tolerance, std::size_t min_resolved);

struct PerformanceWindow {
  Id deployment_id;
  std::size_t capacity = 200;
  std::size_t resolved = 0;
  MetricReport rolling;
  std::map<std::string, double> reference;
};

struct DegradationCheck {
  DegradationDecision decision;
  std::optional<Alert> alert;
  std::optional<RetrainTrigger> trigger;
};

struct ExplainerSummary {
  Decision status = Decision::kNoDecision;
  std::size_t count = 0;
  ExplanationQuality means;
  double floor = 0.5;
  std::string reason;
  std::optional<Alert> alert;
};

ExplainerSummary summarize_explainer_quality(const std::vector<ExplanationQuality>& qualities,
                                             double floor, std::size_t min_count);

// Nearest-rank percentile: sorted[ceil(p / 100 * n) - 1].
std::int64_t nearest_rank(const std::vector<std::int64_t>& sorted, double percentile);

struct EndpointMetrics {
  std::string endpoint;
  std::size_t requests = 0;
  std::optional<std::int64_t> p50, p95, p99;
  std::optional<double> throughput_rps;
};

struct RetrainOutcome {
  RetrainTrigger trigger;
  std::optional<DatasetVersion> dataset;
  std::optional<TrainResult> training;
  std::optional<Deployment> deployment;
};

void to_json(Json& j, const DegradationDecision& d);
void to_json(Json& j, const PerformanceWindow& w);
void to_json(Json& j, const ExplainerSummary& s);
void to_json(Json& j, const EndpointMetrics& m);

// Production observation: outcomes, degradation, explainer quality, system
// metrics, retraining triggers.
class Observer {
 public:
  Observer(Store& store, LineageGraph& lineage, DataAdmin& data, Trainer& trainer,
           ModelManager& models, DriftMonitor& drift, AlertBook& alerts, Clock clock,
           ObserveConfig config = {});

  const ObserveConfig& config() const { return config_; }
  void set_config(ObserveConfig config) { config_ = std::move(config); }

  PerformanceWindow record_outcome(const Id& request_id, double label, std::string author);
  std::vector<Outcome> outcomes_for(const Id& request_id) const;
  std::optional<double> resolved_label(const Id& request_id) const;

  PerformanceWindow performance(const Id& deployment_id) const;
  DegradationDecision evaluate_degradation(const Id& deployment_id,
                                           const DegradationConfig& config) const;
  DegradationCheck check_degradation(const Id& deployment_id);
  DegradationCheck check_degradation(const Id& deployment_id, const DegradationConfig& config);

  RetrainTrigger fire_trigger(const Id& deployment_id, TriggerCause cause);
  std::vector<RetrainTrigger> triggers(std::optional<Id> deployment_id = std::nullopt) const;
  RetrainTrigger get_trigger(const Id& trigger_id) const;
  RetrainOutcome retrain(const Id& trigger_id);

  ExplainerSummary monitor_explainers(const Id& deployment_id);

  std::vector<EndpointMetrics> system_metrics() const;

  // Drift cadence hook; evaluates every drift_every records.
  std::optional<DriftReport> after_inference(const Id& deployment_id);
  std::optional<DriftReport> check_drift(const Id& deployment_id);

  // One monitoring pass over every active deployment.
  void monitor_pass();

 private:
  void index_outcomes() const;
  std::string default_metric(const Id& deployment_id) const;

  Store& store_;
  LineageGraph& lineage_;
  DataAdmin& data_;
  Trainer& trainer_;
  ModelManager& models_;
  DriftMonitor& drift_;
  AlertBook& alerts_;
  Clock clock_;
  ObserveConfig config_;
  mutable bool outcomes_indexed_ = false;
  mutable std::map<Id, std::vector<Outcome>> outcomes_;
};

}  // namespace xmlops
