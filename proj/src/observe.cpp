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

#include "xmlops/observe.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "xmlops/metrics.hpp"
#include "xmlops/random.hpp"

namespace xmlops {
namespace {

constexpr std::string_view kOutcome = "outcome";
constexpr std::string_view kTrigger = "trigger";
constexpr std::int64_t kThroughputWindowMicros = 60LL * 1'000'000;

std::string_view decision_name(Decision d) {
  switch (d) {
    case Decision::kNoDecision: return "no_decision";
    case Decision::kHealthy: return "ok";
    case Decision::kDegraded: return "alert";
  }
  return "?";
}

Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(); }
Json opt(const std::optional<std::int64_t>& v) { return v ? Json(*v) : Json(); }

}  // namespace

void to_json(Json& j, const DegradationDecision& d) {
  j = Json{{"status", std::string(decision_name(d.status))},
           {"metric", d.metric},
           {"resolved", d.resolved},
           {"rolling", opt(d.rolling)},
           {"reference", opt(d.reference)},
           {"threshold", opt(d.threshold)},
           {"reason", d.reason}};
}

void to_json(Json& j, const PerformanceWindow& w) {
  j = Json{{"deployment_id", w.deployment_id},
           {"capacity", w.capacity},
           {"resolved", w.resolved},
           {"rolling", w.rolling},
           {"reference", w.reference}};
}

void to_json(Json& j, const ExplainerSummary& s) {
  j = Json{{"status", std::string(decision_name(s.status))},
           {"count", s.count},
           {"means", s.means},
           {"floor", s.floor},
           {"reason", s.reason},
           {"alert", s.alert ? Json(*s.alert) : Json()}};
}

void to_json(Json& j, const EndpointMetrics& m) {
  j = Json{{"endpoint", m.endpoint},
           {"requests", m.requests},
           {"latency_micros", Json{{"p50", opt(m.p50)}, {"p95", opt(m.p95)}, {"p99", opt(m.p99)}}},
           {"throughput_rps", opt(m.throughput_rps)}};
}

DegradationDecision decide_degradation(const std::string& metric, std::optional<double> rolling,
                                       std::optional<double> reference, std::size_t resolved,
                                       double tolerance, std::size_t min_resolved) {
  DegradationDecision d;
  d.metric = metric;
  d.resolved = resolved;
  d.rolling = rolling;
  d.reference = reference;
  if (resolved < min_resolved) {
    d.reason = "insufficient_data: " + std::to_string(resolved) + " of " +
               std::to_string(min_resolved) + " resolved records";
    return d;
  }
  if (!reference) {
    d.reason = "no_reference_metric";
    return d;
  }
  if (!rolling) {
    d.reason = "rolling_metric_undefined";
    return d;
  }
  const double margin = tolerance * std::abs(*reference);
  if (metric_direction(metric) == Direction::kLowerIsBetter) {
    d.threshold = *reference + margin;
    d.status = *rolling > *d.threshold ? Decision::kDegraded : Decision::kHealthy;
  } else {
    d.threshold = *reference - margin;
    d.status = *rolling < *d.threshold ? Decision::kDegraded : Decision::kHealthy;
  }
  return d;
}

ExplainerSummary summarize_explainer_quality(const std::vector<ExplanationQuality>& qualities,
                                             double floor, std::size_t min_count) {
  ExplainerSummary s;
  s.floor = floor;
  s.count = qualities.size();
  if (qualities.size() < min_count) {
    s.reason = "insufficient_data: " + std::to_string(qualities.size()) + " of " +
               std::to_string(min_count) + " explanations";
    return s;
  }
  for (const auto& q : qualities) {
    s.means.completeness += q.completeness;
    s.means.stability += q.stability;
    s.means.fidelity += q.fidelity;
    s.means.relevance += q.relevance;
  }
  const double n = static_cast<double>(qualities.size());
  s.means.completeness /= n;
  s.means.stability /= n;
  s.means.fidelity /= n;
  s.means.relevance /= n;
  const std::pair<const char*, double> dims[] = {{"completeness", s.means.completeness},
                                                 {"stability", s.means.stability},
                                                 {"fidelity", s.means.fidelity},
                                                 {"relevance", s.means.relevance}};
  s.status = Decision::kHealthy;
  for (const auto& [name, value] : dims) {
    if (value < floor) {
      s.status = Decision::kDegraded;
      if (!s.reason.empty()) s.reason += ", ";
      s.reason += std::string(name) + " below floor";
    }
  }
  return s;
}

std::int64_t nearest_rank(const std::vector<std::int64_t>& sorted, double percentile) {
  if (sorted.empty()) throw_validation("nearest_rank of an empty sample");
  const double n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

Observer::Observer(Store& store, LineageGraph& lineage, DataAdmin& data, Trainer& trainer,
                   ModelManager& models, DriftMonitor& drift, AlertBook& alerts, Clock clock,
                   ObserveConfig config)
    : store_(store),
      lineage_(lineage),
      data_(data),
      trainer_(trainer),
      models_(models),
      drift_(drift),
      alerts_(alerts),
      clock_(std::move(clock)),
      config_(std::move(config)) {}

void Observer::index_outcomes() const {
  if (outcomes_indexed_) return;
  for (const Id& id : store_.list_meta(kOutcome)) {
    Outcome o = store_.get_meta(kOutcome, id)->get<Outcome>();
    outcomes_[o.request_id].push_back(std::move(o));
  }
  for (auto& [_, list] : outcomes_) {
    std::stable_sort(list.begin(), list.end(), [](const Outcome& a, const Outcome& b) {
      return a.created_at.utc_micros() < b.created_at.utc_micros();
    });
  }
  outcomes_indexed_ = true;
}

std::vector<Outcome> Observer::outcomes_for(const Id& request_id) const {
  index_outcomes();
  auto it = outcomes_.find(request_id);
  return it == outcomes_.end() ? std::vector<Outcome>{} : it->second;
}

std::optional<double> Observer::resolved_label(const Id& request_id) const {
  index_outcomes();
  auto it = outcomes_.find(request_id);
  if (it == outcomes_.end() || it->second.empty()) return std::nullopt;
  return it->second.back().label;
}

PerformanceWindow Observer::record_outcome(const Id& request_id, double label,
                                           std::string author) {
  const InferenceRecord& rec = models_.get_record(request_id);
  if (!std::isfinite(label)) throw_validation("label must be finite");
  const ModelVersion served = trainer_.get_model(rec.served_by);
  if (served.task == Task::kBinaryClassification && label != 0.0 && label != 1.0) {
    throw_validation("classification labels must be 0 or 1");
  }
  index_outcomes();
  Outcome o;
  o.request_id = request_id;
  o.label = label;
  o.author = author;
  o.created_at = clock_();
  auto& list = outcomes_[request_id];
  if (!list.empty() && o.created_at.utc_micros() <= list.back().created_at.utc_micros()) {
    o.created_at = list.back().created_at.plus_micros(1);
  }
  Json content = o;
  content.erase("outcome_id");
  o.outcome_id = content_id(content);
  store_.put_meta(kOutcome, o.outcome_id, Json(o));
  lineage_.add_edge(request_id, o.outcome_id, Relation::kFeedbackOn);
  list.push_back(o);
  // The production input becomes a labeled sample for retraining.
  const auto current = data_.latest_label(rec.input);
  if (!current || *current != label) {
    data_.attach_annotation(rec.input, label, author, Origin::kHuman);
  }

  if (config_.new_annotation_threshold > 0 && list.size() == 1) {
    std::size_t resolved = 0;
    for (const auto& r : models_.records(rec.deployment_id)) {
      if (resolved_label(r.request_id)) ++resolved;
    }
    if (resolved % config_.new_annotation_threshold == 0) {
      const Deployment d = models_.get_deployment(rec.deployment_id);
      if (d.status == DeploymentStatus::kActive) {
        fire_trigger(rec.deployment_id, TriggerCause::kNewAnnotations);
      }
    }
  }
  return performance(rec.deployment_id);
}

std::string Observer::default_metric(const Id& deployment_id) const {
  const Deployment d = models_.get_deployment(deployment_id);
  return trainer_.get_model(d.primary_model).task == Task::kBinaryClassification ? "accuracy"
                                                                                  : "mse";
}

PerformanceWindow Observer::performance(const Id& deployment_id) const {
  const Deployment d = models_.get_deployment(deployment_id);
  const ModelVersion primary = trainer_.get_model(d.primary_model);
  PerformanceWindow w;
  w.deployment_id = deployment_id;
  w.capacity = config_.performance_window;
  w.reference = primary.metrics;
  Vector predictions, labels;
  const auto records = models_.records(deployment_id);
  for (auto it = records.rbegin(); it != records.rend() && predictions.size() < w.capacity; ++it) {
    if (auto label = resolved_label(it->request_id)) {
      predictions.push_back(it->output.value);
      labels.push_back(*label);
    }
  }
  std::reverse(predictions.begin(), predictions.end());
  std::reverse(labels.begin(), labels.end());
  w.resolved = predictions.size();
  if (!predictions.empty()) {
    w.rolling = compute_metrics(predictions, labels, primary.task);
  }
  w.rolling.split = SplitName::kTest;
  return w;
}

DegradationDecision Observer::evaluate_degradation(const Id& deployment_id,
                                                   const DegradationConfig& config) const {
  const std::string metric = config.metric.value_or(default_metric(deployment_id));
  if (!is_known_metric(metric)) throw_validation("unknown metric '" + metric + "'");
  const PerformanceWindow w = performance(deployment_id);
  std::optional<double> reference;
  if (auto it = w.reference.find(metric); it != w.reference.end()) reference = it->second;
  return decide_degradation(metric, w.rolling.get(metric), reference, w.resolved, config.tolerance,
                            config.min_resolved);
}

DegradationCheck Observer::check_degradation(const Id& deployment_id) {
  return check_degradation(deployment_id, config_.degradation);
}

DegradationCheck Observer::check_degradation(const Id& deployment_id,
                                             const DegradationConfig& config) {
  DegradationCheck out;
  out.decision = evaluate_degradation(deployment_id, config);
  if (out.decision.status != Decision::kDegraded) return out;
  std::ostringstream msg;
  msg << "rolling " << out.decision.metric << " " << *out.decision.rolling << " worse than reference "
      << *out.decision.reference << " beyond tolerance " << config.tolerance;
  out.alert = alerts_.raise(AlertSource::kPerformance, deployment_id, out.decision.metric,
                            *out.decision.rolling, *out.decision.threshold, msg.str())
                  .first;
  out.trigger = fire_trigger(deployment_id, TriggerCause::kPerformanceDegradation);
  return out;
}

RetrainTrigger Observer::fire_trigger(const Id& deployment_id, TriggerCause cause) {
  models_.get_deployment(deployment_id);
  for (const RetrainTrigger& t : triggers(deployment_id)) {
    if (!t.consumed) return t;  // one pending trigger per deployment
  }
  RetrainTrigger t;
  t.cause = cause;
  t.deployment_id = deployment_id;
  t.fired_at = clock_();
  t.trigger_id = content_id(Json{{"cause", std::string(enum_name(cause))},
                                 {"deployment", deployment_id},
                                 {"fired_at", t.fired_at}});
  store_.put_meta(kTrigger, t.trigger_id, Json(t));
  return t;
}

std::vector<RetrainTrigger> Observer::triggers(std::optional<Id> deployment_id) const {
  std::vector<RetrainTrigger> out;
  for (const Id& id : store_.list_meta(kTrigger)) {
    RetrainTrigger t = store_.get_meta(kTrigger, id)->get<RetrainTrigger>();
    if (deployment_id && t.deployment_id != *deployment_id) continue;
    out.push_back(std::move(t));
  }
  std::sort(out.begin(), out.end(), [](const RetrainTrigger& a, const RetrainTrigger& b) {
    return a.fired_at.utc_micros() < b.fired_at.utc_micros();
  });
  return out;
}

RetrainTrigger Observer::get_trigger(const Id& trigger_id) const {
  auto meta = store_.get_meta(kTrigger, trigger_id);
  if (!meta) throw_not_found("trigger", trigger_id);
  return meta->get<RetrainTrigger>();
}

RetrainOutcome Observer::retrain(const Id& trigger_id) {
  RetrainTrigger trigger = get_trigger(trigger_id);
  if (trigger.consumed) throw_conflict("trigger " + trigger_id + " was already consumed");
  const Deployment d = models_.get_deployment(trigger.deployment_id);
  const ModelVersion incumbent = trainer_.get_model(d.primary_model);
  const TrainingRun old_run = trainer_.get_run(incumbent.training_run);
  const DatasetVersion old_dataset = data_.get_dataset(old_run.dataset);

  std::vector<Id> members;
  std::set<Id> seen;
  for (const Id& id : old_dataset.members) {
    if (!data_.is_excluded(id) && seen.insert(id).second) members.push_back(id);
  }
  // Newly labeled production inputs from every deployment on this endpoint.
  std::size_t added = 0;
  for (const Deployment& other : models_.list_deployments()) {
    if (other.endpoint != d.endpoint) continue;
    for (const InferenceRecord& rec : models_.records(other.deployment_id)) {
      if (!resolved_label(rec.request_id)) continue;
      if (data_.is_excluded(rec.input) || !seen.insert(rec.input).second) continue;
      members.push_back(rec.input);
      ++added;
    }
  }

  RetrainOutcome out;
  trigger.consumed = true;
  if (added == 0) {
    trigger.outcome = "no_op";
    store_.put_meta(kTrigger, trigger.trigger_id, Json(trigger));
    out.trigger = trigger;
    return out;
  }

  DatasetVersion dataset = data_.define_dataset(members, old_dataset.recipe);
  dataset = data_.seal_dataset(dataset.dataset_id);
  lineage_.add_edge(old_dataset.dataset_id, dataset.dataset_id, Relation::kDerivedFrom);

  TrainRequest req;
  req.architecture = old_run.architecture;
  req.dataset = dataset.dataset_id;
  req.split = old_run.split;
  req.hyperparams = old_run.hyperparams;
  req.seed = derive_seed(old_run.seed, seeded_hash64(trigger_id, 0));
  TrainResult trained = trainer_.train(req);
  models_.register_model(trained.model.model_id);

  DeploymentRequest dep;
  dep.endpoint = d.endpoint;
  dep.scheme = Scheme::kShadow;
  dep.primary_model = d.primary_model;
  dep.secondary_model = trained.model.model_id;
  dep.defer_explanations = d.defer_explanations;
  if (d.bound_explainer) {
    ExplainerVersion ev = models_.get_explainer(*d.bound_explainer);
    ev.compatible_models.push_back(trained.model.model_id);
    try {
      dep.explainer = models_.register_explainer(ev).explainer_id;
    } catch (const Error&) {
      dep.explainer = d.bound_explainer;  // still valid for the shadow's primary
    }
  }
  const Deployment shadow = models_.create_deployment(dep);

  trigger.outcome = "retrained";
  trigger.resulting_run = trained.run.run_id;
  trigger.resulting_model = trained.model.model_id;
  trigger.resulting_deployment = shadow.deployment_id;
  store_.put_meta(kTrigger, trigger.trigger_id, Json(trigger));
  out.trigger = trigger;
  out.dataset = dataset;
  out.training = trained;
  out.deployment = shadow;
  return out;
}

ExplainerSummary Observer::monitor_explainers(const Id& deployment_id) {
  const Deployment d = models_.get_deployment(deployment_id);
  if (!d.bound_explainer) {
    ExplainerSummary s;
    s.floor = config_.explainer_floor;
    s.reason = "no_explainer_bound";
    return s;
  }
  std::vector<ExplanationQuality> qualities;
  const auto explanations = models_.deployment_explanations(deployment_id);
  const std::size_t start = explanations.size() > config_.explainer_window
                                ? explanations.size() - config_.explainer_window
                                : 0;
  for (std::size_t i = start; i < explanations.size(); ++i) {
    qualities.push_back(explanations[i].quality);
  }
  ExplainerSummary s =
      summarize_explainer_quality(qualities, config_.explainer_floor, config_.min_explanations);
  if (s.status == Decision::kDegraded) {
    const double worst = std::min({s.means.completeness, s.means.stability, s.means.fidelity,
                                   s.means.relevance});
    s.alert = alerts_.raise(AlertSource::kExplainer, deployment_id, "explanation_quality", worst,
                            config_.explainer_floor, "explainer " + *d.bound_explainer + ": " + s.reason)
                  .first;
  }
  return s;
}

std::vector<EndpointMetrics> Observer::system_metrics() const {
  std::map<std::string, std::vector<InferenceRecord>> by_endpoint;
  for (const Deployment& d : models_.list_deployments()) {
    auto& list = by_endpoint[d.endpoint];
    for (auto& r : models_.records(d.deployment_id)) list.push_back(std::move(r));
  }
  const std::int64_t now = clock_().utc_micros();
  std::vector<EndpointMetrics> out;
  for (auto& [endpoint, recs] : by_endpoint) {
    std::sort(recs.begin(), recs.end(), [](const InferenceRecord& a, const InferenceRecord& b) {
      return a.sequence < b.sequence;
    });
    EndpointMetrics m;
    m.endpoint = endpoint;
    m.requests = recs.size();
    std::vector<std::int64_t> latencies;
    const std::size_t start =
        recs.size() > config_.performance_window ? recs.size() - config_.performance_window : 0;
    for (std::size_t i = start; i < recs.size(); ++i) latencies.push_back(recs[i].latency_micros);
    if (!latencies.empty()) {
      std::sort(latencies.begin(), latencies.end());
      m.p50 = nearest_rank(latencies, 50);
      m.p95 = nearest_rank(latencies, 95);
      m.p99 = nearest_rank(latencies, 99);
      std::size_t recent = 0;
      for (const auto& r : recs) {
        const std::int64_t age = now - r.created_at.utc_micros();
        if (age >= 0 && age < kThroughputWindowMicros) ++recent;
      }
      m.throughput_rps = static_cast<double>(recent) / 60.0;
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::optional<DriftReport> Observer::check_drift(const Id& deployment_id) {
  const Deployment d = models_.get_deployment(deployment_id);
  if (!d.baseline) return std::nullopt;
  const auto records = models_.records(deployment_id);
  if (records.empty()) return std::nullopt;
  const std::size_t start =
      records.size() > config_.drift_window ? records.size() - config_.drift_window : 0;
  std::vector<Id> inputs;
  for (std::size_t i = start; i < records.size(); ++i) inputs.push_back(records[i].input);
  const FeatureMatrix window = data_.materialize(inputs);
  DriftReport report = drift_.evaluate(*d.baseline, window, config_.drift, deployment_id,
                                       records[start].created_at, records.back().created_at);
  if (report.verdict == DriftVerdict::kDrifting && config_.retrain_on_drift &&
      d.status == DeploymentStatus::kActive) {
    fire_trigger(deployment_id, TriggerCause::kDataDrift);
  }
  return report;
}

std::optional<DriftReport> Observer::after_inference(const Id& deployment_id) {
  if (config_.drift_every == 0) return std::nullopt;
  const std::size_t n = models_.record_count(deployment_id);
  if (n == 0 || n % config_.drift_every != 0) return std::nullopt;
  return check_drift(deployment_id);
}

void Observer::monitor_pass() {
  for (const Deployment& d : models_.list_deployments()) {
    if (d.status != DeploymentStatus::kActive) continue;
    if (d.defer_explanations) models_.fill_deferred_explanations(d.deployment_id);
    check_drift(d.deployment_id);
    check_degradation(d.deployment_id);
    monitor_explainers(d.deployment_id);
  }
}

}  // namespace xmlops
