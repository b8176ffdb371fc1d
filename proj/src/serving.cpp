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

#include "xmlops/serving.hpp"

#include <algorithm>
#include <chrono>

#include "xmlops/metrics.hpp"
#include "xmlops/random.hpp"

namespace xmlops {
namespace {

constexpr std::string_view kRegistry = "registry";
constexpr std::string_view kExplainer = "explainer";
constexpr std::string_view kDeployment = "deployment";
constexpr std::string_view kExplanation = "explanation";
constexpr std::string_view kRequestExplanation = "request_explanation";
constexpr std::string_view kInferenceLog = "inference";

// Distinct salts keep canary and A/B assignments independent for one seed.
constexpr std::uint64_t kCanarySalt = 0x63616e617279ULL;
constexpr std::uint64_t kAbSalt = 0x61625f73706c6974ULL;

bool needs_secondary(Scheme s) { return s != Scheme::kSingle; }
bool needs_fraction(Scheme s) { return s == Scheme::kCanary || s == Scheme::kAb; }

}  // namespace

bool routes_to_secondary(const Deployment& d, std::string_view request_key) {
  if (!needs_fraction(d.scheme) || !d.secondary_model || !d.traffic_fraction) return false;
  const std::uint64_t salt = d.scheme == Scheme::kCanary ? kCanarySalt : kAbSalt;
  return unit_interval(seeded_hash64(request_key, d.routing_seed ^ salt)) < *d.traffic_fraction;
}

ModelManager::ModelManager(Store& store, LineageGraph& lineage, DataAdmin& data, Trainer& trainer,
                           DriftMonitor& drift, Clock clock)
    : store_(store),
      lineage_(lineage),
      data_(data),
      trainer_(trainer),
      drift_(drift),
      clock_(std::move(clock)) {
  load_log();
}

void ModelManager::load_log() {
  const auto& raw = store_.log(kInferenceLog).records();
  log_.clear();
  log_.reserve(raw.size());
  for (const std::string& r : raw) {
    InferenceRecord rec = Json::parse(r).get<InferenceRecord>();
    const std::size_t index = log_.size();
    by_request_[rec.request_id] = index;
    by_deployment_[rec.deployment_id].push_back(index);
    log_.push_back(std::move(rec));
  }
}

RegistryEntry ModelManager::register_model(const Id& model_id) {
  if (auto existing = registry_entry(model_id)) return *existing;
  const ModelVersion mv = trainer_.get_model(model_id);
  const TrainingRun run = trainer_.get_run(mv.training_run);
  if (run.produced_model != model_id) {
    throw_precondition("training run " + run.run_id + " did not produce model " + model_id);
  }
  if (mv.metrics.empty()) throw_precondition("model " + model_id + " has no metrics");
  if (!store_.has_blob(mv.artifact)) throw_internal("artifact blob missing for model " + model_id);
  RegistryEntry entry{model_id, store_.list_meta(kRegistry).size() + 1, clock_()};
  store_.put_meta(kRegistry, model_id, Json(entry));
  return entry;
}

std::optional<RegistryEntry> ModelManager::registry_entry(const Id& model_id) const {
  auto meta = store_.get_meta(kRegistry, model_id);
  if (!meta) return std::nullopt;
  return meta->get<RegistryEntry>();
}

std::vector<RegistryEntry> ModelManager::registry() const {
  std::vector<RegistryEntry> out;
  for (const Id& id : store_.list_meta(kRegistry)) out.push_back(*registry_entry(id));
  std::sort(out.begin(), out.end(),
            [](const RegistryEntry& a, const RegistryEntry& b) { return a.sequence < b.sequence; });
  return out;
}

void ModelManager::check_explainer_compatible(const ExplainerVersion& ev, const Id& model_id) const {
  if (std::find(ev.compatible_models.begin(), ev.compatible_models.end(), model_id) ==
      ev.compatible_models.end()) {
    throw_validation("explainer " + ev.explainer_id + " is not registered as compatible with model " +
                     model_id);
  }
  const ModelVersion mv = trainer_.get_model(model_id);
  if (ev.method == ExplainMethod::kLinearExact && mv.architecture == Architecture::kKnn) {
    throw_validation("linear_exact cannot explain knn model " + model_id);
  }
  if (ev.method == ExplainMethod::kCounterfactual && mv.task != Task::kBinaryClassification) {
    throw_validation("counterfactual needs a binary classifier; model " + model_id + " is " +
                     std::string(enum_name(mv.task)));
  }
  if (ev.method == ExplainMethod::kPermutationImportance && ev.config.contains("metric") &&
      metric_task(ev.config["metric"].get<std::string>()) != mv.task) {
    throw_validation("metric " + ev.config["metric"].get<std::string>() +
                     " does not apply to model " + model_id);
  }
}

ExplainerVersion ModelManager::register_explainer(ExplainerVersion ev) {
  ev.config = normalize_explainer_config(ev.method, ev.config);
  if (ev.compatible_models.empty()) throw_validation("explainer needs at least one compatible model");
  std::sort(ev.compatible_models.begin(), ev.compatible_models.end());
  ev.compatible_models.erase(std::unique(ev.compatible_models.begin(), ev.compatible_models.end()),
                             ev.compatible_models.end());
  for (const Id& m : ev.compatible_models) {
    if (!trainer_.has_model(m)) throw_not_found("model", m);
  }
  ev.explainer_id = content_id(ev.content());
  for (const Id& m : ev.compatible_models) check_explainer_compatible(ev, m);
  if (!store_.has_meta(kExplainer, ev.explainer_id)) {
    store_.put_meta(kExplainer, ev.explainer_id, Json(ev));
  }
  for (const Id& m : ev.compatible_models) lineage_.add_edge(m, ev.explainer_id, Relation::kExplains);
  return ev;
}

ExplainerVersion ModelManager::get_explainer(const Id& explainer_id) const {
  auto meta = store_.get_meta(kExplainer, explainer_id);
  if (!meta) throw_not_found("explainer", explainer_id);
  return meta->get<ExplainerVersion>();
}

std::vector<ExplainerVersion> ModelManager::list_explainers() const {
  std::vector<ExplainerVersion> out;
  for (const Id& id : store_.list_meta(kExplainer)) out.push_back(get_explainer(id));
  return out;
}

void ModelManager::set_stage(const Id& model_id, ModelStage stage) {
  ModelVersion mv = trainer_.get_model(model_id);
  if (mv.stage == stage) return;
  mv.stage = stage;
  trainer_.put_model(mv);
}

Deployment ModelManager::create_deployment(const DeploymentRequest& req) {
  if (req.endpoint.empty()) throw_validation("endpoint name must not be empty");
  if (req.primary_model.empty()) throw_validation("primary_model is required");
  if (needs_secondary(req.scheme) && !req.secondary_model) {
    throw_validation(std::string(enum_name(req.scheme)) + " deployment requires secondary_model");
  }
  if (!needs_secondary(req.scheme) && req.secondary_model) {
    throw_validation("single deployment must not set secondary_model");
  }
  if (needs_fraction(req.scheme)) {
    if (!req.traffic_fraction) {
      throw_validation(std::string(enum_name(req.scheme)) + " deployment requires traffic_fraction");
    }
    if (!(*req.traffic_fraction >= 0.0 && *req.traffic_fraction <= 1.0)) {
      throw_validation("traffic_fraction must lie in [0, 1]");
    }
  } else if (req.scheme == Scheme::kSingle && req.traffic_fraction) {
    throw_validation("single deployment must not set traffic_fraction");
  }
  if (req.secondary_model && *req.secondary_model == req.primary_model) {
    throw_validation("secondary_model must differ from primary_model");
  }

  std::vector<Id> models = {req.primary_model};
  if (req.secondary_model) models.push_back(*req.secondary_model);
  for (const Id& m : models) {
    if (!trainer_.has_model(m)) throw_not_found("model", m);
    if (!registry_entry(m)) throw_precondition("model " + m + " is not registered");
    if (trainer_.get_model(m).metrics.empty()) throw_precondition("model " + m + " has no metrics");
  }
  const ModelVersion primary = trainer_.get_model(req.primary_model);
  if (req.secondary_model) {
    const ModelVersion secondary = trainer_.get_model(*req.secondary_model);
    if (secondary.dimension != primary.dimension || secondary.task != primary.task) {
      throw_validation("primary and secondary models differ in dimension or task");
    }
  }
  if (req.explainer) {
    const ExplainerVersion ev = get_explainer(*req.explainer);
    if (ev.method == ExplainMethod::kPermutationImportance) {
      throw_validation("permutation_importance is a global explainer and cannot be bound to a deployment");
    }
    check_explainer_compatible(ev, req.primary_model);
    if (needs_fraction(req.scheme)) check_explainer_compatible(ev, *req.secondary_model);
  }

  Deployment d;
  d.endpoint = req.endpoint;
  d.scheme = req.scheme;
  d.primary_model = req.primary_model;
  d.secondary_model = req.secondary_model;
  if (needs_fraction(req.scheme)) d.traffic_fraction = req.traffic_fraction;
  d.bound_explainer = req.explainer;
  d.defer_explanations = req.defer_explanations;
  d.promoted_from = req.promoted_from;
  d.created_at = clock_();
  d.routing_seed = req.routing_seed.value_or(
      seeded_hash64(req.endpoint, static_cast<std::uint64_t>(d.created_at.utc_micros())));

  const Id dataset = trainer_.get_run(primary.training_run).dataset;
  if (data_.get_dataset(dataset).members.size() >= kMinBaselineSamples) {
    d.baseline = drift_.fit_baseline(dataset).baseline_id;
  }
  Json content = d;
  content.erase("deployment_id");
  content.erase("status");
  d.deployment_id = content_id(content);

  if (auto previous = active_for_endpoint(d.endpoint)) {
    previous->status = DeploymentStatus::kRetired;
    store_.put_meta(kDeployment, previous->deployment_id, Json(*previous));
  }
  store_.put_meta(kDeployment, d.deployment_id, Json(d));
  for (const Id& m : models) {
    lineage_.add_edge(m, d.deployment_id, Relation::kDeployedAs);
    set_stage(m, ModelStage::kDeployed);
  }
  return d;
}

Deployment ModelManager::get_deployment(const Id& deployment_id) const {
  auto meta = store_.get_meta(kDeployment, deployment_id);
  if (!meta) throw_not_found("deployment", deployment_id);
  return meta->get<Deployment>();
}

std::vector<Deployment> ModelManager::list_deployments() const {
  std::vector<Deployment> out;
  for (const Id& id : store_.list_meta(kDeployment)) out.push_back(get_deployment(id));
  std::sort(out.begin(), out.end(), [](const Deployment& a, const Deployment& b) {
    return a.created_at.utc_micros() < b.created_at.utc_micros();
  });
  return out;
}

std::optional<Deployment> ModelManager::active_for_endpoint(const std::string& endpoint) const {
  for (const Id& id : store_.list_meta(kDeployment)) {
    Deployment d = get_deployment(id);
    if (d.endpoint == endpoint && d.status == DeploymentStatus::kActive) return d;
  }
  return std::nullopt;
}

Deployment ModelManager::promote(const Id& deployment_id) {
  const Deployment old = get_deployment(deployment_id);
  if (old.scheme == Scheme::kSingle) {
    throw_precondition("deployment " + deployment_id + " uses the single scheme; nothing to promote");
  }
  if (old.status != DeploymentStatus::kActive) {
    throw_precondition("deployment " + deployment_id + " is retired");
  }
  DeploymentRequest req;
  req.endpoint = old.endpoint;
  req.scheme = Scheme::kSingle;
  req.primary_model = *old.secondary_model;
  req.defer_explanations = old.defer_explanations;
  if (old.bound_explainer) {
    const ExplainerVersion ev = get_explainer(*old.bound_explainer);
    if (std::find(ev.compatible_models.begin(), ev.compatible_models.end(), req.primary_model) !=
        ev.compatible_models.end()) {
      req.explainer = ev.explainer_id;
    }
  }
  req.promoted_from = old.deployment_id;
  Deployment next = create_deployment(req);
  lineage_.add_edge(old.deployment_id, next.deployment_id, Relation::kDerivedFrom);

  bool still_served = false;
  for (const Deployment& d : list_deployments()) {
    if (d.status != DeploymentStatus::kActive) continue;
    still_served = still_served || d.primary_model == old.primary_model ||
                   (d.secondary_model && *d.secondary_model == old.primary_model);
  }
  if (!still_served) set_stage(old.primary_model, ModelStage::kArchived);
  return next;
}

Explanation ModelManager::make_explanation(const ExplainerVersion& ev, const Id& model_id,
                                           const Vector& payload, const Id& input,
                                           std::optional<Id> request_id,
                                           std::optional<Id> deployment,
                                           std::optional<Id> dataset) {
  const ModelVersion mv = trainer_.get_model(model_id);
  const auto predictor = trainer_.predictor(model_id);
  if (!dataset) {
    if (ev.config.contains("dataset")) {
      dataset = ev.config["dataset"].get<std::string>();
    } else {
      dataset = trainer_.get_run(mv.training_run).dataset;
    }
  }
  ExplainInputs inputs;
  FeatureMatrix reference;
  Vector labels;
  if (ev.method == ExplainMethod::kPermutationImportance) {
    const DatasetVersion ds = data_.get_dataset(*dataset);
    if (!ds.sealed) throw_precondition("permutation_importance needs a sealed dataset");
    reference = data_.materialize(ds.members);
    labels = trainer_.labels_for(ds.members);
    inputs.data = &reference;
    inputs.labels = &labels;
  }
  const ComputedExplanation computed = compute_explanation(ev, *predictor, payload, mv.baseline, inputs);

  Explanation e;
  e.explainer = ev.explainer_id;
  e.model = model_id;
  e.input = input;
  e.request_id = std::move(request_id);
  e.deployment = std::move(deployment);
  e.dataset = dataset;
  e.payload = payload;
  e.baseline = mv.baseline;
  e.attributions = computed.attributions;
  e.surrogate = computed.surrogate;
  e.counterfactual = computed.counterfactual;
  e.quality = computed.quality;
  e.created_at = clock_();
  Json content = e;
  content.erase("explanation_id");
  e.explanation_id = content_id(content);
  store_.put_meta(kExplanation, e.explanation_id, Json(e));
  lineage_.add_edge(model_id, e.explanation_id, Relation::kExplains);
  lineage_.add_edge(ev.explainer_id, e.explanation_id, Relation::kExplains);
  if (e.request_id) {
    lineage_.add_edge(*e.request_id, e.explanation_id, Relation::kExplains);
    store_.put_meta(kRequestExplanation, *e.request_id, Json{{"explanation", e.explanation_id}});
  } else {
    lineage_.add_edge(input, e.explanation_id, Relation::kExplains);
  }
  return e;
}

InferResult ModelManager::infer(const Id& deployment_id, const Vector& payload,
                                std::string request_key) {
  const Deployment d = get_deployment(deployment_id);
  if (d.status != DeploymentStatus::kActive) {
    throw_precondition("deployment " + deployment_id + " is retired");
  }
  const ModelVersion primary = trainer_.get_model(d.primary_model);
  if (payload.size() != primary.dimension) {
    throw_validation("dimension mismatch: payload has " + std::to_string(payload.size()) +
                     " features, model expects " + std::to_string(primary.dimension));
  }
  const std::uint64_t sequence = log_.size();
  if (request_key.empty()) request_key = "seq-" + std::to_string(sequence);

  IngestRequest ingest;
  ingest.payload.assign(payload.begin(), payload.end());
  ingest.provenance.equipment_id = "deployment:" + deployment_id;
  ingest.provenance.location = "production";
  ingest.provenance.sensor_config["request_key"] = request_key;
  ingest.provenance.sensor_config["endpoint"] = d.endpoint;
  ingest.captured_at = clock_().to_string();
  const SampleRecord input = data_.ingest_sample(ingest);

  InferenceRecord rec;
  rec.sequence = sequence;
  rec.deployment_id = deployment_id;
  rec.request_key = request_key;
  rec.input = input.sample_id;
  rec.request_id = content_id(Json{{"deployment", deployment_id},
                                   {"sequence", sequence},
                                   {"request_key", request_key},
                                   {"input", input.sample_id}});

  const auto started = std::chrono::steady_clock::now();
  const bool secondary_serves = routes_to_secondary(d, request_key);
  rec.served_by = secondary_serves ? *d.secondary_model : d.primary_model;
  rec.output = trainer_.predictor(rec.served_by)->predict(payload);
  if (d.scheme == Scheme::kShadow) {
    rec.shadow_output = trainer_.predictor(*d.secondary_model)->predict(payload);
  }
  InferResult result;
  if (d.bound_explainer && !d.defer_explanations) {
    result.explanation = make_explanation(get_explainer(*d.bound_explainer), rec.served_by, payload,
                                          input.sample_id, rec.request_id, deployment_id,
                                          std::nullopt);
    rec.explanation = result.explanation->explanation_id;
  }
  rec.latency_micros = std::chrono::duration_cast<std::chrono::microseconds>(
                           std::chrono::steady_clock::now() - started)
                           .count();
  rec.created_at = clock_();

  store_.log(kInferenceLog).append(canonical(Json(rec)));
  lineage_.add_edge(deployment_id, rec.request_id, Relation::kProduced);
  lineage_.add_edge(input.sample_id, rec.request_id, Relation::kDerivedFrom);
  by_request_[rec.request_id] = log_.size();
  by_deployment_[deployment_id].push_back(log_.size());
  log_.push_back(rec);
  result.record = std::move(rec);
  return result;
}

std::vector<InferenceRecord> ModelManager::records(const Id& deployment_id) const {
  std::vector<InferenceRecord> out;
  if (auto it = by_deployment_.find(deployment_id); it != by_deployment_.end()) {
    for (std::size_t i : it->second) out.push_back(log_[i]);
  }
  return out;
}

const InferenceRecord& ModelManager::get_record(const Id& request_id) const {
  auto it = by_request_.find(request_id);
  if (it == by_request_.end()) throw_not_found("inference record", request_id);
  return log_[it->second];
}

bool ModelManager::has_record(const Id& request_id) const { return by_request_.count(request_id) > 0; }

Explanation ModelManager::explain(const Id& model_id, const Id& explainer_id, const Vector& payload,
                                  std::optional<Id> dataset) {
  const ExplainerVersion ev = get_explainer(explainer_id);
  const ModelVersion mv = trainer_.get_model(model_id);
  check_explainer_compatible(ev, model_id);
  if (payload.size() != mv.dimension) {
    throw_validation("dimension mismatch: payload has " + std::to_string(payload.size()) +
                     " features, model expects " + std::to_string(mv.dimension));
  }
  IngestRequest ingest;
  ingest.payload.assign(payload.begin(), payload.end());
  ingest.provenance.equipment_id = "api:explain";
  ingest.provenance.location = "adhoc";
  ingest.captured_at = clock_().to_string();
  const SampleRecord input = data_.ingest_sample(ingest);
  return make_explanation(ev, model_id, payload, input.sample_id, std::nullopt, std::nullopt,
                          std::move(dataset));
}

Explanation ModelManager::get_explanation(const Id& explanation_id) const {
  auto meta = store_.get_meta(kExplanation, explanation_id);
  if (!meta) throw_not_found("explanation", explanation_id);
  return meta->get<Explanation>();
}

bool ModelManager::has_explanation(const Id& explanation_id) const {
  return store_.has_meta(kExplanation, explanation_id);
}

std::vector<Explanation> ModelManager::list_explanations(std::optional<Id> model,
                                                         std::optional<Id> dataset) const {
  std::vector<Explanation> out;
  for (const Id& id : store_.list_meta(kExplanation)) {
    Explanation e = get_explanation(id);
    if (model && e.model != *model) continue;
    if (dataset && e.dataset != dataset) continue;
    out.push_back(std::move(e));
  }
  std::sort(out.begin(), out.end(), [](const Explanation& a, const Explanation& b) {
    return a.created_at.utc_micros() < b.created_at.utc_micros();
  });
  return out;
}

std::optional<Explanation> ModelManager::explanation_for_request(const Id& request_id) const {
  const InferenceRecord& rec = get_record(request_id);
  if (rec.explanation) return get_explanation(*rec.explanation);
  if (auto meta = store_.get_meta(kRequestExplanation, request_id)) {
    return get_explanation((*meta)["explanation"].get<std::string>());
  }
  return std::nullopt;
}

std::vector<Explanation> ModelManager::deployment_explanations(const Id& deployment_id) const {
  std::vector<Explanation> out;
  for (const InferenceRecord& rec : records(deployment_id)) {
    if (auto e = explanation_for_request(rec.request_id)) out.push_back(std::move(*e));
  }
  return out;
}

std::size_t ModelManager::fill_deferred_explanations(const Id& deployment_id) {
  const Deployment d = get_deployment(deployment_id);
  if (!d.bound_explainer) return 0;
  const ExplainerVersion ev = get_explainer(*d.bound_explainer);
  std::size_t filled = 0;
  for (const InferenceRecord& rec : records(deployment_id)) {
    if (rec.explanation || store_.has_meta(kRequestExplanation, rec.request_id)) continue;
    const Vector payload = data_.get_sample(rec.input).dense();
    make_explanation(ev, rec.served_by, payload, rec.input, rec.request_id, deployment_id,
                     std::nullopt);
    ++filled;
  }
  return filled;
}

}  // namespace xmlops
