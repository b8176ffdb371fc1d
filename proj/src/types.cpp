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

#include "xmlops/types.hpp"

#include <cmath>

namespace xmlops {
namespace {

template <typename T>
void put_opt(Json& j, const char* key, const std::optional<T>& v) {
  if (v) {
    j[key] = *v;
  } else {
    j[key] = nullptr;
  }
}

template <typename T>
std::optional<T> get_opt(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->template get<T>();
}

template <typename E>
void put_enum(Json& j, const char* key, E v) {
  j[key] = std::string(enum_name(v));
}

template <typename E>
E get_enum(const Json& j, const char* key) {
  return parse_enum<E>(j.at(key).get<std::string>());
}

std::string str_or(const Json& j, const char* key, std::string fallback = {}) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  return it->get<std::string>();
}

}  // namespace

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kValidation: return "validation";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kImmutable: return "immutable";
    case ErrorCode::kConflict: return "conflict";
    case ErrorCode::kPrecondition: return "precondition";
    case ErrorCode::kInternal: return "internal";
  }
  return "internal";
}

Json payload_to_json(const RawPayload& payload) {
  Json arr = Json::array();
  for (const auto& v : payload) {
    if (v) {
      arr.push_back(*v);
    } else {
      arr.push_back(nullptr);
    }
  }
  return arr;
}

RawPayload payload_from_json(const Json& j) {
  if (!j.is_array()) throw_validation("payload must be an array");
  RawPayload out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (v.is_null()) {
      out.emplace_back(std::nullopt);
    } else if (v.is_number()) {
      out.emplace_back(v.get<double>());
    } else {
      throw_validation("payload entries must be numbers or null");
    }
  }
  return out;
}

Json vector_to_json(const Vector& v) { return Json(v); }

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw_validation("expected a numeric array");
  Vector out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw_validation("expected a numeric array");
    out.push_back(v.get<double>());
  }
  return out;
}

std::optional<double> MetricReport::get(const std::string& name) const {
  auto it = values.find(name);
  if (it == values.end()) return std::nullopt;
  return it->second.value;
}

Json SampleRecord::content() const {
  Json j;
  j["payload"] = payload_to_json(payload);
  j["captured_at"] = captured_at.to_string();
  j["source"] = source;
  j["format_tag"] = std::string(enum_name(format_tag));
  return j;
}

bool SampleRecord::is_complete() const {
  for (const auto& v : payload) {
    if (!v) return false;
  }
  return true;
}

Vector SampleRecord::dense() const {
  Vector out;
  out.reserve(payload.size());
  for (std::size_t i = 0; i < payload.size(); ++i) {
    if (!payload[i]) {
      throw_validation("sample " + sample_id + " has a missing value at index " +
                       std::to_string(i));
    }
    out.push_back(*payload[i]);
  }
  return out;
}

Json PreprocessingRecipe::content() const {
  Json j;
  j["steps"] = steps;
  return j;
}

Json DatasetVersion::content() const {
  Json j;
  j["members"] = members;
  put_opt(j, "recipe", recipe);
  return j;
}

Json ExplainerVersion::content() const {
  Json j;
  put_enum(j, "method", method);
  put_enum(j, "kind", kind);
  j["config"] = config;
  j["compatible_models"] = compatible_models;
  j["domain_knowledge"] = domain_knowledge;
  return j;
}

void to_json(Json& j, const Timestamp& t) { j = t.to_string(); }
void from_json(const Json& j, Timestamp& t) {
  t = Timestamp::parse(j.get<std::string>());
}

void to_json(Json& j, const Provenance& p) {
  j = Json{{"equipment_id", p.equipment_id},
           {"location", p.location},
           {"sensor_config", p.sensor_config}};
}
void from_json(const Json& j, Provenance& p) {
  p.equipment_id = str_or(j, "equipment_id");
  p.location = str_or(j, "location");
  p.sensor_config.clear();
  if (auto it = j.find("sensor_config"); it != j.end() && !it->is_null()) {
    for (const auto& [k, v] : it->items()) {
      p.sensor_config[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
  }
}

void to_json(Json& j, const SampleRecord& s) {
  j = s.content();
  j["sample_id"] = s.sample_id;
}
void from_json(const Json& j, SampleRecord& s) {
  s.sample_id = str_or(j, "sample_id");
  s.payload = payload_from_json(j.at("payload"));
  s.captured_at = j.at("captured_at").get<Timestamp>();
  s.source = j.at("source").get<Provenance>();
  s.format_tag = get_enum<FormatTag>(j, "format_tag");
}

void to_json(Json& j, const RecipeStep& s) {
  j = Json{{"name", std::string(enum_name(s.name))}, {"params", s.params}};
}
void from_json(const Json& j, RecipeStep& s) {
  s.name = get_enum<StepKind>(j, "name");
  s.params.clear();
  if (auto it = j.find("params"); it != j.end() && !it->is_null()) {
    for (const auto& [k, v] : it->items()) {
      if (!v.is_number()) throw_validation("recipe param '" + k + "' must be numeric");
      s.params[k] = v.get<double>();
    }
  }
}

void to_json(Json& j, const PreprocessingRecipe& r) {
  j = r.content();
  j["recipe_id"] = r.recipe_id;
}
void from_json(const Json& j, PreprocessingRecipe& r) {
  r.recipe_id = str_or(j, "recipe_id");
  r.steps = j.at("steps").get<std::vector<RecipeStep>>();
}

void to_json(Json& j, const DatasetVersion& d) {
  j = d.content();
  j["dataset_id"] = d.dataset_id;
  put_opt(j, "parent", d.parent);
  j["sealed"] = d.sealed;
  j["created_at"] = d.created_at;
}
void from_json(const Json& j, DatasetVersion& d) {
  d.dataset_id = j.at("dataset_id").get<std::string>();
  d.members = j.at("members").get<std::vector<Id>>();
  d.recipe = get_opt<Id>(j, "recipe");
  d.parent = get_opt<Id>(j, "parent");
  d.sealed = j.at("sealed").get<bool>();
  d.created_at = j.at("created_at").get<Timestamp>();
}

void to_json(Json& j, const Annotation& a) {
  j = Json{{"annotation_id", a.annotation_id},
           {"sample_id", a.sample_id},
           {"label", a.label},
           {"author", a.author},
           {"origin", std::string(enum_name(a.origin))},
           {"created_at", a.created_at}};
}
void from_json(const Json& j, Annotation& a) {
  a.annotation_id = j.at("annotation_id").get<std::string>();
  a.sample_id = j.at("sample_id").get<std::string>();
  a.label = j.at("label").get<double>();
  a.author = str_or(j, "author");
  a.origin = get_enum<Origin>(j, "origin");
  a.created_at = j.at("created_at").get<Timestamp>();
}

void to_json(Json& j, const ExclusionMark& m) {
  j = Json{{"sample_id", m.sample_id},
           {"reason", m.reason},
           {"author", m.author},
           {"created_at", m.created_at}};
}
void from_json(const Json& j, ExclusionMark& m) {
  m.sample_id = j.at("sample_id").get<std::string>();
  m.reason = str_or(j, "reason");
  m.author = str_or(j, "author");
  m.created_at = j.at("created_at").get<Timestamp>();
}

void to_json(Json& j, const MetricValue& m) {
  if (m.value) {
    j = *m.value;
  } else {
    j = Json{{"value", nullptr}, {"reason", m.reason}};
  }
}
void from_json(const Json& j, MetricValue& m) {
  if (j.is_number()) {
    m = MetricValue::of(j.get<double>());
  } else {
    m = MetricValue::undefined(str_or(j, "reason", "undefined"));
  }
}

void to_json(Json& j, const MetricReport& r) {
  j = Json{{"split", std::string(enum_name(r.split))}, {"values", r.values}};
}
void from_json(const Json& j, MetricReport& r) {
  r.split = get_enum<SplitName>(j, "split");
  r.values = j.at("values").get<std::map<std::string, MetricValue>>();
}

void to_json(Json& j, const SplitSpec& s) {
  j = Json{{"train_frac", s.train_frac},
           {"val_frac", s.val_frac},
           {"test_frac", s.test_frac},
           {"seed", s.seed}};
}
void from_json(const Json& j, SplitSpec& s) {
  s.train_frac = j.value("train_frac", 0.8);
  s.val_frac = j.value("val_frac", 0.1);
  s.test_frac = j.value("test_frac", 0.1);
  s.seed = j.value("seed", std::uint64_t{0});
}

void to_json(Json& j, const SplitMaterialization& s) {
  j = Json{{"train", s.train}, {"val", s.val}, {"test", s.test}};
}
void from_json(const Json& j, SplitMaterialization& s) {
  s.train = j.at("train").get<std::vector<Id>>();
  s.val = j.at("val").get<std::vector<Id>>();
  s.test = j.at("test").get<std::vector<Id>>();
}

void to_json(Json& j, const TrainingRun& r) {
  j = Json{{"run_id", r.run_id},
           {"architecture", std::string(enum_name(r.architecture))},
           {"dataset", r.dataset},
           {"split", r.split},
           {"materialization", r.materialization},
           {"hyperparams", r.hyperparams},
           {"seed", r.seed},
           {"metrics", r.metrics},
           {"produced_model", r.produced_model},
           {"software_manifest", r.software_manifest},
           {"started_at", r.started_at},
           {"finished_at", r.finished_at}};
}
void from_json(const Json& j, TrainingRun& r) {
  r.run_id = j.at("run_id").get<std::string>();
  r.architecture = get_enum<Architecture>(j, "architecture");
  r.dataset = j.at("dataset").get<std::string>();
  r.split = j.at("split").get<SplitSpec>();
  r.materialization = j.at("materialization").get<SplitMaterialization>();
  r.hyperparams = j.at("hyperparams");
  r.seed = j.at("seed").get<std::uint64_t>();
  r.metrics = j.at("metrics").get<std::map<std::string, MetricReport>>();
  r.produced_model = j.at("produced_model").get<std::string>();
  r.software_manifest = j.at("software_manifest").get<KeyValue>();
  r.started_at = j.at("started_at").get<Timestamp>();
  r.finished_at = j.at("finished_at").get<Timestamp>();
}

void to_json(Json& j, const ModelVersion& m) {
  j = Json{{"model_id", m.model_id},
           {"architecture", std::string(enum_name(m.architecture))},
           {"architecture_version", m.architecture_version},
           {"init_seed", m.init_seed},
           {"training_run", m.training_run},
           {"software_manifest", m.software_manifest},
           {"metrics", m.metrics},
           {"stage", std::string(enum_name(m.stage))},
           {"task", std::string(enum_name(m.task))},
           {"dimension", m.dimension},
           {"artifact", m.artifact},
           {"baseline", m.baseline}};
}
void from_json(const Json& j, ModelVersion& m) {
  m.model_id = j.at("model_id").get<std::string>();
  m.architecture = get_enum<Architecture>(j, "architecture");
  m.architecture_version = str_or(j, "architecture_version");
  m.init_seed = j.at("init_seed").get<std::uint64_t>();
  m.training_run = j.at("training_run").get<std::string>();
  m.software_manifest = j.at("software_manifest").get<KeyValue>();
  m.metrics = j.at("metrics").get<std::map<std::string, double>>();
  m.stage = get_enum<ModelStage>(j, "stage");
  m.task = get_enum<Task>(j, "task");
  m.dimension = j.at("dimension").get<std::size_t>();
  m.artifact = j.at("artifact").get<std::string>();
  m.baseline = vector_from_json(j.at("baseline"));
}

void to_json(Json& j, const RegistryEntry& e) {
  j = Json{{"model_id", e.model_id},
           {"sequence", e.sequence},
           {"registered_at", e.registered_at}};
}
void from_json(const Json& j, RegistryEntry& e) {
  e.model_id = j.at("model_id").get<std::string>();
  e.sequence = j.at("sequence").get<std::uint64_t>();
  e.registered_at = j.at("registered_at").get<Timestamp>();
}

void to_json(Json& j, const ExplainerVersion& e) {
  j = e.content();
  j["explainer_id"] = e.explainer_id;
}
void from_json(const Json& j, ExplainerVersion& e) {
  e.explainer_id = str_or(j, "explainer_id");
  e.method = get_enum<ExplainMethod>(j, "method");
  e.kind = j.contains("kind") ? get_enum<ExplainerKind>(j, "kind")
                              : ExplainerKind::kPostHoc;
  e.config = j.value("config", Json::object());
  if (e.config.is_null()) e.config = Json::object();
  e.compatible_models = j.value("compatible_models", std::vector<Id>{});
  e.domain_knowledge = str_or(j, "domain_knowledge");
}

void to_json(Json& j, const LineageEdge& e) {
  j = Json{{"from", e.from_id},
           {"to", e.to_id},
           {"relation", std::string(enum_name(e.relation))}};
}
void from_json(const Json& j, LineageEdge& e) {
  e.from_id = j.at("from").get<std::string>();
  e.to_id = j.at("to").get<std::string>();
  e.relation = get_enum<Relation>(j, "relation");
}

void to_json(Json& j, const Deployment& d) {
  j = Json{{"deployment_id", d.deployment_id},
           {"endpoint", d.endpoint},
           {"scheme", std::string(enum_name(d.scheme))},
           {"primary_model", d.primary_model},
           {"status", std::string(enum_name(d.status))},
           {"created_at", d.created_at},
           {"routing_seed", d.routing_seed},
           {"defer_explanations", d.defer_explanations}};
  put_opt(j, "secondary_model", d.secondary_model);
  put_opt(j, "traffic_fraction", d.traffic_fraction);
  put_opt(j, "bound_explainer", d.bound_explainer);
  put_opt(j, "baseline", d.baseline);
  put_opt(j, "promoted_from", d.promoted_from);
}
void from_json(const Json& j, Deployment& d) {
  d.deployment_id = j.at("deployment_id").get<std::string>();
  d.endpoint = j.at("endpoint").get<std::string>();
  d.scheme = get_enum<Scheme>(j, "scheme");
  d.primary_model = j.at("primary_model").get<std::string>();
  d.secondary_model = get_opt<Id>(j, "secondary_model");
  d.traffic_fraction = get_opt<double>(j, "traffic_fraction");
  d.bound_explainer = get_opt<Id>(j, "bound_explainer");
  d.status = get_enum<DeploymentStatus>(j, "status");
  d.created_at = j.at("created_at").get<Timestamp>();
  d.routing_seed = j.at("routing_seed").get<std::uint64_t>();
  d.defer_explanations = j.value("defer_explanations", false);
  d.baseline = get_opt<Id>(j, "baseline");
  d.promoted_from = get_opt<Id>(j, "promoted_from");
}

void to_json(Json& j, const PredictionOutput& o) {
  j = Json{{"value", o.value}};
  put_opt(j, "predicted_class", o.predicted_class);
  put_opt(j, "probability", o.probability);
}
void from_json(const Json& j, PredictionOutput& o) {
  o.value = j.at("value").get<double>();
  o.predicted_class = get_opt<int>(j, "predicted_class");
  o.probability = get_opt<double>(j, "probability");
}

void to_json(Json& j, const InferenceRecord& r) {
  j = Json{{"request_id", r.request_id},
           {"sequence", r.sequence},
           {"deployment_id", r.deployment_id},
           {"request_key", r.request_key},
           {"served_by", r.served_by},
           {"input", r.input},
           {"output", r.output},
           {"latency_micros", r.latency_micros},
           {"created_at", r.created_at}};
  put_opt(j, "shadow_output", r.shadow_output);
  put_opt(j, "explanation", r.explanation);
}
void from_json(const Json& j, InferenceRecord& r) {
  r.request_id = j.at("request_id").get<std::string>();
  r.sequence = j.at("sequence").get<std::uint64_t>();
  r.deployment_id = j.at("deployment_id").get<std::string>();
  r.request_key = j.at("request_key").get<std::string>();
  r.served_by = j.at("served_by").get<std::string>();
  r.shadow_output = get_opt<PredictionOutput>(j, "shadow_output");
  r.input = j.at("input").get<std::string>();
  r.output = j.at("output").get<PredictionOutput>();
  r.explanation = get_opt<Id>(j, "explanation");
  r.latency_micros = j.at("latency_micros").get<std::int64_t>();
  r.created_at = j.at("created_at").get<Timestamp>();
}

void to_json(Json& j, const SurrogateFit& s) {
  j = Json{{"weights", s.weights},
           {"intercept", s.intercept},
           {"fidelity_reason", s.fidelity_reason}};
  put_opt(j, "fidelity_r2", s.fidelity_r2);
}
void from_json(const Json& j, SurrogateFit& s) {
  s.weights = vector_from_json(j.at("weights"));
  s.intercept = j.at("intercept").get<double>();
  s.fidelity_r2 = get_opt<double>(j, "fidelity_r2");
  s.fidelity_reason = str_or(j, "fidelity_reason");
}

void to_json(Json& j, const CounterfactualResult& c) {
  j = Json{{"found", c.found},
           {"payload", c.payload},
           {"distance_l1", c.distance_l1},
           {"predicted_class", c.predicted_class},
           {"iterations", c.iterations}};
}
void from_json(const Json& j, CounterfactualResult& c) {
  c.found = j.at("found").get<bool>();
  c.payload = vector_from_json(j.at("payload"));
  c.distance_l1 = j.at("distance_l1").get<double>();
  c.predicted_class = j.at("predicted_class").get<int>();
  c.iterations = j.value("iterations", 0);
}

void to_json(Json& j, const ExplanationQuality& q) {
  j = Json{{"completeness", q.completeness},
           {"stability", q.stability},
           {"fidelity", q.fidelity},
           {"relevance", q.relevance}};
}
void from_json(const Json& j, ExplanationQuality& q) {
  q.completeness = j.at("completeness").get<double>();
  q.stability = j.at("stability").get<double>();
  q.fidelity = j.at("fidelity").get<double>();
  q.relevance = j.at("relevance").get<double>();
}

void to_json(Json& j, const Explanation& e) {
  j = Json{{"explanation_id", e.explanation_id},
           {"explainer", e.explainer},
           {"model", e.model},
           {"input", e.input},
           {"payload", e.payload},
           {"baseline", e.baseline},
           {"attributions", e.attributions},
           {"quality", e.quality},
           {"created_at", e.created_at}};
  put_opt(j, "request_id", e.request_id);
  put_opt(j, "deployment", e.deployment);
  put_opt(j, "dataset", e.dataset);
  put_opt(j, "surrogate", e.surrogate);
  put_opt(j, "counterfactual", e.counterfactual);
}
void from_json(const Json& j, Explanation& e) {
  e.explanation_id = j.at("explanation_id").get<std::string>();
  e.explainer = j.at("explainer").get<std::string>();
  e.model = j.at("model").get<std::string>();
  e.input = j.at("input").get<std::string>();
  e.request_id = get_opt<Id>(j, "request_id");
  e.deployment = get_opt<Id>(j, "deployment");
  e.dataset = get_opt<Id>(j, "dataset");
  e.payload = vector_from_json(j.at("payload"));
  e.baseline = vector_from_json(j.at("baseline"));
  e.attributions = vector_from_json(j.at("attributions"));
  e.surrogate = get_opt<SurrogateFit>(j, "surrogate");
  e.counterfactual = get_opt<CounterfactualResult>(j, "counterfactual");
  e.quality = j.at("quality").get<ExplanationQuality>();
  e.created_at = j.at("created_at").get<Timestamp>();
}

void to_json(Json& j, const Alert& a) {
  j = Json{{"alert_id", a.alert_id},
           {"source", std::string(enum_name(a.source))},
           {"deployment_id", a.deployment_id},
           {"metric", a.metric},
           {"value", a.value},
           {"threshold", a.threshold},
           {"message", a.message},
           {"raised_at", a.raised_at},
           {"last_seen", a.last_seen},
           {"occurrences", a.occurrences}};
}
void from_json(const Json& j, Alert& a) {
  a.alert_id = j.at("alert_id").get<std::string>();
  a.source = get_enum<AlertSource>(j, "source");
  a.deployment_id = j.at("deployment_id").get<std::string>();
  a.metric = str_or(j, "metric");
  a.value = j.at("value").get<double>();
  a.threshold = j.at("threshold").get<double>();
  a.message = str_or(j, "message");
  a.raised_at = j.at("raised_at").get<Timestamp>();
  a.last_seen = j.at("last_seen").get<Timestamp>();
  a.occurrences = j.value("occurrences", 1);
}

void to_json(Json& j, const RetrainTrigger& t) {
  j = Json{{"trigger_id", t.trigger_id},
           {"cause", std::string(enum_name(t.cause))},
           {"deployment_id", t.deployment_id},
           {"fired_at", t.fired_at},
           {"consumed", t.consumed},
           {"outcome", t.outcome}};
  put_opt(j, "resulting_run", t.resulting_run);
  put_opt(j, "resulting_model", t.resulting_model);
  put_opt(j, "resulting_deployment", t.resulting_deployment);
}
void from_json(const Json& j, RetrainTrigger& t) {
  t.trigger_id = j.at("trigger_id").get<std::string>();
  t.cause = get_enum<TriggerCause>(j, "cause");
  t.deployment_id = j.at("deployment_id").get<std::string>();
  t.fired_at = j.at("fired_at").get<Timestamp>();
  t.consumed = j.at("consumed").get<bool>();
  t.outcome = str_or(j, "outcome");
  t.resulting_run = get_opt<Id>(j, "resulting_run");
  t.resulting_model = get_opt<Id>(j, "resulting_model");
  t.resulting_deployment = get_opt<Id>(j, "resulting_deployment");
}

void to_json(Json& j, const Outcome& o) {
  j = Json{{"outcome_id", o.outcome_id},
           {"request_id", o.request_id},
           {"label", o.label},
           {"author", o.author},
           {"created_at", o.created_at}};
}
void from_json(const Json& j, Outcome& o) {
  o.outcome_id = j.at("outcome_id").get<std::string>();
  o.request_id = j.at("request_id").get<std::string>();
  o.label = j.at("label").get<double>();
  o.author = str_or(j, "author");
  o.created_at = j.at("created_at").get<Timestamp>();
}

void to_json(Json& j, const FeedbackRecord& f) {
  j = Json{{"feedback_id", f.feedback_id},
           {"kind", std::string(enum_name(f.kind))},
           {"target_id", f.target_id},
           {"verdict", std::string(enum_name(f.verdict))},
           {"comment", f.comment},
           {"author", f.author},
           {"created_at", f.created_at}};
  put_opt(j, "corrected_label", f.corrected_label);
}
void from_json(const Json& j, FeedbackRecord& f) {
  f.feedback_id = j.at("feedback_id").get<std::string>();
  f.kind = get_enum<FeedbackKind>(j, "kind");
  f.target_id = j.at("target_id").get<std::string>();
  f.verdict = get_enum<Verdict>(j, "verdict");
  f.corrected_label = get_opt<double>(j, "corrected_label");
  f.comment = str_or(j, "comment");
  f.author = str_or(j, "author");
  f.created_at = j.at("created_at").get<Timestamp>();
}

void to_json(Json& j, const ReviewItem& r) {
  j = Json{{"request_id", r.request_id},
           {"uncertainty", r.uncertainty},
           {"resolved", r.resolved},
           {"sequence", r.sequence},
           {"output", r.output}};
}

}  // namespace xmlops
