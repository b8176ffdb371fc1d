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

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "xmlops/error.hpp"
#include "xmlops/hash.hpp"
#include "xmlops/timestamp.hpp"

namespace xmlops {

using KeyValue = std::map<std::string, std::string>;

// Enum <-> wire-name tables. Parsing an unknown name is a validation error.
template <typename E>
struct EnumNames;

template <typename E>
std::string_view enum_name(E value) {
  for (const auto& [v, name] : EnumNames<E>::kTable) {
    if (v == value) return name;
  }
  return "?";
}

template <typename E>
E parse_enum(std::string_view name) {
  for (const auto& [v, n] : EnumNames<E>::kTable) {
    if (n == name) return v;
  }
  throw_validation("unknown " + std::string(EnumNames<E>::kKind) + " '" +
                   std::string(name) + "'");
}

#define XMLOPS_ENUM_NAMES(E, KIND, ...)                                   \
  template <>                                                             \
  struct EnumNames<E> {                                                   \
    static constexpr std::string_view kKind = KIND;                       \
    static constexpr std::pair<E, std::string_view> kTable[] = {__VA_ARGS__}; \
  };

enum class FormatTag { kTabularRow, kTimeseriesWindow };
XMLOPS_ENUM_NAMES(FormatTag, "format_tag",
                  {FormatTag::kTabularRow, "tabular_row"},
                  {FormatTag::kTimeseriesWindow, "timeseries_window"})

enum class StepKind { kStandardize, kClip, kImputeMean, kWindow };
XMLOPS_ENUM_NAMES(StepKind, "recipe step", {StepKind::kStandardize, "standardize"},
                  {StepKind::kClip, "clip"},
                  {StepKind::kImputeMean, "impute_mean"},
                  {StepKind::kWindow, "window"})

enum class Origin { kHuman, kSystem };
XMLOPS_ENUM_NAMES(Origin, "origin", {Origin::kHuman, "human"},
                  {Origin::kSystem, "system"})

enum class Architecture { kLinearRegression, kLogisticRegression, kKnn };
XMLOPS_ENUM_NAMES(Architecture, "architecture",
                  {Architecture::kLinearRegression, "linear_regression"},
                  {Architecture::kLogisticRegression, "logistic_regression"},
                  {Architecture::kKnn, "knn"})

enum class Task { kRegression, kBinaryClassification, kClustering };
XMLOPS_ENUM_NAMES(Task, "task", {Task::kRegression, "regression"},
                  {Task::kBinaryClassification, "binary_classification"},
                  {Task::kClustering, "clustering_assignments"})

enum class ModelStage { kRegistered, kDeployed, kArchived };
XMLOPS_ENUM_NAMES(ModelStage, "stage", {ModelStage::kRegistered, "registered"},
                  {ModelStage::kDeployed, "deployed"},
                  {ModelStage::kArchived, "archived"})

enum class ExplainMethod {
  kLinearExact,
  kPermutationImportance,
  kLocalSurrogate,
  kCounterfactual
};
XMLOPS_ENUM_NAMES(ExplainMethod, "explainer method",
                  {ExplainMethod::kLinearExact, "linear_exact"},
                  {ExplainMethod::kPermutationImportance,
                   "permutation_importance"},
                  {ExplainMethod::kLocalSurrogate, "local_surrogate"},
                  {ExplainMethod::kCounterfactual, "counterfactual"})

enum class ExplainerKind { kPostHoc, kInterpretable, kData };
XMLOPS_ENUM_NAMES(ExplainerKind, "explainer kind",
                  {ExplainerKind::kPostHoc, "post_hoc"},
                  {ExplainerKind::kInterpretable, "interpretable"},
                  {ExplainerKind::kData, "data"})

enum class Relation {
  kDerivedFrom,
  kTrainedOn,
  kProduced,
  kExplains,
  kDeployedAs,
  kFeedbackOn
};
XMLOPS_ENUM_NAMES(Relation, "relation", {Relation::kDerivedFrom, "derived_from"},
                  {Relation::kTrainedOn, "trained_on"},
                  {Relation::kProduced, "produced"},
                  {Relation::kExplains, "explains"},
                  {Relation::kDeployedAs, "deployed_as"},
                  {Relation::kFeedbackOn, "feedback_on"})

enum class SplitName { kTrain, kVal, kTest };
XMLOPS_ENUM_NAMES(SplitName, "split", {SplitName::kTrain, "train"},
                  {SplitName::kVal, "val"}, {SplitName::kTest, "test"})

enum class Scheme { kSingle, kShadow, kCanary, kAb };
XMLOPS_ENUM_NAMES(Scheme, "scheme", {Scheme::kSingle, "single"},
                  {Scheme::kShadow, "shadow"}, {Scheme::kCanary, "canary"},
                  {Scheme::kAb, "ab"})

enum class DeploymentStatus { kActive, kRetired };
XMLOPS_ENUM_NAMES(DeploymentStatus, "deployment status",
                  {DeploymentStatus::kActive, "active"},
                  {DeploymentStatus::kRetired, "retired"})

enum class AlertSource { kDataDrift, kPerformance, kExplainer };
XMLOPS_ENUM_NAMES(AlertSource, "alert source",
                  {AlertSource::kDataDrift, "data_drift"},
                  {AlertSource::kPerformance, "performance"},
                  {AlertSource::kExplainer, "explainer"})

enum class TriggerCause {
  kPerformanceDegradation,
  kDataDrift,
  kNewAnnotations,
  kManual
};
XMLOPS_ENUM_NAMES(TriggerCause, "trigger cause",
                  {TriggerCause::kPerformanceDegradation,
                   "performance_degradation"},
                  {TriggerCause::kDataDrift, "data_drift"},
                  {TriggerCause::kNewAnnotations, "new_annotations"},
                  {TriggerCause::kManual, "manual"})

enum class FeedbackKind { kPrediction, kDataQuality, kExplanation };
XMLOPS_ENUM_NAMES(FeedbackKind, "feedback kind",
                  {FeedbackKind::kPrediction, "prediction"},
                  {FeedbackKind::kDataQuality, "data_quality"},
                  {FeedbackKind::kExplanation, "explanation"})

enum class Verdict { kAccept, kReject };
XMLOPS_ENUM_NAMES(Verdict, "verdict", {Verdict::kAccept, "accept"},
                  {Verdict::kReject, "reject"})

enum class DriftVerdict { kStable, kDrifting };
XMLOPS_ENUM_NAMES(DriftVerdict, "drift verdict",
                  {DriftVerdict::kStable, "stable"},
                  {DriftVerdict::kDrifting, "drifting"})

#undef XMLOPS_ENUM_NAMES

// A payload entry is either a finite number or the explicit missing marker
// (JSON null). NaN never appears in stored payloads.
using RawPayload = std::vector<std::optional<double>>;
using Vector = std::vector<double>;

struct Provenance {
  std::string equipment_id;
  std::string location;
  KeyValue sensor_config;
};

struct SampleRecord {
  Id sample_id;
  RawPayload payload;
  Timestamp captured_at;
  Provenance source;
  FormatTag format_tag = FormatTag::kTabularRow;

  // The hashed content: everything except the id itself.
  Json content() const;
  bool is_complete() const;
  // Throws validation if any entry is missing.
  Vector dense() const;
};

struct RecipeStep {
  StepKind name = StepKind::kStandardize;
  std::map<std::string, double> params;
};

struct PreprocessingRecipe {
  Id recipe_id;
  std::vector<RecipeStep> steps;

  Json content() const;
};

struct DatasetVersion {
  Id dataset_id;
  std::vector<Id> members;
  std::optional<Id> recipe;
  std::optional<Id> parent;
  bool sealed = false;
  Timestamp created_at;

  Json content() const;
};

struct Annotation {
  Id annotation_id;
  Id sample_id;
  double label = 0.0;
  std::string author;
  Origin origin = Origin::kHuman;
  Timestamp created_at;
};

struct ExclusionMark {
  Id sample_id;
  std::string reason;
  std::string author;
  Timestamp created_at;
};

// A metric either has a value or a reason code explaining why it is
// undefined (zero denominators, empty split). Never NaN.
struct MetricValue {
  std::optional<double> value;
  std::string reason;

  static MetricValue of(double v) { return {v, {}}; }
  static MetricValue undefined(std::string why) { return {std::nullopt, std::move(why)}; }
};

struct MetricReport {
  SplitName split = SplitName::kTest;
  std::map<std::string, MetricValue> values;

  std::optional<double> get(const std::string& name) const;
};

struct SplitSpec {
  double train_frac = 0.8;
  double val_frac = 0.1;
  double test_frac = 0.1;
  std::uint64_t seed = 0;
};

struct SplitMaterialization {
  std::vector<Id> train;
  std::vector<Id> val;
  std::vector<Id> test;
};

struct TrainingRun {
  Id run_id;
  Architecture architecture = Architecture::kLinearRegression;
  Id dataset;
  SplitSpec split;
  SplitMaterialization materialization;
  Json hyperparams = Json::object();
  std::uint64_t seed = 0;
  std::map<std::string, MetricReport> metrics;  // keyed by split name
  Id produced_model;
  KeyValue software_manifest;
  Timestamp started_at;
  Timestamp finished_at;
};

struct ModelVersion {
  Id model_id;
  Architecture architecture = Architecture::kLinearRegression;
  std::string architecture_version;
  std::uint64_t init_seed = 0;
  Id training_run;
  KeyValue software_manifest;
  std::map<std::string, double> metrics;  // defined test-split metrics
  ModelStage stage = ModelStage::kRegistered;
  Task task = Task::kRegression;
  std::size_t dimension = 0;
  Id artifact;     // blob id of the serialized predictor
  Vector baseline; // training-set feature means
};

struct RegistryEntry {
  Id model_id;
  std::uint64_t sequence = 0;
  Timestamp registered_at;
};

struct ExplainerVersion {
  Id explainer_id;
  ExplainMethod method = ExplainMethod::kLinearExact;
  ExplainerKind kind = ExplainerKind::kPostHoc;
  Json config = Json::object();
  std::vector<Id> compatible_models;
  std::string domain_knowledge;  // free-text provenance

  Json content() const;
};

struct LineageEdge {
  Id from_id;  // upstream
  Id to_id;    // downstream
  Relation relation = Relation::kDerivedFrom;

  friend bool operator==(const LineageEdge&, const LineageEdge&) = default;
};

struct Deployment {
  Id deployment_id;
  std::string endpoint;
  Scheme scheme = Scheme::kSingle;
  Id primary_model;
  std::optional<Id> secondary_model;
  std::optional<double> traffic_fraction;
  std::optional<Id> bound_explainer;
  DeploymentStatus status = DeploymentStatus::kActive;
  Timestamp created_at;
  std::uint64_t routing_seed = 0;
  bool defer_explanations = false;
  std::optional<Id> baseline;       // drift baseline of the primary's data
  std::optional<Id> promoted_from;  // deployment this one replaced via promote
};

struct PredictionOutput {
  double value = 0.0;                  // regression value or class index
  std::optional<int> predicted_class;  // classifiers only
  std::optional<double> probability;   // P(class 1), classifiers only
};

struct InferenceRecord {
  Id request_id;
  std::uint64_t sequence = 0;
  Id deployment_id;
  std::string request_key;
  Id served_by;
  std::optional<PredictionOutput> shadow_output;
  Id input;  // sample id of the stored input payload
  PredictionOutput output;
  std::optional<Id> explanation;
  std::int64_t latency_micros = 0;
  Timestamp created_at;
};

struct SurrogateFit {
  Vector weights;
  double intercept = 0.0;
  std::optional<double> fidelity_r2;
  std::string fidelity_reason;
};

struct CounterfactualResult {
  bool found = false;
  Vector payload;
  double distance_l1 = 0.0;
  int predicted_class = 0;
  int iterations = 0;
};

struct ExplanationQuality {
  double completeness = 0.0;
  double stability = 0.0;
  double fidelity = 0.0;
  double relevance = 0.0;
};

struct Explanation {
  Id explanation_id;
  Id explainer;
  Id model;
  Id input;  // sample id
  std::optional<Id> request_id;
  std::optional<Id> deployment;
  std::optional<Id> dataset;
  Vector payload;
  Vector baseline;
  Vector attributions;
  std::optional<SurrogateFit> surrogate;
  std::optional<CounterfactualResult> counterfactual;
  ExplanationQuality quality;
  Timestamp created_at;
};

struct Alert {
  Id alert_id;
  AlertSource source = AlertSource::kDataDrift;
  Id deployment_id;
  std::string metric;
  double value = 0.0;
  double threshold = 0.0;
  std::string message;
  Timestamp raised_at;
  Timestamp last_seen;
  int occurrences = 1;
};

struct RetrainTrigger {
  Id trigger_id;
  TriggerCause cause = TriggerCause::kManual;
  Id deployment_id;
  Timestamp fired_at;
  bool consumed = false;
  std::string outcome;  // "retrained" | "no_op" once consumed
  std::optional<Id> resulting_run;
  std::optional<Id> resulting_model;
  std::optional<Id> resulting_deployment;
};

struct Outcome {
  Id outcome_id;
  Id request_id;
  double label = 0.0;
  std::string author;
  Timestamp created_at;
};

struct FeedbackRecord {
  Id feedback_id;
  FeedbackKind kind = FeedbackKind::kPrediction;
  Id target_id;
  Verdict verdict = Verdict::kAccept;
  std::optional<double> corrected_label;
  std::string comment;
  std::string author;
  Timestamp created_at;
};

struct ReviewItem {
  Id request_id;
  double uncertainty = 0.0;
  bool resolved = false;
  std::uint64_t sequence = 0;
  PredictionOutput output;
};

// --- JSON conversions ------------------------------------------------------

Json payload_to_json(const RawPayload& payload);
RawPayload payload_from_json(const Json& j);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

void to_json(Json& j, const Timestamp& t);
void from_json(const Json& j, Timestamp& t);
void to_json(Json& j, const Provenance& p);
void from_json(const Json& j, Provenance& p);
void to_json(Json& j, const SampleRecord& s);
void from_json(const Json& j, SampleRecord& s);
void to_json(Json& j, const RecipeStep& s);
void from_json(const Json& j, RecipeStep& s);
void to_json(Json& j, const PreprocessingRecipe& r);
void from_json(const Json& j, PreprocessingRecipe& r);
void to_json(Json& j, const DatasetVersion& d);
void from_json(const Json& j, DatasetVersion& d);
void to_json(Json& j, const Annotation& a);
void from_json(const Json& j, Annotation& a);
void to_json(Json& j, const ExclusionMark& m);
void from_json(const Json& j, ExclusionMark& m);
void to_json(Json& j, const MetricValue& m);
void from_json(const Json& j, MetricValue& m);
void to_json(Json& j, const MetricReport& r);
void from_json(const Json& j, MetricReport& r);
void to_json(Json& j, const SplitSpec& s);
void from_json(const Json& j, SplitSpec& s);
void to_json(Json& j, const SplitMaterialization& s);
void from_json(const Json& j, SplitMaterialization& s);
void to_json(Json& j, const TrainingRun& r);
void from_json(const Json& j, TrainingRun& r);
void to_json(Json& j, const ModelVersion& m);
void from_json(const Json& j, ModelVersion& m);
void to_json(Json& j, const RegistryEntry& e);
void from_json(const Json& j, RegistryEntry& e);
void to_json(Json& j, const ExplainerVersion& e);
void from_json(const Json& j, ExplainerVersion& e);
void to_json(Json& j, const LineageEdge& e);
void from_json(const Json& j, LineageEdge& e);
void to_json(Json& j, const Deployment& d);
void from_json(const Json& j, Deployment& d);
void to_json(Json& j, const PredictionOutput& o);
void from_json(const Json& j, PredictionOutput& o);
void to_json(Json& j, const InferenceRecord& r);
void from_json(const Json& j, InferenceRecord& r);
void to_json(Json& j, const SurrogateFit& s);
void from_json(const Json& j, SurrogateFit& s);
void to_json(Json& j, const CounterfactualResult& c);
void from_json(const Json& j, CounterfactualResult& c);
void to_json(Json& j, const ExplanationQuality& q);
void from_json(const Json& j, ExplanationQuality& q);
void to_json(Json& j, const Explanation& e);
void from_json(const Json& j, Explanation& e);
void to_json(Json& j, const Alert& a);
void from_json(const Json& j, Alert& a);
void to_json(Json& j, const RetrainTrigger& t);
void from_json(const Json& j, RetrainTrigger& t);
void to_json(Json& j, const Outcome& o);
void from_json(const Json& j, Outcome& o);
void to_json(Json& j, const FeedbackRecord& f);
void from_json(const Json& j, FeedbackRecord& f);
void to_json(Json& j, const ReviewItem& r);

}  // namespace xmlops
