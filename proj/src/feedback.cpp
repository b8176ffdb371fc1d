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

#include "xmlops/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace xmlops {
namespace {

constexpr std::string_view kFeedback = "feedback";
constexpr std::string_view kTally = "explainer_tally";

}  // namespace

void to_json(Json& j, const ExplainerTally& t) {
  j = Json{{"explainer_id", t.explainer_id}, {"accept", t.accept}, {"reject", t.reject}};
}

void to_json(Json& j, const CompareEntry& e) {
  j = Json{{"kind", e.kind},
           {"id", e.id},
           {"model", e.model},
           {"payload_index", e.payload_index},
           {"output", e.output},
           {"attributions", e.attributions ? vector_to_json(*e.attributions) : Json()},
           {"quality", e.quality ? Json(*e.quality) : Json()}};
}

double classification_uncertainty(double p) { return 1.0 - std::abs(2.0 * p - 1.0); }

std::vector<ReviewItem> order_review_items(std::vector<ReviewItem> items, std::size_t limit) {
  std::erase_if(items, [](const ReviewItem& r) { return r.resolved; });
  std::sort(items.begin(), items.end(), [](const ReviewItem& a, const ReviewItem& b) {
    if (a.uncertainty != b.uncertainty) return a.uncertainty > b.uncertainty;
    return a.sequence > b.sequence;
  });
  if (items.size() > limit) items.resize(limit);
  return items;
}

FeedbackService::FeedbackService(Store& store, LineageGraph& lineage, DataAdmin& data,
                                 Trainer& trainer, ModelManager& models, Observer& observer,
                                 Clock clock)
    : store_(store),
      lineage_(lineage),
      data_(data),
      trainer_(trainer),
      models_(models),
      observer_(observer),
      clock_(std::move(clock)) {}

FeedbackResult FeedbackService::submit(const FeedbackRequest& req) {
  if (req.corrected_label && req.kind != FeedbackKind::kPrediction) {
    throw_validation("corrected_label is only allowed for prediction feedback");
  }
  if (req.corrected_label && !std::isfinite(*req.corrected_label)) {
    throw_validation("corrected_label must be finite");
  }
  Id target = req.target_id;
  switch (req.kind) {
    case FeedbackKind::kPrediction:
      models_.get_record(target);
      break;
    case FeedbackKind::kDataQuality:
      // An inference record stands for its stored input sample.
      if (models_.has_record(target)) target = models_.get_record(target).input;
      if (!data_.has_sample(target)) throw_not_found("sample", req.target_id);
      break;
    case FeedbackKind::kExplanation:
      models_.get_explanation(target);
      break;
  }

  FeedbackRecord rec;
  rec.kind = req.kind;
  rec.target_id = target;
  rec.verdict = req.verdict;
  rec.corrected_label = req.corrected_label;
  rec.comment = req.comment;
  rec.author = req.author;
  rec.created_at = clock_();
  const std::int64_t bucket = rec.created_at.utc_micros() / kFeedbackBucketMicros;
  rec.feedback_id = content_id(Json{{"kind", std::string(enum_name(rec.kind))},
                                    {"target", target},
                                    {"verdict", std::string(enum_name(rec.verdict))},
                                    {"label", req.corrected_label ? Json(*req.corrected_label) : Json()},
                                    {"author", rec.author},
                                    {"bucket", bucket}});
  if (auto existing = store_.get_meta(kFeedback, rec.feedback_id)) {
    return {existing->get<FeedbackRecord>(), true};
  }

  switch (req.kind) {
    case FeedbackKind::kPrediction: {
      std::optional<double> label = req.corrected_label;
      // Accepting a prediction confirms the served output as the outcome.
      if (!label && req.verdict == Verdict::kAccept) label = models_.get_record(target).output.value;
      if (label) observer_.record_outcome(target, *label, req.author);
      break;
    }
    case FeedbackKind::kDataQuality:
      if (req.verdict == Verdict::kReject) {
        data_.mark_bad(target, req.comment.empty() ? "rejected in review" : req.comment, req.author);
      }
      break;
    case FeedbackKind::kExplanation: {
      const Id explainer = models_.get_explanation(target).explainer;
      ExplainerTally t = tally(explainer);
      (req.verdict == Verdict::kAccept ? t.accept : t.reject) += 1;
      store_.put_meta(kTally, explainer, Json(t));
      break;
    }
  }
  store_.put_meta(kFeedback, rec.feedback_id, Json(rec));
  lineage_.add_edge(target, rec.feedback_id, Relation::kFeedbackOn);
  return {rec, false};
}

std::vector<FeedbackRecord> FeedbackService::list(std::optional<Id> target) const {
  std::vector<FeedbackRecord> out;
  for (const Id& id : store_.list_meta(kFeedback)) {
    FeedbackRecord f = store_.get_meta(kFeedback, id)->get<FeedbackRecord>();
    if (target && f.target_id != *target) continue;
    out.push_back(std::move(f));
  }
  std::sort(out.begin(), out.end(), [](const FeedbackRecord& a, const FeedbackRecord& b) {
    return a.created_at.utc_micros() < b.created_at.utc_micros();
  });
  return out;
}

ExplainerTally FeedbackService::tally(const Id& explainer_id) const {
  if (auto meta = store_.get_meta(kTally, explainer_id)) {
    const Json& j = *meta;
    return {explainer_id, j.at("accept").get<std::uint64_t>(), j.at("reject").get<std::uint64_t>()};
  }
  models_.get_explainer(explainer_id);
  return {explainer_id, 0, 0};
}

bool FeedbackService::is_resolved(const Id& request_id) const {
  if (observer_.resolved_label(request_id)) return true;
  for (const FeedbackRecord& f : list(request_id)) {
    if (f.kind == FeedbackKind::kPrediction) return true;
  }
  return false;
}

std::vector<ReviewItem> FeedbackService::review_queue(const Id& deployment_id,
                                                      std::size_t limit) const {
  models_.get_deployment(deployment_id);
  const auto records = models_.records(deployment_id);
  std::set<Id> reviewed;
  for (const Id& id : store_.list_meta(kFeedback)) {
    const FeedbackRecord f = store_.get_meta(kFeedback, id)->get<FeedbackRecord>();
    if (f.kind == FeedbackKind::kPrediction) reviewed.insert(f.target_id);
  }
  // Output spread for normalizing shadow disagreement on regressors.
  double mean = 0.0, sq = 0.0;
  for (const auto& r : records) mean += r.output.value;
  if (!records.empty()) mean /= static_cast<double>(records.size());
  for (const auto& r : records) sq += (r.output.value - mean) * (r.output.value - mean);
  const double spread = records.empty() ? 0.0 : std::sqrt(sq / static_cast<double>(records.size()));

  std::vector<ReviewItem> items;
  for (const auto& r : records) {
    ReviewItem item;
    item.request_id = r.request_id;
    item.sequence = r.sequence;
    item.output = r.output;
    item.resolved = reviewed.count(r.request_id) > 0 || observer_.resolved_label(r.request_id).has_value();
    if (r.output.probability) {
      item.uncertainty = classification_uncertainty(*r.output.probability);
    } else if (r.shadow_output && spread > 0.0) {
      item.uncertainty = std::min(1.0, std::abs(r.output.value - r.shadow_output->value) / spread);
    }
    items.push_back(std::move(item));
  }
  return order_review_items(std::move(items), limit);
}

std::vector<CompareEntry> FeedbackService::compare(const CompareRequest& req) const {
  if (req.payloads.empty()) throw_validation("compare needs at least one payload");
  if (req.models.empty() && req.explainers.empty()) {
    throw_validation("compare needs at least one model or explainer");
  }
  std::vector<CompareEntry> out;
  auto check_dim = [&](const Id& model, std::size_t dim) {
    for (std::size_t i = 0; i < req.payloads.size(); ++i) {
      if (req.payloads[i].size() != dim) {
        throw_validation("payload " + std::to_string(i) + " has " +
                         std::to_string(req.payloads[i].size()) + " features; model " + model +
                         " expects " + std::to_string(dim));
      }
    }
  };
  for (const Id& m : req.models) check_dim(m, trainer_.get_model(m).dimension);
  std::vector<std::pair<ExplainerVersion, Id>> explainers;
  for (const Id& e : req.explainers) {
    ExplainerVersion ev = models_.get_explainer(e);
    const Id model = req.explained_model.value_or(ev.compatible_models.front());
    if (std::find(ev.compatible_models.begin(), ev.compatible_models.end(), model) ==
        ev.compatible_models.end()) {
      throw_validation("explainer " + e + " is not compatible with model " + model);
    }
    check_dim(model, trainer_.get_model(model).dimension);
    explainers.emplace_back(std::move(ev), model);
  }

  for (std::size_t i = 0; i < req.payloads.size(); ++i) {
    const Vector& x = req.payloads[i];
    for (const Id& m : req.models) {
      CompareEntry entry;
      entry.kind = "model";
      entry.id = m;
      entry.model = m;
      entry.payload_index = i;
      entry.output = trainer_.predictor(m)->predict(x);
      out.push_back(std::move(entry));
    }
    for (const auto& [ev, model] : explainers) {
      const ModelVersion mv = trainer_.get_model(model);
      const auto predictor = trainer_.predictor(model);
      ExplainInputs inputs;
      FeatureMatrix reference;
      Vector labels;
      if (ev.method == ExplainMethod::kPermutationImportance) {
        const Id ds = ev.config.contains("dataset") ? ev.config["dataset"].get<std::string>()
                                                    : trainer_.get_run(mv.training_run).dataset;
        const DatasetVersion dataset = data_.get_dataset(ds);
        reference = data_.materialize(dataset.members);
        labels = trainer_.labels_for(dataset.members);
        inputs.data = &reference;
        inputs.labels = &labels;
      }
      const ComputedExplanation computed = compute_explanation(ev, *predictor, x, mv.baseline, inputs);
      CompareEntry entry;
      entry.kind = "explainer";
      entry.id = ev.explainer_id;
      entry.model = model;
      entry.payload_index = i;
      entry.output = predictor->predict(x);
      entry.attributions = computed.attributions;
      entry.quality = computed.quality;
      out.push_back(std::move(entry));
    }
  }
  return out;
}

}  // namespace xmlops
