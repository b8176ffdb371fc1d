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
#include <string>
#include <vector>

#include "xmlops/observe.hpp"
#include "xmlops/serving.hpp"

namespace xmlops {

inline constexpr std::int64_t kFeedbackBucketMicros = 60LL * 1'000'000;

struct FeedbackRequest {
  FeedbackKind kind = FeedbackKind::kPrediction;
  Id target_id;
  Verdict verdict = Verdict::kAccept;
  std::optional<double> corrected_label;
  std::string comment;
  std::string author;
};

struct FeedbackResult {
  FeedbackRecord record;
  bool duplicate = false;  // same feedback already recorded in this time bucket
};

struct ExplainerTally {
  Id explainer_id;
  std::uint64_t accept = 0;
  std::uint64_t reject = 0;
};

struct CompareEntry {
  std::string kind;  // "model" | "explainer"
  Id id;
  Id model;
  std::size_t payload_index = 0;
  PredictionOutput output;
  std::optional<Vector> attributions;
  std::optional<ExplanationQuality> quality;
};

struct CompareRequest {
  std::vector<Vector> payloads;
  std::vector<Id> models;
  std::vector<Id> explainers;
  // Model explained by each explainer; defaults to its first compatible model.
  std::optional<Id> explained_model;
};

void to_json(Json& j, const ExplainerTally& t);
void to_json(Json& j, const CompareEntry& e);

// 1 - |2p - 1| for a class probability p.
double classification_uncertainty(double p);

// Sorted by descending uncertainty, newest first on ties; resolved items
// are dropped.
std::vector<ReviewItem> order_review_items(std::vector<ReviewItem> items, std::size_t limit);

class FeedbackService {
 public:
  FeedbackService(Store& store, LineageGraph& lineage, DataAdmin& data, Trainer& trainer,
                  ModelManager& models, Observer& observer, Clock clock);

  FeedbackResult submit(const FeedbackRequest& request);
  std::vector<FeedbackRecord> list(std::optional<Id> target = std::nullopt) const;
  ExplainerTally tally(const Id& explainer_id) const;

  bool is_resolved(const Id& request_id) const;
  std::vector<ReviewItem> review_queue(const Id& deployment_id, std::size_t limit) const;

  std::vector<CompareEntry> compare(const CompareRequest& request) const;

 private:
  Store& store_;
  LineageGraph& lineage_;
  DataAdmin& data_;
  Trainer& trainer_;
  ModelManager& models_;
  Observer& observer_;
  Clock clock_;
};

}  // namespace xmlops
