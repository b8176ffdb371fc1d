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

#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xmlops/lineage.hpp"
#include "xmlops/matrix.hpp"
#include "xmlops/store.hpp"
#include "xmlops/types.hpp"

namespace xmlops {

struct IngestRequest {
  RawPayload payload;
  Provenance provenance;
  std::string captured_at;  // RFC 3339, offset required
  FormatTag format_tag = FormatTag::kTabularRow;
  std::optional<double> label;  // attached as a system annotation when set
};

struct RecipeOutcome {
  DatasetVersion dataset;
  std::vector<std::string> warnings;
};

// Data management: ingestion, dataset definition and sealing, preprocessing,
// annotations and data-quality exclusion.
class DataAdmin {
 public:
  DataAdmin(Store& store, LineageGraph& lineage, Clock clock);

  // Idempotent: identical content returns the existing record.
  SampleRecord ingest_sample(const IngestRequest& request);
  SampleRecord get_sample(const Id& id) const;
  bool has_sample(const Id& id) const;
  std::vector<Id> list_samples() const;

  DatasetVersion define_dataset(std::vector<Id> members,
                                std::optional<Id> recipe = std::nullopt);
  DatasetVersion seal_dataset(const Id& dataset_id);
  DatasetVersion get_dataset(const Id& dataset_id) const;
  bool has_dataset(const Id& dataset_id) const;
  std::vector<Id> list_datasets() const;

  // Mutations allowed only while unsealed. Drafts are content-addressed, so
  // each mutation re-keys the draft and returns the new version.
  DatasetVersion append_samples(const Id& dataset_id, std::span<const Id> samples);
  DatasetVersion remove_samples(const Id& dataset_id, std::span<const Id> samples);
  DatasetVersion set_recipe(const Id& dataset_id, std::optional<Id> recipe);

  PreprocessingRecipe register_recipe(std::vector<RecipeStep> steps);
  PreprocessingRecipe get_recipe(const Id& recipe_id) const;

  // Sealed source in, sealed derived dataset out, with derived_from edges.
  RecipeOutcome apply_recipe(const Id& dataset_id, const PreprocessingRecipe& recipe);

  Annotation attach_annotation(const Id& sample_id, double label, std::string author,
                               Origin origin);
  std::vector<Annotation> annotations_for(const Id& sample_id) const;
  // Label of the latest annotation by timestamp.
  std::optional<double> latest_label(const Id& sample_id) const;

  ExclusionMark mark_bad(const Id& sample_id, std::string reason, std::string author);
  bool is_excluded(const Id& sample_id) const;
  std::vector<Id> excluded_samples() const;

  // k nearest samples by Euclidean distance, excluding the query; ties broken
  // by id. Candidates are `scope` when given, otherwise every stored sample.
  std::vector<Id> find_similar(const Id& sample_id, std::size_t k,
                               std::optional<Id> scope = std::nullopt) const;

  // Dense feature rows for the given samples, in order.
  FeatureMatrix materialize(std::span<const Id> sample_ids) const;

  Clock& clock() { return clock_; }

 private:
  DatasetVersion store_dataset(DatasetVersion dataset);
  DatasetVersion mutable_draft(const Id& dataset_id) const;
  DatasetVersion rekey_draft(const Id& old_id, DatasetVersion draft);
  void index_annotations() const;

  Store& store_;
  LineageGraph& lineage_;
  Clock clock_;
  mutable bool annotations_indexed_ = false;
  mutable std::map<Id, std::vector<Annotation>> annotations_;
};

// Pure transformation behind apply_recipe. Steps run in order over the
// whole dataset; per-feature steps need equal dimensions.
std::vector<RawPayload> transform_payloads(std::vector<RawPayload> rows,
                                           const PreprocessingRecipe& recipe,
                                           std::vector<std::string>* warnings);
void validate_recipe_steps(const std::vector<RecipeStep>& steps);

// Bulk ingress parsers. CSV: header row; reserved columns ts (RFC 3339,
// required), equipment_id (required), location, format, label; columns
// prefixed "cfg." go to sensor_config; every other column is a payload
// feature in header order, and an empty cell is the missing marker.
// JSON: array of {payload, provenance{equipment_id, location, captured_at,
// sensor_config}, format_tag?, label?}. Errors name the offending row.
std::vector<IngestRequest> parse_csv_ingest(std::istream& in);
std::vector<IngestRequest> parse_json_ingest(const Json& doc);
IngestRequest parse_ingest_item(const Json& item);

}  // namespace xmlops
