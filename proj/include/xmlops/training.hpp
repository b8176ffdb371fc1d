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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xmlops/data_admin.hpp"
#include "xmlops/lineage.hpp"
#include "xmlops/models.hpp"
#include "xmlops/store.hpp"

namespace xmlops {

struct SplitSizes {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};

void validate_split(const SplitSpec& spec);

// Floor allocation per fraction; leftover samples go to the splits with the
// largest fractional parts, train first on ties.
SplitSizes split_sizes(std::size_t n, const SplitSpec& spec);

// Seeded Fisher-Yates shuffle of `members`, then consecutive slices.
SplitMaterialization split_members(std::span<const Id> members, const SplitSpec& spec);

struct TrainRequest {
  Architecture architecture = Architecture::kLinearRegression;
  Id dataset;
  SplitSpec split;
  Json hyperparams = Json::object();
  std::uint64_t seed = 0;
};

struct TrainResult {
  TrainingRun run;
  ModelVersion model;
  bool reused = false;  // identical request already on record
};

struct RunRanking {
  std::vector<std::pair<Id, double>> ranked;  // best first
  Id best;
};

// Rejects unknown keys and fills defaults so run ids are canonical.
Json normalize_hyperparams(Architecture architecture, const Json& hyperparams);

KeyValue software_manifest();

// Experiment tracking and the built-in trainers.
class Trainer {
 public:
  Trainer(Store& store, LineageGraph& lineage, DataAdmin& data, Clock clock);

  SplitMaterialization split_dataset(const Id& dataset_id, const SplitSpec& spec) const;

  TrainResult train(const TrainRequest& request);

  TrainingRun get_run(const Id& run_id) const;
  bool has_run(const Id& run_id) const;
  std::vector<Id> list_runs() const;

  ModelVersion get_model(const Id& model_id) const;
  bool has_model(const Id& model_id) const;
  std::vector<Id> list_models() const;
  void put_model(const ModelVersion& model);

  // Deserialized predictor, cached per model id.
  std::shared_ptr<const Predictor> predictor(const Id& model_id) const;

  // Ranked by the metric's direction; ties go to the earlier finished run.
  RunRanking compare_runs(std::span<const Id> run_ids, const std::string& metric,
                          SplitName split) const;

  // Labels (latest annotation) for samples, in order.
  Vector labels_for(std::span<const Id> sample_ids) const;

 private:
  std::unique_ptr<Predictor> fit(const TrainRequest& request, const FeatureMatrix& x,
                                 const Vector& y, std::span<const Id> train_ids) const;

  Store& store_;
  LineageGraph& lineage_;
  DataAdmin& data_;
  Clock clock_;
  mutable std::map<Id, std::shared_ptr<const Predictor>> predictors_;
};

}  // namespace xmlops
