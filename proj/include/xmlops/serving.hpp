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

#include "xmlops/data_admin.hpp"
#include "xmlops/drift.hpp"
#include "xmlops/explain.hpp"
#include "xmlops/lineage.hpp"
#include "xmlops/training.hpp"

namespace xmlops {

struct DeploymentRequest {
  std::string endpoint = "default";
  Scheme scheme = Scheme::kSingle;
  Id primary_model;
  std::optional<Id> secondary_model;
  std::optional<double> traffic_fraction;
  std::optional<Id> explainer;
  bool defer_explanations = false;
  std::optional<std::uint64_t> routing_seed;
  std::optional<Id> promoted_from;
};

struct InferResult {
  InferenceRecord record;
  std::optional<Explanation> explanation;
};

// True when the secondary model answers this key. Pure function of the
// deployment's routing seed, so assignments survive restarts.
bool routes_to_secondary(const Deployment& deployment, std::string_view request_key);

// Model and explainer registry plus the serving layer.
class ModelManager {
 public:
  ModelManager(Store& store, LineageGraph& lineage, DataAdmin& data, Trainer& trainer,
               DriftMonitor& drift, Clock clock);

  RegistryEntry register_model(const Id& model_id);
  std::optional<RegistryEntry> registry_entry(const Id& model_id) const;
  std::vector<RegistryEntry> registry() const;

  ExplainerVersion register_explainer(ExplainerVersion explainer);
  ExplainerVersion get_explainer(const Id& explainer_id) const;
  std::vector<ExplainerVersion> list_explainers() const;

  Deployment create_deployment(const DeploymentRequest& request);
  Deployment get_deployment(const Id& deployment_id) const;
  std::vector<Deployment> list_deployments() const;
  std::optional<Deployment> active_for_endpoint(const std::string& endpoint) const;
  Deployment promote(const Id& deployment_id);

  InferResult infer(const Id& deployment_id, const Vector& payload, std::string request_key);

  // Inference log views.
  std::vector<InferenceRecord> records(const Id& deployment_id) const;
  const InferenceRecord& get_record(const Id& request_id) const;
  bool has_record(const Id& request_id) const;
  std::size_t record_count() const { return log_.size(); }
  std::size_t record_count(const Id& deployment_id) const {
    auto it = by_deployment_.find(deployment_id);
    return it == by_deployment_.end() ? 0 : it->second.size();
  }

  // Ad-hoc explanation of a payload; the payload is stored as a sample.
  Explanation explain(const Id& model_id, const Id& explainer_id, const Vector& payload,
                      std::optional<Id> dataset = std::nullopt);
  Explanation get_explanation(const Id& explanation_id) const;
  bool has_explanation(const Id& explanation_id) const;
  std::vector<Explanation> list_explanations(std::optional<Id> model,
                                             std::optional<Id> dataset) const;
  // Explanations attached to a deployment's traffic, oldest first.
  std::vector<Explanation> deployment_explanations(const Id& deployment_id) const;
  std::optional<Explanation> explanation_for_request(const Id& request_id) const;
  // Computes explanations skipped by defer_explanations; returns the count.
  std::size_t fill_deferred_explanations(const Id& deployment_id);

 private:
  void load_log();
  void check_explainer_compatible(const ExplainerVersion& explainer, const Id& model_id) const;
  Explanation make_explanation(const ExplainerVersion& explainer, const Id& model_id,
                               const Vector& payload, const Id& input,
                               std::optional<Id> request_id, std::optional<Id> deployment,
                               std::optional<Id> dataset);
  void set_stage(const Id& model_id, ModelStage stage);

  Store& store_;
  LineageGraph& lineage_;
  DataAdmin& data_;
  Trainer& trainer_;
  DriftMonitor& drift_;
  Clock clock_;
  std::vector<InferenceRecord> log_;
  std::map<Id, std::size_t> by_request_;
  std::map<Id, std::vector<std::size_t>> by_deployment_;
};

}  // namespace xmlops
