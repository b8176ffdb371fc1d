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

#include "xmlops/training.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "xmlops/kernels.hpp"
#include "xmlops/metrics.hpp"
#include "xmlops/random.hpp"

namespace xmlops {
namespace {

constexpr std::string_view kRun = "run";
constexpr std::string_view kModel = "model";

double number_param(const Json& hp, const char* key, double fallback) {
  auto it = hp.find(key);
  if (it == hp.end() || it->is_null()) return fallback;
  if (!it->is_number()) throw_validation(std::string("hyperparameter '") + key + "' must be numeric");
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw_validation(std::string("hyperparameter '") + key + "' must be finite");
  return v;
}

int integer_param(const Json& hp, const char* key, int fallback) {
  const double v = number_param(hp, key, fallback);
  if (std::floor(v) != v) throw_validation(std::string("hyperparameter '") + key + "' must be an integer");
  return static_cast<int>(v);
}

void reject_unknown(const Json& hp, std::initializer_list<const char*> allowed) {
  for (const auto& [key, _] : hp.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw_validation("unknown hyperparameter '" + key + "'");
  }
}

MetricReport evaluate_split(const Predictor& model, const FeatureMatrix& x, const Vector& y,
                            SplitName split) {
  MetricReport report;
  if (x.empty()) {
    for (const auto& name : metric_names(model.task())) {
      report.values[name] = MetricValue::undefined("empty_split");
    }
  } else {
    const auto predictions = kernels::evaluate_rows(
        [&](std::span<const double> row) { return model.decision(row); }, x);
    report = compute_metrics(predictions, y, model.task());
  }
  report.split = split;
  return report;
}

}  // namespace

void validate_split(const SplitSpec& spec) {
  for (double f : {spec.train_frac, spec.val_frac, spec.test_frac}) {
    if (!(f > 0.0 && f < 1.0)) throw_validation("split fractions must lie in (0, 1)");
  }
  const double sum = spec.train_frac + spec.val_frac + spec.test_frac;
  if (std::abs(sum - 1.0) > 1e-9) throw_validation("split fractions must sum to 1");
}

SplitSizes split_sizes(std::size_t n, const SplitSpec& spec) {
  validate_split(spec);
  const double fracs[3] = {spec.train_frac, spec.val_frac, spec.test_frac};
  std::size_t sizes[3];
  double rema[3];
  std::size_t used = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = fracs[i] * static_cast<double>(n);
    // The epsilon keeps 0.8 * 10 from flooring to 7.
    sizes[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    rema[i] = exact - static_cast<double>(sizes[i]);
    used += sizes[i];
  }
  std::size_t left = n - std::min(used, n);
  int order[3] = {0, 1, 2};
  std::stable_sort(order, order + 3, [&](int a, int b) { return rema[a] > rema[b] + 1e-12; });
  for (int k = 0; left > 0; k = (k + 1) % 3, --left) sizes[order[k]] += 1;
  return {sizes[0], sizes[1], sizes[2]};
}

SplitMaterialization split_members(std::span<const Id> members, const SplitSpec& spec) {
  const SplitSizes sizes = split_sizes(members.size(), spec);
  std::vector<Id> shuffled(members.begin(), members.end());
  Rng rng(spec.seed);
  rng.shuffle(std::span<Id>(shuffled));
  SplitMaterialization out;
  auto it = shuffled.begin();
  out.train.assign(it, it + static_cast<std::ptrdiff_t>(sizes.train));
  it += static_cast<std::ptrdiff_t>(sizes.train);
  out.val.assign(it, it + static_cast<std::ptrdiff_t>(sizes.val));
  it += static_cast<std::ptrdiff_t>(sizes.val);
  out.test.assign(it, shuffled.end());
  return out;
}

Json normalize_hyperparams(Architecture architecture, const Json& hp_in) {
  const Json hp = hp_in.is_null() ? Json::object() : hp_in;
  if (!hp.is_object()) throw_validation("hyperparams must be an object");
  switch (architecture) {
    case Architecture::kLinearRegression: {
      reject_unknown(hp, {"ridge"});
      const double ridge = number_param(hp, "ridge", 0.0);
      if (ridge < 0) throw_validation("ridge must be >= 0");
      return Json{{"ridge", ridge}};
    }
    case Architecture::kLogisticRegression: {
      reject_unknown(hp, {"learning_rate", "epochs", "l2"});
      const double lr = number_param(hp, "learning_rate", 0.1);
      const int epochs = integer_param(hp, "epochs", 500);
      const double l2 = number_param(hp, "l2", 0.0);
      if (!(lr > 0)) throw_validation("learning_rate must be > 0");
      if (epochs < 1) throw_validation("epochs must be >= 1");
      if (l2 < 0) throw_validation("l2 must be >= 0");
      return Json{{"learning_rate", lr}, {"epochs", epochs}, {"l2", l2}};
    }
    case Architecture::kKnn: {
      reject_unknown(hp, {"k", "task"});
      const int k = integer_param(hp, "k", 5);
      if (k < 1) throw_validation("k must be >= 1");
      const Task task = parse_enum<Task>(hp.value("task", std::string("binary_classification")));
      if (task == Task::kClustering) throw_validation("knn supports regression or binary_classification");
      return Json{{"k", k}, {"task", std::string(enum_name(task))}};
    }
  }
  throw_internal("unhandled architecture");
}

KeyValue software_manifest() {
  KeyValue m;
  m["xmlops"] = "0.1.0";
#if defined(__clang__)
  m["compiler"] = std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
  m["compiler"] = std::string("gcc ") + __VERSION__;
#endif
  m["cxx_standard"] = std::to_string(__cplusplus);
  m["nlohmann_json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                       std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                       std::to_string(NLOHMANN_JSON_VERSION_PATCH);
  m["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
               "." + std::to_string(EIGEN_MINOR_VERSION);
#ifdef _OPENMP
  m["openmp"] = std::to_string(_OPENMP);
#else
  m["openmp"] = "disabled";
#endif
  m["hash"] = std::string(kHashAlgorithm);
  return m;
}

Trainer::Trainer(Store& store, LineageGraph& lineage, DataAdmin& data, Clock clock)
    : store_(store), lineage_(lineage), data_(data), clock_(std::move(clock)) {}

Vector Trainer::labels_for(std::span<const Id> sample_ids) const {
  Vector y;
  std::vector<Id> unlabeled;
  for (const Id& id : sample_ids) {
    auto label = data_.latest_label(id);
    if (!label) {
      unlabeled.push_back(id);
    } else {
      y.push_back(*label);
    }
  }
  if (!unlabeled.empty()) {
    std::string list;
    for (std::size_t i = 0; i < unlabeled.size(); ++i) {
      if (i == 5) {
        list += ", ... (" + std::to_string(unlabeled.size()) + " total)";
        break;
      }
      list += (i ? ", " : "") + unlabeled[i];
    }
    throw_validation("unlabeled samples: " + list);
  }
  return y;
}

SplitMaterialization Trainer::split_dataset(const Id& dataset_id, const SplitSpec& spec) const {
  const DatasetVersion dataset = data_.get_dataset(dataset_id);
  if (!dataset.sealed) throw_precondition("dataset " + dataset_id + " must be sealed before splitting");
  if (dataset.members.empty()) throw_validation("dataset " + dataset_id + " is empty");
  labels_for(dataset.members);
  return split_members(dataset.members, spec);
}

std::unique_ptr<Predictor> Trainer::fit(const TrainRequest& request, const FeatureMatrix& x,
                                        const Vector& y, std::span<const Id> train_ids) const {
  const Json& hp = request.hyperparams;
  switch (request.architecture) {
    case Architecture::kLinearRegression:
      return std::make_unique<LinearModel>(fit_linear_regression(x, y, hp.at("ridge").get<double>()));
    case Architecture::kLogisticRegression: {
      LogisticParams p;
      p.learning_rate = hp.at("learning_rate").get<double>();
      p.epochs = hp.at("epochs").get<int>();
      p.l2 = hp.at("l2").get<double>();
      return std::make_unique<LinearModel>(fit_logistic_regression(x, y, p, request.seed));
    }
    case Architecture::kKnn: {
      const int k = hp.at("k").get<int>();
      if (static_cast<std::size_t>(k) > x.rows()) {
        throw_validation("k = " + std::to_string(k) + " exceeds the training split size " +
                         std::to_string(x.rows()));
      }
      return std::make_unique<KnnModel>(x, y, k, parse_enum<Task>(hp.at("task").get<std::string>()),
                                        std::vector<Id>(train_ids.begin(), train_ids.end()));
    }
  }
  throw_internal("unhandled architecture");
}

TrainResult Trainer::train(const TrainRequest& request_in) {
  TrainRequest request = request_in;
  request.hyperparams = normalize_hyperparams(request.architecture, request.hyperparams);
  validate_split(request.split);
  const SplitMaterialization split = split_dataset(request.dataset, request.split);
  if (split.train.empty()) throw_validation("training split is empty");

  const Id run_id = content_id(Json{{"architecture", std::string(enum_name(request.architecture))},
                                    {"dataset", request.dataset},
                                    {"split", request.split},
                                    {"hyperparams", request.hyperparams},
                                    {"seed", request.seed}});

  const Timestamp started = clock_();
  const FeatureMatrix x_train = data_.materialize(split.train);
  const Vector y_train = labels_for(split.train);
  std::unique_ptr<Predictor> model = fit(request, x_train, y_train, split.train);
  const std::string artifact_bytes = canonical(model->artifact());

  if (has_run(run_id)) {
    TrainResult existing{get_run(run_id), {}, true};
    existing.model = get_model(existing.run.produced_model);
    if (existing.model.artifact != sha256_hex(artifact_bytes)) {
      throw_internal("non-reproducible training: run " + run_id +
                     " produced a different artifact on re-execution");
    }
    return existing;
  }

  const FeatureMatrix x_val = data_.materialize(split.val);
  const FeatureMatrix x_test = data_.materialize(split.test);
  const Vector y_val = split.val.empty() ? Vector{} : labels_for(split.val);
  const Vector y_test = split.test.empty() ? Vector{} : labels_for(split.test);

  TrainingRun run;
  run.run_id = run_id;
  run.architecture = request.architecture;
  run.dataset = request.dataset;
  run.split = request.split;
  run.materialization = split;
  run.hyperparams = request.hyperparams;
  run.seed = request.seed;
  run.metrics["train"] = evaluate_split(*model, x_train, y_train, SplitName::kTrain);
  run.metrics["val"] = evaluate_split(*model, x_val, y_val, SplitName::kVal);
  run.metrics["test"] = evaluate_split(*model, x_test, y_test, SplitName::kTest);
  run.software_manifest = software_manifest();
  run.started_at = started;
  run.finished_at = clock_();

  ModelVersion mv;
  mv.architecture = request.architecture;
  mv.architecture_version = request.architecture == Architecture::kKnn
                                ? kKnnArchitectureVersion
                                : kLinearArchitectureVersion;
  mv.init_seed = request.seed;
  mv.training_run = run_id;
  mv.software_manifest = run.software_manifest;
  // Test metrics are the reference; small datasets fall back to val, then train.
  for (const char* split_name : {"test", "val", "train"}) {
    for (const auto& [name, value] : run.metrics[split_name].values) {
      if (value.value) mv.metrics[name] = *value.value;
    }
    if (!mv.metrics.empty()) break;
  }
  mv.task = model->task();
  mv.dimension = model->dimension();
  mv.artifact = store_.put_blob(artifact_bytes);
  mv.baseline = x_train.column_means();
  mv.model_id = content_id(Json{{"architecture", std::string(enum_name(mv.architecture))},
                                {"artifact", mv.artifact},
                                {"run", run_id}});
  run.produced_model = mv.model_id;

  store_.put_meta(kModel, mv.model_id, Json(mv));
  store_.put_meta(kRun, run_id, Json(run));
  lineage_.add_edge(request.dataset, run_id, Relation::kTrainedOn);
  lineage_.add_edge(run_id, mv.model_id, Relation::kProduced);
  predictors_[mv.model_id] = std::shared_ptr<const Predictor>(std::move(model));
  return {run, mv, false};
}

TrainingRun Trainer::get_run(const Id& run_id) const {
  auto meta = store_.get_meta(kRun, run_id);
  if (!meta) throw_not_found("run", run_id);
  return meta->get<TrainingRun>();
}

bool Trainer::has_run(const Id& run_id) const { return store_.has_meta(kRun, run_id); }
std::vector<Id> Trainer::list_runs() const { return store_.list_meta(kRun); }

ModelVersion Trainer::get_model(const Id& model_id) const {
  auto meta = store_.get_meta(kModel, model_id);
  if (!meta) throw_not_found("model", model_id);
  return meta->get<ModelVersion>();
}

bool Trainer::has_model(const Id& model_id) const { return store_.has_meta(kModel, model_id); }
std::vector<Id> Trainer::list_models() const { return store_.list_meta(kModel); }

void Trainer::put_model(const ModelVersion& model) {
  store_.put_meta(kModel, model.model_id, Json(model));
}

std::shared_ptr<const Predictor> Trainer::predictor(const Id& model_id) const {
  if (auto it = predictors_.find(model_id); it != predictors_.end()) return it->second;
  const ModelVersion mv = get_model(model_id);
  std::shared_ptr<const Predictor> p = load_predictor(Json::parse(store_.get_blob(mv.artifact)));
  predictors_[model_id] = p;
  return p;
}

RunRanking Trainer::compare_runs(std::span<const Id> run_ids, const std::string& metric,
                                 SplitName split) const {
  if (run_ids.empty()) throw_validation("compare_runs needs at least one run");
  if (!is_known_metric(metric)) throw_validation("unknown metric '" + metric + "'");
  struct Row {
    Id id;
    double value;
    std::int64_t finished;
  };
  std::vector<Row> rows;
  std::optional<Task> task;
  for (const Id& id : run_ids) {
    const TrainingRun run = get_run(id);
    const Task run_task = get_model(run.produced_model).task;
    if (task && *task != run_task) throw_validation("runs do not share a task type");
    task = run_task;
    auto report = run.metrics.find(std::string(enum_name(split)));
    std::optional<double> value;
    if (report != run.metrics.end()) value = report->second.get(metric);
    if (!value) {
      throw_validation("metric '" + metric + "' is not available on the " +
                       std::string(enum_name(split)) + " split of run " + id);
    }
    rows.push_back({id, *value, run.finished_at.utc_micros()});
  }
  std::stable_sort(rows.begin(), rows.end(), [&](const Row& a, const Row& b) {
    if (a.value != b.value) return metric_better(metric, a.value, b.value);
    if (a.finished != b.finished) return a.finished < b.finished;
    return a.id < b.id;
  });
  RunRanking out;
  for (const Row& r : rows) out.ranked.emplace_back(r.id, r.value);
  out.best = rows.front().id;
  return out;
}

}  // namespace xmlops
