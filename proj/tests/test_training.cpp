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

#include "doctest.h"
#include "support.hpp"
#include "xmlops/training.hpp"

using namespace xmlops;
using testing::PlatformFixture;

namespace {

Id regression_dataset(PlatformFixture& f, std::size_t n, std::uint64_t seed = 1) {
  return f.sealed_dataset(testing::ingest_all(f, testing::linear_data(n, {2.0, -1.0}, 0.5, 0.1, seed)));
}

}  // namespace

TEST_CASE("split sizes use floors plus largest remainders") {
  auto s = split_sizes(10, {});
  CHECK((s.train == 8 && s.val == 1 && s.test == 1));
  s = split_sizes(3, {1.0 / 3, 1.0 / 3, 1.0 / 3, 0});
  CHECK((s.train == 1 && s.val == 1 && s.test == 1));
  s = split_sizes(7, {0.5, 0.25, 0.25, 0});
  // Floors 3/1/1; the two leftovers go to the larger remainders.
  CHECK((s.train == 3 && s.val == 2 && s.test == 2));
  CHECK_THROWS_AS(validate_split({0.5, 0.5, 0.5, 0}), Error);
  CHECK_THROWS_AS(validate_split({-0.1, 0.6, 0.5, 0}), Error);
}

TEST_CASE("split materialization is a seeded partition") {
  std::vector<Id> members;
  for (int i = 0; i < 50; ++i) members.push_back("s" + std::to_string(i));
  SplitSpec spec;
  spec.seed = 4;
  const auto a = split_members(members, spec);
  const auto b = split_members(members, spec);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  std::set<Id> all(a.train.begin(), a.train.end());
  all.insert(a.val.begin(), a.val.end());
  all.insert(a.test.begin(), a.test.end());
  CHECK(all.size() == 50);
  spec.seed = 5;
  CHECK(split_members(members, spec).train != a.train);
}

TEST_CASE("identical requests reproduce the same run and model") {
  PlatformFixture f;
  const Id d = regression_dataset(f, 60);
  TrainRequest req;
  req.dataset = d;
  req.seed = 3;
  const TrainResult first = f->trainer().train(req);
  CHECK_FALSE(first.reused);
  const TrainResult again = f->trainer().train(req);
  CHECK(again.reused);
  CHECK(again.run.run_id == first.run.run_id);
  CHECK(again.model.model_id == first.model.model_id);

  // A fresh store with the same inputs produces the same ids.
  PlatformFixture g;
  const Id d2 = regression_dataset(g, 60);
  CHECK(d2 == d);
  const TrainResult other = g->trainer().train(req);
  CHECK(other.model.model_id == first.model.model_id);
  CHECK(other.run.materialization.test == first.run.materialization.test);
}

TEST_CASE("runs record metrics for every split and a software manifest") {
  PlatformFixture f;
  TrainRequest req;
  req.dataset = regression_dataset(f, 50);
  const TrainResult r = f->trainer().train(req);
  CHECK(r.run.metrics.count("train") == 1);
  CHECK(r.run.metrics.count("test") == 1);
  CHECK(r.run.metrics.at("test").get("mse").has_value());
  CHECK(r.model.metrics.count("mse") == 1);
  CHECK_FALSE(r.run.software_manifest.empty());
  CHECK(r.run.produced_model == r.model.model_id);
  CHECK(r.model.dimension == 2);
  CHECK(f->trainer().predictor(r.model.model_id)->dimension() == 2);
}

TEST_CASE("model lineage reaches every training sample") {
  PlatformFixture f;
  const auto data = testing::linear_data(3, {1.0}, 0.0, 0.0, 2);
  const auto ids = testing::ingest_all(f, data);
  TrainRequest req;
  req.dataset = f.sealed_dataset(ids);
  req.split = {1.0 / 3, 1.0 / 3, 1.0 / 3, 0};
  req.architecture = Architecture::kKnn;
  req.hyperparams = {{"k", 1}, {"task", "regression"}};
  const TrainResult r = f->trainer().train(req);
  const auto sub = f->lineage().resolve(r.model.model_id);
  for (const Id& s : ids) CHECK(sub.ancestors.count(s) == 1);
  CHECK(sub.ancestors.count(r.run.run_id) == 1);
}

TEST_CASE("training preconditions") {
  PlatformFixture f;
  const auto ids = testing::ingest_all(f, testing::linear_data(10, {1.0}, 0.0, 0.0, 1));
  const DatasetVersion draft = f->data().define_dataset(ids);
  TrainRequest req;
  req.dataset = draft.dataset_id;
  CHECK_THROWS_AS(f->trainer().train(req), Error);
  req.dataset = f.sealed_dataset(ids);
  req.hyperparams = {{"depth", 3}};
  CHECK_THROWS_AS(f->trainer().train(req), Error);
  req.hyperparams = {{"ridge", -1}};
  CHECK_THROWS_AS(f->trainer().train(req), Error);

  // Unlabelled samples cannot be trained on.
  const Id bare = f.ingest({5.0});
  TrainRequest unl;
  unl.dataset = f.sealed_dataset({bare, ids[0], ids[1]});
  CHECK_THROWS_AS(f->trainer().train(unl), Error);
}

TEST_CASE("hyperparams are normalized with defaults") {
  CHECK(normalize_hyperparams(Architecture::kLinearRegression, Json::object()) == Json{{"ridge", 0.0}});
  const Json lr = normalize_hyperparams(Architecture::kLogisticRegression, {{"epochs", 10}});
  CHECK(lr.at("epochs") == 10);
  CHECK(lr.at("learning_rate") == 0.1);
  CHECK(normalize_hyperparams(Architecture::kKnn, Json::object()).at("k") == 5);
}

TEST_CASE("compare_runs ranks by metric direction") {
  PlatformFixture f;
  const Id d = regression_dataset(f, 80, 3);
  TrainRequest a;
  a.dataset = d;
  TrainRequest b = a;
  b.hyperparams = {{"ridge", 500.0}};
  const Id ra = f->trainer().train(a).run.run_id;
  const Id rb = f->trainer().train(b).run.run_id;
  const std::vector<Id> runs{rb, ra};
  const RunRanking mse = f->trainer().compare_runs(runs, "mse", SplitName::kTest);
  CHECK(mse.best == ra);
  CHECK(mse.ranked.front().second <= mse.ranked.back().second);
  const RunRanking r2 = f->trainer().compare_runs(runs, "r2", SplitName::kTest);
  CHECK(r2.best == ra);
  CHECK_THROWS_AS(f->trainer().compare_runs(runs, "f1", SplitName::kTest), Error);
}

TEST_CASE("logistic training classifies separable blobs") {
  PlatformFixture f;
  const auto data = testing::blob_data(100, 2, 2.0, 4);
  TrainRequest req;
  req.dataset = f.sealed_dataset(testing::ingest_all(f, data));
  req.architecture = Architecture::kLogisticRegression;
  const TrainResult r = f->trainer().train(req);
  CHECK(r.model.task == Task::kBinaryClassification);
  CHECK(*r.run.metrics.at("test").get("accuracy") >= 0.9);
}
