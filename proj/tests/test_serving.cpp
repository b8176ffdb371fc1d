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
#include "xmlops/serving.hpp"

using namespace xmlops;
using namespace xmlops::testing;

namespace {

Vector point(Rng& rng) { return {rng.normal(), rng.normal()}; }

}  // namespace

TEST_CASE("registration requires a trained model with metrics") {
  PlatformFixture f;
  const TrainedPair m = trained_pair(f);
  CHECK(f->models().registry().size() == 2);
  CHECK(f->models().registry_entry(m.a)->sequence < f->models().registry_entry(m.b)->sequence);
  CHECK(f->models().register_model(m.a).sequence == f->models().registry_entry(m.a)->sequence);
  CHECK_THROWS_AS(f->models().register_model("nope"), Error);
}

TEST_CASE("deployment requests are validated") {
  PlatformFixture f;
  const TrainedPair m = trained_pair(f);
  CHECK_THROWS_AS(deploy(f, Scheme::kShadow, m.a), Error);
  CHECK_THROWS_AS(deploy(f, Scheme::kSingle, m.a, m.b), Error);
  CHECK_THROWS_AS(deploy(f, Scheme::kAb, m.a, m.b), Error);
  CHECK_THROWS_AS(deploy(f, Scheme::kAb, m.a, m.b, 1.5), Error);
  CHECK_THROWS_AS(deploy(f, Scheme::kCanary, m.a, m.a, 0.1), Error);

  TrainRequest req;
  req.dataset = m.dataset;
  req.hyperparams = {{"ridge", 7.0}};
  const Id unregistered = f->trainer().train(req).model.model_id;
  try {
    deploy(f, Scheme::kSingle, unregistered);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kPrecondition);
  }
}

TEST_CASE("shadow responses equal the single-scheme primary") {
  PlatformFixture f;
  const TrainedPair m = trained_pair(f);
  const Deployment single = deploy(f, Scheme::kSingle, m.a, std::nullopt, std::nullopt, "one");
  const Deployment shadow = deploy(f, Scheme::kShadow, m.a, m.b, std::nullopt, "two");
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const Vector x = point(rng);
    const auto s = f->models().infer(single.deployment_id, x, "k" + std::to_string(i)).record;
    const auto h = f->models().infer(shadow.deployment_id, x, "k" + std::to_string(i)).record;
    CHECK(h.output.value == s.output.value);
    CHECK(h.served_by == m.a);
    REQUIRE(h.shadow_output);
    CHECK(h.shadow_output->value == f->trainer().predictor(m.b)->predict(x).value);
  }
}

TEST_CASE("ab routing share tracks the traffic fraction") {
  PlatformFixture f;
  const TrainedPair m = trained_pair(f);
  const Deployment ab = deploy(f, Scheme::kAb, m.a, m.b, 0.3);
  int secondary = 0;
  for (int i = 0; i < 10000; ++i) secondary += routes_to_secondary(ab, "key-" + std::to_string(i));
  CHECK(std::abs(secondary / 10000.0 - 0.3) <= 0.03);
}

TEST_CASE("canary at zero and one") {
  PlatformFixture f;
  const TrainedPair m = trained_pair(f);
  Deployment c = deploy(f, Scheme::kCanary, m.a, m.b, 0.0);
  for (int i = 0; i < 500; ++i) CHECK_FALSE(routes_to_secondary(c, std::to_string(i)));
  c.traffic_fraction = 1.0;
  for (int i = 0; i < 500; ++i) CHECK(routes_to_secondary(c, std::to_string(i)));
}

TEST_CASE("routing and records survive a restart") {
  TempDir dir;
  const auto cfg = test_config(dir / "store");
  Id dep;
  std::vector<Id> served;
  {
    auto p = Platform::open(cfg, test_clock());
    std::vector<Id> ids;
    const auto data = linear_data(40, {1.0, 1.0}, 0.0, 0.1, 2);
    for (std::size_t i = 0; i < data.x.size(); ++i) {
      IngestRequest r;
      for (double v : data.x[i]) r.payload.push_back(v);
      r.provenance.equipment_id = "e";
      r.captured_at = "2026-01-01T00:00:00Z";
      r.label = data.y[i];
      ids.push_back(p->data().ingest_sample(r).sample_id);
    }
    const Id ds = p->data().seal_dataset(p->data().define_dataset(ids).dataset_id).dataset_id;
    TrainRequest req;
    req.dataset = ds;
    const Id a = p->trainer().train(req).model.model_id;
    req.hyperparams = {{"ridge", 2.0}};
    const Id b = p->trainer().train(req).model.model_id;
    p->models().register_model(a);
    p->models().register_model(b);
    DeploymentRequest dr;
    dr.scheme = Scheme::kAb;
    dr.primary_model = a;
    dr.secondary_model = b;
    dr.traffic_fraction = 0.5;
    dep = p->models().create_deployment(dr).deployment_id;
    for (int i = 0; i < 100; ++i) served.push_back(p->models().infer(dep, {0.1, 0.2}, "u" + std::to_string(i)).record.served_by);
  }
  auto p = Platform::open(cfg, stepping_clock(Timestamp::parse("2026-06-01T00:00:00Z"), 1000));
  CHECK(p->models().record_count(dep) == 100);
  for (int i = 0; i < 100; ++i) {
    CHECK(p->models().infer(dep, {0.1, 0.2}, "u" + std::to_string(i)).record.served_by == served[i]);
  }
}

TEST_CASE("promotion replaces the deployment and archives the old primary") {
  PlatformFixture f;
  const TrainedPair m = trained_pair(f);
  const Deployment shadow = deploy(f, Scheme::kShadow, m.a, m.b);
  const Deployment next = f->models().promote(shadow.deployment_id);
  CHECK(next.scheme == Scheme::kSingle);
  CHECK(next.primary_model == m.b);
  CHECK(next.promoted_from == shadow.deployment_id);
  CHECK(f->models().get_deployment(shadow.deployment_id).status == DeploymentStatus::kRetired);
  CHECK(f->models().active_for_endpoint("default")->deployment_id == next.deployment_id);
  CHECK(f->trainer().get_model(m.a).stage == ModelStage::kArchived);
  CHECK(f->trainer().get_model(m.b).stage == ModelStage::kDeployed);
  CHECK_THROWS_AS(f->models().infer(shadow.deployment_id, {0, 0}, "x"), Error);
  CHECK_THROWS_AS(f->models().promote(next.deployment_id), Error);
}

TEST_CASE("inference stores the input and links lineage") {
  PlatformFixture f;
  const TrainedPair m = trained_pair(f);
  const Deployment d = deploy(f, Scheme::kSingle, m.a);
  const InferenceRecord r = f->models().infer(d.deployment_id, {1.0, 2.0}, "").record;
  CHECK(r.request_key == "seq-0");
  CHECK(f->data().has_sample(r.input));
  CHECK(f->models().get_record(r.request_id).sequence == 0);
  const auto sub = f->lineage().resolve(r.request_id);
  CHECK(sub.ancestors.count(m.a) == 1);
  CHECK(sub.ancestors.count(r.input) == 1);
  CHECK_THROWS_AS(f->models().infer(d.deployment_id, {1.0}, "bad"), Error);
}

TEST_CASE("bound explainers explain every request unless deferred") {
  PlatformFixture f;
  const TrainedPair m = trained_pair(f);
  ExplainerVersion ev;
  ev.method = ExplainMethod::kLinearExact;
  ev.compatible_models = {m.a};
  const Id e = f->models().register_explainer(ev).explainer_id;
  DeploymentRequest r;
  r.primary_model = m.a;
  r.explainer = e;
  const Id dep = f->models().create_deployment(r).deployment_id;
  const InferResult out = f->models().infer(dep, {1.0, 1.0}, "a");
  REQUIRE(out.explanation);
  CHECK(out.explanation->quality.completeness == doctest::Approx(1.0));
  CHECK(f->models().explanation_for_request(out.record.request_id)->explanation_id ==
        out.explanation->explanation_id);

  r.endpoint = "lazy";
  r.defer_explanations = true;
  const Id lazy = f->models().create_deployment(r).deployment_id;
  CHECK_FALSE(f->models().infer(lazy, {1.0, 1.0}, "b").explanation);
  CHECK(f->models().fill_deferred_explanations(lazy) == 1);
  CHECK(f->models().deployment_explanations(lazy).size() == 1);

  ExplainerVersion wrong = ev;
  wrong.compatible_models = {m.b};
  r.explainer = f->models().register_explainer(wrong).explainer_id;
  r.endpoint = "mismatch";
  CHECK_THROWS_AS(f->models().create_deployment(r), Error);
}

TEST_CASE("ad-hoc explanations are stored and listed") {
  PlatformFixture f;
  const TrainedPair m = trained_pair(f);
  ExplainerVersion ev;
  ev.method = ExplainMethod::kPermutationImportance;
  ev.config = {{"metric", "mse"}};
  ev.compatible_models = {m.a};
  const Id e = f->models().register_explainer(ev).explainer_id;
  const Explanation x = f->models().explain(m.a, e, {0.5, 0.5}, m.dataset);
  CHECK(x.attributions.size() == 2);
  CHECK(x.attributions[0] > x.attributions[1]);
  CHECK(f->models().list_explanations(m.a, std::nullopt).size() == 1);
  CHECK(f->models().get_explanation(x.explanation_id).model == m.a);
  // Without a dataset the model's training data is the reference.
  const Explanation fallback = f->models().explain(m.a, e, {0.5, 0.5});
  CHECK(fallback.attributions == x.attributions);
}
