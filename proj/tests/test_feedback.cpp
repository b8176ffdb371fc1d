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
#include "xmlops/feedback.hpp"

using namespace xmlops;
using namespace xmlops::testing;

namespace {

FeedbackRequest prediction_feedback(const Id& target, Verdict v, std::optional<double> label = std::nullopt) {
  FeedbackRequest r;
  r.kind = FeedbackKind::kPrediction;
  r.target_id = target;
  r.verdict = v;
  r.corrected_label = label;
  r.author = "rev";
  return r;
}

}  // namespace

TEST_CASE("uncertainty peaks at p = 0.5") {
  CHECK(classification_uncertainty(0.5) == 1.0);
  CHECK(classification_uncertainty(0.0) == 0.0);
  CHECK(classification_uncertainty(1.0) == 0.0);
  CHECK(classification_uncertainty(0.9) == doctest::Approx(0.2));
}

TEST_CASE("review items order by uncertainty then recency") {
  std::vector<ReviewItem> items(5);
  const double u[] = {0.2, 0.9, 0.9, 0.5, 1.0};
  for (int i = 0; i < 5; ++i) {
    items[i].request_id = "r" + std::to_string(i);
    items[i].sequence = i;
    items[i].uncertainty = u[i];
  }
  items[4].resolved = true;
  const auto out = order_review_items(items, 3);
  REQUIRE(out.size() == 3);
  CHECK(out[0].request_id == "r2");
  CHECK(out[1].request_id == "r1");
  CHECK(out[2].request_id == "r3");
}

TEST_CASE("prediction feedback forwards labels to the observer") {
  PlatformFixture f;
  const TrainedPair m = trained_pair(f);
  const Deployment d = deploy(f, Scheme::kSingle, m.a);
  const auto r1 = f->models().infer(d.deployment_id, {1, 1}, "a").record;
  const auto r2 = f->models().infer(d.deployment_id, {2, 2}, "b").record;
  const auto r3 = f->models().infer(d.deployment_id, {3, 3}, "c").record;

  f->feedback().submit(prediction_feedback(r1.request_id, Verdict::kReject, 42.0));
  CHECK(f->observer().resolved_label(r1.request_id) == 42.0);
  f->feedback().submit(prediction_feedback(r2.request_id, Verdict::kAccept));
  CHECK(f->observer().resolved_label(r2.request_id) == r2.output.value);
  // A rejection without a correction marks the item reviewed but adds no label.
  f->feedback().submit(prediction_feedback(r3.request_id, Verdict::kReject));
  CHECK_FALSE(f->observer().resolved_label(r3.request_id));
  CHECK(f->feedback().is_resolved(r3.request_id));
  CHECK(f->feedback().review_queue(d.deployment_id, 10).empty());
}

TEST_CASE("repeated feedback in the same bucket is a duplicate") {
  PlatformFixture f;
  const TrainedPair m = trained_pair(f);
  const Deployment d = deploy(f, Scheme::kSingle, m.a);
  const auto r = f->models().infer(d.deployment_id, {1, 1}, "a").record;
  const FeedbackResult first = f->feedback().submit(prediction_feedback(r.request_id, Verdict::kReject, 1.0));
  const FeedbackResult second = f->feedback().submit(prediction_feedback(r.request_id, Verdict::kReject, 1.0));
  CHECK_FALSE(first.duplicate);
  CHECK(second.duplicate);
  CHECK(second.record.feedback_id == first.record.feedback_id);
  CHECK(f->observer().outcomes_for(r.request_id).size() == 1);
  CHECK(f->feedback().list(r.request_id).size() == 1);
}

TEST_CASE("data quality rejections exclude the sample") {
  PlatformFixture f;
  const TrainedPair m = trained_pair(f);
  const Deployment d = deploy(f, Scheme::kSingle, m.a);
  const auto r = f->models().infer(d.deployment_id, {1, 1}, "a").record;
  FeedbackRequest q;
  q.kind = FeedbackKind::kDataQuality;
  q.target_id = r.request_id;
  q.verdict = Verdict::kReject;
  q.comment = "stuck sensor";
  q.author = "ops";
  const FeedbackResult out = f->feedback().submit(q);
  CHECK(out.record.target_id == r.input);
  CHECK(f->data().is_excluded(r.input));
  q.corrected_label = 1.0;
  CHECK_THROWS_AS(f->feedback().submit(q), Error);
  q.corrected_label.reset();
  q.target_id = "missing";
  CHECK_THROWS_AS(f->feedback().submit(q), Error);
}

TEST_CASE("explanation feedback tallies per explainer") {
  PlatformFixture f;
  const TrainedPair m = trained_pair(f);
  ExplainerVersion ev;
  ev.method = ExplainMethod::kLinearExact;
  ev.compatible_models = {m.a};
  const Id e = f->models().register_explainer(ev).explainer_id;
  CHECK(f->feedback().tally(e).accept == 0);
  const Explanation x1 = f->models().explain(m.a, e, {1, 0});
  const Explanation x2 = f->models().explain(m.a, e, {0, 1});
  FeedbackRequest q;
  q.kind = FeedbackKind::kExplanation;
  q.author = "rev";
  q.target_id = x1.explanation_id;
  q.verdict = Verdict::kAccept;
  f->feedback().submit(q);
  q.target_id = x2.explanation_id;
  q.verdict = Verdict::kReject;
  f->feedback().submit(q);
  const ExplainerTally t = f->feedback().tally(e);
  CHECK(t.accept == 1);
  CHECK(t.reject == 1);
}

TEST_CASE("review queue ranks shadow disagreement on regressors") {
  PlatformFixture f;
  const TrainedPair m = trained_pair(f);
  const Deployment d = deploy(f, Scheme::kShadow, m.a, m.b);
  Rng rng(1);
  for (int i = 0; i < 20; ++i) f->models().infer(d.deployment_id, {3 * rng.normal(), 3 * rng.normal()}, "");
  const auto q = f->feedback().review_queue(d.deployment_id, 5);
  REQUIRE(q.size() == 5);
  for (std::size_t i = 1; i < q.size(); ++i) CHECK(q[i - 1].uncertainty >= q[i].uncertainty);
  CHECK(q[0].uncertainty > 0.0);
}

TEST_CASE("classifier review queue uses class probability") {
  PlatformFixture f;
  const auto data = blob_data(60, 2, 1.0, 3);
  TrainRequest req;
  req.dataset = f.sealed_dataset(ingest_all(f, data));
  req.architecture = Architecture::kLogisticRegression;
  const Id model = f->trainer().train(req).model.model_id;
  f->models().register_model(model);
  const Deployment d = deploy(f, Scheme::kSingle, model);
  f->models().infer(d.deployment_id, {3.0, 0.0}, "sure");
  const auto unsure = f->models().infer(d.deployment_id, {0.0, 0.0}, "unsure").record;
  const auto q = f->feedback().review_queue(d.deployment_id, 1);
  REQUIRE(q.size() == 1);
  CHECK(q[0].request_id == unsure.request_id);
  CHECK(q[0].uncertainty == doctest::Approx(classification_uncertainty(*unsure.output.probability)));
}

TEST_CASE("compare evaluates models and explainers side by side") {
  PlatformFixture f;
  const TrainedPair m = trained_pair(f);
  ExplainerVersion ev;
  ev.method = ExplainMethod::kLinearExact;
  ev.compatible_models = {m.a, m.b};
  const Id e = f->models().register_explainer(ev).explainer_id;
  CompareRequest req;
  req.payloads = {{1, 2}, {3, 4}};
  req.models = {m.a, m.b};
  req.explainers = {e};
  const auto out = f->feedback().compare(req);
  CHECK(out.size() == 6);
  CHECK(out[0].kind == "model");
  CHECK(out[2].kind == "explainer");
  CHECK(out[2].model == m.a);
  req.explained_model = m.b;
  CHECK(f->feedback().compare(req)[2].model == m.b);
  req.payloads = {{1}};
  CHECK_THROWS_AS(f->feedback().compare(req), Error);
}
