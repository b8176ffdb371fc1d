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
#include "oracles.hpp"
#include "support.hpp"
#include "xmlops/observe.hpp"

using namespace xmlops;
using namespace xmlops::testing;

namespace {

// Serves n requests on a fresh single deployment of model a.
struct Served {
  TrainedPair models;
  Deployment deployment;
  std::vector<InferenceRecord> records;
};

Served serve(PlatformFixture& f, std::size_t n, std::uint64_t seed = 9) {
  Served s;
  s.models = trained_pair(f);
  s.deployment = deploy(f, Scheme::kSingle, s.models.a);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    s.records.push_back(
        f->models().infer(s.deployment.deployment_id, {rng.normal(), rng.normal()}, "r" + std::to_string(i)).record);
  }
  return s;
}

}  // namespace

TEST_CASE("degradation decisions at the exact boundaries") {
  // Lower is better: threshold = 2 + 0.5 * 2 = 3.
  CHECK(decide_degradation("mse", 3.0, 2.0, 30, 0.5, 30).status == Decision::kHealthy);
  CHECK(decide_degradation("mse", std::nextafter(3.0, 4.0), 2.0, 30, 0.5, 30).status == Decision::kDegraded);
  CHECK(*decide_degradation("mse", 3.0, 2.0, 30, 0.5, 30).threshold == 3.0);
  // Higher is better: threshold = 0.5 - 0.5 * 0.5 = 0.25.
  CHECK(decide_degradation("accuracy", 0.25, 0.5, 30, 0.5, 30).status == Decision::kHealthy);
  CHECK(decide_degradation("accuracy", std::nextafter(0.25, 0.0), 0.5, 30, 0.5, 30).status ==
        Decision::kDegraded);
  // One label short of min_resolved never decides, however bad the metric.
  const DegradationDecision few = decide_degradation("mse", 1e9, 2.0, 29, 0.5, 30);
  CHECK(few.status == Decision::kNoDecision);
  CHECK(few.reason.rfind("insufficient_data", 0) == 0);
  CHECK(decide_degradation("mse", std::nullopt, 2.0, 30, 0.5, 30).reason == "rolling_metric_undefined");
  CHECK(decide_degradation("mse", 1.0, std::nullopt, 30, 0.5, 30).reason == "no_reference_metric");
}

TEST_CASE("nearest rank percentiles") {
  std::vector<std::int64_t> v;
  for (int i = 1; i <= 100; ++i) v.push_back(i);
  CHECK(nearest_rank(v, 50) == 50);
  CHECK(nearest_rank(v, 95) == 95);
  CHECK(nearest_rank(v, 99) == 99);
  CHECK(nearest_rank(v, 100) == 100);
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    std::vector<std::int64_t> s(1 + rng.below(300));
    for (auto& x : s) x = static_cast<std::int64_t>(rng.below(10000));
    std::sort(s.begin(), s.end());
    for (double p : {50.0, 95.0, 99.0}) CHECK(nearest_rank(s, p) == oracle::nearest_rank(std::vector<long long>(s.begin(), s.end()), p));
  }
}

TEST_CASE("rolling window uses the latest resolved records") {
  PlatformFixture f;
  const Served s = serve(f, 30);
  for (std::size_t i = 0; i < 10; ++i) {
    f->observer().record_outcome(s.records[i].request_id, s.records[i].output.value + 1.0, "qa");
  }
  const PerformanceWindow w = f->observer().performance(s.deployment.deployment_id);
  CHECK(w.resolved == 10);
  CHECK(*w.rolling.get("mse") == doctest::Approx(1.0));
  CHECK(w.reference.count("mse") == 1);
  // The latest outcome for a request wins.
  f->observer().record_outcome(s.records[0].request_id, s.records[0].output.value, "qa");
  CHECK(f->observer().resolved_label(s.records[0].request_id) == s.records[0].output.value);
  CHECK(f->observer().performance(s.deployment.deployment_id).resolved == 10);
  // Outcomes label the stored production input.
  CHECK(f->data().latest_label(s.records[1].input) == doctest::Approx(s.records[1].output.value + 1.0));
}

TEST_CASE("degradation gate at min_resolved") {
  PlatformFixture f;
  const Served s = serve(f, 40);
  for (const auto& r : s.records) f->observer().record_outcome(r.request_id, r.output.value + 5.0, "qa");
  DegradationConfig cfg;
  cfg.min_resolved = 41;
  const DegradationCheck short_ = f->observer().check_degradation(s.deployment.deployment_id, cfg);
  CHECK(short_.decision.status == Decision::kNoDecision);
  CHECK_FALSE(short_.alert);
  CHECK(f->alerts().list(s.deployment.deployment_id).empty());

  cfg.min_resolved = 40;
  const DegradationCheck hit = f->observer().check_degradation(s.deployment.deployment_id, cfg);
  CHECK(hit.decision.status == Decision::kDegraded);
  REQUIRE(hit.alert);
  REQUIRE(hit.trigger);
  CHECK(hit.trigger->cause == TriggerCause::kPerformanceDegradation);
  // A second check coalesces the alert and reuses the pending trigger.
  const DegradationCheck again = f->observer().check_degradation(s.deployment.deployment_id, cfg);
  CHECK(again.alert->alert_id == hit.alert->alert_id);
  CHECK(again.alert->occurrences == 2);
  CHECK(again.trigger->trigger_id == hit.trigger->trigger_id);
  CHECK(f->alerts().list(s.deployment.deployment_id).size() == 1);
}

TEST_CASE("accurate outcomes stay healthy") {
  PlatformFixture f;
  const Served s = serve(f, 40);
  for (const auto& r : s.records) f->observer().record_outcome(r.request_id, r.output.value, "qa");
  DegradationConfig cfg;
  cfg.min_resolved = 40;
  CHECK(f->observer().check_degradation(s.deployment.deployment_id, cfg).decision.status == Decision::kHealthy);
}

TEST_CASE("retraining folds labeled production inputs into a shadow deployment") {
  PlatformFixture f;
  const Served s = serve(f, 20);
  const RetrainTrigger idle = f->observer().fire_trigger(s.deployment.deployment_id, TriggerCause::kManual);
  const RetrainOutcome none = f->observer().retrain(idle.trigger_id);
  CHECK(none.trigger.outcome == "no_op");
  CHECK_FALSE(none.training);
  CHECK_THROWS_AS(f->observer().retrain(idle.trigger_id), Error);

  for (const auto& r : s.records) f->observer().record_outcome(r.request_id, r.output.value + 3.0, "qa");
  const RetrainTrigger t = f->observer().fire_trigger(s.deployment.deployment_id, TriggerCause::kManual);
  const RetrainOutcome out = f->observer().retrain(t.trigger_id);
  CHECK(out.trigger.outcome == "retrained");
  REQUIRE(out.dataset);
  CHECK(out.dataset->members.size() == 60 + 20);
  REQUIRE(out.deployment);
  CHECK(out.deployment->scheme == Scheme::kShadow);
  CHECK(out.deployment->primary_model == s.models.a);
  CHECK(out.deployment->secondary_model == out.training->model.model_id);
  // The new model descends from both the original data and production inputs.
  const auto sub = f->lineage().resolve(out.training->model.model_id);
  const auto original = f->data().get_dataset(s.models.dataset).members;
  CHECK(sub.ancestors.count(original.front()) == 1);
  CHECK(sub.ancestors.count(s.records.front().input) == 1);
  CHECK(f->observer().get_trigger(t.trigger_id).consumed);
}

TEST_CASE("new annotations fire a trigger every threshold outcomes") {
  Config cfg;
  cfg.new_annotation_threshold = 5;
  PlatformFixture f(cfg);
  const Served s = serve(f, 12);
  for (std::size_t i = 0; i < 4; ++i) f->observer().record_outcome(s.records[i].request_id, 0.0, "qa");
  CHECK(f->observer().triggers().empty());
  f->observer().record_outcome(s.records[4].request_id, 0.0, "qa");
  REQUIRE(f->observer().triggers().size() == 1);
  CHECK(f->observer().triggers()[0].cause == TriggerCause::kNewAnnotations);
}

TEST_CASE("drift is evaluated on the configured cadence") {
  PlatformFixture f;
  ObserveConfig oc = f->observer().config();
  oc.drift_every = 25;
  oc.drift_window = 25;
  oc.retrain_on_drift = true;
  f->observer().set_config(oc);
  const TrainedPair m = trained_pair(f);
  const Deployment d = deploy(f, Scheme::kSingle, m.a);
  REQUIRE(d.baseline);
  Rng rng(2);
  std::optional<DriftReport> last;
  for (int i = 1; i <= 50; ++i) {
    f->models().infer(d.deployment_id, {rng.normal() + 4.0, rng.normal() + 4.0}, "");
    auto r = f->observer().after_inference(d.deployment_id);
    CHECK(r.has_value() == (i % 25 == 0));
    if (r) last = r;
  }
  REQUIRE(last);
  CHECK(last->verdict == DriftVerdict::kDrifting);
  CHECK(last->window_size == 25);
  CHECK(f->alerts().list(d.deployment_id).size() == 1);
  CHECK(f->observer().triggers(d.deployment_id).at(0).cause == TriggerCause::kDataDrift);
}

TEST_CASE("explainer quality is summarized against the floor") {
  std::vector<ExplanationQuality> good(20, {1.0, 0.9, 1.0, 0.8});
  CHECK(summarize_explainer_quality(good, 0.5, 20).status == Decision::kHealthy);
  CHECK(summarize_explainer_quality(good, 0.5, 21).status == Decision::kNoDecision);
  std::vector<ExplanationQuality> poor(20, {1.0, 0.3, 1.0, 0.8});
  const ExplainerSummary s = summarize_explainer_quality(poor, 0.5, 20);
  CHECK(s.status == Decision::kDegraded);
  CHECK(s.means.stability == doctest::Approx(0.3));
}

TEST_CASE("system metrics report per-endpoint latency percentiles") {
  PlatformFixture f;
  serve(f, 30);
  const auto m = f->observer().system_metrics();
  REQUIRE(m.size() == 1);
  CHECK(m[0].endpoint == "default");
  CHECK(m[0].requests == 30);
  REQUIRE(m[0].p50);
  CHECK(*m[0].p50 <= *m[0].p95);
  CHECK(*m[0].p95 <= *m[0].p99);
  CHECK(m[0].throughput_rps.has_value());
}
