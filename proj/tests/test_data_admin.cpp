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

#include <sstream>

#include "doctest.h"
#include "support.hpp"
#include "xmlops/data_admin.hpp"

using namespace xmlops;
using testing::PlatformFixture;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::kInternal;
}

}  // namespace

TEST_CASE("ingest is idempotent on identical content") {
  PlatformFixture f;
  const Id a = f.ingest({1.0, 2.0});
  const Id b = f.ingest({1.0, 2.0});
  const Id c = f.ingest({1.0, 2.0}, std::nullopt, "press-2");
  CHECK(a == b);
  CHECK(a != c);
  CHECK(f->data().list_samples().size() == 2);
  const SampleRecord s = f->data().get_sample(a);
  CHECK(s.captured_at.offset_minutes() == 60);
  CHECK(s.source.location == "hall-a");
}

TEST_CASE("ingest rejects malformed requests") {
  PlatformFixture f;
  IngestRequest r;
  r.provenance.equipment_id = "e";
  r.captured_at = "2026-01-01T00:00:00Z";
  CHECK(code_of([&] { f->data().ingest_sample(r); }) == ErrorCode::kValidation);
  r.payload = {1.0};
  r.captured_at = "2026-01-01T00:00:00";
  CHECK(code_of([&] { f->data().ingest_sample(r); }) == ErrorCode::kValidation);
  r.captured_at = "2026-01-01T00:00:00Z";
  r.provenance.equipment_id.clear();
  CHECK(code_of([&] { f->data().ingest_sample(r); }) == ErrorCode::kValidation);
}

TEST_CASE("label on ingest becomes a system annotation") {
  PlatformFixture f;
  const Id s = f.ingest({1.0}, 4.5);
  const auto anns = f->data().annotations_for(s);
  REQUIRE(anns.size() == 1);
  CHECK(anns[0].origin == Origin::kSystem);
  CHECK(f->data().latest_label(s) == 4.5);
  f->data().attach_annotation(s, 7.0, "ana", Origin::kHuman);
  CHECK(f->data().latest_label(s) == 7.0);
  CHECK(f->data().annotations_for(s).size() == 2);
}

TEST_CASE("sealed datasets refuse every mutation") {
  PlatformFixture f;
  const Id a = f.ingest({1.0}), b = f.ingest({2.0}), c = f.ingest({3.0});
  const Id d = f.sealed_dataset({a, b});
  const std::vector<Id> add{c};
  CHECK(code_of([&] { f->data().append_samples(d, add); }) == ErrorCode::kImmutable);
  CHECK(code_of([&] { f->data().remove_samples(d, add); }) == ErrorCode::kImmutable);
  CHECK(code_of([&] { f->data().set_recipe(d, std::nullopt); }) == ErrorCode::kImmutable);
  CHECK(f->data().get_dataset(d).members == std::vector<Id>{a, b});
  // Sealing twice is harmless.
  CHECK(f->data().seal_dataset(d).dataset_id == d);
}

TEST_CASE("draft mutations re-key the dataset") {
  PlatformFixture f;
  const Id a = f.ingest({1.0}), b = f.ingest({2.0});
  const DatasetVersion d0 = f->data().define_dataset({a});
  const std::vector<Id> add{b};
  const DatasetVersion d1 = f->data().append_samples(d0.dataset_id, add);
  CHECK(d1.members == std::vector<Id>{a, b});
  CHECK(d1.dataset_id != d0.dataset_id);
  const DatasetVersion d2 = f->data().remove_samples(d1.dataset_id, std::vector<Id>{a});
  CHECK(d2.members == std::vector<Id>{b});
  CHECK_FALSE(d2.sealed);
  CHECK(f->data().seal_dataset(d2.dataset_id).sealed);
}

TEST_CASE("dataset membership is validated") {
  PlatformFixture f;
  const Id a = f.ingest({1.0});
  CHECK(code_of([&] { f->data().define_dataset({a, a}); }) == ErrorCode::kValidation);
  CHECK(code_of([&] { f->data().define_dataset({"missing"}); }) == ErrorCode::kNotFound);
  CHECK(code_of([&] { f->data().define_dataset({a}, Id("norecipe")); }) == ErrorCode::kNotFound);
  f->data().mark_bad(a, "sensor fault", "ops");
  CHECK(f->data().is_excluded(a));
  CHECK(code_of([&] { f->data().define_dataset({a}); }) == ErrorCode::kValidation);
  CHECK(f->data().excluded_samples() == std::vector<Id>{a});
}

TEST_CASE("sealed dataset lineage reaches every member") {
  PlatformFixture f;
  const Id a = f.ingest({1.0}), b = f.ingest({2.0});
  const Id d = f.sealed_dataset({a, b});
  const auto sub = f->lineage().resolve(d);
  CHECK(sub.ancestors == std::set<Id>{a, b});
}

TEST_CASE("recipe steps transform as documented") {
  std::vector<RawPayload> rows{{1.0, 10.0, 5.0}, {3.0, std::nullopt, 5.0}, {5.0, 30.0, 5.0}};
  PreprocessingRecipe r;
  r.steps = {{StepKind::kImputeMean, {}}, {StepKind::kStandardize, {}}};
  std::vector<std::string> warnings;
  const auto out = transform_payloads(rows, r, &warnings);
  // Column 0: mean 3, population sd sqrt(8/3).
  const double sd = std::sqrt(8.0 / 3.0);
  CHECK(*out[0][0] == doctest::Approx(-2.0 / sd));
  CHECK(*out[2][0] == doctest::Approx(2.0 / sd));
  // Column 1 imputed with 20, then standardized: the imputed value becomes 0.
  CHECK(*out[1][1] == doctest::Approx(0.0));
  // Column 2 is constant and passes through with a warning.
  CHECK(*out[1][2] == 5.0);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("feature 2") != std::string::npos);

  PreprocessingRecipe clip;
  clip.steps = {{StepKind::kClip, {{"lo", 0.0}, {"hi", 2.0}}}, {StepKind::kWindow, {{"length", 2}}}};
  const auto c = transform_payloads({{-1.0, 1.0, 9.0}}, clip, nullptr);
  CHECK(c[0].size() == 2);
  CHECK(*c[0][0] == 1.0);
  CHECK(*c[0][1] == 2.0);
}

TEST_CASE("invalid recipe steps are rejected") {
  CHECK_THROWS_AS(validate_recipe_steps({{StepKind::kClip, {{"lo", 1.0}}}}), Error);
  CHECK_THROWS_AS(validate_recipe_steps({{StepKind::kClip, {{"lo", 2.0}, {"hi", 1.0}}}}), Error);
  CHECK_THROWS_AS(validate_recipe_steps({{StepKind::kWindow, {{"length", 1.5}}}}), Error);
  CHECK_THROWS_AS(validate_recipe_steps({{StepKind::kStandardize, {{"bogus", 1.0}}}}), Error);
  CHECK_NOTHROW(validate_recipe_steps({{StepKind::kWindow, {{"length", 3}}}}));
}

TEST_CASE("apply_recipe derives a sealed dataset without touching the source") {
  PlatformFixture f;
  const Id a = f.ingest({1.0, 4.0}, 1.0);
  const Id b = f.ingest({3.0, 8.0}, 0.0);
  const Id src = f.sealed_dataset({a, b});
  const SampleRecord before = f->data().get_sample(a);

  PreprocessingRecipe r;
  r.steps = {{StepKind::kStandardize, {}}};
  const RecipeOutcome out = f->data().apply_recipe(src, r);
  CHECK(out.dataset.sealed);
  CHECK(out.dataset.parent == src);
  REQUIRE(out.dataset.members.size() == 2);
  const SampleRecord derived = f->data().get_sample(out.dataset.members[0]);
  CHECK(*derived.payload[0] == doctest::Approx(-1.0));
  CHECK(f->data().latest_label(derived.sample_id) == 1.0);
  CHECK(Json(f->data().get_sample(a)) == Json(before));
  CHECK(f->data().get_dataset(src).members == std::vector<Id>{a, b});
  CHECK(f->lineage().reaches(a, out.dataset.dataset_id));

  const DatasetVersion draft = f->data().define_dataset({a});
  CHECK(code_of([&] { f->data().apply_recipe(draft.dataset_id, r); }) == ErrorCode::kPrecondition);
}

TEST_CASE("find_similar orders by distance then id") {
  PlatformFixture f;
  const Id q = f.ingest({0.0, 0.0});
  const Id near = f.ingest({1.0, 0.0});
  const Id mid = f.ingest({0.0, 2.0});
  const Id far = f.ingest({5.0, 5.0});
  const auto got = f->data().find_similar(q, 2);
  CHECK(got == std::vector<Id>{near, mid});
  CHECK(f->data().find_similar(q, 10).size() == 3);
  const Id scope = f.sealed_dataset({q, far});
  CHECK(f->data().find_similar(q, 3, scope) == std::vector<Id>{far});
}

TEST_CASE("materialize requires complete rows of equal width") {
  PlatformFixture f;
  const Id a = f.ingest({1.0, 2.0}), b = f.ingest({3.0});
  CHECK(f->data().materialize(std::vector<Id>{a}).cols() == 2);
  CHECK_THROWS_AS(f->data().materialize(std::vector<Id>{a, b}), Error);
}

TEST_CASE("csv ingest maps reserved columns and names bad rows") {
  std::istringstream ok(
      "ts,equipment_id,location,cfg.rate,temp,pressure,label\n"
      "2026-01-01T00:00:00Z,p1,hall,10,1.5,,3\n"
      "2026-01-01T00:00:01+02:00,p2,hall,10,2.5,7,\n");
  const auto reqs = parse_csv_ingest(ok);
  REQUIRE(reqs.size() == 2);
  CHECK(reqs[0].payload.size() == 2);
  CHECK_FALSE(reqs[0].payload[1].has_value());
  CHECK(reqs[0].label == 3.0);
  CHECK_FALSE(reqs[1].label.has_value());
  CHECK(reqs[0].provenance.sensor_config.at("rate") == "10");

  std::istringstream bad(
      "ts,equipment_id,temp\n"
      "2026-01-01T00:00:00Z,p1,1\n"
      "2026-01-01T00:00:00Z,p1,abc\n");
  try {
    parse_csv_ingest(bad);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("CSV row 3") != std::string::npos);
  }
  std::istringstream no_ts("equipment_id,temp\np1,1\n");
  CHECK_THROWS_AS(parse_csv_ingest(no_ts), Error);
}

TEST_CASE("json ingest parses items and names the failing index") {
  const Json doc = Json::parse(R"([
    {"payload":[1,null],"provenance":{"equipment_id":"p","captured_at":"2026-01-01T00:00:00Z"}},
    {"payload":[1],"provenance":{"equipment_id":"p"}}
  ])");
  try {
    parse_json_ingest(doc);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("JSON item 1") != std::string::npos);
  }
  const auto one = parse_json_ingest(Json::array({doc[0]}));
  CHECK_FALSE(one[0].payload[1].has_value());
}
