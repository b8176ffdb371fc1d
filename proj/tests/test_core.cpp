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

#include <fstream>
#include <set>

#include "doctest.h"
#include "support.hpp"
#include "xmlops/hash.hpp"
#include "xmlops/lineage.hpp"
#include "xmlops/store.hpp"
#include "xmlops/timestamp.hpp"
#include "xmlops/types.hpp"

using namespace xmlops;
using xmlops::testing::TempDir;

TEST_CASE("sha256 matches published digests") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(is_hex_digest(sha256_hex("x")));
  CHECK_FALSE(is_hex_digest("abc"));
  CHECK_FALSE(is_hex_digest(std::string(64, 'G')));
}

TEST_CASE("canonical form sorts keys and round-trips doubles") {
  CHECK(canonical(Json{{"b", 1}, {"a", 2}}) == R"({"a":2,"b":1})");
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    const double v = (rng.uniform() - 0.5) * std::pow(10.0, static_cast<int>(rng.below(40)) - 20);
    const double back = Json::parse(canonical(Json(v))).get<double>();
    CHECK(back == v);
  }
}

TEST_CASE("content ids do not collide on distinct payloads") {
  Rng rng(3);
  std::set<Id> ids;
  for (int i = 0; i < 10000; ++i) {
    ids.insert(content_id(Json{{"payload", Json::array({rng.normal(), rng.normal()})}, {"i", i}}));
  }
  CHECK(ids.size() == 10000);
}

TEST_CASE("timestamps require an explicit offset") {
  const Timestamp a = Timestamp::parse("2024-01-01T01:00:00+01:00");
  const Timestamp b = Timestamp::parse("2024-01-01T00:00:00Z");
  CHECK(a.utc_micros() == b.utc_micros());
  CHECK(a.offset_minutes() == 60);
  CHECK(Timestamp::parse(a.to_string()) == a);
  CHECK(Timestamp::parse("2024-01-01T00:00:00.250-05:30").offset_minutes() == -330);
  CHECK_THROWS_AS(Timestamp::parse("2024-01-01T00:00:00"), Error);
  CHECK_THROWS_AS(Timestamp::parse("2024-13-01T00:00:00Z"), Error);
  CHECK_THROWS_AS(Timestamp::parse("yesterday"), Error);
}

TEST_CASE("stepping clock is strictly increasing") {
  Clock c = stepping_clock(testing::t0(), 5);
  const Timestamp x = c(), y = c();
  CHECK(y.utc_micros() - x.utc_micros() == 5);
}

TEST_CASE("store creates a self-describing layout") {
  TempDir dir;
  auto store = Store::open(dir / "s");
  CHECK(std::filesystem::exists(dir / "s" / "manifest.json"));
  CHECK(store->manifest()["hash_algorithm"] == "sha256");
  CHECK(store->manifest()["schema_version"] == kSchemaVersion);

  const Id blob = store->put_blob("hello");
  CHECK(blob == sha256_hex("hello"));
  CHECK(std::filesystem::exists(dir / "s" / "objects" / blob.substr(0, 2) / blob));
  CHECK(store->get_blob(blob) == "hello");
  CHECK(store->put_blob("hello") == blob);

  store->put_meta("thing", "b", Json{{"v", 2}});
  store->put_meta("thing", "a", Json{{"v", 1}});
  CHECK(std::filesystem::exists(dir / "s" / "meta" / "thing" / "a.json"));
  CHECK(store->list_meta("thing") == std::vector<Id>{"a", "b"});
  CHECK(store->get_meta("thing", "a")->at("v") == 1);
  CHECK(store->kind_of("b") == "thing");
  CHECK_FALSE(store->get_meta("thing", "zz"));
  CHECK_THROWS_AS(store->get_blob("00"), Error);

  // Reopening sees the same contents.
  store.reset();
  auto again = Store::open(dir / "s");
  CHECK(again->list_meta("thing").size() == 2);
}

TEST_CASE("corrupt manifest is reported with the file name") {
  TempDir dir;
  std::filesystem::create_directories(dir / "s");
  std::ofstream(dir / "s" / "manifest.json") << "{not json";
  try {
    Store::open(dir / "s");
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kValidation);
    CHECK(std::string(e.what()).find("manifest.json") != std::string::npos);
  }
}

TEST_CASE("newer store schema refuses to open") {
  TempDir dir;
  std::filesystem::create_directories(dir / "s");
  std::ofstream(dir / "s" / "manifest.json") << R"({"hash_algorithm":"sha256","schema_version":99})";
  try {
    Store::open(dir / "s");
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kPrecondition);
  }
}

TEST_CASE("append log survives reopen and truncates a torn tail") {
  TempDir dir;
  const auto path = dir / "x.log";
  {
    AppendLog log(path, false);
    for (int i = 0; i < 10; ++i) CHECK(log.append("record-" + std::to_string(i)) == static_cast<std::uint64_t>(i));
  }
  const auto full_size = std::filesystem::file_size(path);
  {
    // Simulate a crash mid-frame: magic plus part of a header.
    std::ofstream out(path, std::ios::binary | std::ios::app);
    out.write("XMLR\x10\x00", 6);
  }
  const LogAudit before = AppendLog::audit(path);
  CHECK(before.valid_records == 10);
  CHECK(before.partial_records == 1);
  CHECK_FALSE(before.clean());

  AppendLog log(path, false);
  CHECK(log.size() == 10);
  CHECK(log.records()[3] == "record-3");
  CHECK(log.recovery().truncated_bytes == 6);
  CHECK(std::filesystem::file_size(path) == full_size);
  CHECK(AppendLog::audit(path).clean());
  log.append("after");
  CHECK(AppendLog::audit(path).valid_records == 11);
}

TEST_CASE("audit flags a flipped payload byte as corrupt") {
  TempDir dir;
  const auto path = dir / "x.log";
  {
    AppendLog log(path, false);
    log.append("aaaaaaaa");
    log.append("bbbbbbbb");
  }
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(14);
    f.put('Z');
  }
  const LogAudit a = AppendLog::audit(path);
  CHECK(a.corrupt_records >= 1);
  CHECK_FALSE(a.clean());
}

TEST_CASE("lineage resolves both directions and rejects cycles") {
  TempDir dir;
  auto store = Store::open(dir / "s");
  LineageGraph g(*store);
  g.add_edge("s1", "d", Relation::kDerivedFrom);
  g.add_edge("s2", "d", Relation::kDerivedFrom);
  g.add_edge("d", "run", Relation::kTrainedOn);
  g.add_edge("run", "m", Relation::kProduced);
  g.add_edge("d", "run", Relation::kTrainedOn);  // duplicate ignored
  CHECK(g.edges().size() == 4);

  const LineageSubgraph sub = g.resolve("run");
  CHECK(sub.ancestors == std::set<Id>{"s1", "s2", "d"});
  CHECK(sub.descendants == std::set<Id>{"m"});
  CHECK(sub.nodes.front().id == "run");
  CHECK(sub.edges.size() == 4);
  CHECK(g.reaches("s1", "m"));
  CHECK_FALSE(g.reaches("m", "s1"));

  CHECK_THROWS_AS(g.add_edge("m", "s1", Relation::kDerivedFrom), Error);
  CHECK_THROWS_AS(g.add_edge("d", "d", Relation::kDerivedFrom), Error);
  CHECK_THROWS_AS(g.resolve("nope"), Error);
  CHECK(sub.to_dot().find("digraph") == 0);

  // Edges persist in the log.
  LineageGraph reloaded(*store);
  CHECK(reloaded.edges().size() == 4);
}

TEST_CASE("random edge insertions never leave a cycle") {
  TempDir dir;
  auto store = Store::open(dir / "s");
  LineageGraph g(*store);
  Rng rng(5);
  int rejected = 0;
  for (int i = 0; i < 400; ++i) {
    const Id a = "n" + std::to_string(rng.below(40));
    const Id b = "n" + std::to_string(rng.below(40));
    try {
      g.add_edge(a, b, Relation::kDerivedFrom);
    } catch (const Error&) {
      ++rejected;
    }
  }
  CHECK(rejected > 0);
  CHECK(LineageGraph::is_acyclic(g.edges()));
  CHECK_FALSE(LineageGraph::is_acyclic({{"a", "b"}, {"b", "a"}}));
}

TEST_CASE("sample record ids reproduce from their content") {
  SampleRecord s;
  s.payload = {1.5, std::nullopt, -2.0};
  s.captured_at = Timestamp::parse("2024-01-01T00:00:00+02:00");
  s.source = {"pump-7", "hall", {{"rate", "100"}}};
  s.sample_id = content_id(s.content());
  const SampleRecord back = Json::parse(Json(s).dump()).get<SampleRecord>();
  CHECK(back.sample_id == s.sample_id);
  CHECK(content_id(back.content()) == s.sample_id);
  CHECK_FALSE(back.is_complete());
  CHECK_THROWS_AS(back.dense(), Error);
}

TEST_CASE("entity JSON round-trips") {
  Deployment d;
  d.deployment_id = "dep";
  d.endpoint = "e";
  d.scheme = Scheme::kCanary;
  d.primary_model = "m1";
  d.secondary_model = "m2";
  d.traffic_fraction = 0.1;
  d.created_at = testing::t0();
  d.routing_seed = 42;
  const Deployment back = Json(d).get<Deployment>();
  CHECK(Json(back) == Json(d));

  CHECK(parse_enum<Scheme>("ab") == Scheme::kAb);
  CHECK(enum_name(Relation::kFeedbackOn) == "feedback_on");
  CHECK_THROWS_AS(parse_enum<Scheme>("blue_green"), Error);
}

TEST_CASE("rng streams are reproducible and bounded") {
  Rng a(9), b(9);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
  Rng r(1);
  std::vector<int> counts(4, 0);
  for (int i = 0; i < 40000; ++i) counts[r.below(4)]++;
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  CHECK(unit_interval(~0ULL) < 1.0);
}
