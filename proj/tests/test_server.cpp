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

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "support.hpp"

using namespace xmlops;
using namespace xmlops::testing;

namespace {

// Checks one emitted entity against its /schema entry: every field present,
// nothing extra, JSON types as declared.
void check_conforms(const Json& schema, const std::string& type, const Json& value) {
  CAPTURE(type);
  CAPTURE(value.dump());
  REQUIRE(schema.at("types").contains(type));
  const Json& s = schema["types"][type];
  REQUIRE(value.is_object());
  for (const auto& name : s.at("required")) CHECK(value.contains(name.get<std::string>()));
  for (const auto& [key, v] : value.items()) {
    CAPTURE(key);
    REQUIRE(s["properties"].contains(key));
    const Json& t = s["properties"][key]["type"];
    std::vector<std::string> allowed;
    if (t.is_array()) {
      for (const auto& x : t) allowed.push_back(x.get<std::string>());
    } else {
      allowed.push_back(t.get<std::string>());
    }
    auto matches = [&](const std::string& want) {
      if (want == "null") return v.is_null();
      if (want == "string") return v.is_string();
      if (want == "boolean") return v.is_boolean();
      if (want == "integer") return v.is_number_integer();
      if (want == "number") return v.is_number();
      if (want == "object") return v.is_object();
      if (want == "array") return v.is_array();
      return false;
    };
    CHECK(std::any_of(allowed.begin(), allowed.end(), matches));
  }
}

struct RunResult {
  int exit_code = -1;
  std::string output;
};

// Runs the CLI with stderr folded into the captured output.
RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(XMLOPS_CLI) + " " + args + " 2>&1";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

const char* kCsv =
    "ts,equipment_id,x0,x1,label\n"
    "2026-01-01T00:00:00Z,p1,0.1,0.2,0.5\n"
    "2026-01-01T00:00:01Z,p1,0.4,0.1,1.2\n";

}  // namespace

TEST_CASE("config validation and round trip") {
  Config c;
  CHECK_NOTHROW(c.validate());
  const Config back = config_from_json(Json(c));
  CHECK(Json(back) == Json(c));

  Config bad = c;
  bad.drift.psi_alert = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = c;
  bad.explainer_alert_floor = 1.5;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = c;
  bad.http_bind = "localhost";
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK_THROWS_AS(config_from_json({{"drift", {{"psi", 0.1}}}}), Error);
  CHECK_THROWS_AS(config_from_json({{"mystery", 1}}), Error);
  CHECK_THROWS_AS(config_from_json({{"drift", {{"psi_alert", "high"}}}}), Error);
}

TEST_CASE("config resolution prefers the explicit path, then the environment") {
  TempDir dir;
  const auto a = dir / "a.json", b = dir / "b.json";
  std::ofstream(a) << R"({"store_path": "from-a"})";
  std::ofstream(b) << R"({"store_path": "from-b", "drift": {"psi_alert": 0.5}})";
  CHECK(load_config(b).drift.psi_alert == 0.5);
  setenv("XMLOPS_CONFIG", b.c_str(), 1);
  CHECK(resolve_config(std::nullopt).store_path == "from-b");
  CHECK(resolve_config(a).store_path == "from-a");
  unsetenv("XMLOPS_CONFIG");
  CHECK(resolve_config(std::nullopt).store_path == Config().store_path);
  std::ofstream(dir / "broken.json") << "{";
  CHECK_THROWS_AS(load_config(dir / "broken.json"), Error);
}

TEST_CASE("a store has a single writer") {
  TempDir dir;
  const Config cfg = test_config(dir / "store");
  {
    auto first = Platform::open(cfg, test_clock());
    try {
      Platform::open(cfg, test_clock());
      FAIL("expected failure");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kPrecondition);
      CHECK(std::string(e.what()).find("in use") != std::string::npos);
    }
  }
  CHECK_NOTHROW(Platform::open(cfg, test_clock()));
}

TEST_CASE("health reports every component") {
  PlatformFixture f;
  const ApiResponse r = f.call("GET", "/healthz");
  CHECK(r.status == 200);
  CHECK(r.body["status"] == "ok");
  for (const char* c : {"store", "lineage", "data", "training", "registry", "serving", "monitor"}) {
    CHECK(r.body["components"].contains(c));
  }
  CHECK(r.body["components"]["store"]["hash_algorithm"] == "sha256");
}

TEST_CASE("router error mapping") {
  PlatformFixture f;
  CHECK(f.call("GET", "/nowhere").status == 404);
  const ApiResponse method = f.call("DELETE", "/samples");
  CHECK(method.status == 405);
  CHECK(method.body["error"]["code"] == "method_not_allowed");
  const ApiResponse missing = f.call("GET", "/samples/abc");
  CHECK(missing.status == 404);
  CHECK(missing.body["error"]["code"] == "not_found");
  CHECK(missing.body["error"]["message"].is_string());

  ApiRequest raw;
  raw.method = "POST";
  raw.path = "/samples";
  raw.body = "{not json";
  CHECK(handle_request(*f, raw).status == 400);
  CHECK(f.call("POST", "/datasets", {{"members", Json::array()}, {"colour", "red"}}).status == 400);

  const Id a = f.ingest({1.0}), b = f.ingest({2.0});
  const Id d = f.sealed_dataset({a});
  const ApiResponse sealed = f.call("POST", "/datasets/" + d + "/append", {{"samples", {b}}});
  CHECK(sealed.status == 409);
  CHECK(sealed.body["error"]["code"] == "immutable");
  CHECK(f.call("POST", "/runs", {{"architecture", "linear_regression"}, {"dataset", "nope"}}).status == 404);
}

TEST_CASE("http_status table") {
  CHECK(http_status(ErrorCode::kValidation) == 400);
  CHECK(http_status(ErrorCode::kNotFound) == 404);
  CHECK(http_status(ErrorCode::kImmutable) == 409);
  CHECK(http_status(ErrorCode::kConflict) == 409);
  CHECK(http_status(ErrorCode::kPrecondition) == 422);
  CHECK(http_status(ErrorCode::kInternal) == 500);
  CHECK(parse_bind("0.0.0.0:9000") == std::pair<std::string, int>{"0.0.0.0", 9000});
  CHECK_THROWS_AS(parse_bind("nohost"), Error);
}

TEST_CASE("the review-ui workflow over the API emits schema-conformant entities") {
  PlatformFixture f;
  const Json schema = f.call("GET", "/schema").body;
  CHECK(schema["schema_version"] == kApiSchemaVersion);

  Json items = Json::array();
  const auto data = linear_data(40, {1.0, 2.0}, 0.0, 0.05, 3);
  for (std::size_t i = 0; i < data.x.size(); ++i) {
    items.push_back({{"payload", data.x[i]},
                     {"provenance", {{"equipment_id", "p"}, {"captured_at", "2026-01-01T00:00:00Z"}}},
                     {"label", data.y[i]}});
  }
  const ApiResponse ingested = f.call("POST", "/samples", items);
  REQUIRE(ingested.status == 200);
  const Json& samples = ingested.body["items"];
  REQUIRE(samples.size() == 40);
  check_conforms(schema, "SampleRecord", samples[0]);

  Json members = Json::array();
  for (const auto& s : samples) members.push_back(s["sample_id"]);
  const Json draft = f.call("POST", "/datasets", {{"members", members}}).body;
  check_conforms(schema, "DatasetVersion", draft);
  const Json ds = f.call("POST", "/datasets/" + draft["dataset_id"].get<std::string>() + "/seal").body;
  CHECK(ds["sealed"] == true);

  const ApiResponse csv = f.call("POST", "/samples", {{"csv", kCsv}});
  CHECK(csv.status == 200);
  CHECK(csv.body["items"].size() == 2);

  const Json ann = f.call("POST", "/samples/" + samples[0]["sample_id"].get<std::string>() + "/annotations",
                          {{"label", 3.0}, {"author", "ana"}})
                       .body;
  check_conforms(schema, "Annotation", ann);

  const Json trained = f.call("POST", "/runs", {{"architecture", "linear_regression"}, {"dataset", ds["dataset_id"]}}).body;
  check_conforms(schema, "TrainingRun", trained["run"]);
  check_conforms(schema, "ModelVersion", trained["model"]);
  const Id model = trained["model"]["model_id"];
  check_conforms(schema, "RegistryEntry", f.call("POST", "/registry", {{"model_id", model}}).body);

  const ApiResponse ex = f.call("POST", "/explainers", {{"method", "linear_exact"}, {"compatible_models", {model}}});
  REQUIRE(ex.status == 200);
  check_conforms(schema, "ExplainerVersion", ex.body);

  const Json dep = f.call("POST", "/deployments", {{"primary_model", model}, {"explainer", ex.body["explainer_id"]}}).body;
  check_conforms(schema, "Deployment", dep);
  const std::string dep_id = dep["deployment_id"];

  const Json inferred = f.call("POST", "/deployments/" + dep_id + "/infer", {{"payload", {0.5, 0.5}}}).body;
  check_conforms(schema, "InferenceRecord", inferred["record"]);
  check_conforms(schema, "PredictionOutput", inferred["record"]["output"]);
  check_conforms(schema, "Explanation", inferred["explanation"]);
  check_conforms(schema, "ExplanationQuality", inferred["explanation"]["quality"]);
  const std::string req_id = inferred["record"]["request_id"];

  const Json queue = f.call("GET", "/review-queue", Json(), {{"deployment", dep_id}}).body;
  REQUIRE(queue["items"].size() == 1);
  check_conforms(schema, "ReviewItem", queue["items"][0]);

  const Json fb = f.call("POST", "/feedback", {{"kind", "prediction"}, {"target_id", req_id}, {"verdict", "reject"},
                                               {"corrected_label", 9.0}, {"author", "rev"}})
                      .body;
  check_conforms(schema, "FeedbackRecord", fb["record"]);
  CHECK(fb["duplicate"] == false);
  const Json rec = f.call("GET", "/records/" + req_id).body;
  REQUIRE(rec["outcomes"].size() == 1);
  check_conforms(schema, "Outcome", rec["outcomes"][0]);

  const Json ex_fb = f.call("POST", "/feedback", {{"kind", "explanation"}, {"target_id", inferred["explanation"]["explanation_id"]},
                                                  {"verdict", "accept"}, {"author", "rev"}})
                         .body;
  CHECK(ex_fb["duplicate"] == false);
  check_conforms(schema, "ExplainerTally",
                 f.call("GET", "/explainers/" + ex.body["explainer_id"].get<std::string>() + "/tally").body);

  const Json perf = f.call("GET", "/deployments/" + dep_id + "/performance").body;
  check_conforms(schema, "PerformanceView", perf);
  check_conforms(schema, "DegradationDecision", perf["decision"]);
  check_conforms(schema, "PerformanceWindow",
                 f.call("POST", "/records/" + req_id + "/outcome", {{"label", 8.0}, {"author", "rev"}}).body);
  const Json check = f.call("POST", "/deployments/" + dep_id + "/check").body;
  check_conforms(schema, "DegradationDecision", check["decision"]);
  check_conforms(schema, "ExplainerSummary", f.call("POST", "/deployments/" + dep_id + "/explainer-check").body);
  const Json sys = f.call("GET", "/metrics/system").body;
  check_conforms(schema, "EndpointMetrics", sys["items"][0]);

  const Json cmp = f.call("POST", "/compare", {{"payloads", {{1.0, 1.0}}}, {"models", {model}},
                                               {"explainers", {ex.body["explainer_id"]}}})
                       .body;
  check_conforms(schema, "CompareEntry", cmp["items"][1]);

  const Json trig = f.call("POST", "/triggers", {{"deployment_id", dep_id}, {"cause", "manual"}}).body;
  check_conforms(schema, "RetrainTrigger", trig);
  const Json drift = f.call("POST", "/deployments/" + dep_id + "/drift").body;
  check_conforms(schema, "DriftReport", drift);

  const Json lineage = f.call("GET", "/lineage/" + model).body;
  check_conforms(schema, "LineageEdge", lineage["edges"][0]);
  const ApiResponse dot = f.call("GET", "/lineage/" + model, Json(), {{"format", "dot"}});
  CHECK(dot.content_type == "text/vnd.graphviz");
  CHECK(dot.text->rfind("digraph", 0) == 0);

  const Json err = f.call("GET", "/runs/zzz").body;
  check_conforms(schema, "Error", err);
  check_conforms(schema, "ErrorDetail", err["error"]);

  const Json life = f.call("GET", "/lifecycle").body;
  CHECK(life["phase"].is_string());
  CHECK(life["history"].size() > 3);
}

TEST_CASE("openapi lists every route") {
  const Json doc = openapi_document();
  CHECK(doc["openapi"] == "3.0.3");
  CHECK(doc["paths"].contains("/deployments/{id}/infer"));
  CHECK(doc["paths"]["/deployments/{id}/infer"].contains("post"));
  CHECK(doc["paths"].contains("/healthz"));
}

TEST_CASE("lifecycle phase transitions are recorded and restored") {
  CHECK(phase_transition_allowed(Phase::kD4, Phase::kD3));
  CHECK(phase_transition_allowed(Phase::kP7, Phase::kP2));
  CHECK_FALSE(phase_transition_allowed(Phase::kD1, Phase::kP1));
  CHECK(phase_of_operation("promote") == Phase::kP7);
  CHECK_FALSE(phase_of_operation("list_samples"));

  TempDir dir;
  const Config cfg = test_config(dir / "store");
  {
    auto p = Platform::open(cfg, test_clock());
    p->note("ingest_sample");
    p->note("train");
    CHECK(p->current_phase() == Phase::kD3);
  }
  auto p = Platform::open(cfg, test_clock());
  CHECK(p->current_phase() == Phase::kD3);
  CHECK(p->store().log("lifecycle").size() == 2);
}

TEST_CASE("live server answers over HTTP") {
  PlatformFixture f;
  HttpServer server(*f);
  const int port = server.bind("127.0.0.1", 0);
  REQUIRE(port > 0);
  std::thread t([&] { server.listen(); });
  httplib::Client client("127.0.0.1", port);
  const auto health = client.Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(health->get_header_value("X-Xmlops-Schema-Version") == std::to_string(kApiSchemaVersion));
  CHECK(Json::parse(health->body)["status"] == "ok");
  const auto posted = client.Post("/samples", kCsv, "text/plain");
  REQUIRE(posted);
  CHECK(posted->status == 400);
  const auto csv = client.Post("/samples", Json{{"csv", kCsv}}.dump(), "application/json");
  REQUIRE(csv);
  CHECK(csv->status == 200);
  CHECK(client.Get("/samples")->status == 200);
  server.stop();
  t.join();
}

TEST_CASE("cli exit codes and messages") {
  TempDir dir;
  const std::string store = "--store " + (dir / "s").string() + " ";
  CHECK(run_cli(store + "health").exit_code == 0);
  const RunResult help = run_cli("train --help");
  CHECK(help.exit_code == 0);
  CHECK(help.output.find("--architecture") != std::string::npos);
  const RunResult bogus = run_cli(store + "bogus");
  CHECK(bogus.exit_code == 1);
  CHECK(bogus.output.find("bogus") != std::string::npos);
  const RunResult missing = run_cli(store + "dataset show nope");
  CHECK(missing.exit_code == 1);
  CHECK(missing.output.find("error:") != std::string::npos);

  const auto bad_csv = dir / "bad.csv";
  std::ofstream(bad_csv) << "ts,equipment_id,x\n2026-01-01T00:00:00Z,p,1\n2026-01-01T00:00:00Z,p,oops\n";
  const RunResult ingest = run_cli(store + "ingest " + bad_csv.string());
  CHECK(ingest.exit_code == 1);
  CHECK(ingest.output.find("CSV row 3") != std::string::npos);

  const auto good_csv = dir / "good.csv";
  std::ofstream(good_csv) << kCsv;
  const RunResult ok = run_cli(store + "--json ingest " + good_csv.string());
  CHECK(ok.exit_code == 0);
  CHECK(Json::parse(ok.output)["items"].size() == 2);
}
