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

#include "xmlops/http_api.hpp"

#include <regex>
#include <sstream>

namespace xmlops {
namespace {

struct Ctx {
  Platform& p;
  const ApiRequest& req;
  std::vector<std::string> params;
  Json parsed;
  bool have_body = false;

  const Json& body() {
    if (!have_body) {
      have_body = true;
      if (req.body.find_first_not_of(" \t\r\n") == std::string::npos) {
        parsed = Json::object();
      } else {
        try {
          parsed = Json::parse(req.body);
        } catch (const Json::exception& e) {
          throw_validation(std::string("request body is not valid JSON: ") + e.what());
        }
      }
    }
    return parsed;
  }
  const std::string& arg(std::size_t i) const { return params.at(i); }
  std::optional<std::string> query(const std::string& key) const {
    auto it = req.query.find(key);
    if (it == req.query.end() || it->second.empty()) return std::nullopt;
    return it->second;
  }
  std::size_t query_size(const std::string& key, std::size_t fallback) const {
    auto v = query(key);
    if (!v) return fallback;
    try {
      std::size_t used = 0;
      const long long n = std::stoll(*v, &used);
      if (used != v->size() || n < 0) throw std::invalid_argument(key);
      return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
      throw_validation("query parameter '" + key + "' must be a non-negative integer");
    }
  }
};

using Handler = std::function<ApiResponse(Ctx&)>;

struct Route {
  std::string method;
  std::string path;  // template with {name} segments
  std::string summary;
  Handler handler;
  std::regex pattern;
};

void require_object(const Json& j) {
  if (!j.is_object()) throw_validation("request body must be a JSON object");
}

template <typename T>
T field(const Json& j, const char* key) {
  require_object(j);
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) throw_validation(std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const Json::exception&) {
    throw_validation(std::string("field '") + key + "' has the wrong type");
  }
}

template <typename T>
std::optional<T> opt_field(const Json& j, const char* key) {
  require_object(j);
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  try {
    return it->get<T>();
  } catch (const Json::exception&) {
    throw_validation(std::string("field '") + key + "' has the wrong type");
  }
}

void only_keys(const Json& j, std::initializer_list<const char*> allowed) {
  require_object(j);
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw_validation("unknown field '" + key + "'");
  }
}

Vector payload_field(const Json& j, const char* key = "payload") {
  return vector_from_json(field<Json>(j, key));
}

ApiResponse ok(Json body) { return ApiResponse{200, std::move(body), std::nullopt}; }

template <typename T>
Json items(const std::vector<T>& v) {
  Json arr = Json::array();
  for (const auto& x : v) arr.push_back(Json(x));
  return Json{{"items", std::move(arr)}};
}

template <typename T>
Json or_null(const std::optional<T>& v) {
  return v ? Json(*v) : Json();
}

Json infer_json(const InferResult& r) {
  return Json{{"record", r.record}, {"explanation", or_null(r.explanation)}};
}

Json train_json(const TrainResult& r) {
  return Json{{"run", r.run}, {"model", r.model}, {"reused", r.reused}};
}

Json check_json(const DegradationCheck& c) {
  return Json{{"decision", c.decision}, {"alert", or_null(c.alert)}, {"trigger", or_null(c.trigger)}};
}

Json retrain_json(const RetrainOutcome& o) {
  return Json{{"trigger", o.trigger},
              {"dataset", or_null(o.dataset)},
              {"run", o.training ? Json(o.training->run) : Json()},
              {"model", o.training ? Json(o.training->model) : Json()},
              {"deployment", or_null(o.deployment)}};
}

Json lineage_json(const LineageSubgraph& g) {
  Json nodes = Json::array();
  for (const auto& n : g.nodes) nodes.push_back(Json{{"id", n.id}, {"kind", n.kind}});
  return Json{{"root", g.root},
              {"nodes", nodes},
              {"edges", g.edges},
              {"ancestors", g.ancestors},
              {"descendants", g.descendants}};
}

std::vector<Id> id_list(const Json& j, const char* key) {
  auto ids = field<std::vector<Id>>(j, key);
  return ids;
}

std::vector<SampleRecord> ingest_all(DataAdmin& data, const std::vector<IngestRequest>& reqs) {
  std::vector<SampleRecord> out;
  out.reserve(reqs.size());
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    try {
      out.push_back(data.ingest_sample(reqs[i]));
    } catch (const Error& e) {
      if (reqs.size() == 1) throw;
      throw Error(e.code(), "item " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

ApiResponse post_samples(Ctx& c) {
  const Json& b = c.body();
  c.p.note("ingest_sample");
  if (b.is_array()) return ok(items(ingest_all(c.p.data(), parse_json_ingest(b))));
  require_object(b);
  if (b.contains("csv")) {
    std::istringstream in(field<std::string>(b, "csv"));
    return ok(items(ingest_all(c.p.data(), parse_csv_ingest(in))));
  }
  if (b.contains("items")) {
    return ok(items(ingest_all(c.p.data(), parse_json_ingest(b["items"]))));
  }
  IngestRequest r;
  try {
    r = parse_ingest_item(b);
  } catch (const Json::exception& e) {
    throw_validation(std::string("invalid sample: ") + e.what());
  }
  return ok(Json(c.p.data().ingest_sample(r)));
}

ApiResponse post_recipe_on_dataset(Ctx& c) {
  const Json& b = c.body();
  only_keys(b, {"recipe", "steps"});
  DataAdmin& data = c.p.data();
  const DatasetVersion ds = data.get_dataset(c.arg(0));
  std::optional<PreprocessingRecipe> recipe;
  if (b.contains("steps")) {
    if (b.contains("recipe")) throw_validation("give either 'recipe' or 'steps', not both");
    std::vector<RecipeStep> steps;
    try {
      steps = b["steps"].get<std::vector<RecipeStep>>();
    } catch (const Json::exception& e) {
      throw_validation(std::string("invalid recipe steps: ") + e.what());
    }
    recipe = data.register_recipe(std::move(steps));
  } else if (auto id = opt_field<Id>(b, "recipe")) {
    recipe = data.get_recipe(*id);
  }
  if (!ds.sealed) {
    // Drafts carry the recipe reference; it is applied after sealing.
    DatasetVersion updated = data.set_recipe(ds.dataset_id, recipe ? std::optional<Id>(recipe->recipe_id)
                                                                   : std::nullopt);
    return ok(Json{{"dataset", updated}, {"warnings", Json::array()}, {"applied", false}});
  }
  if (!recipe) throw_validation("missing field 'recipe' or 'steps'");
  c.p.note("apply_recipe");
  RecipeOutcome out = data.apply_recipe(ds.dataset_id, *recipe);
  return ok(Json{{"dataset", out.dataset}, {"warnings", out.warnings}, {"applied", true}});
}

ApiResponse post_infer(Ctx& c) {
  const Json& b = c.body();
  require_object(b);
  const Id dep = c.arg(0);
  auto one = [&](const Json& item) {
    only_keys(item, {"payload", "request_key"});
    const Vector payload = payload_field(item);
    return infer_json(c.p.infer(dep, payload, opt_field<std::string>(item, "request_key").value_or("")));
  };
  if (b.contains("requests")) {
    const Json& reqs = b["requests"];
    if (!reqs.is_array()) throw_validation("field 'requests' must be an array");
    Json out = Json::array();
    for (std::size_t i = 0; i < reqs.size(); ++i) {
      try {
        out.push_back(one(reqs[i]));
      } catch (const Error& e) {
        throw Error(e.code(), "request " + std::to_string(i) + ": " + e.what());
      }
    }
    return ok(Json{{"items", out}});
  }
  return ok(one(b));
}

ApiResponse post_feedback(Ctx& c) {
  const Json& b = c.body();
  require_object(b);
  c.p.note("submit_feedback");
  auto one = [&](const Json& item) {
    FeedbackResult r = c.p.feedback().submit(feedback_request_from_json(item));
    return Json{{"record", r.record}, {"duplicate", r.duplicate}};
  };
  if (b.contains("items")) {
    const Json& list = b["items"];
    if (!list.is_array()) throw_validation("field 'items' must be an array");
    Json out = Json::array();
    for (std::size_t i = 0; i < list.size(); ++i) {
      try {
        out.push_back(one(list[i]));
      } catch (const Error& e) {
        throw Error(e.code(), "feedback " + std::to_string(i) + ": " + e.what());
      }
    }
    return ok(Json{{"items", out}});
  }
  return ok(one(b));
}

ApiResponse get_lineage(Ctx& c) {
  const LineageSubgraph g = c.p.lineage().resolve(c.arg(0));
  const std::string format = c.query("format").value_or("json");
  if (format == "dot") {
    ApiResponse r;
    r.text = g.to_dot();
    r.content_type = "text/vnd.graphviz";
    return r;
  }
  if (format != "json") throw_validation("format must be 'json' or 'dot'");
  return ok(lineage_json(g));
}

ApiResponse get_lifecycle(Ctx& c) {
  Json history = Json::array();
  for (const std::string& rec : c.p.store().log("lifecycle").records()) {
    history.push_back(Json::parse(rec));
  }
  Json phases = Json::array();
  for (const auto& info : kPhases) {
    phases.push_back(Json{{"code", std::string(info.code)}, {"title", std::string(info.title)}});
  }
  const auto phase = c.p.current_phase();
  return ok(Json{{"phase", phase ? Json(std::string(phase_info(*phase).code)) : Json()},
                 {"phases", phases},
                 {"history", history}});
}

std::vector<Route> build_routes() {
  std::vector<Route> r;
  auto add = [&](std::string method, std::string path, std::string summary, Handler h) {
    const std::string re = std::regex_replace(path, std::regex(R"(\{[a-z_]+\})"), "([^/]+)");
    r.push_back(Route{std::move(method), std::move(path), std::move(summary), std::move(h),
                      std::regex("^" + re + "$")});
  };

  add("GET", "/healthz", "Component statuses", [](Ctx& c) {
    Json h = c.p.health();
    const int status = h["status"] == "ok" ? 200 : 503;
    return ApiResponse{status, std::move(h), std::nullopt};
  });
  add("GET", "/schema", "Versioned entity schemas", [](Ctx&) { return ok(api_schema()); });
  add("GET", "/openapi.json", "OpenAPI description", [](Ctx&) { return ok(openapi_document()); });
  add("GET", "/lifecycle", "Current lifecycle phase and transition history", get_lifecycle);

  // data
  add("POST", "/samples", "Ingest one sample, a JSON array, {items}, or {csv}", post_samples);
  add("GET", "/samples", "List sample ids", [](Ctx& c) {
    return ok(Json{{"items", c.p.data().list_samples()}});
  });
  add("GET", "/samples/{id}", "Get a sample", [](Ctx& c) { return ok(Json(c.p.data().get_sample(c.arg(0)))); });
  add("GET", "/samples/{id}/similar", "k nearest samples (?k=&dataset=)", [](Ctx& c) {
    const auto k = c.query_size("k", 5);
    return ok(Json{{"items", c.p.data().find_similar(c.arg(0), k, c.query("dataset"))}});
  });
  add("GET", "/samples/{id}/annotations", "Annotations of a sample", [](Ctx& c) {
    return ok(items(c.p.data().annotations_for(c.arg(0))));
  });
  add("POST", "/samples/{id}/annotations", "Attach a label {label, author, origin}", [](Ctx& c) {
    const Json& b = c.body();
    only_keys(b, {"label", "author", "origin"});
    const Origin origin = parse_enum<Origin>(opt_field<std::string>(b, "origin").value_or("human"));
    c.p.note("attach_annotation");
    return ok(Json(c.p.data().attach_annotation(c.arg(0), field<double>(b, "label"),
                                                field<std::string>(b, "author"), origin)));
  });
  add("POST", "/samples/{id}/exclusion", "Mark a sample bad {reason, author}", [](Ctx& c) {
    const Json& b = c.body();
    only_keys(b, {"reason", "author"});
    c.p.note("mark_bad");
    return ok(Json(c.p.data().mark_bad(c.arg(0), opt_field<std::string>(b, "reason").value_or(""),
                                       field<std::string>(b, "author"))));
  });
  add("POST", "/recipes", "Register a recipe {steps}", [](Ctx& c) {
    const Json& b = c.body();
    only_keys(b, {"steps"});
    std::vector<RecipeStep> steps;
    try {
      steps = field<Json>(b, "steps").get<std::vector<RecipeStep>>();
    } catch (const Json::exception& e) {
      throw_validation(std::string("invalid recipe steps: ") + e.what());
    }
    return ok(Json(c.p.data().register_recipe(std::move(steps))));
  });
  add("GET", "/recipes/{id}", "Get a recipe", [](Ctx& c) { return ok(Json(c.p.data().get_recipe(c.arg(0)))); });
  add("POST", "/datasets", "Define a draft dataset {members, recipe}", [](Ctx& c) {
    const Json& b = c.body();
    only_keys(b, {"members", "recipe"});
    c.p.note("define_dataset");
    return ok(Json(c.p.data().define_dataset(id_list(b, "members"), opt_field<Id>(b, "recipe"))));
  });
  add("GET", "/datasets", "List datasets", [](Ctx& c) {
    std::vector<DatasetVersion> out;
    for (const Id& id : c.p.data().list_datasets()) out.push_back(c.p.data().get_dataset(id));
    return ok(items(out));
  });
  add("GET", "/datasets/{id}", "Get a dataset", [](Ctx& c) { return ok(Json(c.p.data().get_dataset(c.arg(0)))); });
  add("POST", "/datasets/{id}/seal", "Seal a draft", [](Ctx& c) {
    c.p.note("seal_dataset");
    return ok(Json(c.p.data().seal_dataset(c.arg(0))));
  });
  add("POST", "/datasets/{id}/append", "Append samples to a draft {samples}", [](Ctx& c) {
    const Json& b = c.body();
    only_keys(b, {"samples"});
    const auto ids = id_list(b, "samples");
    return ok(Json(c.p.data().append_samples(c.arg(0), ids)));
  });
  add("POST", "/datasets/{id}/remove", "Remove samples from a draft {samples}", [](Ctx& c) {
    const Json& b = c.body();
    only_keys(b, {"samples"});
    const auto ids = id_list(b, "samples");
    return ok(Json(c.p.data().remove_samples(c.arg(0), ids)));
  });
  add("POST", "/datasets/{id}/recipe",
      "Apply a recipe {recipe | steps}; on a draft, attach it instead", post_recipe_on_dataset);

  // training
  add("POST", "/runs", "Start a training run", [](Ctx& c) {
    TrainRequest req = train_request_from_json(c.body());
    c.p.note("train");
    return ok(train_json(c.p.trainer().train(req)));
  });
  add("GET", "/runs", "List runs", [](Ctx& c) {
    std::vector<TrainingRun> out;
    for (const Id& id : c.p.trainer().list_runs()) out.push_back(c.p.trainer().get_run(id));
    return ok(items(out));
  });
  add("GET", "/runs/{id}", "Get a run", [](Ctx& c) { return ok(Json(c.p.trainer().get_run(c.arg(0)))); });
  add("POST", "/runs/compare", "Rank runs {runs, metric, split}", [](Ctx& c) {
    const Json& b = c.body();
    only_keys(b, {"runs", "metric", "split"});
    const auto ids = id_list(b, "runs");
    const SplitName split = parse_enum<SplitName>(opt_field<std::string>(b, "split").value_or("test"));
    c.p.note("compare_runs");
    const RunRanking ranking = c.p.trainer().compare_runs(ids, field<std::string>(b, "metric"), split);
    Json ranked = Json::array();
    for (const auto& [id, v] : ranking.ranked) ranked.push_back(Json{{"run_id", id}, {"value", v}});
    return ok(Json{{"ranked", ranked}, {"best", ranking.best}});
  });
  add("GET", "/models", "List models", [](Ctx& c) {
    std::vector<ModelVersion> out;
    for (const Id& id : c.p.trainer().list_models()) out.push_back(c.p.trainer().get_model(id));
    return ok(items(out));
  });
  add("GET", "/models/{id}", "Get a model", [](Ctx& c) { return ok(Json(c.p.trainer().get_model(c.arg(0)))); });

  // registry, explainers, deployments
  add("POST", "/registry", "Register a model {model_id}", [](Ctx& c) {
    const Json& b = c.body();
    only_keys(b, {"model_id"});
    c.p.note("register_model");
    return ok(Json(c.p.models().register_model(field<Id>(b, "model_id"))));
  });
  add("GET", "/registry", "Registry entries", [](Ctx& c) { return ok(items(c.p.models().registry())); });
  add("POST", "/explainers", "Register an explainer", [](Ctx& c) {
    const Json& b = c.body();
    only_keys(b, {"method", "kind", "config", "compatible_models", "domain_knowledge"});
    ExplainerVersion e;
    try {
      e = b.get<ExplainerVersion>();
    } catch (const Json::exception& ex) {
      throw_validation(std::string("invalid explainer: ") + ex.what());
    }
    c.p.note("register_explainer");
    return ok(Json(c.p.models().register_explainer(std::move(e))));
  });
  add("GET", "/explainers", "List explainers", [](Ctx& c) { return ok(items(c.p.models().list_explainers())); });
  add("GET", "/explainers/{id}", "Get an explainer", [](Ctx& c) {
    return ok(Json(c.p.models().get_explainer(c.arg(0))));
  });
  add("GET", "/explainers/{id}/tally", "Accept/reject counts from explanation feedback", [](Ctx& c) {
    c.p.models().get_explainer(c.arg(0));
    return ok(Json(c.p.feedback().tally(c.arg(0))));
  });
  add("POST", "/deployments", "Create a deployment", [](Ctx& c) {
    DeploymentRequest req = deployment_request_from_json(c.body());
    c.p.note("create_deployment");
    return ok(Json(c.p.models().create_deployment(req)));
  });
  add("GET", "/deployments", "Deployments with schemes, models and explainers (?endpoint=)", [](Ctx& c) {
    const auto endpoint = c.query("endpoint");
    std::vector<Deployment> out;
    for (Deployment& d : c.p.models().list_deployments()) {
      if (!endpoint || d.endpoint == *endpoint) out.push_back(std::move(d));
    }
    return ok(items(out));
  });
  add("GET", "/deployments/{id}", "Get a deployment", [](Ctx& c) {
    return ok(Json(c.p.models().get_deployment(c.arg(0))));
  });
  add("POST", "/deployments/{id}/infer", "Serve {payload, request_key} or {requests: [...]}", post_infer);
  add("POST", "/deployments/{id}/promote", "Promote the candidate to a single deployment", [](Ctx& c) {
    c.p.note("promote");
    return ok(Json(c.p.models().promote(c.arg(0))));
  });
  add("GET", "/deployments/{id}/records", "Latest inference records (?limit=)", [](Ctx& c) {
    const auto all = c.p.models().records(c.arg(0));
    const std::size_t limit = c.query_size("limit", 100);
    const std::size_t start = all.size() > limit ? all.size() - limit : 0;
    std::vector<InferenceRecord> out(all.begin() + static_cast<std::ptrdiff_t>(start), all.end());
    Json j = items(out);
    j["total"] = all.size();
    return ok(j);
  });
  add("GET", "/deployments/{id}/drift", "Latest drift report", [](Ctx& c) {
    c.p.models().get_deployment(c.arg(0));
    auto report = c.p.drift().latest_report(c.arg(0));
    if (!report) throw_not_found("drift report for deployment", c.arg(0));
    return ok(Json(*report));
  });
  add("POST", "/deployments/{id}/drift", "Evaluate drift over the current window", [](Ctx& c) {
    c.p.note("evaluate_drift");
    auto report = c.p.observer().check_drift(c.arg(0));
    if (!report) throw_precondition("deployment " + c.arg(0) + " has no baseline or no traffic yet");
    return ok(Json(*report));
  });
  add("GET", "/deployments/{id}/performance", "Rolling metrics and degradation decision", [](Ctx& c) {
    c.p.models().get_deployment(c.arg(0));
    Json j = Json(c.p.observer().performance(c.arg(0)));
    j["decision"] = c.p.observer().evaluate_degradation(c.arg(0), c.p.config().degradation);
    return ok(j);
  });
  add("POST", "/deployments/{id}/check", "Run the degradation check", [](Ctx& c) {
    c.p.note("check_degradation");
    return ok(check_json(c.p.observer().check_degradation(c.arg(0), c.p.config().degradation)));
  });
  add("POST", "/deployments/{id}/explainer-check", "Summarize explanation quality", [](Ctx& c) {
    c.p.note("monitor_explainers");
    return ok(Json(c.p.observer().monitor_explainers(c.arg(0))));
  });
  add("GET", "/deployments/{id}/explanations", "Explanations attached to the traffic", [](Ctx& c) {
    return ok(items(c.p.models().deployment_explanations(c.arg(0))));
  });
  add("POST", "/deployments/{id}/fill-explanations", "Compute deferred explanations", [](Ctx& c) {
    c.p.note("output_explanation");
    return ok(Json{{"computed", c.p.models().fill_deferred_explanations(c.arg(0))}});
  });
  add("GET", "/records/{id}", "Inference record with explanation and outcomes", [](Ctx& c) {
    const InferenceRecord& rec = c.p.models().get_record(c.arg(0));
    return ok(Json{{"record", rec},
                   {"explanation", or_null(c.p.models().explanation_for_request(rec.request_id))},
                   {"outcomes", c.p.observer().outcomes_for(rec.request_id)}});
  });
  add("POST", "/records/{id}/outcome", "Record the true label {label, author}", [](Ctx& c) {
    const Json& b = c.body();
    only_keys(b, {"label", "author"});
    c.p.note("record_outcome");
    return ok(Json(c.p.observer().record_outcome(c.arg(0), field<double>(b, "label"),
                                                 field<std::string>(b, "author"))));
  });

  // explanations
  add("POST", "/explain", "Explain a payload {model_id, explainer_id, payload, dataset}", [](Ctx& c) {
    const Json& b = c.body();
    only_keys(b, {"model_id", "explainer_id", "payload", "dataset"});
    const Vector payload = payload_field(b);
    c.p.note("explain");
    return ok(Json(c.p.models().explain(field<Id>(b, "model_id"), field<Id>(b, "explainer_id"), payload,
                                        opt_field<Id>(b, "dataset"))));
  });
  add("GET", "/explanations", "List explanations (?model=&dataset=)", [](Ctx& c) {
    return ok(items(c.p.models().list_explanations(c.query("model"), c.query("dataset"))));
  });
  add("GET", "/explanations/{id}", "Get an explanation", [](Ctx& c) {
    return ok(Json(c.p.models().get_explanation(c.arg(0))));
  });

  // observation
  add("GET", "/alerts", "Alerts, newest first (?deployment=)", [](Ctx& c) {
    return ok(items(c.p.alerts().list(c.query("deployment"))));
  });
  add("GET", "/metrics/system", "Latency percentiles and throughput per endpoint", [](Ctx& c) {
    return ok(items(c.p.observer().system_metrics()));
  });
  add("GET", "/triggers", "Retrain triggers (?deployment=)", [](Ctx& c) {
    return ok(items(c.p.observer().triggers(c.query("deployment"))));
  });
  add("POST", "/triggers", "Fire a trigger {deployment_id, cause}", [](Ctx& c) {
    const Json& b = c.body();
    only_keys(b, {"deployment_id", "cause"});
    const TriggerCause cause = parse_enum<TriggerCause>(opt_field<std::string>(b, "cause").value_or("manual"));
    return ok(Json(c.p.observer().fire_trigger(field<Id>(b, "deployment_id"), cause)));
  });
  add("GET", "/triggers/{id}", "Get a trigger", [](Ctx& c) { return ok(Json(c.p.observer().get_trigger(c.arg(0)))); });
  add("POST", "/triggers/{id}/retrain", "Consume a trigger and retrain", [](Ctx& c) {
    c.p.note("retrain");
    return ok(retrain_json(c.p.observer().retrain(c.arg(0))));
  });
  add("POST", "/monitor/pass", "Run one monitoring pass now", [](Ctx& c) {
    c.p.observer().monitor_pass();
    return ok(Json{{"status", "ok"}});
  });

  // feedback
  add("POST", "/feedback", "Submit feedback, or {items: [...]}", post_feedback);
  add("GET", "/feedback", "List feedback (?target=)", [](Ctx& c) {
    return ok(items(c.p.feedback().list(c.query("target"))));
  });
  add("GET", "/review-queue", "Hard samples first (?deployment=&limit=)", [](Ctx& c) {
    const auto dep = c.query("deployment");
    if (!dep) throw_validation("query parameter 'deployment' is required");
    c.p.note("review_queue");
    return ok(items(c.p.feedback().review_queue(*dep, c.query_size("limit", 20))));
  });
  add("POST", "/compare", "Side-by-side models and explainers on the same payloads", [](Ctx& c) {
    CompareRequest req = compare_request_from_json(c.body());
    c.p.note("compare_view");
    return ok(items(c.p.feedback().compare(req)));
  });
  add("GET", "/lineage/{id}", "Upstream and downstream graph (?format=json|dot)", get_lineage);
  return r;
}

const std::vector<Route>& routes() {
  static const std::vector<Route> kRoutes = build_routes();
  return kRoutes;
}

Json obj(std::initializer_list<std::pair<const char*, const char*>> fields) {
  Json props = Json::object();
  Json required = Json::array();
  for (const auto& [name, type] : fields) {
    std::string t = type;
    Json type_json;
    if (auto bar = t.find('|'); bar != std::string::npos) {
      type_json = Json::array({t.substr(0, bar), t.substr(bar + 1)});
    } else {
      type_json = t;
    }
    props[name] = Json{{"type", type_json}};
    required.push_back(name);
  }
  return Json{{"type", "object"}, {"required", required}, {"properties", props},
              {"additionalProperties", false}};
}

}  // namespace

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kValidation: return 400;
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kImmutable: return 409;
    case ErrorCode::kConflict: return 409;
    case ErrorCode::kPrecondition: return 422;
    case ErrorCode::kInternal: return 500;
  }
  return 500;
}

ApiResponse error_response(ErrorCode code, const std::string& message) {
  return ApiResponse{http_status(code),
                     Json{{"error", Json{{"code", std::string(to_string(code))}, {"message", message}}}},
                     std::nullopt};
}

ApiResponse handle_request(Platform& platform, const ApiRequest& request) {
  const Route* match = nullptr;
  std::smatch m;
  bool path_known = false;
  for (const Route& r : routes()) {
    if (!std::regex_match(request.path, m, r.pattern)) continue;
    path_known = true;
    if (r.method == request.method) {
      match = &r;
      break;
    }
  }
  if (!match) {
    if (path_known) {
      return ApiResponse{405,
                         Json{{"error", Json{{"code", "method_not_allowed"},
                                             {"message", request.method + " not allowed on " + request.path}}}},
                         std::nullopt};
    }
    return error_response(ErrorCode::kNotFound, "no route for " + request.method + " " + request.path);
  }
  Ctx ctx{platform, request, {}, Json(), false};
  for (std::size_t i = 1; i < m.size(); ++i) ctx.params.push_back(m[i].str());
  try {
    auto guard = platform.lock();
    return match->handler(ctx);
  } catch (const Error& e) {
    return error_response(e.code(), e.what());
  } catch (const Json::exception& e) {
    return error_response(ErrorCode::kValidation, e.what());
  } catch (const std::exception& e) {
    return error_response(ErrorCode::kInternal, e.what());
  }
}

Json api_schema() {
  Json types = Json::object();
  types["SampleRecord"] = obj({{"sample_id", "string"}, {"payload", "array"}, {"captured_at", "string"},
                               {"source", "object"}, {"format_tag", "string"}});
  types["Annotation"] = obj({{"annotation_id", "string"}, {"sample_id", "string"}, {"label", "number"},
                             {"author", "string"}, {"origin", "string"}, {"created_at", "string"}});
  types["ExclusionMark"] = obj({{"sample_id", "string"}, {"reason", "string"}, {"author", "string"},
                                {"created_at", "string"}});
  types["PreprocessingRecipe"] = obj({{"recipe_id", "string"}, {"steps", "array"}});
  types["DatasetVersion"] = obj({{"dataset_id", "string"}, {"members", "array"}, {"recipe", "string|null"},
                                 {"parent", "string|null"}, {"sealed", "boolean"}, {"created_at", "string"}});
  types["TrainingRun"] = obj({{"run_id", "string"}, {"architecture", "string"}, {"dataset", "string"},
                              {"split", "object"}, {"materialization", "object"}, {"hyperparams", "object"},
                              {"seed", "integer"}, {"metrics", "object"}, {"produced_model", "string"},
                              {"software_manifest", "object"}, {"started_at", "string"},
                              {"finished_at", "string"}});
  types["ModelVersion"] = obj({{"model_id", "string"}, {"architecture", "string"},
                               {"architecture_version", "string"}, {"init_seed", "integer"},
                               {"training_run", "string"}, {"software_manifest", "object"},
                               {"metrics", "object"}, {"stage", "string"}, {"task", "string"},
                               {"dimension", "integer"}, {"artifact", "string"}, {"baseline", "array"}});
  types["RegistryEntry"] = obj({{"model_id", "string"}, {"sequence", "integer"}, {"registered_at", "string"}});
  types["ExplainerVersion"] = obj({{"explainer_id", "string"}, {"method", "string"}, {"kind", "string"},
                                   {"config", "object"}, {"compatible_models", "array"},
                                   {"domain_knowledge", "string"}});
  types["Deployment"] = obj({{"deployment_id", "string"}, {"endpoint", "string"}, {"scheme", "string"},
                             {"primary_model", "string"}, {"secondary_model", "string|null"},
                             {"traffic_fraction", "number|null"}, {"bound_explainer", "string|null"},
                             {"status", "string"}, {"created_at", "string"}, {"routing_seed", "integer"},
                             {"defer_explanations", "boolean"}, {"baseline", "string|null"},
                             {"promoted_from", "string|null"}});
  types["PredictionOutput"] = obj({{"value", "number"}, {"predicted_class", "integer|null"},
                                   {"probability", "number|null"}});
  types["InferenceRecord"] = obj({{"request_id", "string"}, {"sequence", "integer"},
                                  {"deployment_id", "string"}, {"request_key", "string"},
                                  {"served_by", "string"}, {"shadow_output", "object|null"},
                                  {"input", "string"}, {"output", "object"}, {"explanation", "string|null"},
                                  {"latency_micros", "integer"}, {"created_at", "string"}});
  types["ExplanationQuality"] = obj({{"completeness", "number"}, {"stability", "number"},
                                     {"fidelity", "number"}, {"relevance", "number"}});
  types["Explanation"] = obj({{"explanation_id", "string"}, {"explainer", "string"}, {"model", "string"},
                              {"input", "string"}, {"request_id", "string|null"},
                              {"deployment", "string|null"}, {"dataset", "string|null"},
                              {"payload", "array"}, {"baseline", "array"}, {"attributions", "array"},
                              {"surrogate", "object|null"}, {"counterfactual", "object|null"},
                              {"quality", "object"}, {"created_at", "string"}});
  types["Alert"] = obj({{"alert_id", "string"}, {"source", "string"}, {"deployment_id", "string"},
                        {"metric", "string"}, {"value", "number"}, {"threshold", "number"},
                        {"message", "string"}, {"raised_at", "string"}, {"last_seen", "string"},
                        {"occurrences", "integer"}});
  types["RetrainTrigger"] = obj({{"trigger_id", "string"}, {"cause", "string"}, {"deployment_id", "string"},
                                 {"fired_at", "string"}, {"consumed", "boolean"}, {"outcome", "string"},
                                 {"resulting_run", "string|null"}, {"resulting_model", "string|null"},
                                 {"resulting_deployment", "string|null"}});
  types["Outcome"] = obj({{"outcome_id", "string"}, {"request_id", "string"}, {"label", "number"},
                          {"author", "string"}, {"created_at", "string"}});
  types["FeedbackRecord"] = obj({{"feedback_id", "string"}, {"kind", "string"}, {"target_id", "string"},
                                 {"verdict", "string"}, {"corrected_label", "number|null"},
                                 {"comment", "string"}, {"author", "string"}, {"created_at", "string"}});
  types["ReviewItem"] = obj({{"request_id", "string"}, {"uncertainty", "number"}, {"resolved", "boolean"},
                             {"sequence", "integer"}, {"output", "object"}});
  types["DriftReport"] = obj({{"baseline", "string"}, {"deployment", "string|null"}, {"features", "array"},
                              {"window", "object"}, {"thresholds", "object"}, {"epsilon", "number"},
                              {"verdict", "string"}});
  types["MetricReport"] = obj({{"split", "string"}, {"values", "object"}});
  types["PerformanceWindow"] = obj({{"deployment_id", "string"}, {"capacity", "integer"},
                                    {"resolved", "integer"}, {"rolling", "object"}, {"reference", "object"}});
  // GET /deployments/{id}/performance: the window plus the current decision.
  types["PerformanceView"] = types["PerformanceWindow"];
  types["PerformanceView"]["required"].push_back("decision");
  types["PerformanceView"]["properties"]["decision"] = Json{{"type", "object"}};
  types["DegradationDecision"] = obj({{"status", "string"}, {"metric", "string"}, {"resolved", "integer"},
                                      {"rolling", "number|null"}, {"reference", "number|null"},
                                      {"threshold", "number|null"}, {"reason", "string"}});
  types["ExplainerSummary"] = obj({{"status", "string"}, {"count", "integer"}, {"means", "object"},
                                   {"floor", "number"}, {"reason", "string"}, {"alert", "object|null"}});
  types["EndpointMetrics"] = obj({{"endpoint", "string"}, {"requests", "integer"},
                                  {"latency_micros", "object"}, {"throughput_rps", "number|null"}});
  types["ExplainerTally"] = obj({{"explainer_id", "string"}, {"accept", "integer"}, {"reject", "integer"}});
  types["CompareEntry"] = obj({{"kind", "string"}, {"id", "string"}, {"model", "string"},
                               {"payload_index", "integer"}, {"output", "object"},
                               {"attributions", "array|null"}, {"quality", "object|null"}});
  types["LineageEdge"] = obj({{"from", "string"}, {"to", "string"}, {"relation", "string"}});
  types["Error"] = obj({{"error", "object"}});
  types["ErrorDetail"] = obj({{"code", "string"}, {"message", "string"}});
  return Json{{"schema_version", kApiSchemaVersion}, {"types", types}};
}

Json openapi_document() {
  Json paths = Json::object();
  for (const Route& r : routes()) {
    std::string method = r.method;
    for (char& ch : method) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    Json op{{"summary", r.summary},
            {"responses", Json{{"200", Json{{"description", "OK"}}},
                               {"default", Json{{"description", "Error object {error: {code, message}}"}}}}}};
    Json params = Json::array();
    std::smatch m;
    std::string rest = r.path;
    const std::regex param_re(R"(\{([a-z_]+)\})");
    while (std::regex_search(rest, m, param_re)) {
      params.push_back(Json{{"name", m[1].str()}, {"in", "path"}, {"required", true},
                            {"schema", Json{{"type", "string"}}}});
      rest = m.suffix();
    }
    if (!params.empty()) op["parameters"] = params;
    paths[r.path][method] = op;
  }
  return Json{{"openapi", "3.0.3"},
              {"info", Json{{"title", "xmlops"}, {"version", "0.1.0"},
                            {"x-schema-version", kApiSchemaVersion}}},
              {"paths", paths}};
}

TrainRequest train_request_from_json(const Json& b) {
  only_keys(b, {"architecture", "dataset", "split", "hyperparams", "seed"});
  TrainRequest r;
  r.architecture = parse_enum<Architecture>(field<std::string>(b, "architecture"));
  r.dataset = field<Id>(b, "dataset");
  if (auto split = opt_field<Json>(b, "split")) {
    only_keys(*split, {"train_frac", "val_frac", "test_frac", "seed"});
    try {
      r.split = split->get<SplitSpec>();
    } catch (const Json::exception& e) {
      throw_validation(std::string("invalid split: ") + e.what());
    }
  }
  r.hyperparams = opt_field<Json>(b, "hyperparams").value_or(Json::object());
  r.seed = opt_field<std::uint64_t>(b, "seed").value_or(0);
  return r;
}

DeploymentRequest deployment_request_from_json(const Json& b) {
  only_keys(b, {"endpoint", "scheme", "primary_model", "secondary_model", "traffic_fraction", "explainer",
                "defer_explanations", "routing_seed"});
  DeploymentRequest r;
  r.endpoint = opt_field<std::string>(b, "endpoint").value_or("default");
  r.scheme = parse_enum<Scheme>(opt_field<std::string>(b, "scheme").value_or("single"));
  r.primary_model = field<Id>(b, "primary_model");
  r.secondary_model = opt_field<Id>(b, "secondary_model");
  r.traffic_fraction = opt_field<double>(b, "traffic_fraction");
  r.explainer = opt_field<Id>(b, "explainer");
  r.defer_explanations = opt_field<bool>(b, "defer_explanations").value_or(false);
  r.routing_seed = opt_field<std::uint64_t>(b, "routing_seed");
  return r;
}

FeedbackRequest feedback_request_from_json(const Json& b) {
  only_keys(b, {"kind", "target_id", "verdict", "corrected_label", "comment", "author"});
  FeedbackRequest r;
  r.kind = parse_enum<FeedbackKind>(field<std::string>(b, "kind"));
  r.target_id = field<Id>(b, "target_id");
  r.verdict = parse_enum<Verdict>(field<std::string>(b, "verdict"));
  r.corrected_label = opt_field<double>(b, "corrected_label");
  r.comment = opt_field<std::string>(b, "comment").value_or("");
  r.author = field<std::string>(b, "author");
  return r;
}

CompareRequest compare_request_from_json(const Json& b) {
  only_keys(b, {"payloads", "models", "explainers", "explained_model"});
  CompareRequest r;
  const Json payloads = field<Json>(b, "payloads");
  if (!payloads.is_array()) throw_validation("field 'payloads' must be an array");
  for (const Json& p : payloads) r.payloads.push_back(vector_from_json(p));
  r.models = opt_field<std::vector<Id>>(b, "models").value_or(std::vector<Id>{});
  r.explainers = opt_field<std::vector<Id>>(b, "explainers").value_or(std::vector<Id>{});
  r.explained_model = opt_field<Id>(b, "explained_model");
  return r;
}

std::pair<std::string, int> parse_bind(const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos || colon == 0) throw_validation("bind address must be host:port: " + bind);
  const std::string host = bind.substr(0, colon);
  const std::string port_text = bind.substr(colon + 1);
  int port = -1;
  try {
    std::size_t used = 0;
    port = std::stoi(port_text, &used);
    if (used != port_text.size()) port = -1;
  } catch (const std::exception&) {
  }
  if (port < 0 || port > 65535) throw_validation("bad port in bind address: " + bind);
  return {host, port};
}

}  // namespace xmlops
