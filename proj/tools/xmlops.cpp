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

// xmlops command-line client. Every subcommand is a thin wrapper over the
// in-process HTTP router, so CLI and API share validation and output.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "xmlops/http_api.hpp"

using namespace xmlops;

namespace {

struct Globals {
  std::string store;
  std::string config;
  bool json = false;
};

struct CallResult {
  ApiResponse response;
  int exit_code = 0;
};

int exit_code_for(int status) {
  if (status < 300) return 0;
  return status >= 500 && status != 503 ? 2 : 1;
}

std::string read_input(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_validation("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json parse_json_arg(const std::string& text, const std::string& what) {
  // "@file" reads the JSON from a file.
  const std::string source = !text.empty() && text[0] == '@' ? read_input(text.substr(1)) : text;
  try {
    return Json::parse(source);
  } catch (const Json::exception& e) {
    throw_validation(what + " is not valid JSON: " + e.what());
  }
}

// "1,2.5,3" or a JSON array.
Json parse_payload(const std::string& text) {
  const auto first = text.find_first_not_of(" \t");
  if (first != std::string::npos && text[first] == '[') return parse_json_arg(text, "payload");
  Json arr = Json::array();
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(cell, &used);
      if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
      arr.push_back(v);
    } catch (const std::exception&) {
      throw_validation("payload entry '" + cell + "' is not a number");
    }
  }
  if (arr.empty()) throw_validation("payload is empty");
  return arr;
}

std::vector<std::string> read_id_file(const std::string& path) {
  const std::string text = read_input(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    return parse_json_arg(text, path).get<std::vector<std::string>>();
  }
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    out.push_back(line.substr(b, line.find_last_not_of(" \t\r") + 1 - b));
  }
  return out;
}

// Most specific first: an annotation also carries a sample_id.
const char* const kIdKeys[] = {"annotation_id", "outcome_id", "feedback_id", "alert_id", "trigger_id",
                               "explanation_id", "request_id", "deployment_id", "explainer_id",
                               "model_id", "run_id", "recipe_id", "dataset_id", "sample_id"};

std::optional<std::string> primary_id(const Json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (!j.is_object()) return std::nullopt;
  for (const char* k : kIdKeys) {
    if (j.contains(k) && j[k].is_string()) return j[k].get<std::string>();
  }
  for (const char* k : {"record", "run", "dataset"}) {
    if (j.contains(k)) return primary_id(j[k]);
  }
  return std::nullopt;
}

// Human-readable rendering: lists print one id per line, objects print
// their scalar fields.
void print_human(const Json& body, std::ostream& out) {
  if (body.is_object() && body.contains("items") && body["items"].is_array()) {
    for (const Json& item : body["items"]) {
      if (auto id = primary_id(item)) {
        out << *id << "\n";
      } else {
        out << item.dump() << "\n";
      }
    }
    return;
  }
  if (!body.is_object()) {
    out << body.dump(2) << "\n";
    return;
  }
  for (const auto& [key, value] : body.items()) {
    if (value.is_string()) {
      out << key << ": " << value.get<std::string>() << "\n";
    } else if (value.is_primitive()) {
      out << key << ": " << value.dump() << "\n";
    } else if (auto id = primary_id(value)) {
      out << key << ": " << *id << "\n";
    } else if (value.dump().size() <= 160) {
      out << key << ": " << value.dump() << "\n";
    } else {
      out << key << ": " << value.dump().substr(0, 157) << "...\n";
    }
  }
}

class Session {
 public:
  explicit Session(const Globals& g) : g_(g) {}

  Platform& platform() {
    if (!platform_) {
      std::optional<std::filesystem::path> cfg;
      if (!g_.config.empty()) cfg = g_.config;
      Config config = resolve_config(cfg);
      if (!g_.store.empty()) config.store_path = g_.store;
      platform_ = Platform::open(config);
    }
    return *platform_;
  }

  ApiResponse call(std::string method, std::string path, const Json& body = Json(),
                   std::map<std::string, std::string> query = {}) {
    ApiRequest req;
    req.method = std::move(method);
    req.path = std::move(path);
    req.query = std::move(query);
    if (!body.is_null()) req.body = body.dump();
    return handle_request(platform(), req);
  }

  int emit(const ApiResponse& r) {
    if (r.status >= 300) {
      const std::string msg = r.body.contains("error") ? r.body["error"].value("message", "") : r.body.dump();
      if (g_.json) std::cout << r.body.dump(2) << "\n";
      std::cerr << "error: " << msg << "\n";
      return exit_code_for(r.status);
    }
    if (r.text) {
      std::cout << *r.text;
    } else if (g_.json) {
      std::cout << r.body.dump(2) << "\n";
    } else {
      print_human(r.body, std::cout);
    }
    return 0;
  }

  int run(std::string method, std::string path, const Json& body = Json(),
          std::map<std::string, std::string> query = {}) {
    return emit(call(std::move(method), std::move(path), body, std::move(query)));
  }

 private:
  const Globals& g_;
  std::unique_ptr<Platform> platform_;
};

std::atomic<HttpServer*> g_server{nullptr};

extern "C" void on_signal(int) {
  if (HttpServer* s = g_server.load()) s->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"xmlops: explainable MLOps platform"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--store", g.store, "Store directory (overrides the config file)");
  app.add_option("--config", g.config, "Config file (default: $XMLOPS_CONFIG)");
  app.add_flag("--json", g.json, "Machine-readable JSON output");

  std::function<int(Session&)> action;
  auto on = [&](CLI::App* sub, std::function<int(Session&)> fn) {
    sub->callback([&action, fn = std::move(fn)] { action = fn; });
  };

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Ingest samples from a CSV or JSON file");
  std::string ingest_format, ingest_path;
  ingest->add_option("--format", ingest_format, "csv or json (default: by extension)")
      ->check(CLI::IsMember({"csv", "json"}));
  ingest->add_option("path", ingest_path, "Input file, or - for stdin")->required();
  on(ingest, [&](Session& s) {
    std::string format = ingest_format;
    if (format.empty()) {
      format = ingest_path.size() >= 5 && ingest_path.substr(ingest_path.size() - 5) == ".json" ? "json" : "csv";
    }
    const std::string text = read_input(ingest_path);
    Json body = format == "csv" ? Json{{"csv", text}} : Json{{"items", parse_json_arg(text, ingest_path)}};
    return s.run("POST", "/samples", body);
  });

  // dataset
  auto* dataset = app.add_subcommand("dataset", "Dataset versions");
  dataset->require_subcommand(1);
  auto* ds_define = dataset->add_subcommand("define", "Define a draft dataset");
  std::vector<std::string> ds_members;
  std::string ds_members_file, ds_recipe;
  bool ds_all = false, ds_seal = false;
  ds_define->add_option("members", ds_members, "Sample ids");
  ds_define->add_option("--members-file", ds_members_file, "File of sample ids (one per line or JSON array)");
  ds_define->add_flag("--all", ds_all, "Use every stored sample that is not excluded");
  ds_define->add_option("--recipe", ds_recipe, "Recipe id to attach");
  ds_define->add_flag("--seal", ds_seal, "Seal right away");
  on(ds_define, [&](Session& s) {
    std::vector<std::string> members = ds_members;
    if (!ds_members_file.empty()) {
      auto more = read_id_file(ds_members_file);
      members.insert(members.end(), more.begin(), more.end());
    }
    if (ds_all) {
      for (const Id& id : s.platform().data().list_samples()) {
        if (!s.platform().data().is_excluded(id)) members.push_back(id);
      }
    }
    Json body{{"members", members}};
    if (!ds_recipe.empty()) body["recipe"] = ds_recipe;
    ApiResponse r = s.call("POST", "/datasets", body);
    if (ds_seal && r.status == 200) {
      r = s.call("POST", "/datasets/" + r.body["dataset_id"].get<std::string>() + "/seal");
    }
    return s.emit(r);
  });
  auto* ds_seal_cmd = dataset->add_subcommand("seal", "Seal a draft dataset");
  std::string ds_id;
  ds_seal_cmd->add_option("dataset", ds_id)->required();
  on(ds_seal_cmd, [&](Session& s) { return s.run("POST", "/datasets/" + ds_id + "/seal"); });
  auto* ds_recipe_cmd = dataset->add_subcommand("recipe", "Apply a recipe to a sealed dataset");
  std::string ds_steps;
  ds_recipe_cmd->add_option("dataset", ds_id)->required();
  ds_recipe_cmd->add_option("--recipe", ds_recipe, "Registered recipe id");
  ds_recipe_cmd->add_option("--steps", ds_steps, "Recipe steps as JSON (or @file)");
  on(ds_recipe_cmd, [&](Session& s) {
    Json body = Json::object();
    if (!ds_recipe.empty()) body["recipe"] = ds_recipe;
    if (!ds_steps.empty()) body["steps"] = parse_json_arg(ds_steps, "--steps");
    return s.run("POST", "/datasets/" + ds_id + "/recipe", body);
  });
  auto* ds_show = dataset->add_subcommand("show", "Show a dataset");
  ds_show->add_option("dataset", ds_id)->required();
  on(ds_show, [&](Session& s) { return s.run("GET", "/datasets/" + ds_id); });
  auto* ds_list = dataset->add_subcommand("list", "List datasets");
  on(ds_list, [&](Session& s) { return s.run("GET", "/datasets"); });
  std::vector<std::string> ds_samples;
  auto* ds_append = dataset->add_subcommand("append", "Append samples to a draft");
  ds_append->add_option("dataset", ds_id)->required();
  ds_append->add_option("samples", ds_samples)->required();
  on(ds_append, [&](Session& s) {
    return s.run("POST", "/datasets/" + ds_id + "/append", Json{{"samples", ds_samples}});
  });
  auto* ds_remove = dataset->add_subcommand("remove", "Remove samples from a draft");
  ds_remove->add_option("dataset", ds_id)->required();
  ds_remove->add_option("samples", ds_samples)->required();
  on(ds_remove, [&](Session& s) {
    return s.run("POST", "/datasets/" + ds_id + "/remove", Json{{"samples", ds_samples}});
  });

  // annotate
  auto* annotate = app.add_subcommand("annotate", "Label a sample, or mark it bad");
  std::string an_sample, an_author = "cli", an_origin = "human", an_reason;
  double an_label = 0.0;
  bool an_bad = false;
  annotate->add_option("sample", an_sample)->required();
  auto* label_opt = annotate->add_option("--label", an_label, "Label value");
  annotate->add_option("--author", an_author);
  annotate->add_option("--origin", an_origin)->check(CLI::IsMember({"human", "system"}));
  annotate->add_flag("--bad", an_bad, "Mark the sample as bad data instead of labeling it");
  annotate->add_option("--reason", an_reason, "Reason for --bad");
  on(annotate, [&, label_opt](Session& s) {
    if (an_bad) {
      return s.run("POST", "/samples/" + an_sample + "/exclusion", Json{{"reason", an_reason}, {"author", an_author}});
    }
    if (label_opt->count() == 0) throw_validation("--label is required unless --bad is given");
    return s.run("POST", "/samples/" + an_sample + "/annotations",
                 Json{{"label", an_label}, {"author", an_author}, {"origin", an_origin}});
  });

  // train
  auto* train = app.add_subcommand("train", "Start a training run");
  std::string tr_arch, tr_dataset, tr_hyper;
  double tr_train = 0.8, tr_val = 0.1, tr_test = 0.1;
  std::uint64_t tr_split_seed = 0, tr_seed = 0;
  train->add_option("--architecture", tr_arch, "linear_regression | logistic_regression | knn")->required();
  train->add_option("--dataset", tr_dataset)->required();
  train->add_option("--train-frac", tr_train);
  train->add_option("--val-frac", tr_val);
  train->add_option("--test-frac", tr_test);
  train->add_option("--split-seed", tr_split_seed);
  train->add_option("--hyperparams", tr_hyper, "JSON object (or @file)");
  train->add_option("--seed", tr_seed);
  on(train, [&](Session& s) {
    Json body{{"architecture", tr_arch},
              {"dataset", tr_dataset},
              {"split", Json{{"train_frac", tr_train}, {"val_frac", tr_val}, {"test_frac", tr_test},
                             {"seed", tr_split_seed}}},
              {"seed", tr_seed}};
    if (!tr_hyper.empty()) body["hyperparams"] = parse_json_arg(tr_hyper, "--hyperparams");
    return s.run("POST", "/runs", body);
  });

  // runs
  auto* runs = app.add_subcommand("runs", "Training runs");
  runs->require_subcommand(1);
  std::string run_id, run_metric, run_split = "test";
  std::vector<std::string> run_ids;
  auto* runs_list = runs->add_subcommand("list", "List runs");
  on(runs_list, [&](Session& s) { return s.run("GET", "/runs"); });
  auto* runs_show = runs->add_subcommand("show", "Show a run");
  runs_show->add_option("run", run_id)->required();
  on(runs_show, [&](Session& s) { return s.run("GET", "/runs/" + run_id); });
  auto* runs_compare = runs->add_subcommand("compare", "Rank runs by a metric");
  runs_compare->add_option("runs", run_ids)->required();
  runs_compare->add_option("--metric", run_metric)->required();
  runs_compare->add_option("--split", run_split)->check(CLI::IsMember({"train", "val", "test"}));
  on(runs_compare, [&](Session& s) {
    return s.run("POST", "/runs/compare", Json{{"runs", run_ids}, {"metric", run_metric}, {"split", run_split}});
  });

  // register
  auto* reg = app.add_subcommand("register", "Register a model, or an explainer with --explainer");
  std::string reg_model, reg_method, reg_config, reg_kind = "post_hoc", reg_knowledge;
  std::vector<std::string> reg_models;
  bool reg_explainer = false, reg_list = false;
  reg->add_option("model", reg_model, "Model id");
  reg->add_flag("--explainer", reg_explainer, "Register an explainer instead");
  reg->add_flag("--list", reg_list, "List registry entries");
  reg->add_option("--method", reg_method, "linear_exact | local_surrogate | counterfactual | permutation_importance");
  reg->add_option("--config", reg_config, "Explainer config JSON (or @file)");
  reg->add_option("--kind", reg_kind)->check(CLI::IsMember({"post_hoc", "interpretable", "data"}));
  reg->add_option("--models", reg_models, "Compatible model ids");
  reg->add_option("--domain-knowledge", reg_knowledge);
  on(reg, [&](Session& s) {
    if (reg_list) return s.run("GET", "/registry");
    if (reg_explainer) {
      if (reg_method.empty()) throw_validation("--method is required with --explainer");
      std::vector<std::string> models = reg_models;
      if (!reg_model.empty()) models.push_back(reg_model);
      Json body{{"method", reg_method}, {"kind", reg_kind}, {"compatible_models", models},
                {"domain_knowledge", reg_knowledge}};
      body["config"] = reg_config.empty() ? Json::object() : parse_json_arg(reg_config, "--config");
      return s.run("POST", "/explainers", body);
    }
    if (reg_model.empty()) throw_validation("model id required");
    return s.run("POST", "/registry", Json{{"model_id", reg_model}});
  });

  // deploy
  auto* deploy = app.add_subcommand("deploy", "Create, list or promote deployments");
  deploy->require_subcommand(0, 1);
  std::string dp_primary, dp_secondary, dp_scheme = "single", dp_explainer, dp_endpoint = "default", dp_id;
  double dp_fraction = 0.0;
  std::uint64_t dp_seed = 0;
  bool dp_defer = false;
  deploy->add_option("--primary", dp_primary, "Primary model id");
  deploy->add_option("--secondary", dp_secondary, "Candidate model id");
  deploy->add_option("--scheme", dp_scheme)->check(CLI::IsMember({"single", "shadow", "canary", "ab"}));
  auto* frac_opt = deploy->add_option("--fraction", dp_fraction, "Traffic fraction for canary/ab");
  deploy->add_option("--explainer", dp_explainer, "Bound explainer id");
  deploy->add_option("--endpoint", dp_endpoint);
  auto* seed_opt = deploy->add_option("--routing-seed", dp_seed);
  deploy->add_flag("--defer-explanations", dp_defer);
  // The parent callback also runs after promote/list/show; only create when
  // no subcommand was given.
  std::function<int(Session&)> create_deployment = [&, frac_opt, seed_opt](Session& s) {
    if (dp_primary.empty()) throw_validation("--primary is required");
    Json body{{"primary_model", dp_primary}, {"scheme", dp_scheme}, {"endpoint", dp_endpoint},
              {"defer_explanations", dp_defer}};
    if (!dp_secondary.empty()) body["secondary_model"] = dp_secondary;
    if (frac_opt->count()) body["traffic_fraction"] = dp_fraction;
    if (!dp_explainer.empty()) body["explainer"] = dp_explainer;
    if (seed_opt->count()) body["routing_seed"] = dp_seed;
    return s.run("POST", "/deployments", body);
  };
  deploy->callback([&, deploy] {
    if (deploy->get_subcommands().empty()) action = create_deployment;
  });
  auto* dp_promote = deploy->add_subcommand("promote", "Promote a deployment's candidate");
  dp_promote->add_option("deployment", dp_id)->required();
  on(dp_promote, [&](Session& s) { return s.run("POST", "/deployments/" + dp_id + "/promote"); });
  auto* dp_list = deploy->add_subcommand("list", "List deployments");
  on(dp_list, [&](Session& s) { return s.run("GET", "/deployments"); });
  auto* dp_show = deploy->add_subcommand("show", "Show a deployment");
  dp_show->add_option("deployment", dp_id)->required();
  on(dp_show, [&](Session& s) { return s.run("GET", "/deployments/" + dp_id); });

  // infer
  auto* infer = app.add_subcommand("infer", "Send inference requests to a deployment");
  std::string inf_dep, inf_payload, inf_key, inf_batch;
  infer->add_option("deployment", inf_dep)->required();
  infer->add_option("--payload", inf_payload, "Comma-separated values or JSON array");
  infer->add_option("--key", inf_key, "Request key (routing identity)");
  infer->add_option("--batch", inf_batch, "JSON array of {payload, request_key} or of payload arrays");
  on(infer, [&](Session& s) {
    if (!inf_batch.empty()) {
      Json requests = Json::array();
      for (const Json& item : parse_json_arg(read_input(inf_batch), inf_batch)) {
        requests.push_back(item.is_array() ? Json{{"payload", item}} : item);
      }
      return s.run("POST", "/deployments/" + inf_dep + "/infer", Json{{"requests", requests}});
    }
    if (inf_payload.empty()) throw_validation("--payload or --batch is required");
    return s.run("POST", "/deployments/" + inf_dep + "/infer",
                 Json{{"payload", parse_payload(inf_payload)}, {"request_key", inf_key}});
  });

  // explain
  auto* explain = app.add_subcommand("explain", "Explain a payload, or list explanations");
  std::string ex_model, ex_explainer, ex_payload, ex_dataset;
  bool ex_list = false;
  explain->add_option("--model", ex_model);
  explain->add_option("--explainer", ex_explainer);
  explain->add_option("--payload", ex_payload);
  explain->add_option("--dataset", ex_dataset, "Dataset context (permutation importance, filtering)");
  explain->add_flag("--list", ex_list, "List stored explanations (filter with --model/--dataset)");
  on(explain, [&](Session& s) {
    if (ex_list) {
      std::map<std::string, std::string> q;
      if (!ex_model.empty()) q["model"] = ex_model;
      if (!ex_dataset.empty()) q["dataset"] = ex_dataset;
      return s.run("GET", "/explanations", Json(), q);
    }
    if (ex_model.empty() || ex_explainer.empty() || ex_payload.empty()) {
      throw_validation("--model, --explainer and --payload are required");
    }
    Json body{{"model_id", ex_model}, {"explainer_id", ex_explainer}, {"payload", parse_payload(ex_payload)}};
    if (!ex_dataset.empty()) body["dataset"] = ex_dataset;
    return s.run("POST", "/explain", body);
  });

  // feedback
  auto* fb = app.add_subcommand("feedback", "Submit feedback on predictions, data or explanations");
  std::string fb_kind = "prediction", fb_target, fb_verdict = "accept", fb_comment, fb_author = "cli", fb_batch;
  double fb_label = 0.0;
  bool fb_list = false;
  fb->add_option("--kind", fb_kind)->check(CLI::IsMember({"prediction", "data_quality", "explanation"}));
  fb->add_option("--target", fb_target, "Request, sample or explanation id");
  fb->add_option("--verdict", fb_verdict)->check(CLI::IsMember({"accept", "reject"}));
  auto* fb_label_opt = fb->add_option("--label", fb_label, "Corrected label (prediction feedback)");
  fb->add_option("--comment", fb_comment);
  fb->add_option("--author", fb_author);
  fb->add_option("--batch", fb_batch, "JSON array of feedback objects");
  fb->add_flag("--list", fb_list, "List feedback (filter with --target)");
  on(fb, [&, fb_label_opt](Session& s) {
    if (fb_list) {
      std::map<std::string, std::string> q;
      if (!fb_target.empty()) q["target"] = fb_target;
      return s.run("GET", "/feedback", Json(), q);
    }
    if (!fb_batch.empty()) {
      return s.run("POST", "/feedback", Json{{"items", parse_json_arg(read_input(fb_batch), fb_batch)}});
    }
    if (fb_target.empty()) throw_validation("--target is required");
    Json body{{"kind", fb_kind}, {"target_id", fb_target}, {"verdict", fb_verdict},
              {"comment", fb_comment}, {"author", fb_author}};
    if (fb_label_opt->count()) body["corrected_label"] = fb_label;
    return s.run("POST", "/feedback", body);
  });

  // review
  auto* review = app.add_subcommand("review", "Review queue: most uncertain unresolved predictions");
  std::string rv_dep;
  std::size_t rv_limit = 20;
  review->add_option("deployment", rv_dep)->required();
  review->add_option("--limit", rv_limit);
  on(review, [&](Session& s) {
    return s.run("GET", "/review-queue", Json(), {{"deployment", rv_dep}, {"limit", std::to_string(rv_limit)}});
  });

  // monitor
  auto* mon = app.add_subcommand("monitor", "Drift, performance, alerts and retraining");
  mon->require_subcommand(1);
  std::string mon_dep, mon_cause = "manual", mon_trigger, mon_request, mon_author = "cli";
  double mon_label = 0.0;
  auto dep_cmd = [&](const char* name, const char* desc, std::string method, std::string suffix) {
    auto* c = mon->add_subcommand(name, desc);
    c->add_option("deployment", mon_dep)->required();
    on(c, [&, method, suffix](Session& s) { return s.run(method, "/deployments/" + mon_dep + suffix); });
  };
  dep_cmd("check", "Degradation check (fires a retrain trigger on alert)", "POST", "/check");
  dep_cmd("drift", "Evaluate drift over the current window", "POST", "/drift");
  dep_cmd("explainers", "Explanation quality summary", "POST", "/explainer-check");
  dep_cmd("performance", "Rolling metrics against the reference", "GET", "/performance");
  dep_cmd("records", "Latest inference records", "GET", "/records");
  auto* mon_system = mon->add_subcommand("system", "Latency and throughput per endpoint");
  on(mon_system, [&](Session& s) { return s.run("GET", "/metrics/system"); });
  auto* mon_alerts = mon->add_subcommand("alerts", "Alert feed");
  mon_alerts->add_option("--deployment", mon_dep);
  on(mon_alerts, [&](Session& s) {
    std::map<std::string, std::string> q;
    if (!mon_dep.empty()) q["deployment"] = mon_dep;
    return s.run("GET", "/alerts", Json(), q);
  });
  auto* mon_triggers = mon->add_subcommand("triggers", "Retrain triggers");
  mon_triggers->add_option("--deployment", mon_dep);
  on(mon_triggers, [&](Session& s) {
    std::map<std::string, std::string> q;
    if (!mon_dep.empty()) q["deployment"] = mon_dep;
    return s.run("GET", "/triggers", Json(), q);
  });
  auto* mon_fire = mon->add_subcommand("trigger", "Fire a retrain trigger by hand");
  mon_fire->add_option("deployment", mon_dep)->required();
  mon_fire->add_option("--cause", mon_cause)
      ->check(CLI::IsMember({"manual", "performance_degradation", "data_drift", "new_annotations"}));
  on(mon_fire, [&](Session& s) {
    return s.run("POST", "/triggers", Json{{"deployment_id", mon_dep}, {"cause", mon_cause}});
  });
  auto* mon_retrain = mon->add_subcommand("retrain", "Consume a trigger and retrain");
  mon_retrain->add_option("trigger", mon_trigger)->required();
  on(mon_retrain, [&](Session& s) { return s.run("POST", "/triggers/" + mon_trigger + "/retrain"); });
  auto* mon_outcome = mon->add_subcommand("outcome", "Record the true label of a request");
  mon_outcome->add_option("request", mon_request)->required();
  mon_outcome->add_option("--label", mon_label)->required();
  mon_outcome->add_option("--author", mon_author);
  on(mon_outcome, [&](Session& s) {
    return s.run("POST", "/records/" + mon_request + "/outcome", Json{{"label", mon_label}, {"author", mon_author}});
  });
  auto* mon_pass = mon->add_subcommand("pass", "Run one full monitoring pass");
  on(mon_pass, [&](Session& s) { return s.run("POST", "/monitor/pass"); });

  // lineage
  auto* lineage = app.add_subcommand("lineage", "Upstream and downstream lineage of an entity");
  std::string ln_id, ln_format = "dot";
  lineage->add_option("id", ln_id)->required();
  lineage->add_option("--format", ln_format)->check(CLI::IsMember({"dot", "json"}));
  on(lineage, [&](Session& s) {
    return s.run("GET", "/lineage/" + ln_id, Json(), {{"format", g.json ? "json" : ln_format}});
  });

  auto* health = app.add_subcommand("health", "Component statuses");
  on(health, [&](Session& s) { return s.run("GET", "/healthz"); });

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP API and the background monitor");
  std::string sv_bind;
  bool sv_no_monitor = false;
  serve->add_option("--bind", sv_bind, "host:port (default from config)");
  serve->add_flag("--no-monitor", sv_no_monitor);
  on(serve, [&](Session& s) {
    Platform& p = s.platform();
    const auto [host, port] = parse_bind(sv_bind.empty() ? p.config().http_bind : sv_bind);
    HttpServer server(p);
    const int bound = server.bind(host, port);
    if (p.config().monitor_enabled && !sv_no_monitor) p.start_monitor();
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cout << "listening on " << host << ":" << bound << std::endl;
    server.listen();
    g_server = nullptr;
    p.stop_monitor();
    p.flush();
    return 0;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    // Name the offending word when the first positional is not a command.
    std::string what = e.what();
    for (int i = 1; i < argc; ++i) {
      const std::string a = argv[i];
      if (a == "--store" || a == "--config") {
        ++i;
        continue;
      }
      if (a.rfind("-", 0) == 0) continue;
      bool known = false;
      for (const CLI::App* sub : app.get_subcommands({})) known = known || sub->get_name() == a;
      if (!known) what = "unknown subcommand '" + a + "'";
      break;
    }
    std::cerr << "error: " << what << "\n\n" << app.help();
    return 1;
  }
  if (!action) {
    std::cerr << app.help();
    return 1;
  }
  try {
    Session session(g);
    return action(session);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::kInternal ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}
