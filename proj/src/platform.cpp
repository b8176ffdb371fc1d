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

#include "xmlops/platform.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <iostream>

namespace xmlops {
namespace {

namespace fs = std::filesystem;

void reject_unknown(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw_validation("config: " + where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw_validation("config: unknown key '" + key + "' in " + where);
  }
}

}  // namespace

void Config::validate() const {
  if (store_path.empty()) throw_validation("config: store_path must not be empty");
  if (!(drift.psi_alert > 0) || !(drift.ks_alert > 0)) {
    throw_validation("config: drift thresholds must be positive");
  }
  if (drift_window == 0 || drift_every == 0) throw_validation("config: drift window and cadence must be positive");
  if (!(monitoring_cadence_seconds > 0)) throw_validation("config: monitoring cadence must be positive");
  if (!(degradation.tolerance > 0)) throw_validation("config: degradation tolerance must be positive");
  if (degradation.min_resolved == 0) throw_validation("config: min_resolved must be positive");
  if (!(explainer_alert_floor > 0 && explainer_alert_floor <= 1)) {
    throw_validation("config: explainer alert floor must lie in (0, 1]");
  }
  if (http_bind.find(':') == std::string::npos) throw_validation("config: http_bind must be host:port");
}

ObserveConfig Config::observe_config() const {
  ObserveConfig c;
  c.drift = drift;
  c.drift_window = drift_window;
  c.drift_every = drift_every;
  c.degradation = degradation;
  c.explainer_floor = explainer_alert_floor;
  c.retrain_on_drift = retrain_on_drift;
  c.new_annotation_threshold = new_annotation_threshold;
  return c;
}

void to_json(Json& j, const Config& c) {
  j = Json{{"schema_version", 1},
           {"store_path", c.store_path.string()},
           {"http_bind", c.http_bind},
           {"drift", Json{{"psi_alert", c.drift.psi_alert},
                          {"ks_alert", c.drift.ks_alert},
                          {"window", c.drift_window},
                          {"every", c.drift_every}}},
           {"monitoring", Json{{"enabled", c.monitor_enabled},
                               {"cadence_seconds", c.monitoring_cadence_seconds},
                               {"retrain_on_drift", c.retrain_on_drift},
                               {"new_annotation_threshold", c.new_annotation_threshold}}},
           {"degradation", Json{{"metric", c.degradation.metric ? Json(*c.degradation.metric) : Json()},
                                {"tolerance", c.degradation.tolerance},
                                {"min_resolved", c.degradation.min_resolved}}},
           {"explainer_alert_floor", c.explainer_alert_floor},
           {"storage", Json{{"fsync_appends", c.fsync_appends}}}};
}

Config config_from_json(const Json& j) {
  Config c;
  try {
    reject_unknown(j, {"schema_version", "store_path", "http_bind", "drift", "monitoring",
                       "degradation", "explainer_alert_floor", "storage"},
                   "top level");
    if (j.contains("schema_version") && j["schema_version"] != 1) {
      throw_validation("config: unsupported schema_version " + j["schema_version"].dump());
    }
    c.store_path = j.value("store_path", c.store_path.string());
    c.http_bind = j.value("http_bind", c.http_bind);
    if (auto it = j.find("drift"); it != j.end()) {
      reject_unknown(*it, {"psi_alert", "ks_alert", "window", "every"}, "drift");
      c.drift.psi_alert = it->value("psi_alert", c.drift.psi_alert);
      c.drift.ks_alert = it->value("ks_alert", c.drift.ks_alert);
      c.drift_window = it->value("window", c.drift_window);
      c.drift_every = it->value("every", c.drift_every);
    }
    if (auto it = j.find("monitoring"); it != j.end()) {
      reject_unknown(*it, {"enabled", "cadence_seconds", "retrain_on_drift", "new_annotation_threshold"},
                     "monitoring");
      c.monitor_enabled = it->value("enabled", c.monitor_enabled);
      c.monitoring_cadence_seconds = it->value("cadence_seconds", c.monitoring_cadence_seconds);
      c.retrain_on_drift = it->value("retrain_on_drift", c.retrain_on_drift);
      c.new_annotation_threshold = it->value("new_annotation_threshold", c.new_annotation_threshold);
    }
    if (auto it = j.find("degradation"); it != j.end()) {
      reject_unknown(*it, {"metric", "tolerance", "min_resolved"}, "degradation");
      if (it->contains("metric") && !(*it)["metric"].is_null()) {
        c.degradation.metric = (*it)["metric"].get<std::string>();
      }
      c.degradation.tolerance = it->value("tolerance", c.degradation.tolerance);
      c.degradation.min_resolved = it->value("min_resolved", c.degradation.min_resolved);
    }
    c.explainer_alert_floor = j.value("explainer_alert_floor", c.explainer_alert_floor);
    if (auto it = j.find("storage"); it != j.end()) {
      reject_unknown(*it, {"fsync_appends"}, "storage");
      c.fsync_appends = it->value("fsync_appends", c.fsync_appends);
    }
  } catch (const Json::exception& e) {
    throw_validation(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

Config load_config(const fs::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error&) {
    throw_validation("config file " + path.string() + " cannot be read");
  }
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw_validation("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  try {
    return config_from_json(j);
  } catch (const Error& e) {
    throw_validation(path.string() + ": " + e.what());
  }
}

Config resolve_config(const std::optional<fs::path>& explicit_path) {
  if (explicit_path) return load_config(*explicit_path);
  if (const char* env = std::getenv("XMLOPS_CONFIG"); env && *env) return load_config(env);
  Config c;
  c.validate();
  return c;
}

Platform::Platform(Config config, Clock clock) : config_(std::move(config)), clock_(std::move(clock)) {}

std::unique_ptr<Platform> Platform::open(const Config& config, Clock clock) {
  config.validate();
  std::unique_ptr<Platform> p(new Platform(config, std::move(clock)));
  std::error_code ec;
  fs::create_directories(config.store_path, ec);
  if (ec) {
    throw_precondition("store path " + config.store_path.string() + " is not writable: " + ec.message());
  }
  const fs::path lock_path = config.store_path / "LOCK";
  p->lock_fd_ = ::open(lock_path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
  if (p->lock_fd_ < 0) {
    throw_precondition("store path " + config.store_path.string() + " is not writable: " +
                       std::strerror(errno));
  }
  if (::flock(p->lock_fd_, LOCK_EX | LOCK_NB) != 0) {
    throw_precondition("store " + config.store_path.string() + " is in use by another process");
  }
  p->store_ = Store::open(config.store_path, Store::Options{config.fsync_appends});
  p->lineage_ = std::make_unique<LineageGraph>(*p->store_);
  p->data_ = std::make_unique<DataAdmin>(*p->store_, *p->lineage_, p->clock_);
  p->trainer_ = std::make_unique<Trainer>(*p->store_, *p->lineage_, *p->data_, p->clock_);
  p->alerts_ = std::make_unique<AlertBook>(*p->store_, p->clock_);
  p->drift_ = std::make_unique<DriftMonitor>(*p->store_, *p->data_, *p->alerts_, p->clock_);
  p->models_ = std::make_unique<ModelManager>(*p->store_, *p->lineage_, *p->data_, *p->trainer_,
                                              *p->drift_, p->clock_);
  p->observer_ = std::make_unique<Observer>(*p->store_, *p->lineage_, *p->data_, *p->trainer_,
                                            *p->models_, *p->drift_, *p->alerts_, p->clock_,
                                            config.observe_config());
  p->feedback_ = std::make_unique<FeedbackService>(*p->store_, *p->lineage_, *p->data_,
                                                   *p->trainer_, *p->models_, *p->observer_,
                                                   p->clock_);
  const auto& history = p->store_->log("lifecycle").records();
  if (!history.empty()) {
    const std::string code = Json::parse(history.back()).at("phase").get<std::string>();
    for (const auto& info : kPhases) {
      if (info.code == code) p->phase_ = info.phase;
    }
  }
  return p;
}

Platform::~Platform() {
  stop_monitor();
  try {
    flush();
  } catch (...) {
  }
  if (lock_fd_ >= 0) ::close(lock_fd_);
}

InferResult Platform::infer(const Id& deployment_id, const Vector& payload, std::string request_key) {
  InferResult r = models_->infer(deployment_id, payload, std::move(request_key));
  note("infer");
  if (r.explanation) note("output_explanation");
  if (observer_->after_inference(deployment_id)) note("evaluate_drift");
  return r;
}

void Platform::note(std::string_view operation) {
  const auto phase = phase_of_operation(operation);
  if (!phase || phase == phase_) return;
  const bool expected = !phase_ || phase_transition_allowed(*phase_, *phase);
  store_->log("lifecycle").append(canonical(Json{{"phase", std::string(phase_info(*phase).code)},
                                                 {"operation", std::string(operation)},
                                                 {"from", phase_ ? Json(std::string(phase_info(*phase_).code)) : Json()},
                                                 {"expected_transition", expected},
                                                 {"at", clock_()}}));
  phase_ = phase;
}

Json Platform::health() {
  Json components = Json::object();
  components["store"] = Json{{"status", "ok"},
                             {"root", store_->root().string()},
                             {"schema_version", store_->manifest()["schema_version"]},
                             {"hash_algorithm", store_->manifest()["hash_algorithm"]}};
  const bool acyclic = LineageGraph::is_acyclic(lineage_->edges());
  components["lineage"] = Json{{"status", acyclic ? "ok" : "error"}, {"edges", lineage_->edges().size()}};
  components["data"] = Json{{"status", "ok"},
                            {"samples", data_->list_samples().size()},
                            {"datasets", data_->list_datasets().size()}};
  components["training"] = Json{{"status", "ok"}, {"runs", trainer_->list_runs().size()}};
  components["registry"] = Json{{"status", "ok"},
                                {"models", models_->registry().size()},
                                {"explainers", models_->list_explainers().size()}};
  const auto& recovery = store_->log("inference").recovery();
  components["serving"] = Json{{"status", "ok"},
                               {"deployments", models_->list_deployments().size()},
                               {"inference_records", models_->record_count()},
                               {"recovered_records", recovery.valid_records},
                               {"truncated_bytes", recovery.truncated_bytes}};
  {
    std::lock_guard g(monitor_mutex_);
    components["monitor"] = Json{{"status", last_monitor_error_.empty() ? "ok" : "degraded"},
                                 {"running", monitor_running()},
                                 {"passes", monitor_passes_.load()},
                                 {"last_error", last_monitor_error_}};
  }
  bool ok = acyclic;
  return Json{{"status", ok ? "ok" : "error"},
              {"components", components},
              {"phase", phase_ ? Json(std::string(phase_info(*phase_).code)) : Json()}};
}

void Platform::start_monitor() {
  if (monitor_thread_.joinable()) return;
  monitor_stop_ = false;
  const auto cadence = std::chrono::duration<double>(config_.monitoring_cadence_seconds);
  monitor_thread_ = std::thread([this, cadence] {
    std::unique_lock wait_lock(monitor_mutex_);
    while (!monitor_cv_.wait_for(wait_lock, cadence, [this] { return monitor_stop_; })) {
      wait_lock.unlock();
      std::string error;
      try {
        auto g = lock();
        observer_->monitor_pass();
      } catch (const std::exception& e) {
        error = e.what();
        std::cerr << "monitor pass failed: " << e.what() << "\n";
      }
      wait_lock.lock();
      last_monitor_error_ = error;
      ++monitor_passes_;
    }
  });
}

void Platform::stop_monitor() {
  {
    std::lock_guard g(monitor_mutex_);
    monitor_stop_ = true;
  }
  monitor_cv_.notify_all();
  if (monitor_thread_.joinable()) monitor_thread_.join();
}

void Platform::flush() {
  if (!store_) return;  // open() failed before the store came up
  store_->log("inference").flush();
  store_->log("lineage").flush();
  store_->log("lifecycle").flush();
}

}  // namespace xmlops
