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

#pragma once

#include <atomic>
#include <condition_variable>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "xmlops/feedback.hpp"
#include "xmlops/lifecycle.hpp"
#include "xmlops/observe.hpp"
#include "xmlops/serving.hpp"

namespace xmlops {

struct Config {
  std::filesystem::path store_path = "xmlops-store";
  std::string http_bind = "127.0.0.1:8080";
  DriftThresholds drift;
  std::size_t drift_window = 200;
  std::size_t drift_every = 50;
  double monitoring_cadence_seconds = 30.0;
  DegradationConfig degradation;
  double explainer_alert_floor = 0.5;
  bool retrain_on_drift = false;
  std::size_t new_annotation_threshold = 0;
  bool fsync_appends = true;
  bool monitor_enabled = true;

  // Throws validation on non-positive thresholds or malformed fields.
  void validate() const;
  ObserveConfig observe_config() const;
};

void to_json(Json& j, const Config& c);
Config config_from_json(const Json& j);
Config load_config(const std::filesystem::path& path);
// Explicit path, else $XMLOPS_CONFIG, else defaults.
Config resolve_config(const std::optional<std::filesystem::path>& explicit_path);

// Every component over one store. All public operations serialize on one
// mutex (the single-writer contract); hold lock() around component calls.
class Platform {
 public:
  static std::unique_ptr<Platform> open(const Config& config, Clock clock = system_clock());
  ~Platform();

  std::unique_lock<std::mutex> lock() { return std::unique_lock<std::mutex>(mutex_); }

  const Config& config() const { return config_; }
  Store& store() { return *store_; }
  LineageGraph& lineage() { return *lineage_; }
  DataAdmin& data() { return *data_; }
  Trainer& trainer() { return *trainer_; }
  AlertBook& alerts() { return *alerts_; }
  DriftMonitor& drift() { return *drift_; }
  ModelManager& models() { return *models_; }
  Observer& observer() { return *observer_; }
  FeedbackService& feedback() { return *feedback_; }

  // infer() plus the drift cadence hook; caller holds the lock.
  InferResult infer(const Id& deployment_id, const Vector& payload, std::string request_key);

  // Lifecycle bookkeeping: records the phase of an operation.
  void note(std::string_view operation);
  std::optional<Phase> current_phase() const { return phase_; }

  Json health();

  void start_monitor();
  void stop_monitor();
  bool monitor_running() const { return monitor_thread_.joinable(); }
  // Flushes logs; called on graceful shutdown.
  void flush();

 private:
  Platform(Config config, Clock clock);

  Config config_;
  Clock clock_;
  int lock_fd_ = -1;
  std::mutex mutex_;
  std::unique_ptr<Store> store_;
  std::unique_ptr<LineageGraph> lineage_;
  std::unique_ptr<DataAdmin> data_;
  std::unique_ptr<Trainer> trainer_;
  std::unique_ptr<AlertBook> alerts_;
  std::unique_ptr<DriftMonitor> drift_;
  std::unique_ptr<ModelManager> models_;
  std::unique_ptr<Observer> observer_;
  std::unique_ptr<FeedbackService> feedback_;
  std::optional<Phase> phase_;

  std::thread monitor_thread_;
  std::mutex monitor_mutex_;
  std::condition_variable monitor_cv_;
  bool monitor_stop_ = false;
  std::atomic<std::uint64_t> monitor_passes_{0};
  std::string last_monitor_error_;
};

}  // namespace xmlops
