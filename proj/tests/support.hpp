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

// Shared fixtures for the unit and acceptance tests.
#pragma once

#include <stdlib.h>

#include <filesystem>
#include <string>
#include <vector>

#include "xmlops/http_api.hpp"
#include "xmlops/platform.hpp"
#include "xmlops/random.hpp"

namespace xmlops::testing {

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "xmlops-test-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Timestamp t0() { return Timestamp::parse("2026-01-01T00:00:00+00:00"); }

// 1 ms per tick keeps timestamps strictly increasing and reproducible.
inline Clock test_clock() { return stepping_clock(t0(), 1000); }

inline Config test_config(const std::filesystem::path& root) {
  Config c;
  c.store_path = root;
  c.fsync_appends = false;
  c.monitor_enabled = false;
  return c;
}

struct PlatformFixture {
  TempDir dir;
  std::unique_ptr<Platform> p;

  explicit PlatformFixture(Clock clock = test_clock()) {
    p = Platform::open(test_config(dir / "store"), std::move(clock));
  }
  explicit PlatformFixture(const Config& overrides, Clock clock = test_clock()) {
    Config c = overrides;
    c.store_path = dir / "store";
    p = Platform::open(c, std::move(clock));
  }
  Platform& operator*() { return *p; }
  Platform* operator->() { return p.get(); }

  Id ingest(const Vector& x, std::optional<double> label = std::nullopt,
            const std::string& equipment = "press-1") {
    IngestRequest r;
    for (double v : x) r.payload.push_back(v);
    r.provenance.equipment_id = equipment;
    r.provenance.location = "hall-a";
    r.captured_at = "2026-01-01T00:00:00+01:00";
    r.label = label;
    return p->data().ingest_sample(r).sample_id;
  }

  Id sealed_dataset(const std::vector<Id>& members) {
    const DatasetVersion d = p->data().define_dataset(members);
    return p->data().seal_dataset(d.dataset_id).dataset_id;
  }

  ApiResponse call(const std::string& method, const std::string& path, const Json& body = Json(),
                   std::map<std::string, std::string> query = {}) {
    ApiRequest req;
    req.method = method;
    req.path = path;
    req.query = std::move(query);
    if (!body.is_null()) req.body = body.dump();
    return handle_request(*p, req);
  }
};

// y = w.x + b + noise on N(0,1) features.
struct LinearData {
  std::vector<Vector> x;
  Vector y;
};

inline LinearData linear_data(std::size_t n, const Vector& w, double b, double noise, std::uint64_t seed,
                              double shift = 0.0) {
  Rng rng(seed);
  LinearData d;
  for (std::size_t i = 0; i < n; ++i) {
    Vector row(w.size());
    double y = b;
    for (std::size_t j = 0; j < w.size(); ++j) {
      row[j] = rng.normal() + shift;
      y += w[j] * row[j];
    }
    d.x.push_back(row);
    d.y.push_back(y + noise * rng.normal());
  }
  return d;
}

// Two classes separated along feature 0.
inline LinearData blob_data(std::size_t n, std::size_t dim, double separation, std::uint64_t seed) {
  Rng rng(seed);
  LinearData d;
  for (std::size_t i = 0; i < n; ++i) {
    const double label = static_cast<double>(i % 2);
    Vector row(dim);
    for (std::size_t j = 0; j < dim; ++j) row[j] = 0.5 * rng.normal();
    row[0] += label == 1.0 ? separation : -separation;
    d.x.push_back(row);
    d.y.push_back(label);
  }
  return d;
}

inline std::vector<Id> ingest_all(PlatformFixture& f, const LinearData& d) {
  std::vector<Id> ids;
  for (std::size_t i = 0; i < d.x.size(); ++i) ids.push_back(f.ingest(d.x[i], d.y[i]));
  return ids;
}

struct TrainedPair {
  Id dataset;
  Id a;  // plain least squares
  Id b;  // ridge 1.0
};

// Two registered linear models on one sealed dataset of y = 2 x0 - x1 + 0.5.
inline TrainedPair trained_pair(PlatformFixture& f, std::size_t n = 60, std::uint64_t seed = 1) {
  TrainedPair out;
  out.dataset = f.sealed_dataset(ingest_all(f, linear_data(n, {2.0, -1.0}, 0.5, 0.1, seed)));
  TrainRequest req;
  req.dataset = out.dataset;
  out.a = f->trainer().train(req).model.model_id;
  req.hyperparams = {{"ridge", 1.0}};
  out.b = f->trainer().train(req).model.model_id;
  f->models().register_model(out.a);
  f->models().register_model(out.b);
  return out;
}

inline Deployment deploy(PlatformFixture& f, Scheme scheme, const Id& primary,
                         std::optional<Id> secondary = std::nullopt,
                         std::optional<double> fraction = std::nullopt, std::string endpoint = "default") {
  DeploymentRequest r;
  r.endpoint = std::move(endpoint);
  r.scheme = scheme;
  r.primary_model = primary;
  r.secondary_model = std::move(secondary);
  r.traffic_fraction = fraction;
  r.routing_seed = 1234;
  return f->models().create_deployment(r);
}

}  // namespace xmlops::testing
