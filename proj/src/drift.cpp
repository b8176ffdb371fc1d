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

#include "xmlops/drift.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "xmlops/kernels.hpp"

namespace xmlops {
namespace {

constexpr std::string_view kBaseline = "drift_baseline";
constexpr std::string_view kReport = "drift_report";

void check_window(const DriftBaseline& baseline, const FeatureMatrix& window) {
  if (window.empty()) throw_validation("drift window is empty");
  if (window.cols() != baseline.features.size()) {
    throw_validation("dimension mismatch: window has " + std::to_string(window.cols()) +
                     " features, baseline has " +
                     std::to_string(baseline.features.size()));
  }
}

}  // namespace

void to_json(Json& j, const FeatureBaseline& f) {
  j = Json{{"inner_edges", f.inner_edges},
           {"probabilities", f.probabilities},
           {"sorted_values", f.sorted_values},
           {"degenerate", f.degenerate}};
}
void from_json(const Json& j, FeatureBaseline& f) {
  f.inner_edges = j.at("inner_edges").get<Vector>();
  f.probabilities = j.at("probabilities").get<Vector>();
  f.sorted_values = j.at("sorted_values").get<Vector>();
  f.degenerate = j.value("degenerate", false);
}
void to_json(Json& j, const DriftBaseline& b) {
  j = Json{{"baseline_id", b.baseline_id}, {"dataset", b.dataset}, {"features", b.features}};
}
void from_json(const Json& j, DriftBaseline& b) {
  b.baseline_id = j.at("baseline_id").get<std::string>();
  b.dataset = j.at("dataset").get<std::string>();
  b.features = j.at("features").get<std::vector<FeatureBaseline>>();
}
void to_json(Json& j, const DriftThresholds& t) {
  j = Json{{"psi_alert", t.psi_alert}, {"ks_alert", t.ks_alert}};
}
void from_json(const Json& j, DriftThresholds& t) {
  t.psi_alert = j.value("psi_alert", 0.2);
  t.ks_alert = j.value("ks_alert", 0.3);
}
void to_json(Json& j, const DriftReport& r) {
  Json features = Json::array();
  for (const auto& f : r.features) {
    features.push_back(Json{{"psi", f.psi}, {"ks_statistic", f.ks_statistic}});
  }
  j = Json{{"baseline", r.baseline},
           {"deployment", r.deployment ? Json(*r.deployment) : Json()},
           {"features", features},
           {"window", Json{{"start", r.window_start ? Json(*r.window_start) : Json()},
                           {"end", r.window_end ? Json(*r.window_end) : Json()},
                           {"size", r.window_size}}},
           {"thresholds", r.thresholds},
           {"epsilon", r.epsilon},
           {"verdict", std::string(enum_name(r.verdict))}};
}
void from_json(const Json& j, DriftReport& r) {
  r.baseline = j.at("baseline").get<std::string>();
  r.deployment.reset();
  if (!j.at("deployment").is_null()) r.deployment = j["deployment"].get<std::string>();
  r.features.clear();
  for (const auto& f : j.at("features")) {
    r.features.push_back({f.at("psi").get<double>(), f.at("ks_statistic").get<double>()});
  }
  const Json& w = j.at("window");
  r.window_start.reset();
  r.window_end.reset();
  if (!w.at("start").is_null()) r.window_start = w["start"].get<Timestamp>();
  if (!w.at("end").is_null()) r.window_end = w["end"].get<Timestamp>();
  r.window_size = w.at("size").get<std::size_t>();
  r.thresholds = j.at("thresholds").get<DriftThresholds>();
  r.epsilon = j.at("epsilon").get<double>();
  r.verdict = parse_enum<DriftVerdict>(j.at("verdict").get<std::string>());
}

FeatureBaseline fit_feature_baseline(std::span<const double> values) {
  FeatureBaseline out;
  out.sorted_values.assign(values.begin(), values.end());
  std::sort(out.sorted_values.begin(), out.sorted_values.end());
  const auto& s = out.sorted_values;
  const std::size_t n = s.size();
  if (s.front() == s.back()) {
    out.degenerate = true;
    out.probabilities = {1.0};
    return out;
  }
  for (int k = 1; k < kDriftBins; ++k) {
    // ceil(k n / 10) in integers.
    const std::size_t rank = (static_cast<std::size_t>(k) * n + kDriftBins - 1) / kDriftBins;
    const double edge = s[rank - 1];
    if (out.inner_edges.empty() || edge > out.inner_edges.back()) {
      out.inner_edges.push_back(edge);
    }
  }
  const auto counts = kernels::histogram_counts(out.inner_edges, s);
  for (std::size_t c : counts) {
    out.probabilities.push_back(static_cast<double>(c) / static_cast<double>(n));
  }
  return out;
}

DriftBaseline fit_baseline(const FeatureMatrix& rows, const Id& dataset) {
  if (rows.rows() < kMinBaselineSamples) {
    throw_precondition("drift baseline needs at least " +
                       std::to_string(kMinBaselineSamples) + " samples, dataset has " +
                       std::to_string(rows.rows()));
  }
  DriftBaseline baseline;
  baseline.dataset = dataset;
  for (std::size_t j = 0; j < rows.cols(); ++j) {
    const Vector column = rows.column(j);
    baseline.features.push_back(fit_feature_baseline(column));
  }
  Json content = baseline;
  content.erase("baseline_id");
  baseline.baseline_id = content_id(content);
  return baseline;
}

Vector window_probabilities(const FeatureBaseline& baseline, std::span<const double> values) {
  const auto counts = kernels::histogram_counts(baseline.inner_edges, values);
  Vector q;
  for (std::size_t c : counts) {
    q.push_back(static_cast<double>(c) / static_cast<double>(values.size()));
  }
  return q;
}

double psi_from_probabilities(std::span<const double> p, std::span<const double> q,
                              double epsilon) {
  if (p.size() != q.size()) throw_validation("histogram sizes differ");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double a = std::max(p[i], epsilon);
    const double b = std::max(q[i], epsilon);
    sum += (a - b) * std::log(a / b);
  }
  return sum;
}

Vector psi(const DriftBaseline& baseline, const FeatureMatrix& window) {
  check_window(baseline, window);
  Vector out;
  for (std::size_t j = 0; j < window.cols(); ++j) {
    const Vector column = window.column(j);
    const FeatureBaseline& f = baseline.features[j];
    out.push_back(psi_from_probabilities(f.probabilities, window_probabilities(f, column)));
  }
  return out;
}

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw_validation("KS statistic needs non-empty samples");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, k = 0;
  double d = 0.0;
  while (i < a.size() && k < b.size()) {
    const double x = std::min(a[i], b[k]);
    while (i < a.size() && a[i] <= x) ++i;
    while (k < b.size() && b[k] <= x) ++k;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(k) / nb));
  }
  return d;
}

Vector ks_statistic(const DriftBaseline& baseline, const FeatureMatrix& window) {
  check_window(baseline, window);
  Vector out;
  for (std::size_t j = 0; j < window.cols(); ++j) {
    Vector column = window.column(j);
    std::sort(column.begin(), column.end());
    out.push_back(ks_two_sample(baseline.features[j].sorted_values, column));
  }
  return out;
}

DriftReport evaluate_drift(const DriftBaseline& baseline, const FeatureMatrix& window,
                           const DriftThresholds& thresholds) {
  const Vector p = psi(baseline, window);
  const Vector d = ks_statistic(baseline, window);
  DriftReport report;
  report.baseline = baseline.baseline_id;
  report.window_size = window.rows();
  report.thresholds = thresholds;
  for (std::size_t j = 0; j < p.size(); ++j) {
    report.features.push_back({p[j], d[j]});
    if (p[j] > thresholds.psi_alert || d[j] > thresholds.ks_alert) {
      report.verdict = DriftVerdict::kDrifting;
    }
  }
  return report;
}

DriftMonitor::DriftMonitor(Store& store, DataAdmin& data, AlertBook& alerts, Clock clock)
    : store_(store), data_(data), alerts_(alerts), clock_(std::move(clock)) {}

DriftBaseline DriftMonitor::fit_baseline(const Id& dataset_id) {
  const DatasetVersion dataset = data_.get_dataset(dataset_id);
  if (!dataset.sealed) {
    throw_precondition("dataset " + dataset_id + " must be sealed before fitting a baseline");
  }
  DriftBaseline baseline =
      xmlops::fit_baseline(data_.materialize(dataset.members), dataset_id);
  if (!store_.has_meta(kBaseline, baseline.baseline_id)) {
    store_.put_meta(kBaseline, baseline.baseline_id, Json(baseline));
  }
  return baseline;
}

DriftBaseline DriftMonitor::get_baseline(const Id& baseline_id) const {
  auto meta = store_.get_meta(kBaseline, baseline_id);
  if (!meta) throw_not_found("drift baseline", baseline_id);
  return meta->get<DriftBaseline>();
}

DriftReport DriftMonitor::evaluate(const Id& baseline_id, const FeatureMatrix& window,
                                   const DriftThresholds& thresholds,
                                   const std::optional<Id>& deployment,
                                   std::optional<Timestamp> window_start,
                                   std::optional<Timestamp> window_end) {
  DriftReport report = evaluate_drift(get_baseline(baseline_id), window, thresholds);
  report.deployment = deployment;
  report.window_start = window_start;
  report.window_end = window_end;
  const std::string key = deployment ? *deployment : baseline_id;
  store_.put_meta(kReport, key, Json(report));
  if (report.verdict == DriftVerdict::kDrifting) {
    std::size_t worst = 0;
    double worst_psi = -1.0;
    for (std::size_t j = 0; j < report.features.size(); ++j) {
      if (report.features[j].psi > worst_psi) {
        worst_psi = report.features[j].psi;
        worst = j;
      }
    }
    std::ostringstream msg;
    msg << "data drift on feature " << worst << ": psi " << report.features[worst].psi
        << ", ks " << report.features[worst].ks_statistic;
    alerts_.raise(AlertSource::kDataDrift, key, "psi", worst_psi, thresholds.psi_alert,
                  msg.str());
  }
  return report;
}

std::optional<DriftReport> DriftMonitor::latest_report(const Id& deployment_id) const {
  auto meta = store_.get_meta(kReport, deployment_id);
  if (!meta) return std::nullopt;
  return meta->get<DriftReport>();
}

}  // namespace xmlops
