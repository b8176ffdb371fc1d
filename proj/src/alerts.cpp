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

#include "xmlops/alerts.hpp"

#include <algorithm>

namespace xmlops {
namespace {
constexpr std::string_view kAlert = "alert";
}

AlertBook::AlertBook(Store& store, Clock clock) : store_(store), clock_(std::move(clock)) {}

std::pair<Alert, bool> AlertBook::raise(AlertSource source, const Id& deployment_id,
                                        std::string metric, double value,
                                        double threshold, std::string message) {
  const Timestamp now = clock_();
  for (Alert& open : list(deployment_id)) {
    if (open.source != source || open.metric != metric) continue;
    if (now.utc_micros() - open.raised_at.utc_micros() > kAlertCoalesceMicros) continue;
    open.occurrences += 1;
    open.last_seen = now;
    open.value = value;
    open.message = std::move(message);
    store_.put_meta(kAlert, open.alert_id, Json(open));
    return {open, false};
  }
  Alert alert;
  alert.source = source;
  alert.deployment_id = deployment_id;
  alert.metric = std::move(metric);
  alert.value = value;
  alert.threshold = threshold;
  alert.message = std::move(message);
  alert.raised_at = now;
  alert.last_seen = now;
  alert.alert_id = content_id(Json{{"source", std::string(enum_name(source))},
                                   {"deployment", deployment_id},
                                   {"metric", alert.metric},
                                   {"raised_at", now}});
  store_.put_meta(kAlert, alert.alert_id, Json(alert));
  return {alert, true};
}

std::vector<Alert> AlertBook::list(std::optional<Id> deployment_id) const {
  std::vector<Alert> out;
  for (const Id& id : store_.list_meta(kAlert)) {
    Alert a = store_.get_meta(kAlert, id)->get<Alert>();
    if (deployment_id && a.deployment_id != *deployment_id) continue;
    out.push_back(std::move(a));
  }
  std::sort(out.begin(), out.end(), [](const Alert& a, const Alert& b) {
    return a.raised_at.utc_micros() > b.raised_at.utc_micros();
  });
  return out;
}

}  // namespace xmlops
