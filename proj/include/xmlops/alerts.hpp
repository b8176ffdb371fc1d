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

#include <cstdint>
#include <optional>
#include <vector>

#include "xmlops/store.hpp"
#include "xmlops/types.hpp"

namespace xmlops {

// Identical (source, deployment, metric) alerts raised within this window of
// the first occurrence coalesce into one record.
inline constexpr std::int64_t kAlertCoalesceMicros = 10LL * 60 * 1'000'000;

class AlertBook {
 public:
  AlertBook(Store& store, Clock clock);

  // Persists a new alert or bumps an open one; returns the stored record and
  // whether it is new.
  std::pair<Alert, bool> raise(AlertSource source, const Id& deployment_id,
                               std::string metric, double value, double threshold,
                               std::string message);
  std::vector<Alert> list(std::optional<Id> deployment_id = std::nullopt) const;

 private:
  Store& store_;
  Clock clock_;
};

}  // namespace xmlops
