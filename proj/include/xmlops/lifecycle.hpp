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

#include <optional>
#include <string_view>
#include <vector>

namespace xmlops {

// Development (D1-D5) and production (P1-P7) phases of the life cycle the
// platform walks. Operations are tagged with the phase they realize.
enum class Phase { kD1, kD2, kD3, kD4, kD5, kP1, kP2, kP3, kP4, kP5, kP6, kP7 };

struct PhaseInfo {
  Phase phase;
  std::string_view code;
  std::string_view title;
};

inline constexpr PhaseInfo kPhases[] = {
    {Phase::kD1, "D1", "Requirement Identification"},
    {Phase::kD2, "D2", "Data Collection"},
    {Phase::kD3, "D3", "Explanatory Modeling"},
    {Phase::kD4, "D4", "Statistical Validation"},
    {Phase::kD5, "D5", "Explanation-based Review"},
    {Phase::kP1, "P1", "Deploy"},
    {Phase::kP2, "P2", "Load Live Data"},
    {Phase::kP3, "P3", "Prepare Live Data"},
    {Phase::kP4, "P4", "Output Explanations"},
    {Phase::kP5, "P5", "Record model output, user and system response"},
    {Phase::kP6, "P6", "Incremental Explanatory Training"},
    {Phase::kP7, "P7", "Update Improved Model"},
};

inline const PhaseInfo& phase_info(Phase p) { return kPhases[static_cast<int>(p)]; }

// Forward steps, the development rework loops (validation or review sends
// work back to modeling), and the production loop back to live data.
inline bool phase_transition_allowed(Phase from, Phase to) {
  const int a = static_cast<int>(from);
  const int b = static_cast<int>(to);
  if (b == a || b == a + 1) return true;
  if ((from == Phase::kD4 || from == Phase::kD5) && to == Phase::kD3) return true;
  if (from == Phase::kD5 && to == Phase::kD2) return true;
  if (from == Phase::kP7 && (to == Phase::kP1 || to == Phase::kP2)) return true;
  if (from == Phase::kP5 && (to == Phase::kP2 || to == Phase::kP6)) return true;
  if (from == Phase::kP4 && to == Phase::kP2) return true;
  return false;
}

// Phase realized by a platform operation name; nullopt for plumbing.
inline std::optional<Phase> phase_of_operation(std::string_view op) {
  struct Entry {
    std::string_view op;
    Phase phase;
  };
  static constexpr Entry kTable[] = {
      {"ingest_sample", Phase::kD2},       {"define_dataset", Phase::kD2},
      {"seal_dataset", Phase::kD2},        {"attach_annotation", Phase::kD2},
      {"apply_recipe", Phase::kD2},        {"mark_bad", Phase::kD2},
      {"train", Phase::kD3},               {"register_explainer", Phase::kD3},
      {"compute_metrics", Phase::kD4},     {"compare_runs", Phase::kD4},
      {"explain", Phase::kD5},             {"compare_view", Phase::kD5},
      {"review_queue", Phase::kD5},        {"register_model", Phase::kP1},
      {"create_deployment", Phase::kP1},   {"infer", Phase::kP2},
      {"evaluate_drift", Phase::kP3},      {"output_explanation", Phase::kP4},
      {"record_outcome", Phase::kP5},      {"submit_feedback", Phase::kP5},
      {"check_degradation", Phase::kP5},   {"monitor_explainers", Phase::kP5},
      {"retrain", Phase::kP6},             {"promote", Phase::kP7},
  };
  for (const auto& e : kTable) {
    if (e.op == op) return e.phase;
  }
  return std::nullopt;
}

}  // namespace xmlops
