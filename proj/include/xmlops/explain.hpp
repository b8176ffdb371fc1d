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

#include <functional>
#include <optional>
#include <span>
#include <string>

#include "xmlops/matrix.hpp"
#include "xmlops/models.hpp"
#include "xmlops/types.hpp"

namespace xmlops {

// w_j (x_j - baseline_j) on the pre-link score. Linear and logistic only.
Vector linear_exact(const Predictor& model, std::span<const double> x,
                    std::span<const double> baseline);

struct PermutationImportance {
  Vector importance;  // larger = more important
  double baseline_metric = 0.0;
};

PermutationImportance permutation_importance(const Predictor& model, const FeatureMatrix& x,
                                             std::span<const double> y,
                                             const std::string& metric, std::uint64_t seed,
                                             int repeats = 5);

struct SurrogateConfig {
  int n_perturbations = 500;
  std::optional<double> kernel_width;  // default 0.75 * sqrt(d)
  double sigma = 0.3;
  std::uint64_t seed = 0;
};

// Kernel-weighted ridge (lambda 1e-6, free intercept) fitted to model scores
// on Gaussian perturbations around x.
SurrogateFit local_surrogate(const Predictor& model, std::span<const double> x,
                             const SurrogateConfig& config);

struct CounterfactualConfig {
  double step = 0.05;
  int max_iters = 10'000;
};

// Greedy coordinate search for predict(cf) == target_class, then a per
// coordinate back-search toward x. found=false when the cap is reached.
CounterfactualResult counterfactual(const Predictor& model, std::span<const double> x,
                                    int target_class, const CounterfactualConfig& config);

using AttributionFn = std::function<Vector(std::span<const double>)>;

struct QualityConfig {
  int perturbations = 20;
  double sigma = 0.05;
  std::uint64_t seed = 0;
};

double completeness_score(std::span<const double> attributions, double f_x, double f_baseline);
// 1 / (1 + max ratio) over seeded perturbations; zero-distance pairs skipped.
double stability_score(const AttributionFn& attribute, std::span<const double> x,
                       std::span<const double> attributions, const QualityConfig& config);
// Share of total |attr| held by the top ceil(d/4) features; 1 when all zero.
double relevance_score(std::span<const double> attributions);

// Method dispatch for a registered explainer. `data` and `labels` are the
// reference set for permutation importance.
struct ExplainInputs {
  const FeatureMatrix* data = nullptr;
  const Vector* labels = nullptr;
};

struct ComputedExplanation {
  Vector attributions;
  std::optional<SurrogateFit> surrogate;
  std::optional<CounterfactualResult> counterfactual;
  ExplanationQuality quality;
};

// Validates an explainer config for its method and fills defaults.
Json normalize_explainer_config(ExplainMethod method, const Json& config);

ComputedExplanation compute_explanation(const ExplainerVersion& explainer,
                                        const Predictor& model, std::span<const double> x,
                                        std::span<const double> baseline,
                                        const ExplainInputs& inputs = {});

}  // namespace xmlops
