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

#include "doctest.h"
#include "support.hpp"
#include "xmlops/explain.hpp"

using namespace xmlops;

namespace {

LinearModel random_linear(Rng& rng, std::size_t d, Architecture a = Architecture::kLinearRegression) {
  Vector w(d);
  for (double& v : w) v = rng.normal();
  return LinearModel(a, w, rng.normal());
}

Vector random_point(Rng& rng, std::size_t d) {
  Vector x(d);
  for (double& v : x) v = 2.0 * rng.normal();
  return x;
}

ExplainerVersion explainer(ExplainMethod m, Json config = Json::object()) {
  ExplainerVersion e;
  e.explainer_id = "e";
  e.method = m;
  e.config = std::move(config);
  return e;
}

}  // namespace

TEST_CASE("linear_exact attributions sum to the score difference") {
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    const std::size_t d = 1 + rng.below(8);
    const LinearModel m = random_linear(rng, d);
    const Vector x = random_point(rng, d), b = random_point(rng, d);
    const Vector a = linear_exact(m, x, b);
    for (std::size_t j = 0; j < d; ++j) CHECK(a[j] == doctest::Approx(m.weights()[j] * (x[j] - b[j])));
    const ComputedExplanation e = compute_explanation(explainer(ExplainMethod::kLinearExact), m, x, b);
    CHECK(std::abs(e.quality.completeness - 1.0) <= 1e-9);
  }
}

TEST_CASE("linear_exact works on the logit of logistic models") {
  const LinearModel m(Architecture::kLogisticRegression, {2.0, -1.0}, 0.5);
  const Vector x{1.0, 1.0}, b{0.0, 0.0};
  const ComputedExplanation e = compute_explanation(explainer(ExplainMethod::kLinearExact), m, x, b);
  CHECK(e.attributions == Vector{2.0, -1.0});
  CHECK(e.quality.completeness == doctest::Approx(1.0));
  const KnnModel knn(FeatureMatrix::from_rows({{0.0, 0.0}}), {1.0}, 1, Task::kRegression);
  CHECK_THROWS_AS(linear_exact(knn, x, b), Error);
}

TEST_CASE("surrogate recovers a linear black box") {
  Rng rng(2);
  for (int t = 0; t < 10; ++t) {
    const LinearModel m = random_linear(rng, 4);
    const Vector x = random_point(rng, 4);
    SurrogateConfig c;
    c.seed = t;
    const SurrogateFit fit = local_surrogate(m, x, c);
    REQUIRE(fit.fidelity_r2.has_value());
    CHECK(*fit.fidelity_r2 > 0.999);
    for (std::size_t j = 0; j < 4; ++j) CHECK(fit.weights[j] == doctest::Approx(m.weights()[j]).epsilon(1e-4));
  }
}

TEST_CASE("surrogate on a constant model reports undefined fidelity") {
  const LinearModel flat(Architecture::kLinearRegression, {0.0, 0.0}, 3.0);
  const Vector x{0.0, 0.0};
  const SurrogateFit fit = local_surrogate(flat, x, {});
  CHECK_FALSE(fit.fidelity_r2.has_value());
  CHECK_FALSE(fit.fidelity_reason.empty());
  const ComputedExplanation e = compute_explanation(explainer(ExplainMethod::kLocalSurrogate), flat, x, x);
  CHECK(e.quality.fidelity == 0.0);
}

TEST_CASE("counterfactuals flip the class near the analytic boundary") {
  Rng rng(3);
  const CounterfactualConfig c;
  for (int t = 0; t < 30; ++t) {
    const LinearModel m = random_linear(rng, 3, Architecture::kLogisticRegression);
    const Vector x = random_point(rng, 3);
    const int current = static_cast<int>(m.predict(x).value);
    const CounterfactualResult r = counterfactual(m, x, 1 - current, c);
    REQUIRE(r.found);
    CHECK(static_cast<int>(m.predict(r.payload).value) == 1 - current);
    double wmax = 0;
    for (double w : m.weights()) wmax = std::max(wmax, std::abs(w));
    const double analytic = std::abs(m.linear_score(x)) / wmax;
    CHECK(r.distance_l1 >= analytic - 1e-9);
    CHECK(r.distance_l1 <= analytic + 2 * c.step);
  }
}

TEST_CASE("counterfactual search reports failure at the iteration cap") {
  const LinearModel m(Architecture::kLogisticRegression, {1.0}, -100.0);
  const Vector x{0.0};
  CounterfactualConfig c;
  c.max_iters = 10;
  const CounterfactualResult r = counterfactual(m, x, 1, c);
  CHECK_FALSE(r.found);
  CHECK(r.iterations == 10);
  CHECK_THROWS_AS(counterfactual(m, x, 0, c), Error);
  const LinearModel reg(Architecture::kLinearRegression, {1.0}, 0.0);
  CHECK_THROWS_AS(counterfactual(reg, x, 1, c), Error);
}

TEST_CASE("permutation importance ranks the used feature first") {
  const auto d = testing::linear_data(300, {3.0, 0.0}, 0.0, 0.0, 4);
  const FeatureMatrix x = FeatureMatrix::from_rows(d.x);
  const LinearModel m(Architecture::kLinearRegression, {3.0, 0.0}, 0.0);
  const PermutationImportance pi = permutation_importance(m, x, d.y, "mse", 1);
  CHECK(pi.baseline_metric == 0.0);
  CHECK(pi.importance[0] > 1.0);
  CHECK(pi.importance[1] == 0.0);
  CHECK_THROWS_AS(permutation_importance(m, x, d.y, "f1", 1), Error);
}

TEST_CASE("quality scores stay in the unit interval") {
  CHECK(completeness_score(Vector{1.0, 1.0}, 2.0, 0.0) == 1.0);
  CHECK(completeness_score(Vector{1.0}, 2.0, 0.0) == doctest::Approx(0.5));
  CHECK(completeness_score(Vector{100.0}, 1.0, 0.0) == 0.0);
  CHECK(relevance_score(Vector{0.0, 0.0}) == 1.0);
  CHECK(relevance_score(Vector{4.0, 1.0, 1.0, 2.0}) == doctest::Approx(0.5));

  const LinearModel m(Architecture::kLinearRegression, {1.0, -2.0}, 0.0);
  const Vector x{1.0, 1.0}, b{0.0, 0.0};
  const AttributionFn exact = [&](std::span<const double> v) { return linear_exact(m, v, b); };
  const double s = stability_score(exact, x, exact(x), {});
  CHECK(s > 0.0);
  CHECK(s <= 1.0);
  const AttributionFn constant = [](std::span<const double>) { return Vector{1.0, 1.0}; };
  CHECK(stability_score(constant, x, constant(x), {}) == 1.0);

  Rng rng(6);
  for (ExplainMethod method : {ExplainMethod::kLinearExact, ExplainMethod::kLocalSurrogate,
                               ExplainMethod::kCounterfactual}) {
    const LinearModel lg = random_linear(rng, 3, Architecture::kLogisticRegression);
    const Vector p = random_point(rng, 3);
    const auto q = compute_explanation(explainer(method), lg, p, Vector(3, 0.0)).quality;
    for (double v : {q.completeness, q.stability, q.fidelity, q.relevance}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("explainer configs are normalized and validated") {
  const Json c = normalize_explainer_config(ExplainMethod::kLocalSurrogate, Json::object());
  CHECK(c.at("n_perturbations") == 500);
  CHECK_THROWS_AS(normalize_explainer_config(ExplainMethod::kLinearExact, {{"bogus", 1}}), Error);
  CHECK_THROWS_AS(normalize_explainer_config(ExplainMethod::kPermutationImportance, Json::object()), Error);
  CHECK_THROWS_AS(normalize_explainer_config(ExplainMethod::kCounterfactual, {{"step", 0}}), Error);
}
