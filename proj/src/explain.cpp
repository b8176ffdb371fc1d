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

#include "xmlops/explain.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "xmlops/kernels.hpp"
#include "xmlops/metrics.hpp"
#include "xmlops/random.hpp"

namespace xmlops {
namespace {

constexpr double kSurrogateRidge = 1e-6;
constexpr double kCompletenessEps = 1e-12;

const LinearModel& as_linear(const Predictor& model) {
  const auto* linear = dynamic_cast<const LinearModel*>(&model);
  if (!linear) {
    throw_validation("linear_exact requires a linear_regression or logistic_regression model, got " +
                     std::string(enum_name(model.architecture())));
  }
  return *linear;
}

void check_finite(std::span<const double> x, std::size_t d) {
  if (x.size() != d) {
    throw_validation("dimension mismatch: input has " + std::to_string(x.size()) +
                     " features, model expects " + std::to_string(d));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw_validation("explanation input must be finite");
  }
}

double target_probability(const Predictor& model, std::span<const double> v, int target) {
  const double p = model.score(v);
  return target == 1 ? p : 1.0 - p;
}

int predicted_class(const Predictor& model, std::span<const double> v) {
  return model.predict(v).predicted_class.value_or(0);
}

double num(const Json& c, const char* key, double fallback) {
  auto it = c.find(key);
  if (it == c.end() || it->is_null()) return fallback;
  if (!it->is_number()) throw_validation(std::string("explainer config '") + key + "' must be numeric");
  return it->get<double>();
}

}  // namespace

Vector linear_exact(const Predictor& model, std::span<const double> x,
                    std::span<const double> baseline) {
  const LinearModel& linear = as_linear(model);
  check_finite(x, linear.dimension());
  check_finite(baseline, linear.dimension());
  Vector out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    out[j] = linear.weights()[j] * (x[j] - baseline[j]);
  }
  return out;
}

PermutationImportance permutation_importance(const Predictor& model, const FeatureMatrix& x,
                                             std::span<const double> y,
                                             const std::string& metric, std::uint64_t seed,
                                             int repeats) {
  if (metric_task(metric) != model.task()) {
    throw_validation("metric '" + metric + "' does not apply to a " +
                     std::string(enum_name(model.task())) + " model");
  }
  if (repeats < 1) throw_validation("repeats must be >= 1");
  if (x.empty()) throw_validation("permutation importance needs a non-empty dataset");
  if (x.cols() != model.dimension()) throw_validation("dataset dimension does not match the model");
  const kernels::ScoreFn score = [&](std::span<const double> row) { return model.decision(row); };
  const kernels::MetricFn fn = [&](std::span<const double> p, std::span<const double> l) {
    return metric_scalar(metric, p, l);
  };
  const auto base_predictions = kernels::evaluate_rows(score, x);
  PermutationImportance out;
  out.baseline_metric = fn(base_predictions, y);
  const auto scores = kernels::permuted_column_scores(score, x, y, fn, seed, repeats);
  const bool lower_better = metric_direction(metric) == Direction::kLowerIsBetter;
  for (const auto& column : scores) {
    double mean = 0.0;
    for (double s : column) mean += s;
    mean /= static_cast<double>(column.size());
    out.importance.push_back(lower_better ? mean - out.baseline_metric
                                          : out.baseline_metric - mean);
  }
  return out;
}

SurrogateFit local_surrogate(const Predictor& model, std::span<const double> x,
                             const SurrogateConfig& config) {
  const std::size_t d = model.dimension();
  check_finite(x, d);
  if (config.n_perturbations < 2) throw_validation("n_perturbations must be >= 2");
  if (!(config.sigma > 0)) throw_validation("sigma must be > 0");
  const double kappa = config.kernel_width.value_or(0.75 * std::sqrt(static_cast<double>(d)));
  if (!(kappa > 0)) throw_validation("kernel_width must be > 0");
  const auto n = static_cast<std::size_t>(config.n_perturbations);

  Rng rng(config.seed);
  FeatureMatrix points(n, d);
  Vector weights(n);
  for (std::size_t i = 0; i < n; ++i) {
    double dist2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double z = config.sigma * rng.normal();
      points(i, j) = x[j] + z;
      dist2 += z * z;
    }
    weights[i] = std::exp(-dist2 / (kappa * kappa));
  }
  const Vector y = kernels::evaluate_rows(
      [&](std::span<const double> row) { return model.score(row); }, points);

  SurrogateFit fit;
  fit.weights.assign(d, 0.0);
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  if (*lo == *hi) {
    fit.intercept = *lo;
    fit.fidelity_reason = "constant_model_output";
    return fit;
  }

  // Centered design: column 0 is the intercept, the rest are x' - x.
  Eigen::MatrixXd a(n, d + 1);
  Eigen::VectorXd target(n);
  Eigen::VectorXd w(n);
  for (std::size_t i = 0; i < n; ++i) {
    a(i, 0) = 1.0;
    for (std::size_t j = 0; j < d; ++j) a(i, j + 1) = points(i, j) - x[j];
    target(i) = y[i];
    w(i) = weights[i];
  }
  Eigen::MatrixXd normal = a.transpose() * w.asDiagonal() * a;
  for (std::size_t j = 1; j <= d; ++j) normal(j, j) += kSurrogateRidge;
  const Eigen::VectorXd rhs = a.transpose() * w.asDiagonal() * target;
  const Eigen::VectorXd theta = normal.ldlt().solve(rhs);

  double intercept = theta(0);
  for (std::size_t j = 0; j < d; ++j) {
    fit.weights[j] = theta(j + 1);
    intercept -= theta(j + 1) * x[j];
  }
  fit.intercept = intercept;

  const Eigen::VectorXd fitted = a * theta;
  double wsum = 0.0, wmean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    wsum += weights[i];
    wmean += weights[i] * y[i];
  }
  wmean /= wsum;
  double sse = 0.0, sst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sse += weights[i] * (y[i] - fitted(i)) * (y[i] - fitted(i));
    sst += weights[i] * (y[i] - wmean) * (y[i] - wmean);
  }
  if (sst <= 0.0 || !std::isfinite(sst)) {
    fit.fidelity_reason = "zero_weighted_variance";
  } else {
    fit.fidelity_r2 = 1.0 - sse / sst;
  }
  return fit;
}

CounterfactualResult counterfactual(const Predictor& model, std::span<const double> x,
                                    int target_class, const CounterfactualConfig& config) {
  if (!model.is_classifier()) throw_validation("counterfactual search requires a binary classifier");
  if (target_class != 0 && target_class != 1) throw_validation("target_class must be 0 or 1");
  if (!(config.step > 0)) throw_validation("step must be > 0");
  if (config.max_iters < 1) throw_validation("max_iters must be >= 1");
  const std::size_t d = model.dimension();
  check_finite(x, d);
  if (predicted_class(model, x) == target_class) {
    throw_precondition("input is already predicted as class " + std::to_string(target_class));
  }

  Vector cur(x.begin(), x.end());
  CounterfactualResult result;
  std::size_t last_coord = 0;
  double last_sign = 1.0;
  double current_p = target_probability(model, cur, target_class);
  while (result.iterations < config.max_iters && predicted_class(model, cur) != target_class) {
    std::optional<std::pair<std::size_t, double>> best;
    double best_p = current_p;
    for (std::size_t j = 0; j < d; ++j) {
      for (double sign : {1.0, -1.0}) {
        const double saved = cur[j];
        cur[j] = saved + sign * config.step;
        const double p = target_probability(model, cur, target_class);
        cur[j] = saved;
        if (p > best_p) {
          best_p = p;
          best = {j, sign};
        }
      }
    }
    // On a plateau keep walking in the last direction.
    if (best) {
      last_coord = best->first;
      last_sign = best->second;
    }
    cur[last_coord] += last_sign * config.step;
    current_p = target_probability(model, cur, target_class);
    ++result.iterations;
  }
  if (predicted_class(model, cur) != target_class) {
    result.found = false;
    result.payload = cur;
    result.predicted_class = predicted_class(model, cur);
    for (std::size_t j = 0; j < d; ++j) result.distance_l1 += std::abs(cur[j] - x[j]);
    return result;
  }

  // Walk each coordinate back toward x while the flip holds.
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t j = 0; j < d; ++j) {
      while (cur[j] != x[j]) {
        const double delta = x[j] - cur[j];
        const double saved = cur[j];
        cur[j] = std::abs(delta) <= config.step ? x[j]
                                                : saved + (delta > 0 ? config.step : -config.step);
        if (predicted_class(model, cur) != target_class) {
          cur[j] = saved;
          break;
        }
        changed = true;
      }
    }
  }
  result.found = true;
  result.payload = cur;
  result.predicted_class = predicted_class(model, cur);
  for (std::size_t j = 0; j < d; ++j) result.distance_l1 += std::abs(cur[j] - x[j]);
  return result;
}

double completeness_score(std::span<const double> attributions, double f_x, double f_baseline) {
  const double sum = std::accumulate(attributions.begin(), attributions.end(), 0.0);
  const double delta = f_x - f_baseline;
  const double score = 1.0 - std::abs(sum - delta) / std::max(std::abs(delta), kCompletenessEps);
  return std::clamp(score, 0.0, 1.0);
}

double stability_score(const AttributionFn& attribute, std::span<const double> x,
                       std::span<const double> attributions, const QualityConfig& config) {
  Rng rng(config.seed);
  double worst = 0.0;
  Vector xp(x.size());
  for (int i = 0; i < config.perturbations; ++i) {
    double dx2 = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      xp[j] = x[j] + config.sigma * rng.normal();
      dx2 += (xp[j] - x[j]) * (xp[j] - x[j]);
    }
    if (dx2 == 0.0) continue;
    const Vector other = attribute(xp);
    double da2 = 0.0;
    for (std::size_t j = 0; j < attributions.size(); ++j) {
      da2 += (attributions[j] - other[j]) * (attributions[j] - other[j]);
    }
    worst = std::max(worst, std::sqrt(da2) / std::sqrt(dx2));
  }
  return 1.0 / (1.0 + worst);
}

double relevance_score(std::span<const double> attributions) {
  Vector mags;
  double total = 0.0;
  for (double a : attributions) {
    mags.push_back(std::abs(a));
    total += std::abs(a);
  }
  if (total == 0.0 || mags.empty()) return 1.0;
  std::sort(mags.begin(), mags.end(), std::greater<>());
  const std::size_t top = (mags.size() + 3) / 4;
  double held = 0.0;
  for (std::size_t i = 0; i < top; ++i) held += mags[i];
  return std::clamp(held / total, 0.0, 1.0);
}

Json normalize_explainer_config(ExplainMethod method, const Json& in) {
  const Json c = in.is_null() ? Json::object() : in;
  if (!c.is_object()) throw_validation("explainer config must be an object");
  Json out = Json::object();
  std::vector<std::string> allowed = {"quality_perturbations", "quality_sigma", "quality_seed"};
  out["quality_perturbations"] = static_cast<int>(num(c, "quality_perturbations", 20));
  out["quality_sigma"] = num(c, "quality_sigma", 0.05);
  out["quality_seed"] = static_cast<std::uint64_t>(num(c, "quality_seed", 0));
  if (out["quality_perturbations"].get<int>() < 1 || !(out["quality_sigma"].get<double>() > 0)) {
    throw_validation("quality_perturbations must be >= 1 and quality_sigma > 0");
  }
  switch (method) {
    case ExplainMethod::kLinearExact:
      break;
    case ExplainMethod::kPermutationImportance: {
      allowed.insert(allowed.end(), {"metric", "seed", "repeats", "dataset"});
      if (!c.contains("metric") || !c["metric"].is_string()) {
        throw_validation("permutation_importance needs a 'metric' name");
      }
      const std::string metric = c["metric"].get<std::string>();
      if (!is_known_metric(metric)) throw_validation("unknown metric '" + metric + "'");
      out["metric"] = metric;
      out["seed"] = static_cast<std::uint64_t>(num(c, "seed", 0));
      out["repeats"] = static_cast<int>(num(c, "repeats", 5));
      if (out["repeats"].get<int>() < 1) throw_validation("repeats must be >= 1");
      if (c.contains("dataset")) out["dataset"] = c["dataset"].get<std::string>();
      break;
    }
    case ExplainMethod::kLocalSurrogate: {
      allowed.insert(allowed.end(), {"n_perturbations", "kernel_width", "sigma", "seed"});
      out["n_perturbations"] = static_cast<int>(num(c, "n_perturbations", 500));
      out["sigma"] = num(c, "sigma", 0.3);
      out["seed"] = static_cast<std::uint64_t>(num(c, "seed", 0));
      if (c.contains("kernel_width") && !c["kernel_width"].is_null()) {
        out["kernel_width"] = num(c, "kernel_width", 1.0);
        if (!(out["kernel_width"].get<double>() > 0)) throw_validation("kernel_width must be > 0");
      }
      if (out["n_perturbations"].get<int>() < 2) throw_validation("n_perturbations must be >= 2");
      if (!(out["sigma"].get<double>() > 0)) throw_validation("sigma must be > 0");
      break;
    }
    case ExplainMethod::kCounterfactual: {
      allowed.insert(allowed.end(), {"step", "max_iters", "target_class"});
      out["step"] = num(c, "step", 0.05);
      out["max_iters"] = static_cast<int>(num(c, "max_iters", 10'000));
      if (!(out["step"].get<double>() > 0)) throw_validation("step must be > 0");
      if (out["max_iters"].get<int>() < 1) throw_validation("max_iters must be >= 1");
      if (c.contains("target_class") && !c["target_class"].is_null()) {
        const int t = static_cast<int>(num(c, "target_class", 1));
        if (t != 0 && t != 1) throw_validation("target_class must be 0 or 1");
        out["target_class"] = t;
      }
      break;
    }
  }
  for (const auto& [key, _] : c.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw_validation("unknown config key '" + key + "' for " + std::string(enum_name(method)));
    }
  }
  return out;
}

ComputedExplanation compute_explanation(const ExplainerVersion& explainer,
                                        const Predictor& model, std::span<const double> x,
                                        std::span<const double> baseline,
                                        const ExplainInputs& inputs) {
  const Json cfg = normalize_explainer_config(explainer.method, explainer.config);
  check_finite(x, model.dimension());
  check_finite(baseline, model.dimension());
  QualityConfig qc;
  qc.perturbations = cfg["quality_perturbations"].get<int>();
  qc.sigma = cfg["quality_sigma"].get<double>();
  qc.seed = cfg["quality_seed"].get<std::uint64_t>();

  ComputedExplanation out;
  AttributionFn attribute;
  double f_x = model.score(x);
  double f_b = model.score(baseline);
  double fidelity = 1.0;

  switch (explainer.method) {
    case ExplainMethod::kLinearExact: {
      const LinearModel& linear = as_linear(model);
      attribute = [&](std::span<const double> v) { return linear_exact(model, v, baseline); };
      f_x = linear.linear_score(x);
      f_b = linear.linear_score(baseline);
      break;
    }
    case ExplainMethod::kPermutationImportance: {
      if (!inputs.data || !inputs.labels) {
        throw_precondition("permutation_importance needs a labeled reference dataset");
      }
      const Vector importance =
          permutation_importance(model, *inputs.data, *inputs.labels, cfg["metric"].get<std::string>(),
                                 cfg["seed"].get<std::uint64_t>(), cfg["repeats"].get<int>())
              .importance;
      // Global method: the same vector for every input.
      attribute = [importance](std::span<const double>) { return importance; };
      break;
    }
    case ExplainMethod::kLocalSurrogate: {
      SurrogateConfig sc;
      sc.n_perturbations = cfg["n_perturbations"].get<int>();
      sc.sigma = cfg["sigma"].get<double>();
      sc.seed = cfg["seed"].get<std::uint64_t>();
      if (cfg.contains("kernel_width")) sc.kernel_width = cfg["kernel_width"].get<double>();
      out.surrogate = local_surrogate(model, x, sc);
      fidelity = std::clamp(out.surrogate->fidelity_r2.value_or(0.0), 0.0, 1.0);
      attribute = [&model, sc](std::span<const double> v) {
        return local_surrogate(model, v, sc).weights;
      };
      break;
    }
    case ExplainMethod::kCounterfactual: {
      CounterfactualConfig cc;
      cc.step = cfg["step"].get<double>();
      cc.max_iters = cfg["max_iters"].get<int>();
      const int current = predicted_class(model, x);
      const int target = cfg.contains("target_class") ? cfg["target_class"].get<int>() : 1 - current;
      out.counterfactual = counterfactual(model, x, target, cc);
      fidelity = out.counterfactual->found ? 1.0 : 0.0;
      attribute = [&model, cc, target](std::span<const double> v) {
        Vector diff(v.size(), 0.0);
        if (predicted_class(model, v) == target) return diff;
        const auto cf = counterfactual(model, v, target, cc);
        if (!cf.found) return diff;
        for (std::size_t j = 0; j < v.size(); ++j) diff[j] = cf.payload[j] - v[j];
        return diff;
      };
      break;
    }
  }
  if (out.counterfactual) {
    out.attributions.assign(x.size(), 0.0);
    if (out.counterfactual->found) {
      for (std::size_t j = 0; j < x.size(); ++j) {
        out.attributions[j] = out.counterfactual->payload[j] - x[j];
      }
    }
  } else if (out.surrogate) {
    out.attributions = out.surrogate->weights;
  } else {
    out.attributions = attribute(x);
  }
  out.quality.completeness = completeness_score(out.attributions, f_x, f_b);
  out.quality.stability = stability_score(attribute, x, out.attributions, qc);
  out.quality.fidelity = fidelity;
  out.quality.relevance = relevance_score(out.attributions);
  return out;
}

}  // namespace xmlops
