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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "xmlops/matrix.hpp"
#include "xmlops/types.hpp"

namespace xmlops {

// Pluggable model interface. score() is the regression value, or P(y = 1)
// for binary classifiers. Implementations are immutable and thread-safe.
class Predictor {
 public:
  virtual ~Predictor() = default;

  virtual Architecture architecture() const = 0;
  virtual Task task() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual double score(std::span<const double> x) const = 0;
  // Serialized artifact; load_predictor() inverts it.
  virtual Json artifact() const = 0;

  bool is_classifier() const { return task() == Task::kBinaryClassification; }

  // Class decision at P >= 0.5 for classifiers; value is the class index.
  PredictionOutput predict(std::span<const double> x) const;
  // predict().value; the quantity metrics compare against labels.
  double decision(std::span<const double> x) const;

 protected:
  void check_dimension(std::span<const double> x) const;
};

inline constexpr const char* kLinearArchitectureVersion = "1.0.0";
inline constexpr const char* kKnnArchitectureVersion = "1.0.0";

// Linear regression (identity link) or logistic regression (sigmoid link).
class LinearModel final : public Predictor {
 public:
  LinearModel(Architecture architecture, Vector weights, double bias);

  Architecture architecture() const override { return architecture_; }
  Task task() const override;
  std::size_t dimension() const override { return weights_.size(); }
  double score(std::span<const double> x) const override;
  Json artifact() const override;

  // Pre-link score w.x + b (the logit for logistic regression).
  double linear_score(std::span<const double> x) const;
  const Vector& weights() const { return weights_; }
  double bias() const { return bias_; }

 private:
  Architecture architecture_;
  Vector weights_;
  double bias_;
};

// Lazy nearest-neighbour model over a stored training set. Classification
// scores are the fraction of positive neighbours; regression is the mean
// neighbour label. Ties at the k-th distance are broken by training order.
class KnnModel final : public Predictor {
 public:
  KnnModel(FeatureMatrix points, Vector labels, int k, Task task,
           std::vector<Id> reference_ids = {});

  Architecture architecture() const override { return Architecture::kKnn; }
  Task task() const override { return task_; }
  std::size_t dimension() const override { return points_.cols(); }
  double score(std::span<const double> x) const override;
  Json artifact() const override;

  int k() const { return k_; }

 private:
  FeatureMatrix points_;
  Vector labels_;
  int k_;
  Task task_;
  std::vector<Id> reference_ids_;
};

std::unique_ptr<Predictor> load_predictor(const Json& artifact);

double sigmoid(double z);

struct LogisticObjective {
  double loss = 0.0;  // mean log-loss + (l2 / 2) * |w|^2
  Vector grad_weights;
  double grad_bias = 0.0;
};

LogisticObjective logistic_objective(const FeatureMatrix& x,
                                     std::span<const double> y,
                                     std::span<const double> weights, double bias,
                                     double l2);

// Closed-form ridge least squares; the intercept is not penalized. Throws a
// precondition error when the normal matrix is singular.
LinearModel fit_linear_regression(const FeatureMatrix& x, std::span<const double> y,
                                  double ridge);

struct LogisticParams {
  double learning_rate = 0.1;
  int epochs = 500;
  double l2 = 0.0;
};

// Full-batch gradient descent from a seeded N(0, 0.01^2) initial state.
LinearModel fit_logistic_regression(const FeatureMatrix& x, std::span<const double> y,
                                    const LogisticParams& params,
                                    std::uint64_t init_seed);

}  // namespace xmlops
