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

#include "xmlops/models.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xmlops/kernels.hpp"
#include "xmlops/random.hpp"

namespace xmlops {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void Predictor::check_dimension(std::span<const double> x) const {
  if (x.size() != dimension()) {
    throw_validation("dimension mismatch: model expects " +
                     std::to_string(dimension()) + " features, got " +
                     std::to_string(x.size()));
  }
}

PredictionOutput Predictor::predict(std::span<const double> x) const {
  const double s = score(x);
  PredictionOutput out;
  if (is_classifier()) {
    const int cls = s >= 0.5 ? 1 : 0;
    out.value = cls;
    out.predicted_class = cls;
    out.probability = s;
  } else {
    out.value = s;
  }
  return out;
}

double Predictor::decision(std::span<const double> x) const {
  return predict(x).value;
}

LinearModel::LinearModel(Architecture architecture, Vector weights, double bias)
    : architecture_(architecture), weights_(std::move(weights)), bias_(bias) {
  if (architecture_ == Architecture::kKnn) {
    throw_validation("LinearModel cannot represent knn");
  }
}

Task LinearModel::task() const {
  return architecture_ == Architecture::kLogisticRegression
             ? Task::kBinaryClassification
             : Task::kRegression;
}

double LinearModel::linear_score(std::span<const double> x) const {
  check_dimension(x);
  double s = bias_;
  for (std::size_t j = 0; j < weights_.size(); ++j) s += weights_[j] * x[j];
  return s;
}

double LinearModel::score(std::span<const double> x) const {
  const double s = linear_score(x);
  return architecture_ == Architecture::kLogisticRegression ? sigmoid(s) : s;
}

Json LinearModel::artifact() const {
  return Json{{"architecture", std::string(enum_name(architecture_))},
              {"version", kLinearArchitectureVersion},
              {"weights", weights_},
              {"bias", bias_}};
}

KnnModel::KnnModel(FeatureMatrix points, Vector labels, int k, Task task,
                   std::vector<Id> reference_ids)
    : points_(std::move(points)),
      labels_(std::move(labels)),
      k_(k),
      task_(task),
      reference_ids_(std::move(reference_ids)) {
  if (k_ < 1) throw_validation("knn needs k >= 1");
  if (points_.empty()) throw_validation("knn needs a non-empty training set");
  if (labels_.size() != points_.rows()) throw_validation("knn label count mismatch");
  if (task_ == Task::kClustering) throw_validation("knn supports regression or classification");
}

double KnnModel::score(std::span<const double> x) const {
  check_dimension(x);
  const auto dist = kernels::serial::squared_distances(x, points_);
  std::vector<std::size_t> order(dist.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(k_), order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                    order.end(), [&](std::size_t a, std::size_t b) {
                      return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
                    });
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += labels_[order[i]];
  return sum / static_cast<double>(k);
}

Json KnnModel::artifact() const {
  std::vector<std::vector<double>> rows;
  rows.reserve(points_.rows());
  for (std::size_t i = 0; i < points_.rows(); ++i) {
    rows.emplace_back(points_.row(i).begin(), points_.row(i).end());
  }
  return Json{{"architecture", "knn"},
              {"version", kKnnArchitectureVersion},
              {"k", k_},
              {"task", std::string(enum_name(task_))},
              {"points", rows},
              {"labels", labels_},
              {"reference_ids", reference_ids_}};
}

std::unique_ptr<Predictor> load_predictor(const Json& artifact) {
  const auto arch = parse_enum<Architecture>(artifact.at("architecture").get<std::string>());
  if (arch == Architecture::kKnn) {
    FeatureMatrix points =
        FeatureMatrix::from_rows(artifact.at("points").get<std::vector<std::vector<double>>>());
    return std::make_unique<KnnModel>(
        std::move(points), vector_from_json(artifact.at("labels")),
        artifact.at("k").get<int>(),
        parse_enum<Task>(artifact.at("task").get<std::string>()),
        artifact.value("reference_ids", std::vector<Id>{}));
  }
  return std::make_unique<LinearModel>(arch, vector_from_json(artifact.at("weights")),
                                       artifact.at("bias").get<double>());
}

LogisticObjective logistic_objective(const FeatureMatrix& x, std::span<const double> y,
                                     std::span<const double> weights, double bias,
                                     double l2) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  LogisticObjective out;
  out.grad_weights.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = x.row(i);
    double z = bias;
    for (std::size_t j = 0; j < d; ++j) z += weights[j] * row[j];
    // log(1 + e^z) - y z, computed without overflow.
    out.loss += std::max(z, 0.0) - z * y[i] + std::log1p(std::exp(-std::abs(z)));
    const double residual = sigmoid(z) - y[i];
    for (std::size_t j = 0; j < d; ++j) out.grad_weights[j] += residual * row[j];
    out.grad_bias += residual;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  out.loss *= inv_n;
  out.grad_bias *= inv_n;
  double norm = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    out.grad_weights[j] = out.grad_weights[j] * inv_n + l2 * weights[j];
    norm += weights[j] * weights[j];
  }
  out.loss += 0.5 * l2 * norm;
  return out;
}

LinearModel fit_linear_regression(const FeatureMatrix& x, std::span<const double> y,
                                  double ridge) {
  if (ridge < 0 || !std::isfinite(ridge)) throw_validation("ridge lambda must be >= 0");
  if (x.empty()) throw_validation("cannot fit on an empty training split");
  if (y.size() != x.rows()) throw_validation("label count mismatch");
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  // Augmented design [X | 1]; normal equations (A^T A + ridge * P) theta = A^T y
  // with P = diag(1, ..., 1, 0).
  Eigen::MatrixXd a(n, d + 1);
  Eigen::VectorXd target(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) a(i, j) = x(i, j);
    a(i, d) = 1.0;
    target(i) = y[i];
  }
  Eigen::MatrixXd normal = a.transpose() * a;
  for (std::size_t j = 0; j < d; ++j) normal(j, j) += ridge;
  const Eigen::VectorXd rhs = a.transpose() * target;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(normal);
  qr.setThreshold(1e-12);
  if (qr.rank() < static_cast<Eigen::Index>(d + 1)) {
    throw_precondition(
        "normal matrix is singular (rank " + std::to_string(qr.rank()) + " < " +
        std::to_string(d + 1) + "); use a ridge lambda > 0");
  }
  const Eigen::VectorXd theta = qr.solve(rhs);
  Vector weights(d);
  for (std::size_t j = 0; j < d; ++j) weights[j] = theta(static_cast<Eigen::Index>(j));
  const double bias = theta(static_cast<Eigen::Index>(d));
  for (double w : weights) {
    if (!std::isfinite(w)) throw_internal("linear solve produced non-finite weights");
  }
  return LinearModel(Architecture::kLinearRegression, std::move(weights), bias);
}

LinearModel fit_logistic_regression(const FeatureMatrix& x, std::span<const double> y,
                                    const LogisticParams& params,
                                    std::uint64_t init_seed) {
  if (x.empty()) throw_validation("cannot fit on an empty training split");
  if (y.size() != x.rows()) throw_validation("label count mismatch");
  if (!(params.learning_rate > 0)) throw_validation("learning_rate must be > 0");
  if (params.epochs < 1) throw_validation("epochs must be >= 1");
  if (params.l2 < 0) throw_validation("l2 must be >= 0");
  for (double v : y) {
    if (v != 0.0 && v != 1.0) throw_validation("logistic labels must be 0 or 1");
  }
  Rng rng(init_seed);
  Vector weights(x.cols());
  for (double& w : weights) w = 0.01 * rng.normal();
  double bias = 0.0;
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    const auto obj = logistic_objective(x, y, weights, bias, params.l2);
    if (!std::isfinite(obj.loss)) {
      throw_precondition("logistic regression diverged at epoch " +
                         std::to_string(epoch) + "; lower the learning rate");
    }
    for (std::size_t j = 0; j < weights.size(); ++j) {
      weights[j] -= params.learning_rate * obj.grad_weights[j];
    }
    bias -= params.learning_rate * obj.grad_bias;
  }
  const auto final_obj = logistic_objective(x, y, weights, bias, params.l2);
  if (!std::isfinite(final_obj.loss)) {
    throw_precondition("logistic regression diverged; lower the learning rate");
  }
  return LinearModel(Architecture::kLogisticRegression, std::move(weights), bias);
}

}  // namespace xmlops
