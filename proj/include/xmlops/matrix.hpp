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

#include <cstddef>
#include <span>
#include <vector>

#include "xmlops/error.hpp"

namespace xmlops {

// Dense row-major feature matrix; one sample per row.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  static FeatureMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    FeatureMatrix m;
    for (const auto& r : rows) m.append_row(r);
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }

  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

  void append_row(std::span<const double> values) {
    if (rows_ == 0 && data_.empty()) {
      cols_ = values.size();
    } else if (values.size() != cols_) {
      throw_validation("row dimension " + std::to_string(values.size()) +
                       " does not match matrix width " + std::to_string(cols_));
    }
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
  }

  std::vector<double> column(std::size_t j) const {
    std::vector<double> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
    return out;
  }

  void set_column(std::size_t j, std::span<const double> values) {
    for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = values[i];
  }

  std::vector<double> column_means() const {
    std::vector<double> means(cols_, 0.0);
    if (rows_ == 0) return means;
    for (std::size_t i = 0; i < rows_; ++i) {
      for (std::size_t j = 0; j < cols_; ++j) means[j] += (*this)(i, j);
    }
    for (double& m : means) m /= static_cast<double>(rows_);
    return means;
  }

  const std::vector<double>& data() const noexcept { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace xmlops
