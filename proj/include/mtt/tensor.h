// mtt/tensor.h
//
// Copyright 2026  The mtt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MTT_TENSOR_H_
#define MTT_TENSOR_H_

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace mtt {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using Vector = Eigen::VectorXd;
using VectorMap = Eigen::Map<Vector>;
using ConstVectorMap = Eigen::Map<const Vector>;

// Dense row-major array of doubles with an explicit shape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, double fill = 0.0);

  const std::vector<int> &shape() const { return shape_; }
  int dim(int i) const { return shape_[i]; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double *data() { return data_.data(); }
  const double *data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  double &operator[](size_t i) { return data_[i]; }
  double operator[](size_t i) const { return data_[i]; }

  // First dimension by the product of the rest.
  MatrixMap matrix();
  ConstMatrixMap matrix() const;
  VectorMap vector() { return VectorMap(data_.data(), data_.size()); }
  ConstVectorMap vector() const { return ConstVectorMap(data_.data(), data_.size()); }

  void SetZero() { std::fill(data_.begin(), data_.end(), 0.0); }
  Tensor ZerosLike() const { return Tensor(shape_); }
  bool AllFinite() const;

  bool operator==(const Tensor &o) const {
    return shape_ == o.shape_ && data_ == o.data_;
  }

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

}  // namespace mtt

#endif  // MTT_TENSOR_H_
