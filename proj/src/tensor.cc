// src/tensor.cc
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

#include "mtt/tensor.h"

#include <cmath>
#include <functional>
#include <numeric>

#include "mtt/error.h"

namespace mtt {

Tensor::Tensor(std::vector<int> shape, double fill) : shape_(std::move(shape)) {
  size_t n = 1;
  for (int d : shape_) {
    if (d < 0) Fail(ErrorKind::kShape, "negative tensor dimension");
    n *= static_cast<size_t>(d);
  }
  data_.assign(shape_.empty() ? 0 : n, fill);
}

MatrixMap Tensor::matrix() {
  const int rows = shape_.empty() ? 0 : shape_[0];
  const int cols = rows == 0 ? 0 : static_cast<int>(data_.size() / rows);
  return MatrixMap(data_.data(), rows, cols);
}

ConstMatrixMap Tensor::matrix() const {
  const int rows = shape_.empty() ? 0 : shape_[0];
  const int cols = rows == 0 ? 0 : static_cast<int>(data_.size() / rows);
  return ConstMatrixMap(data_.data(), rows, cols);
}

bool Tensor::AllFinite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace mtt
