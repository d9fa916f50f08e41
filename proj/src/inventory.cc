// src/inventory.cc
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

#include "mtt/inventory.h"

#include <cmath>
#include <set>

#include "mtt/error.h"

namespace mtt {

SpeakerInventory::SpeakerInventory(std::vector<int> labels, int dim,
                                   std::vector<double> embeddings)
    : labels_(std::move(labels)), dim_(dim), embeddings_(std::move(embeddings)) {
  if (labels_.empty()) Fail(ErrorKind::kEmptyInventory, "inventory has K=0");
  if (dim_ <= 0) Fail(ErrorKind::kShape, "profile dimension must be positive");
  if (embeddings_.size() != labels_.size() * static_cast<size_t>(dim_))
    Fail(ErrorKind::kShape, "expected ", labels_.size(), " x ", dim_,
         " embedding values, got ", embeddings_.size());
  std::set<int> seen(labels_.begin(), labels_.end());
  if (seen.size() != labels_.size())
    Fail(ErrorKind::kInvalidInput, "inventory labels must be unique");
  for (int k = 0; k < size(); ++k) {
    double norm2 = 0.0;
    for (double v : embedding(k)) {
      if (!std::isfinite(v)) Fail(ErrorKind::kInvalidInput, "non-finite profile");
      norm2 += v * v;
    }
    if (std::abs(std::sqrt(norm2) - 1.0) > 1e-9)
      Fail(ErrorKind::kInvalidInput, "profile ", labels_[k],
           " is not unit norm (|d|=", std::sqrt(norm2), ")");
  }
}

int SpeakerInventory::IndexOf(int label) const {
  for (int k = 0; k < size(); ++k)
    if (labels_[k] == label) return k;
  return -1;
}

int SpeakerInventory::RequireIndex(int label) const {
  int k = IndexOf(label);
  if (k < 0) Fail(ErrorKind::kUnknownSpeaker, "speaker ", label, " not in inventory");
  return k;
}

}  // namespace mtt
