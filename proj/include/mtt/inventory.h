// mtt/inventory.h
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

#ifndef MTT_INVENTORY_H_
#define MTT_INVENTORY_H_

#include <span>
#include <vector>

namespace mtt {

// The per-utterance speaker inventory: K identity tags, each with a unit-norm
// profile embedding of dimension dim().
class SpeakerInventory {
 public:
  SpeakerInventory() = default;

  // `embeddings` is row-major K x dim. Throws on K = 0, duplicate labels,
  // ragged data or embeddings that are not unit norm within 1e-9.
  SpeakerInventory(std::vector<int> labels, int dim,
                   std::vector<double> embeddings);

  int size() const { return static_cast<int>(labels_.size()); }
  int dim() const { return dim_; }
  const std::vector<int> &labels() const { return labels_; }
  std::span<const double> embedding(int k) const {
    return {embeddings_.data() + static_cast<size_t>(k) * dim_,
            static_cast<size_t>(dim_)};
  }
  const std::vector<double> &embeddings() const { return embeddings_; }

  // Position of `label` in the inventory, or -1.
  int IndexOf(int label) const;

  // Like IndexOf but throws kUnknownSpeaker.
  int RequireIndex(int label) const;

 private:
  std::vector<int> labels_;
  int dim_ = 0;
  std::vector<double> embeddings_;
};

}  // namespace mtt

#endif  // MTT_INVENTORY_H_
