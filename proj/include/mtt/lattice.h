// mtt/lattice.h
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

#ifndef MTT_LATTICE_H_
#define MTT_LATTICE_H_

#include <cstdint>
#include <span>
#include <vector>

#include "mtt/inventory.h"

namespace mtt {

// RNNT: one softmax over {blank} U labels.
// HAT: blank is Bernoulli(sigmoid(blank_logit)); labels share the remaining
// mass through a softmax over label_logits.
enum class TransducerMode { kRnnt, kHat };

struct NodeLogits {
  double blank_logit = 0.0;
  std::vector<double> label_logits;
};

// Log-probabilities of every outcome at one node. For HAT, labels[k] is
// log[(1 - b) P(k)].
struct NodeLogProbs {
  double blank = 0.0;
  std::vector<double> labels;
};

NodeLogProbs RnntNodeLogProbs(double blank_logit,
                              std::span<const double> label_logits);
NodeLogProbs HatNodeLogProbs(double blank_logit,
                             std::span<const double> label_logits);
inline NodeLogProbs RnntNodeLogProbs(const NodeLogits &node) {
  return RnntNodeLogProbs(node.blank_logit, node.label_logits);
}
inline NodeLogProbs HatNodeLogProbs(const NodeLogits &node) {
  return HatNodeLogProbs(node.blank_logit, node.label_logits);
}

// P(s = k | z) = softmax_k(d_k . z) over the inventory profiles.
std::vector<double> SpeakerPosterior(std::span<const double> z,
                                     const SpeakerInventory &inventory);

struct LatencyConfig {
  double alpha = 1.0;  // blank gradient scale, (0, 1]
  double beta = 0.0;   // late-emission slope, >= 0
  int t_buffer = 3;    // grace period in frames
  int t_delay = 0;     // onset of the stream in frames

  void Validate() const;
};

// A T x (U+1) grid of node logits. Frames and label positions are 0-based
// here: node (t, u) has consumed t+1 frames and emitted u labels. Paths start
// at (0, 0), end at (T-1, U) and contain exactly T-1 blanks and U labels.
class AlignmentLattice {
 public:
  AlignmentLattice() = default;

  // `targets[u]` is the label emitted when leaving row u; each must lie in
  // [0, num_labels). Logits start at zero.
  AlignmentLattice(TransducerMode mode, int num_frames, std::vector<int> targets,
                   int num_labels);

  TransducerMode mode() const { return mode_; }
  int num_frames() const { return num_frames_; }
  int num_targets() const { return static_cast<int>(targets_.size()); }
  int num_labels() const { return num_labels_; }
  const std::vector<int> &targets() const { return targets_; }

  double &blank_logit(int t, int u) { return blank_[Index(t, u)]; }
  double blank_logit(int t, int u) const { return blank_[Index(t, u)]; }

  std::span<double> label_logits(int t, int u) {
    return {labels_.data() + Index(t, u) * num_labels_,
            static_cast<size_t>(num_labels_)};
  }
  std::span<const double> label_logits(int t, int u) const {
    return {labels_.data() + Index(t, u) * num_labels_,
            static_cast<size_t>(num_labels_)};
  }

  // Amount subtracted from every label log-probability of node (t, u).
  double label_penalty(int t, int u) const { return penalty_[Index(t, u)]; }
  void set_label_penalty(int t, int u, double v) { penalty_[Index(t, u)] = v; }

  void SetNode(int t, int u, const NodeLogits &node);
  NodeLogits Node(int t, int u) const;

  // Throws kInvalidInput if any logit or penalty is non-finite.
  void CheckFinite() const;

  // FNV-1a over mode, shape, targets, logits and penalties.
  uint64_t Fingerprint() const;

  size_t Index(int t, int u) const {
    return static_cast<size_t>(t) * (targets_.size() + 1) + u;
  }
  size_t num_nodes() const { return blank_.size(); }

  const std::vector<double> &blank_logits() const { return blank_; }
  const std::vector<double> &all_label_logits() const { return labels_; }

 private:
  TransducerMode mode_ = TransducerMode::kRnnt;
  int num_frames_ = 0;
  int num_labels_ = 0;
  std::vector<int> targets_;
  std::vector<double> blank_;
  std::vector<double> labels_;
  std::vector<double> penalty_;
};

// Forward/backward quantities of one lattice. Grids are indexed like
// AlignmentLattice::Index. Transition posteriors are zero for moves that
// leave the grid.
struct LatticeOccupancy {
  int num_frames = 0;
  int num_targets = 0;
  double log_likelihood = 0.0;
  std::vector<double> log_alpha;
  std::vector<double> log_beta;
  std::vector<double> blank_posterior;
  std::vector<double> label_posterior;
  uint64_t fingerprint = 0;
};

struct TransducerResult {
  double loss = 0.0;  // -log P(Y | X)
  LatticeOccupancy occupancy;
};

// Log-space forward-backward. Throws kInvalidInput on non-finite logits and
// kInvalidLabel on out-of-range targets.
TransducerResult TransducerLoss(const AlignmentLattice &lattice);

// d loss / d logit for every node, same layout as the lattice.
struct LatticeGrad {
  int num_frames = 0;
  int num_targets = 0;
  int num_labels = 0;
  std::vector<double> blank;
  std::vector<double> labels;

  double &label(size_t node, int k) { return labels[node * num_labels + k]; }
  double label(size_t node, int k) const { return labels[node * num_labels + k]; }
};

// Throws kConsistency when `occupancy` was computed for a different lattice.
LatticeGrad TransducerGrad(const AlignmentLattice &lattice,
                           const LatticeOccupancy &occupancy);

// Multiplies every blank-logit entry by alpha; label entries are untouched.
// Throws kInvalidConfig unless alpha is in (0, 1].
LatticeGrad ScaleBlankGradient(LatticeGrad grad, double alpha);

// Subtracts max(0, beta * (t + 1 - t_buffer - t_delay)) from the label
// log-probabilities of every node in frame t (the frame number is 1-based in
// that formula). HAT lattices only; beta = 0 returns an identical lattice.
AlignmentLattice ApplyLatencyPenalty(const AlignmentLattice &lattice,
                                     const LatencyConfig &cfg);

// log(exp(a) + exp(b)) without overflow; -inf is the identity.
double LogAdd(double a, double b);

}  // namespace mtt

#endif  // MTT_LATTICE_H_
