// mtt/model.h
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

#ifndef MTT_MODEL_H_
#define MTT_MODEL_H_

// The two-stream model: an unmixing front end splits the encoded mixture
// into two streams, and one recognition transducer plus one speaker
// transducer (a single parameter set each) run on both streams.

#include <string>
#include <vector>

#include "mtt/data.h"
#include "mtt/inventory.h"
#include "mtt/lattice.h"
#include "mtt/layers.h"
#include "mtt/params.h"

namespace mtt {

// A mixture ready for the model: features after the splice/subsample
// pipeline, targets ordered by onset, and the speaker inventory.
struct Example {
  std::string id;
  RowMatrix x;
  std::vector<int> y1, y2;
  int s1 = 0, s2 = 0;   // inventory indices of the two talkers
  int t_delay2 = 0;     // onset of the second talker in model frames
  SpeakerInventory inventory;
};

Example PrepareExample(const MixtureSample &sample,
                       const std::vector<SyntheticSpeaker> &speakers,
                       const ModelConfig &config);

// ---------------------------------------------------------------------------
// Unmixing.

struct UnmixOutput {
  RowMatrix h;       // encoded mixture
  RowMatrix m;       // mask in (0, 1)
  RowMatrix h1, h2;  // h1 = h * m, h2 = h - h1
  // The streams the heads consume: h1 / h2, or their time-reduced versions.
  RowMatrix stream[2];
};

struct UnmixCache {
  RowMatrix x, enc_a1, mask_a1, mask_logits;
  nn::GruSequenceCache mask_gru;
  RowMatrix mask_ctx;
  RowMatrix stacked[2];
};

// x is (T x input_dim). Throws kInvalidInput when x has no frames.
UnmixOutput Unmix(const ModelParams &p, const ModelConfig &config, const RowMatrix &x,
                  UnmixCache *cache = nullptr);
// Accumulates parameter gradients given dL/dstream[0] and dL/dstream[1].
void UnmixBackward(const ModelParams &p, const ModelConfig &config, const UnmixOutput &out,
                   const UnmixCache &cache, const RowMatrix &dstream1,
                   const RowMatrix &dstream2, ModelParams *grads);

// Number of model frames the heads see for `num_input_frames` pipeline
// frames.
int StreamFrames(const ModelConfig &config, int num_input_frames);

// ---------------------------------------------------------------------------
// Per-stream heads. Each returns the loss; when `grads` is non-null it adds
// weight * dL/dparams into `grads` and writes weight * dL/dfeats.

// The recognition transducer's lattice for one stream (RNNT mode, labels
// 0..V-1; the output layer's index 0 is blank).
AlignmentLattice AsrLattice(const ModelParams &p, const ModelConfig &config,
                            const RowMatrix &feats, const std::vector<int> &targets);

double AsrStreamLoss(const ModelParams &p, const ModelConfig &config, const RowMatrix &feats,
                     const std::vector<int> &targets, double weight, ModelParams *grads,
                     RowMatrix *dfeats);

// The speaker transducer's lattice (HAT mode, one target, labels are the
// inventory entries), before any latency penalty.
AlignmentLattice SidLattice(const ModelParams &p, const ModelConfig &config,
                            const RowMatrix &feats, const SpeakerInventory &inventory,
                            int target);

// HAT loss for inventory index `target`. The latency penalty uses
// latency.beta / t_buffer with this stream's t_delay; latency.alpha scales
// the blank-logit gradient.
double SidStreamLoss(const ModelParams &p, const ModelConfig &config, const RowMatrix &feats,
                     const SpeakerInventory &inventory, int target,
                     const LatencyConfig &latency, double weight, ModelParams *grads,
                     RowMatrix *dfeats);

// ---------------------------------------------------------------------------
// Loss composition.

enum class Assignment { kHeat, kPit };

// min(m[0][0] + m[1][1], m[0][1] + m[1][0]) where m[i][j] is the loss of
// label sequence j on stream i.
double PitLoss(const double m[2][2]);

struct LossOptions {
  double lambda = 10.0;
  Assignment assignment = Assignment::kHeat;
  LatencyConfig latency;      // t_delay is filled in per stream
  bool penalize = true;       // apply the latency penalty to the speaker loss
  bool use_asr = true;        // include the recognition term
  bool backprop_unmix = true;
};

struct LossValue {
  double asr = 0.0, sid = 0.0, joint = 0.0;
  double asr_stream[2] = {0.0, 0.0};
  double sid_stream[2] = {0.0, 0.0};
  bool swapped = false;  // stream 1 carried the second talker's labels
};

// L = L_asr + lambda * L_sid. Under HEAT stream 1 is assigned the first
// talker; under PIT the recognition assignment with the lower loss wins and
// the speaker loss follows it. Adds gradients into `grads` when non-null.
LossValue JointLoss(const ModelParams &p, const ModelConfig &config, const Example &ex,
                    const LossOptions &options, ModelParams *grads = nullptr);

}  // namespace mtt

#endif  // MTT_MODEL_H_
