// mtt/train.h
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

#ifndef MTT_TRAIN_H_
#define MTT_TRAIN_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mtt/model.h"
#include "mtt/params.h"

namespace mtt {

enum class TrainMode { kJoint, kStepwise };

struct TrainConfig {
  TrainMode mode = TrainMode::kJoint;
  double lambda = 10.0;
  Assignment assignment = Assignment::kHeat;
  LatencyConfig latency;
  bool penalize = true;  // latency penalty while the speaker loss is trained
  int epochs = 30;       // joint epochs, or the recognition phase of stepwise
  int sid_epochs = 10;   // speaker phase of stepwise
  int batch_size = 8;
  AdamConfig adam;
  double lr_decay = 1.0;  // learning rate multiplier applied after each epoch
  uint64_t seed = 1;      // minibatch order

  void Validate() const;
};

struct TrainLogRow {
  int epoch = 0;  // 1-based
  int64_t step = 0;
  double asr = 0.0, sid = 0.0, joint = 0.0;  // minibatch means
  double grad_norm = 0.0;
};

// "epoch,step,L_asr,L_sid,L_joint,grad_norm"
std::string TrainLogHeader();
std::string TrainLogLine(const TrainLogRow &row);

struct TrainHooks {
  std::function<void(const TrainLogRow &)> on_step;
  // Called after every completed epoch with the current parameters.
  std::function<void(int epoch, const ModelParams &)> on_epoch;
};

// Runs `epochs` passes of minibatch Adam over `data` on the loss selected by
// `options`. Only tensors accepted by `trainable` move. A non-finite loss or
// gradient throws kDivergence before the parameters are touched.
void TrainLoop(ModelParams *params, const ModelConfig &config,
               const std::vector<Example> &data, const LossOptions &options, int epochs,
               int first_epoch, const TrainConfig &tc, const TrainableFilter &trainable,
               const TrainHooks &hooks, int64_t *step);

// Joint: one loop on L_asr + lambda L_sid. Stepwise: recognition loss first,
// then the speaker loss alone with unmix and recognition tensors frozen.
// `trainable` further restricts what moves (e.g. a frozen unmix).
void Train(ModelParams *params, const ModelConfig &config, const std::vector<Example> &data,
           const TrainConfig &tc, const TrainHooks &hooks = {},
           const TrainableFilter &trainable = {});

bool IsUnmixTensor(std::string_view name);
bool IsSidTensor(std::string_view name);

}  // namespace mtt

#endif  // MTT_TRAIN_H_
