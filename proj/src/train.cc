// src/train.cc
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

#include "mtt/train.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "mtt/error.h"

namespace mtt {

void TrainConfig::Validate() const {
  if (!(lambda >= 0.0)) Fail(ErrorKind::kInvalidConfig, "lambda must be >= 0");
  latency.Validate();
  if (epochs < 0 || sid_epochs < 0) Fail(ErrorKind::kInvalidConfig, "epochs must be >= 0");
  if (batch_size < 1) Fail(ErrorKind::kInvalidConfig, "batch_size must be >= 1");
  if (!(adam.lr >= 0.0)) Fail(ErrorKind::kInvalidConfig, "lr must be >= 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0))
    Fail(ErrorKind::kInvalidConfig, "Adam betas must lie in [0, 1)");
  if (!(adam.eps > 0.0)) Fail(ErrorKind::kInvalidConfig, "Adam eps must be > 0");
  if (!(adam.weight_decay >= 0.0)) Fail(ErrorKind::kInvalidConfig, "weight_decay must be >= 0");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0))
    Fail(ErrorKind::kInvalidConfig, "lr_decay must lie in (0, 1]");
}

std::string TrainLogHeader() { return "epoch,step,L_asr,L_sid,L_joint,grad_norm\n"; }

std::string TrainLogLine(const TrainLogRow &r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%d,%lld,%.9g,%.9g,%.9g,%.9g\n", r.epoch,
                static_cast<long long>(r.step), r.asr, r.sid, r.joint, r.grad_norm);
  return buf;
}

bool IsUnmixTensor(std::string_view name) {
  return name.starts_with("unmix.") || name.starts_with("reduce.");
}

bool IsSidTensor(std::string_view name) { return name.starts_with("sid."); }

void TrainLoop(ModelParams *params, const ModelConfig &config,
               const std::vector<Example> &data, const LossOptions &options, int epochs,
               int first_epoch, const TrainConfig &tc, const TrainableFilter &trainable,
               const TrainHooks &hooks, int64_t *step) {
  if (data.empty()) Fail(ErrorKind::kEmptyInput, "no training data");
  AdamState state = InitAdam(*params);
  AdamConfig adam = tc.adam;
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(tc.seed + static_cast<uint64_t>(first_epoch));

  for (int e = 0; e < epochs; ++e) {
    const int epoch = first_epoch + e;
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t start = 0; start < order.size(); start += tc.batch_size) {
      const size_t end = std::min(order.size(), start + tc.batch_size);
      const double inv = 1.0 / static_cast<double>(end - start);
      ModelParams grads = params->ZerosLike();
      TrainLogRow row;
      for (size_t i = start; i < end; ++i) {
        const LossValue v = JointLoss(*params, config, data[order[i]], options, &grads);
        if (!std::isfinite(v.joint))
          Fail(ErrorKind::kDivergence, "non-finite loss on ", data[order[i]].id, " at epoch ",
               epoch);
        row.asr += v.asr * inv;
        row.sid += v.sid * inv;
        row.joint += v.joint * inv;
      }
      grads.Visit([inv](const std::string &, Tensor &t) { t.vector() *= inv; });
      row.grad_norm = OptimizerStep(params, grads, &state, adam, trainable);
      row.epoch = epoch;
      row.step = ++*step;
      if (hooks.on_step) hooks.on_step(row);
    }
    adam.lr *= tc.lr_decay;
    if (hooks.on_epoch) hooks.on_epoch(epoch, *params);
  }
}

void Train(ModelParams *params, const ModelConfig &config, const std::vector<Example> &data,
           const TrainConfig &tc, const TrainHooks &hooks, const TrainableFilter &trainable) {
  tc.Validate();
  LossOptions opt;
  opt.lambda = tc.lambda;
  opt.assignment = tc.assignment;
  opt.latency = tc.latency;
  opt.penalize = tc.penalize;
  auto allowed = [&trainable](std::string_view n) { return !trainable || trainable(n); };
  int64_t step = 0;

  if (tc.mode == TrainMode::kJoint) {
    opt.backprop_unmix = allowed("unmix.enc.conv1.w");
    TrainLoop(params, config, data, opt, tc.epochs, 1, tc, trainable, hooks, &step);
    return;
  }

  LossOptions asr = opt;
  asr.lambda = 0.0;
  asr.backprop_unmix = allowed("unmix.enc.conv1.w");
  TrainLoop(params, config, data, asr, tc.epochs, 1, tc, trainable, hooks, &step);

  LossOptions sid = opt;
  sid.use_asr = false;
  sid.lambda = tc.lambda > 0.0 ? tc.lambda : 1.0;
  sid.backprop_unmix = false;
  auto phase2 = [&allowed](std::string_view n) { return IsSidTensor(n) && allowed(n); };
  TrainLoop(params, config, data, sid, tc.sid_epochs, tc.epochs + 1, tc, phase2, hooks, &step);
}

}  // namespace mtt
