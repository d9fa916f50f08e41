// mtt/params.h
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

#ifndef MTT_PARAMS_H_
#define MTT_PARAMS_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtt/layers.h"
#include "mtt/tensor.h"

namespace mtt {

// Layer sizes of the two-stream model. input_dim is the width of a frame
// after splicing kSpliceFrames base frames.
constexpr int kSpliceFrames = 3;

struct ModelConfig {
  int input_dim = 144;
  int unmix_channels = 64;
  int unmix_kernel = 3;
  // When positive, the unmix encoder is a time-frequency convolution: the
  // base feature axis is cut into freq_bands equal bands, every band goes
  // through the same two conv layers and owns unmix_channels / freq_bands
  // output channels. Zero gives dense convolutions over the whole frame.
  int freq_bands = 8;
  bool mask_context = true;  // recurrent layer inside the mask network
  bool time_reduction = false;
  int vocab_size = 16;
  int asr_hidden = 64;
  int asr_layers = 2;
  int label_embed = 32;
  int pred_hidden = 64;
  int joint_dim = 64;
  int sid_hidden = 64;
  int sid_embed = 16;
  int sid_joint = 32;
  int spk_dim = 16;

  void Validate() const;

  int band_channels() const { return freq_bands > 0 ? unmix_channels / freq_bands : 0; }
  // Width of one band's slice of a spliced frame.
  int band_patch() const {
    return freq_bands > 0 ? kSpliceFrames * (input_dim / kSpliceFrames / freq_bands) : 0;
  }
};

// Every trainable tensor. One copy serves both streams. The same struct holds
// gradients and optimizer moments.
struct ModelParams {
  // Unmixing: encoder and mask networks.
  Tensor enc_conv1_w, enc_conv1_b, enc_conv2_w, enc_conv2_b;
  Tensor mask_conv1_w, mask_conv1_b, mask_conv2_w, mask_conv2_b;
  nn::GruParams mask_gru;  // empty unless mask_context
  Tensor reduce_w, reduce_b;  // empty unless time_reduction

  // Recognition transducer.
  std::vector<nn::GruParams> asr_enc;
  Tensor asr_embed;  // (V+1) x E; row 0 is the start symbol
  nn::GruParams asr_pred;
  Tensor asr_joint_enc_w, asr_joint_pred_w, asr_joint_b;
  Tensor asr_out_w, asr_out_b;  // (V+1) x J; column 0 of the output is blank

  // Speaker transducer.
  nn::GruParams sid_enc;
  Tensor sid_embed;  // 2 x E: before / after the speaker label
  Tensor sid_joint_enc_w, sid_joint_pred_w, sid_joint_b;
  Tensor sid_blank_w, sid_blank_b;
  Tensor sid_spk_w, sid_spk_b;  // project into profile space

  // Calls fn(name, tensor) for every non-empty tensor in a fixed order.
  void Visit(const std::function<void(const std::string &, Tensor &)> &fn);
  void Visit(const std::function<void(const std::string &, const Tensor &)> &fn) const;

  ModelParams ZerosLike() const;
  size_t NumValues() const;
  bool AllFinite() const;

  // Flat copy in Visit order, and the inverse.
  std::vector<double> Flatten() const;
  void Unflatten(std::span<const double> values);

  bool operator==(const ModelParams &o) const;
};

// Weights ~ U(+-sqrt(6 / (fan_in + fan_out))), biases zero, GRU update-gate
// biases +1. Deterministic in `seed`.
ModelParams InitParams(const ModelConfig &config, uint64_t seed);

// Checkpoint: a text manifest
//   mtt-checkpoint 1
//   <count>
//   <name> <ndim> <dims...> <byte offset>
//   end
// followed by the raw little-endian doubles. Written via rename.
void SaveCheckpoint(const ModelParams &params, const std::string &path);
// Loads into `params`, whose tensor names and shapes must match the file.
void LoadCheckpoint(const std::string &path, ModelParams *params);

struct AdamConfig {
  double lr = 2e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 5.0;  // <= 0 disables clipping
  // Decoupled weight decay: every step multiplies each trainable weight
  // (not bias) by 1 - lr * weight_decay before the Adam update.
  double weight_decay = 0.0;
};

struct AdamState {
  ModelParams m, v;
  int64_t step = 0;
};

AdamState InitAdam(const ModelParams &params);

using TrainableFilter = std::function<bool(std::string_view name)>;

// Bias-corrected Adam with global-norm clipping over the trainable tensors.
// Frozen tensors (filter returns false) and their moments are not touched.
// Returns the gradient norm before clipping. Throws kDivergence on
// non-finite gradients.
double OptimizerStep(ModelParams *params, const ModelParams &grads, AdamState *state,
                     const AdamConfig &config, const TrainableFilter &trainable = {});

}  // namespace mtt

#endif  // MTT_PARAMS_H_
