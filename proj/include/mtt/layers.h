// mtt/layers.h
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

#ifndef MTT_LAYERS_H_
#define MTT_LAYERS_H_

// Differentiable building blocks. Every forward op has a backward that
// returns the exact vector-Jacobian product and accumulates parameter
// gradients into caller-owned tensors of the same shape as the parameters.

#include <span>
#include <vector>

#include "mtt/tensor.h"

namespace mtt::nn {

// y = x W^T + b, with x (N x in), W (out x in), b (out).
RowMatrix LinearForward(const RowMatrix &x, const Tensor &w, const Tensor &b);
RowMatrix LinearBackward(const RowMatrix &x, const Tensor &w, const RowMatrix &dy,
                         Tensor *dw, Tensor *db);

RowMatrix Sigmoid(const RowMatrix &x);
RowMatrix SigmoidBackward(const RowMatrix &y, const RowMatrix &dy);
RowMatrix Tanh(const RowMatrix &x);
RowMatrix TanhBackward(const RowMatrix &y, const RowMatrix &dy);

// Row-wise softmax.
RowMatrix Softmax(const RowMatrix &x);
RowMatrix SoftmaxBackward(const RowMatrix &y, const RowMatrix &dy);

// Causal convolution over time. x is (T x Cin), w is (Cout x K x Cin), b is
// (Cout). Output frame t sees input frames t-K+1 .. t; earlier frames are
// zero.
RowMatrix Conv1dForward(const RowMatrix &x, const Tensor &w, const Tensor &b);
RowMatrix Conv1dBackward(const RowMatrix &x, const Tensor &w, const RowMatrix &dy,
                         Tensor *dw, Tensor *db);

// Rows of `table` selected by `ids`.
RowMatrix EmbedForward(const Tensor &table, std::span<const int> ids);
void EmbedBackward(std::span<const int> ids, const RowMatrix &dy, Tensor *dtable);

// Concatenates `factor` consecutive frames; the tail is zero-padded.
RowMatrix StackFrames(const RowMatrix &x, int factor);
RowMatrix StackFramesBackward(const RowMatrix &dy, int num_input_frames, int factor);

// Gated recurrent unit. Gate layout along the 3H axis is (reset, update,
// candidate):
//   r = sigmoid(Wx_r x + b_r + Wh_r h)
//   z = sigmoid(Wx_z x + b_z + Wh_z h)
//   n = tanh(Wx_n x + b_n + r * (Wh_n h))
//   h' = (1 - z) * n + z * h
struct GruParams {
  Tensor wx;  // 3H x in
  Tensor wh;  // 3H x H
  Tensor b;   // 3H

  int hidden() const { return wh.empty() ? 0 : wh.dim(1); }
  int input() const { return wx.empty() ? 0 : wx.dim(1); }
  GruParams ZerosLike() const { return {wx.ZerosLike(), wh.ZerosLike(), b.ZerosLike()}; }
};

struct GruStepCache {
  Vector h_prev, r, z, n, hn;  // hn = Wh_n h_prev
};

// Single step from an input frame.
Vector GruStep(const GruParams &p, const Eigen::Ref<const Vector> &x,
               const Vector &h_prev, GruStepCache *cache = nullptr);

// Backward of one step. Accumulates into `grads`; writes dL/dx and dL/dh_prev.
void GruStepBackward(const GruParams &p, const Eigen::Ref<const Vector> &x,
                     const GruStepCache &cache, const Vector &dh, GruParams *grads,
                     Vector *dx, Vector *dh_prev);

struct GruSequenceCache {
  RowMatrix x;
  std::vector<GruStepCache> steps;
};

// Runs left to right from a zero state; returns (T x H).
RowMatrix GruForward(const GruParams &p, const RowMatrix &x,
                     GruSequenceCache *cache = nullptr);
// dh is (T x H); returns dL/dx (T x in).
RowMatrix GruBackward(const GruParams &p, const GruSequenceCache &cache,
                      const RowMatrix &dh, GruParams *grads);

}  // namespace mtt::nn

#endif  // MTT_LAYERS_H_
