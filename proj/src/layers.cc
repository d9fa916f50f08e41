// src/layers.cc
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

#include "mtt/layers.h"

#include <cmath>

#include "mtt/error.h"

namespace mtt::nn {

namespace {

void CheckCols(const RowMatrix &x, int expected, const char *what) {
  if (x.cols() != expected)
    Fail(ErrorKind::kShape, what, ": expected ", expected, " input columns, got ",
         x.cols());
}

}  // namespace

RowMatrix LinearForward(const RowMatrix &x, const Tensor &w, const Tensor &b) {
  CheckCols(x, w.dim(1), "linear");
  if (static_cast<int>(b.size()) != w.dim(0))
    Fail(ErrorKind::kShape, "linear: bias size ", b.size(), " vs ", w.dim(0), " outputs");
  RowMatrix y = x * w.matrix().transpose();
  y.rowwise() += b.vector().transpose();
  return y;
}

RowMatrix LinearBackward(const RowMatrix &x, const Tensor &w, const RowMatrix &dy,
                         Tensor *dw, Tensor *db) {
  if (dw) dw->matrix().noalias() += dy.transpose() * x;
  if (db) db->vector() += dy.colwise().sum().transpose();
  return dy * w.matrix();
}

RowMatrix Sigmoid(const RowMatrix &x) {
  return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

RowMatrix SigmoidBackward(const RowMatrix &y, const RowMatrix &dy) {
  return (dy.array() * y.array() * (1.0 - y.array())).matrix();
}

RowMatrix Tanh(const RowMatrix &x) { return x.array().tanh().matrix(); }

RowMatrix TanhBackward(const RowMatrix &y, const RowMatrix &dy) {
  return (dy.array() * (1.0 - y.array().square())).matrix();
}

RowMatrix Softmax(const RowMatrix &x) {
  RowMatrix y(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double m = x.row(i).maxCoeff();
    y.row(i) = (x.row(i).array() - m).exp().matrix();
    y.row(i) /= y.row(i).sum();
  }
  return y;
}

RowMatrix SoftmaxBackward(const RowMatrix &y, const RowMatrix &dy) {
  RowMatrix dx(y.rows(), y.cols());
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    const double dot = y.row(i).dot(dy.row(i));
    dx.row(i) = (y.row(i).array() * (dy.row(i).array() - dot)).matrix();
  }
  return dx;
}

namespace {

// (T x K*Cin) matrix whose row t holds frames t-K+1 .. t.
RowMatrix CausalPatches(const RowMatrix &x, int kernel) {
  const Eigen::Index T = x.rows(), C = x.cols();
  RowMatrix patches = RowMatrix::Zero(T, kernel * C);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (int k = 0; k < kernel; ++k) {
      const Eigen::Index src = t - (kernel - 1) + k;
      if (src < 0) continue;
      patches.block(t, k * C, 1, C) = x.row(src);
    }
  }
  return patches;
}

}  // namespace

RowMatrix Conv1dForward(const RowMatrix &x, const Tensor &w, const Tensor &b) {
  if (w.shape().size() != 3) Fail(ErrorKind::kShape, "conv1d weight must be 3-D");
  CheckCols(x, w.dim(2), "conv1d");
  const RowMatrix patches = CausalPatches(x, w.dim(1));
  RowMatrix y = patches * w.matrix().transpose();
  y.rowwise() += b.vector().transpose();
  return y;
}

RowMatrix Conv1dBackward(const RowMatrix &x, const Tensor &w, const RowMatrix &dy,
                         Tensor *dw, Tensor *db) {
  const int kernel = w.dim(1);
  const Eigen::Index T = x.rows(), C = x.cols();
  if (dw) dw->matrix().noalias() += dy.transpose() * CausalPatches(x, kernel);
  if (db) db->vector() += dy.colwise().sum().transpose();
  const RowMatrix dpatches = dy * w.matrix();
  RowMatrix dx = RowMatrix::Zero(T, C);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (int k = 0; k < kernel; ++k) {
      const Eigen::Index src = t - (kernel - 1) + k;
      if (src < 0) continue;
      dx.row(src) += dpatches.block(t, k * C, 1, C);
    }
  }
  return dx;
}

RowMatrix EmbedForward(const Tensor &table, std::span<const int> ids) {
  const int rows = table.dim(0);
  RowMatrix y(static_cast<Eigen::Index>(ids.size()), table.dim(1));
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= rows)
      Fail(ErrorKind::kInvalidLabel, "embedding id ", ids[i], " outside [0, ", rows, ")");
    y.row(i) = table.matrix().row(ids[i]);
  }
  return y;
}

void EmbedBackward(std::span<const int> ids, const RowMatrix &dy, Tensor *dtable) {
  for (size_t i = 0; i < ids.size(); ++i) dtable->matrix().row(ids[i]) += dy.row(i);
}

RowMatrix StackFrames(const RowMatrix &x, int factor) {
  const Eigen::Index T = x.rows(), C = x.cols();
  const Eigen::Index out = (T + factor - 1) / factor;
  RowMatrix y = RowMatrix::Zero(out, C * factor);
  for (Eigen::Index t = 0; t < T; ++t) y.block(t / factor, (t % factor) * C, 1, C) = x.row(t);
  return y;
}

RowMatrix StackFramesBackward(const RowMatrix &dy, int num_input_frames, int factor) {
  const Eigen::Index C = dy.cols() / factor;
  RowMatrix dx(num_input_frames, C);
  for (Eigen::Index t = 0; t < num_input_frames; ++t)
    dx.row(t) = dy.block(t / factor, (t % factor) * C, 1, C);
  return dx;
}

namespace {

Vector StepFromProjection(const GruParams &p, const Vector &gx, const Vector &h_prev,
                          GruStepCache *cache) {
  const int H = p.hidden();
  const Vector gh = p.wh.matrix() * h_prev;
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  Vector r = (gx.segment(0, H) + gh.segment(0, H)).unaryExpr(sig);
  Vector z = (gx.segment(H, H) + gh.segment(H, H)).unaryExpr(sig);
  Vector hn = gh.segment(2 * H, H);
  Vector n = (gx.segment(2 * H, H).array() + r.array() * hn.array()).tanh().matrix();
  Vector h = ((1.0 - z.array()) * n.array() + z.array() * h_prev.array()).matrix();
  if (cache) {
    cache->h_prev = h_prev;
    cache->r = std::move(r);
    cache->z = std::move(z);
    cache->n = std::move(n);
    cache->hn = std::move(hn);
  }
  return h;
}

// Returns dL/d(gx); accumulates wh gradient and writes dh_prev.
Vector StepBackward(const GruParams &p, const GruStepCache &c, const Vector &dh,
                    GruParams *grads, Vector *dh_prev) {
  const int H = p.hidden();
  const Eigen::ArrayXd dn = dh.array() * (1.0 - c.z.array());
  const Eigen::ArrayXd dz = dh.array() * (c.h_prev.array() - c.n.array());
  const Eigen::ArrayXd dn_pre = dn * (1.0 - c.n.array().square());
  const Eigen::ArrayXd dr = dn_pre * c.hn.array();
  Vector dgx(3 * H), dgh(3 * H);
  dgx.segment(0, H) = (dr * c.r.array() * (1.0 - c.r.array())).matrix();
  dgx.segment(H, H) = (dz * c.z.array() * (1.0 - c.z.array())).matrix();
  dgx.segment(2 * H, H) = dn_pre.matrix();
  dgh.segment(0, 2 * H) = dgx.segment(0, 2 * H);
  dgh.segment(2 * H, H) = (dn_pre * c.r.array()).matrix();
  if (grads) grads->wh.matrix().noalias() += dgh * c.h_prev.transpose();
  *dh_prev = (dh.array() * c.z.array()).matrix();
  dh_prev->noalias() += p.wh.matrix().transpose() * dgh;
  return dgx;
}

}  // namespace

Vector GruStep(const GruParams &p, const Eigen::Ref<const Vector> &x,
               const Vector &h_prev, GruStepCache *cache) {
  if (x.size() != p.input()) Fail(ErrorKind::kShape, "gru: input size mismatch");
  if (h_prev.size() != p.hidden()) Fail(ErrorKind::kShape, "gru: state size mismatch");
  Vector gx = p.wx.matrix() * x + p.b.vector();
  return StepFromProjection(p, gx, h_prev, cache);
}

void GruStepBackward(const GruParams &p, const Eigen::Ref<const Vector> &x,
                     const GruStepCache &cache, const Vector &dh, GruParams *grads,
                     Vector *dx, Vector *dh_prev) {
  Vector dgx = StepBackward(p, cache, dh, grads, dh_prev);
  if (grads) {
    grads->wx.matrix().noalias() += dgx * x.transpose();
    grads->b.vector() += dgx;
  }
  if (dx) *dx = p.wx.matrix().transpose() * dgx;
}

RowMatrix GruForward(const GruParams &p, const RowMatrix &x, GruSequenceCache *cache) {
  CheckCols(x, p.input(), "gru");
  const int H = p.hidden();
  const Eigen::Index T = x.rows();
  RowMatrix gx = x * p.wx.matrix().transpose();
  gx.rowwise() += p.b.vector().transpose();
  RowMatrix out(T, H);
  Vector h = Vector::Zero(H);
  if (cache) {
    cache->x = x;
    cache->steps.assign(T, GruStepCache{});
  }
  for (Eigen::Index t = 0; t < T; ++t) {
    h = StepFromProjection(p, gx.row(t).transpose(), h, cache ? &cache->steps[t] : nullptr);
    out.row(t) = h.transpose();
  }
  return out;
}

RowMatrix GruBackward(const GruParams &p, const GruSequenceCache &cache,
                      const RowMatrix &dh, GruParams *grads) {
  const int H = p.hidden();
  const Eigen::Index T = cache.x.rows();
  RowMatrix dgx(T, 3 * H);
  Vector carry = Vector::Zero(H);
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    Vector total = dh.row(t).transpose() + carry;
    Vector dprev;
    dgx.row(t) = StepBackward(p, cache.steps[t], total, grads, &dprev).transpose();
    carry = std::move(dprev);
  }
  if (grads) {
    grads->wx.matrix().noalias() += dgx.transpose() * cache.x;
    grads->b.vector() += dgx.colwise().sum().transpose();
  }
  return dgx * p.wx.matrix();
}

}  // namespace mtt::nn
