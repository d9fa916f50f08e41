// src/model.cc
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

#include "mtt/model.h"

#include <algorithm>
#include <cmath>

#include "mtt/error.h"

namespace mtt {

namespace {

RowMatrix MatMulT(const RowMatrix &x, const Tensor &w) {
  return x * w.matrix().transpose();
}

void AddBias(RowMatrix *x, const Tensor &b) {
  x->rowwise() += b.vector().transpose();
}

void AccumulateBias(const RowMatrix &dy, Tensor *db) {
  db->vector() += dy.colwise().sum().transpose();
}

// dW += dy^T x
void AccumulateWeight(const RowMatrix &dy, const RowMatrix &x, Tensor *dw) {
  dw->matrix().noalias() += dy.transpose() * x;
}

// Row n = t * num_u + u of the joint pre-activation is a[t] + b[u].
RowMatrix JointHidden(const RowMatrix &a, const RowMatrix &b) {
  const Eigen::Index T = a.rows(), U1 = b.rows();
  RowMatrix z(T * U1, a.cols());
  for (Eigen::Index t = 0; t < T; ++t)
    for (Eigen::Index u = 0; u < U1; ++u) z.row(t * U1 + u) = a.row(t) + b.row(u);
  return z.array().tanh().matrix();
}

// Splits dL/d(joint pre-activation) back onto the frame and label halves.
void JointHiddenBackward(const RowMatrix &dpre, Eigen::Index T, Eigen::Index U1,
                         RowMatrix *da, RowMatrix *db) {
  da->setZero(T, dpre.cols());
  db->setZero(U1, dpre.cols());
  for (Eigen::Index t = 0; t < T; ++t)
    for (Eigen::Index u = 0; u < U1; ++u) {
      da->row(t) += dpre.row(t * U1 + u);
      db->row(u) += dpre.row(t * U1 + u);
    }
}

RowMatrix TanhDeriv(const RowMatrix &z, const RowMatrix &dz) {
  return (dz.array() * (1.0 - z.array().square())).matrix();
}

struct AsrForwardState {
  std::vector<nn::GruSequenceCache> enc_caches;
  RowMatrix enc;
  std::vector<int> ids;
  RowMatrix embed;
  nn::GruSequenceCache pred_cache;
  RowMatrix pred;
  RowMatrix z;       // joint hidden, (T * (U+1)) x J
  RowMatrix logits;  // (T * (U+1)) x (V+1)
};

AsrForwardState AsrForward(const ModelParams &p, const RowMatrix &feats,
                           const std::vector<int> &targets, int vocab) {
  AsrForwardState s;
  s.enc_caches.resize(p.asr_enc.size());
  RowMatrix h = feats;
  for (size_t l = 0; l < p.asr_enc.size(); ++l) h = nn::GruForward(p.asr_enc[l], h, &s.enc_caches[l]);
  s.enc = std::move(h);

  s.ids.reserve(targets.size() + 1);
  s.ids.push_back(0);
  for (int y : targets) {
    if (y < 0 || y >= vocab) Fail(ErrorKind::kInvalidLabel, "token ", y, " outside [0, ", vocab, ")");
    s.ids.push_back(y + 1);
  }
  s.embed = nn::EmbedForward(p.asr_embed, s.ids);
  s.pred = nn::GruForward(p.asr_pred, s.embed, &s.pred_cache);

  const RowMatrix a = MatMulT(s.enc, p.asr_joint_enc_w);
  RowMatrix b = MatMulT(s.pred, p.asr_joint_pred_w);
  AddBias(&b, p.asr_joint_b);
  s.z = JointHidden(a, b);
  s.logits = MatMulT(s.z, p.asr_out_w);
  AddBias(&s.logits, p.asr_out_b);
  return s;
}

AlignmentLattice LatticeFromAsrLogits(const RowMatrix &logits, int T,
                                      const std::vector<int> &targets, int vocab) {
  AlignmentLattice lat(TransducerMode::kRnnt, T, targets, vocab);
  const int U1 = static_cast<int>(targets.size()) + 1;
  for (int t = 0; t < T; ++t)
    for (int u = 0; u < U1; ++u) {
      const auto row = logits.row(t * U1 + u);
      lat.blank_logit(t, u) = row(0);
      auto labels = lat.label_logits(t, u);
      for (int k = 0; k < vocab; ++k) labels[k] = row(k + 1);
    }
  return lat;
}

struct SidForwardState {
  nn::GruSequenceCache enc_cache;
  RowMatrix enc;
  RowMatrix z;      // (T * 2) x J
  RowMatrix blank;  // (T * 2) x 1
  RowMatrix spk;    // (T * 2) x spk_dim
  RowMatrix logits; // (T * 2) x K
};

RowMatrix InventoryMatrix(const SpeakerInventory &inv) {
  RowMatrix d(inv.size(), inv.dim());
  for (int k = 0; k < inv.size(); ++k)
    for (int j = 0; j < inv.dim(); ++j) d(k, j) = inv.embedding(k)[j];
  return d;
}

SidForwardState SidForward(const ModelParams &p, const ModelConfig &config,
                           const RowMatrix &feats, const RowMatrix &profiles) {
  if (profiles.rows() == 0) Fail(ErrorKind::kEmptyInventory, "speaker inventory is empty");
  if (profiles.cols() != config.spk_dim)
    Fail(ErrorKind::kShape, "profile dimension ", profiles.cols(), " but the model projects to ",
         config.spk_dim);
  SidForwardState s;
  s.enc = nn::GruForward(p.sid_enc, feats, &s.enc_cache);
  const RowMatrix a = MatMulT(s.enc, p.sid_joint_enc_w);
  RowMatrix b = MatMulT(p.sid_embed.matrix(), p.sid_joint_pred_w);
  AddBias(&b, p.sid_joint_b);
  s.z = JointHidden(a, b);
  s.blank = MatMulT(s.z, p.sid_blank_w);
  AddBias(&s.blank, p.sid_blank_b);
  s.spk = MatMulT(s.z, p.sid_spk_w);
  AddBias(&s.spk, p.sid_spk_b);
  s.logits = s.spk * profiles.transpose();
  return s;
}

AlignmentLattice LatticeFromSid(const SidForwardState &s, int T, int target, int K) {
  AlignmentLattice lat(TransducerMode::kHat, T, {target}, K);
  for (int t = 0; t < T; ++t)
    for (int u = 0; u < 2; ++u) {
      lat.blank_logit(t, u) = s.blank(t * 2 + u, 0);
      auto labels = lat.label_logits(t, u);
      for (int k = 0; k < K; ++k) labels[k] = s.logits(t * 2 + u, k);
    }
  return lat;
}

// Input columns of every band. For the spliced input, band b takes its slice
// of each spliced base frame; for the encoder's hidden layer it takes its own
// block of channels.
std::vector<std::vector<int>> InputBands(const ModelConfig &c) {
  const int base = c.input_dim / kSpliceFrames, width = base / c.freq_bands;
  std::vector<std::vector<int>> cols(c.freq_bands);
  for (int b = 0; b < c.freq_bands; ++b)
    for (int s = 0; s < kSpliceFrames; ++s)
      for (int j = 0; j < width; ++j) cols[b].push_back(s * base + b * width + j);
  return cols;
}

std::vector<std::vector<int>> ChannelBands(const ModelConfig &c) {
  const int Cb = c.band_channels();
  std::vector<std::vector<int>> cols(c.freq_bands);
  for (int b = 0; b < c.freq_bands; ++b)
    for (int j = 0; j < Cb; ++j) cols[b].push_back(b * Cb + j);
  return cols;
}

RowMatrix GatherColumns(const RowMatrix &x, const std::vector<int> &cols) {
  RowMatrix out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (size_t j = 0; j < cols.size(); ++j) out.col(j) = x.col(cols[j]);
  return out;
}

// One convolution shared by all bands; band b writes output channels
// [b Cb, (b + 1) Cb).
RowMatrix BandConvForward(const RowMatrix &x, const std::vector<std::vector<int>> &bands,
                          const Tensor &w, const Tensor &bias) {
  const int Cb = w.dim(0);
  RowMatrix y(x.rows(), Cb * static_cast<Eigen::Index>(bands.size()));
  for (size_t b = 0; b < bands.size(); ++b)
    y.middleCols(b * Cb, Cb) = nn::Conv1dForward(GatherColumns(x, bands[b]), w, bias);
  return y;
}

RowMatrix BandConvBackward(const RowMatrix &x, const std::vector<std::vector<int>> &bands,
                           const Tensor &w, const RowMatrix &dy, Tensor *dw, Tensor *db) {
  const int Cb = w.dim(0);
  RowMatrix dx = RowMatrix::Zero(x.rows(), x.cols());
  for (size_t b = 0; b < bands.size(); ++b) {
    const RowMatrix dxb = nn::Conv1dBackward(GatherColumns(x, bands[b]), w,
                                             dy.middleCols(b * Cb, Cb), dw, db);
    for (size_t j = 0; j < bands[b].size(); ++j) dx.col(bands[b][j]) += dxb.col(j);
  }
  return dx;
}

void CheckFeats(const ModelConfig &config, const RowMatrix &feats) {
  if (feats.rows() == 0) Fail(ErrorKind::kInvalidInput, "stream has no frames");
  if (feats.cols() != config.unmix_channels)
    Fail(ErrorKind::kShape, "stream width ", feats.cols(), ", expected ", config.unmix_channels);
}

}  // namespace

Example PrepareExample(const MixtureSample &sample,
                       const std::vector<SyntheticSpeaker> &speakers,
                       const ModelConfig &config) {
  Example ex;
  ex.id = sample.id;
  ex.x = FeaturePipeline(sample.x);
  if (ex.x.cols() != config.input_dim)
    Fail(ErrorKind::kShape, "spliced features have width ", ex.x.cols(), ", model expects ",
         config.input_dim);
  ex.y1 = sample.y1;
  ex.y2 = sample.y2;
  ex.inventory = InventoryFromSpeakers(speakers, sample.inventory);
  ex.s1 = ex.inventory.RequireIndex(sample.s1);
  ex.s2 = ex.inventory.RequireIndex(sample.s2);
  ex.t_delay2 = ModelFrames(sample.delay);
  if (config.time_reduction) ex.t_delay2 /= 2;
  return ex;
}

int StreamFrames(const ModelConfig &config, int num_input_frames) {
  return config.time_reduction ? (num_input_frames + 1) / 2 : num_input_frames;
}

UnmixOutput Unmix(const ModelParams &p, const ModelConfig &config, const RowMatrix &x,
                  UnmixCache *cache) {
  if (x.rows() == 0) Fail(ErrorKind::kInvalidInput, "unmix input has no frames");
  if (x.cols() != config.input_dim)
    Fail(ErrorKind::kShape, "unmix input width ", x.cols(), ", expected ", config.input_dim);
  UnmixCache local;
  UnmixCache &c = cache ? *cache : local;
  c.x = x;

  UnmixOutput out;
  if (config.freq_bands > 0) {
    c.enc_a1 = nn::Tanh(BandConvForward(x, InputBands(config), p.enc_conv1_w, p.enc_conv1_b));
    out.h = nn::Tanh(
        BandConvForward(c.enc_a1, ChannelBands(config), p.enc_conv2_w, p.enc_conv2_b));
  } else {
    c.enc_a1 = nn::Tanh(nn::Conv1dForward(x, p.enc_conv1_w, p.enc_conv1_b));
    out.h = nn::Tanh(nn::Conv1dForward(c.enc_a1, p.enc_conv2_w, p.enc_conv2_b));
  }

  c.mask_a1 = nn::Tanh(nn::Conv1dForward(x, p.mask_conv1_w, p.mask_conv1_b));
  const RowMatrix *ctx = &c.mask_a1;
  if (config.mask_context) {
    c.mask_ctx = nn::GruForward(p.mask_gru, c.mask_a1, &c.mask_gru);
    ctx = &c.mask_ctx;
  }
  c.mask_logits = nn::Conv1dForward(*ctx, p.mask_conv2_w, p.mask_conv2_b);
  out.m = nn::Sigmoid(c.mask_logits);

  // Whichever share is at least half of h is formed by the product and the
  // other by subtraction, which is then exact, so h1 + h2 == h bit for bit.
  out.h1.resize(out.h.rows(), out.h.cols());
  out.h2.resize(out.h.rows(), out.h.cols());
  for (Eigen::Index i = 0; i < out.h.size(); ++i) {
    const double h = out.h.data()[i], m = out.m.data()[i];
    if (m >= 0.5) {
      out.h1.data()[i] = h * m;
      out.h2.data()[i] = h - out.h1.data()[i];
    } else {
      out.h2.data()[i] = h * (1.0 - m);
      out.h1.data()[i] = h - out.h2.data()[i];
    }
  }

  if (config.time_reduction) {
    c.stacked[0] = nn::StackFrames(out.h1, 2);
    c.stacked[1] = nn::StackFrames(out.h2, 2);
    for (int i = 0; i < 2; ++i) out.stream[i] = nn::LinearForward(c.stacked[i], p.reduce_w, p.reduce_b);
  } else {
    out.stream[0] = out.h1;
    out.stream[1] = out.h2;
  }
  return out;
}

void UnmixBackward(const ModelParams &p, const ModelConfig &config, const UnmixOutput &out,
                   const UnmixCache &c, const RowMatrix &dstream1, const RowMatrix &dstream2,
                   ModelParams *g) {
  RowMatrix dh1, dh2;
  if (config.time_reduction) {
    const int T = static_cast<int>(out.h1.rows());
    dh1 = nn::StackFramesBackward(
        nn::LinearBackward(c.stacked[0], p.reduce_w, dstream1, &g->reduce_w, &g->reduce_b), T, 2);
    dh2 = nn::StackFramesBackward(
        nn::LinearBackward(c.stacked[1], p.reduce_w, dstream2, &g->reduce_w, &g->reduce_b), T, 2);
  } else {
    dh1 = dstream1;
    dh2 = dstream2;
  }

  // h1 = h m, h2 = h - h m.
  const RowMatrix dh = (dh2.array() + out.m.array() * (dh1 - dh2).array()).matrix();
  const RowMatrix dm = ((dh1 - dh2).array() * out.h.array()).matrix();

  const RowMatrix dlogits = nn::SigmoidBackward(out.m, dm);
  const RowMatrix *ctx = config.mask_context ? &c.mask_ctx : &c.mask_a1;
  RowMatrix dctx = nn::Conv1dBackward(*ctx, p.mask_conv2_w, dlogits, &g->mask_conv2_w, &g->mask_conv2_b);
  if (config.mask_context) dctx = nn::GruBackward(p.mask_gru, c.mask_gru, dctx, &g->mask_gru);
  nn::Conv1dBackward(c.x, p.mask_conv1_w, nn::TanhBackward(c.mask_a1, dctx), &g->mask_conv1_w,
                     &g->mask_conv1_b);

  if (config.freq_bands > 0) {
    const RowMatrix da1 =
        BandConvBackward(c.enc_a1, ChannelBands(config), p.enc_conv2_w,
                         nn::TanhBackward(out.h, dh), &g->enc_conv2_w, &g->enc_conv2_b);
    BandConvBackward(c.x, InputBands(config), p.enc_conv1_w, nn::TanhBackward(c.enc_a1, da1),
                     &g->enc_conv1_w, &g->enc_conv1_b);
  } else {
    const RowMatrix da1 = nn::Conv1dBackward(c.enc_a1, p.enc_conv2_w,
                                             nn::TanhBackward(out.h, dh), &g->enc_conv2_w,
                                             &g->enc_conv2_b);
    nn::Conv1dBackward(c.x, p.enc_conv1_w, nn::TanhBackward(c.enc_a1, da1), &g->enc_conv1_w,
                       &g->enc_conv1_b);
  }
}

AlignmentLattice AsrLattice(const ModelParams &p, const ModelConfig &config,
                            const RowMatrix &feats, const std::vector<int> &targets) {
  CheckFeats(config, feats);
  const AsrForwardState s = AsrForward(p, feats, targets, config.vocab_size);
  return LatticeFromAsrLogits(s.logits, static_cast<int>(feats.rows()), targets,
                              config.vocab_size);
}

double AsrStreamLoss(const ModelParams &p, const ModelConfig &config, const RowMatrix &feats,
                     const std::vector<int> &targets, double weight, ModelParams *grads,
                     RowMatrix *dfeats) {
  CheckFeats(config, feats);
  const int T = static_cast<int>(feats.rows());
  const int V = config.vocab_size;
  const AsrForwardState s = AsrForward(p, feats, targets, V);
  const AlignmentLattice lat = LatticeFromAsrLogits(s.logits, T, targets, V);
  const TransducerResult res = TransducerLoss(lat);
  if (!grads) return res.loss;

  const LatticeGrad lg = TransducerGrad(lat, res.occupancy);
  const Eigen::Index N = s.logits.rows();
  RowMatrix dlogits(N, V + 1);
  for (Eigen::Index n = 0; n < N; ++n) {
    dlogits(n, 0) = weight * lg.blank[n];
    for (int k = 0; k < V; ++k) dlogits(n, k + 1) = weight * lg.label(n, k);
  }

  ModelParams &g = *grads;
  AccumulateWeight(dlogits, s.z, &g.asr_out_w);
  AccumulateBias(dlogits, &g.asr_out_b);
  const RowMatrix dpre = TanhDeriv(s.z, dlogits * p.asr_out_w.matrix());

  RowMatrix da, db;
  JointHiddenBackward(dpre, T, s.pred.rows(), &da, &db);
  AccumulateWeight(da, s.enc, &g.asr_joint_enc_w);
  AccumulateWeight(db, s.pred, &g.asr_joint_pred_w);
  AccumulateBias(db, &g.asr_joint_b);

  const RowMatrix dpred = db * p.asr_joint_pred_w.matrix();
  const RowMatrix dembed = nn::GruBackward(p.asr_pred, s.pred_cache, dpred, &g.asr_pred);
  nn::EmbedBackward(s.ids, dembed, &g.asr_embed);

  RowMatrix dh = da * p.asr_joint_enc_w.matrix();
  for (size_t l = p.asr_enc.size(); l-- > 0;)
    dh = nn::GruBackward(p.asr_enc[l], s.enc_caches[l], dh, &g.asr_enc[l]);
  if (dfeats) *dfeats = std::move(dh);
  return res.loss;
}

AlignmentLattice SidLattice(const ModelParams &p, const ModelConfig &config,
                            const RowMatrix &feats, const SpeakerInventory &inventory,
                            int target) {
  CheckFeats(config, feats);
  const SidForwardState s = SidForward(p, config, feats, InventoryMatrix(inventory));
  return LatticeFromSid(s, static_cast<int>(feats.rows()), target, inventory.size());
}

double SidStreamLoss(const ModelParams &p, const ModelConfig &config, const RowMatrix &feats,
                     const SpeakerInventory &inventory, int target,
                     const LatencyConfig &latency, double weight, ModelParams *grads,
                     RowMatrix *dfeats) {
  CheckFeats(config, feats);
  latency.Validate();
  if (target < 0 || target >= inventory.size())
    Fail(ErrorKind::kUnknownSpeaker, "speaker index ", target, " outside the inventory of ",
         inventory.size());
  const int T = static_cast<int>(feats.rows());
  const int K = inventory.size();
  const RowMatrix profiles = InventoryMatrix(inventory);
  const SidForwardState s = SidForward(p, config, feats, profiles);
  AlignmentLattice lat = LatticeFromSid(s, T, target, K);
  if (latency.beta > 0.0) lat = ApplyLatencyPenalty(lat, latency);
  const TransducerResult res = TransducerLoss(lat);
  if (!grads) return res.loss;

  LatticeGrad lg = TransducerGrad(lat, res.occupancy);
  if (latency.alpha != 1.0) lg = ScaleBlankGradient(std::move(lg), latency.alpha);
  const Eigen::Index N = s.z.rows();
  RowMatrix dblank(N, 1), dlogits(N, K);
  for (Eigen::Index n = 0; n < N; ++n) {
    dblank(n, 0) = weight * lg.blank[n];
    for (int k = 0; k < K; ++k) dlogits(n, k) = weight * lg.label(n, k);
  }

  ModelParams &g = *grads;
  const RowMatrix dspk = dlogits * profiles;
  AccumulateWeight(dblank, s.z, &g.sid_blank_w);
  AccumulateBias(dblank, &g.sid_blank_b);
  AccumulateWeight(dspk, s.z, &g.sid_spk_w);
  AccumulateBias(dspk, &g.sid_spk_b);
  const RowMatrix dz = dblank * p.sid_blank_w.matrix() + dspk * p.sid_spk_w.matrix();
  const RowMatrix dpre = TanhDeriv(s.z, dz);

  RowMatrix da, db;
  JointHiddenBackward(dpre, T, 2, &da, &db);
  AccumulateWeight(da, s.enc, &g.sid_joint_enc_w);
  AccumulateWeight(db, p.sid_embed.matrix(), &g.sid_joint_pred_w);
  AccumulateBias(db, &g.sid_joint_b);
  g.sid_embed.matrix() += db * p.sid_joint_pred_w.matrix();

  RowMatrix dh = nn::GruBackward(p.sid_enc, s.enc_cache, da * p.sid_joint_enc_w.matrix(), &g.sid_enc);
  if (dfeats) *dfeats = std::move(dh);
  return res.loss;
}

double PitLoss(const double m[2][2]) {
  return std::min(m[0][0] + m[1][1], m[0][1] + m[1][0]);
}

LossValue JointLoss(const ModelParams &p, const ModelConfig &config, const Example &ex,
                    const LossOptions &options, ModelParams *grads) {
  if (!(options.lambda >= 0.0)) Fail(ErrorKind::kInvalidConfig, "lambda must be >= 0");
  options.latency.Validate();
  if (ex.s1 == ex.s2) Fail(ErrorKind::kUnknownSpeaker, "the two talkers share inventory entry ", ex.s1);
  for (int s : {ex.s1, ex.s2})
    if (s < 0 || s >= ex.inventory.size())
      Fail(ErrorKind::kUnknownSpeaker, "speaker index ", s, " outside the inventory");

  UnmixCache cache;
  const UnmixOutput un = Unmix(p, config, ex.x, &cache);

  LossValue v;
  const std::vector<int> *labels[2] = {&ex.y1, &ex.y2};
  if (options.use_asr && options.assignment == Assignment::kPit) {
    double m[2][2];
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        m[i][j] = AsrStreamLoss(p, config, un.stream[i], *labels[j], 1.0, nullptr, nullptr);
    v.swapped = m[0][1] + m[1][0] < m[0][0] + m[1][1];
  }
  // Stream i carries talker order[i].
  const int order[2] = {v.swapped ? 1 : 0, v.swapped ? 0 : 1};
  const int speakers[2] = {ex.s1, ex.s2};
  const int delays[2] = {0, ex.t_delay2};

  RowMatrix dstream[2];
  for (int i = 0; i < 2; ++i) dstream[i] = RowMatrix::Zero(un.stream[i].rows(), un.stream[i].cols());

  for (int i = 0; i < 2; ++i) {
    RowMatrix d;
    if (options.use_asr) {
      v.asr_stream[i] = AsrStreamLoss(p, config, un.stream[i], *labels[order[i]], 1.0, grads,
                                      grads ? &d : nullptr);
      if (grads) dstream[i] += d;
    }
    if (options.lambda > 0.0) {
      LatencyConfig lc = options.latency;
      if (!options.penalize) lc.beta = 0.0;
      lc.t_delay = delays[order[i]];
      v.sid_stream[i] = SidStreamLoss(p, config, un.stream[i], ex.inventory, speakers[order[i]],
                                      lc, options.lambda, grads, grads ? &d : nullptr);
      if (grads) dstream[i] += d;
    }
  }
  v.asr = v.asr_stream[0] + v.asr_stream[1];
  v.sid = v.sid_stream[0] + v.sid_stream[1];
  v.joint = v.asr + options.lambda * v.sid;

  if (grads && options.backprop_unmix)
    UnmixBackward(p, config, un, cache, dstream[0], dstream[1], grads);
  return v;
}

}  // namespace mtt
