// src/lattice.cc
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

#include "mtt/lattice.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "mtt/error.h"

namespace mtt {

namespace {

constexpr double kLogZero = -std::numeric_limits<double>::infinity();

double Softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double LogSumExp(std::span<const double> v) {
  double m = kLogZero;
  for (double x : v) m = std::max(m, x);
  if (m == kLogZero) return kLogZero;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

void CheckNodeFinite(double blank_logit, std::span<const double> label_logits) {
  if (!std::isfinite(blank_logit))
    Fail(ErrorKind::kInvalidInput, "non-finite blank logit");
  for (double v : label_logits)
    if (!std::isfinite(v)) Fail(ErrorKind::kInvalidInput, "non-finite label logit");
}

// Arc log-probabilities of a whole lattice, penalty included. Entries for
// arcs that leave the grid are -inf.
struct ArcScores {
  std::vector<double> blank;
  std::vector<double> label;
};

ArcScores ComputeArcScores(const AlignmentLattice &lat) {
  const int T = lat.num_frames(), U = lat.num_targets();
  ArcScores arcs;
  arcs.blank.assign(lat.num_nodes(), kLogZero);
  arcs.label.assign(lat.num_nodes(), kLogZero);
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u <= U; ++u) {
      size_t i = lat.Index(t, u);
      std::span<const double> ll = lat.label_logits(t, u);
      double z = lat.blank_logit(t, u);
      double log_blank, log_label_mass, lse;
      if (lat.mode() == TransducerMode::kRnnt) {
        double m = z;
        for (double v : ll) m = std::max(m, v);
        double s = std::exp(z - m);
        for (double v : ll) s += std::exp(v - m);
        lse = m + std::log(s);
        log_blank = z - lse;
        log_label_mass = 0.0;
      } else {
        lse = LogSumExp(ll);
        log_blank = -Softplus(-z);
        log_label_mass = -Softplus(z);
      }
      if (t + 1 < T) arcs.blank[i] = log_blank;
      if (u < U) {
        arcs.label[i] = log_label_mass + ll[lat.targets()[u]] - lse -
                        lat.label_penalty(t, u);
      }
    }
  }
  return arcs;
}

}  // namespace

double LogAdd(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == kLogZero) return a;
  return a + std::log1p(std::exp(b - a));
}

NodeLogProbs RnntNodeLogProbs(double blank_logit,
                              std::span<const double> label_logits) {
  CheckNodeFinite(blank_logit, label_logits);
  double m = blank_logit;
  for (double v : label_logits) m = std::max(m, v);
  double s = std::exp(blank_logit - m);
  for (double v : label_logits) s += std::exp(v - m);
  const double lse = m + std::log(s);
  NodeLogProbs out;
  out.blank = blank_logit - lse;
  out.labels.reserve(label_logits.size());
  for (double v : label_logits) out.labels.push_back(v - lse);
  return out;
}

NodeLogProbs HatNodeLogProbs(double blank_logit,
                             std::span<const double> label_logits) {
  CheckNodeFinite(blank_logit, label_logits);
  if (label_logits.empty())
    Fail(ErrorKind::kInvalidInput, "HAT node needs at least one label");
  const double lse = LogSumExp(label_logits);
  const double log_not_blank = -Softplus(blank_logit);
  NodeLogProbs out;
  out.blank = -Softplus(-blank_logit);
  out.labels.reserve(label_logits.size());
  for (double v : label_logits) out.labels.push_back(log_not_blank + v - lse);
  return out;
}

std::vector<double> SpeakerPosterior(std::span<const double> z,
                                     const SpeakerInventory &inventory) {
  if (inventory.size() == 0) Fail(ErrorKind::kEmptyInventory, "inventory has K=0");
  if (static_cast<int>(z.size()) != inventory.dim())
    Fail(ErrorKind::kShape, "joint output has dimension ", z.size(),
         ", profiles have ", inventory.dim());
  const int K = inventory.size();
  std::vector<double> scores(K);
  for (int k = 0; k < K; ++k) {
    std::span<const double> d = inventory.embedding(k);
    double dot = 0.0;
    for (size_t i = 0; i < z.size(); ++i) dot += d[i] * z[i];
    scores[k] = dot;
  }
  const double m = *std::max_element(scores.begin(), scores.end());
  double s = 0.0;
  for (double &v : scores) {
    v = std::exp(v - m);
    s += v;
  }
  for (double &v : scores) v /= s;
  return scores;
}

void LatencyConfig::Validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0))
    Fail(ErrorKind::kInvalidConfig, "alpha must lie in (0, 1], got ", alpha);
  if (!(beta >= 0.0) || !std::isfinite(beta))
    Fail(ErrorKind::kInvalidConfig, "beta must be >= 0, got ", beta);
  if (t_buffer < 0) Fail(ErrorKind::kInvalidConfig, "t_buffer must be >= 0");
  if (t_delay < 0) Fail(ErrorKind::kInvalidConfig, "t_delay must be >= 0");
}

AlignmentLattice::AlignmentLattice(TransducerMode mode, int num_frames,
                                   std::vector<int> targets, int num_labels)
    : mode_(mode),
      num_frames_(num_frames),
      num_labels_(num_labels),
      targets_(std::move(targets)) {
  if (num_frames_ < 1) Fail(ErrorKind::kShape, "lattice needs T >= 1");
  if (num_labels_ < 1) Fail(ErrorKind::kShape, "lattice needs at least one label");
  for (int y : targets_)
    if (y < 0 || y >= num_labels_)
      Fail(ErrorKind::kInvalidLabel, "target ", y, " outside [0, ", num_labels_, ")");
  const size_t n = static_cast<size_t>(num_frames_) * (targets_.size() + 1);
  blank_.assign(n, 0.0);
  labels_.assign(n * num_labels_, 0.0);
  penalty_.assign(n, 0.0);
}

void AlignmentLattice::SetNode(int t, int u, const NodeLogits &node) {
  if (static_cast<int>(node.label_logits.size()) != num_labels_)
    Fail(ErrorKind::kShape, "node has ", node.label_logits.size(),
         " label logits, lattice expects ", num_labels_);
  CheckNodeFinite(node.blank_logit, node.label_logits);
  blank_logit(t, u) = node.blank_logit;
  std::copy(node.label_logits.begin(), node.label_logits.end(),
            label_logits(t, u).begin());
}

NodeLogits AlignmentLattice::Node(int t, int u) const {
  std::span<const double> ll = label_logits(t, u);
  return NodeLogits{blank_logit(t, u), std::vector<double>(ll.begin(), ll.end())};
}

void AlignmentLattice::CheckFinite() const {
  for (double v : blank_)
    if (!std::isfinite(v)) Fail(ErrorKind::kInvalidInput, "non-finite blank logit");
  for (double v : labels_)
    if (!std::isfinite(v)) Fail(ErrorKind::kInvalidInput, "non-finite label logit");
  for (double v : penalty_)
    if (!std::isfinite(v)) Fail(ErrorKind::kInvalidInput, "non-finite label penalty");
}

uint64_t AlignmentLattice::Fingerprint() const {
  uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void *p, size_t n) {
    const unsigned char *b = static_cast<const unsigned char *>(p);
    for (size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  int header[3] = {static_cast<int>(mode_), num_frames_, num_labels_};
  mix(header, sizeof(header));
  mix(targets_.data(), targets_.size() * sizeof(int));
  mix(blank_.data(), blank_.size() * sizeof(double));
  mix(labels_.data(), labels_.size() * sizeof(double));
  mix(penalty_.data(), penalty_.size() * sizeof(double));
  return h;
}

TransducerResult TransducerLoss(const AlignmentLattice &lat) {
  lat.CheckFinite();
  const int T = lat.num_frames(), U = lat.num_targets();
  for (int y : lat.targets())
    if (y < 0 || y >= lat.num_labels())
      Fail(ErrorKind::kInvalidLabel, "target ", y, " outside vocabulary");
  const ArcScores arcs = ComputeArcScores(lat);

  TransducerResult res;
  LatticeOccupancy &occ = res.occupancy;
  occ.num_frames = T;
  occ.num_targets = U;
  occ.log_alpha.assign(lat.num_nodes(), kLogZero);
  occ.log_beta.assign(lat.num_nodes(), kLogZero);

  std::vector<double> &a = occ.log_alpha;
  a[0] = 0.0;
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u <= U; ++u) {
      if (t == 0 && u == 0) continue;
      double v = kLogZero;
      if (t > 0) v = a[lat.Index(t - 1, u)] + arcs.blank[lat.Index(t - 1, u)];
      if (u > 0) v = LogAdd(v, a[lat.Index(t, u - 1)] + arcs.label[lat.Index(t, u - 1)]);
      a[lat.Index(t, u)] = v;
    }
  }

  std::vector<double> &b = occ.log_beta;
  b[lat.Index(T - 1, U)] = 0.0;
  for (int t = T - 1; t >= 0; --t) {
    for (int u = U; u >= 0; --u) {
      if (t == T - 1 && u == U) continue;
      size_t i = lat.Index(t, u);
      double v = kLogZero;
      if (t + 1 < T) v = b[lat.Index(t + 1, u)] + arcs.blank[i];
      if (u < U) v = LogAdd(v, b[lat.Index(t, u + 1)] + arcs.label[i]);
      b[i] = v;
    }
  }

  const double log_p = a[lat.Index(T - 1, U)];
  occ.log_likelihood = log_p;
  res.loss = -log_p;

  occ.blank_posterior.assign(lat.num_nodes(), 0.0);
  occ.label_posterior.assign(lat.num_nodes(), 0.0);
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u <= U; ++u) {
      size_t i = lat.Index(t, u);
      if (t + 1 < T)
        occ.blank_posterior[i] =
            std::exp(a[i] + arcs.blank[i] + b[lat.Index(t + 1, u)] - log_p);
      if (u < U)
        occ.label_posterior[i] =
            std::exp(a[i] + arcs.label[i] + b[lat.Index(t, u + 1)] - log_p);
    }
  }
  occ.fingerprint = lat.Fingerprint();
  return res;
}

LatticeGrad TransducerGrad(const AlignmentLattice &lat,
                           const LatticeOccupancy &occ) {
  if (occ.num_frames != lat.num_frames() || occ.num_targets != lat.num_targets() ||
      occ.blank_posterior.size() != lat.num_nodes() ||
      occ.fingerprint != lat.Fingerprint())
    Fail(ErrorKind::kConsistency,
         "occupancy does not belong to this lattice (was it modified?)");
  const int T = lat.num_frames(), U = lat.num_targets(), L = lat.num_labels();
  LatticeGrad g;
  g.num_frames = T;
  g.num_targets = U;
  g.num_labels = L;
  g.blank.assign(lat.num_nodes(), 0.0);
  g.labels.assign(lat.num_nodes() * L, 0.0);

  std::vector<double> p(L);
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u <= U; ++u) {
      const size_t i = lat.Index(t, u);
      const double ob = occ.blank_posterior[i], ol = occ.label_posterior[i];
      const double on = ob + ol;
      if (on == 0.0) continue;
      std::span<const double> ll = lat.label_logits(t, u);
      const double z = lat.blank_logit(t, u);
      if (lat.mode() == TransducerMode::kRnnt) {
        double m = z;
        for (double v : ll) m = std::max(m, v);
        double pb = std::exp(z - m), s = pb;
        for (int k = 0; k < L; ++k) s += (p[k] = std::exp(ll[k] - m));
        g.blank[i] = on * pb / s - ob;
        for (int k = 0; k < L; ++k) g.label(i, k) = on * p[k] / s;
      } else {
        const double bprob = 1.0 / (1.0 + std::exp(-z));
        g.blank[i] = -ob * (1.0 - bprob) + ol * bprob;
        double m = ll[0];
        for (double v : ll) m = std::max(m, v);
        double s = 0.0;
        for (int k = 0; k < L; ++k) s += (p[k] = std::exp(ll[k] - m));
        for (int k = 0; k < L; ++k) g.label(i, k) = ol * p[k] / s;
      }
      if (u < U) g.label(i, lat.targets()[u]) -= ol;
    }
  }
  return g;
}

LatticeGrad ScaleBlankGradient(LatticeGrad grad, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    Fail(ErrorKind::kInvalidConfig, "alpha must lie in (0, 1], got ", alpha);
  if (alpha == 1.0) return grad;
  for (double &v : grad.blank) v *= alpha;
  return grad;
}

AlignmentLattice ApplyLatencyPenalty(const AlignmentLattice &lat,
                                     const LatencyConfig &cfg) {
  cfg.Validate();
  if (lat.mode() != TransducerMode::kHat)
    Fail(ErrorKind::kInvalidInput, "latency penalty applies to HAT lattices only");
  AlignmentLattice out = lat;
  if (cfg.beta == 0.0) return out;
  for (int t = 0; t < lat.num_frames(); ++t) {
    const double frame = t + 1;
    const double pen = std::max(0.0, cfg.beta * (frame - cfg.t_buffer - cfg.t_delay));
    if (pen == 0.0) continue;
    for (int u = 0; u <= lat.num_targets(); ++u)
      out.set_label_penalty(t, u, lat.label_penalty(t, u) + pen);
  }
  return out;
}

}  // namespace mtt
