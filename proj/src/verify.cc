// src/verify.cc
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

#include "mtt/verify.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>

#include "mtt/error.h"
#include "mtt/lattice.h"
#include "mtt/layers.h"
#include "mtt/model.h"
#include "mtt/oracle.h"
#include "mtt/train.h"

namespace mtt {

bool VerifyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck &c) { return c.passed; });
}

namespace {

std::string Format(const char *fmt, double a, double b = 0.0) {
  char buf[200];
  std::snprintf(buf, sizeof(buf), fmt, a, b);
  return buf;
}

AlignmentLattice RandomLattice(std::mt19937_64 &rng, TransducerMode mode, int T, int U, int K,
                               double scale) {
  std::uniform_int_distribution<int> pick(0, K - 1);
  std::vector<int> y(U);
  for (int &v : y) v = pick(rng);
  AlignmentLattice lat(mode, T, y, K);
  std::normal_distribution<double> g(0.0, scale);
  for (int t = 0; t < T; ++t)
    for (int u = 0; u <= U; ++u) {
      lat.blank_logit(t, u) = g(rng);
      for (double &v : lat.label_logits(t, u)) v = g(rng);
    }
  return lat;
}

// Worst relative error over coordinates where either value exceeds 1e-8.
double WorstRelative(const std::vector<double> &a, const std::vector<double> &n) {
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i]) <= 1e-8 && std::abs(n[i]) <= 1e-8) continue;
    worst = std::max(worst, RelativeError(a[i], n[i]));
  }
  return worst;
}

std::vector<double> LatticeParams(const AlignmentLattice &lat) {
  std::vector<double> p = lat.blank_logits();
  p.insert(p.end(), lat.all_label_logits().begin(), lat.all_label_logits().end());
  return p;
}

void SetLatticeParams(AlignmentLattice *lat, std::span<const double> p) {
  size_t j = 0;
  for (int t = 0; t < lat->num_frames(); ++t)
    for (int u = 0; u <= lat->num_targets(); ++u) lat->blank_logit(t, u) = p[j++];
  for (int t = 0; t < lat->num_frames(); ++t)
    for (int u = 0; u <= lat->num_targets(); ++u)
      for (double &v : lat->label_logits(t, u)) v = p[j++];
}

ModelConfig TinyModel() {
  ModelConfig c;
  c.input_dim = 6;
  c.freq_bands = 0;
  c.unmix_channels = 3;
  c.unmix_kernel = 2;
  c.vocab_size = 3;
  c.asr_hidden = 3;
  c.label_embed = 2;
  c.pred_hidden = 3;
  c.joint_dim = 3;
  c.sid_hidden = 3;
  c.sid_embed = 2;
  c.sid_joint = 3;
  c.spk_dim = 2;
  return c;
}

Example TinyExample(std::mt19937_64 &rng, const ModelConfig &c, int T, int u1, int u2) {
  Example ex;
  ex.id = "verify";
  std::normal_distribution<double> g(0.0, 1.0);
  ex.x.resize(T, c.input_dim);
  for (Eigen::Index i = 0; i < ex.x.size(); ++i) ex.x.data()[i] = g(rng);
  std::uniform_int_distribution<int> tok(0, c.vocab_size - 1);
  for (int i = 0; i < u1; ++i) ex.y1.push_back(tok(rng));
  for (int i = 0; i < u2; ++i) ex.y2.push_back(tok(rng));
  const int K = 3;
  std::vector<double> emb;
  for (int k = 0; k < K; ++k) {
    std::vector<double> v(c.spk_dim);
    double n = 0.0;
    for (double &x : v) {
      x = g(rng);
      n += x * x;
    }
    for (double x : v) emb.push_back(x / std::sqrt(n));
  }
  ex.inventory = SpeakerInventory({10, 11, 12}, c.spk_dim, emb);
  ex.s1 = 0;
  ex.s2 = 2;
  ex.t_delay2 = 1;
  return ex;
}

}  // namespace

VerifyCheck CheckLossEquivalence(const VerifyBounds &b) {
  VerifyCheck c{"loss_equivalence", false, 0.0, ""};
  std::mt19937_64 rng(b.seed);
  std::uniform_int_distribution<int> pt(1, b.max_frames), pu(0, b.max_targets),
      pk(1, b.max_labels);
  int count = 0;
  for (int i = 0; i < b.num_lattices; ++i) {
    const TransducerMode mode = i % 2 ? TransducerMode::kHat : TransducerMode::kRnnt;
    AlignmentLattice lat = RandomLattice(rng, mode, pt(rng), pu(rng), pk(rng), 2.0);
    if (mode == TransducerMode::kHat && i % 4 == 1) {
      LatencyConfig lc;
      lc.beta = 0.5;
      lc.t_buffer = 1;
      lat = ApplyLatencyPenalty(lat, lc);
    }
    const double fb = TransducerLoss(lat).loss;
    const double en = EnumerateLoss(lat);
    c.worst = std::max(c.worst, RelativeError(fb, en));
    ++count;
  }
  c.passed = c.worst <= 1e-9;
  c.detail = Format("%.0f lattices, worst relative difference %.3g (tolerance 1e-9)", count, c.worst);
  return c;
}

VerifyCheck CheckLatticeGradients(const VerifyBounds &b) {
  VerifyCheck c{"lattice_gradients", false, 0.0, ""};
  std::mt19937_64 rng(b.seed + 1);
  int count = 0;
  for (int i = 0; i < 200; ++i) {
    const TransducerMode mode = i % 3 == 0 ? TransducerMode::kRnnt : TransducerMode::kHat;
    // Unit-variance logits: wider ones create node occupancies near 1e-8,
    // below what a 1e-5 central difference resolves in double precision.
    AlignmentLattice lat = RandomLattice(rng, mode, 1 + i % 4, i % 3, 1 + i % 3, 1.0);
    if (i % 3 == 2) {
      LatencyConfig lc;
      lc.beta = 0.8;
      lc.t_buffer = 1;
      lat = ApplyLatencyPenalty(lat, lc);
    }
    const TransducerResult r = TransducerLoss(lat);
    const LatticeGrad g = TransducerGrad(lat, r.occupancy);
    std::vector<double> analytic = g.blank;
    analytic.insert(analytic.end(), g.labels.begin(), g.labels.end());
    auto f = [&lat](std::span<const double> p) {
      AlignmentLattice l = lat;
      SetLatticeParams(&l, p);
      return TransducerLoss(l).loss;
    };
    const auto numeric = FiniteDiff(f, LatticeParams(lat), 1e-5);
    c.worst = std::max(c.worst, WorstRelative(analytic, numeric));
    ++count;
  }
  c.passed = c.worst < 1e-4;
  c.detail = Format("%.0f lattices, worst relative error %.3g (tolerance 1e-4)", count, c.worst);
  return c;
}

VerifyCheck CheckNeuralGradients(const VerifyBounds &b) {
  VerifyCheck c{"neural_gradients", false, 0.0, ""};
  std::mt19937_64 rng(b.seed + 2);
  std::normal_distribution<double> g(0.0, 0.7);
  auto random = [&](int r, int k) {
    RowMatrix m(r, k);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    return m;
  };
  auto tensor = [&](std::vector<int> shape) {
    Tensor t(std::move(shape));
    for (double &v : t.values()) v = g(rng);
    return t;
  };
  // Packs the listed buffers, perturbs them through FiniteDiff and compares
  // against the analytic vector-Jacobian product.
  auto check = [&](std::vector<std::span<double>> parts, const std::function<double()> &loss,
                   const std::vector<double> &analytic) {
    std::vector<double> p0;
    for (auto s : parts) p0.insert(p0.end(), s.begin(), s.end());
    auto set = [&parts](std::span<const double> p) {
      size_t j = 0;
      for (auto s : parts)
        for (double &v : s) v = p[j++];
    };
    auto f = [&](std::span<const double> p) {
      set(p);
      return loss();
    };
    const auto numeric = FiniteDiff(f, p0, 1e-5);
    set(p0);
    c.worst = std::max(c.worst, WorstRelative(analytic, numeric));
  };
  auto span = [](RowMatrix &m) { return std::span<double>(m.data(), m.size()); };
  auto dot = [](const RowMatrix &a, const RowMatrix &r) { return (a.array() * r.array()).sum(); };
  auto append = [](std::vector<double> *v, const double *d, size_t n) { v->insert(v->end(), d, d + n); };

  {
    RowMatrix x = random(3, 4);
    Tensor w = tensor({2, 4}), bias = tensor({2});
    const RowMatrix r = random(3, 2);
    Tensor dw = w.ZerosLike(), db = bias.ZerosLike();
    const RowMatrix dx = nn::LinearBackward(x, w, r, &dw, &db);
    std::vector<double> a;
    append(&a, dx.data(), dx.size());
    append(&a, dw.data(), dw.size());
    append(&a, db.data(), db.size());
    check({span(x), w.values(), bias.values()}, [&] { return dot(nn::LinearForward(x, w, bias), r); }, a);
  }
  for (int op = 0; op < 3; ++op) {
    RowMatrix x = random(2, 5);
    const RowMatrix r = random(2, 5);
    auto fwd = [&](const RowMatrix &v) {
      return op == 0 ? nn::Sigmoid(v) : op == 1 ? nn::Tanh(v) : nn::Softmax(v);
    };
    const RowMatrix y = fwd(x);
    const RowMatrix dx = op == 0 ? nn::SigmoidBackward(y, r)
                         : op == 1 ? nn::TanhBackward(y, r)
                                   : nn::SoftmaxBackward(y, r);
    std::vector<double> a(dx.data(), dx.data() + dx.size());
    check({span(x)}, [&] { return dot(fwd(x), r); }, a);
  }
  {
    RowMatrix x = random(5, 2);
    Tensor w = tensor({3, 2, 2}), bias = tensor({3});
    const RowMatrix r = random(5, 3);
    Tensor dw = w.ZerosLike(), db = bias.ZerosLike();
    const RowMatrix dx = nn::Conv1dBackward(x, w, r, &dw, &db);
    std::vector<double> a;
    append(&a, dx.data(), dx.size());
    append(&a, dw.data(), dw.size());
    append(&a, db.data(), db.size());
    check({span(x), w.values(), bias.values()}, [&] { return dot(nn::Conv1dForward(x, w, bias), r); }, a);
  }
  {
    Tensor table = tensor({4, 3});
    const std::vector<int> ids = {2, 0, 2};
    const RowMatrix r = random(3, 3);
    Tensor dt = table.ZerosLike();
    nn::EmbedBackward(ids, r, &dt);
    std::vector<double> a(dt.values().begin(), dt.values().end());
    check({table.values()}, [&] { return dot(nn::EmbedForward(table, ids), r); }, a);
  }
  {
    RowMatrix x = random(5, 2);
    const RowMatrix r = random(3, 4);
    const RowMatrix dx = nn::StackFramesBackward(r, 5, 2);
    std::vector<double> a(dx.data(), dx.data() + dx.size());
    check({span(x)}, [&] { return dot(nn::StackFrames(x, 2), r); }, a);
  }
  {
    nn::GruParams p{tensor({9, 2}), tensor({9, 3}), tensor({9})};
    RowMatrix x = random(4, 2);
    const RowMatrix r = random(4, 3);
    nn::GruSequenceCache cache;
    nn::GruForward(p, x, &cache);
    nn::GruParams gp = p.ZerosLike();
    const RowMatrix dx = nn::GruBackward(p, cache, r, &gp);
    std::vector<double> a;
    append(&a, dx.data(), dx.size());
    append(&a, gp.wx.data(), gp.wx.size());
    append(&a, gp.wh.data(), gp.wh.size());
    append(&a, gp.b.data(), gp.b.size());
    check({span(x), p.wx.values(), p.wh.values(), p.b.values()},
          [&] { return dot(nn::GruForward(p, x), r); }, a);
  }
  c.passed = c.worst < 1e-5;
  c.detail = Format("linear, sigmoid, tanh, softmax, conv1d, embed, stack, recurrent; worst "
                    "relative error %.3g (tolerance 1e-5)", c.worst);
  return c;
}

VerifyCheck CheckJointGradient(const VerifyBounds &b) {
  VerifyCheck c{"joint_gradient", false, 0.0, ""};
  std::mt19937_64 rng(b.seed + 3);
  const ModelConfig mc = TinyModel();
  int coords = 0;
  for (int trial = 0; trial < 2; ++trial) {
    ModelParams p = InitParams(mc, b.seed + trial);
    std::normal_distribution<double> g(0.0, 0.3);
    p.Visit([&](const std::string &name, Tensor &t) {
      if (name.ends_with(".b"))
        for (double &v : t.values()) v += g(rng);
    });
    const Example ex = TinyExample(rng, mc, 4 + trial, 1, 1 + trial);
    LossOptions opt;
    if (trial == 1) {
      opt.latency.beta = 0.5;
      opt.latency.t_buffer = 1;
    }
    ModelParams grads = p.ZerosLike();
    JointLoss(p, mc, ex, opt, &grads);
    auto f = [&](std::span<const double> v) {
      ModelParams q = p;
      q.Unflatten(v);
      return JointLoss(q, mc, ex, opt).joint;
    };
    const auto numeric = FiniteDiff(f, p.Flatten(), kModelFiniteDiffStep);
    c.worst = std::max(c.worst, WorstRelative(grads.Flatten(), numeric));
    coords += static_cast<int>(numeric.size());
  }
  c.passed = c.worst < 1e-3;
  c.detail = Format("%.0f parameter coordinates, worst relative error %.3g (tolerance 1e-3)",
                    coords, c.worst);
  return c;
}

VerifyCheck CheckNormalization(const VerifyBounds &b) {
  VerifyCheck c{"normalization", false, 0.0, ""};
  std::mt19937_64 rng(b.seed + 4);
  std::normal_distribution<double> g(0.0, 5.0);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> labels(1 + i % 6);
    for (double &v : labels) v = g(rng);
    const double blank = g(rng);
    for (TransducerMode mode : {TransducerMode::kRnnt, TransducerMode::kHat}) {
      const NodeLogProbs lp = mode == TransducerMode::kRnnt ? RnntNodeLogProbs(blank, labels)
                                                            : HatNodeLogProbs(blank, labels);
      double sum = std::exp(lp.blank);
      for (double v : lp.labels) sum += std::exp(v);
      c.worst = std::max(c.worst, std::abs(sum - 1.0));
    }
    // b + (1 - b) sum_k P(k) with P from the speaker posterior.
    const double bprob = 1.0 / (1.0 + std::exp(-blank));
    double psum = 0.0;
    double mx = *std::max_element(labels.begin(), labels.end()), z = 0.0;
    for (double v : labels) z += std::exp(v - mx);
    for (double v : labels) psum += std::exp(v - mx) / z;
    c.worst = std::max(c.worst, std::abs(bprob + (1.0 - bprob) * psum - 1.0));
  }
  c.passed = c.worst <= 1e-12;
  c.detail = Format("2000 node distributions, worst |sum - 1| = %.3g (tolerance 1e-12)", c.worst);
  return c;
}

VerifyCheck CheckConservation(const VerifyBounds &b) {
  VerifyCheck c{"stream_conservation", false, 0.0, ""};
  std::mt19937_64 rng(b.seed + 5);
  ModelConfig mc = TinyModel();
  int passes = 0;
  for (int i = 0; i < 200; ++i) {
    mc.mask_context = i % 2 == 0;
    const ModelParams p = InitParams(mc, b.seed + i);
    const Example ex = TinyExample(rng, mc, 1 + i % 7, 1, 1);
    const UnmixOutput out = Unmix(p, mc, ex.x);
    c.worst = std::max(c.worst, (out.h1 + out.h2 - out.h).cwiseAbs().maxCoeff());
    if (!(out.m.minCoeff() > 0.0 && out.m.maxCoeff() < 1.0)) c.worst = 1.0;
    ++passes;
  }
  c.passed = c.worst == 0.0;
  c.detail = Format("%.0f unmix passes, max |h1 + h2 - h| = %.3g (must be 0)", passes, c.worst);
  return c;
}

VerifyCheck CheckPitBound(const VerifyBounds &b) {
  VerifyCheck c{"pit_bound", false, 0.0, ""};
  std::mt19937_64 rng(b.seed + 6);
  const ModelConfig mc = TinyModel();
  const ModelParams p = InitParams(mc, b.seed);
  LossOptions heat, pit;
  heat.lambda = pit.lambda = 0.0;
  pit.assignment = Assignment::kPit;
  int violations = 0;
  for (int i = 0; i < b.num_composition; ++i) {
    const Example ex = TinyExample(rng, mc, 2 + i % 4, i % 3, (i / 3) % 3);
    const double h = JointLoss(p, mc, ex, heat).asr;
    const double q = JointLoss(p, mc, ex, pit).asr;
    if (q > h) ++violations;
    c.worst = std::max(c.worst, q - h);
  }
  c.passed = violations == 0;
  c.detail = Format("%.0f instances, %.0f with PIT above HEAT", b.num_composition, violations);
  return c;
}

VerifyCheck CheckJointLinearity(const VerifyBounds &b) {
  VerifyCheck c{"joint_linearity", false, 0.0, ""};
  std::mt19937_64 rng(b.seed + 7);
  const ModelConfig mc = TinyModel();
  for (int i = 0; i < 20; ++i) {
    const ModelParams p = InitParams(mc, b.seed + i);
    const Example ex = TinyExample(rng, mc, 3 + i % 4, 1 + i % 2, i % 3);
    LossOptions joint;
    joint.lambda = 10.0;
    joint.latency.alpha = i % 2 ? 0.6 : 1.0;
    joint.latency.beta = i % 3 ? 0.0 : 1.0;
    LossOptions asr = joint, sid = joint;
    asr.lambda = 0.0;
    sid.use_asr = false;
    sid.lambda = 1.0;
    ModelParams gj = p.ZerosLike(), ga = p.ZerosLike(), gs = p.ZerosLike();
    JointLoss(p, mc, ex, joint, &gj);
    JointLoss(p, mc, ex, asr, &ga);
    JointLoss(p, mc, ex, sid, &gs);
    const auto vj = gj.Flatten(), va = ga.Flatten(), vs = gs.Flatten();
    for (size_t k = 0; k < vj.size(); ++k)
      c.worst = std::max(c.worst, std::abs(vj[k] - (va[k] + joint.lambda * vs[k])) /
                                      std::max(1.0, std::abs(vj[k])));
  }
  c.passed = c.worst <= 1e-9;
  c.detail = Format("20 instances, worst |g_joint - (g_asr + lambda g_sid)| = %.3g "
                    "(tolerance 1e-9)", c.worst);
  return c;
}

VerifyCheck CheckLambdaZero(const VerifyBounds &b) {
  VerifyCheck c{"lambda_zero", false, 0.0, ""};
  std::mt19937_64 rng(b.seed + 8);
  const ModelConfig mc = TinyModel();
  std::vector<Example> data;
  for (int i = 0; i < 6; ++i) data.push_back(TinyExample(rng, mc, 4, 2, 1));
  ModelParams p = InitParams(mc, b.seed);
  const ModelParams before = p;
  TrainConfig tc;
  tc.lambda = 0.0;
  tc.epochs = 2;
  tc.batch_size = 2;
  Train(&p, mc, data, tc);
  bool sid_same = true, asr_moved = false;
  std::vector<const Tensor *> now;
  p.Visit([&](const std::string &, const Tensor &t) { now.push_back(&t); });
  size_t i = 0;
  before.Visit([&](const std::string &name, const Tensor &t) {
    const bool same = *now[i++] == t;
    if (IsSidTensor(name)) sid_same = sid_same && same;
    else if (!same) asr_moved = true;
  });
  c.passed = sid_same && asr_moved;
  c.detail = sid_same ? (asr_moved ? "speaker tensors bit-identical after 6 steps, recognition "
                                     "tensors updated"
                                   : "recognition tensors did not move")
                      : "a speaker tensor changed";
  return c;
}

VerifyReport RunVerification(const VerifyBounds &b) {
  if (b.max_frames < 1 || b.max_targets < 0 || b.max_labels < 1 ||
      b.max_frames - 1 + b.max_targets > kMaxEnumerationMoves)
    Fail(ErrorKind::kInvalidConfig, "verification bounds outside the enumerable range");
  VerifyReport r;
  r.checks.push_back(CheckLossEquivalence(b));
  r.checks.push_back(CheckLatticeGradients(b));
  r.checks.push_back(CheckNeuralGradients(b));
  r.checks.push_back(CheckJointGradient(b));
  r.checks.push_back(CheckNormalization(b));
  r.checks.push_back(CheckConservation(b));
  r.checks.push_back(CheckPitBound(b));
  r.checks.push_back(CheckJointLinearity(b));
  r.checks.push_back(CheckLambdaZero(b));
  return r;
}

}  // namespace mtt
