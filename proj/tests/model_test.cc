// tests/model_test.cc
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

#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "mtt/error.h"
#include "mtt/model.h"
#include "mtt/oracle.h"
#include "mtt/verify.h"

namespace mtt {
namespace {

ModelConfig TinyConfig() {
  ModelConfig c;
  c.input_dim = 6;
  c.freq_bands = 0;
  c.unmix_channels = 3;
  c.unmix_kernel = 2;
  c.vocab_size = 3;
  c.asr_hidden = 3;
  c.asr_layers = 2;
  c.label_embed = 2;
  c.pred_hidden = 3;
  c.joint_dim = 3;
  c.sid_hidden = 3;
  c.sid_embed = 2;
  c.sid_joint = 3;
  c.spk_dim = 2;
  return c;
}

SpeakerInventory RandomInventory(std::mt19937_64 &rng, int k, int dim) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<int> labels;
  std::vector<double> emb;
  for (int i = 0; i < k; ++i) {
    labels.push_back(100 + i);
    std::vector<double> v(dim);
    double n = 0.0;
    for (double &x : v) {
      x = g(rng);
      n += x * x;
    }
    for (double &x : v) emb.push_back(x / std::sqrt(n));
  }
  return SpeakerInventory(labels, dim, emb);
}

Example RandomExample(std::mt19937_64 &rng, const ModelConfig &c, int T, int u1, int u2,
                      int k = 3) {
  Example ex;
  ex.id = "x";
  std::normal_distribution<double> g(0.0, 1.0);
  ex.x.resize(T, c.input_dim);
  for (int i = 0; i < ex.x.size(); ++i) ex.x.data()[i] = g(rng);
  std::uniform_int_distribution<int> tok(0, c.vocab_size - 1);
  for (int i = 0; i < u1; ++i) ex.y1.push_back(tok(rng));
  for (int i = 0; i < u2; ++i) ex.y2.push_back(tok(rng));
  ex.inventory = RandomInventory(rng, k, c.spk_dim);
  ex.s1 = 0;
  ex.s2 = k - 1;
  ex.t_delay2 = 1;
  return ex;
}

// Scales every parameter so the tiny model sits away from saturation but
// still produces non-trivial gradients.
ModelParams TinyParams(const ModelConfig &c, uint64_t seed) {
  ModelParams p = InitParams(c, seed);
  std::mt19937_64 rng(seed + 1);
  std::normal_distribution<double> g(0.0, 0.3);
  p.Visit([&](const std::string &name, Tensor &t) {
    if (name.ends_with(".b"))
      for (double &v : t.values()) v += g(rng);
  });
  return p;
}

double MaxRelativeError(const std::vector<double> &a, const std::vector<double> &n) {
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i]) <= 1e-8 && std::abs(n[i]) <= 1e-8) continue;
    worst = std::max(worst, RelativeError(a[i], n[i]));
  }
  return worst;
}

void CheckJointGradient(const ModelConfig &c, const Example &ex, const LossOptions &opt,
                        uint64_t seed) {
  ModelParams p = TinyParams(c, seed);
  ModelParams g = p.ZerosLike();
  JointLoss(p, c, ex, opt, &g);
  const std::vector<double> analytic = g.Flatten();
  auto f = [&](std::span<const double> v) {
    ModelParams q = p;
    q.Unflatten(v);
    return JointLoss(q, c, ex, opt).joint;
  };
  const std::vector<double> numeric = FiniteDiff(f, p.Flatten(), kModelFiniteDiffStep);
  CHECK(MaxRelativeError(analytic, numeric) < 1e-3);
}

TEST_CASE("joint loss gradient matches finite differences") {
  std::mt19937_64 rng(1);
  ModelConfig c = TinyConfig();
  LossOptions opt;
  SUBCASE("heat, both targets of length one") {
    CheckJointGradient(c, RandomExample(rng, c, 4, 1, 1), opt, 3);
  }
  SUBCASE("with latency penalty") {
    opt.latency.beta = 0.7;
    opt.latency.t_buffer = 1;
    CheckJointGradient(c, RandomExample(rng, c, 5, 2, 1), opt, 4);
  }
  SUBCASE("pit with empty second target") {
    opt.assignment = Assignment::kPit;
    CheckJointGradient(c, RandomExample(rng, c, 4, 2, 0), opt, 5);
  }
  SUBCASE("time reduction and no mask context") {
    c.time_reduction = true;
    c.mask_context = false;
    CheckJointGradient(c, RandomExample(rng, c, 5, 1, 2), opt, 6);
  }
  SUBCASE("band-local encoder") {
    c.input_dim = 12;
    c.unmix_channels = 4;
    c.freq_bands = 2;
    CheckJointGradient(c, RandomExample(rng, c, 4, 1, 1), opt, 8);
  }
}

TEST_CASE("band-local encoder keeps bands apart") {
  std::mt19937_64 rng(11);
  ModelConfig c = TinyConfig();
  c.input_dim = 12;  // three spliced frames of 4 features, two bands of 2
  c.unmix_channels = 4;
  c.freq_bands = 2;
  const ModelParams p = TinyParams(c, 2);
  CHECK(p.enc_conv1_w.shape() == std::vector<int>{2, c.unmix_kernel, 6});
  const Example ex = RandomExample(rng, c, 5, 1, 1);
  const UnmixOutput a = Unmix(p, c, ex.x);
  // Columns of band 1 in each spliced frame: 2, 3, 6, 7, 10, 11.
  RowMatrix x = ex.x;
  for (int col : {2, 3, 6, 7, 10, 11}) x.col(col).array() += 1.0;
  const UnmixOutput b = Unmix(p, c, x);
  CHECK(a.h.leftCols(2) == b.h.leftCols(2));
  CHECK_FALSE(a.h.rightCols(2) == b.h.rightCols(2));
  // Shared weights: swapping the bands of the input swaps the channel blocks.
  RowMatrix swapped = ex.x;
  for (int s = 0; s < 3; ++s) {
    swapped.col(4 * s).swap(swapped.col(4 * s + 2));
    swapped.col(4 * s + 1).swap(swapped.col(4 * s + 3));
  }
  const UnmixOutput d = Unmix(p, c, swapped);
  CHECK((d.h.leftCols(2) - a.h.rightCols(2)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((d.h.rightCols(2) - a.h.leftCols(2)).cwiseAbs().maxCoeff() < 1e-15);
  c.unmix_channels = 3;
  CHECK_THROWS(c.Validate());
}

TEST_CASE("speaker loss gradient matches finite differences") {
  std::mt19937_64 rng(2);
  const ModelConfig c = TinyConfig();
  LossOptions opt;
  opt.use_asr = false;
  opt.lambda = 1.0;
  CheckJointGradient(c, RandomExample(rng, c, 5, 1, 1, 4), opt, 7);
}

TEST_CASE("unmix conserves the encoded mixture") {
  std::mt19937_64 rng(3);
  const ModelConfig c = TinyConfig();
  for (int trial = 0; trial < 20; ++trial) {
    const ModelParams p = InitParams(c, trial);
    const Example ex = RandomExample(rng, c, 3 + trial % 5, 1, 1);
    const UnmixOutput out = Unmix(p, c, ex.x);
    CHECK((out.h1 + out.h2 - out.h).cwiseAbs().maxCoeff() == 0.0);
    CHECK(out.m.minCoeff() > 0.0);
    CHECK(out.m.maxCoeff() < 1.0);
  }
}

TEST_CASE("unmix mask examples") {
  std::mt19937_64 rng(4);
  const ModelConfig c = TinyConfig();
  ModelParams p = InitParams(c, 1);
  const Example ex = RandomExample(rng, c, 4, 1, 1);
  SUBCASE("zero mask logits split evenly") {
    p.mask_conv2_w.SetZero();
    p.mask_conv2_b.SetZero();
    const UnmixOutput out = Unmix(p, c, ex.x);
    CHECK((out.m.array() == 0.5).all());
    CHECK(out.h1 == out.h2);
    CHECK((out.h1 - out.h / 2).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("saturated mask empties the second stream") {
    p.mask_conv2_w.SetZero();
    for (double &v : p.mask_conv2_b.values()) v = 60.0;
    const UnmixOutput out = Unmix(p, c, ex.x);
    CHECK(out.h2.cwiseAbs().maxCoeff() < 1e-20);
  }
  SUBCASE("empty input") {
    try {
      Unmix(p, c, RowMatrix(0, c.input_dim));
      FAIL("expected invalid input");
    } catch (const Error &e) {
      CHECK(e.kind() == ErrorKind::kInvalidInput);
    }
  }
}

TEST_CASE("loss composition") {
  std::mt19937_64 rng(5);
  const ModelConfig c = TinyConfig();
  const ModelParams p = InitParams(c, 9);
  const Example ex = RandomExample(rng, c, 5, 2, 1);
  LossOptions opt;
  const LossValue v = JointLoss(p, c, ex, opt);
  CHECK(v.asr == v.asr_stream[0] + v.asr_stream[1]);
  CHECK(v.sid == v.sid_stream[0] + v.sid_stream[1]);
  CHECK(v.joint == v.asr + 10.0 * v.sid);

  const UnmixOutput un = Unmix(p, c, ex.x);
  CHECK(v.asr_stream[0] == AsrStreamLoss(p, c, un.stream[0], ex.y1, 1.0, nullptr, nullptr));
  CHECK(v.asr_stream[1] == AsrStreamLoss(p, c, un.stream[1], ex.y2, 1.0, nullptr, nullptr));
  LatencyConfig lc;
  CHECK(v.sid_stream[0] ==
        SidStreamLoss(p, c, un.stream[0], ex.inventory, ex.s1, lc, 1.0, nullptr, nullptr));

  opt.lambda = 0.0;
  const LossValue a = JointLoss(p, c, ex, opt);
  CHECK(a.joint == v.asr);
  CHECK(a.sid == 0.0);

  SUBCASE("empty label sequence is the all-blank lattice") {
    Example e2 = ex;
    e2.y2.clear();
    const LossValue w = JointLoss(p, c, e2, opt);
    const AlignmentLattice lat = AsrLattice(p, c, un.stream[1], {});
    double expect = 0.0;
    for (int t = 0; t + 1 < lat.num_frames(); ++t)
      expect -= RnntNodeLogProbs(lat.Node(t, 0)).blank;
    CHECK(w.asr_stream[1] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("pit examples and bound") {
  const double m[2][2] = {{2, 3}, {4, 1}};
  CHECK(PitLoss(m) == 3.0);
  const double s[2][2] = {{1, 2}, {2, 1}};
  CHECK(PitLoss(s) == 2.0);

  std::mt19937_64 rng(6);
  const ModelConfig c = TinyConfig();
  const ModelParams p = InitParams(c, 2);
  LossOptions heat, pit;
  heat.lambda = pit.lambda = 0.0;
  pit.assignment = Assignment::kPit;
  for (int trial = 0; trial < 50; ++trial) {
    const Example ex = RandomExample(rng, c, 4, trial % 3, (trial / 3) % 3);
    CHECK(JointLoss(p, c, ex, pit).asr <= JointLoss(p, c, ex, heat).asr);
  }
}

TEST_CASE("joint gradient is the weighted sum of its parts") {
  std::mt19937_64 rng(7);
  const ModelConfig c = TinyConfig();
  const ModelParams p = InitParams(c, 3);
  const Example ex = RandomExample(rng, c, 6, 2, 2);
  LossOptions joint;
  joint.latency.alpha = 0.6;
  joint.latency.beta = 0.5;
  LossOptions asr = joint, sid = joint;
  asr.lambda = 0.0;
  sid.use_asr = false;
  sid.lambda = 1.0;
  ModelParams gj = p.ZerosLike(), ga = p.ZerosLike(), gs = p.ZerosLike();
  JointLoss(p, c, ex, joint, &gj);
  JointLoss(p, c, ex, asr, &ga);
  JointLoss(p, c, ex, sid, &gs);
  const auto vj = gj.Flatten(), va = ga.Flatten(), vs = gs.Flatten();
  double worst = 0.0;
  for (size_t i = 0; i < vj.size(); ++i)
    worst = std::max(worst, std::abs(vj[i] - (va[i] + 10.0 * vs[i])) /
                                std::max(1.0, std::abs(vj[i])));
  CHECK(worst < 1e-9);
}

TEST_CASE("lambda zero leaves speaker parameters without gradient") {
  std::mt19937_64 rng(8);
  const ModelConfig c = TinyConfig();
  const ModelParams p = InitParams(c, 4);
  LossOptions opt;
  opt.lambda = 0.0;
  ModelParams g = p.ZerosLike();
  JointLoss(p, c, RandomExample(rng, c, 5, 2, 1), opt, &g);
  g.Visit([](const std::string &name, const Tensor &t) {
    if (name.starts_with("sid.")) CHECK(t == t.ZerosLike());
  });
}

TEST_CASE("one parameter set serves both streams") {
  const ModelParams p = InitParams(TinyConfig(), 1);
  std::set<std::string> names;
  p.Visit([&](const std::string &n, const Tensor &) {
    CHECK(n.find("stream") == std::string::npos);
    CHECK(names.insert(n).second);
  });
  CHECK(p.asr_enc.size() == 2);  // layers, not streams
}

TEST_CASE("speaker errors") {
  std::mt19937_64 rng(9);
  const ModelConfig c = TinyConfig();
  const ModelParams p = InitParams(c, 1);
  Example ex = RandomExample(rng, c, 4, 1, 1, 1);
  try {
    JointLoss(p, c, ex, LossOptions{});
    FAIL("expected unknown speaker");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kUnknownSpeaker);
  }
  ex = RandomExample(rng, c, 4, 1, 1, 3);
  ex.s2 = 5;
  CHECK_THROWS_AS(JointLoss(p, c, ex, LossOptions{}), Error);
}

TEST_CASE("heat ordering swaps with the streams") {
  // Swapping the talkers of an example exchanges which stream carries which
  // labels; with the stream features exchanged too the per-term losses swap.
  std::mt19937_64 rng(10);
  const ModelConfig c = TinyConfig();
  const ModelParams p = InitParams(c, 5);
  const Example ex = RandomExample(rng, c, 5, 2, 1);
  const UnmixOutput un = Unmix(p, c, ex.x);
  const double a = AsrStreamLoss(p, c, un.stream[0], ex.y1, 1.0, nullptr, nullptr);
  const double b = AsrStreamLoss(p, c, un.stream[1], ex.y2, 1.0, nullptr, nullptr);
  const double a2 = AsrStreamLoss(p, c, un.stream[1], ex.y2, 1.0, nullptr, nullptr);
  const double b2 = AsrStreamLoss(p, c, un.stream[0], ex.y1, 1.0, nullptr, nullptr);
  CHECK(a + b == b2 + a2);
  const double m[2][2] = {{a, 1.0}, {2.0, b}};
  const double mt[2][2] = {{2.0, b}, {a, 1.0}};
  CHECK(PitLoss(m) == PitLoss(mt));
}

}  // namespace
}  // namespace mtt
