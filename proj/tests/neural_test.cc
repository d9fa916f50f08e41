// tests/neural_test.cc
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
#include <cstdio>
#include <filesystem>
#include <random>
#include <vector>

#include "doctest.h"
#include "mtt/error.h"
#include "mtt/layers.h"
#include "mtt/oracle.h"
#include "mtt/params.h"

namespace mtt {
namespace {

using nn::GruParams;

// Parameters for a finite-difference check are handed around as a list of
// buffers that get packed into one flat vector.
struct Buffers {
  std::vector<std::span<double>> parts;

  std::vector<double> Pack() const {
    std::vector<double> out;
    for (auto s : parts) out.insert(out.end(), s.begin(), s.end());
    return out;
  }
  void Unpack(std::span<const double> p) {
    size_t j = 0;
    for (auto s : parts)
      for (double &v : s) v = p[j++];
  }
};

std::span<double> Span(RowMatrix &m) { return {m.data(), static_cast<size_t>(m.size())}; }
std::span<double> Span(Tensor &t) { return t.values(); }

RowMatrix RandomMatrix(std::mt19937_64 &rng, int rows, int cols, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  RowMatrix m(rows, cols);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

Tensor RandomTensor(std::mt19937_64 &rng, std::vector<int> shape, double scale = 0.5) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> g(0.0, scale);
  for (double &v : t.values()) v = g(rng);
  return t;
}

// Compares analytic against central differences on every coordinate with
// magnitude above 1e-8.
void ExpectGradMatches(Buffers &buf, const std::function<double()> &loss,
                       const std::vector<double> &analytic, double tol = 1e-5) {
  const std::vector<double> p0 = buf.Pack();
  REQUIRE(analytic.size() == p0.size());
  auto f = [&](std::span<const double> p) {
    buf.Unpack(p);
    return loss();
  };
  const std::vector<double> numeric = FiniteDiff(f, p0, 1e-5);
  buf.Unpack(p0);
  double worst = 0.0;
  for (size_t i = 0; i < p0.size(); ++i) {
    if (std::abs(analytic[i]) <= 1e-8 && std::abs(numeric[i]) <= 1e-8) continue;
    worst = std::max(worst, RelativeError(analytic[i], numeric[i]));
  }
  CHECK(worst < tol);
}

double Dot(const RowMatrix &a, const RowMatrix &b) { return (a.array() * b.array()).sum(); }

void Append(std::vector<double> *out, const RowMatrix &m) {
  out->insert(out->end(), m.data(), m.data() + m.size());
}
void Append(std::vector<double> *out, const Tensor &t) {
  out->insert(out->end(), t.values().begin(), t.values().end());
}

TEST_CASE("linear with identity weights is the identity") {
  Tensor w({3, 3});
  for (int i = 0; i < 3; ++i) w[i * 3 + i] = 1.0;
  Tensor b({3});
  RowMatrix x(2, 3);
  x << 1, -2, 3, 0.5, 0, -1;
  CHECK(nn::LinearForward(x, w, b) == x);
}

TEST_CASE("softmax of zeros is uniform") {
  RowMatrix y = nn::Softmax(RowMatrix::Zero(1, 4));
  for (int k = 0; k < 4; ++k) CHECK(y(0, k) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("shape mismatches are reported") {
  std::mt19937_64 rng(1);
  Tensor w = RandomTensor(rng, {3, 4});
  Tensor b({3});
  RowMatrix x = RandomMatrix(rng, 2, 5);
  try {
    nn::LinearForward(x, w, b);
    FAIL("expected a shape error");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kShape);
  }
  GruParams g{RandomTensor(rng, {6, 3}), RandomTensor(rng, {6, 2}), Tensor({6})};
  CHECK_THROWS_AS(nn::GruForward(g, x), Error);
  Tensor table = RandomTensor(rng, {4, 2});
  std::vector<int> ids = {0, 4};
  try {
    nn::EmbedForward(table, ids);
    FAIL("expected a label error");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kInvalidLabel);
  }
}

TEST_CASE("linear gradients match finite differences") {
  std::mt19937_64 rng(2);
  RowMatrix x = RandomMatrix(rng, 4, 5);
  Tensor w = RandomTensor(rng, {3, 5}), b = RandomTensor(rng, {3});
  const RowMatrix r = RandomMatrix(rng, 4, 3);
  Tensor dw = w.ZerosLike(), db = b.ZerosLike();
  RowMatrix dx = nn::LinearBackward(x, w, r, &dw, &db);
  std::vector<double> analytic;
  Append(&analytic, dx);
  Append(&analytic, dw);
  Append(&analytic, db);
  Buffers buf{{Span(x), Span(w), Span(b)}};
  ExpectGradMatches(buf, [&] { return Dot(nn::LinearForward(x, w, b), r); }, analytic);
}

TEST_CASE("pointwise and softmax gradients match finite differences") {
  std::mt19937_64 rng(3);
  RowMatrix x = RandomMatrix(rng, 3, 5);
  const RowMatrix r = RandomMatrix(rng, 3, 5);
  Buffers buf{{Span(x)}};
  SUBCASE("sigmoid") {
    RowMatrix dx = nn::SigmoidBackward(nn::Sigmoid(x), r);
    std::vector<double> a;
    Append(&a, dx);
    ExpectGradMatches(buf, [&] { return Dot(nn::Sigmoid(x), r); }, a);
  }
  SUBCASE("tanh") {
    RowMatrix dx = nn::TanhBackward(nn::Tanh(x), r);
    std::vector<double> a;
    Append(&a, dx);
    ExpectGradMatches(buf, [&] { return Dot(nn::Tanh(x), r); }, a);
  }
  SUBCASE("softmax") {
    RowMatrix dx = nn::SoftmaxBackward(nn::Softmax(x), r);
    std::vector<double> a;
    Append(&a, dx);
    ExpectGradMatches(buf, [&] { return Dot(nn::Softmax(x), r); }, a);
  }
}

TEST_CASE("conv1d gradients match finite differences") {
  std::mt19937_64 rng(4);
  RowMatrix x = RandomMatrix(rng, 6, 3);
  Tensor w = RandomTensor(rng, {4, 3, 3}), b = RandomTensor(rng, {4});
  const RowMatrix r = RandomMatrix(rng, 6, 4);
  Tensor dw = w.ZerosLike(), db = b.ZerosLike();
  RowMatrix dx = nn::Conv1dBackward(x, w, r, &dw, &db);
  std::vector<double> analytic;
  Append(&analytic, dx);
  Append(&analytic, dw);
  Append(&analytic, db);
  Buffers buf{{Span(x), Span(w), Span(b)}};
  ExpectGradMatches(buf, [&] { return Dot(nn::Conv1dForward(x, w, b), r); }, analytic);
}

TEST_CASE("conv1d is causal") {
  std::mt19937_64 rng(5);
  RowMatrix x = RandomMatrix(rng, 8, 2);
  Tensor w = RandomTensor(rng, {3, 3, 2}), b = RandomTensor(rng, {3});
  RowMatrix y = nn::Conv1dForward(x, w, b);
  x.row(5).setConstant(7.0);
  RowMatrix y2 = nn::Conv1dForward(x, w, b);
  CHECK(y.topRows(5) == y2.topRows(5));
  CHECK(y.row(5) != y2.row(5));
}

TEST_CASE("embedding and frame stacking gradients match finite differences") {
  std::mt19937_64 rng(6);
  SUBCASE("embed") {
    Tensor table = RandomTensor(rng, {5, 3});
    std::vector<int> ids = {0, 3, 3, 1};
    const RowMatrix r = RandomMatrix(rng, 4, 3);
    Tensor dt = table.ZerosLike();
    nn::EmbedBackward(ids, r, &dt);
    std::vector<double> a;
    Append(&a, dt);
    Buffers buf{{Span(table)}};
    ExpectGradMatches(buf, [&] { return Dot(nn::EmbedForward(table, ids), r); }, a);
  }
  SUBCASE("stack") {
    RowMatrix x = RandomMatrix(rng, 5, 2);
    RowMatrix y = nn::StackFrames(x, 2);
    REQUIRE(y.rows() == 3);
    REQUIRE(y.cols() == 4);
    CHECK(y(2, 2) == 0.0);
    const RowMatrix r = RandomMatrix(rng, 3, 4);
    std::vector<double> a;
    Append(&a, nn::StackFramesBackward(r, 5, 2));
    Buffers buf{{Span(x)}};
    ExpectGradMatches(buf, [&] { return Dot(nn::StackFrames(x, 2), r); }, a);
  }
}

GruParams RandomGru(std::mt19937_64 &rng, int in, int hidden) {
  return {RandomTensor(rng, {3 * hidden, in}), RandomTensor(rng, {3 * hidden, hidden}),
          RandomTensor(rng, {3 * hidden})};
}

TEST_CASE("recurrent step gradients match finite differences") {
  std::mt19937_64 rng(7);
  GruParams p = RandomGru(rng, 3, 4);
  RowMatrix x = RandomMatrix(rng, 1, 3);
  RowMatrix h = RandomMatrix(rng, 1, 4);
  const RowMatrix r = RandomMatrix(rng, 1, 4);
  auto forward = [&] {
    Vector hp = h.row(0).transpose();
    Vector xv = x.row(0).transpose();
    return nn::GruStep(p, xv, hp);
  };
  nn::GruStepCache cache;
  Vector xv = x.row(0).transpose();
  nn::GruStep(p, xv, h.row(0).transpose(), &cache);
  GruParams g = p.ZerosLike();
  Vector dx, dh;
  nn::GruStepBackward(p, xv, cache, r.row(0).transpose(), &g, &dx, &dh);
  std::vector<double> a(dx.data(), dx.data() + dx.size());
  a.insert(a.end(), dh.data(), dh.data() + dh.size());
  Append(&a, g.wx);
  Append(&a, g.wh);
  Append(&a, g.b);
  Buffers buf{{Span(x), Span(h), Span(p.wx), Span(p.wh), Span(p.b)}};
  ExpectGradMatches(buf, [&] { return forward().dot(r.row(0).transpose()); }, a);
}

TEST_CASE("recurrent sequence gradients match finite differences") {
  std::mt19937_64 rng(8);
  GruParams p = RandomGru(rng, 2, 3);
  RowMatrix x = RandomMatrix(rng, 5, 2);
  const RowMatrix r = RandomMatrix(rng, 5, 3);
  nn::GruSequenceCache cache;
  nn::GruForward(p, x, &cache);
  GruParams g = p.ZerosLike();
  RowMatrix dx = nn::GruBackward(p, cache, r, &g);
  std::vector<double> a;
  Append(&a, dx);
  Append(&a, g.wx);
  Append(&a, g.wh);
  Append(&a, g.b);
  Buffers buf{{Span(x), Span(p.wx), Span(p.wh), Span(p.b)}};
  ExpectGradMatches(buf, [&] { return Dot(nn::GruForward(p, x), r); }, a);
}

TEST_CASE("recurrent encoder is causal and pure") {
  std::mt19937_64 rng(9);
  GruParams p = RandomGru(rng, 3, 4);
  RowMatrix x = RandomMatrix(rng, 10, 3);
  RowMatrix y = nn::GruForward(p, x);
  CHECK(nn::GruForward(p, x) == y);
  for (int t = 0; t < 10; ++t) {
    RowMatrix x2 = x;
    x2.bottomRows(10 - t) = RandomMatrix(rng, 10 - t, 3);
    RowMatrix y2 = nn::GruForward(p, x2);
    CHECK(y2.topRows(t) == y.topRows(t));
  }
}

ModelConfig TinyConfig() {
  ModelConfig c;
  c.input_dim = 6;
  c.freq_bands = 0;
  c.unmix_channels = 4;
  c.vocab_size = 3;
  c.asr_hidden = 5;
  c.label_embed = 3;
  c.pred_hidden = 4;
  c.joint_dim = 4;
  c.sid_hidden = 4;
  c.sid_embed = 3;
  c.sid_joint = 4;
  c.spk_dim = 3;
  return c;
}

TEST_CASE("init is deterministic in the seed") {
  const ModelConfig c = TinyConfig();
  ModelParams a = InitParams(c, 11), b = InitParams(c, 11), d = InitParams(c, 12);
  CHECK(a == b);
  CHECK_FALSE(a == d);
  CHECK(a.AllFinite());
}

TEST_CASE("init draws weights within the uniform limit and zeroes biases") {
  ModelConfig c = TinyConfig();
  c.time_reduction = true;
  const ModelParams p = InitParams(c, 3);
  int biases = 0;
  p.Visit([&](const std::string &name, const Tensor &t) {
    const bool gru = name.find(".gru") != std::string::npos;
    if (name.ends_with(".b")) {
      ++biases;
      for (size_t i = 0; i < t.size(); ++i) {
        const int h = t.dim(0) / 3;
        const bool gate = gru && static_cast<int>(i) >= h && static_cast<int>(i) < 2 * h;
        CHECK(t[i] == (gate ? 1.0 : 0.0));
      }
      return;
    }
    const double fan_out = gru ? t.dim(0) / 3.0 : t.dim(0);
    const double fan_in = static_cast<double>(t.size()) / t.dim(0);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    double max_abs = 0.0;
    for (double v : t.values()) max_abs = std::max(max_abs, std::abs(v));
    CHECK(max_abs <= limit);
    CHECK(max_abs > 0.0);
  });
  CHECK(biases > 0);
  CHECK_FALSE(p.reduce_w.empty());
}

TEST_CASE("init rejects zero-size layers") {
  ModelConfig c = TinyConfig();
  c.joint_dim = 0;
  try {
    InitParams(c, 1);
    FAIL("expected a config error");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kInvalidConfig);
  }
}

TEST_CASE("checkpoint round trip is bit-exact") {
  const ModelConfig c = TinyConfig();
  const ModelParams p = InitParams(c, 21);
  const auto path = std::filesystem::temp_directory_path() / "mtt_neural_test.ckpt";
  SaveCheckpoint(p, path.string());
  ModelParams q = InitParams(c, 22);
  LoadCheckpoint(path.string(), &q);
  CHECK(q == p);
  CHECK(q.Flatten() == p.Flatten());

  ModelConfig other = c;
  other.asr_hidden = 6;
  ModelParams wrong = InitParams(other, 1);
  CHECK_THROWS_AS(LoadCheckpoint(path.string(), &wrong), Error);
  std::filesystem::remove(path);
}

TEST_CASE("flatten and unflatten are inverse") {
  ModelParams p = InitParams(TinyConfig(), 5);
  std::vector<double> v = p.Flatten();
  CHECK(v.size() == p.NumValues());
  for (double &x : v) x *= 2.0;
  p.Unflatten(v);
  CHECK(p.Flatten() == v);
}

TEST_CASE("optimizer examples") {
  ModelParams p = InitParams(TinyConfig(), 31);
  const ModelParams before = p;
  AdamConfig cfg;

  SUBCASE("zero gradients leave params unchanged") {
    AdamState s = InitAdam(p);
    OptimizerStep(&p, p.ZerosLike(), &s, cfg);
    CHECK(p == before);
  }
  SUBCASE("zero learning rate leaves params unchanged") {
    AdamState s = InitAdam(p);
    ModelParams g = p.ZerosLike();
    g.Visit([](const std::string &, Tensor &t) {
      for (double &v : t.values()) v = 0.01;
    });
    cfg.lr = 0.0;
    OptimizerStep(&p, g, &s, cfg);
    CHECK(p == before);
  }
  SUBCASE("non-finite gradients raise divergence") {
    AdamState s = InitAdam(p);
    ModelParams g = p.ZerosLike();
    g.asr_out_b[0] = std::nan("");
    try {
      OptimizerStep(&p, g, &s, cfg);
      FAIL("expected divergence");
    } catch (const Error &e) {
      CHECK(e.kind() == ErrorKind::kDivergence);
    }
    CHECK(p == before);
  }
  SUBCASE("frozen tensors and their moments are untouched") {
    AdamState s = InitAdam(p);
    ModelParams g = p.ZerosLike();
    g.Visit([](const std::string &, Tensor &t) {
      for (double &v : t.values()) v = 0.01;
    });
    auto trainable = [](std::string_view n) { return !n.starts_with("unmix."); };
    OptimizerStep(&p, g, &s, cfg, trainable);
    CHECK(p.enc_conv1_w == before.enc_conv1_w);
    CHECK(p.mask_gru.wh == before.mask_gru.wh);
    CHECK(s.m.enc_conv1_w == before.enc_conv1_w.ZerosLike());
    CHECK_FALSE(p.asr_out_w == before.asr_out_w);
  }
  SUBCASE("weight decay shrinks weights but not biases") {
    AdamState s = InitAdam(p);
    p.asr_out_b[0] = 0.25;
    const ModelParams start = p;
    cfg.weight_decay = 0.5;
    OptimizerStep(&p, p.ZerosLike(), &s, cfg);
    const double f = 1.0 - cfg.lr * cfg.weight_decay;
    for (size_t j = 0; j < p.asr_out_w.size(); ++j)
      CHECK(p.asr_out_w[j] == f * start.asr_out_w[j]);
    CHECK(p.asr_out_b[0] == 0.25);
  }
}

TEST_CASE("first step with unit gradient moves each coordinate by lr") {
  // A single trainable scalar: bias-corrected moments give m/sqrt(v) = 1.
  ModelParams p;
  p.sid_blank_b = Tensor({1}, 0.5);
  ModelParams g = p.ZerosLike();
  g.sid_blank_b[0] = 1.0;
  AdamState s = InitAdam(p);
  AdamConfig cfg;
  cfg.lr = 0.01;
  const double norm = OptimizerStep(&p, g, &s, cfg);
  CHECK(norm == doctest::Approx(1.0));
  const double expected = 0.5 - cfg.lr * 1.0 / (1.0 + cfg.eps);
  CHECK(p.sid_blank_b[0] == doctest::Approx(expected).epsilon(1e-14));
  CHECK(std::abs(0.5 - p.sid_blank_b[0]) == doctest::Approx(cfg.lr).epsilon(1e-6));
}

TEST_CASE("global norm clipping bounds the effective gradient") {
  ModelParams p;
  p.sid_blank_b = Tensor({2}, 0.0);
  ModelParams g = p.ZerosLike();
  g.sid_blank_b[0] = 30.0;
  g.sid_blank_b[1] = 40.0;
  AdamState s = InitAdam(p);
  AdamConfig cfg;
  const double norm = OptimizerStep(&p, g, &s, cfg);
  CHECK(norm == doctest::Approx(50.0));
  // Clipped to norm 5: the first moment holds (1 - beta1) * (3, 4).
  CHECK(s.m.sid_blank_b[0] == doctest::Approx(0.1 * 3.0));
  CHECK(s.m.sid_blank_b[1] == doctest::Approx(0.1 * 4.0));
}

}  // namespace
}  // namespace mtt
