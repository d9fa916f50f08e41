// tests/decode_test.cc
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

#include <random>

#include "doctest.h"
#include "mtt/decode.h"
#include "mtt/error.h"

namespace mtt {
namespace {

// Logits looked up from a table indexed by (frame, labels emitted so far).
class TableAsrScorer : public AsrScorer {
 public:
  explicit TableAsrScorer(std::vector<std::vector<Vector>> table) : table_(std::move(table)) {}
  int num_frames() const override { return static_cast<int>(table_.size()); }
  Vector Logits(int t) override {
    const auto &row = table_[t];
    return row[std::min<size_t>(history_.size(), row.size() - 1)];
  }
  void Advance(int label) override { history_.push_back(label); }
  const std::vector<int> &history() const { return history_; }

 private:
  std::vector<std::vector<Vector>> table_;
  std::vector<int> history_;
};

class TableSidScorer : public SidScorer {
 public:
  explicit TableSidScorer(std::vector<NodeLogits> nodes) : nodes_(std::move(nodes)) {}
  int num_frames() const override { return static_cast<int>(nodes_.size()); }
  NodeLogits Logits(int t) override { return nodes_[t]; }

 private:
  std::vector<NodeLogits> nodes_;
};

Vector Peak(int size, int at, double height = 5.0) {
  Vector v = Vector::Zero(size);
  v(at) = height;
  return v;
}

TEST_CASE("greedy recognition on constructed logits") {
  SUBCASE("all blank emits nothing") {
    TableAsrScorer s({{Peak(4, 0)}, {Peak(4, 0)}, {Peak(4, 0)}});
    CHECK(GreedyDecodeAsr(s).empty());
  }
  SUBCASE("one label per frame") {
    // Frame t emits label t once, then blank wins.
    std::vector<std::vector<Vector>> table;
    for (int t = 0; t < 3; ++t) {
      std::vector<Vector> row(4, Peak(4, 0));
      row[t] = Peak(4, t + 1);
      table.push_back(row);
    }
    TableAsrScorer s(table);
    const auto ev = GreedyDecodeAsr(s);
    REQUIRE(ev.size() == 3);
    for (int t = 0; t < 3; ++t) {
      CHECK(ev[t].kind == EventKind::kToken);
      CHECK(ev[t].symbol == t);
      CHECK(ev[t].frame == t + 1);
    }
    CHECK(s.history() == std::vector<int>{0, 1, 2});
  }
  SUBCASE("ties go to blank") {
    Vector flat = Vector::Constant(4, 1.0);
    TableAsrScorer s({{flat}, {flat}});
    CHECK(GreedyDecodeAsr(s).empty());
  }
  SUBCASE("symbol cap forces blank") {
    TableAsrScorer s({{Peak(3, 2)}, {Peak(3, 2)}});
    const auto ev = GreedyDecodeAsr(s, 5);
    REQUIRE(ev.size() == 10);
    CHECK(ev[4].frame == 1);
    CHECK(ev[5].frame == 2);
    TableAsrScorer s2({{Peak(3, 2)}});
    CHECK(GreedyDecodeAsr(s2, 2).size() == 2);
  }
}

TEST_CASE("greedy speaker decoding on constructed logits") {
  NodeLogits quiet{5.0, {0.0, 0.0, 0.0}};
  NodeLogits loud{-5.0, {0.0, 3.0, 1.0}};
  SUBCASE("emits at the first confident frame") {
    TableSidScorer s({quiet, quiet, loud, loud});
    const SidDecode d = GreedyDecodeSid(s);
    REQUIRE(d.events.size() == 1);
    CHECK(d.events[0].kind == EventKind::kSpeaker);
    CHECK(d.events[0].symbol == 1);
    CHECK(d.events[0].frame == 3);
    CHECK(d.t_e == 3);
  }
  SUBCASE("silent stream reports the utterance length") {
    TableSidScorer s({quiet, quiet, quiet});
    const SidDecode d = GreedyDecodeSid(s);
    CHECK(d.events.empty());
    CHECK(d.t_e == 3);
  }
  SUBCASE("boundary is strict") {
    // b = 0.5 and (1 - b) max P = 0.5 with a single speaker: no emission.
    TableSidScorer s({NodeLogits{0.0, {0.0}}});
    CHECK(GreedyDecodeSid(s).events.empty());
  }
  SUBCASE("empty inventory") {
    TableSidScorer s({NodeLogits{0.0, {}}});
    try {
      GreedyDecodeSid(s);
      FAIL("expected empty inventory");
    } catch (const Error &e) {
      CHECK(e.kind() == ErrorKind::kEmptyInventory);
    }
  }
}

ModelConfig SmallConfig() {
  ModelConfig c;
  c.input_dim = 6;
  c.freq_bands = 0;
  c.unmix_channels = 4;
  c.vocab_size = 4;
  c.asr_hidden = 5;
  c.label_embed = 3;
  c.pred_hidden = 4;
  c.joint_dim = 5;
  c.sid_hidden = 4;
  c.sid_embed = 3;
  c.sid_joint = 4;
  c.spk_dim = 3;
  return c;
}

Example RandomExample(std::mt19937_64 &rng, const ModelConfig &c, int T) {
  Example ex;
  ex.id = "u";
  std::normal_distribution<double> g(0.0, 1.0);
  ex.x.resize(T, c.input_dim);
  for (int i = 0; i < ex.x.size(); ++i) ex.x.data()[i] = g(rng);
  std::vector<double> emb;
  for (int k = 0; k < 3; ++k) {
    std::vector<double> v(c.spk_dim);
    double n = 0.0;
    for (double &x : v) {
      x = g(rng);
      n += x * x;
    }
    for (double x : v) emb.push_back(x / std::sqrt(n));
  }
  ex.inventory = SpeakerInventory({7, 8, 9}, c.spk_dim, emb);
  ex.y1 = {1};
  ex.y2 = {2};
  ex.s1 = 0;
  ex.s2 = 1;
  return ex;
}

// Large biases so that random models emit both tokens and speakers.
ModelParams LoudParams(const ModelConfig &c, uint64_t seed) {
  ModelParams p = InitParams(c, seed);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.5);
  p.Visit([&](const std::string &, Tensor &t) {
    for (double &v : t.values()) v += g(rng);
  });
  return p;
}

std::vector<DecodeEvent> Before(const std::vector<DecodeEvent> &ev, int frame) {
  std::vector<DecodeEvent> out;
  for (const DecodeEvent &e : ev)
    if (e.frame <= frame) out.push_back(e);
  return out;
}

TEST_CASE("decoding is causal") {
  const ModelConfig c = SmallConfig();
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  int emitted = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const ModelParams p = LoudParams(c, trial % 10);
    const int T = 2 + trial % 7;
    const Example ex = RandomExample(rng, c, T);
    const int cut = static_cast<int>(rng() % T);
    Example changed = ex;
    for (int t = cut; t < T; ++t)
      for (int j = 0; j < c.input_dim; ++j) changed.x(t, j) = g(rng);
    const UttDecode a = DecodeExample(p, c, ex);
    const UttDecode b = DecodeExample(p, c, changed);
    for (int s = 0; s < 2; ++s) {
      REQUIRE(Before(a.stream[s].tokens, cut) == Before(b.stream[s].tokens, cut));
      REQUIRE(Before(a.stream[s].speaker.events, cut) ==
              Before(b.stream[s].speaker.events, cut));
      CHECK(a.stream[s].speaker.events.size() <= 1);
      emitted += static_cast<int>(a.stream[s].tokens.size() + a.stream[s].speaker.events.size());
    }
  }
  CHECK(emitted > 0);
}

TEST_CASE("decoding is deterministic") {
  const ModelConfig c = SmallConfig();
  std::mt19937_64 rng(5);
  const ModelParams p = LoudParams(c, 3);
  const std::vector<Example> exs = {RandomExample(rng, c, 5), RandomExample(rng, c, 7)};
  std::vector<UttDecode> d1, d2;
  const EvalReport r1 = Evaluate(p, c, exs, &d1);
  const EvalReport r2 = Evaluate(p, c, exs, &d2);
  CHECK(r1.ToJson() == r2.ToJson());
  CHECK(EventsToJsonl(d1, exs) == EventsToJsonl(d2, exs));
}

TEST_CASE("latency statistics") {
  const LatencySummary s = LatencyStats({2, 4, 6, 8}, {10, 10, 10, 10});
  CHECK(s.mean_te == doctest::Approx(5.0));
  CHECK(s.mean_te_over_t == doctest::Approx(0.5));
  CHECK(s.p50_te_over_t == doctest::Approx(0.5));
  CHECK(s.p90_te_over_t == doctest::Approx(0.74));
  const LatencySummary one = LatencyStats({3}, {4});
  CHECK(one.p50_te_over_t == doctest::Approx(0.75));
  CHECK(one.p90_te_over_t == doctest::Approx(0.75));
  try {
    LatencyStats({}, {});
    FAIL("expected empty input");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kEmptyInput);
  }
}

}  // namespace
}  // namespace mtt
