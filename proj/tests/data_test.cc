// tests/data_test.cc
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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "doctest.h"
#include "mtt/data.h"
#include "mtt/error.h"

namespace mtt {
namespace {

DataConfig SmallConfig() {
  DataConfig c;
  c.num_train = 5;
  c.num_eval = 3;
  return c;
}

TEST_CASE("noiseless single frame is template plus voice offset") {
  DataConfig c = SmallConfig();
  c.noise_sigma = 0.0;
  c.frames_per_token = 1;
  const SyntheticWorld world(c, 3);
  const Utterance u = SynthUtterance(world, 5, 1, 9);
  REQUIRE(u.features.rows() == 1);
  const SyntheticSpeaker &s = world.speaker(5);
  const auto tmpl = world.token_template(u.tokens[0]);
  const int base = s.band * c.band_width();
  for (int j = 0; j < c.feat_dim(); ++j) {
    double expect = s.voice_offset[j];
    if (j >= base && j < base + c.token_dims) expect += tmpl[j - base];
    CHECK(u.features(0, j) == expect);
  }
}

TEST_CASE("utterance shape and determinism") {
  DataConfig c = SmallConfig();
  c.frames_per_token = 2;
  const SyntheticWorld world(c, 3);
  const Utterance u = SynthUtterance(world, 1, 3, 4);
  CHECK(u.features.rows() == 6);
  CHECK(u.features.cols() == c.feat_dim());
  const Utterance v = SynthUtterance(world, 1, 3, 4);
  CHECK(u.tokens == v.tokens);
  CHECK(u.features == v.features);
  const Utterance w = SynthUtterance(world, 1, 3, 5);
  CHECK_FALSE(w.features == u.features);
}

TEST_CASE("speaker pool invariants") {
  const SyntheticWorld world(SmallConfig(), 11);
  const auto &spk = world.speakers();
  REQUIRE(spk.size() == 40);
  std::set<std::vector<double>> offsets;
  for (const SyntheticSpeaker &s : spk) {
    double n = 0.0;
    for (double v : s.profile) n += v * v;
    CHECK(std::abs(std::sqrt(n) - 1.0) < 1e-9);
    CHECK(offsets.insert(s.voice_offset).second);
  }
}

TEST_CASE("mix examples") {
  DataConfig c = SmallConfig();
  c.frames_per_token = 1;
  const SyntheticWorld world(c, 1);
  const Utterance u1 = SynthUtterance(world, 0, 10, 1);
  const Utterance u2 = SynthUtterance(world, 1, 8, 2);
  SUBCASE("overlapping") {
    const MixtureSample m = Mix(u1, u2, 4);
    CHECK(m.x.rows() == 12);
    CHECK(m.x.row(0) == u1.features.row(0));
    CHECK(m.x.row(11) == u2.features.row(7));
    CHECK((m.x.row(5) - u1.features.row(5) - u2.features.row(1)).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("no overlap") {
    const MixtureSample m = Mix(u1, u2, 12);
    CHECK(m.x.rows() == 20);
    CHECK(m.x.topRows(10) == u1.features);
    CHECK(m.x.middleRows(10, 2).isZero());
    CHECK(m.x.bottomRows(8) == u2.features);
  }
  SUBCASE("zero delay and silent second source") {
    Utterance silent = u2;
    silent.features.setZero();
    const MixtureSample m = Mix(u1, silent, 0);
    CHECK(m.x.topRows(10) == u1.features);
    CHECK(m.delay == 0);
  }
  SUBCASE("negative delay") {
    try {
      Mix(u1, u2, -1);
      FAIL("expected invalid input");
    } catch (const Error &e) {
      CHECK(e.kind() == ErrorKind::kInvalidInput);
    }
  }
}

TEST_CASE("training delay bounds") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) CHECK(SampleTrainingDelay(5, 5, rng) == 5);
  CHECK_FALSE(SampleTrainingDelay(4, 5, rng).has_value());
  int lo = 100, hi = -1;
  for (int i = 0; i < 10000; ++i) {
    const int d = *SampleTrainingDelay(30, 5, rng);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  CHECK(lo == 5);
  CHECK(hi == 30);
  lo = 100;
  hi = -1;
  for (int i = 0; i < 10000; ++i) {
    const int d = SampleEvalDelay(12, rng);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  CHECK(lo == 0);
  CHECK(hi == 12);
}

TEST_CASE("inventory sampling") {
  std::mt19937_64 rng(6);
  std::vector<int> pool(40);
  for (int i = 0; i < 40; ++i) pool[i] = i;
  const auto two = SampleInventory(3, 9, pool, 2, rng);
  CHECK(std::set<int>(two.begin(), two.end()) == std::set<int>{3, 9});
  for (int i = 0; i < 10000; ++i) {
    const int k = 2 + i % 7;
    const auto inv = SampleInventory(i % 40, (i + 1) % 40, pool, k, rng);
    REQUIRE(static_cast<int>(inv.size()) == k);
    CHECK(std::count(inv.begin(), inv.end(), i % 40) == 1);
    CHECK(std::count(inv.begin(), inv.end(), (i + 1) % 40) == 1);
    CHECK(std::set<int>(inv.begin(), inv.end()).size() == inv.size());
  }
  try {
    SampleInventory(0, 1, {0, 1, 2}, 4, rng);
    FAIL("expected config error");
  } catch (const Error &e) {
    CHECK(e.kind() == ErrorKind::kInvalidConfig);
  }
}

TEST_CASE("eval mixtures use the full inventory") {
  const SyntheticWorld world(SmallConfig(), 2);
  for (int i = 0; i < 50; ++i) {
    const MixtureSample m = GenerateMixture(world, 2, Split::kEval, i);
    CHECK(m.inventory.size() == 8);
    CHECK(m.delay >= 0);
    CHECK(m.delay <= static_cast<int>(m.y1.size()) * 3);
    const MixtureSample t = GenerateMixture(world, 2, Split::kTrain, i);
    CHECK(t.inventory.size() >= 2);
    CHECK(t.inventory.size() <= 8);
    CHECK(t.delay >= 5);
    CHECK(t.s1 != t.s2);
    CHECK(world.speaker(t.s1).band != world.speaker(t.s2).band);
    CHECK(world.speaker(m.s1).band != world.speaker(m.s2).band);
    CHECK(t.x.rows() == std::max<Eigen::Index>(t.y1.size() * 3, t.delay + t.y2.size() * 3));
  }
}

TEST_CASE("feature pipeline") {
  SUBCASE("shape") {
    const RowMatrix x = RowMatrix::Random(9, 4);
    const RowMatrix y = FeaturePipeline(x);
    CHECK(y.rows() == 3);
    CHECK(y.cols() == 12);
    CHECK(FeaturePipeline(RowMatrix::Random(11, 4)).rows() == 3);
  }
  SUBCASE("constant input") {
    const RowMatrix y = FeaturePipeline(RowMatrix::Constant(7, 2, 1.5));
    CHECK((y.array() == 1.5).all());
  }
  SUBCASE("hand-unrolled six frames") {
    RowMatrix x(6, 2);
    x << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12;
    RowMatrix expect(2, 6);
    expect << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12;
    CHECK(FeaturePipeline(x) == expect);
  }
  SUBCASE("too short") {
    try {
      FeaturePipeline(RowMatrix::Zero(2, 3));
      FAIL("expected invalid input");
    } catch (const Error &e) {
      CHECK(e.kind() == ErrorKind::kInvalidInput);
    }
  }
}

TEST_CASE("dataset round trip and reproducibility") {
  const auto dir = std::filesystem::temp_directory_path() / "mtt_data_test";
  std::filesystem::remove_all(dir);
  const DataConfig c = SmallConfig();
  const SyntheticWorld world(c, 7);
  Dataset d;
  for (int i = 0; i < 4; ++i) d.samples.push_back(GenerateMixture(world, 7, Split::kTrain, i));
  WriteDataset((dir / "a").string(), d);
  const Dataset back = ReadDataset((dir / "a").string());
  REQUIRE(back.samples.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(back.samples[i].x == d.samples[i].x);
    CHECK(back.samples[i].y1 == d.samples[i].y1);
    CHECK(back.samples[i].inventory == d.samples[i].inventory);
    CHECK(back.samples[i].delay == d.samples[i].delay);
  }
  // A second world from the same seed writes byte-identical files.
  const SyntheticWorld again(c, 7);
  Dataset d2;
  for (int i = 0; i < 4; ++i) d2.samples.push_back(GenerateMixture(again, 7, Split::kTrain, i));
  WriteDataset((dir / "b").string(), d2);
  auto slurp = [](const std::filesystem::path &p) {
    std::ifstream is(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(is), {});
  };
  CHECK(slurp(dir / "a" / "manifest.jsonl") == slurp(dir / "b" / "manifest.jsonl"));
  CHECK(slurp(dir / "a" / "features.bin") == slurp(dir / "b" / "features.bin"));

  WriteSpeakers((dir / "speakers.jsonl").string(), world.speakers());
  const auto spk = ReadSpeakers((dir / "speakers.jsonl").string());
  REQUIRE(spk.size() == world.speakers().size());
  CHECK(spk[3].profile == world.speakers()[3].profile);
  const SpeakerInventory inv = InventoryFromSpeakers(spk, {3, 1});
  CHECK(inv.labels() == std::vector<int>{3, 1});
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace mtt
