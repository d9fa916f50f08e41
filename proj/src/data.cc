// src/data.cc
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

#include "mtt/data.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mtt/error.h"

namespace mtt {

using nlohmann::json;

void DataConfig::Validate() const {
  auto require = [](bool ok, const char *what) {
    if (!ok) Fail(ErrorKind::kInvalidConfig, what);
  };
  require(vocab_size >= 2, "vocab_size must be at least 2");
  require(frames_per_token >= 1, "frames_per_token must be at least 1");
  require(min_tokens >= 1 && max_tokens >= min_tokens, "bad token length range");
  require(num_bands >= 1 && token_dims >= 1 && voice_dims >= 0, "bad band layout");
  require(noise_sigma >= 0.0 && template_scale > 0.0 && voice_scale > 0.0,
          "scales must be positive");
  require(pool_size >= 2, "pool_size must be at least 2");
  require(spk_dim >= 1, "spk_dim must be positive");
  require(num_train >= 0 && num_eval >= 0, "sample counts must be non-negative");
  require(min_inventory >= 2 && max_inventory >= min_inventory, "bad inventory range");
  require(max_inventory <= pool_size && eval_inventory <= pool_size,
          "inventory larger than the speaker pool");
  require(eval_inventory >= 2, "eval_inventory must be at least 2");
  require(min_delay >= 0, "min_delay must be non-negative");
  require(min_tokens * frames_per_token >= 3, "utterances shorter than 3 frames");
}

SyntheticWorld::SyntheticWorld(const DataConfig &config, uint64_t seed) : config_(config) {
  config_.Validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  templates_.resize(static_cast<size_t>(config_.vocab_size) * config_.token_dims);
  for (double &v : templates_) v = config_.template_scale * gauss(rng);

  const int bw = config_.band_width();
  for (int id = 0; id < config_.pool_size; ++id) {
    SyntheticSpeaker s;
    s.id = id;
    s.band = id % config_.num_bands;
    s.profile.resize(config_.spk_dim);
    double norm = 0.0;
    while (norm < 1e-3) {
      norm = 0.0;
      for (double &v : s.profile) {
        v = gauss(rng);
        norm += v * v;
      }
      norm = std::sqrt(norm);
    }
    for (double &v : s.profile) v /= norm;
    s.voice_offset.assign(config_.feat_dim(), 0.0);
    for (int j = 0; j < bw; ++j)
      s.voice_offset[s.band * bw + j] = config_.voice_scale * gauss(rng);
    speakers_.push_back(std::move(s));
  }
}

const SyntheticSpeaker &SyntheticWorld::speaker(int id) const {
  if (id < 0 || id >= static_cast<int>(speakers_.size()))
    Fail(ErrorKind::kUnknownSpeaker, "speaker ", id, " not in the pool");
  return speakers_[id];
}

std::span<const double> SyntheticWorld::token_template(int token) const {
  if (token < 0 || token >= config_.vocab_size)
    Fail(ErrorKind::kInvalidLabel, "token ", token, " outside the vocabulary");
  return {templates_.data() + static_cast<size_t>(token) * config_.token_dims,
          static_cast<size_t>(config_.token_dims)};
}

SpeakerInventory SyntheticWorld::Inventory(const std::vector<int> &ids) const {
  return InventoryFromSpeakers(speakers_, ids);
}

SpeakerInventory InventoryFromSpeakers(const std::vector<SyntheticSpeaker> &speakers,
                                       const std::vector<int> &ids) {
  if (ids.empty()) Fail(ErrorKind::kEmptyInventory, "no speakers requested");
  std::vector<double> emb;
  int dim = 0;
  for (int id : ids) {
    auto it = std::find_if(speakers.begin(), speakers.end(),
                           [id](const SyntheticSpeaker &s) { return s.id == id; });
    if (it == speakers.end()) Fail(ErrorKind::kUnknownSpeaker, "speaker ", id, " unknown");
    dim = static_cast<int>(it->profile.size());
    emb.insert(emb.end(), it->profile.begin(), it->profile.end());
  }
  return SpeakerInventory(ids, dim, std::move(emb));
}

Utterance SynthUtterance(const SyntheticWorld &world, int speaker, int num_tokens,
                         uint64_t seed) {
  const DataConfig &c = world.config();
  const SyntheticSpeaker &spk = world.speaker(speaker);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, c.vocab_size - 1);
  std::normal_distribution<double> noise(0.0, 1.0);

  Utterance u;
  u.speaker = speaker;
  u.tokens.resize(num_tokens);
  for (int &y : u.tokens) y = pick(rng);

  const int R = c.frames_per_token;
  const int base = spk.band * c.band_width();
  u.features.resize(static_cast<Eigen::Index>(num_tokens) * R, c.feat_dim());
  for (int i = 0; i < num_tokens; ++i) {
    auto tmpl = world.token_template(u.tokens[i]);
    for (int r = 0; r < R; ++r) {
      auto row = u.features.row(i * R + r);
      for (int j = 0; j < c.feat_dim(); ++j) row(j) = spk.voice_offset[j];
      for (int j = 0; j < c.token_dims; ++j) row(base + j) += tmpl[j];
      if (c.noise_sigma > 0.0)
        for (int j = 0; j < c.feat_dim(); ++j) row(j) += c.noise_sigma * noise(rng);
    }
  }
  return u;
}

MixtureSample Mix(const Utterance &u1, const Utterance &u2, int delay) {
  if (delay < 0) Fail(ErrorKind::kInvalidInput, "negative delay ", delay);
  if (u1.features.cols() != u2.features.cols())
    Fail(ErrorKind::kShape, "feature widths differ: ", u1.features.cols(), " vs ",
         u2.features.cols());
  const Eigen::Index len1 = u1.features.rows(), len2 = u2.features.rows();
  const Eigen::Index T = std::max(len1, delay + len2);
  MixtureSample m;
  m.x = RowMatrix::Zero(T, u1.features.cols());
  m.x.topRows(len1) += u1.features;
  m.x.middleRows(delay, len2) += u2.features;
  m.y1 = u1.tokens;
  m.y2 = u2.tokens;
  m.s1 = u1.speaker;
  m.s2 = u2.speaker;
  m.delay = delay;
  return m;
}

std::optional<int> SampleTrainingDelay(int len1_frames, int min_delay, std::mt19937_64 &rng) {
  if (len1_frames < min_delay) return std::nullopt;
  return std::uniform_int_distribution<int>(min_delay, len1_frames)(rng);
}

int SampleEvalDelay(int len1_frames, std::mt19937_64 &rng) {
  if (len1_frames < 0) Fail(ErrorKind::kInvalidInput, "negative length");
  return std::uniform_int_distribution<int>(0, len1_frames)(rng);
}

std::vector<int> SampleInventory(int s1, int s2, const std::vector<int> &pool, int k,
                                 std::mt19937_64 &rng) {
  if (s1 == s2) Fail(ErrorKind::kInvalidInput, "target speakers must differ");
  if (k < 2) Fail(ErrorKind::kInvalidConfig, "inventory size ", k, " below 2");
  auto in_pool = [&pool](int s) { return std::find(pool.begin(), pool.end(), s) != pool.end(); };
  if (!in_pool(s1) || !in_pool(s2))
    Fail(ErrorKind::kUnknownSpeaker, "target speaker not in the pool");
  std::vector<int> others;
  for (int s : pool)
    if (s != s1 && s != s2 && std::find(others.begin(), others.end(), s) == others.end())
      others.push_back(s);
  if (static_cast<int>(others.size()) < k - 2)
    Fail(ErrorKind::kInvalidConfig, "pool has ", others.size() + 2,
         " speakers, inventory needs ", k);
  std::shuffle(others.begin(), others.end(), rng);
  std::vector<int> inv = {s1, s2};
  inv.insert(inv.end(), others.begin(), others.begin() + (k - 2));
  std::shuffle(inv.begin(), inv.end(), rng);
  return inv;
}

RowMatrix FeaturePipeline(const RowMatrix &raw) {
  if (raw.rows() < 3)
    Fail(ErrorKind::kInvalidInput, "feature pipeline needs at least 3 frames, got ",
         raw.rows());
  const Eigen::Index T = raw.rows() / 3, d = raw.cols();
  RowMatrix out(T, 3 * d);
  for (Eigen::Index t = 0; t < T; ++t)
    for (int c = 0; c < 3; ++c) out.row(t).segment(c * d, d) = raw.row(3 * t + c);
  return out;
}

MixtureSample GenerateMixture(const SyntheticWorld &world, uint64_t seed, Split split,
                              int index) {
  const DataConfig &c = world.config();
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(split == Split::kTrain ? 1 : 2),
                    static_cast<uint32_t>(index)};
  std::mt19937_64 rng(seq);
  std::uniform_int_distribution<int> pick_spk(0, c.pool_size - 1);
  std::uniform_int_distribution<int> pick_len(c.min_tokens, c.max_tokens);

  // The two talkers occupy different bands whenever there is more than one.
  const int s1 = pick_spk(rng);
  int s2 = pick_spk(rng);
  while (s2 == s1 || (c.num_bands > 1 && world.speaker(s2).band == world.speaker(s1).band))
    s2 = pick_spk(rng);

  Utterance u1, u2;
  std::optional<int> delay;
  for (;;) {
    u1 = SynthUtterance(world, s1, pick_len(rng), rng());
    if (split == Split::kEval) {
      delay = SampleEvalDelay(static_cast<int>(u1.features.rows()), rng);
      break;
    }
    delay = SampleTrainingDelay(static_cast<int>(u1.features.rows()), c.min_delay, rng);
    if (delay) break;
  }
  u2 = SynthUtterance(world, s2, pick_len(rng), rng());

  MixtureSample m = Mix(u1, u2, *delay);
  const int k = split == Split::kEval
                    ? c.eval_inventory
                    : std::uniform_int_distribution<int>(c.min_inventory, c.max_inventory)(rng);
  std::vector<int> pool(c.pool_size);
  for (int i = 0; i < c.pool_size; ++i) pool[i] = i;
  m.inventory = SampleInventory(s1, s2, pool, k, rng);
  char id[32];
  std::snprintf(id, sizeof(id), "%s-%06d", split == Split::kTrain ? "train" : "eval", index);
  m.id = id;
  return m;
}

void WriteFileAtomic(const std::string &path, const std::string &contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) Fail(ErrorKind::kIo, "cannot write ", tmp);
    os.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!os) Fail(ErrorKind::kIo, "short write to ", tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    Fail(ErrorKind::kIo, "cannot rename ", tmp, " to ", path);
}

void WriteDataset(const std::string &dir, const Dataset &data) {
  std::filesystem::create_directories(dir);
  std::string manifest, features;
  size_t offset = 0;
  for (const MixtureSample &m : data.samples) {
    nlohmann::ordered_json j;
    j["utt_id"] = m.id;
    j["S1"] = m.s1;
    j["S2"] = m.s2;
    j["delay"] = m.delay;
    j["K"] = m.inventory.size();
    j["Y1"] = m.y1;
    j["Y2"] = m.y2;
    j["inventory"] = m.inventory;
    j["frames"] = m.x.rows();
    j["dims"] = m.x.cols();
    j["offset"] = offset;
    manifest += j.dump() + "\n";
    const size_t bytes = static_cast<size_t>(m.x.size()) * sizeof(double);
    features.append(reinterpret_cast<const char *>(m.x.data()), bytes);
    offset += bytes;
  }
  WriteFileAtomic(dir + "/features.bin", features);
  WriteFileAtomic(dir + "/manifest.jsonl", manifest);
}

Dataset ReadDataset(const std::string &dir) {
  std::ifstream man(dir + "/manifest.jsonl");
  if (!man) Fail(ErrorKind::kIo, "cannot open ", dir, "/manifest.jsonl");
  std::ifstream feat(dir + "/features.bin", std::ios::binary);
  if (!feat) Fail(ErrorKind::kIo, "cannot open ", dir, "/features.bin");

  Dataset data;
  std::string line;
  int lineno = 0;
  while (std::getline(man, line)) {
    ++lineno;
    if (line.empty()) continue;
    MixtureSample m;
    try {
      const json j = json::parse(line);
      m.id = j.at("utt_id").get<std::string>();
      m.s1 = j.at("S1").get<int>();
      m.s2 = j.at("S2").get<int>();
      m.delay = j.at("delay").get<int>();
      m.y1 = j.at("Y1").get<std::vector<int>>();
      m.y2 = j.at("Y2").get<std::vector<int>>();
      m.inventory = j.at("inventory").get<std::vector<int>>();
      const auto frames = j.at("frames").get<Eigen::Index>();
      const auto dims = j.at("dims").get<Eigen::Index>();
      const auto offset = j.at("offset").get<std::streamoff>();
      if (static_cast<size_t>(j.at("K").get<int>()) != m.inventory.size())
        Fail(ErrorKind::kIo, "K does not match the inventory");
      m.x.resize(frames, dims);
      feat.seekg(offset);
      feat.read(reinterpret_cast<char *>(m.x.data()),
                static_cast<std::streamsize>(m.x.size() * sizeof(double)));
      if (!feat) Fail(ErrorKind::kIo, "features.bin truncated");
    } catch (const json::exception &e) {
      Fail(ErrorKind::kIo, dir, "/manifest.jsonl:", lineno, ": ", e.what());
    } catch (const Error &e) {
      Fail(ErrorKind::kIo, dir, "/manifest.jsonl:", lineno, ": ", e.what());
    }
    data.samples.push_back(std::move(m));
  }
  return data;
}

void WriteSpeakers(const std::string &path, const std::vector<SyntheticSpeaker> &speakers) {
  std::ostringstream os;
  for (const SyntheticSpeaker &s : speakers) {
    nlohmann::ordered_json j;
    j["id"] = s.id;
    j["band"] = s.band;
    j["profile"] = s.profile;
    j["voice_offset"] = s.voice_offset;
    os << j.dump(-1, ' ', false, json::error_handler_t::strict) << "\n";
  }
  WriteFileAtomic(path, os.str());
}

std::vector<SyntheticSpeaker> ReadSpeakers(const std::string &path) {
  std::ifstream is(path);
  if (!is) Fail(ErrorKind::kIo, "cannot open ", path);
  std::vector<SyntheticSpeaker> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      SyntheticSpeaker s;
      s.id = j.at("id").get<int>();
      s.band = j.at("band").get<int>();
      s.profile = j.at("profile").get<std::vector<double>>();
      s.voice_offset = j.at("voice_offset").get<std::vector<double>>();
      out.push_back(std::move(s));
    } catch (const json::exception &e) {
      Fail(ErrorKind::kIo, path, ": ", e.what());
    }
  }
  return out;
}

}  // namespace mtt
