// mtt/data.h
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

#ifndef MTT_DATA_H_
#define MTT_DATA_H_

// Synthetic two-talker corpus. Utterances are token sequences rendered as
// feature frames; mixtures overlay a second utterance after a delay.
//
// Frames are split into `num_bands` registers. Each speaker owns one band
// and renders its token templates and voice signature there, so which
// speaker produced which part of an overlapped frame is recoverable. Mixtures
// never pair two speakers from the same band.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mtt/inventory.h"
#include "mtt/tensor.h"

namespace mtt {

struct DataConfig {
  int vocab_size = 16;
  int frames_per_token = 3;
  int min_tokens = 4;
  int max_tokens = 10;
  int num_bands = 8;
  int token_dims = 4;   // per band
  int voice_dims = 2;   // per band, carries only the voice signature
  double noise_sigma = 0.1;
  double template_scale = 1.0;
  double voice_scale = 0.5;
  int pool_size = 40;
  int spk_dim = 16;
  int num_train = 6000;
  int num_eval = 200;
  int min_inventory = 2;
  int max_inventory = 8;
  int eval_inventory = 8;
  int min_delay = 5;  // frames

  int band_width() const { return token_dims + voice_dims; }
  int feat_dim() const { return num_bands * band_width(); }
  void Validate() const;
};

struct SyntheticSpeaker {
  int id = 0;
  int band = 0;
  std::vector<double> profile;       // unit vector, spk_dim
  std::vector<double> voice_offset;  // feat_dim, zero outside the band
};

// Token templates and the speaker pool, both fixed by the seed.
class SyntheticWorld {
 public:
  SyntheticWorld(const DataConfig &config, uint64_t seed);

  const DataConfig &config() const { return config_; }
  const std::vector<SyntheticSpeaker> &speakers() const { return speakers_; }
  const SyntheticSpeaker &speaker(int id) const;
  // token_dims values for token id `token`.
  std::span<const double> token_template(int token) const;

  // Inventory over the given speaker ids, in that order.
  SpeakerInventory Inventory(const std::vector<int> &ids) const;

 private:
  DataConfig config_;
  std::vector<double> templates_;
  std::vector<SyntheticSpeaker> speakers_;
};

struct Utterance {
  int speaker = 0;
  std::vector<int> tokens;
  RowMatrix features;  // (tokens * R) x feat_dim
};

// Uniform tokens; frames = template in the speaker's band + voice offset +
// N(0, sigma^2) noise, R identical-template frames per token.
Utterance SynthUtterance(const SyntheticWorld &world, int speaker, int num_tokens,
                         uint64_t seed);

struct MixtureSample {
  std::string id;
  RowMatrix x;  // raw mixed frames
  std::vector<int> y1, y2;  // y1 is the earlier talker
  int s1 = 0, s2 = 0;  // speaker ids
  int delay = 0;       // onset of the second talker in raw frames
  std::vector<int> inventory;  // speaker ids, shuffled, contains s1 and s2
};

// Overlays u2 shifted by `delay` frames on u1. Length max(len1, delay+len2).
MixtureSample Mix(const Utterance &u1, const Utterance &u2, int delay);

// Uniform in [min_delay, len1]; nullopt when len1 < min_delay, meaning the
// caller should draw a new source utterance.
std::optional<int> SampleTrainingDelay(int len1_frames, int min_delay, std::mt19937_64 &rng);
// Uniform in [0, len1].
int SampleEvalDelay(int len1_frames, std::mt19937_64 &rng);

// {s1, s2} plus K-2 distinct distractors from `pool`, shuffled.
std::vector<int> SampleInventory(int s1, int s2, const std::vector<int> &pool, int k,
                                 std::mt19937_64 &rng);

// Splices 3 consecutive frames and keeps every third super-frame:
// output row t is [x(3t), x(3t+1), x(3t+2)]. T < 3 is an error.
RowMatrix FeaturePipeline(const RowMatrix &raw);
// Raw-frame delay to the model frame rate.
inline int ModelFrames(int raw_frames) { return raw_frames / 3; }

enum class Split { kTrain, kEval };

// Sample `index` of a split, a pure function of (world, seed, split, index).
MixtureSample GenerateMixture(const SyntheticWorld &world, uint64_t seed, Split split,
                              int index);

struct Dataset {
  std::vector<MixtureSample> samples;
};

// On disk: <dir>/manifest.jsonl with one object per sample
//   {utt_id, S1, S2, delay, K, Y1, Y2, inventory, frames, dims, offset}
// and <dir>/features.bin holding the raw little-endian doubles.
void WriteDataset(const std::string &dir, const Dataset &data);
Dataset ReadDataset(const std::string &dir);

// <path> holds one JSON object per speaker {id, band, profile, voice_offset}.
void WriteSpeakers(const std::string &path, const std::vector<SyntheticSpeaker> &speakers);
std::vector<SyntheticSpeaker> ReadSpeakers(const std::string &path);
SpeakerInventory InventoryFromSpeakers(const std::vector<SyntheticSpeaker> &speakers,
                                       const std::vector<int> &ids);

// Writes `contents` to `path` via a temporary file and rename.
void WriteFileAtomic(const std::string &path, const std::string &contents);

}  // namespace mtt

#endif  // MTT_DATA_H_
