// mtt/decode.h
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

#ifndef MTT_DECODE_H_
#define MTT_DECODE_H_

// Streaming greedy search for the recognition and speaker transducers.

#include <functional>
#include <string>
#include <vector>

#include "mtt/metrics.h"
#include "mtt/model.h"

namespace mtt {

enum class EventKind { kToken, kSpeaker };

struct DecodeEvent {
  EventKind kind = EventKind::kToken;
  int symbol = 0;  // token id, or inventory index for speakers
  int frame = 0;   // 1-based model frame
  bool operator==(const DecodeEvent &o) const {
    return kind == o.kind && symbol == o.symbol && frame == o.frame;
  }
};

// Supplies the recognition distribution at the current (t, label history).
// Logits(t) has V+1 entries with blank at index 0; Advance(k) feeds label k.
class AsrScorer {
 public:
  virtual ~AsrScorer() = default;
  virtual int num_frames() const = 0;
  virtual Vector Logits(int t) = 0;
  virtual void Advance(int label) = 0;
};

// Supplies the speaker node before any emission (u = 0) at frame t.
class SidScorer {
 public:
  virtual ~SidScorer() = default;
  virtual int num_frames() const = 0;
  virtual NodeLogits Logits(int t) = 0;
};

constexpr int kDefaultMaxSymbolsPerFrame = 5;

// At each frame takes the argmax repeatedly; a label is emitted and fed back,
// blank moves to the next frame. Ties go to blank. After max_symbols labels
// in a frame, blank is forced.
std::vector<DecodeEvent> GreedyDecodeAsr(AsrScorer &scorer,
                                         int max_symbols = kDefaultMaxSymbolsPerFrame);

struct SidDecode {
  std::vector<DecodeEvent> events;  // at most one
  int t_e = 0;                      // emission frame, or T when silent
};

// Emits argmax_k P(k) at the first frame where (1 - b) max_k P(k) > b.
SidDecode GreedyDecodeSid(SidScorer &scorer);

// Model-backed scorers over one stream's features.
class ModelAsrScorer : public AsrScorer {
 public:
  ModelAsrScorer(const ModelParams &p, const ModelConfig &config, const RowMatrix &feats);
  int num_frames() const override { return static_cast<int>(enc_proj_.rows()); }
  Vector Logits(int t) override;
  void Advance(int label) override;

 private:
  void UpdatePrediction(int id);

  const ModelParams &p_;
  int vocab_;
  RowMatrix enc_proj_;  // encoder output through the joint's frame half
  Vector state_;
  Vector pred_proj_;
};

class ModelSidScorer : public SidScorer {
 public:
  ModelSidScorer(const ModelParams &p, const ModelConfig &config, const RowMatrix &feats,
                 const SpeakerInventory &inventory);
  int num_frames() const override { return static_cast<int>(enc_proj_.rows()); }
  NodeLogits Logits(int t) override;

 private:
  const ModelParams &p_;
  RowMatrix enc_proj_;
  Vector pred_proj_;  // label half of the joint for u = 0
  RowMatrix profiles_;
};

// Mean t_e and t_e / T over utterances, plus p50 / p90 of t_e / T.
// Throws kEmptyInput on an empty set.
LatencySummary LatencyStats(const std::vector<int> &t_e, const std::vector<int> &num_frames);

struct StreamResult {
  std::vector<DecodeEvent> tokens;
  SidDecode speaker;
};

struct UttDecode {
  std::string utt_id;
  StreamResult stream[2];
  int num_frames = 0;
};

UttDecode DecodeExample(const ModelParams &p, const ModelConfig &config, const Example &ex,
                        int max_symbols = kDefaultMaxSymbolsPerFrame);

// Decodes every example and scores it. t_e is taken from stream 1.
EvalReport Evaluate(const ModelParams &p, const ModelConfig &config,
                    const std::vector<Example> &examples,
                    std::vector<UttDecode> *decodes = nullptr,
                    int max_symbols = kDefaultMaxSymbolsPerFrame);

// One JSON object per event: {utt_id, stream, kind, symbol, frame}. Speaker
// symbols are written as speaker labels from the inventory.
std::string EventsToJsonl(const std::vector<UttDecode> &decodes,
                          const std::vector<Example> &examples);

}  // namespace mtt

#endif  // MTT_DECODE_H_
