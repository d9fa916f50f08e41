// src/decode.cc
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

#include "mtt/decode.h"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "mtt/error.h"

namespace mtt {

std::vector<DecodeEvent> GreedyDecodeAsr(AsrScorer &scorer, int max_symbols) {
  std::vector<DecodeEvent> events;
  for (int t = 0; t < scorer.num_frames(); ++t) {
    for (int emitted = 0; emitted < max_symbols; ++emitted) {
      const Vector logits = scorer.Logits(t);
      Eigen::Index best = 0;
      for (Eigen::Index k = 1; k < logits.size(); ++k)
        if (logits(k) > logits(best)) best = k;
      if (best == 0) break;
      const int label = static_cast<int>(best) - 1;
      events.push_back({EventKind::kToken, label, t + 1});
      scorer.Advance(label);
    }
  }
  return events;
}

SidDecode GreedyDecodeSid(SidScorer &scorer) {
  SidDecode out;
  const int T = scorer.num_frames();
  out.t_e = T;
  for (int t = 0; t < T; ++t) {
    const NodeLogits node = scorer.Logits(t);
    if (node.label_logits.empty()) Fail(ErrorKind::kEmptyInventory, "no speakers to score");
    const NodeLogProbs lp = HatNodeLogProbs(node);
    const auto best = std::max_element(lp.labels.begin(), lp.labels.end());
    // lp.labels already include log(1 - b).
    if (*best > lp.blank) {
      out.events.push_back(
          {EventKind::kSpeaker, static_cast<int>(best - lp.labels.begin()), t + 1});
      out.t_e = t + 1;
      break;
    }
  }
  return out;
}

ModelAsrScorer::ModelAsrScorer(const ModelParams &p, const ModelConfig &config,
                               const RowMatrix &feats)
    : p_(p), vocab_(config.vocab_size) {
  RowMatrix h = feats;
  for (const nn::GruParams &layer : p.asr_enc) h = nn::GruForward(layer, h);
  enc_proj_ = h * p.asr_joint_enc_w.matrix().transpose();
  state_ = Vector::Zero(p.asr_pred.hidden());
  UpdatePrediction(0);
}

void ModelAsrScorer::UpdatePrediction(int id) {
  const Vector x = p_.asr_embed.matrix().row(id).transpose();
  state_ = nn::GruStep(p_.asr_pred, x, state_);
  pred_proj_ = p_.asr_joint_pred_w.matrix() * state_ + p_.asr_joint_b.vector();
}

Vector ModelAsrScorer::Logits(int t) {
  const Vector z = (enc_proj_.row(t).transpose() + pred_proj_).array().tanh().matrix();
  return p_.asr_out_w.matrix() * z + p_.asr_out_b.vector();
}

void ModelAsrScorer::Advance(int label) {
  if (label < 0 || label >= vocab_) Fail(ErrorKind::kInvalidLabel, "token ", label);
  UpdatePrediction(label + 1);
}

ModelSidScorer::ModelSidScorer(const ModelParams &p, const ModelConfig &config,
                               const RowMatrix &feats, const SpeakerInventory &inventory)
    : p_(p) {
  if (inventory.size() == 0) Fail(ErrorKind::kEmptyInventory, "speaker inventory is empty");
  if (inventory.dim() != config.spk_dim)
    Fail(ErrorKind::kShape, "profile dimension ", inventory.dim(), ", expected ", config.spk_dim);
  enc_proj_ = nn::GruForward(p.sid_enc, feats) * p.sid_joint_enc_w.matrix().transpose();
  pred_proj_ = p.sid_joint_pred_w.matrix() * p.sid_embed.matrix().row(0).transpose() +
               p.sid_joint_b.vector();
  profiles_.resize(inventory.size(), inventory.dim());
  for (int k = 0; k < inventory.size(); ++k)
    for (int j = 0; j < inventory.dim(); ++j) profiles_(k, j) = inventory.embedding(k)[j];
}

NodeLogits ModelSidScorer::Logits(int t) {
  const Vector z = (enc_proj_.row(t).transpose() + pred_proj_).array().tanh().matrix();
  NodeLogits node;
  node.blank_logit = p_.sid_blank_w.matrix().row(0).dot(z) + p_.sid_blank_b[0];
  const Vector e = p_.sid_spk_w.matrix() * z + p_.sid_spk_b.vector();
  const Vector logits = profiles_ * e;
  node.label_logits.assign(logits.data(), logits.data() + logits.size());
  return node;
}

namespace {

double Quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

LatencySummary LatencyStats(const std::vector<int> &t_e, const std::vector<int> &num_frames) {
  if (t_e.empty()) Fail(ErrorKind::kEmptyInput, "latency over no utterances");
  if (t_e.size() != num_frames.size())
    Fail(ErrorKind::kShape, t_e.size(), " emission frames but ", num_frames.size(), " lengths");
  LatencySummary s;
  std::vector<double> ratio;
  for (size_t i = 0; i < t_e.size(); ++i) {
    if (num_frames[i] <= 0) Fail(ErrorKind::kInvalidInput, "utterance without frames");
    s.mean_te += t_e[i];
    ratio.push_back(static_cast<double>(t_e[i]) / num_frames[i]);
    s.mean_te_over_t += ratio.back();
  }
  s.mean_te /= static_cast<double>(t_e.size());
  s.mean_te_over_t /= static_cast<double>(t_e.size());
  s.p50_te_over_t = Quantile(ratio, 0.5);
  s.p90_te_over_t = Quantile(ratio, 0.9);
  return s;
}

UttDecode DecodeExample(const ModelParams &p, const ModelConfig &config, const Example &ex,
                        int max_symbols) {
  const UnmixOutput un = Unmix(p, config, ex.x);
  UttDecode d;
  d.utt_id = ex.id;
  d.num_frames = static_cast<int>(un.stream[0].rows());
  for (int i = 0; i < 2; ++i) {
    ModelAsrScorer asr(p, config, un.stream[i]);
    d.stream[i].tokens = GreedyDecodeAsr(asr, max_symbols);
    ModelSidScorer sid(p, config, un.stream[i], ex.inventory);
    d.stream[i].speaker = GreedyDecodeSid(sid);
  }
  return d;
}

EvalReport Evaluate(const ModelParams &p, const ModelConfig &config,
                    const std::vector<Example> &examples, std::vector<UttDecode> *decodes,
                    int max_symbols) {
  if (examples.empty()) Fail(ErrorKind::kEmptyInput, "nothing to evaluate");
  EvalReport report;
  std::vector<SpeakerHyp> spk;
  std::vector<int> t_e, lengths;
  long errors = 0, words = 0;
  for (const Example &ex : examples) {
    UttDecode d = DecodeExample(p, config, ex, max_symbols);
    std::vector<int> hyp[2], q[2];
    for (int i = 0; i < 2; ++i) {
      for (const DecodeEvent &e : d.stream[i].tokens) hyp[i].push_back(e.symbol);
      for (const DecodeEvent &e : d.stream[i].speaker.events) q[i].push_back(e.symbol);
    }
    const PermutationScore ps = PermutationWer(hyp[0], hyp[1], ex.y1, ex.y2);
    errors += ps.errors;
    words += ps.ref_words;

    SpeakerHyp sh{q[0], q[1], ex.s1, ex.s2};
    UttRecord r;
    r.utt_id = ex.id;
    r.swapped = ps.swapped;
    r.word_errors = ps.errors;
    r.ref_words = ps.ref_words;
    r.speaker_errors = static_cast<int>(std::lround(SpeakerErrorRate({sh}) * 2.0));
    r.t_e = d.stream[0].speaker.t_e;
    r.num_frames = d.num_frames;
    report.utts.push_back(r);
    spk.push_back(std::move(sh));
    t_e.push_back(r.t_e);
    lengths.push_back(r.num_frames);
    if (decodes) decodes->push_back(std::move(d));
  }
  report.wer = words > 0 ? static_cast<double>(errors) / static_cast<double>(words) : 0.0;
  report.ser = SpeakerErrorRate(spk);
  report.latency = LatencyStats(t_e, lengths);
  return report;
}

std::string EventsToJsonl(const std::vector<UttDecode> &decodes,
                          const std::vector<Example> &examples) {
  std::string out;
  for (size_t n = 0; n < decodes.size(); ++n) {
    const UttDecode &d = decodes[n];
    for (int i = 0; i < 2; ++i) {
      auto emit = [&](const DecodeEvent &e) {
        nlohmann::ordered_json j;
        j["utt_id"] = d.utt_id;
        j["stream"] = i + 1;
        j["kind"] = e.kind == EventKind::kToken ? "token" : "speaker";
        j["symbol"] = e.kind == EventKind::kSpeaker && n < examples.size()
                          ? examples[n].inventory.labels()[e.symbol]
                          : e.symbol;
        j["frame"] = e.frame;
        out += j.dump() + "\n";
      };
      for (const DecodeEvent &e : d.stream[i].tokens) emit(e);
      for (const DecodeEvent &e : d.stream[i].speaker.events) emit(e);
    }
  }
  return out;
}

}  // namespace mtt
