// src/metrics.cc
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

#include "mtt/metrics.h"

#include <algorithm>
#include <cstdio>

#include "json.hpp"
#include "mtt/error.h"

namespace mtt {

int EditDistance(std::span<const int> hyp, std::span<const int> ref) {
  // Single-row dynamic program over the reference.
  std::vector<int> row(ref.size() + 1);
  for (size_t j = 0; j <= ref.size(); ++j) row[j] = static_cast<int>(j);
  for (size_t i = 1; i <= hyp.size(); ++i) {
    int diag = row[0];
    row[0] = static_cast<int>(i);
    for (size_t j = 1; j <= ref.size(); ++j) {
      const int up = row[j];
      row[j] = std::min({up + 1, row[j - 1] + 1, diag + (hyp[i - 1] != ref[j - 1])});
      diag = up;
    }
  }
  return row[ref.size()];
}

PermutationScore PermutationWer(const std::vector<int> &hyp1, const std::vector<int> &hyp2,
                                const std::vector<int> &ref1, const std::vector<int> &ref2) {
  const int keep = EditDistance(hyp1, ref1) + EditDistance(hyp2, ref2);
  const int swap = EditDistance(hyp2, ref1) + EditDistance(hyp1, ref2);
  PermutationScore s;
  s.ref_words = static_cast<int>(ref1.size() + ref2.size());
  s.swapped = swap < keep;
  s.errors = std::min(keep, swap);
  return s;
}

double SpeakerErrorRate(const std::vector<SpeakerHyp> &utts) {
  if (utts.empty()) Fail(ErrorKind::kEmptyInput, "speaker error rate over no utterances");
  long total = 0;
  for (const SpeakerHyp &u : utts) {
    const std::vector<int> r1 = {u.s1}, r2 = {u.s2};
    total += std::min(EditDistance(u.q1, r1) + EditDistance(u.q2, r2),
                      EditDistance(u.q2, r1) + EditDistance(u.q1, r2));
  }
  return static_cast<double>(total) / (2.0 * static_cast<double>(utts.size()));
}

std::string EvalReport::ToJson() const {
  nlohmann::ordered_json j;
  j["wer"] = wer;
  j["ser"] = ser;
  j["latency"] = {{"mean_t_e", latency.mean_te},
                  {"mean_t_e_over_T", latency.mean_te_over_t},
                  {"p50_t_e_over_T", latency.p50_te_over_t},
                  {"p90_t_e_over_T", latency.p90_te_over_t}};
  auto &arr = j["utterances"] = nlohmann::ordered_json::array();
  for (const UttRecord &u : utts) {
    arr.push_back({{"utt_id", u.utt_id},
                   {"permutation", u.swapped ? "swap" : "identity"},
                   {"word_errors", u.word_errors},
                   {"ref_words", u.ref_words},
                   {"speaker_errors", u.speaker_errors},
                   {"t_e", u.t_e},
                   {"T", u.num_frames}});
  }
  return j.dump(2) + "\n";
}

std::string EvalReport::CsvHeader() { return "system,wer,ser,t_e,t_e_over_T\n"; }

std::string EvalReport::CsvRow(const std::string &system) const {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f\n", system.c_str(), wer, ser,
                latency.mean_te, latency.mean_te_over_t);
  return buf;
}

}  // namespace mtt
