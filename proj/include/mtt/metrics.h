// mtt/metrics.h
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

#ifndef MTT_METRICS_H_
#define MTT_METRICS_H_

#include <span>
#include <string>
#include <vector>

namespace mtt {

// Levenshtein distance with unit costs.
int EditDistance(std::span<const int> hyp, std::span<const int> ref);

struct PermutationScore {
  int errors = 0;
  int ref_words = 0;
  bool swapped = false;  // hyp stream 1 was scored against ref stream 2
};

// Minimum over the two hypothesis-to-reference assignments of the summed
// edit distance. Ties keep the identity assignment.
PermutationScore PermutationWer(const std::vector<int> &hyp1, const std::vector<int> &hyp2,
                                const std::vector<int> &ref1, const std::vector<int> &ref2);

// Per-utterance speaker labels of the two streams.
struct SpeakerHyp {
  std::vector<int> q1, q2;
  int s1 = 0, s2 = 0;
};

// (1 / 2N) sum_n min(E(Q1,S1) + E(Q2,S2), E(Q2,S1) + E(Q1,S2)).
double SpeakerErrorRate(const std::vector<SpeakerHyp> &utts);

struct UttRecord {
  std::string utt_id;
  bool swapped = false;
  int word_errors = 0;
  int ref_words = 0;
  int speaker_errors = 0;  // numerator term of the speaker error rate
  int t_e = 0;             // first-stream speaker emission frame
  int num_frames = 0;
};

struct LatencySummary {
  double mean_te = 0.0;
  double mean_te_over_t = 0.0;
  double p50_te_over_t = 0.0;
  double p90_te_over_t = 0.0;
};

struct EvalReport {
  double wer = 0.0;
  double ser = 0.0;
  LatencySummary latency;
  std::vector<UttRecord> utts;

  std::string ToJson() const;
  // Header "system,wer,ser,t_e,t_e_over_T" and one row.
  static std::string CsvHeader();
  std::string CsvRow(const std::string &system) const;
};

}  // namespace mtt

#endif  // MTT_METRICS_H_
