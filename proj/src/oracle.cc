// src/oracle.cc
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

#include "mtt/oracle.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mtt/error.h"

namespace mtt {

namespace {

void CheckBound(int num_frames, int num_targets) {
  if (num_frames < 1 || num_targets < 0)
    Fail(ErrorKind::kShape, "enumeration needs T >= 1 and U >= 0");
  if (num_frames - 1 + num_targets > kMaxEnumerationMoves)
    Fail(ErrorKind::kTooLarge, "T-1+U = ", num_frames - 1 + num_targets,
         " exceeds the enumeration bound ", kMaxEnumerationMoves);
}

// Visits every path as a bitmask over move positions (bit set = label).
template <typename Visit>
void ForEachPath(int num_frames, int num_targets, Visit &&visit) {
  const int n = num_frames - 1 + num_targets;
  std::vector<Move> moves(n);
  // Recursive placement keeps lexicographic order.
  std::function<void(int, int, int)> rec = [&](int pos, int blanks, int labels) {
    if (pos == n) {
      visit(moves);
      return;
    }
    if (blanks > 0) {
      moves[pos] = Move::kBlank;
      rec(pos + 1, blanks - 1, labels);
    }
    if (labels > 0) {
      moves[pos] = Move::kLabel;
      rec(pos + 1, blanks, labels - 1);
    }
  };
  rec(0, num_frames - 1, num_targets);
}

// Plain probabilities of (blank, target label) at every node.
struct NodeProbs {
  std::vector<double> blank;
  std::vector<double> label;
};

NodeProbs DirectProbabilities(const AlignmentLattice &lat) {
  const int T = lat.num_frames(), U = lat.num_targets(), L = lat.num_labels();
  NodeProbs probs;
  probs.blank.assign(lat.num_nodes(), 0.0);
  probs.label.assign(lat.num_nodes(), 0.0);
  for (int t = 0; t < T; ++t) {
    for (int u = 0; u <= U; ++u) {
      const size_t i = lat.Index(t, u);
      auto ll = lat.label_logits(t, u);
      const double z = lat.blank_logit(t, u);
      double shift = z;
      if (lat.mode() == TransducerMode::kHat) shift = ll[0];
      for (int k = 0; k < L; ++k) shift = std::max(shift, ll[k]);
      double denom = 0.0;
      for (int k = 0; k < L; ++k) denom += std::exp(ll[k] - shift);
      double label_scale = 1.0;
      if (lat.mode() == TransducerMode::kRnnt) {
        denom += std::exp(z - shift);
        probs.blank[i] = std::exp(z - shift) / denom;
      } else {
        const double b = 1.0 / (1.0 + std::exp(-z));
        probs.blank[i] = b;
        label_scale = 1.0 - b;
      }
      if (u < U) {
        probs.label[i] = label_scale * std::exp(ll[lat.targets()[u]] - shift) /
                         denom * std::exp(-lat.label_penalty(t, u));
      }
    }
  }
  return probs;
}

}  // namespace

uint64_t BinomialCoefficient(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

PathEnumeration EnumeratePaths(int num_frames, int num_targets) {
  CheckBound(num_frames, num_targets);
  PathEnumeration out;
  ForEachPath(num_frames, num_targets,
              [&](const std::vector<Move> &m) { out.paths.push_back(m); });
  out.count = out.paths.size();
  return out;
}

double EnumerateLoss(const AlignmentLattice &lat) {
  CheckBound(lat.num_frames(), lat.num_targets());
  lat.CheckFinite();
  const NodeProbs probs = DirectProbabilities(lat);
  std::vector<double> path_logs;
  path_logs.reserve(BinomialCoefficient(lat.num_frames() - 1 + lat.num_targets(),
                                        lat.num_targets()));
  ForEachPath(lat.num_frames(), lat.num_targets(), [&](const std::vector<Move> &m) {
    int t = 0, u = 0;
    double lp = 0.0;
    for (Move mv : m) {
      const size_t i = lat.Index(t, u);
      if (mv == Move::kBlank) {
        lp += std::log(probs.blank[i]);
        ++t;
      } else {
        lp += std::log(probs.label[i]);
        ++u;
      }
    }
    path_logs.push_back(lp);
  });
  const double m = *std::max_element(path_logs.begin(), path_logs.end());
  if (m == -std::numeric_limits<double>::infinity())
    return std::numeric_limits<double>::infinity();
  double s = 0.0;
  for (double lp : path_logs) s += std::exp(lp - m);
  return -(m + std::log(s));
}

std::vector<double> FiniteDiff(const ScalarFunction &f,
                               std::span<const double> params, double step) {
  if (!(step > 0.0)) Fail(ErrorKind::kInvalidConfig, "finite-difference step must be > 0");
  std::vector<double> p(params.begin(), params.end());
  std::vector<double> grad(p.size());
  for (size_t i = 0; i < p.size(); ++i) {
    const double orig = p[i];
    p[i] = orig + step;
    const double fp = f(p);
    p[i] = orig - step;
    const double fm = f(p);
    p[i] = orig;
    grad[i] = (fp - fm) / (2.0 * step);
  }
  return grad;
}

double RelativeError(double analytic, double numeric) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  if (scale == 0.0) return 0.0;
  return std::abs(analytic - numeric) / scale;
}

}  // namespace mtt
