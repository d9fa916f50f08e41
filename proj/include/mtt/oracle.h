// mtt/oracle.h
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

#ifndef MTT_ORACLE_H_
#define MTT_ORACLE_H_

// Brute-force references for the lattice and network gradients. Nothing here
// shares code with the forward-backward implementation.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mtt/lattice.h"

namespace mtt {

enum class Move : uint8_t { kBlank, kLabel };

struct PathEnumeration {
  std::vector<std::vector<Move>> paths;
  uint64_t count = 0;
};

// Largest T-1+U the enumerator accepts.
constexpr int kMaxEnumerationMoves = 20;

uint64_t BinomialCoefficient(int n, int k);

// Every move sequence with T-1 blanks and U labels, in lexicographic order
// (kBlank < kLabel). Throws kTooLarge above the bound.
PathEnumeration EnumeratePaths(int num_frames, int num_targets);

// -log of the explicit sum over all paths of the product of arc
// probabilities. Probabilities are normalized directly from the logits.
double EnumerateLoss(const AlignmentLattice &lattice);

using ScalarFunction = std::function<double(std::span<const double>)>;

// Central differences (f(p + h e_i) - f(p - h e_i)) / 2h for every i.
// Non-finite evaluations propagate into the result.
std::vector<double> FiniteDiff(const ScalarFunction &f,
                               std::span<const double> params, double step);

// |a - n| / max(|a|, |n|); 0 when both are 0.
double RelativeError(double analytic, double numeric);

}  // namespace mtt

#endif  // MTT_ORACLE_H_
