// mtt/verify.h
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

#ifndef MTT_VERIFY_H_
#define MTT_VERIFY_H_

// Self-check suite behind `mtt verify`: brute-force loss equivalence,
// finite-difference gradient checks and the structural invariants.

#include <cstdint>
#include <string>
#include <vector>

namespace mtt {

// Central-difference step for whole-model checks. The joint loss of even a
// tiny model is O(100), so a 1e-5 step leaves about 1e-9 of rounding noise
// in every difference quotient; 1e-3 keeps truncation error near 1e-6
// relative while resolving coordinates down to 1e-8.
constexpr double kModelFiniteDiffStep = 1e-3;

struct VerifyBounds {
  int num_lattices = 1000;
  int max_frames = 5;
  int max_targets = 3;
  int max_labels = 4;
  int num_composition = 1000;
  uint64_t seed = 1;
};

struct VerifyCheck {
  std::string name;
  bool passed = false;
  double worst = 0.0;  // largest observed error for numeric checks
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  bool passed() const;
};

VerifyCheck CheckLossEquivalence(const VerifyBounds &b);
VerifyCheck CheckLatticeGradients(const VerifyBounds &b);
VerifyCheck CheckNeuralGradients(const VerifyBounds &b);
VerifyCheck CheckJointGradient(const VerifyBounds &b);
VerifyCheck CheckNormalization(const VerifyBounds &b);
VerifyCheck CheckConservation(const VerifyBounds &b);
VerifyCheck CheckPitBound(const VerifyBounds &b);
VerifyCheck CheckJointLinearity(const VerifyBounds &b);
VerifyCheck CheckLambdaZero(const VerifyBounds &b);

VerifyReport RunVerification(const VerifyBounds &b);

}  // namespace mtt

#endif  // MTT_VERIFY_H_
