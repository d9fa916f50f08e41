// src/error.cc
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

#include "mtt/error.h"

namespace mtt {

const char *ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "invalid input";
    case ErrorKind::kShape: return "shape error";
    case ErrorKind::kInvalidLabel: return "invalid label";
    case ErrorKind::kInvalidConfig: return "invalid config";
    case ErrorKind::kConsistency: return "consistency error";
    case ErrorKind::kTooLarge: return "instance too large";
    case ErrorKind::kEmptyInventory: return "empty inventory";
    case ErrorKind::kUnknownSpeaker: return "unknown speaker";
    case ErrorKind::kEmptyInput: return "empty input";
    case ErrorKind::kDivergence: return "training divergence";
    case ErrorKind::kIo: return "i/o error";
  }
  return "error";
}

}  // namespace mtt
