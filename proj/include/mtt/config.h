// mtt/config.h
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

#ifndef MTT_CONFIG_H_
#define MTT_CONFIG_H_

// Experiment configuration: a line-oriented file of `key = value` pairs
// under `[section]` headers, with `#` comments. Keys are addressed as
// `section.key`; top-level keys have no section.

#include <cstdint>
#include <string>
#include <vector>

#include "mtt/data.h"
#include "mtt/params.h"
#include "mtt/train.h"

namespace mtt {

struct SweepCell {
  double alpha = 1.0;
  double beta = 0.0;
};

struct SweepConfig {
  bool finetune = true;  // false retrains every cell from scratch
  int finetune_epochs = 4;
  std::vector<SweepCell> cells = {{1.0, 0.0}, {0.6, 0.0}, {0.8, 0.0}, {0.8, 1.0}};
};

struct ExperimentConfig {
  uint64_t seed = 1;
  DataConfig data;
  ModelConfig model;
  TrainConfig train;
  SweepConfig sweep;
  int max_symbols = 5;

  // Derives the model's input width, vocabulary and profile size from the
  // data section, then validates everything.
  void Finalize();

  // Applies one `section.key = value` assignment. Unknown keys and
  // malformed values throw kInvalidConfig.
  void Set(const std::string &key, const std::string &value);

  // Parses file text; `origin` names it in diagnostics.
  void Parse(const std::string &text, const std::string &origin);
  void ParseFile(const std::string &path);

  // Resolved configuration in the same format.
  std::string ToString() const;
};

// "a:b,c:d" -> cells
std::vector<SweepCell> ParseCells(const std::string &text);

}  // namespace mtt

#endif  // MTT_CONFIG_H_
