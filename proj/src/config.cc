// src/config.cc
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

#include "mtt/config.h"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "mtt/error.h"

namespace mtt {

namespace {

std::string Trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void BadValue(const std::string &key, const std::string &value, const char *want) {
  Fail(ErrorKind::kInvalidConfig, "bad value '", value, "' for ", key, ": expected ", want);
}

template <typename Int>
Int ParseInt(const std::string &key, const std::string &v) {
  Int out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) BadValue(key, v, "an integer");
  return out;
}

double ParseDouble(const std::string &key, const std::string &v) {
  char *end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size()) BadValue(key, v, "a number");
  return d;
}

bool ParseBool(const std::string &key, const std::string &v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  BadValue(key, v, "true or false");
}

std::string FormatDouble(double d) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", d);
  // Prefer the shortest form that reads back identically.
  for (int prec = 1; prec <= 17; ++prec) {
    char s[64];
    std::snprintf(s, sizeof(s), "%.*g", prec, d);
    if (std::strtod(s, nullptr) == d) return s;
  }
  return buf;
}

struct Entry {
  std::string key;
  std::function<void(const std::string &key, const std::string &)> set;
  std::function<std::string()> get;
};

Entry IntEntry(std::string key, int *v) {
  return {std::move(key), [v](const std::string &k, const std::string &s) { *v = ParseInt<int>(k, s); },
          [v] { return std::to_string(*v); }};
}
Entry U64Entry(std::string key, uint64_t *v) {
  return {std::move(key),
          [v](const std::string &k, const std::string &s) { *v = ParseInt<uint64_t>(k, s); },
          [v] { return std::to_string(*v); }};
}
Entry DoubleEntry(std::string key, double *v) {
  return {std::move(key),
          [v](const std::string &k, const std::string &s) { *v = ParseDouble(k, s); },
          [v] { return FormatDouble(*v); }};
}
Entry BoolEntry(std::string key, bool *v) {
  return {std::move(key),
          [v](const std::string &k, const std::string &s) { *v = ParseBool(k, s); },
          [v] { return std::string(*v ? "true" : "false"); }};
}

std::vector<Entry> Entries(ExperimentConfig &c) {
  DataConfig &d = c.data;
  ModelConfig &m = c.model;
  TrainConfig &t = c.train;
  return {
      U64Entry("seed", &c.seed),
      IntEntry("data.vocab_size", &d.vocab_size),
      IntEntry("data.frames_per_token", &d.frames_per_token),
      IntEntry("data.min_tokens", &d.min_tokens),
      IntEntry("data.max_tokens", &d.max_tokens),
      IntEntry("data.num_bands", &d.num_bands),
      IntEntry("data.token_dims", &d.token_dims),
      IntEntry("data.voice_dims", &d.voice_dims),
      DoubleEntry("data.noise_sigma", &d.noise_sigma),
      DoubleEntry("data.template_scale", &d.template_scale),
      DoubleEntry("data.voice_scale", &d.voice_scale),
      IntEntry("data.pool_size", &d.pool_size),
      IntEntry("data.spk_dim", &d.spk_dim),
      IntEntry("data.num_train", &d.num_train),
      IntEntry("data.num_eval", &d.num_eval),
      IntEntry("data.min_inventory", &d.min_inventory),
      IntEntry("data.max_inventory", &d.max_inventory),
      IntEntry("data.eval_inventory", &d.eval_inventory),
      IntEntry("data.min_delay", &d.min_delay),
      IntEntry("model.unmix_channels", &m.unmix_channels),
      IntEntry("model.unmix_kernel", &m.unmix_kernel),
      IntEntry("model.freq_bands", &m.freq_bands),
      BoolEntry("model.mask_context", &m.mask_context),
      BoolEntry("model.time_reduction", &m.time_reduction),
      IntEntry("model.asr_hidden", &m.asr_hidden),
      IntEntry("model.asr_layers", &m.asr_layers),
      IntEntry("model.label_embed", &m.label_embed),
      IntEntry("model.pred_hidden", &m.pred_hidden),
      IntEntry("model.joint_dim", &m.joint_dim),
      IntEntry("model.sid_hidden", &m.sid_hidden),
      IntEntry("model.sid_embed", &m.sid_embed),
      IntEntry("model.sid_joint", &m.sid_joint),
      {"train.mode",
       [&t](const std::string &k, const std::string &v) {
         if (v == "joint") t.mode = TrainMode::kJoint;
         else if (v == "stepwise") t.mode = TrainMode::kStepwise;
         else BadValue(k, v, "joint or stepwise");
       },
       [&t] { return std::string(t.mode == TrainMode::kJoint ? "joint" : "stepwise"); }},
      {"train.assignment",
       [&t](const std::string &k, const std::string &v) {
         if (v == "heat") t.assignment = Assignment::kHeat;
         else if (v == "pit") t.assignment = Assignment::kPit;
         else BadValue(k, v, "heat or pit");
       },
       [&t] { return std::string(t.assignment == Assignment::kHeat ? "heat" : "pit"); }},
      DoubleEntry("train.lambda", &t.lambda),
      IntEntry("train.epochs", &t.epochs),
      IntEntry("train.sid_epochs", &t.sid_epochs),
      IntEntry("train.batch_size", &t.batch_size),
      DoubleEntry("train.lr", &t.adam.lr),
      DoubleEntry("train.beta1", &t.adam.beta1),
      DoubleEntry("train.beta2", &t.adam.beta2),
      DoubleEntry("train.eps", &t.adam.eps),
      DoubleEntry("train.clip_norm", &t.adam.clip_norm),
      DoubleEntry("train.weight_decay", &t.adam.weight_decay),
      DoubleEntry("train.lr_decay", &t.lr_decay),
      U64Entry("train.seed", &t.seed),
      BoolEntry("train.penalize", &t.penalize),
      DoubleEntry("latency.alpha", &t.latency.alpha),
      DoubleEntry("latency.beta", &t.latency.beta),
      IntEntry("latency.t_buffer", &t.latency.t_buffer),
      {"sweep.regime",
       [&c](const std::string &k, const std::string &v) {
         if (v == "finetune") c.sweep.finetune = true;
         else if (v == "retrain") c.sweep.finetune = false;
         else BadValue(k, v, "finetune or retrain");
       },
       [&c] { return std::string(c.sweep.finetune ? "finetune" : "retrain"); }},
      IntEntry("sweep.finetune_epochs", &c.sweep.finetune_epochs),
      {"sweep.cells",
       [&c](const std::string &, const std::string &v) { c.sweep.cells = ParseCells(v); },
       [&c] {
         std::string s;
         for (const SweepCell &cell : c.sweep.cells) {
           if (!s.empty()) s += ",";
           s += FormatDouble(cell.alpha) + ":" + FormatDouble(cell.beta);
         }
         return s;
       }},
      IntEntry("eval.max_symbols", &c.max_symbols),
  };
}

}  // namespace

std::vector<SweepCell> ParseCells(const std::string &text) {
  std::vector<SweepCell> cells;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = Trim(item);
    const auto colon = item.find(':');
    if (colon == std::string::npos) BadValue("sweep.cells", item, "alpha:beta");
    cells.push_back({ParseDouble("sweep.cells", Trim(item.substr(0, colon))),
                     ParseDouble("sweep.cells", Trim(item.substr(colon + 1)))});
  }
  if (cells.empty()) BadValue("sweep.cells", text, "at least one alpha:beta pair");
  return cells;
}

void ExperimentConfig::Finalize() {
  data.Validate();
  model.input_dim = kSpliceFrames * data.feat_dim();
  model.vocab_size = data.vocab_size;
  model.spk_dim = data.spk_dim;
  model.Validate();
  train.Validate();
  if (sweep.finetune_epochs < 0) Fail(ErrorKind::kInvalidConfig, "finetune_epochs must be >= 0");
  for (const SweepCell &cell : sweep.cells) {
    LatencyConfig lc;
    lc.alpha = cell.alpha;
    lc.beta = cell.beta;
    lc.Validate();
  }
  if (max_symbols < 1) Fail(ErrorKind::kInvalidConfig, "max_symbols must be >= 1");
}

void ExperimentConfig::Set(const std::string &key, const std::string &value) {
  for (Entry &e : Entries(*this)) {
    if (e.key == key) {
      e.set(key, Trim(value));
      return;
    }
  }
  Fail(ErrorKind::kInvalidConfig, "unknown config key '", key, "'");
}

void ExperimentConfig::Parse(const std::string &text, const std::string &origin) {
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        Fail(ErrorKind::kInvalidConfig, origin, ":", lineno, ": malformed section header");
      section = Trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      Fail(ErrorKind::kInvalidConfig, origin, ":", lineno, ": expected key = value");
    const std::string key = Trim(line.substr(0, eq));
    try {
      Set(section.empty() ? key : section + "." + key, line.substr(eq + 1));
    } catch (const Error &e) {
      Fail(ErrorKind::kInvalidConfig, origin, ":", lineno, ": ", e.what());
    }
  }
}

void ExperimentConfig::ParseFile(const std::string &path) {
  std::ifstream is(path);
  if (!is) Fail(ErrorKind::kIo, "cannot open config ", path);
  std::stringstream ss;
  ss << is.rdbuf();
  Parse(ss.str(), path);
}

std::string ExperimentConfig::ToString() const {
  auto entries = Entries(const_cast<ExperimentConfig &>(*this));
  std::string out, section;
  for (const Entry &e : entries) {
    const auto dot = e.key.find('.');
    const std::string sec = dot == std::string::npos ? "" : e.key.substr(0, dot);
    const std::string name = dot == std::string::npos ? e.key : e.key.substr(dot + 1);
    if (sec != section) {
      out += "\n[" + sec + "]\n";
      section = sec;
    }
    out += name + " = " + e.get() + "\n";
  }
  return out;
}

}  // namespace mtt
