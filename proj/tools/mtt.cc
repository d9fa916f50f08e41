// tools/mtt.cc
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

// Command-line driver: mtt generate | train | eval | verify | sweep-latency.
//
// Exit codes: 0 success, 1 usage or input error, 2 verification failure,
// 3 training divergence.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "mtt/config.h"
#include "mtt/data.h"
#include "mtt/decode.h"
#include "mtt/error.h"
#include "mtt/model.h"
#include "mtt/train.h"
#include "mtt/verify.h"

namespace fs = std::filesystem;
using namespace mtt;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitVerify = 2;
constexpr int kExitDivergence = 3;

struct ConfigArgs {
  std::string file;
  std::vector<std::string> overrides;

  void Register(CLI::App *cmd) {
    cmd->add_option("-c,--config", file, "Experiment config file");
    cmd->add_option("-s,--set", overrides, "Override, e.g. --set train.epochs=5")
        ->take_all();
  }

  ExperimentConfig Resolve(const std::string &fallback = "") const {
    ExperimentConfig c;
    const std::string path = !file.empty() ? file : fallback;
    if (!path.empty()) c.ParseFile(path);
    for (const std::string &o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos)
        Fail(ErrorKind::kInvalidConfig, "override '", o, "' is not key=value");
      c.Set(o.substr(0, eq), o.substr(eq + 1));
    }
    c.Finalize();
    return c;
  }
};

void Log(const std::string &msg) { std::cerr << "[mtt] " << msg << std::endl; }

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

std::vector<Example> LoadExamples(const std::string &dir, const ModelConfig &model) {
  const Dataset data = ReadDataset(dir);
  const auto speakers = ReadSpeakers(fs::path(dir).parent_path().string() + "/speakers.jsonl");
  std::vector<Example> out;
  out.reserve(data.samples.size());
  for (const MixtureSample &s : data.samples) out.push_back(PrepareExample(s, speakers, model));
  return out;
}

std::string Describe(const EvalReport &r) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "WER %.4f  SER %.4f  t_e %.3f  t_e/T %.4f", r.wer, r.ser,
                r.latency.mean_te, r.latency.mean_te_over_t);
  return buf;
}

// ---------------------------------------------------------------------------

int CmdGenerate(const ConfigArgs &args, const std::string &out) {
  const ExperimentConfig c = args.Resolve();
  const SyntheticWorld world(c.data, c.seed);
  fs::create_directories(out);
  WriteSpeakers(out + "/speakers.jsonl", world.speakers());
  for (Split split : {Split::kTrain, Split::kEval}) {
    const int n = split == Split::kTrain ? c.data.num_train : c.data.num_eval;
    Dataset d;
    d.samples.reserve(n);
    for (int i = 0; i < n; ++i) d.samples.push_back(GenerateMixture(world, c.seed, split, i));
    WriteDataset(out + (split == Split::kTrain ? "/train" : "/eval"), d);
  }
  WriteFileAtomic(out + "/config.ini", c.ToString());
  Log("wrote " + std::to_string(c.data.num_train) + " training and " +
      std::to_string(c.data.num_eval) + " evaluation mixtures to " + out);
  return 0;
}

struct TrainArgs {
  std::string data, out, init;
  bool freeze_unmix = false;
  bool monitor = false;
};

int RunTraining(const ExperimentConfig &c, const TrainArgs &a) {
  fs::create_directories(a.out);
  WriteFileAtomic(a.out + "/config.ini", c.ToString());
  const std::vector<Example> train = LoadExamples(a.data + "/train", c.model);
  std::vector<Example> eval;
  if (a.monitor) eval = LoadExamples(a.data + "/eval", c.model);

  ModelParams params = InitParams(c.model, c.seed);
  if (!a.init.empty()) LoadCheckpoint(a.init, &params);
  const std::string ckpt = a.out + "/model.ckpt";
  SaveCheckpoint(params, ckpt);

  std::string log = TrainLogHeader();
  const std::string log_path = a.out + "/train_log.csv";
  const auto start = std::chrono::steady_clock::now();
  TrainHooks hooks;
  hooks.on_step = [&log](const TrainLogRow &row) { log += TrainLogLine(row); };
  hooks.on_epoch = [&](int epoch, const ModelParams &p) {
    SaveCheckpoint(p, ckpt);
    WriteFileAtomic(log_path, log);
    std::string msg = "epoch " + std::to_string(epoch) + " done after " +
                      std::to_string(static_cast<int>(Seconds(start))) + " s";
    if (a.monitor) msg += "  " + Describe(Evaluate(p, c.model, eval, nullptr, c.max_symbols));
    Log(msg);
  };
  TrainableFilter trainable;
  if (a.freeze_unmix) trainable = [](std::string_view n) { return !IsUnmixTensor(n); };
  try {
    Train(&params, c.model, train, c.train, hooks, trainable);
  } catch (const Error &e) {
    WriteFileAtomic(log_path, log);
    if (e.kind() == ErrorKind::kDivergence) {
      Log(std::string("training diverged: ") + e.what() + "; " + ckpt +
          " holds the last good epoch");
      return kExitDivergence;
    }
    throw;
  }
  WriteFileAtomic(log_path, log);
  Log("training finished in " + std::to_string(static_cast<int>(Seconds(start))) + " s");
  return 0;
}

struct EvalArgs {
  std::string checkpoint, data, out;
};

int CmdEval(const ConfigArgs &args, const EvalArgs &a) {
  const std::string fallback = (fs::path(a.checkpoint).parent_path() / "config.ini").string();
  const ExperimentConfig c = args.Resolve(fs::exists(fallback) ? fallback : "");
  ModelParams params = InitParams(c.model, c.seed);
  LoadCheckpoint(a.checkpoint, &params);
  const std::vector<Example> eval = LoadExamples(a.data + "/eval", c.model);
  std::vector<UttDecode> decodes;
  const EvalReport r = Evaluate(params, c.model, eval, &decodes, c.max_symbols);
  fs::create_directories(a.out);
  WriteFileAtomic(a.out + "/report.json", r.ToJson());
  WriteFileAtomic(a.out + "/summary.csv", EvalReport::CsvHeader() + r.CsvRow("eval"));
  WriteFileAtomic(a.out + "/events.jsonl", EventsToJsonl(decodes, eval));
  std::cout << Describe(r) << std::endl;
  return 0;
}

struct SweepArgs {
  std::string data, out, base;
  std::vector<std::string> cells;
};

int CmdSweep(const ConfigArgs &args, const SweepArgs &a) {
  ExperimentConfig c = args.Resolve();
  if (!a.cells.empty()) {
    std::string joined;
    for (const std::string &s : a.cells) joined += (joined.empty() ? "" : ",") + s;
    c.sweep.cells = ParseCells(joined);
    c.Finalize();
  }
  if (c.sweep.finetune && a.base.empty())
    Fail(ErrorKind::kInvalidConfig, "fine-tuning sweep needs --base <checkpoint>");
  fs::create_directories(a.out);
  WriteFileAtomic(a.out + "/config.ini", c.ToString());
  const std::vector<Example> train = LoadExamples(a.data + "/train", c.model);
  const std::vector<Example> eval = LoadExamples(a.data + "/eval", c.model);

  std::string csv = "system,alpha,beta,SER,t_e,t_e/T\n";
  int index = 0;
  for (const SweepCell &cell : c.sweep.cells) {
    ++index;
    ModelParams params = InitParams(c.model, c.seed);
    TrainConfig tc = c.train;
    tc.latency.alpha = cell.alpha;
    tc.latency.beta = cell.beta;
    TrainableFilter trainable;
    if (c.sweep.finetune) {
      LoadCheckpoint(a.base, &params);
      tc.mode = TrainMode::kJoint;
      tc.epochs = c.sweep.finetune_epochs;
      trainable = [](std::string_view n) { return !IsUnmixTensor(n); };
    }
    try {
      Train(&params, c.model, train, tc, {}, trainable);
    } catch (const Error &e) {
      if (e.kind() == ErrorKind::kDivergence) {
        Log(std::string("cell diverged: ") + e.what());
        return kExitDivergence;
      }
      throw;
    }
    const EvalReport r = Evaluate(params, c.model, eval, nullptr, c.max_symbols);
    const std::string system = (c.sweep.finetune ? "F" : "R") + std::to_string(index);
    char row[256];
    std::snprintf(row, sizeof(row), "%s,%g,%g,%.6f,%.6f,%.6f\n", system.c_str(), cell.alpha,
                  cell.beta, r.ser, r.latency.mean_te, r.latency.mean_te_over_t);
    csv += row;
    SaveCheckpoint(params, a.out + "/" + system + ".ckpt");
    WriteFileAtomic(a.out + "/sweep.csv", csv);
    Log(system + " alpha=" + std::to_string(cell.alpha) + " beta=" + std::to_string(cell.beta) +
        "  " + Describe(r));
  }
  std::cout << csv;
  return 0;
}

int CmdVerify(const VerifyBounds &bounds) {
  const VerifyReport report = RunVerification(bounds);
  for (const VerifyCheck &c : report.checks)
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
  std::cout << (report.passed() ? "all checks passed" : "verification FAILED") << std::endl;
  return report.passed() ? 0 : kExitVerify;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Multi-talker transducer toolkit"};
  app.require_subcommand(1);

  ConfigArgs gen_cfg, train_cfg, eval_cfg, sweep_cfg;
  std::string gen_out;
  auto *gen = app.add_subcommand("generate", "Generate the synthetic corpus");
  gen_cfg.Register(gen);
  gen->add_option("-o,--out", gen_out, "Output dataset directory")->required();

  TrainArgs targs;
  auto *train = app.add_subcommand("train", "Train a model");
  train_cfg.Register(train);
  train->add_option("-d,--data", targs.data, "Dataset directory")->required();
  train->add_option("-o,--out", targs.out, "Output directory")->required();
  train->add_option("--init", targs.init, "Start from this checkpoint");
  train->add_flag("--freeze-unmix", targs.freeze_unmix, "Keep the unmixing module fixed");
  train->add_flag("--monitor", targs.monitor, "Evaluate on the held-out split after each epoch");

  EvalArgs eargs;
  auto *eval = app.add_subcommand("eval", "Decode and score the held-out split");
  eval_cfg.Register(eval);
  eval->add_option("-m,--checkpoint", eargs.checkpoint, "Model checkpoint")->required();
  eval->add_option("-d,--data", eargs.data, "Dataset directory")->required();
  eval->add_option("-o,--out", eargs.out, "Report directory")->required();

  VerifyBounds vb;
  auto *verify = app.add_subcommand("verify", "Run the oracle and invariant checks");
  verify->add_option("--lattices", vb.num_lattices, "Random lattices for loss equivalence");
  verify->add_option("--max-frames", vb.max_frames, "Largest T");
  verify->add_option("--max-targets", vb.max_targets, "Largest U");
  verify->add_option("--max-labels", vb.max_labels, "Largest label set");
  verify->add_option("--seed", vb.seed, "Random seed");

  SweepArgs sargs;
  auto *sweep = app.add_subcommand("sweep-latency", "Sweep the latency controls");
  sweep_cfg.Register(sweep);
  sweep->add_option("-d,--data", sargs.data, "Dataset directory")->required();
  sweep->add_option("-o,--out", sargs.out, "Output directory")->required();
  sweep->add_option("-b,--base", sargs.base, "Trained checkpoint to fine-tune from");
  sweep->add_option("--cell", sargs.cells, "alpha:beta cell (repeatable)")->take_all();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen) return CmdGenerate(gen_cfg, gen_out);
    if (*train) return RunTraining(train_cfg.Resolve(), targs);
    if (*eval) return CmdEval(eval_cfg, eargs);
    if (*verify) return CmdVerify(vb);
    if (*sweep) return CmdSweep(sweep_cfg, sargs);
  } catch (const Error &e) {
    std::cerr << "mtt: " << e.what() << std::endl;
    return e.kind() == ErrorKind::kDivergence ? kExitDivergence : kExitUsage;
  } catch (const std::exception &e) {
    std::cerr << "mtt: " << e.what() << std::endl;
    return kExitUsage;
  }
  return kExitUsage;
}
