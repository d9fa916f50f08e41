// src/params.cc
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

#include "mtt/params.h"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "mtt/error.h"

namespace mtt {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

void ModelConfig::Validate() const {
  const int sizes[] = {input_dim, unmix_channels, unmix_kernel, vocab_size, asr_hidden,
                       asr_layers, label_embed, pred_hidden, joint_dim, sid_hidden,
                       sid_embed, sid_joint, spk_dim};
  for (int s : sizes)
    if (s <= 0) Fail(ErrorKind::kInvalidConfig, "model sizes must be positive");
  if (freq_bands < 0) Fail(ErrorKind::kInvalidConfig, "freq_bands must be non-negative");
  if (freq_bands > 0 &&
      (input_dim % (kSpliceFrames * freq_bands) != 0 || unmix_channels % freq_bands != 0))
    Fail(ErrorKind::kInvalidConfig, "freq_bands=", freq_bands,
         " must divide both the base frame width and unmix_channels");
}

namespace {

template <typename P, typename Fn>
void VisitGru(P &g, const std::string &prefix, Fn &fn) {
  if (g.wx.empty()) return;
  fn(prefix + ".wx", g.wx);
  fn(prefix + ".wh", g.wh);
  fn(prefix + ".b", g.b);
}

template <typename Self, typename Fn>
void VisitAll(Self &p, Fn &fn) {
  auto t = [&fn](const char *name, auto &tensor) {
    if (!tensor.empty()) fn(std::string(name), tensor);
  };
  t("unmix.enc.conv1.w", p.enc_conv1_w);
  t("unmix.enc.conv1.b", p.enc_conv1_b);
  t("unmix.enc.conv2.w", p.enc_conv2_w);
  t("unmix.enc.conv2.b", p.enc_conv2_b);
  t("unmix.mask.conv1.w", p.mask_conv1_w);
  t("unmix.mask.conv1.b", p.mask_conv1_b);
  VisitGru(p.mask_gru, "unmix.mask.gru", fn);
  t("unmix.mask.conv2.w", p.mask_conv2_w);
  t("unmix.mask.conv2.b", p.mask_conv2_b);
  t("reduce.w", p.reduce_w);
  t("reduce.b", p.reduce_b);
  for (size_t l = 0; l < p.asr_enc.size(); ++l)
    VisitGru(p.asr_enc[l], "asr.enc.gru" + std::to_string(l), fn);
  t("asr.pred.embed", p.asr_embed);
  VisitGru(p.asr_pred, "asr.pred.gru", fn);
  t("asr.joint.enc.w", p.asr_joint_enc_w);
  t("asr.joint.pred.w", p.asr_joint_pred_w);
  t("asr.joint.b", p.asr_joint_b);
  t("asr.out.w", p.asr_out_w);
  t("asr.out.b", p.asr_out_b);
  VisitGru(p.sid_enc, "sid.enc.gru", fn);
  t("sid.pred.embed", p.sid_embed);
  t("sid.joint.enc.w", p.sid_joint_enc_w);
  t("sid.joint.pred.w", p.sid_joint_pred_w);
  t("sid.joint.b", p.sid_joint_b);
  t("sid.blank.w", p.sid_blank_w);
  t("sid.blank.b", p.sid_blank_b);
  t("sid.spk.w", p.sid_spk_w);
  t("sid.spk.b", p.sid_spk_b);
}

nn::GruParams MakeGru(int input, int hidden) {
  return {Tensor({3 * hidden, input}), Tensor({3 * hidden, hidden}), Tensor({3 * hidden})};
}

bool IsBias(const std::string &name) {
  return name.ends_with(".b");
}

}  // namespace

void ModelParams::Visit(const std::function<void(const std::string &, Tensor &)> &fn) {
  VisitAll(*this, fn);
}

void ModelParams::Visit(
    const std::function<void(const std::string &, const Tensor &)> &fn) const {
  VisitAll(*this, fn);
}

ModelParams ModelParams::ZerosLike() const {
  ModelParams z = *this;
  z.Visit([](const std::string &, Tensor &t) { t.SetZero(); });
  return z;
}

size_t ModelParams::NumValues() const {
  size_t n = 0;
  Visit([&n](const std::string &, const Tensor &t) { n += t.size(); });
  return n;
}

bool ModelParams::AllFinite() const {
  bool ok = true;
  Visit([&ok](const std::string &, const Tensor &t) { ok = ok && t.AllFinite(); });
  return ok;
}

std::vector<double> ModelParams::Flatten() const {
  std::vector<double> out;
  out.reserve(NumValues());
  Visit([&out](const std::string &, const Tensor &t) {
    out.insert(out.end(), t.values().begin(), t.values().end());
  });
  return out;
}

void ModelParams::Unflatten(std::span<const double> values) {
  if (values.size() != NumValues())
    Fail(ErrorKind::kShape, "expected ", NumValues(), " parameter values, got ",
         values.size());
  size_t off = 0;
  Visit([&](const std::string &, Tensor &t) {
    std::copy_n(values.begin() + off, t.size(), t.data());
    off += t.size();
  });
}

bool ModelParams::operator==(const ModelParams &o) const {
  std::vector<std::pair<std::string, const Tensor *>> a, b;
  Visit([&a](const std::string &n, const Tensor &t) { a.emplace_back(n, &t); });
  o.Visit([&b](const std::string &n, const Tensor &t) { b.emplace_back(n, &t); });
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i].first != b[i].first || !(*a[i].second == *b[i].second)) return false;
  return true;
}

ModelParams InitParams(const ModelConfig &c, uint64_t seed) {
  c.Validate();
  const int C = c.unmix_channels, K = c.unmix_kernel, V = c.vocab_size;
  ModelParams p;
  if (c.freq_bands > 0) {
    const int Cb = c.band_channels();
    p.enc_conv1_w = Tensor({Cb, K, c.band_patch()});
    p.enc_conv1_b = Tensor({Cb});
    p.enc_conv2_w = Tensor({Cb, K, Cb});
    p.enc_conv2_b = Tensor({Cb});
  } else {
    p.enc_conv1_w = Tensor({C, K, c.input_dim});
    p.enc_conv1_b = Tensor({C});
    p.enc_conv2_w = Tensor({C, K, C});
    p.enc_conv2_b = Tensor({C});
  }
  p.mask_conv1_w = Tensor({C, K, c.input_dim});
  p.mask_conv1_b = Tensor({C});
  if (c.mask_context) p.mask_gru = MakeGru(C, C);
  p.mask_conv2_w = Tensor({C, K, C});
  p.mask_conv2_b = Tensor({C});
  if (c.time_reduction) {
    p.reduce_w = Tensor({C, 2 * C});
    p.reduce_b = Tensor({C});
  }
  int in = C;
  for (int l = 0; l < c.asr_layers; ++l) {
    p.asr_enc.push_back(MakeGru(in, c.asr_hidden));
    in = c.asr_hidden;
  }
  p.asr_embed = Tensor({V + 1, c.label_embed});
  p.asr_pred = MakeGru(c.label_embed, c.pred_hidden);
  p.asr_joint_enc_w = Tensor({c.joint_dim, c.asr_hidden});
  p.asr_joint_pred_w = Tensor({c.joint_dim, c.pred_hidden});
  p.asr_joint_b = Tensor({c.joint_dim});
  p.asr_out_w = Tensor({V + 1, c.joint_dim});
  p.asr_out_b = Tensor({V + 1});
  p.sid_enc = MakeGru(C, c.sid_hidden);
  p.sid_embed = Tensor({2, c.sid_embed});
  p.sid_joint_enc_w = Tensor({c.sid_joint, c.sid_hidden});
  p.sid_joint_pred_w = Tensor({c.sid_joint, c.sid_embed});
  p.sid_joint_b = Tensor({c.sid_joint});
  p.sid_blank_w = Tensor({1, c.sid_joint});
  p.sid_blank_b = Tensor({1});
  p.sid_spk_w = Tensor({c.spk_dim, c.sid_joint});
  p.sid_spk_b = Tensor({c.spk_dim});

  std::mt19937_64 rng(seed);
  p.Visit([&rng](const std::string &name, Tensor &t) {
    const bool gru = name.find(".gru") != std::string::npos;
    if (IsBias(name)) {
      t.SetZero();
      if (gru) {
        const int H = t.dim(0) / 3;
        for (int i = H; i < 2 * H; ++i) t[i] = 1.0;
      }
      return;
    }
    double fan_out = t.dim(0);
    if (gru) fan_out /= 3.0;
    const double fan_in = static_cast<double>(t.size()) / t.dim(0);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double &v : t.values()) v = dist(rng);
  });
  return p;
}

void SaveCheckpoint(const ModelParams &params, const std::string &path) {
  std::ostringstream manifest;
  std::vector<std::pair<std::string, const Tensor *>> items;
  params.Visit([&items](const std::string &n, const Tensor &t) { items.emplace_back(n, &t); });
  manifest << "mtt-checkpoint 1\n" << items.size() << "\n";
  size_t offset = 0;
  for (const auto &[name, t] : items) {
    manifest << name << " " << t->shape().size();
    for (int d : t->shape()) manifest << " " << d;
    manifest << " " << offset << "\n";
    offset += t->size() * sizeof(double);
  }
  manifest << "end\n";

  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) Fail(ErrorKind::kIo, "cannot write ", tmp);
    const std::string m = manifest.str();
    os.write(m.data(), static_cast<std::streamsize>(m.size()));
    for (const auto &item : items)
      os.write(reinterpret_cast<const char *>(item.second->data()),
               static_cast<std::streamsize>(item.second->size() * sizeof(double)));
    if (!os) Fail(ErrorKind::kIo, "short write to ", tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    Fail(ErrorKind::kIo, "cannot rename ", tmp, " to ", path);
}

void LoadCheckpoint(const std::string &path, ModelParams *params) {
  std::ifstream is(path, std::ios::binary);
  if (!is) Fail(ErrorKind::kIo, "cannot open checkpoint ", path);
  std::string magic;
  int version = 0;
  size_t count = 0;
  is >> magic >> version >> count;
  if (magic != "mtt-checkpoint" || version != 1)
    Fail(ErrorKind::kIo, path, " is not an mtt checkpoint");

  struct Entry {
    std::string name;
    std::vector<int> shape;
    size_t offset;
  };
  std::vector<Entry> entries(count);
  for (Entry &e : entries) {
    size_t ndim = 0;
    is >> e.name >> ndim;
    e.shape.resize(ndim);
    for (int &d : e.shape) is >> d;
    is >> e.offset;
  }
  std::string end;
  is >> end;
  if (!is || end != "end") Fail(ErrorKind::kIo, "malformed checkpoint manifest in ", path);
  is.get();  // newline
  const std::streampos data_start = is.tellg();

  size_t i = 0;
  params->Visit([&](const std::string &name, Tensor &t) {
    if (i >= entries.size() || entries[i].name != name || entries[i].shape != t.shape())
      Fail(ErrorKind::kIo, "checkpoint ", path, " does not match the model at tensor ", name);
    is.seekg(data_start + static_cast<std::streamoff>(entries[i].offset));
    is.read(reinterpret_cast<char *>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!is) Fail(ErrorKind::kIo, "truncated checkpoint ", path);
    ++i;
  });
  if (i != entries.size())
    Fail(ErrorKind::kIo, "checkpoint ", path, " has ", entries.size(),
         " tensors, model has ", i);
}

AdamState InitAdam(const ModelParams &params) {
  return AdamState{params.ZerosLike(), params.ZerosLike(), 0};
}

double OptimizerStep(ModelParams *params, const ModelParams &grads, AdamState *state,
                     const AdamConfig &config, const TrainableFilter &trainable) {
  std::vector<std::pair<std::string, const Tensor *>> g;
  grads.Visit([&g](const std::string &n, const Tensor &t) { g.emplace_back(n, &t); });

  double sq = 0.0;
  for (const auto &[name, t] : g) {
    if (trainable && !trainable(name)) continue;
    for (double v : t->values()) {
      if (!std::isfinite(v))
        Fail(ErrorKind::kDivergence, "non-finite gradient in ", name, " at step ",
             state->step + 1);
      sq += v * v;
    }
  }
  const double norm = std::sqrt(sq);
  double scale = 1.0;
  if (config.clip_norm > 0.0 && norm > config.clip_norm) scale = config.clip_norm / norm;

  state->step += 1;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state->step));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state->step));

  std::vector<Tensor *> p, m, v;
  params->Visit([&p](const std::string &, Tensor &t) { p.push_back(&t); });
  state->m.Visit([&m](const std::string &, Tensor &t) { m.push_back(&t); });
  state->v.Visit([&v](const std::string &, Tensor &t) { v.push_back(&t); });
  if (p.size() != g.size() || m.size() != g.size() || v.size() != g.size())
    Fail(ErrorKind::kShape, "optimizer state does not match parameters");

  for (size_t i = 0; i < g.size(); ++i) {
    if (trainable && !trainable(g[i].first)) continue;
    const Tensor &gt = *g[i].second;
    const double decay =
        g[i].first.ends_with(".b") ? 1.0 : 1.0 - config.lr * config.weight_decay;
    for (size_t j = 0; j < gt.size(); ++j) {
      const double gj = gt[j] * scale;
      double &mj = (*m[i])[j];
      double &vj = (*v[i])[j];
      mj = config.beta1 * mj + (1.0 - config.beta1) * gj;
      vj = config.beta2 * vj + (1.0 - config.beta2) * gj * gj;
      (*p[i])[j] = decay * (*p[i])[j] - config.lr * (mj / bc1) / (std::sqrt(vj / bc2) + config.eps);
    }
  }
  return norm;
}

}  // namespace mtt
