// Copyright 2026 The udp-adapt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "udp/error.hpp"
#include "udp/losses.hpp"
#include "udp/model.hpp"
#include "udp/optim.hpp"
#include "udp/padding.hpp"
#include "udp/synthdata.hpp"
#include "udp/tensor.hpp"

namespace udp {

/// Minibatch loop settings. `patience` 0 disables early stopping.
struct TrainConfig {
  std::size_t epochs = 15;
  std::size_t batch_size = 8;
  AdamWConfig optim{};
  std::uint64_t seed = 0;
  std::size_t patience = 0;
  double min_delta = 1e-4;
  std::ostream* log = nullptr;
};

/// Defaults for padding adaptation: lr 0.01, no decay on rings, early stop
/// after 5 epochs without improvement of the adaptation loss.
inline TrainConfig default_adapt_config(std::uint64_t seed = 0) {
  TrainConfig c;
  c.epochs = 20;
  c.batch_size = 5;
  c.optim.lr = 0.01;
  c.optim.weight_decay = 0.0;
  c.seed = seed;
  c.patience = 5;
  return c;
}

struct TrainReport {
  std::vector<double> epoch_loss;
  std::size_t steps = 0;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
};

namespace detail {

/// Labels of one batch in the form the task's loss expects.
inline Tensor task_loss(Task task, const Tensor& out, std::span<const Clip> clips) {
  if (task == Task::classification) {
    std::vector<std::size_t> y;
    y.reserve(clips.size());
    for (const auto& c : clips) y.push_back(c.label);
    return cross_entropy(out, y);
  }
  std::vector<LabelSeq> y;
  y.reserve(clips.size());
  for (const auto& c : clips) y.push_back(c.tokens);
  return ctc_loss(out, y);
}

class ParamSnapshot {
 public:
  explicit ParamSnapshot(const std::vector<Tensor>& params) {
    for (const auto& p : params) data_.emplace_back(p.data().begin(), p.data().end());
  }
  void restore(std::vector<Tensor>& params) const {
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto w = params[i].mutable_data();
      std::copy(data_[i].begin(), data_[i].end(), w.begin());
    }
  }

 private:
  std::vector<std::vector<double>> data_;
};

/// Shuffled minibatch epochs over `n` samples. `step(batch)` returns the
/// batch loss after calling backward; `opts` are stepped after each batch.
/// With patience, the parameters of the best epoch are restored at the end.
inline TrainReport run_epochs(std::size_t n, const TrainConfig& cfg, std::vector<OptimState*> opts,
                              std::vector<Tensor> tracked,
                              const std::function<double(std::span<const std::size_t>)>& step) {
  TrainReport rep;
  if (n == 0 || cfg.epochs == 0) return rep;
  if (cfg.batch_size == 0) throw ConfigError("batch size must be positive");
  std::mt19937_64 rng(mix_seed(cfg.seed, "shuffle"));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  std::optional<ParamSnapshot> best_params;
  std::size_t since_best = 0;
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t s = 0; s < n; s += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, n - s);
      double loss = 0.0;
      try {
        loss = step(std::span<const std::size_t>(order).subspan(s, len));
      } catch (const NumericError& err) {
        throw NumericError("training diverged at epoch " + std::to_string(e + 1) + ", step " +
                           std::to_string(rep.steps + 1) + ": " + err.what());
      }
      if (!std::isfinite(loss)) {
        throw NumericError("training diverged at epoch " + std::to_string(e + 1) + ", step " +
                           std::to_string(rep.steps + 1) + ": loss is " + std::to_string(loss));
      }
      for (auto* o : opts) o->step();
      total += loss * static_cast<double>(len);
      ++rep.steps;
    }
    const double avg = total / static_cast<double>(n);
    rep.epoch_loss.push_back(avg);
    if (cfg.log) *cfg.log << "  epoch " << e + 1 << "/" << cfg.epochs << " loss " << avg << "\n";
    if (cfg.patience > 0) {
      if (avg < best - cfg.min_delta) {
        best = avg;
        rep.best_epoch = e + 1;
        best_params.emplace(tracked);
        since_best = 0;
      } else if (++since_best >= cfg.patience) {
        rep.stopped_early = true;
        break;
      }
    }
  }
  if (best_params) best_params->restore(tracked);
  return rep;
}

inline void require_frozen(const RecognizerModel& model) {
  if (model.training()) throw ContractError("adaptation needs the model in inference mode");
  for (const auto& p : model.parameters()) {
    if (p.requires_grad()) throw ContractError("adaptation needs a frozen model");
  }
}

inline std::vector<Clip> gather(std::span<const Clip> pool, std::span<const std::size_t> idx) {
  std::vector<Clip> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(pool[i]);
  return out;
}

}  // namespace detail

/// Auxiliary speaker classifier on time-averaged front-end features; its
/// gradient reaches the front-end reversed and scaled by `grl_weight`.
struct SpeakerAdversary {
  std::vector<std::string> speakers;
  double grl_weight = 0.0;
  Tensor weight;  // [F, S]
  Tensor bias;    // [S]

  std::size_t index_of(const std::string& id) const {
    const auto it = std::find(speakers.begin(), speakers.end(), id);
    if (it == speakers.end()) throw ContractError("no speaker label for '" + id + "'");
    return static_cast<std::size_t>(it - speakers.begin());
  }
};

namespace detail {

/// Shared body of pretrain() and train_speaker_invariant().
inline TrainReport train_model(RecognizerModel& model, std::span<const Clip> train_set,
                               const TrainConfig& cfg, SpeakerAdversary* adv) {
  model.set_trainable(true);
  model.set_training(true);
  OptimState opt(model.parameters(), cfg.optim);
  std::optional<OptimState> adv_opt;
  std::vector<OptimState*> opts{&opt};
  if (adv) {
    adv_opt.emplace(std::vector<Tensor>{adv->weight, adv->bias}, cfg.optim);
    opts.push_back(&*adv_opt);
  }
  const auto& mc = model.config();
  TrainReport rep;
  try {
    rep = run_epochs(train_set.size(), cfg, opts, {}, [&](std::span<const std::size_t> idx) {
      const auto batch = gather(train_set, idx);
      const Tensor clips = stack_clips(batch);
      const std::size_t b = clips.dim(0), t = clips.dim(1);
      const Tensor frames = reshape(clips, {b * t, clips.dim(2), clips.dim(3), clips.dim(4)});
      const Tensor feats = reshape(model.frontend_features(frames, nullptr), {b, t, mc.feature_dim()});
      Tensor loss = task_loss(mc.task, model.backend_logits(feats), batch);
      if (adv) {
        std::vector<std::size_t> spk;
        for (const auto& c : batch) spk.push_back(adv->index_of(c.speaker_id));
        const Tensor h = grad_reverse(mean_time(feats), adv->grl_weight);
        loss = add(loss, cross_entropy(linear(h, adv->weight, adv->bias), spk));
      }
      backward(loss);
      return loss.item();
    });
  } catch (...) {
    model.set_training(false);
    model.set_trainable(false);
    throw;
  }
  model.set_training(false);
  model.set_trainable(false);
  return rep;
}

}  // namespace detail

/// Trains every weight of `model` on `train_set` with zero padding. The
/// model is left frozen in inference mode.
inline TrainReport pretrain(RecognizerModel& model, std::span<const Clip> train_set,
                            const TrainConfig& cfg) {
  return detail::train_model(model, train_set, cfg, nullptr);
}

/// Sorted distinct speaker ids of a clip set.
inline std::vector<std::string> speakers_of(std::span<const Clip> clips) {
  std::set<std::string> ids;
  for (const auto& c : clips) ids.insert(c.speaker_id);
  return {ids.begin(), ids.end()};
}

/// Pretraining plus an adversarial speaker classifier behind gradient
/// reversal. The classifier has its own RNG stream, so grl_weight 0 follows
/// the pretrain() trajectory exactly.
inline TrainReport train_speaker_invariant(RecognizerModel& model, std::span<const Clip> train_set,
                                           double grl_weight, const TrainConfig& cfg,
                                           SpeakerAdversary* out_adversary = nullptr) {
  SpeakerAdversary adv;
  adv.speakers = speakers_of(train_set);
  if (adv.speakers.size() < 2) throw ContractError("speaker-invariant training needs 2+ speakers");
  adv.grl_weight = grl_weight;
  const std::size_t f = model.config().feature_dim(), s = adv.speakers.size();
  std::mt19937_64 rng(mix_seed(cfg.seed, "speaker-adversary"));
  std::normal_distribution<double> dist(0.0, std::sqrt(1.0 / static_cast<double>(f)));
  std::vector<double> w(f * s);
  for (auto& x : w) x = dist(rng);
  adv.weight = Tensor::from_data({f, s}, std::move(w), true);
  adv.bias = Tensor::zeros({s}, true);
  auto rep = detail::train_model(model, train_set, cfg, &adv);
  if (out_adversary) *out_adversary = adv;
  return rep;
}

/// Fits only the rings of `init` on labelled adaptation clips. The model is
/// read, never written.
inline UserPadding adapt_supervised(const RecognizerModel& model, const UserPadding& init,
                                    std::span<const Clip> adapt_set, const TrainConfig& cfg,
                                    TrainReport* report = nullptr) {
  model.check_padding(init);
  detail::require_frozen(model);
  UserPadding pad = init.clone();
  auto rings = pad.tensors();
  for (auto& r : rings) r.set_requires_grad(true);
  OptimState opt(rings, cfg.optim);
  auto rep = detail::run_epochs(adapt_set.size(), cfg, {&opt}, rings, [&](std::span<const std::size_t> idx) {
    const auto batch = detail::gather(adapt_set, idx);
    Tensor loss = detail::task_loss(model.config().task, model.forward_batch(stack_clips(batch), &pad), batch);
    backward(loss);
    return loss.item();
  });
  if (report) *report = std::move(rep);
  return pad;
}

struct EvalResult {
  double accuracy = 0.0;  // class accuracy, or 1 - WER for sequences
  double wer = 0.0;       // sequences only
  std::size_t count = 0;
};

/// Hypothesis for one clip from its model output row.
struct Prediction {
  std::size_t label = 0;
  LabelSeq tokens;
  double confidence = 0.0;
};

inline constexpr std::size_t kDefaultBeamWidth = 100;

/// Maps a batch of clips [B,T,C,H,W] to model outputs.
using OutputFn = std::function<Tensor(const Tensor&)>;

inline std::vector<Prediction> predict(Task task, const OutputFn& fn, std::span<const Clip> clips,
                                       std::size_t beam_width = kDefaultBeamWidth,
                                       std::size_t chunk = 25) {
  NoGradGuard ng;
  std::vector<Prediction> out;
  out.reserve(clips.size());
  for (std::size_t s = 0; s < clips.size(); s += chunk) {
    const auto part = clips.subspan(s, std::min(chunk, clips.size() - s));
    const Tensor y = fn(stack_clips(part));
    const auto d = y.data();
    for (std::size_t i = 0; i < part.size(); ++i) {
      Prediction p;
      if (task == Task::classification) {
        const std::size_t v = y.dim(1);
        std::tie(p.label, p.confidence) = class_confidence(d.subspan(i * v, v));
      } else {
        const std::size_t t = y.dim(1), v = y.dim(2);
        const Tensor lp = Tensor::from_data({t, v}, {d.begin() + static_cast<std::ptrdiff_t>(i * t * v),
                                                     d.begin() + static_cast<std::ptrdiff_t>((i + 1) * t * v)});
        const auto beams = beam_decode(lp, beam_width);
        p.tokens = beams.front().label_prefix;
        p.confidence = beam_confidence(beams);
      }
      out.push_back(std::move(p));
    }
  }
  return out;
}

inline OutputFn model_output(const RecognizerModel& model, const UserPadding* padding) {
  return [&model, padding](const Tensor& clips) { return model.forward_batch(clips, padding); };
}

inline EvalResult score(Task task, std::span<const Prediction> preds, std::span<const Clip> clips) {
  EvalResult r;
  r.count = clips.size();
  if (clips.empty()) return r;
  if (task == Task::classification) {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < clips.size(); ++i) ok += preds[i].label == clips[i].label;
    r.accuracy = static_cast<double>(ok) / static_cast<double>(clips.size());
  } else {
    std::size_t errs = 0, words = 0;
    for (std::size_t i = 0; i < clips.size(); ++i) {
      errs += edit_distance(preds[i].tokens, clips[i].tokens);
      words += clips[i].tokens.size();
    }
    r.wer = words ? static_cast<double>(errs) / static_cast<double>(words) : 0.0;
    r.accuracy = 1.0 - r.wer;
  }
  return r;
}

inline EvalResult evaluate(const RecognizerModel& model, std::span<const Clip> clips,
                           const UserPadding* padding = nullptr,
                           std::size_t beam_width = kDefaultBeamWidth) {
  const Task task = model.config().task;
  const auto preds = predict(task, model_output(model, padding), clips, beam_width);
  return score(task, preds, clips);
}

struct SelfTrainingConfig {
  double threshold = 0.8;
  std::size_t rounds = 1;
  std::size_t beam_width = kDefaultBeamWidth;
  TrainConfig train = default_adapt_config();
};

/// Threshold defaults: max softmax 0.8 for words, beam confidence 0.9 for
/// sequences.
inline double default_confidence_threshold(Task task) {
  return task == Task::classification ? 0.8 : 0.9;
}

struct SelfTrainingRound {
  std::size_t pseudo_labels = 0;
  double precision = 0.0;  // exact-match share of pseudo-labels that are right
};

struct SelfTrainingResult {
  UserPadding padding;
  std::vector<SelfTrainingRound> rounds;
  std::string warning;
};

/// Pseudo-labels `unlabeled` with the current padding, keeps predictions
/// whose confidence exceeds the threshold and adapts on them. Clip labels
/// are only read to report pseudo-label precision.
inline SelfTrainingResult adapt_self_training(const RecognizerModel& model, const UserPadding& init,
                                              std::span<const Clip> unlabeled,
                                              const SelfTrainingConfig& cfg) {
  if (!(cfg.threshold >= 0.0 && cfg.threshold <= 1.0)) {
    throw ContractError("confidence threshold must lie in [0, 1]");
  }
  model.check_padding(init);
  detail::require_frozen(model);
  const Task task = model.config().task;
  SelfTrainingResult res{init.clone(), {}, {}};
  for (std::size_t round = 0; round < cfg.rounds; ++round) {
    const auto preds = predict(task, model_output(model, &res.padding), unlabeled, cfg.beam_width);
    std::vector<Clip> pseudo;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < unlabeled.size(); ++i) {
      if (!(preds[i].confidence > cfg.threshold)) continue;
      Clip c = unlabeled[i];
      if (task == Task::classification) {
        correct += preds[i].label == c.label;
        c.label = preds[i].label;
      } else {
        correct += preds[i].tokens == c.tokens;
        c.tokens = preds[i].tokens;
      }
      pseudo.push_back(std::move(c));
    }
    SelfTrainingRound r;
    r.pseudo_labels = pseudo.size();
    r.precision = pseudo.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(pseudo.size());
    res.rounds.push_back(r);
    if (pseudo.empty()) {
      res.warning = "no prediction passed confidence threshold " + std::to_string(cfg.threshold) +
                    " in round " + std::to_string(round + 1) + "; padding left unchanged";
      if (cfg.train.log) *cfg.train.log << "warning: " << res.warning << "\n";
      break;
    }
    res.padding = adapt_supervised(model, res.padding, pseudo, cfg.train);
  }
  return res;
}

/// Precision of pseudo-labels at a threshold, without adapting.
inline SelfTrainingRound pseudo_label_precision(const RecognizerModel& model, const UserPadding* padding,
                                                std::span<const Clip> clips, double threshold,
                                                std::size_t beam_width = kDefaultBeamWidth) {
  const Task task = model.config().task;
  const auto preds = predict(task, model_output(model, padding), clips, beam_width);
  SelfTrainingRound r;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    if (!(preds[i].confidence > threshold)) continue;
    ++r.pseudo_labels;
    correct += task == Task::classification ? preds[i].label == clips[i].label
                                            : preds[i].tokens == clips[i].tokens;
  }
  r.precision = r.pseudo_labels ? static_cast<double>(correct) / static_cast<double>(r.pseudo_labels) : 0.0;
  return r;
}

/// Defaults for whole-model finetuning: the pretraining optimizer with the
/// adaptation loop's early stopping.
inline TrainConfig default_finetune_config(std::uint64_t seed = 0) {
  TrainConfig c = default_adapt_config(seed);
  c.optim = AdamWConfig{};
  return c;
}

/// Finetunes a copy of every weight on the adaptation set. Normalization
/// keeps its pretrained statistics.
inline RecognizerModel finetune_all(const RecognizerModel& model, std::span<const Clip> adapt_set,
                                    const TrainConfig& cfg, TrainReport* report = nullptr) {
  RecognizerModel m = model.clone();
  m.set_training(false);
  m.set_trainable(true);
  auto params = m.parameters();
  OptimState opt(params, cfg.optim);
  auto rep = detail::run_epochs(adapt_set.size(), cfg, {&opt}, params, [&](std::span<const std::size_t> idx) {
    const auto batch = detail::gather(adapt_set, idx);
    Tensor loss = detail::task_loss(m.config().task, m.forward_batch(stack_clips(batch)), batch);
    backward(loss);
    return loss.item();
  });
  m.set_trainable(false);
  if (report) *report = std::move(rep);
  return m;
}

struct ParamReport {
  std::size_t model_params = 0;
  std::size_t udp_params = 0;
  double ratio() const {
    return model_params ? static_cast<double>(udp_params) / static_cast<double>(model_params) : 0.0;
  }
};

inline ParamReport parameter_report(const ModelConfig& config) {
  return {RecognizerModel::build(config, 0).parameter_count(), config.ring_parameter_count()};
}

/// Speaker-code adaptation network: after the front-end,
/// h <- relu(h W_i + c_i V_i + b_i) for three layers, with a per-speaker
/// code c = (c_1, c_2, c_3). W starts as identity and b as zero, so a zero
/// code passes the (non-negative) front-end features through unchanged.
struct SpeakerCodeAdapter {
  std::vector<std::size_t> code_dims{128, 64, 32};
  std::vector<Tensor> w, v, b;
  std::map<std::string, std::vector<Tensor>> codes;

  static SpeakerCodeAdapter create(std::size_t feature_dim, std::vector<std::size_t> dims,
                                   std::uint64_t seed) {
    SpeakerCodeAdapter a;
    a.code_dims = std::move(dims);
    std::mt19937_64 rng(mix_seed(seed, "speaker-code"));
    for (std::size_t d : a.code_dims) {
      std::vector<double> eye(feature_dim * feature_dim, 0.0);
      for (std::size_t i = 0; i < feature_dim; ++i) eye[i * feature_dim + i] = 1.0;
      a.w.push_back(Tensor::from_data({feature_dim, feature_dim}, std::move(eye)));
      std::normal_distribution<double> dist(0.0, std::sqrt(1.0 / static_cast<double>(d)));
      std::vector<double> vv(d * feature_dim);
      for (auto& x : vv) x = 0.1 * dist(rng);
      a.v.push_back(Tensor::from_data({d, feature_dim}, std::move(vv)));
      a.b.push_back(Tensor::zeros({feature_dim}));
    }
    return a;
  }

  std::vector<Tensor> zero_code() const {
    std::vector<Tensor> c;
    for (std::size_t d : code_dims) c.push_back(Tensor::zeros({d}));
    return c;
  }

  std::vector<Tensor> network_parameters() const {
    std::vector<Tensor> ps;
    for (std::size_t i = 0; i < w.size(); ++i) ps.insert(ps.end(), {w[i], v[i], b[i]});
    return ps;
  }

  /// features [N,F] -> adapted features [N,F]; one code for every row.
  Tensor apply(const Tensor& features, const std::vector<Tensor>& code) const {
    if (code.size() != w.size()) throw ShapeError("speaker code has the wrong number of parts");
    Tensor h = features;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const Tensor shift = reshape(matmul(reshape(code[i], {1, code_dims[i]}), v[i]), {w[i].dim(1)});
      h = relu(add_rowvec(linear(h, w[i], b[i]), shift));
    }
    return h;
  }

  /// Model outputs with the adapter between front-end and back-end.
  Tensor forward_batch(const RecognizerModel& model, const Tensor& clips,
                       const std::vector<Tensor>& code) const {
    const std::size_t bsz = clips.dim(0), t = clips.dim(1), f = model.config().feature_dim();
    const Tensor frames = reshape(clips, {bsz * t, clips.dim(2), clips.dim(3), clips.dim(4)});
    const Tensor h = apply(model.frontend_features(frames, nullptr), code);
    return model.backend_logits(reshape(h, {bsz, t, f}));
  }
};

/// Stage 2 of the speaker-code procedure: trains the adaptation network and
/// one code per training speaker with the recognizer frozen.
inline TrainReport train_speaker_code_network(const RecognizerModel& model, SpeakerCodeAdapter& adapter,
                                              std::span<const Clip> train_set, const TrainConfig& cfg) {
  detail::require_frozen(model);
  std::vector<Tensor> params = adapter.network_parameters();
  for (const auto& id : speakers_of(train_set)) {
    auto code = adapter.zero_code();
    adapter.codes[id] = code;
    params.insert(params.end(), code.begin(), code.end());
  }
  for (auto& p : params) p.set_requires_grad(true);
  OptimState opt(params, cfg.optim);
  auto rep = detail::run_epochs(train_set.size(), cfg, {&opt}, params, [&](std::span<const std::size_t> idx) {
    // one forward per speaker present in the batch
    std::map<std::string, std::vector<Clip>> by_spk;
    for (std::size_t i : idx) by_spk[train_set[i].speaker_id].push_back(train_set[i]);
    Tensor loss;
    for (const auto& [id, clips] : by_spk) {
      const Tensor out = adapter.forward_batch(model, stack_clips(clips), adapter.codes.at(id));
      Tensor part = scale(detail::task_loss(model.config().task, out, clips),
                          static_cast<double>(clips.size()) / static_cast<double>(idx.size()));
      loss = loss.defined() ? add(loss, part) : part;
    }
    backward(loss);
    return loss.item();
  });
  for (auto& p : params) p.set_requires_grad(false);
  return rep;
}

/// Stage 3: fits a fresh zero code for `speaker` on its adaptation clips;
/// only the code changes.
inline std::vector<Tensor> adapt_speaker_code(const RecognizerModel& model, const SpeakerCodeAdapter& adapter,
                                              std::span<const Clip> adapt_set, const TrainConfig& cfg,
                                              TrainReport* report = nullptr) {
  detail::require_frozen(model);
  auto code = adapter.zero_code();
  for (auto& c : code) c.set_requires_grad(true);
  OptimState opt(code, cfg.optim);
  auto rep = detail::run_epochs(adapt_set.size(), cfg, {&opt}, code, [&](std::span<const std::size_t> idx) {
    const auto batch = detail::gather(adapt_set, idx);
    Tensor loss = detail::task_loss(model.config().task,
                                    adapter.forward_batch(model, stack_clips(batch), code), batch);
    backward(loss);
    return loss.item();
  });
  for (auto& c : code) c.set_requires_grad(false);
  if (report) *report = std::move(rep);
  return code;
}

/// Time-averaged front-end features per clip, [N, F].
inline Tensor clip_embeddings(const RecognizerModel& model, std::span<const Clip> clips) {
  NoGradGuard ng;
  const std::size_t f = model.config().feature_dim();
  std::vector<double> out;
  out.reserve(clips.size() * f);
  for (std::size_t s = 0; s < clips.size(); s += 25) {
    const auto part = clips.subspan(s, std::min<std::size_t>(25, clips.size() - s));
    const Tensor x = stack_clips(part);
    const std::size_t b = x.dim(0), t = x.dim(1);
    const Tensor feats = model.frontend_features(reshape(x, {b * t, x.dim(2), x.dim(3), x.dim(4)}), nullptr);
    const Tensor m = mean_time(reshape(feats, {b, t, f}));
    out.insert(out.end(), m.data().begin(), m.data().end());
  }
  return Tensor::from_data({clips.size(), f}, std::move(out));
}

/// Accuracy of a linear speaker classifier trained on frozen front-end
/// features of `fit` and scored on `held`.
inline double speaker_probe_accuracy(const RecognizerModel& model, std::span<const Clip> fit,
                                     std::span<const Clip> held, std::uint64_t seed = 0,
                                     std::size_t epochs = 60) {
  const auto speakers = speakers_of(fit);
  auto label = [&](const Clip& c) {
    return static_cast<std::size_t>(std::find(speakers.begin(), speakers.end(), c.speaker_id) -
                                    speakers.begin());
  };
  Tensor xf = clip_embeddings(model, fit);
  Tensor xh = clip_embeddings(model, held);
  // standardize with the fit statistics
  const std::size_t f = xf.dim(1);
  std::vector<double> mu(f, 0.0), sd(f, 0.0);
  for (std::size_t i = 0; i < xf.dim(0); ++i)
    for (std::size_t j = 0; j < f; ++j) mu[j] += xf.data()[i * f + j] / static_cast<double>(xf.dim(0));
  for (std::size_t i = 0; i < xf.dim(0); ++i)
    for (std::size_t j = 0; j < f; ++j) {
      const double d = xf.data()[i * f + j] - mu[j];
      sd[j] += d * d / static_cast<double>(xf.dim(0));
    }
  auto standardize = [&](const Tensor& x) {
    std::vector<double> v(x.data().begin(), x.data().end());
    for (std::size_t i = 0; i < x.dim(0); ++i)
      for (std::size_t j = 0; j < f; ++j) v[i * f + j] = (v[i * f + j] - mu[j]) / std::sqrt(sd[j] + 1e-6);
    return Tensor::from_data(x.shape(), std::move(v));
  };
  xf = standardize(xf);
  xh = standardize(xh);
  std::vector<std::size_t> yf;
  for (const auto& c : fit) yf.push_back(label(c));
  Tensor w = Tensor::zeros({f, speakers.size()}, true);
  Tensor b = Tensor::zeros({speakers.size()}, true);
  OptimState opt({w, b}, AdamWConfig{0.01, 1e-2});
  TrainConfig tc;
  tc.epochs = epochs;
  tc.batch_size = 32;
  tc.seed = seed;
  detail::run_epochs(fit.size(), tc, {&opt}, {}, [&](std::span<const std::size_t> idx) {
    std::vector<double> rows;
    std::vector<std::size_t> ys;
    for (std::size_t i : idx) {
      rows.insert(rows.end(), xf.data().begin() + static_cast<std::ptrdiff_t>(i * f),
                  xf.data().begin() + static_cast<std::ptrdiff_t>((i + 1) * f));
      ys.push_back(yf[i]);
    }
    Tensor loss = cross_entropy(linear(Tensor::from_data({idx.size(), f}, std::move(rows)), w, b), ys);
    backward(loss);
    return loss.item();
  });
  NoGradGuard ng;
  const Tensor logits = linear(xh, w, b);
  std::size_t ok = 0;
  const std::size_t s = speakers.size();
  for (std::size_t i = 0; i < held.size(); ++i) {
    const auto [arg, p] = class_confidence(logits.data().subspan(i * s, s));
    ok += arg == label(held[i]);
  }
  return held.empty() ? 0.0 : static_cast<double>(ok) / static_cast<double>(held.size());
}

}  // namespace udp
