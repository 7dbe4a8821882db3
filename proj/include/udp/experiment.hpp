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

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "udp/adapt.hpp"
#include "udp/metrics.hpp"
#include "udp/padding.hpp"
#include "udp/synthdata.hpp"

namespace udp {

inline TrainConfig default_pretrain_config(std::uint64_t seed = 0) {
  TrainConfig c;
  c.epochs = 10;
  c.batch_size = 16;
  c.seed = seed;
  return c;
}

inline nlohmann::json train_config_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},         {"batch_size", c.batch_size}, {"lr", c.optim.lr},
          {"weight_decay", c.optim.weight_decay}, {"beta1", c.optim.beta1},
          {"beta2", c.optim.beta2},     {"eps", c.optim.eps},         {"seed", c.seed},
          {"patience", c.patience},     {"min_delta", c.min_delta}};
}

/// Everything that determines an experiment's numbers.
struct ExperimentConfig {
  SynthConfig data;
  std::size_t preset = 5;
  std::uint64_t model_seed = 1;
  TrainConfig pretrain = default_pretrain_config();
  TrainConfig adapt = default_adapt_config();
  TrainConfig finetune = default_finetune_config();
  TrainConfig code_network = [] {
    TrainConfig c;
    c.epochs = 3;
    c.batch_size = 16;
    c.optim.weight_decay = 0.0;
    return c;
  }();
  std::vector<std::size_t> code_dims{128, 64, 32};
  double threshold = -1.0;  // negative: task default
  std::size_t self_training_rounds = 1;
  // Self-training pool: "test" adapts on the speaker's unlabeled test clips,
  // for when no adaptation data exists; "adapt" uses the budgeted adaptation
  // clips with their labels hidden.
  std::string self_training_pool = "test";
  std::size_t beam_width = kDefaultBeamWidth;
  nlohmann::json paths = nlohmann::json::object();  // input/output locations, recorded only

  double confidence_threshold() const {
    return threshold < 0 ? default_confidence_threshold(data.task) : threshold;
  }

  nlohmann::json to_json() const {
    return {{"data", data.to_json()},
            {"preset", preset},
            {"model_seed", model_seed},
            {"pretrain", train_config_json(pretrain)},
            {"adapt", train_config_json(adapt)},
            {"finetune", train_config_json(finetune)},
            {"code_network", train_config_json(code_network)},
            {"code_dims", code_dims},
            {"threshold", confidence_threshold()},
            {"self_training_rounds", self_training_rounds},
            {"self_training_pool", self_training_pool},
            {"beam_width", beam_width},
            {"paths", paths}};
  }
};

enum class Method { baseline, udp, finetune, self_training, speaker_code };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::baseline: return "baseline";
    case Method::udp: return "udp";
    case Method::finetune: return "finetune";
    case Method::self_training: return "self_training";
    case Method::speaker_code: return "speaker_code";
  }
  return "?";
}

inline Method method_from_string(const std::string& s) {
  for (Method m : {Method::baseline, Method::udp, Method::finetune, Method::self_training, Method::speaker_code}) {
    if (to_string(m) == s) return m;
  }
  throw ConfigError("unknown method '" + s + "'");
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads; the first exception
/// is rethrown after all workers stop.
inline void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < jobs; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!first) first = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

/// Builds and pretrains the preset model on the split's training speakers.
inline RecognizerModel pretrain_model(const ExperimentConfig& cfg, const DataSplit& split) {
  auto model = RecognizerModel::build(preset_config(cfg.preset, cfg.data.task, cfg.data.vocab,
                                                    cfg.data.height, cfg.data.width, cfg.data.frames),
                                      cfg.model_seed);
  pretrain(model, split.train, cfg.pretrain);
  return model;
}

/// Adapts and scores one method per (speaker, fold) against a frozen model.
class Harness {
 public:
  Harness(const RecognizerModel& model, const DataSplit& split, ExperimentConfig cfg)
      : model_(model), split_(split), cfg_(std::move(cfg)) {
    if (cfg_.self_training_pool != "test" && cfg_.self_training_pool != "adapt") {
      throw ConfigError("self-training pool must be 'test' or 'adapt'");
    }
  }

  void set_speaker_code(const SpeakerCodeAdapter* adapter) { adapter_ = adapter; }
  const ExperimentConfig& config() const { return cfg_; }

  RunConfig run_config(Method m, const AdaptBudget& b) const {
    RunConfig rc;
    rc.values = {{"experiment", cfg_.to_json()},
                 {"model_fingerprint", model_.fingerprint()},
                 {"model_config", model_.config().to_json()},
                 {"method", to_string(m)},
                 {"budget", {{"label", b.label()}, {"seed", b.seed}, {"folds", b.folds}}}};
    return rc;
  }

  /// Per-fold adapted padding for `speaker` (the registry artifact of UDP).
  UserPadding adapt_padding(const std::string& speaker, const AdaptBudget& b, std::size_t fold) const {
    const auto subset = budget_subset(split_, speaker, b, fold);
    return adapt_supervised(model_, init_padding(model_, speaker), subset, fold_config(cfg_.adapt, b, speaker, fold));
  }

  /// One record per (speaker, fold, metric). The baseline ignores the budget
  /// and reports a single fold.
  std::vector<MetricRecord> run(Method m, const AdaptBudget& b, const std::vector<std::string>& speakers,
                                std::size_t jobs = 1) const {
    const std::size_t folds = m == Method::baseline ? 1 : std::max<std::size_t>(1, b.folds);
    const RunConfig rc = run_config(m, b);
    std::vector<std::vector<MetricRecord>> slots(speakers.size() * folds);
    parallel_for(slots.size(), jobs, [&](std::size_t i) {
      slots[i] = run_one(m, b, speakers[i / folds], i % folds, rc);
    });
    std::vector<MetricRecord> out;
    for (auto& s : slots) out.insert(out.end(), s.begin(), s.end());
    return out;
  }

 private:
  static TrainConfig fold_config(TrainConfig c, const AdaptBudget& b, const std::string& speaker, std::size_t fold) {
    c.seed = mix_seed(b.seed, "adapt:" + speaker, fold);
    return c;
  }

  std::string budget_label(Method m, const AdaptBudget& b) const {
    if (m == Method::baseline) return "none";
    if (m == Method::self_training && cfg_.self_training_pool == "test") return "test";
    return b.label();
  }

  std::vector<MetricRecord> run_one(Method m, const AdaptBudget& b, const std::string& speaker,
                                    std::size_t fold, const RunConfig& rc) const {
    const auto test_it = split_.test.find(speaker);
    if (test_it == split_.test.end()) throw ContractError("'" + speaker + "' has no test set");
    const auto& test = test_it->second;
    const Task task = model_.config().task;
    std::vector<MetricRecord> recs;
    auto emit = [&](const std::string& name, double v) {
      recs.push_back({rc.run_id(), to_string(m), speaker, budget_label(m, b), fold, b.seed, name, v, rc.values});
    };
    auto emit_eval = [&](const EvalResult& r) {
      if (task == Task::classification) emit("accuracy", r.accuracy);
      else {
        emit("wer", r.wer);
        emit("accuracy", r.accuracy);
      }
    };
    switch (m) {
      case Method::baseline:
        emit_eval(evaluate(model_, test, nullptr, cfg_.beam_width));
        break;
      case Method::udp: {
        const auto pad = adapt_padding(speaker, b, fold);
        emit_eval(evaluate(model_, test, &pad, cfg_.beam_width));
        break;
      }
      case Method::finetune: {
        const auto subset = budget_subset(split_, speaker, b, fold);
        const auto tuned = finetune_all(model_, subset, fold_config(cfg_.finetune, b, speaker, fold));
        emit_eval(evaluate(tuned, test, nullptr, cfg_.beam_width));
        break;
      }
      case Method::self_training: {
        const auto subset = cfg_.self_training_pool == "test" ? test : budget_subset(split_, speaker, b, fold);
        SelfTrainingConfig sc;
        sc.threshold = cfg_.confidence_threshold();
        sc.rounds = cfg_.self_training_rounds;
        sc.beam_width = cfg_.beam_width;
        sc.train = fold_config(cfg_.adapt, b, speaker, fold);
        const auto res = adapt_self_training(model_, init_padding(model_, speaker), subset, sc);
        emit_eval(evaluate(model_, test, &res.padding, cfg_.beam_width));
        emit("pseudo_labels", static_cast<double>(res.rounds.front().pseudo_labels));
        emit("pseudo_precision", res.rounds.front().precision);
        break;
      }
      case Method::speaker_code: {
        if (!adapter_) throw ContractError("speaker-code runs need a trained adaptation network");
        const auto subset = budget_subset(split_, speaker, b, fold);
        const auto code = adapt_speaker_code(model_, *adapter_, subset, fold_config(cfg_.adapt, b, speaker, fold));
        const OutputFn fn = [&](const Tensor& clips) { return adapter_->forward_batch(model_, clips, code); };
        emit_eval(score(task, predict(task, fn, test, cfg_.beam_width), test));
        break;
      }
    }
    return recs;
  }

  const RecognizerModel& model_;
  const DataSplit& split_;
  ExperimentConfig cfg_;
  const SpeakerCodeAdapter* adapter_ = nullptr;
};

/// Mean accuracy over speakers and folds for one method/budget run.
inline double mean_accuracy(const std::vector<MetricRecord>& recs) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& r : recs) {
    if (r.metric_name == "accuracy") {
      s += r.value;
      ++n;
    }
  }
  return n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace udp
