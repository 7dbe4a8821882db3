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

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "udp/udp.hpp"

namespace udp::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitError = 2;

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

/// Adaptation budget flags shared by several commands.
struct BudgetFlags {
  std::vector<double> minutes;
  std::vector<double> fractions;
  std::size_t folds = 1;
  std::uint64_t seed = 0;

  void attach(CLI::App* cmd, bool many, std::vector<double> default_minutes) {
    minutes = std::move(default_minutes);
    auto* m = cmd->add_option("--minutes", minutes, many ? "Budgets in minutes of adaptation data" : "Budget in minutes of adaptation data");
    auto* f = cmd->add_option("--fraction", fractions, "Budget as a fraction of the adaptation set");
    if (!many) {
      m->expected(1);
      f->expected(1);
    }
    m->excludes(f);
    f->excludes(m);
    cmd->add_option("--folds", folds, "Adaptation folds")->check(CLI::Range(1, 100));
    cmd->add_option("--seed", seed, "Fold sampling seed");
  }

  std::vector<AdaptBudget> budgets() const {
    std::vector<AdaptBudget> out;
    if (!fractions.empty()) {
      for (double r : fractions) out.push_back(AdaptBudget::fraction(r, seed, folds));
    } else {
      for (double k : minutes) out.push_back(AdaptBudget::minutes(k, seed, folds));
    }
    return out;
  }
};

inline void print_records(const std::vector<MetricRecord>& recs, const std::string& out_path, std::ostream& os) {
  if (out_path.empty()) write_jsonl(os, recs);
  else append_jsonl(out_path, recs);
}

inline std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

inline ExperimentConfig experiment_for(const RecognizerModel& model, const DataSplit& split) {
  ExperimentConfig cfg;
  cfg.data = split.config;
  cfg.preset = model.config().preset;
  return cfg;
}

inline std::vector<std::string> resolve_speakers(const DataSplit& split, const std::vector<std::string>& requested) {
  if (!requested.empty()) {
    for (const auto& s : requested)
      if (!split.adapt.count(s)) throw ContractError("'" + s + "' is not a held-out speaker of this dataset");
    return requested;
  }
  std::vector<std::string> ids;
  for (const auto& [id, clips] : split.adapt) ids.push_back(id);
  return ids;
}

/// Entry point of the `udp` tool. Exit codes: 0 success, 1 usage error,
/// 2 data or contract error.
inline int run_cli(int argc, const char* const* argv, Streams io = {std::cout, std::cerr}) {
  CLI::App app{"User-dependent padding: speaker adaptation for visual speech recognition"};
  app.name("udp");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");

  // gen-data
  SynthConfig gen;
  std::string gen_out, gen_task = "classification";
  auto* c_gen = app.add_subcommand("gen-data", "Generate and export the synthetic multi-speaker dataset");
  c_gen->add_option("--out", gen_out, "Output directory")->required();
  c_gen->add_option("--seed", gen.seed, "Global generator seed");
  c_gen->add_option("--task", gen_task, "classification or sequence")->check(CLI::IsMember({"classification", "sequence"}));
  c_gen->add_option("--speakers", gen.num_speakers, "Number of speakers");
  c_gen->add_option("--holdout", gen.holdout_ids, "Held-out speaker ids");
  c_gen->add_option("--clips", gen.clips_per_speaker, "Training clips per training speaker");
  c_gen->add_option("--adapt-clips", gen.adapt_clips, "Adaptation clips per held-out speaker");
  c_gen->add_option("--test-clips", gen.test_clips, "Test clips per held-out speaker");

  // pretrain
  std::string pre_data, pre_out;
  std::size_t pre_preset = 5;
  std::uint64_t pre_seed = 1;
  TrainConfig pre_train = default_pretrain_config();
  double pre_grl = 0.0;
  auto* c_pre = app.add_subcommand("pretrain", "Train a recognizer on the training speakers");
  c_pre->add_option("--data", pre_data, "Dataset directory")->required();
  c_pre->add_option("--out", pre_out, "Checkpoint path")->required();
  c_pre->add_option("--preset", pre_preset, "Front-end depth")->check(CLI::IsMember({5, 11, 17}));
  c_pre->add_option("--seed", pre_seed, "Initialization seed");
  c_pre->add_option("--epochs", pre_train.epochs, "Training epochs");
  c_pre->add_option("--grl", pre_grl, "Speaker-adversarial weight (0 = plain training)");

  // enroll
  std::string en_model, en_data, en_speaker, en_registry, en_out;
  std::size_t en_epochs = default_adapt_config().epochs, en_jobs = 1;
  BudgetFlags en_budget;
  auto* c_en = app.add_subcommand("enroll", "Learn a speaker's padding from labelled adaptation clips");
  c_en->add_option("--model", en_model, "Checkpoint")->required();
  c_en->add_option("--data", en_data, "Dataset directory")->required();
  c_en->add_option("--speaker", en_speaker, "Held-out speaker id")->required();
  c_en->add_option("--registry", en_registry, "Padding registry directory (stores fold 0)");
  c_en->add_option("--out", en_out, "Append metrics JSON lines here instead of stdout");
  c_en->add_option("--epochs", en_epochs, "Adaptation epochs");
  c_en->add_option("--jobs", en_jobs, "Parallel folds");
  en_budget.attach(c_en, false, {1.0});

  // adapt-unsup
  std::string un_model, un_data, un_speaker, un_registry, un_out, un_pool = "test";
  double un_threshold = -1.0;
  std::size_t un_rounds = 1, un_jobs = 1;
  BudgetFlags un_budget;
  auto* c_un = app.add_subcommand("adapt-unsup", "Learn a speaker's padding from unlabelled clips by self-training");
  c_un->add_option("--model", un_model, "Checkpoint")->required();
  c_un->add_option("--data", un_data, "Dataset directory")->required();
  c_un->add_option("--speaker", un_speaker, "Held-out speaker id")->required();
  c_un->add_option("--threshold", un_threshold, "Confidence threshold (default 0.8 words / 0.9 sequences)")
      ->check(CLI::Range(0.0, 1.0));
  c_un->add_option("--rounds", un_rounds, "Pseudo-labelling rounds");
  c_un->add_option("--pool", un_pool, "Unlabeled clips: the speaker's test clips, or the adaptation clips")
      ->check(CLI::IsMember({"test", "adapt"}));
  c_un->add_option("--registry", un_registry, "Padding registry directory (stores fold 0)");
  c_un->add_option("--out", un_out, "Append metrics JSON lines here instead of stdout");
  c_un->add_option("--jobs", un_jobs, "Parallel folds");
  un_budget.attach(c_un, false, {});

  // recognize
  std::string rc_model, rc_registry, rc_speaker, rc_data;
  std::vector<std::string> rc_inputs;
  auto* c_rc = app.add_subcommand("recognize", "Decode clips with a speaker's padding");
  c_rc->add_option("--model", rc_model, "Checkpoint")->required();
  c_rc->add_option("--speaker", rc_speaker, "Speaker id")->required();
  c_rc->add_option("--registry", rc_registry, "Padding registry directory");
  c_rc->add_option("--input", rc_inputs, "UDTF clip files");
  c_rc->add_option("--data", rc_data, "Dataset directory: decode the speaker's test clips");

  // eval
  std::string ev_model, ev_data, ev_out, ev_methods = "baseline,udp";
  std::vector<std::string> ev_speakers;
  std::size_t ev_jobs = 1;
  BudgetFlags ev_budget;
  auto* c_ev = app.add_subcommand("eval", "Accuracy / WER table by speaker, budget and method");
  c_ev->add_option("--model", ev_model, "Checkpoint")->required();
  c_ev->add_option("--data", ev_data, "Dataset directory")->required();
  c_ev->add_option("--methods", ev_methods, "Comma-separated: baseline,udp,finetune,self_training,speaker_code");
  c_ev->add_option("--speaker", ev_speakers, "Held-out speakers (default: all)");
  c_ev->add_option("--out", ev_out, "Append metrics JSON lines here");
  c_ev->add_option("--jobs", ev_jobs, "Parallel folds");
  ev_budget.attach(c_ev, true, {1.0, 3.0, 5.0});
  ev_budget.folds = 5;

  // cluster
  std::string cl_data, cl_out;
  cluster::Thresholds cl_th;
  std::optional<std::uint64_t> cl_shuffle;
  auto* c_cl = app.add_subcommand("cluster", "Group per-video embeddings into speaker identities");
  c_cl->add_option("--data", cl_data, "Directory with index.tsv, embeddings.f32, meta.json")->required();
  c_cl->add_option("--out", cl_out, "Output directory")->required();
  c_cl->add_option("--t1", cl_th.t1, "Assignment threshold");
  c_cl->add_option("--t2", cl_th.t2, "Verification split threshold");
  c_cl->add_option("--t3", cl_th.t3, "Identification merge threshold");
  c_cl->add_option("--t4", cl_th.t4, "Boundary candidate threshold");
  c_cl->add_option("--momentum", cl_th.m, "Centroid momentum");
  c_cl->add_option("--shuffle", cl_shuffle, "Shuffle input order with this seed");

  // ablate-layers
  std::string ab_model, ab_data, ab_out;
  std::vector<std::size_t> ab_layers{5, 11, 17};
  std::vector<std::string> ab_speakers;
  std::size_t ab_jobs = 1, ab_epochs = default_pretrain_config().epochs;
  std::uint64_t ab_model_seed = 1;
  BudgetFlags ab_budget;
  auto* c_ab = app.add_subcommand("ablate-layers", "Padding-layer count x budget grid on a 17-layer model");
  c_ab->add_option("--data", ab_data, "Dataset directory")->required();
  c_ab->add_option("--model", ab_model, "17-layer checkpoint (pretrained here when absent)");
  c_ab->add_option("--layers", ab_layers, "Numbers of leading conv layers that get padding");
  c_ab->add_option("--speaker", ab_speakers, "Held-out speakers (default: all)");
  c_ab->add_option("--out", ab_out, "Append metrics JSON lines here");
  c_ab->add_option("--jobs", ab_jobs, "Parallel folds");
  c_ab->add_option("--model-seed", ab_model_seed, "Initialization seed when pretraining");
  c_ab->add_option("--epochs", ab_epochs, "Pretraining epochs when pretraining");
  ab_budget.attach(c_ab, true, {1.0, 3.0, 5.0});
  ab_budget.folds = 5;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, io.out, io.err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*c_gen) {
      const SynthConfig timing = SynthConfig::for_task(task_from_string(gen_task));
      gen.task = timing.task;
      gen.frames = timing.frames;
      gen.token_frames = timing.token_frames;
      const auto split = generate(gen);
      export_split(split, gen_out);
      io.out << "wrote " << split.train.size() << " training clips and " << split.adapt.size()
             << " held-out speakers to " << gen_out << "\n";
      return kExitOk;
    }

    if (*c_pre) {
      const auto split = load_split(pre_data);
      auto model = RecognizerModel::build(
          preset_config(pre_preset, split.config.task, split.config.vocab, split.config.height,
                        split.config.width, split.config.frames),
          pre_seed);
      pre_train.seed = pre_seed;
      pre_train.log = &io.err;
      if (pre_grl > 0) train_speaker_invariant(model, split.train, pre_grl, pre_train);
      else pretrain(model, split.train, pre_train);
      model.save(pre_out);
      io.out << "seen-speaker accuracy " << fmt(evaluate(model, split.seen_test).accuracy) << "\n";
      for (const auto& [id, clips] : split.test) {
        io.out << id << " baseline accuracy " << fmt(evaluate(model, clips).accuracy) << "\n";
      }
      io.out << "checkpoint " << pre_out << " fingerprint " << std::hex << model.fingerprint() << std::dec << "\n";
      return kExitOk;
    }

    if (*c_en || *c_un) {
      const bool sup = c_en->parsed();
      const auto model = RecognizerModel::load(sup ? en_model : un_model);
      const auto split = load_split(sup ? en_data : un_data);
      const std::string speaker = sup ? en_speaker : un_speaker;
      resolve_speakers(split, {speaker});
      auto cfg = experiment_for(model, split);
      cfg.paths = {{"model", sup ? en_model : un_model}, {"data", sup ? en_data : un_data}};
      BudgetFlags& bf = sup ? en_budget : un_budget;
      AdaptBudget budget = bf.budgets().empty() ? AdaptBudget::everything(bf.seed, bf.folds) : bf.budgets().front();
      if (sup) cfg.adapt.epochs = en_epochs;
      else {
        cfg.threshold = un_threshold;
        cfg.self_training_rounds = un_rounds;
        cfg.self_training_pool = un_pool;
        if (un_pool == "test" && !bf.budgets().empty()) {
          throw ContractError("--minutes/--fraction select adaptation clips; use them with --pool adapt");
        }
      }
      const Harness h(model, split, cfg);
      const Method method = sup ? Method::udp : Method::self_training;
      const auto recs = h.run(method, budget, {speaker}, sup ? en_jobs : un_jobs);
      print_records(recs, sup ? en_out : un_out, io.out);
      io.err << to_string(method) << " " << speaker << " " << budget.label() << ": mean accuracy "
             << fmt(mean_accuracy(recs)) << " over " << budget.folds << " fold(s)\n";
      const std::string reg_dir = sup ? en_registry : un_registry;
      if (!reg_dir.empty()) {
        UserPadding pad;
        if (sup) {
          pad = h.adapt_padding(speaker, budget, 0);
        } else {
          SelfTrainingConfig sc;
          sc.threshold = cfg.confidence_threshold();
          sc.rounds = un_rounds;
          sc.train = cfg.adapt;
          sc.train.seed = mix_seed(budget.seed, "adapt:" + speaker, 0);
          const auto pool = un_pool == "test" ? split.test.at(speaker) : budget_subset(split, speaker, budget, 0);
          pad = adapt_self_training(model, init_padding(model, speaker), pool, sc).padding;
        }
        PaddingRegistry reg(reg_dir, model.fingerprint());
        reg.put(pad);
        io.err << "stored padding " << reg.path_for(speaker).string() << " (" << pad.parameter_count()
               << " parameters)\n";
      }
      return kExitOk;
    }

    if (*c_rc) {
      const auto model = RecognizerModel::load(rc_model);
      std::optional<UserPadding> pad;
      if (!rc_registry.empty()) pad = PaddingRegistry(rc_registry, model.fingerprint()).get(rc_speaker);
      if (!pad) io.err << "warning: no padding for speaker '" << rc_speaker << "'; using the baseline model\n";
      const UserPadding* p = pad ? &*pad : nullptr;
      const Task task = model.config().task;
      std::vector<Clip> clips;
      std::vector<std::string> names;
      for (const auto& path : rc_inputs) {
        Clip c;
        c.frames = load_udtf(path);
        clips.push_back(std::move(c));
        names.push_back(path);
      }
      bool scored = false;
      if (!rc_data.empty()) {
        const auto split = load_split(rc_data);
        const auto it = split.test.find(rc_speaker);
        if (it == split.test.end()) throw ContractError("dataset has no test clips for '" + rc_speaker + "'");
        for (const auto& c : it->second) {
          clips.push_back(c);
          names.push_back(detail::clip_file_name(c));
        }
        scored = rc_inputs.empty();
      }
      if (clips.empty()) throw ContractError("nothing to recognize: give --input or --data");
      const auto preds = predict(task, model_output(model, p), clips);
      for (std::size_t i = 0; i < clips.size(); ++i) {
        io.out << names[i] << '\t';
        if (task == Task::classification) io.out << preds[i].label;
        else {
          for (std::size_t k = 0; k < preds[i].tokens.size(); ++k) io.out << (k ? " " : "") << preds[i].tokens[k];
        }
        io.out << '\t' << fmt(preds[i].confidence) << '\n';
      }
      if (scored) {
        const auto r = score(task, preds, clips);
        io.err << "accuracy " << fmt(r.accuracy) << (task == Task::ctc_sequence ? " wer " + fmt(r.wer) : "") << "\n";
      }
      return kExitOk;
    }

    if (*c_ev) {
      const auto model = RecognizerModel::load(ev_model);
      const auto split = load_split(ev_data);
      const auto speakers = resolve_speakers(split, ev_speakers);
      auto cfg = experiment_for(model, split);
      cfg.paths = {{"model", ev_model}, {"data", ev_data}};
      Harness h(model, split, cfg);
      std::vector<Method> methods;
      std::stringstream ss(ev_methods);
      for (std::string m; std::getline(ss, m, ',');) methods.push_back(method_from_string(m));
      std::optional<SpeakerCodeAdapter> adapter;
      if (std::find(methods.begin(), methods.end(), Method::speaker_code) != methods.end()) {
        adapter = SpeakerCodeAdapter::create(model.config().feature_dim(), cfg.code_dims, cfg.model_seed);
        train_speaker_code_network(model, *adapter, split.train, cfg.code_network);
        h.set_speaker_code(&*adapter);
      }
      std::vector<MetricRecord> all;
      io.out << std::left << std::setw(10) << "speaker" << std::setw(10) << "budget" << std::setw(15) << "method"
             << std::setw(10) << "accuracy" << (split.config.task == Task::ctc_sequence ? "wer" : "") << "\n";
      auto row = [&](const std::string& spk, const std::string& budget, Method m, const std::vector<MetricRecord>& recs) {
        std::vector<MetricRecord> mine;
        for (const auto& r : recs)
          if (r.speaker == spk) mine.push_back(r);
        io.out << std::setw(10) << spk << std::setw(10) << budget << std::setw(15) << to_string(m) << std::setw(10)
               << fmt(mean_accuracy(mine));
        if (split.config.task == Task::ctc_sequence) io.out << fmt(mean_metric(mine, to_string(m), mine.front().budget, "wer"));
        io.out << "\n";
      };
      for (Method m : methods) {
        if (m == Method::baseline) {
          const auto recs = h.run(m, AdaptBudget::everything(), speakers, ev_jobs);
          for (const auto& s : speakers) row(s, "none", m, recs);
          all.insert(all.end(), recs.begin(), recs.end());
          continue;
        }
        for (const auto& b : ev_budget.budgets()) {
          const auto recs = h.run(m, b, speakers, ev_jobs);
          for (const auto& s : speakers) row(s, b.label(), m, recs);
          all.insert(all.end(), recs.begin(), recs.end());
        }
      }
      if (!ev_out.empty()) append_jsonl(ev_out, all);
      return kExitOk;
    }

    if (*c_cl) {
      cl_th.validate();
      auto emb = cluster::load_embeddings(cl_data);
      if (cl_shuffle) emb = cluster::shuffled(std::move(emb), *cl_shuffle);
      const auto r = cluster::run_pipeline(emb, cl_th);
      cluster::write_result(cl_out, emb, r, cl_th);
      io.out << emb.size() << " videos: " << r.after_assign << " clusters after assign, " << r.after_split
             << " after verify, " << r.after_merge << " after merge, " << r.candidates.size()
             << " boundary candidates\n";
      return kExitOk;
    }

    if (*c_ab) {
      const auto split = load_split(ab_data);
      const auto speakers = resolve_speakers(split, ab_speakers);
      RecognizerModel full;
      if (!ab_model.empty()) {
        full = RecognizerModel::load(ab_model);
      } else {
        ExperimentConfig pc;
        pc.data = split.config;
        pc.preset = 17;
        pc.model_seed = ab_model_seed;
        pc.pretrain.epochs = ab_epochs;
        pc.pretrain.seed = ab_model_seed;
        pc.pretrain.log = &io.err;
        full = pretrain_model(pc, split);
      }
      if (full.config().convs.size() != 17) throw ContractError("ablate-layers needs a 17-layer model");
      auto cfg = experiment_for(full, split);
      cfg.paths = {{"model", ab_model}, {"data", ab_data}};
      const auto budgets = ab_budget.budgets();
      std::vector<MetricRecord> all;
      io.out << std::left << std::setw(8) << "layers";
      for (const auto& b : budgets) io.out << std::setw(10) << b.label();
      io.out << "\n";
      for (std::size_t k : ab_layers) {
        if (k == 0 || k > 17) throw ConfigError("padding layer count must lie in [1, 17]");
        std::vector<std::size_t> layers(k);
        std::iota(layers.begin(), layers.end(), 0);
        const auto model = full.with_udp_layers(layers);
        const Harness h(model, split, cfg);
        io.out << std::setw(8) << k;
        for (const auto& b : budgets) {
          auto recs = h.run(Method::udp, b, speakers, ab_jobs);
          for (auto& r : recs) r.method = "udp_" + std::to_string(k);
          io.out << std::setw(10) << fmt(mean_accuracy(recs)) << std::flush;
          all.insert(all.end(), recs.begin(), recs.end());
        }
        io.out << "\n";
      }
      if (!ab_out.empty()) append_jsonl(ab_out, all);
      return kExitOk;
    }
  } catch (const Error& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitUsage;
}

}  // namespace udp::cli
