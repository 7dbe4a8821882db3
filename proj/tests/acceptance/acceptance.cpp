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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Trained models are cached under --workdir keyed by their
// configuration, so re-runs skip pretraining.

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "grad_cases.hpp"
#include "oracles.hpp"
#include "udp/cli.hpp"

using namespace udp;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string pct(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << 100.0 * v;
  return os.str();
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Data and pretrained models shared by the trained-model criteria.
class Workspace {
 public:
  explicit Workspace(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  const fs::path& dir() const { return dir_; }

  ExperimentConfig config(Task task) const {
    ExperimentConfig cfg;
    cfg.data = SynthConfig::for_task(task);
    return cfg;
  }

  const DataSplit& split(Task task) {
    auto& slot = splits_[task];
    if (!slot) slot = generate(config(task).data);
    return *slot;
  }

  /// Pretrained model for `task` at `preset`, cached on disk by configuration.
  const RecognizerModel& model(Task task, std::size_t preset = 5) {
    auto& slot = models_[{task, preset}];
    if (slot) return *slot;
    ExperimentConfig cfg = config(task);
    cfg.preset = preset;
    // Same seeds as `ablate-layers` uses when it pretrains by itself.
    if (preset != 5) cfg.pretrain.seed = cfg.model_seed;
    RunConfig key;
    key.values = cfg.to_json();
    const fs::path path = dir_ / ("model_" + to_string(task) + "_" + key.run_id() + ".udpm");
    if (fs::exists(path)) {
      slot = RecognizerModel::load(path);
    } else {
      const auto t0 = Clock::now();
      slot = pretrain_model(cfg, split(task));
      slot->save(path);
      std::cout << "  (pretrained " << to_string(task) << " preset " << preset << " model in "
                << num(seconds_since(t0)) << " s)\n"
                << std::flush;
    }
    model_paths_[{task, preset}] = path;
    return *slot;
  }

  fs::path model_path(Task task, std::size_t preset) {
    model(task, preset);
    return model_paths_.at({task, preset});
  }

 private:
  fs::path dir_;
  std::map<Task, std::optional<DataSplit>> splits_;
  std::map<std::pair<Task, std::size_t>, std::optional<RecognizerModel>> models_;
  std::map<std::pair<Task, std::size_t>, fs::path> model_paths_;
};

std::vector<std::string> held_out(const DataSplit& split) {
  std::vector<std::string> ids;
  for (const auto& [id, clips] : split.adapt) ids.push_back(id);
  return ids;
}

// ---------------------------------------------------------------------------

ModelConfig random_model_config(std::mt19937_64& rng) {
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  for (;;) {
    ModelConfig c;
    c.channels = pick(1, 2);
    c.height = pick(5, 12);
    c.width = pick(5, 12);
    c.max_frames = pick(1, 4);
    const std::size_t layers = pick(1, 4);
    for (std::size_t l = 0; l < layers; ++l) {
      const std::size_t k = std::array<std::size_t, 3>{1, 3, 5}[pick(0, 2)];
      c.convs.push_back({pick(1, 5), k, pick(1, 2), pick(1, 2)});
    }
    for (std::size_t l = 0; l < layers; ++l)
      if (pick(0, 2) > 0) c.udp_layers.push_back(l);
    if (c.udp_layers.empty()) c.udp_layers.push_back(pick(0, layers - 1));
    c.task = pick(0, 1) ? Task::classification : Task::ctc_sequence;
    c.vocab = pick(2, 5);
    c.backend_channels = {pick(2, 8)};
    c.backend_kernel = pick(0, 1) ? 3 : 1;
    try {
      c.validate();
      return c;
    } catch (const Error&) {
    }
  }
}

Outcome zero_ring_equivalence() {
  std::mt19937_64 rng(101);
  std::size_t identical = 0;
  const std::size_t pairs = 100;
  for (std::size_t i = 0; i < pairs; ++i) {
    ModelConfig cfg;
    std::size_t frames = 0;
    // every tenth pair uses a full-size preset
    if (i % 10 == 9) {
      const std::size_t depth = std::array<std::size_t, 3>{5, 11, 17}[(i / 10) % 3];
      cfg = preset_config(depth, i % 20 == 19 ? Task::ctc_sequence : Task::classification, 12);
      frames = 2;
    } else {
      cfg = random_model_config(rng);
      frames = 1 + rng() % cfg.max_frames;
    }
    auto m = RecognizerModel::build(cfg, 1000 + i);
    oracle::randomize_bn(m, rng);
    const Tensor clips = oracle::random_tensor({2, frames, cfg.channels, cfg.height, cfg.width}, rng, 0, 1);
    const auto pad = init_padding(m, "zero");
    const Tensor a = m.forward_batch(clips), b = m.forward_batch(clips, &pad);
    const auto x = a.data(), y = b.data();
    if (x.size() == y.size() && std::memcmp(x.data(), y.data(), x.size() * sizeof(double)) == 0) ++identical;
  }
  return {identical == pairs, std::to_string(identical) + "/" + std::to_string(pairs) + " pairs bitwise identical"};
}

Outcome gradient_suite() {
  double worst = 0.0;
  std::string worst_name, failures;
  std::size_t elements = 0;
  const auto cases = oracle::gradient_cases();
  for (const auto& c : cases) {
    const auto r = oracle::finite_difference_check(c.fn, c.leaves);
    elements += r.checked;
    if (r.max_rel_error > worst) {
      worst = r.max_rel_error;
      worst_name = c.name;
    }
    if (!(r.max_rel_error < 1e-4) || r.checked == 0) failures += " " + c.name;
  }
  return {failures.empty(), std::to_string(cases.size()) + " cases, " + std::to_string(elements) +
                                " elements, max rel err " + num(worst) + " (" + worst_name + ")" +
                                (failures.empty() ? "" : "; failed:" + failures)};
}

Outcome ctc_oracle() {
  std::mt19937_64 rng(303);
  std::size_t instances = 0;
  double worst_loss = 0.0, worst_grad = 0.0;
  for (std::size_t t = 1; t <= 4; ++t)
    for (std::size_t v = 1; v <= 3; ++v) {
      std::vector<LabelSeq> targets{{}};
      for (std::size_t a = 0; a < v; ++a) {
        targets.push_back({a});
        for (std::size_t b = 0; b < v; ++b) targets.push_back({a, b});
      }
      for (const auto& target : targets) {
        if (ctc_min_frames(target) > t) continue;
        for (int rep = 0; rep < 3; ++rep) {
          const auto lp = oracle::random_log_posteriors(t, v + 1, rng);
          const auto want = oracle::ctc_brute(lp, t, v + 1, target);
          Tensor x = Tensor::from_data({t, v + 1}, lp, true);
          const Tensor loss = ctc_loss(x, target);
          backward(loss);
          worst_loss = std::max(worst_loss, std::abs(loss.item() - want.loss));
          for (std::size_t i = 0; i < want.grad.size(); ++i)
            worst_grad = std::max(worst_grad, std::abs(x.grad()[i] - want.grad[i]));
          ++instances;
        }
      }
    }
  return {worst_loss <= 1e-10 && worst_grad <= 1e-5,
          std::to_string(instances) + " instances, max |dloss| " + num(worst_loss) + ", max |dgrad| " +
              num(worst_grad)};
}

Outcome beam_oracle() {
  std::mt19937_64 rng(404);
  std::size_t agree = 0;
  const std::size_t n = 200;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t t = 1 + i % 4, cols = 2 + (i / 4) % 3;
    const auto lp = oracle::random_log_posteriors(t, cols, rng);
    const auto beams = beam_decode(Tensor::from_data({t, cols}, lp), oracle::path_count(t, cols));
    agree += beams.front().label_prefix == oracle::best_labelling(lp, t, cols);
  }
  return {agree == n, std::to_string(agree) + "/" + std::to_string(n) + " top-1 decodes equal the exhaustive argmax"};
}

Outcome padding_locality() {
  std::mt19937_64 rng(505);
  auto m = RecognizerModel::build(preset_config(17, Task::classification, 12), 5);
  oracle::randomize_bn(m, rng);
  const auto& cfg = m.config();
  const Tensor frames = oracle::random_tensor({1, 1, cfg.height, cfg.width}, rng, 0, 1);
  auto pad = init_padding(m, "probe");
  std::vector<Tensor> base, moved;
  m.frontend_features(frames, &pad, &base);
  pad.rings[0].values = oracle::random_tensor(pad.rings[0].values.shape(), rng, 0.5, 1.5);
  m.frontend_features(frames, &pad, &moved);
  const auto masks = oracle::ring_influence_masks(cfg);
  bool exact_first = true, inside_oracle = true, monotone = true;
  std::vector<double> frac;
  for (std::size_t l = 0; l < masks.size(); ++l) {
    const std::size_t hw = masks[l].size(), c = base[l].dim(1);
    std::size_t changed_n = 0;
    for (std::size_t pos = 0; pos < hw; ++pos) {
      bool changed = false;
      for (std::size_t ch = 0; ch < c; ++ch) changed |= base[l].data()[ch * hw + pos] != moved[l].data()[ch * hw + pos];
      changed_n += changed;
      if (l == 0 && changed != masks[l][pos]) exact_first = false;
      if (changed && !masks[l][pos]) inside_oracle = false;
    }
    frac.push_back(static_cast<double>(changed_n) / static_cast<double>(hw));
    if (l > 0 && frac[l] < frac[l - 1]) monotone = false;
  }
  const bool full = frac.back() == 1.0;
  std::ostringstream os;
  os << "affected fraction by layer:";
  for (double f : frac) os << " " << std::setprecision(3) << f;
  os << (exact_first ? "; layer 1 equals the oracle mask" : "; layer 1 differs from the oracle mask")
     << (inside_oracle ? "" : "; changes outside the oracle region");
  return {exact_first && inside_oracle && monotone && full, os.str()};
}

Outcome frozen_weights(Workspace& ws) {
  const auto& model = ws.model(Task::classification);
  const auto& split = ws.split(Task::classification);
  const std::string before = model.checkpoint_bytes();
  const fs::path file = ws.dir() / "frozen_check.udpm";
  model.save(file);
  const std::string speaker = held_out(split).front();
  const auto subset = budget_subset(split, speaker, AdaptBudget::minutes(1, 0, 1), 0);
  auto tc = default_adapt_config(1);
  tc.epochs = 3;
  const auto pad = adapt_supervised(model, init_padding(model, speaker), subset, tc);
  const bool after_sup = model.checkpoint_bytes() == before;
  SelfTrainingConfig sc;
  sc.train = tc;
  const auto st = adapt_self_training(model, init_padding(model, speaker), subset, sc);
  const bool after_st = model.checkpoint_bytes() == before;
  const bool file_same = read_file(file) == before;
  double moved = 0.0;
  for (const auto& r : pad.rings)
    for (double v : r.values.data()) moved = std::max(moved, std::abs(v));
  fs::remove(file);
  return {after_sup && after_st && file_same && moved > 0.0,
          std::string("supervised ") + (after_sup ? "identical" : "CHANGED") + ", self-training " +
              (after_st ? "identical" : "CHANGED") + " (" + std::to_string(st.rounds.front().pseudo_labels) +
              " pseudo-labels), max |ring| after adaptation " + num(moved)};
}

Outcome adaptation_trend(Workspace& ws) {
  const auto& split = ws.split(Task::classification);
  const Harness h(ws.model(Task::classification), split, ws.config(Task::classification));
  const auto spk = held_out(split);
  const double base = mean_accuracy(h.run(Method::baseline, AdaptBudget::everything(), spk));
  std::vector<double> acc;
  for (double minutes : {1.0, 3.0, 5.0}) acc.push_back(mean_accuracy(h.run(Method::udp, AdaptBudget::minutes(minutes, 0, 5), spk)));
  const bool ok = base < acc[0] && acc[0] <= acc[1] && acc[1] <= acc[2] && acc[0] - base >= 0.03;
  return {ok, "baseline " + pct(base) + ", 1/3/5 min " + pct(acc[0]) + " / " + pct(acc[1]) + " / " + pct(acc[2]) +
                  " (" + std::to_string(spk.size()) + " speakers x 5 folds)"};
}

Outcome small_data_crossover(Workspace& ws) {
  const auto& split = ws.split(Task::classification);
  const Harness h(ws.model(Task::classification), split, ws.config(Task::classification));
  const auto spk = held_out(split);
  std::ostringstream os;
  double udp10 = 0, ft10 = 0, udp100 = 0, ft100 = 0;
  std::size_t wins = 0;
  const std::size_t seeds = 5;
  for (std::uint64_t s = 0; s < seeds; ++s) {
    const double u = mean_accuracy(h.run(Method::udp, AdaptBudget::fraction(0.1, s, 1), spk));
    const double f = mean_accuracy(h.run(Method::finetune, AdaptBudget::fraction(0.1, s, 1), spk));
    udp10 += u / seeds;
    ft10 += f / seeds;
    wins += u >= f;
  }
  for (std::uint64_t s = 0; s < seeds; ++s) {
    udp100 += mean_accuracy(h.run(Method::udp, AdaptBudget::fraction(1.0, s, 1), spk)) / seeds;
    ft100 += mean_accuracy(h.run(Method::finetune, AdaptBudget::fraction(1.0, s, 1), spk)) / seeds;
  }
  os << "10%: UDP " << pct(udp10) << " vs finetune " << pct(ft10) << " (UDP >= finetune on " << wins << "/" << seeds
     << " seeds); 100% (reported only): UDP " << pct(udp100) << " vs finetune " << pct(ft100);
  return {udp10 >= ft10, os.str()};
}

Outcome unsupervised_gain(Workspace& ws) {
  std::ostringstream os;
  bool ok = true;
  for (Task task : {Task::classification, Task::ctc_sequence}) {
    const auto& split = ws.split(task);
    const auto& model = ws.model(task);
    const auto cfg = ws.config(task);
    const Harness h(model, split, cfg);
    const auto spk = held_out(split);
    const double th = cfg.confidence_threshold();
    const double base = mean_accuracy(h.run(Method::baseline, AdaptBudget::everything(), spk));
    const double st = mean_accuracy(h.run(Method::self_training, AdaptBudget::everything(0, 5), spk));
    std::size_t kept = 0, kept_ok = 0, all = 0, all_ok = 0;
    for (const auto& s : spk) {
      const auto& clips = split.test.at(s);  // the unlabeled pool self-training adapts on
      const auto at = pseudo_label_precision(model, nullptr, clips, th, cfg.beam_width);
      const auto unf = pseudo_label_precision(model, nullptr, clips, -1.0, cfg.beam_width);
      kept += at.pseudo_labels;
      kept_ok += static_cast<std::size_t>(std::llround(at.precision * static_cast<double>(at.pseudo_labels)));
      all += unf.pseudo_labels;
      all_ok += static_cast<std::size_t>(std::llround(unf.precision * static_cast<double>(unf.pseudo_labels)));
    }
    const double p_at = kept ? static_cast<double>(kept_ok) / static_cast<double>(kept) : 0.0;
    const double p_all = all ? static_cast<double>(all_ok) / static_cast<double>(all) : 0.0;
    const bool task_ok = st > base && kept > 0 && p_at >= p_all;
    ok = ok && task_ok;
    os << (os.tellp() > 0 ? "; " : "") << to_string(task) << " @" << th << ": baseline " << pct(base)
       << " -> self-training " << pct(st) << ", precision " << pct(p_at) << " (" << kept << " kept) vs unfiltered "
       << pct(p_all);
  }
  return {ok, os.str()};
}

Outcome parameter_budget(Workspace& ws) {
  const auto full = parameter_report(preset_config(17, Task::classification, 12));
  const auto& model = ws.model(Task::classification);
  const fs::path ckpt = ws.dir() / "budget_check.udpm";
  const fs::path reg_dir = ws.dir() / "budget_registry";
  fs::remove_all(reg_dir);
  model.save(ckpt);
  PaddingRegistry reg(reg_dir, model.fingerprint());
  std::mt19937_64 rng(1010);
  for (std::size_t i = 0; i < 20; ++i) {
    auto p = init_padding(model, SynthConfig::speaker_name(100 + i));
    for (auto& r : p.rings) r.values = oracle::random_tensor(r.values.shape(), rng);
    reg.put(p);
  }
  const double ck = static_cast<double>(fs::file_size(ckpt));
  const double total = ck + static_cast<double>(reg.stored_bytes());
  fs::remove(ckpt);
  fs::remove_all(reg_dir);
  const bool ok = full.ratio() < 0.01 && total < 1.05 * ck;
  return {ok, "full preset rings " + std::to_string(full.udp_params) + " / " + std::to_string(full.model_params) +
                  " = " + pct(full.ratio()) + "%; default model: checkpoint " + num(ck) + " B, plus 20 paddings " +
                  num(total) + " B = " + num(total / ck) + "x"};
}

Outcome clustering() {
  using namespace udp::cluster;
  bool ok = true;
  std::ostringstream os;
  const Thresholds th{};
  const bool defaults = th.t1 == 0.41 && th.t2 == 0.63 && th.t3 == 0.63 && th.t4 == 0.59;
  ok = ok && defaults;
  std::size_t exact = 0, trials = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> sizes(3 + seed % 5);
    for (auto& s : sizes) s = 1 + rng() % 20;
    const auto p = oracle::planted_identities(sizes, 64, 0.25, 1100 + seed);
    for (std::uint64_t order = 0; order < 3; ++order) {
      auto emb = p.embeddings;
      std::vector<int> truth = p.identity;
      if (order > 0) {
        std::vector<std::size_t> perm(emb.size());
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        for (std::size_t i = 0; i < perm.size(); ++i) {
          emb[i] = p.embeddings[perm[i]];
          truth[i] = p.identity[perm[i]];
        }
      }
      const auto r = run_pipeline(emb, th);
      exact += oracle::adjusted_rand_index(oracle::labels_of(r.clusters, emb.size()), truth) == 1.0;
      ++trials;
    }
  }
  ok = ok && exact == trials;
  os << "ARI 1.0 on " << exact << "/" << trials << " planted runs";

  // contamination: two identities forced into one cluster
  std::size_t split_ok = 0, merge_ok = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = oracle::planted_identities({6 + seed % 3, 4 + seed % 4}, 32, 0.2, 1200 + seed);
    Cluster mixed{0, p.embeddings[0].vector, {}};
    for (std::size_t i = 0; i < p.embeddings.size(); ++i) mixed.members.push_back(i);
    auto parts = verify_split(mixed, p.embeddings, th.t2);
    // parts keep the parent's id until the pipeline renumbers them
    for (std::size_t i = 0; i < parts.size(); ++i) parts[i].cluster_id = static_cast<int>(i);
    split_ok += oracle::adjusted_rand_index(oracle::labels_of(parts, p.embeddings.size()), p.identity) == 1.0;

    // split: one identity broken into two clusters
    const auto q = oracle::planted_identities({8 + seed % 5, 5}, 32, 0.2, 1300 + seed);
    const std::size_t a = 8 + seed % 5, half = a / 2;
    std::vector<Cluster> cs(3);
    for (std::size_t i = 0; i < q.embeddings.size(); ++i) cs[i < half ? 0 : i < a ? 1 : 2].members.push_back(i);
    for (std::size_t c = 0; c < 3; ++c) {
      cs[c].cluster_id = static_cast<int>(c);
      cs[c].centroid = udp::cluster::detail::member_mean(q.embeddings, cs[c].members);
    }
    const auto merged = identify_merge(cs, q.embeddings, th.t3);
    merge_ok += oracle::adjusted_rand_index(oracle::labels_of(merged, q.embeddings.size()), q.identity) == 1.0;
  }
  ok = ok && split_ok == 10 && merge_ok == 10;
  os << "; verify_split repaired " << split_ok << "/10 contaminations; identify_merge repaired " << merge_ok
     << "/10 splits; defaults " << th.t1 << "/" << th.t2 << "/" << th.t3 << "/" << th.t4;
  return {ok, os.str()};
}

Outcome layer_ablation(Workspace& ws) {
  const auto& split = ws.split(Task::classification);
  const fs::path data = ws.dir() / "ablation_data";
  const fs::path out = ws.dir() / "ablation.jsonl";
  fs::remove_all(data);
  fs::remove(out);
  export_split(split, data);
  const std::string d = data.string(), o = out.string();
  const std::string m = ws.model_path(Task::classification, 17).string();
  const char* argv[] = {"udp", "ablate-layers", "--data", d.c_str(), "--out", o.c_str(), "--model", m.c_str()};
  std::ostringstream cli_out, cli_err;
  const int code = cli::run_cli(8, argv, {cli_out, cli_err});
  if (code != 0) return {false, "ablate-layers exited " + std::to_string(code) + ": " + cli_err.str()};
  std::map<std::string, std::map<std::string, std::vector<double>>> cells;
  for (const auto& r : read_jsonl(out))
    if (r.metric_name == "accuracy") cells[r.method][r.budget].push_back(r.value);
  const std::vector<std::string> rows{"udp_5", "udp_11", "udp_17"}, cols{"1min", "3min", "5min"};
  std::ostringstream os;
  bool monotone = true;
  double best = 0.0, corner = 0.0;
  for (const auto& row : rows) {
    os << row << ":";
    double prev = -1.0;
    for (const auto& col : cols) {
      const auto& v = cells[row][col];
      if (v.empty()) return {false, "missing cell " + row + " " + col};
      const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      os << " " << pct(m);
      monotone = monotone && m >= prev;
      prev = m;
      best = std::max(best, m);
      if (row == "udp_17" && col == "5min") corner = m;
    }
    os << "; ";
  }
  fs::remove_all(data);
  os << "full/5min " << pct(corner) << " vs grid max " << pct(best);
  return {monotone && corner >= best - 0.005, os.str()};
}

struct Criterion {
  int id;
  std::string name;
  double limit_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  std::string workdir = (fs::temp_directory_path() / "udp_acceptance").string();
  std::vector<int> only;
  app.add_option("--workdir", workdir, "Cache directory for data and pretrained models");
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);

  Workspace ws(workdir);
  const std::vector<Criterion> criteria{
      {1, "zero-ring equivalence", 60, [] { return zero_ring_equivalence(); }},
      {2, "gradient suite", 120, [] { return gradient_suite(); }},
      {3, "CTC oracle equivalence", 60, [] { return ctc_oracle(); }},
      {4, "beam oracle", 60, [] { return beam_oracle(); }},
      {5, "padding locality", 60, [] { return padding_locality(); }},
      {6, "frozen-weight contract", 60, [&] { return frozen_weights(ws); }},
      {7, "adaptation trend", 15 * 60, [&] { return adaptation_trend(ws); }},
      {8, "small-data crossover", 20 * 60, [&] { return small_data_crossover(ws); }},
      {9, "unsupervised gain", 15 * 60, [&] { return unsupervised_gain(ws); }},
      {10, "parameter budget", 60, [&] { return parameter_budget(ws); }},
      {11, "clustering pipeline", 60, [] { return clustering(); }},
      {12, "layer-count ablation", 30 * 60, [&] { return layer_ablation(ws); }},
  };

  // Pretraining is setup, timed separately from the criteria that use the models.
  auto selected = [&](int lo, int hi) {
    return only.empty() || std::any_of(only.begin(), only.end(), [&](int i) { return i >= lo && i <= hi; });
  };
  if (selected(6, 10) || selected(12, 12)) {
    const auto t0 = Clock::now();
    if (selected(6, 10)) {
      for (Task task : {Task::classification, Task::ctc_sequence}) ws.model(task);
    }
    if (selected(12, 12)) ws.model(Task::classification, 17);
    std::cout << "setup: pretrained models ready after " << num(seconds_since(t0)) << " s\n" << std::flush;
  }

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = seconds_since(t0);
    const bool in_time = secs < c.limit_seconds;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::cout << (pass ? "PASS" : "FAIL") << " [" << std::setw(2) << c.id << "] " << c.name << " (" << num(secs)
              << " s, limit " << num(c.limit_seconds) << " s" << (in_time ? "" : ", OVER LIMIT") << "): " << o.detail
              << "\n"
              << std::flush;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed\n" : "all criteria passed\n");
  return failed ? 1 : 0;
}
