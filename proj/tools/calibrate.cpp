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

// Generator calibration report: pretrains on the default synthetic task and
// prints the held-in / held-out accuracy gap and pseudo-label precision.
// The default generator configuration was frozen from this tool's output.

#include <chrono>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "udp/experiment.hpp"

int main(int argc, char** argv) {
  using namespace udp;
  CLI::App app{"Calibration report for the synthetic speaker task"};
  ExperimentConfig cfg;
  std::string task = "classification", model_path;
  app.add_option("--task", task, "classification or sequence")->check(CLI::IsMember({"classification", "sequence"}));
  app.add_option("--speakers", cfg.data.num_speakers, "Number of speakers");
  app.add_option("--clips", cfg.data.clips_per_speaker, "Training clips per training speaker");
  app.add_option("--data-seed", cfg.data.seed, "Generator seed");
  app.add_option("--model-seed", cfg.model_seed, "Initialization seed");
  app.add_option("--preset", cfg.preset, "Front-end depth")->check(CLI::IsMember({5, 11, 17}));
  app.add_option("--model", model_path, "Reuse this checkpoint, or save the pretrained model here");
  CLI11_PARSE(app, argc, argv);
  const SynthConfig timing = SynthConfig::for_task(task_from_string(task));
  cfg.data.task = timing.task;
  cfg.data.frames = timing.frames;
  cfg.data.token_frames = timing.token_frames;
  cfg.pretrain.seed = cfg.model_seed;

  const auto t0 = std::chrono::steady_clock::now();
  const auto split = generate(cfg.data);
  RecognizerModel model;
  if (!model_path.empty() && std::filesystem::exists(model_path)) {
    model = RecognizerModel::load(model_path);
  } else {
    cfg.pretrain.log = &std::cerr;
    model = pretrain_model(cfg, split);
    if (!model_path.empty()) model.save(model_path);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::cout << std::fixed << std::setprecision(3);
  const double seen = evaluate(model, split.seen_test).accuracy;
  std::cout << "ready after " << secs << " s\nseen-speaker accuracy " << seen << "\n";
  const double th = cfg.confidence_threshold();
  double unseen = 0.0;
  for (const auto& [id, test] : split.test) {
    const double acc = evaluate(model, test).accuracy;
    unseen += acc / static_cast<double>(split.test.size());
    const auto all = pseudo_label_precision(model, nullptr, split.adapt.at(id), -1.0);
    const auto kept = pseudo_label_precision(model, nullptr, split.adapt.at(id), th);
    std::cout << id << ": accuracy " << acc << ", pseudo-label precision " << all.precision << " unfiltered, "
              << kept.precision << " above " << th << " (" << kept.pseudo_labels << "/" << all.pseudo_labels
              << " kept)\n";
  }
  std::cout << "unseen mean " << unseen << ", gap " << seen - unseen << "\n";
}
