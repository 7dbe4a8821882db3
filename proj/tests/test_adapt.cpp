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

#include <gtest/gtest.h>

#include <random>

#include "udp/experiment.hpp"

using namespace udp;

namespace {

SynthConfig data_config(Task task = Task::classification) {
  SynthConfig c;
  c.num_speakers = 4;
  c.holdout_ids = {"spk03"};
  c.clips_per_speaker = 16;
  c.seen_test_clips = 4;
  c.adapt_clips = 20;
  c.test_clips = 10;
  c.vocab = 6;
  c.task = task;
  return c;
}

ModelConfig small_model(Task task = Task::classification, std::size_t vocab = 6) {
  ModelConfig c;
  c.convs = {{4, 3, 2, 1}, {4, 3, 2, 1}, {4, 3, 2, 1}};
  c.udp_layers = {0, 1, 2};
  c.task = task;
  c.vocab = vocab;
  c.backend_channels = {16};
  c.validate();
  return c;
}

TrainConfig quick(std::size_t epochs, std::uint64_t seed = 0) {
  TrainConfig t;
  t.epochs = epochs;
  t.batch_size = 8;
  t.seed = seed;
  return t;
}

struct Fixture {
  DataSplit split;
  RecognizerModel model;
  explicit Fixture(Task task = Task::classification) : split(generate(data_config(task))) {
    model = RecognizerModel::build(small_model(task), 3);
    pretrain(model, split.train, quick(3));
  }
};

const Fixture& shared(Task task = Task::classification) {
  static const Fixture cls(Task::classification);
  static const Fixture seq(Task::ctc_sequence);
  return task == Task::classification ? cls : seq;
}

bool same_rings(const UserPadding& a, const UserPadding& b) {
  for (std::size_t i = 0; i < a.rings.size(); ++i) {
    const auto x = a.rings[i].values.data(), y = b.rings[i].values.data();
    if (!std::equal(x.begin(), x.end(), y.begin())) return false;
  }
  return true;
}

}  // namespace

TEST(Optim, LinearModelSeparatesToyData) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 0.3);
  std::vector<double> xs;
  std::vector<std::size_t> ys;
  for (std::size_t i = 0; i < 60; ++i) {
    const std::size_t y = i % 3;
    xs.push_back((y == 0 ? 2.0 : -1.0) + g(rng));
    xs.push_back((y == 1 ? 2.0 : -1.0) + g(rng));
    ys.push_back(y);
  }
  const Tensor x = Tensor::from_data({60, 2}, xs);
  Tensor w = Tensor::zeros({2, 3}, true), b = Tensor::zeros({3}, true);
  OptimState opt({w, b}, AdamWConfig{0.05, 0.0});
  for (int step = 0; step < 300; ++step) {
    backward(cross_entropy(linear(x, w, b), ys));
    opt.step();
  }
  EXPECT_EQ(opt.step_count(), 300);
  const Tensor logits = linear(x, w, b);
  for (std::size_t i = 0; i < 60; ++i) EXPECT_EQ(class_confidence(logits.data().subspan(i * 3, 3)).first, ys[i]);
}

TEST(Pretrain, LossFallsAndModelEndsFrozen) {
  const auto split = generate(data_config());
  auto model = RecognizerModel::build(small_model(), 3);
  const auto rep = pretrain(model, split.train, quick(4));
  ASSERT_EQ(rep.epoch_loss.size(), 4u);
  EXPECT_LT(rep.epoch_loss.back(), rep.epoch_loss.front());
  EXPECT_FALSE(model.training());
  for (const auto& p : model.parameters()) EXPECT_FALSE(p.requires_grad());
}

TEST(Pretrain, DivergenceReportsWhereItHappened) {
  auto split = generate(data_config());
  split.train[5].frames.mutable_data()[17] = std::numeric_limits<double>::quiet_NaN();
  auto model = RecognizerModel::build(small_model(), 3);
  try {
    pretrain(model, split.train, quick(1));
    FAIL() << "expected divergence";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1"), std::string::npos);
  }
  EXPECT_FALSE(model.training());
}

TEST(Pretrain, SameSeedSameWeights) {
  const auto split = generate(data_config());
  auto a = RecognizerModel::build(small_model(), 3), b = RecognizerModel::build(small_model(), 3);
  pretrain(a, split.train, quick(1, 4));
  pretrain(b, split.train, quick(1, 4));
  EXPECT_EQ(a.checkpoint_bytes(), b.checkpoint_bytes());
}

TEST(AdaptSupervised, ZeroEpochsIsIdentity) {
  const auto& f = shared();
  const auto init = init_padding(f.model, "spk03");
  TrainConfig cfg = default_adapt_config();
  cfg.epochs = 0;
  const auto pad = adapt_supervised(f.model, init, f.split.adapt.at("spk03"), cfg);
  EXPECT_TRUE(same_rings(pad, init));
  const auto& test = f.split.test.at("spk03");
  EXPECT_EQ(evaluate(f.model, test, &pad).accuracy, evaluate(f.model, test).accuracy);
}

TEST(AdaptSupervised, OnlyRingsMoveAndLossFalls) {
  const auto& f = shared();
  const std::string before = f.model.checkpoint_bytes();
  TrainReport rep;
  TrainConfig cfg = default_adapt_config();
  cfg.epochs = 5;
  cfg.patience = 0;
  const auto pad = adapt_supervised(f.model, init_padding(f.model, "spk03"), f.split.adapt.at("spk03"), cfg, &rep);
  EXPECT_EQ(f.model.checkpoint_bytes(), before);
  EXPECT_FALSE(same_rings(pad, init_padding(f.model, "spk03")));
  EXPECT_LT(rep.epoch_loss.back(), rep.epoch_loss.front());
}

TEST(AdaptSupervised, RejectsForeignPaddingAndUnfrozenModel) {
  const auto& f = shared();
  const auto other = f.model.with_udp_layers({0});
  EXPECT_THROW(adapt_supervised(f.model, init_padding(other, "x"), f.split.adapt.at("spk03"), default_adapt_config()),
               CompatibilityError);
  auto live = f.model.clone();
  live.set_trainable(true);
  EXPECT_THROW(adapt_supervised(live, init_padding(live, "x"), f.split.adapt.at("spk03"), default_adapt_config()),
               ContractError);
}

TEST(AdaptSupervised, EarlyStopKeepsBestEpoch) {
  const auto& f = shared();
  TrainReport rep;
  TrainConfig cfg = default_adapt_config();
  cfg.epochs = 40;
  cfg.patience = 2;
  cfg.min_delta = 0.5;  // forces a plateau quickly
  adapt_supervised(f.model, init_padding(f.model, "spk03"), f.split.adapt.at("spk03"), cfg, &rep);
  EXPECT_TRUE(rep.stopped_early);
  EXPECT_LT(rep.epoch_loss.size(), 40u);
  EXPECT_GE(rep.best_epoch, 1u);
}

TEST(SelfTraining, ThresholdOneKeepsNothing) {
  const auto& f = shared();
  SelfTrainingConfig cfg;
  cfg.threshold = 1.0;
  const auto init = init_padding(f.model, "spk03");
  const auto res = adapt_self_training(f.model, init, f.split.adapt.at("spk03"), cfg);
  EXPECT_EQ(res.rounds.front().pseudo_labels, 0u);
  EXPECT_FALSE(res.warning.empty());
  EXPECT_TRUE(same_rings(res.padding, init));
  cfg.threshold = 1.5;
  EXPECT_THROW(adapt_self_training(f.model, init, f.split.adapt.at("spk03"), cfg), ContractError);
}

TEST(SelfTraining, FrozenModelAndPseudoLabelCounts) {
  for (Task task : {Task::classification, Task::ctc_sequence}) {
    const auto& f = shared(task);
    const std::string before = f.model.checkpoint_bytes();
    SelfTrainingConfig cfg;
    cfg.threshold = 0.0;
    cfg.beam_width = 8;
    cfg.train.epochs = 2;
    const auto& pool = f.split.adapt.at("spk03");
    const auto res = adapt_self_training(f.model, init_padding(f.model, "spk03"), pool, cfg);
    EXPECT_EQ(res.rounds.front().pseudo_labels, pool.size());
    EXPECT_EQ(f.model.checkpoint_bytes(), before);
    const auto p = pseudo_label_precision(f.model, nullptr, pool, 0.0, 8);
    EXPECT_EQ(p.precision, res.rounds.front().precision);
  }
}

TEST(Finetune, CopiesAndLeavesOriginal) {
  const auto& f = shared();
  const std::string before = f.model.checkpoint_bytes();
  TrainConfig cfg = default_finetune_config();
  cfg.epochs = 2;
  const auto tuned = finetune_all(f.model, f.split.adapt.at("spk03"), cfg);
  EXPECT_EQ(f.model.checkpoint_bytes(), before);
  EXPECT_NE(tuned.checkpoint_bytes(), before);
  EXPECT_EQ(tuned.fingerprint(), f.model.fingerprint());
}

TEST(Finetune, ParameterReportRatio) {
  const auto rep = parameter_report(preset_config(17, Task::classification, 12));
  EXPECT_LT(rep.ratio(), 0.01);
  EXPECT_GT(rep.udp_params, 0u);
}

TEST(SpeakerInvariant, ZeroWeightFollowsPretrainExactly) {
  const auto split = generate(data_config());
  auto a = RecognizerModel::build(small_model(), 3), b = RecognizerModel::build(small_model(), 3);
  pretrain(a, split.train, quick(2, 9));
  SpeakerAdversary adv;
  train_speaker_invariant(b, split.train, 0.0, quick(2, 9), &adv);
  EXPECT_EQ(a.checkpoint_bytes(), b.checkpoint_bytes());
  EXPECT_EQ(adv.speakers.size(), 3u);
}

TEST(SpeakerInvariant, NeedsSeveralSpeakers) {
  const auto split = generate(data_config());
  std::vector<Clip> one;
  for (const auto& c : split.train)
    if (c.speaker_id == "spk00") one.push_back(c);
  auto m = RecognizerModel::build(small_model(), 3);
  EXPECT_THROW(train_speaker_invariant(m, one, 0.5, quick(1)), ContractError);
}

TEST(SpeakerCode, ZeroCodeIsBaseline) {
  const auto& f = shared();
  const auto adapter = SpeakerCodeAdapter::create(f.model.config().feature_dim(), {8, 4, 2}, 1);
  const Tensor clips = stack_clips(std::span(f.split.test.at("spk03")).subspan(0, 4));
  const Tensor a = f.model.forward_batch(clips), b = adapter.forward_batch(f.model, clips, adapter.zero_code());
  EXPECT_TRUE(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
}

TEST(SpeakerCode, StageThreeOnlyMovesTheCode) {
  const auto& f = shared();
  auto adapter = SpeakerCodeAdapter::create(f.model.config().feature_dim(), {8, 4, 2}, 1);
  train_speaker_code_network(f.model, adapter, f.split.train, quick(1));
  EXPECT_EQ(adapter.codes.size(), 3u);
  std::vector<std::vector<double>> net;
  for (const auto& p : adapter.network_parameters()) net.emplace_back(p.data().begin(), p.data().end());
  TrainConfig cfg = default_adapt_config();
  cfg.epochs = 2;
  const auto code = adapt_speaker_code(f.model, adapter, f.split.adapt.at("spk03"), cfg);
  const auto after = adapter.network_parameters();
  for (std::size_t i = 0; i < after.size(); ++i) {
    EXPECT_TRUE(std::equal(net[i].begin(), net[i].end(), after[i].data().begin()));
  }
  double moved = 0;
  for (const auto& c : code)
    for (double v : c.data()) moved += std::abs(v);
  EXPECT_GT(moved, 0.0);
}

TEST(Harness, FoldsAreDeterministic) {
  const auto& f = shared();
  ExperimentConfig cfg;
  cfg.data = data_config();
  cfg.adapt.epochs = 2;
  const Harness h(f.model, f.split, cfg);
  const auto b = AdaptBudget::fraction(0.25, 11, 2);
  const auto r1 = h.run(Method::udp, b, {"spk03"});
  const auto r2 = h.run(Method::udp, b, {"spk03"}, 2);
  ASSERT_EQ(r1.size(), 2u);
  for (std::size_t i = 0; i < r1.size(); ++i) EXPECT_EQ(r1[i].to_json(), r2[i].to_json());
  EXPECT_EQ(r1[0].run_id, h.run_config(Method::udp, b).run_id());
}

TEST(Harness, SequenceRecordsCarryWer) {
  const auto& f = shared(Task::ctc_sequence);
  ExperimentConfig cfg;
  cfg.data = data_config(Task::ctc_sequence);
  cfg.beam_width = 4;
  const Harness h(f.model, f.split, cfg);
  const auto recs = h.run(Method::baseline, AdaptBudget::everything(), {"spk03"});
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].metric_name, "wer");
  EXPECT_NEAR(recs[1].value, 1.0 - recs[0].value, 1e-12);
}
