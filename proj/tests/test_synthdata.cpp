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

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "udp/synthdata.hpp"

using namespace udp;
namespace fs = std::filesystem;

namespace {

SynthConfig small_config(Task task = Task::classification) {
  SynthConfig c;
  c.num_speakers = 4;
  c.holdout_ids = {"spk03"};
  c.clips_per_speaker = 12;
  c.seen_test_clips = 4;
  c.adapt_clips = 40;
  c.test_clips = 10;
  c.task = task;
  return c;
}

bool same_clips(const std::vector<Clip>& a, const std::vector<Clip>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto x = a[i].frames.data(), y = b[i].frames.data();
    if (a[i].label != b[i].label || a[i].tokens != b[i].tokens || a[i].speaker_id != b[i].speaker_id ||
        a[i].frames.shape() != b[i].frames.shape() || !std::equal(x.begin(), x.end(), y.begin()))
      return false;
  }
  return true;
}

struct TempDir {
  fs::path path = fs::temp_directory_path() / ("udp_synth_" + std::to_string(std::random_device{}()));
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST(Synth, DeterministicFromSeed) {
  const auto a = generate(small_config()), b = generate(small_config());
  EXPECT_TRUE(same_clips(a.train, b.train));
  EXPECT_TRUE(same_clips(a.adapt.at("spk03"), b.adapt.at("spk03")));
  auto other = small_config();
  other.seed = 8;
  EXPECT_FALSE(same_clips(a.train, generate(other).train));
}

TEST(Synth, ClipsRespectShapeAndRange) {
  for (Task task : {Task::classification, Task::ctc_sequence}) {
    const auto s = generate(small_config(task));
    for (const auto& c : s.train) {
      EXPECT_EQ(c.frames.shape(), (Shape{8, 1, 32, 32}));
      for (double v : c.frames.data()) ASSERT_TRUE(v >= 0.0 && v <= 1.0);
      if (task == Task::ctc_sequence) {
        EXPECT_GE(c.tokens.size(), 2u);
        EXPECT_LE(c.tokens.size(), 3u);
        EXPECT_LE(ctc_min_frames(c.tokens), 8u);
      } else {
        EXPECT_LT(c.label, 12u);
      }
    }
  }
}

TEST(Synth, SpeakersRenderTheSameClassDifferently) {
  SynthConfig cfg = small_config();
  const ClipRenderer r(cfg);
  const auto a = r.render(SpeakerStyle::derive(cfg.seed, "spk00"), 0, "train", {4});
  const auto b = r.render(SpeakerStyle::derive(cfg.seed, "spk01"), 0, "train", {4});
  EXPECT_EQ(a.label, b.label);
  EXPECT_FALSE(std::equal(a.frames.data().begin(), a.frames.data().end(), b.frames.data().begin()));
}

TEST(Synth, SplitInvariants) {
  const auto s = generate(small_config());
  for (const auto& c : s.train) EXPECT_NE(c.speaker_id, "spk03");
  for (const auto& c : s.seen_test) EXPECT_NE(c.speaker_id, "spk03");
  const auto& adapt = s.adapt.at("spk03");
  const auto& test = s.test.at("spk03");
  for (const auto& a : adapt)
    for (const auto& t : test) EXPECT_FALSE(std::equal(a.frames.data().begin(), a.frames.data().end(), t.frames.data().begin()));
  std::set<std::size_t> adapt_classes;
  for (const auto& c : adapt) adapt_classes.insert(c.label);
  EXPECT_LT(adapt_classes.size(), 12u);               // overlap with test below 100%
  EXPECT_GE(adapt_classes.size(), 12u * 6 / 10);      // covers at least 60% of the vocabulary
}

TEST(Synth, ConfigErrors) {
  auto bad = small_config();
  bad.holdout_ids = {"nobody"};
  EXPECT_THROW(generate(bad), ConfigError);
  auto tiny = small_config();
  tiny.height = tiny.width = 12;
  EXPECT_THROW(generate(tiny), ConfigError);
  auto too_long = small_config(Task::ctc_sequence);
  too_long.max_tokens = 4;
  EXPECT_THROW(generate(too_long), ConfigError);
  auto long_hold = small_config(Task::ctc_sequence);
  long_hold.token_frames = 3;  // 3 tokens x 3 frames + 2 gaps > 8 frames
  EXPECT_THROW(generate(long_hold), ConfigError);
  long_hold.token_frames = 0;
  EXPECT_THROW(generate(long_hold), ConfigError);
}

TEST(Synth, StyleCarriesSpeakerIdentity) {
  // nearest-centroid speaker classification on raw mean frames
  auto cfg = small_config();
  cfg.holdout_ids = {"spk03"};
  const auto s = generate(cfg);
  std::map<std::string, std::vector<double>> centroid;
  std::map<std::string, std::size_t> count;
  auto mean_frame = [](const Clip& c) {
    std::vector<double> m(32 * 32, 0.0);
    for (std::size_t i = 0; i < c.frames.numel(); ++i) m[i % m.size()] += c.frames.data()[i] / 8.0;
    return m;
  };
  for (const auto& c : s.train) {
    auto m = mean_frame(c);
    auto& acc = centroid[c.speaker_id];
    acc.resize(m.size(), 0.0);
    for (std::size_t i = 0; i < m.size(); ++i) acc[i] += m[i];
    ++count[c.speaker_id];
  }
  std::size_t ok = 0;
  for (const auto& c : s.seen_test) {
    const auto m = mean_frame(c);
    std::string best;
    double best_d = 1e300;
    for (const auto& [id, acc] : centroid) {
      double d = 0;
      for (std::size_t i = 0; i < m.size(); ++i) {
        const double e = m[i] - acc[i] / static_cast<double>(count[id]);
        d += e * e;
      }
      if (d < best_d) {
        best_d = d;
        best = id;
      }
    }
    ok += best == c.speaker_id;
  }
  EXPECT_GT(static_cast<double>(ok) / static_cast<double>(s.seen_test.size()), 1.0 / 3.0);
}

TEST(Budget, ClipCounts) {
  EXPECT_EQ(AdaptBudget::minutes(1).clip_count(200, 20), 20u);
  EXPECT_EQ(AdaptBudget::minutes(5).clip_count(200, 20), 100u);
  EXPECT_EQ(AdaptBudget::fraction(0.1).clip_count(200, 20), 20u);
  EXPECT_EQ(AdaptBudget::everything().clip_count(200, 20), 200u);
  EXPECT_THROW(AdaptBudget::minutes(11).clip_count(200, 20), ContractError);
  EXPECT_THROW(AdaptBudget::fraction(0.0).clip_count(200, 20), ContractError);
}

TEST(Budget, FoldsDisjointWhenFeasible) {
  const auto b = AdaptBudget::minutes(1, 3, 5);
  std::set<std::size_t> seen;
  for (std::size_t f = 0; f < 5; ++f) {
    const auto idx = budget_indices(200, 20, b, f);
    EXPECT_EQ(idx.size(), 20u);
    for (std::size_t i : idx) EXPECT_TRUE(seen.insert(i).second);
  }
  EXPECT_EQ(budget_indices(200, 20, b, 2), budget_indices(200, 20, b, 2));
  EXPECT_THROW(budget_indices(200, 20, b, 5), ContractError);
  // 5 x 100 clips cannot be disjoint; each fold still gets its own subset
  const auto big = AdaptBudget::minutes(5, 3, 5);
  EXPECT_NE(budget_indices(200, 20, big, 0), budget_indices(200, 20, big, 1));
}

TEST(Export, RoundTripAndManifest) {
  const auto s = generate(small_config(Task::ctc_sequence));
  TempDir dir;
  export_split(s, dir.path);
  std::ifstream manifest(dir.path / "manifest.jsonl");
  std::size_t lines = 0;
  for (std::string l; std::getline(manifest, l);) lines += !l.empty();
  EXPECT_EQ(lines, s.train.size() + s.seen_test.size() + s.adapt.at("spk03").size() + s.test.at("spk03").size());
  const auto back = load_split(dir.path);
  EXPECT_TRUE(same_clips(back.train, s.train));
  EXPECT_TRUE(same_clips(back.seen_test, s.seen_test));
  EXPECT_TRUE(same_clips(back.adapt.at("spk03"), s.adapt.at("spk03")));
  EXPECT_TRUE(same_clips(back.test.at("spk03"), s.test.at("spk03")));
  EXPECT_EQ(back.config.to_json(), s.config.to_json());
}

TEST(Export, MissingClipFileRejected) {
  const auto s = generate(small_config());
  TempDir dir;
  export_split(s, dir.path);
  fs::remove(dir.path / "clips" / "spk00_train_0003.udtf");
  EXPECT_THROW(load_split(dir.path), FormatError);
}
