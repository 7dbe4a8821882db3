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

#include <fstream>
#include <random>
#include <unistd.h>

#include "udp/cli.hpp"

using namespace udp;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "udp");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), {out, err});
  return {code, out.str(), err.str()};
}

std::size_t line_count(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::path(::testing::TempDir()) / ("udp_cli_" + std::to_string(::getpid()));
    fs::remove_all(root_);
    const auto g = run({"gen-data", "--out", data(), "--speakers", "4", "--holdout", "spk03", "--clips", "8",
                        "--adapt-clips", "40", "--test-clips", "6"});
    ASSERT_EQ(g.code, 0) << g.err;
    const auto p = run({"pretrain", "--data", data(), "--out", model(), "--epochs", "1"});
    ASSERT_EQ(p.code, 0) << p.err;
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static std::string data() { return (root_ / "data").string(); }
  static std::string model() { return (root_ / "model.udpm").string(); }
  static std::string path(const std::string& name) { return (root_ / name).string(); }

  static fs::path root_;
};

fs::path Cli::root_;

TEST(CliUsage, MissingSubcommandIsUsageError) { EXPECT_EQ(run({}).code, cli::kExitUsage); }

TEST(CliUsage, UnknownFlagIsUsageError) {
  EXPECT_EQ(run({"gen-data", "--out", "x", "--bogus"}).code, cli::kExitUsage);
}

TEST(CliUsage, HelpSucceeds) {
  const auto r = run({"--help"});
  EXPECT_EQ(r.code, cli::kExitOk);
  EXPECT_NE(r.out.find("enroll"), std::string::npos);
}

TEST(CliUsage, ThresholdOutOfRangeIsUsageError) {
  EXPECT_EQ(run({"adapt-unsup", "--model", "m", "--data", "d", "--speaker", "s", "--threshold", "1.5"}).code,
            cli::kExitUsage);
}

TEST(CliUsage, MinutesAndFractionAreExclusive) {
  EXPECT_EQ(run({"enroll", "--model", "m", "--data", "d", "--speaker", "s", "--minutes", "1", "--fraction", "0.1"})
                .code,
            cli::kExitUsage);
}

TEST(CliUsage, MissingFilesAreDataErrors) {
  const auto r = run({"pretrain", "--data", "/nonexistent/udp", "--out", "/tmp/x.udpm"});
  EXPECT_EQ(r.code, cli::kExitError);
  EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST_F(Cli, GenDataWritesManifest) {
  EXPECT_TRUE(fs::exists(fs::path(data()) / "manifest.jsonl"));
  EXPECT_TRUE(fs::exists(fs::path(data()) / "dataset.json"));
  EXPECT_TRUE(fs::exists(model()));
}

TEST_F(Cli, EnrollEmitsOneRecordPerFold) {
  const auto r = run({"enroll", "--model", model(), "--data", data(), "--speaker", "spk03", "--minutes", "1",
                      "--folds", "5", "--epochs", "1", "--registry", path("reg")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto recs = [&] {
    std::vector<MetricRecord> v;
    std::istringstream is(r.out);
    for (std::string line; std::getline(is, line);)
      if (!line.empty()) v.push_back(MetricRecord::from_json(nlohmann::json::parse(line)));
    return v;
  }();
  ASSERT_EQ(recs.size(), 5u);
  std::set<std::size_t> folds;
  for (const auto& rec : recs) {
    EXPECT_EQ(rec.method, "udp");
    EXPECT_EQ(rec.speaker, "spk03");
    EXPECT_EQ(rec.metric_name, "accuracy");
    EXPECT_EQ(rec.run_id, recs.front().run_id);
    folds.insert(rec.fold);
  }
  EXPECT_EQ(folds.size(), 5u);
  EXPECT_TRUE(fs::exists(fs::path(path("reg")) / "spk03.udpp"));
}

TEST_F(Cli, EnrollBudgetTooLargeFails) {
  const auto r = run({"enroll", "--model", model(), "--data", data(), "--speaker", "spk03", "--minutes", "10"});
  EXPECT_EQ(r.code, cli::kExitError);
}

TEST_F(Cli, EnrollUnknownSpeakerFails) {
  const auto r = run({"enroll", "--model", model(), "--data", data(), "--speaker", "spk00", "--minutes", "1"});
  EXPECT_EQ(r.code, cli::kExitError);
}

TEST_F(Cli, RecognizeUnknownSpeakerFallsBackToBaseline) {
  const auto clip = (fs::path(data()) / "clips" / "spk03_test_0001.udtf").string();
  const auto r = run({"recognize", "--model", model(), "--speaker", "nobody", "--registry", path("empty_reg"),
                      "--input", clip});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("warning"), std::string::npos);
  EXPECT_EQ(line_count(r.out), 1u);
}

TEST_F(Cli, RecognizeWithStoredPadding) {
  ASSERT_EQ(run({"enroll", "--model", model(), "--data", data(), "--speaker", "spk03", "--minutes", "1",
                 "--epochs", "1", "--registry", path("reg2"), "--out", path("enroll.jsonl")})
                .code,
            0);
  const auto r = run({"recognize", "--model", model(), "--speaker", "spk03", "--registry", path("reg2"), "--data",
                      data()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.err.find("warning"), std::string::npos);
  EXPECT_EQ(line_count(r.out), 6u);
  EXPECT_NE(r.err.find("accuracy"), std::string::npos);
  EXPECT_EQ(read_jsonl(path("enroll.jsonl")).size(), 1u);
}

TEST_F(Cli, RecognizeSingleInputFile) {
  const auto clip = (fs::path(data()) / "clips" / "spk03_test_0000.udtf").string();
  const auto r = run({"recognize", "--model", model(), "--speaker", "spk03", "--input", clip});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(line_count(r.out), 1u);
  EXPECT_EQ(r.out.rfind(clip, 0), 0u);
}

std::vector<MetricRecord> parse_records(const std::string& text) {
  std::vector<MetricRecord> v;
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);)
    if (!line.empty()) v.push_back(MetricRecord::from_json(nlohmann::json::parse(line)));
  return v;
}

double pseudo_label_count(const std::vector<MetricRecord>& recs) {
  for (const auto& r : recs)
    if (r.metric_name == "pseudo_labels") return r.value;
  return -1.0;
}

TEST_F(Cli, AdaptUnsupDefaultsToTestClips) {
  const auto r = run({"adapt-unsup", "--model", model(), "--data", data(), "--speaker", "spk03", "--threshold",
                      "0.0"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto recs = parse_records(r.out);
  for (const auto& rec : recs) {
    EXPECT_EQ(rec.method, "self_training");
    EXPECT_EQ(rec.budget, "test");
  }
  EXPECT_EQ(pseudo_label_count(recs), 6.0);
}

TEST_F(Cli, AdaptUnsupOnAdaptationPool) {
  const auto r = run({"adapt-unsup", "--model", model(), "--data", data(), "--speaker", "spk03", "--threshold",
                      "0.0", "--pool", "adapt", "--fraction", "0.5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(pseudo_label_count(parse_records(r.out)), 20.0);
  EXPECT_EQ(run({"adapt-unsup", "--model", model(), "--data", data(), "--speaker", "spk03", "--minutes", "1"}).code,
            cli::kExitError);
}

TEST_F(Cli, EvalPrintsTable) {
  const auto r = run({"eval", "--model", model(), "--data", data(), "--methods", "baseline,udp", "--minutes", "1",
                      "--folds", "2", "--out", path("eval.jsonl")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(line_count(r.out), 3u);
  EXPECT_EQ(read_jsonl(path("eval.jsonl")).size(), 3u);
}

TEST_F(Cli, EvalRejectsUnknownMethod) {
  EXPECT_EQ(run({"eval", "--model", model(), "--data", data(), "--methods", "magic"}).code, cli::kExitError);
}

TEST(CliCluster, GroupsPlantedIdentities) {
  const fs::path dir = fs::path(::testing::TempDir()) / ("udp_cluster_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 0.05);
  std::vector<cluster::VideoEmbedding> emb;
  for (std::size_t id = 0; id < 3; ++id) {
    for (std::size_t k = 0; k < 4; ++k) {
      std::vector<double> v(8, 0.0);
      for (auto& x : v) x = n(rng);
      v[id] += 1.0;
      emb.push_back(cluster::make_embedding("v" + std::to_string(id) + "_" + std::to_string(k), v));
    }
  }
  cluster::save_embeddings(dir / "in", emb);
  const auto r = run({"cluster", "--data", (dir / "in").string(), "--out", (dir / "out").string(), "--shuffle", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("3 after merge"), std::string::npos) << r.out;
  EXPECT_TRUE(fs::exists(dir / "out" / "partition.tsv"));
  EXPECT_TRUE(fs::exists(dir / "out" / "report.json"));
  EXPECT_EQ(run({"cluster", "--data", (dir / "in").string(), "--out", (dir / "o2").string(), "--t4", "0.7"}).code,
            cli::kExitError);
  fs::remove_all(dir);
}

}  // namespace
