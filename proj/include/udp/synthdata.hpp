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
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "udp/error.hpp"
#include "udp/losses.hpp"
#include "udp/model.hpp"
#include "udp/serialize.hpp"
#include "udp/tensor.hpp"

namespace udp {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0) {
  return splitmix64(splitmix64(seed ^ fnv1a64(tag)) + index);
}

struct SynthConfig {
  std::size_t num_speakers = 20;
  std::vector<std::string> holdout_ids{"spk08", "spk09"};
  std::size_t vocab = 12;
  std::size_t frames = 8;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t clips_per_speaker = 80;   // per training speaker
  std::size_t seen_test_clips = 30;     // extra held-in clips per training speaker
  std::size_t adapt_clips = 200;        // per held-out speaker
  std::size_t test_clips = 200;         // per held-out speaker
  double adapt_class_fraction = 0.75;   // classes available in adaptation sets
  Task task = Task::classification;
  std::size_t min_tokens = 2;
  std::size_t max_tokens = 3;
  std::size_t token_frames = 2;  // frames each token stays on screen
  std::size_t clips_per_minute = 20;
  std::uint64_t seed = 7;

  /// Defaults for `t`: sequences get 12 frames with 3 frames per token.
  static SynthConfig for_task(Task t) {
    SynthConfig c;
    c.task = t;
    if (t == Task::ctc_sequence) {
      c.frames = 12;
      c.token_frames = 3;
    }
    return c;
  }

  static std::string speaker_name(std::size_t i) {
    return (i < 10 ? "spk0" : "spk") + std::to_string(i);
  }

  std::vector<std::string> speaker_ids() const {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < num_speakers; ++i) ids.push_back(speaker_name(i));
    return ids;
  }

  bool is_holdout(const std::string& id) const {
    return std::find(holdout_ids.begin(), holdout_ids.end(), id) != holdout_ids.end();
  }

  nlohmann::json to_json() const {
    return {{"num_speakers", num_speakers}, {"holdout_ids", holdout_ids},
            {"vocab", vocab},               {"frames", frames},
            {"height", height},             {"width", width},
            {"clips_per_speaker", clips_per_speaker},
            {"seen_test_clips", seen_test_clips},
            {"adapt_clips", adapt_clips},   {"test_clips", test_clips},
            {"adapt_class_fraction", adapt_class_fraction},
            {"task", to_string(task)},      {"min_tokens", min_tokens},
            {"max_tokens", max_tokens},     {"token_frames", token_frames},
            {"clips_per_minute", clips_per_minute},
            {"seed", seed}};
  }

  static SynthConfig from_json(const nlohmann::json& j) {
    SynthConfig c;
    c.num_speakers = j.at("num_speakers");
    c.holdout_ids = j.at("holdout_ids").get<std::vector<std::string>>();
    c.vocab = j.at("vocab");
    c.frames = j.at("frames");
    c.height = j.at("height");
    c.width = j.at("width");
    c.clips_per_speaker = j.at("clips_per_speaker");
    c.seen_test_clips = j.at("seen_test_clips");
    c.adapt_clips = j.at("adapt_clips");
    c.test_clips = j.at("test_clips");
    c.adapt_class_fraction = j.at("adapt_class_fraction");
    c.task = task_from_string(j.at("task"));
    c.min_tokens = j.at("min_tokens");
    c.max_tokens = j.at("max_tokens");
    c.token_frames = j.at("token_frames");
    c.clips_per_minute = j.at("clips_per_minute");
    c.seed = j.at("seed");
    return c;
  }
};

/// Per-speaker rendering style: pose of the glyph canvas, a smooth texture
/// bias field, contrast, sensor noise and a habitual drift.
struct SpeakerStyle {
  std::string speaker_id;
  double scale = 1.0;
  double rotation = 0.0;  // radians
  double tx = 0.0, ty = 0.0;
  double field_amp = 0.0, field_fx = 0.0, field_fy = 0.0, field_phase = 0.0;
  double grad_x = 0.0, grad_y = 0.0;
  double foreground = 1.0, background = 0.0;
  double noise = 0.05;
  double drift_x = 0.0, drift_y = 0.0;

  static SpeakerStyle derive(std::uint64_t global_seed, const std::string& speaker_id) {
    std::mt19937_64 rng(mix_seed(global_seed, "style:" + speaker_id));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto range = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
    SpeakerStyle s;
    s.speaker_id = speaker_id;
    s.scale = range(0.85, 1.2);
    s.rotation = range(-0.45, 0.45);
    s.tx = range(-3.0, 3.0);
    s.ty = range(-3.0, 3.0);
    s.field_amp = range(0.15, 0.35);
    s.field_fx = range(-2.0, 2.0);
    s.field_fy = range(-2.0, 2.0);
    s.field_phase = range(0.0, 2.0 * std::numbers::pi);
    s.grad_x = range(-0.3, 0.3);
    s.grad_y = range(-0.3, 0.3);
    s.foreground = range(0.55, 1.0);
    s.background = range(0.0, 0.3);
    s.noise = range(0.03, 0.1);
    s.drift_x = range(-0.6, 0.6);
    s.drift_y = range(-0.6, 0.6);
    return s;
  }
};

struct Clip {
  Tensor frames;          // [T,1,H,W], values in [0,1]
  std::size_t label = 0;  // classification target
  LabelSeq tokens;        // sequence target
  std::string speaker_id;
  std::string split;
  std::size_t index = 0;
};

/// Train speakers' clips plus, per held-out speaker, disjoint adaptation and
/// test sets.
struct DataSplit {
  SynthConfig config;
  std::vector<Clip> train;
  std::vector<Clip> seen_test;
  std::map<std::string, std::vector<Clip>> adapt;
  std::map<std::string, std::vector<Clip>> test;
};

inline constexpr std::size_t kGlyphGrid = 5;
inline constexpr double kGlyphCell = 2.4;  // pixels per glyph cell at scale 1

/// Deterministic 5x5 binary glyphs, pairwise Hamming distance >= 6.
inline std::vector<std::array<std::uint8_t, kGlyphGrid * kGlyphGrid>> make_glyphs(
    std::size_t vocab, std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, "glyphs"));
  std::bernoulli_distribution on(0.5);
  std::vector<std::array<std::uint8_t, kGlyphGrid * kGlyphGrid>> glyphs;
  std::size_t attempts = 0;
  while (glyphs.size() < vocab) {
    if (++attempts > 100000) throw ConfigError("cannot draw enough distinct glyphs");
    std::array<std::uint8_t, kGlyphGrid * kGlyphGrid> g{};
    std::size_t count = 0;
    for (auto& c : g) count += (c = on(rng) ? 1 : 0);
    if (count < 9 || count > 16) continue;
    bool distinct = true;
    for (const auto& h : glyphs) {
      std::size_t d = 0;
      for (std::size_t i = 0; i < g.size(); ++i) d += g[i] != h[i];
      if (d < 6) {
        distinct = false;
        break;
      }
    }
    if (distinct) glyphs.push_back(g);
  }
  return glyphs;
}

namespace detail {

inline double glyph_sample(const std::array<std::uint8_t, kGlyphGrid * kGlyphGrid>& g,
                           double gx, double gy) {
  // bilinear over cell centres, zero outside the grid
  const double fx = gx - 0.5, fy = gy - 0.5;
  const auto x0 = static_cast<long>(std::floor(fx));
  const auto y0 = static_cast<long>(std::floor(fy));
  const double ax = fx - static_cast<double>(x0), ay = fy - static_cast<double>(y0);
  auto at = [&](long x, long y) -> double {
    if (x < 0 || y < 0 || x >= static_cast<long>(kGlyphGrid) || y >= static_cast<long>(kGlyphGrid))
      return 0.0;
    return g[static_cast<std::size_t>(y) * kGlyphGrid + static_cast<std::size_t>(x)];
  };
  return (1 - ay) * ((1 - ax) * at(x0, y0) + ax * at(x0 + 1, y0)) +
         ay * ((1 - ax) * at(x0, y0 + 1) + ax * at(x0 + 1, y0 + 1));
}

}  // namespace detail

/// Renders clips for one configuration.
class ClipRenderer {
 public:
  explicit ClipRenderer(const SynthConfig& cfg) : cfg_(cfg), glyphs_(make_glyphs(cfg.vocab, cfg.seed)) {
    // worst-case glyph footprint: max scale, rotated diagonal
    const double extent = kGlyphGrid * kGlyphCell * 1.2 * std::numbers::sqrt2;
    if (extent > static_cast<double>(std::min(cfg.height, cfg.width))) {
      throw ConfigError("glyphs do not fit the " + std::to_string(cfg.height) + "x" +
                        std::to_string(cfg.width) + " canvas");
    }
    if (cfg.vocab < 2) throw ConfigError("vocab must have at least two glyphs");
    if (cfg.task == Task::ctc_sequence &&
        (cfg.min_tokens < 1 || cfg.max_tokens < cfg.min_tokens || cfg.token_frames < 1 ||
         (cfg.token_frames + 1) * cfg.max_tokens - 1 > cfg.frames)) {
      throw ConfigError("token counts do not fit the clip length");
    }
  }

  const SynthConfig& config() const { return cfg_; }

  /// `classes` restricts the label alphabet (empty = all classes).
  Clip render(const SpeakerStyle& style, std::size_t index, const std::string& split,
              const std::vector<std::size_t>& classes) const {
    std::mt19937_64 rng(mix_seed(cfg_.seed, "clip:" + style.speaker_id + ":" + split, index));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto pick = [&]() {
      if (classes.empty()) return static_cast<std::size_t>(u(rng) * static_cast<double>(cfg_.vocab)) % cfg_.vocab;
      return classes[static_cast<std::size_t>(u(rng) * static_cast<double>(classes.size())) % classes.size()];
    };
    Clip clip;
    clip.speaker_id = style.speaker_id;
    clip.split = split;
    clip.index = index;
    const std::size_t t_len = cfg_.frames;
    // which glyph (if any) is shown on each frame
    std::vector<long> shown(t_len, -1);
    if (cfg_.task == Task::classification) {
      clip.label = pick();
      std::fill(shown.begin(), shown.end(), static_cast<long>(clip.label));
    } else {
      const std::size_t span = cfg_.max_tokens - cfg_.min_tokens + 1;
      const std::size_t n = cfg_.min_tokens + static_cast<std::size_t>(u(rng) * static_cast<double>(span)) % span;
      for (std::size_t i = 0; i < n; ++i) clip.tokens.push_back(pick());
      // every token holds token_frames frames; spare frames become blank
      // gaps, with a forced gap between repeated tokens
      const std::size_t hold = cfg_.token_frames;
      std::vector<std::size_t> gaps(n + 1, 0);
      std::size_t spare = t_len - hold * n;
      for (std::size_t i = 1; i < n; ++i) {
        if (clip.tokens[i] == clip.tokens[i - 1] && spare > 0) {
          gaps[i] = 1;
          --spare;
        }
      }
      while (spare-- > 0) gaps[static_cast<std::size_t>(u(rng) * static_cast<double>(n + 1)) % (n + 1)]++;
      std::size_t t = 0;
      for (std::size_t i = 0; i < n; ++i) {
        t += gaps[i];
        std::fill_n(shown.begin() + static_cast<long>(t), hold, static_cast<long>(clip.tokens[i]));
        t += hold;
      }
    }
    const double jx = 1.5 * (2 * u(rng) - 1), jy = 1.5 * (2 * u(rng) - 1);
    const double vx = style.drift_x + 0.3 * (2 * u(rng) - 1);
    const double vy = style.drift_y + 0.3 * (2 * u(rng) - 1);
    const double cx = 0.5 * static_cast<double>(cfg_.width) + style.tx + jx;
    const double cy = 0.5 * static_cast<double>(cfg_.height) + style.ty + jy;
    const double cr = std::cos(style.rotation), sr = std::sin(style.rotation);
    const double cell = kGlyphCell * style.scale;
    const std::size_t h = cfg_.height, w = cfg_.width;
    std::vector<double> data(t_len * h * w);
    for (std::size_t t = 0; t < t_len; ++t) {
      const double dt = static_cast<double>(t) - 0.5 * static_cast<double>(t_len - 1);
      const double ox = cx + vx * dt, oy = cy + vy * dt;
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
          const double px = static_cast<double>(x) + 0.5 - ox;
          const double py = static_cast<double>(y) + 0.5 - oy;
          double ink = 0.0;
          if (shown[t] >= 0) {
            // inverse pose: canvas -> glyph grid coordinates
            const double gx = (cr * px + sr * py) / cell + 0.5 * kGlyphGrid;
            const double gy = (-sr * px + cr * py) / cell + 0.5 * kGlyphGrid;
            ink = detail::glyph_sample(glyphs_[static_cast<std::size_t>(shown[t])], gx, gy);
          }
          const double nx = static_cast<double>(x) / static_cast<double>(w) - 0.5;
          const double ny = static_cast<double>(y) / static_cast<double>(h) - 0.5;
          double v = style.background + (style.foreground - style.background) * ink;
          v += style.field_amp *
               std::sin(2 * std::numbers::pi * (style.field_fx * nx + style.field_fy * ny) +
                        style.field_phase);
          v += style.grad_x * nx + style.grad_y * ny;
          v += style.noise * gauss(rng);
          data[(t * h + y) * w + x] = std::clamp(v, 0.0, 1.0);
        }
    }
    clip.frames = Tensor::from_data({t_len, 1, h, w}, std::move(data));
    return clip;
  }

 private:
  SynthConfig cfg_;
  std::vector<std::array<std::uint8_t, kGlyphGrid * kGlyphGrid>> glyphs_;
};

/// Classes a held-out speaker's adaptation set draws from.
inline std::vector<std::size_t> adaptation_classes(const SynthConfig& cfg, const std::string& speaker) {
  std::vector<std::size_t> classes(cfg.vocab);
  for (std::size_t i = 0; i < cfg.vocab; ++i) classes[i] = i;
  std::mt19937_64 rng(mix_seed(cfg.seed, "adapt-classes:" + speaker));
  std::shuffle(classes.begin(), classes.end(), rng);
  const auto keep = static_cast<std::size_t>(
      std::ceil(cfg.adapt_class_fraction * static_cast<double>(cfg.vocab)));
  classes.resize(std::clamp<std::size_t>(keep, 1, cfg.vocab));
  std::sort(classes.begin(), classes.end());
  return classes;
}

inline DataSplit generate(const SynthConfig& cfg) {
  if (cfg.num_speakers < 2) throw ConfigError("need at least two speakers");
  const auto ids = cfg.speaker_ids();
  for (const auto& h : cfg.holdout_ids) {
    if (std::find(ids.begin(), ids.end(), h) == ids.end()) {
      throw ConfigError("holdout speaker '" + h + "' is not a generated speaker");
    }
  }
  if (cfg.holdout_ids.size() >= cfg.num_speakers) throw ConfigError("no training speakers left");
  const ClipRenderer renderer(cfg);
  DataSplit split;
  split.config = cfg;
  for (const auto& id : ids) {
    const auto style = SpeakerStyle::derive(cfg.seed, id);
    if (cfg.is_holdout(id)) {
      const auto classes = adaptation_classes(cfg, id);
      auto& a = split.adapt[id];
      for (std::size_t i = 0; i < cfg.adapt_clips; ++i) a.push_back(renderer.render(style, i, "adapt", classes));
      auto& t = split.test[id];
      for (std::size_t i = 0; i < cfg.test_clips; ++i) t.push_back(renderer.render(style, i, "test", {}));
    } else {
      for (std::size_t i = 0; i < cfg.clips_per_speaker; ++i)
        split.train.push_back(renderer.render(style, i, "train", {}));
      for (std::size_t i = 0; i < cfg.seen_test_clips; ++i)
        split.seen_test.push_back(renderer.render(style, i, "seen_test", {}));
    }
  }
  return split;
}

/// How much adaptation data one fold may use.
struct AdaptBudget {
  enum class Mode { minutes, fraction, all };
  Mode mode = Mode::all;
  double amount = 0.0;  // minutes or fraction
  std::uint64_t seed = 0;
  std::size_t folds = 1;

  static AdaptBudget minutes(double k, std::uint64_t seed = 0, std::size_t folds = 1) {
    return {Mode::minutes, k, seed, folds};
  }
  static AdaptBudget fraction(double r, std::uint64_t seed = 0, std::size_t folds = 1) {
    return {Mode::fraction, r, seed, folds};
  }
  static AdaptBudget everything(std::uint64_t seed = 0, std::size_t folds = 1) {
    return {Mode::all, 1.0, seed, folds};
  }

  std::string label() const {
    std::ostringstream os;
    if (mode == Mode::minutes) os << amount << "min";
    else if (mode == Mode::fraction) os << amount * 100 << "%";
    else os << "all";
    return os.str();
  }

  /// Clip count for a pool of `available` clips.
  std::size_t clip_count(std::size_t available, std::size_t clips_per_minute) const {
    double n = 0;
    switch (mode) {
      case Mode::minutes: n = amount * static_cast<double>(clips_per_minute); break;
      case Mode::fraction: n = amount * static_cast<double>(available); break;
      case Mode::all: n = static_cast<double>(available); break;
    }
    const auto count = static_cast<std::size_t>(std::llround(n));
    if (count == 0 || count > available || amount < 0) {
      throw ContractError("budget " + label() + " needs " + std::to_string(count) +
                          " clips, speaker has " + std::to_string(available));
    }
    return count;
  }
};

/// Deterministic per-fold subset of a pool. Folds are disjoint whenever
/// count * folds fits the pool; otherwise each fold draws its own subset.
inline std::vector<std::size_t> budget_indices(std::size_t available, std::size_t clips_per_minute,
                                               const AdaptBudget& budget, std::size_t fold) {
  if (fold >= std::max<std::size_t>(1, budget.folds)) throw ContractError("fold index out of range");
  const std::size_t count = budget.clip_count(available, clips_per_minute);
  std::vector<std::size_t> perm(available);
  for (std::size_t i = 0; i < available; ++i) perm[i] = i;
  std::vector<std::size_t> out;
  if (count * budget.folds <= available) {
    std::mt19937_64 rng(mix_seed(budget.seed, "folds"));
    std::shuffle(perm.begin(), perm.end(), rng);
    out.assign(perm.begin() + static_cast<std::ptrdiff_t>(fold * count),
               perm.begin() + static_cast<std::ptrdiff_t>((fold + 1) * count));
  } else {
    std::mt19937_64 rng(mix_seed(budget.seed, "fold", fold));
    std::shuffle(perm.begin(), perm.end(), rng);
    out.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(count));
  }
  return out;
}

inline std::vector<Clip> budget_subset(const DataSplit& split, const std::string& speaker,
                                       const AdaptBudget& budget, std::size_t fold) {
  const auto it = split.adapt.find(speaker);
  if (it == split.adapt.end()) throw ContractError("'" + speaker + "' has no adaptation set");
  std::vector<Clip> out;
  for (std::size_t i : budget_indices(it->second.size(), split.config.clips_per_minute, budget, fold)) {
    out.push_back(it->second[i]);
  }
  return out;
}

namespace detail {

inline nlohmann::json clip_label_json(const Clip& c, Task task) {
  if (task == Task::classification) return c.label;
  return c.tokens;
}

inline std::string clip_file_name(const Clip& c) {
  std::ostringstream os;
  os << "clips/" << c.speaker_id << "_" << c.split << "_" << std::setw(4) << std::setfill('0') << c.index
     << ".udtf";
  return os.str();
}

}  // namespace detail

/// Writes every clip as a UDTF file plus `manifest.jsonl` and `dataset.json`.
inline std::filesystem::path export_split(const DataSplit& split, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "clips");
  std::ofstream manifest(dir / "manifest.jsonl", std::ios::trunc);
  if (!manifest) throw FormatError("cannot write manifest in " + dir.string());
  auto emit = [&](const Clip& c) {
    const std::string rel = detail::clip_file_name(c);
    save_udtf(dir / rel, c.frames);
    nlohmann::json line{{"path", rel},
                        {"label", detail::clip_label_json(c, split.config.task)},
                        {"speaker_id", c.speaker_id},
                        {"split", c.split},
                        {"index", c.index}};
    manifest << line.dump() << '\n';
  };
  for (const auto& c : split.train) emit(c);
  for (const auto& c : split.seen_test) emit(c);
  for (const auto& [id, clips] : split.adapt)
    for (const auto& c : clips) emit(c);
  for (const auto& [id, clips] : split.test)
    for (const auto& c : clips) emit(c);
  write_file(dir / "dataset.json", split.config.to_json().dump(2));
  return dir;
}

inline DataSplit load_split(const std::filesystem::path& dir) {
  DataSplit split;
  try {
    split.config = SynthConfig::from_json(nlohmann::json::parse(read_file(dir / "dataset.json")));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad dataset.json: ") + e.what());
  }
  std::ifstream manifest(dir / "manifest.jsonl");
  if (!manifest) throw FormatError("missing manifest.jsonl in " + dir.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(manifest, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw FormatError("manifest line " + std::to_string(lineno) + " is not JSON");
    }
    Clip c;
    const std::string rel = j.at("path");
    const auto path = dir / rel;
    if (!std::filesystem::exists(path)) {
      throw FormatError("manifest line " + std::to_string(lineno) + " references missing " + rel);
    }
    c.frames = load_udtf(path);
    c.speaker_id = j.at("speaker_id");
    c.split = j.at("split");
    c.index = j.value("index", std::size_t{0});
    if (split.config.task == Task::classification) c.label = j.at("label");
    else c.tokens = j.at("label").get<LabelSeq>();
    if (c.split == "train") split.train.push_back(std::move(c));
    else if (c.split == "seen_test") split.seen_test.push_back(std::move(c));
    else if (c.split == "adapt") split.adapt[c.speaker_id].push_back(std::move(c));
    else if (c.split == "test") split.test[c.speaker_id].push_back(std::move(c));
    else throw FormatError("unknown split '" + c.split + "' in manifest");
  }
  return split;
}

/// Stacks clips of equal length into [B,T,C,H,W].
inline Tensor stack_clips(std::span<const Clip> clips) {
  if (clips.empty()) throw ContractError("stack_clips of an empty batch");
  const Shape& s = clips.front().frames.shape();
  std::vector<double> data;
  data.reserve(clips.size() * clips.front().frames.numel());
  for (const auto& c : clips) {
    if (c.frames.shape() != s) throw ShapeError("clips in a batch differ in shape");
    data.insert(data.end(), c.frames.data().begin(), c.frames.data().end());
  }
  Shape shape{clips.size()};
  shape.insert(shape.end(), s.begin(), s.end());
  return Tensor::from_data(std::move(shape), std::move(data));
}

}  // namespace udp
