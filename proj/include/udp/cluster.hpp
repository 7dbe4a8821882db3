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
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "udp/error.hpp"
#include "udp/serialize.hpp"

namespace udp::cluster {

struct VideoEmbedding {
  std::string video_id;
  std::vector<double> vector;  // unit norm
};

/// `members` are row indices into the embedding list the cluster was built from.
struct Cluster {
  int cluster_id = 0;
  std::vector<double> centroid;
  std::vector<std::size_t> members;
};

struct Thresholds {
  double t1 = 0.41;  // assignment
  double t2 = 0.63;  // verification split
  double t3 = 0.63;  // identification merge
  double t4 = 0.59;  // boundary candidates
  double m = 0.9;    // centroid momentum

  void validate() const {
    for (double t : {t1, t2, t3, t4}) {
      if (!(t >= -1.0 && t <= 1.0)) throw ConfigError("similarity thresholds must lie in [-1, 1]");
    }
    if (!(m >= 0.0 && m <= 1.0)) throw ConfigError("momentum must lie in [0, 1]");
  }
};

struct CandidatePair {
  int a = 0;  // a < b
  int b = 0;
  double similarity = 0.0;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// Normalizes `v` in place; a zero vector is an ingest error.
inline void normalize(std::vector<double>& v, std::string_view what) {
  const double n = norm(v);
  if (!(n > 0.0) || !std::isfinite(n)) throw IngestError(std::string(what) + " is a zero or non-finite vector");
  for (double& x : v) x /= n;
}

inline VideoEmbedding make_embedding(std::string id, std::vector<double> v) {
  normalize(v, "embedding '" + id + "'");
  return {std::move(id), std::move(v)};
}

inline void check_unit(const VideoEmbedding& e) {
  const double n = norm(e.vector);
  if (!(n > 0.0)) throw IngestError("embedding '" + e.video_id + "' is a zero vector");
  if (std::abs(n - 1.0) > 1e-6) throw IngestError("embedding '" + e.video_id + "' is not unit norm");
}

namespace detail {

inline std::vector<double> member_mean(std::span<const VideoEmbedding> emb, std::span<const std::size_t> members) {
  std::vector<double> c(emb[members.front()].vector.size(), 0.0);
  for (std::size_t i : members)
    for (std::size_t d = 0; d < c.size(); ++d) c[d] += emb[i].vector[d];
  normalize(c, "cluster mean");
  return c;
}

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }
  /// Groups of indices, ordered by their smallest element.
  std::vector<std::vector<std::size_t>> groups() {
    std::map<std::size_t, std::vector<std::size_t>> g;
    for (std::size_t i = 0; i < parent_.size(); ++i) g[find(i)].push_back(i);
    std::vector<std::vector<std::size_t>> out;
    for (auto& [root, v] : g) out.push_back(std::move(v));
    return out;
  }

 private:
  std::vector<std::size_t> parent_;
};

/// Sorts members, orders clusters by smallest member and renumbers them.
inline void canonicalize(std::vector<Cluster>& cs) {
  for (auto& c : cs) std::sort(c.members.begin(), c.members.end());
  std::sort(cs.begin(), cs.end(), [](const Cluster& a, const Cluster& b) { return a.members.front() < b.members.front(); });
  for (std::size_t i = 0; i < cs.size(); ++i) cs[i].cluster_id = static_cast<int>(i);
}

}  // namespace detail

/// Sequential assignment: each embedding joins its most similar cluster if
/// that similarity reaches t1, otherwise it opens a new one. The receiving
/// centroid moves to norm(m*C + (1-m)*f).
inline std::vector<Cluster> assign(std::span<const VideoEmbedding> emb, double t1, double m) {
  std::vector<Cluster> cs;
  for (std::size_t i = 0; i < emb.size(); ++i) {
    check_unit(emb[i]);
    const auto& f = emb[i].vector;
    if (!cs.empty() && f.size() != cs.front().centroid.size()) {
      throw IngestError("embedding '" + emb[i].video_id + "' has dimension " + std::to_string(f.size()));
    }
    std::size_t best = 0;
    double best_sim = -2.0;
    for (std::size_t k = 0; k < cs.size(); ++k) {
      const double s = dot(cs[k].centroid, f);
      if (s > best_sim) {
        best_sim = s;
        best = k;
      }
    }
    if (cs.empty() || best_sim < t1) {
      cs.push_back({static_cast<int>(cs.size()), f, {i}});
      continue;
    }
    auto& c = cs[best];
    c.members.push_back(i);
    std::vector<double> next(f.size());
    for (std::size_t d = 0; d < f.size(); ++d) next[d] = m * c.centroid[d] + (1.0 - m) * f[d];
    const double n = norm(next);
    if (n > 0.0) {
      for (double& x : next) x /= n;
      c.centroid = std::move(next);
    }
  }
  return cs;
}

/// Splits a cluster into connected components of its members under the
/// relation sim >= t2. A connected cluster is returned unchanged.
inline std::vector<Cluster> verify_split(const Cluster& c, std::span<const VideoEmbedding> emb, double t2) {
  const std::size_t n = c.members.size();
  detail::UnionFind uf(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (dot(emb[c.members[i]].vector, emb[c.members[j]].vector) >= t2) uf.unite(i, j);
  auto groups = uf.groups();
  if (groups.size() <= 1) return {c};
  std::vector<Cluster> out;
  for (const auto& g : groups) {
    Cluster part;
    part.cluster_id = c.cluster_id;
    for (std::size_t i : g) part.members.push_back(c.members[i]);
    part.centroid = detail::member_mean(emb, part.members);
    out.push_back(std::move(part));
  }
  return out;
}

/// Merges clusters whose member-mean features reach t3, as connected
/// components, repeated until no pair qualifies. Without any merge the input
/// is returned as is.
inline std::vector<Cluster> identify_merge(std::vector<Cluster> cs, std::span<const VideoEmbedding> emb, double t3,
                                           std::size_t* passes = nullptr) {
  std::size_t pass = 0;
  for (;;) {
    std::vector<std::vector<double>> feat;
    for (const auto& c : cs) feat.push_back(detail::member_mean(emb, c.members));
    detail::UnionFind uf(cs.size());
    bool linked = false;
    for (std::size_t i = 0; i < cs.size(); ++i)
      for (std::size_t j = i + 1; j < cs.size(); ++j)
        if (dot(feat[i], feat[j]) >= t3) {
          uf.unite(i, j);
          linked = true;
        }
    if (!linked) break;
    ++pass;
    std::vector<Cluster> merged;
    for (const auto& g : uf.groups()) {
      if (g.size() == 1) {
        merged.push_back(std::move(cs[g.front()]));
        continue;
      }
      Cluster m;
      m.cluster_id = cs[g.front()].cluster_id;
      for (std::size_t i : g) m.members.insert(m.members.end(), cs[i].members.begin(), cs[i].members.end());
      std::sort(m.members.begin(), m.members.end());
      m.centroid = detail::member_mean(emb, m.members);
      merged.push_back(std::move(m));
    }
    cs = std::move(merged);
  }
  if (passes) *passes = pass;
  return cs;
}

/// Cluster pairs with t4 <= sim(centroids) < t3, most similar first.
inline std::vector<CandidatePair> boundary_candidates(std::span<const Cluster> cs, double t4, double t3) {
  if (!(t4 < t3)) throw ContractError("boundary band needs t4 < t3");
  std::vector<CandidatePair> out;
  for (std::size_t i = 0; i < cs.size(); ++i)
    for (std::size_t j = i + 1; j < cs.size(); ++j) {
      const double s = dot(cs[i].centroid, cs[j].centroid);
      if (s >= t4 && s < t3) {
        out.push_back({std::min(cs[i].cluster_id, cs[j].cluster_id), std::max(cs[i].cluster_id, cs[j].cluster_id), s});
      }
    }
  std::sort(out.begin(), out.end(), [](const CandidatePair& x, const CandidatePair& y) {
    if (x.similarity != y.similarity) return x.similarity > y.similarity;
    return std::pair{x.a, x.b} < std::pair{y.a, y.b};
  });
  return out;
}

/// Disjoint, non-empty member sets whose union is every row in [0, n).
inline void check_partition(std::span<const Cluster> cs, std::size_t n) {
  std::vector<bool> seen(n, false);
  std::size_t total = 0;
  for (const auto& c : cs) {
    if (c.members.empty()) throw ContractError("empty cluster " + std::to_string(c.cluster_id));
    for (std::size_t i : c.members) {
      if (i >= n || seen[i]) throw ContractError("clusters are not a partition of the input");
      seen[i] = true;
      ++total;
    }
  }
  if (total != n) throw ContractError("clusters do not cover the input");
}

struct PipelineResult {
  std::vector<Cluster> clusters;  // final partition, renumbered
  std::vector<CandidatePair> candidates;
  std::size_t after_assign = 0;
  std::size_t after_split = 0;
  std::size_t after_merge = 0;
  std::size_t merge_passes = 0;

  nlohmann::json report(const Thresholds& th, std::size_t rows) const {
    return {{"rows", rows},
            {"thresholds", {{"t1", th.t1}, {"t2", th.t2}, {"t3", th.t3}, {"t4", th.t4}, {"m", th.m}}},
            {"stages",
             {{"assign", after_assign}, {"verify_split", after_split}, {"identify_merge", after_merge}}},
            {"merge_passes", merge_passes},
            {"candidates", candidates.size()}};
  }
};

/// assign -> verify_split -> identify_merge -> boundary_candidates.
inline PipelineResult run_pipeline(std::span<const VideoEmbedding> emb, const Thresholds& th) {
  th.validate();
  if (!(th.t4 < th.t3)) throw ContractError("boundary band needs t4 < t3");
  PipelineResult r;
  if (emb.empty()) return r;
  auto cs = assign(emb, th.t1, th.m);
  r.after_assign = cs.size();
  check_partition(cs, emb.size());
  std::vector<Cluster> split;
  for (const auto& c : cs) {
    auto parts = verify_split(c, emb, th.t2);
    split.insert(split.end(), std::make_move_iterator(parts.begin()), std::make_move_iterator(parts.end()));
  }
  r.after_split = split.size();
  check_partition(split, emb.size());
  auto merged = identify_merge(std::move(split), emb, th.t3, &r.merge_passes);
  r.after_merge = merged.size();
  check_partition(merged, emb.size());
  detail::canonicalize(merged);
  r.candidates = boundary_candidates(merged, th.t4, th.t3);
  r.clusters = std::move(merged);
  return r;
}

/// Deterministic reordering of the input, exposing order sensitivity of assign().
inline std::vector<VideoEmbedding> shuffled(std::vector<VideoEmbedding> emb, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::shuffle(emb.begin(), emb.end(), rng);
  return emb;
}

// ---------------------------------------------------------------------------
// Directory I/O: index.tsv + embeddings.f32 + meta.json in, partition.tsv +
// candidates.tsv + report.json out.
// ---------------------------------------------------------------------------

inline std::vector<VideoEmbedding> load_embeddings(const std::filesystem::path& dir) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(dir / "meta.json"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad meta.json: ") + e.what());
  }
  const std::size_t rows = meta.at("rows"), dim = meta.at("dim");
  if (dim == 0) throw FormatError("meta.json declares dim 0");
  const std::string raw = read_file(dir / "embeddings.f32");
  if (raw.size() != rows * dim * sizeof(float)) {
    throw FormatError("embeddings.f32 holds " + std::to_string(raw.size()) + " bytes, expected " +
                      std::to_string(rows * dim * sizeof(float)));
  }
  std::vector<std::string> ids(rows);
  std::vector<bool> have(rows, false);
  std::istringstream index(read_file(dir / "index.tsv"));
  std::string line;
  while (std::getline(index, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError("index.tsv line without a tab: " + line);
    std::size_t row = 0;
    try {
      row = std::stoul(line.substr(0, tab));
    } catch (const std::exception&) {
      throw FormatError("index.tsv row is not a number: " + line);
    }
    if (row >= rows || have[row]) throw FormatError("index.tsv row out of range or repeated: " + line);
    ids[row] = line.substr(tab + 1);
    have[row] = true;
  }
  if (std::find(have.begin(), have.end(), false) != have.end()) throw FormatError("index.tsv misses rows");
  ByteReader r(raw);
  std::vector<VideoEmbedding> out;
  out.reserve(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<double> v(dim);
    for (auto& x : v) x = r.f32();
    out.push_back(make_embedding(ids[i], std::move(v)));
  }
  return out;
}

inline void save_embeddings(const std::filesystem::path& dir, std::span<const VideoEmbedding> emb) {
  std::filesystem::create_directories(dir);
  const std::size_t dim = emb.empty() ? 0 : emb.front().vector.size();
  ByteWriter w;
  std::ostringstream index;
  for (std::size_t i = 0; i < emb.size(); ++i) {
    index << i << '\t' << emb[i].video_id << '\n';
    for (double x : emb[i].vector) w.f32(static_cast<float>(x));
  }
  write_file(dir / "embeddings.f32", w.take());
  write_file(dir / "index.tsv", index.str());
  write_file(dir / "meta.json", nlohmann::json{{"rows", emb.size()}, {"dim", dim}}.dump());
}

inline void write_result(const std::filesystem::path& dir, std::span<const VideoEmbedding> emb,
                         const PipelineResult& r, const Thresholds& th) {
  std::filesystem::create_directories(dir);
  std::ostringstream part, cand;
  std::vector<int> of(emb.size(), -1);
  for (const auto& c : r.clusters)
    for (std::size_t i : c.members) of[i] = c.cluster_id;
  for (std::size_t i = 0; i < emb.size(); ++i) part << emb[i].video_id << '\t' << of[i] << '\n';
  cand.precision(6);
  for (const auto& p : r.candidates) cand << p.a << '\t' << p.b << '\t' << std::fixed << p.similarity << '\n';
  write_file(dir / "partition.tsv", part.str());
  write_file(dir / "candidates.tsv", cand.str());
  write_file(dir / "report.json", r.report(th, emb.size()).dump(2));
}

}  // namespace udp::cluster
