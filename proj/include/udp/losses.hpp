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
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "udp/error.hpp"
#include "udp/tensor.hpp"

namespace udp {

/// Token sequence over the vocabulary (indices 0..V-1, never blank). In CTC
/// posteriors token k lives in column k+1; column 0 is the blank.
using LabelSeq = std::vector<std::size_t>;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double logaddexp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

/// Mean cross-entropy of logits[B,V] against class targets.
inline Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> targets) {
  if (logits.rank() != 2 || logits.dim(0) != targets.size() || targets.empty()) {
    throw DimensionError("cross_entropy expects [B,V] logits and B targets");
  }
  const std::size_t bsz = logits.dim(0), v = logits.dim(1);
  std::vector<double> probs(bsz * v);
  double loss = 0.0;
  for (std::size_t b = 0; b < bsz; ++b) {
    if (targets[b] >= v) throw ContractError("cross_entropy target out of range");
    const double* x = logits.data().data() + b * v;
    const double mx = *std::max_element(x, x + v);
    double z = 0.0;
    for (std::size_t c = 0; c < v; ++c) z += std::exp(x[c] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t c = 0; c < v; ++c) probs[b * v + c] = std::exp(x[c] - lse);
    loss += lse - x[targets[b]];
  }
  loss /= static_cast<double>(bsz);
  std::vector<std::size_t> tg(targets.begin(), targets.end());
  return detail::make_result(
      "cross_entropy", {}, {loss}, {&logits},
      [probs = std::move(probs), tg = std::move(tg), bsz, v](
          const detail::TensorImpl& o, std::span<const detail::ImplPtr> in) {
        auto& g = detail::grad_of(*in[0]);
        const double s = o.grad[0] / static_cast<double>(bsz);
        for (std::size_t b = 0; b < bsz; ++b)
          for (std::size_t c = 0; c < v; ++c)
            g[b * v + c] += s * (probs[b * v + c] - (c == tg[b] ? 1.0 : 0.0));
      });
}

/// Single-example form: -log softmax(logits)[target] for logits[V].
inline Tensor cross_entropy(const Tensor& logits, std::size_t target) {
  if (logits.rank() != 1) throw DimensionError("cross_entropy expects a [V] vector");
  const std::size_t t[1] = {target};
  return cross_entropy(reshape(logits, {1, logits.dim(0)}), t);
}

/// Minimum frames a CTC alignment of `target` needs: |target| + adjacent repeats.
inline std::size_t ctc_min_frames(const LabelSeq& target) {
  std::size_t n = target.size();
  for (std::size_t i = 1; i < target.size(); ++i) n += target[i] == target[i - 1];
  return n;
}

namespace detail {

struct CtcLattice {
  std::vector<std::size_t> ext;  // blank-augmented labels (posterior columns)
  std::vector<double> alpha, beta;  // [T,S]; beta excludes frame t itself
  double log_likelihood = kNegInf;
};

inline CtcLattice ctc_lattice(const double* lp, std::size_t t_len, std::size_t cols,
                              const LabelSeq& target) {
  CtcLattice lat;
  lat.ext.push_back(0);
  for (std::size_t tok : target) {
    lat.ext.push_back(tok + 1);
    lat.ext.push_back(0);
  }
  const std::size_t s_len = lat.ext.size();
  const auto& ext = lat.ext;
  const auto skip_ok = [&](std::size_t s) {
    return s >= 2 && ext[s] != 0 && ext[s] != ext[s - 2];
  };
  lat.alpha.assign(t_len * s_len, kNegInf);
  lat.beta.assign(t_len * s_len, kNegInf);
  auto A = [&](std::size_t t, std::size_t s) -> double& { return lat.alpha[t * s_len + s]; };
  auto B = [&](std::size_t t, std::size_t s) -> double& { return lat.beta[t * s_len + s]; };
  A(0, 0) = lp[ext[0]];
  if (s_len > 1) A(0, 1) = lp[ext[1]];
  for (std::size_t t = 1; t < t_len; ++t) {
    for (std::size_t s = 0; s < s_len; ++s) {
      double acc = A(t - 1, s);
      if (s >= 1) acc = logaddexp(acc, A(t - 1, s - 1));
      if (skip_ok(s)) acc = logaddexp(acc, A(t - 1, s - 2));
      if (acc != kNegInf) A(t, s) = acc + lp[t * cols + ext[s]];
    }
  }
  B(t_len - 1, s_len - 1) = 0.0;
  if (s_len > 1) B(t_len - 1, s_len - 2) = 0.0;
  for (std::size_t t = t_len - 1; t-- > 0;) {
    for (std::size_t s = 0; s < s_len; ++s) {
      double acc = kNegInf;
      for (std::size_t d = 0; d <= 2; ++d) {
        const std::size_t s2 = s + d;
        if (s2 >= s_len) break;
        if (d == 2 && !skip_ok(s2)) continue;
        if (B(t + 1, s2) == kNegInf) continue;
        acc = logaddexp(acc, lp[(t + 1) * cols + ext[s2]] + B(t + 1, s2));
      }
      B(t, s) = acc;
    }
  }
  double ll = A(t_len - 1, s_len - 1);
  if (s_len > 1) ll = logaddexp(ll, A(t_len - 1, s_len - 2));
  lat.log_likelihood = ll;
  return lat;
}

}  // namespace detail

/// Negative log-likelihood of `targets[b]` under log-posteriors [B,T,V+1],
/// averaged over the batch; computed with the log-space forward-backward
/// recursion. An infeasible target is a ContractError.
inline Tensor ctc_loss(const Tensor& log_posteriors, std::span<const LabelSeq> targets) {
  if (log_posteriors.rank() != 3 || log_posteriors.dim(0) != targets.size() ||
      targets.empty()) {
    throw DimensionError("ctc_loss expects [B,T,V+1] log-posteriors and B targets");
  }
  const std::size_t bsz = log_posteriors.dim(0), t_len = log_posteriors.dim(1),
                    cols = log_posteriors.dim(2);
  std::vector<double> grad(log_posteriors.numel(), 0.0);
  double loss = 0.0;
  for (std::size_t b = 0; b < bsz; ++b) {
    const LabelSeq& tg = targets[b];
    for (std::size_t tok : tg) {
      if (tok + 1 >= cols) throw ContractError("ctc target token outside vocabulary");
    }
    if (t_len == 0 || ctc_min_frames(tg) > t_len) {
      throw ContractError("ctc target of length " + std::to_string(tg.size()) +
                          " cannot be aligned to " + std::to_string(t_len) + " frames");
    }
    const double* lp = log_posteriors.data().data() + b * t_len * cols;
    const auto lat = detail::ctc_lattice(lp, t_len, cols, tg);
    if (lat.log_likelihood == kNegInf) {
      throw NumericError("ctc likelihood underflowed to zero");
    }
    loss -= lat.log_likelihood;
    const std::size_t s_len = lat.ext.size();
    double* g = grad.data() + b * t_len * cols;
    for (std::size_t t = 0; t < t_len; ++t)
      for (std::size_t s = 0; s < s_len; ++s) {
        const double a = lat.alpha[t * s_len + s], be = lat.beta[t * s_len + s];
        if (a == kNegInf || be == kNegInf) continue;
        g[t * cols + lat.ext[s]] -= std::exp(a + be - lat.log_likelihood);
      }
  }
  const double inv = 1.0 / static_cast<double>(bsz);
  loss *= inv;
  for (double& x : grad) x *= inv;
  return detail::make_result(
      "ctc_loss", {}, {loss}, {&log_posteriors},
      [grad = std::move(grad)](const detail::TensorImpl& o, std::span<const detail::ImplPtr> in) {
        auto& g = detail::grad_of(*in[0]);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[0] * grad[i];
      });
}

/// Single-sequence form over log-posteriors [T,V+1].
inline Tensor ctc_loss(const Tensor& log_posteriors, const LabelSeq& target) {
  if (log_posteriors.rank() != 2) throw DimensionError("ctc_loss expects [T,V+1]");
  const LabelSeq t[1] = {target};
  return ctc_loss(reshape(log_posteriors, {1, log_posteriors.dim(0), log_posteriors.dim(1)}), t);
}

/// Collapses a frame-level path: merge repeats, then drop blanks (column 0).
inline LabelSeq collapse_path(std::span<const std::size_t> path) {
  LabelSeq out;
  std::size_t prev = 0;
  for (std::size_t c : path) {
    if (c != 0 && c != prev) out.push_back(c - 1);
    prev = c;
  }
  return out;
}

inline LabelSeq greedy_decode(const Tensor& log_posteriors) {
  if (log_posteriors.rank() != 2) throw DimensionError("greedy_decode expects [T,V+1]");
  const std::size_t t_len = log_posteriors.dim(0), cols = log_posteriors.dim(1);
  std::vector<std::size_t> path(t_len);
  for (std::size_t t = 0; t < t_len; ++t) {
    const double* row = log_posteriors.data().data() + t * cols;
    path[t] = static_cast<std::size_t>(std::max_element(row, row + cols) - row);
  }
  return collapse_path(path);
}

/// Partial CTC decode: a collapsed prefix and its blank / non-blank ending
/// path masses in the log domain.
struct BeamHypothesis {
  LabelSeq label_prefix;
  double log_prob_blank = kNegInf;
  double log_prob_nonblank = kNegInf;

  double log_mass() const { return logaddexp(log_prob_blank, log_prob_nonblank); }
};

/// CTC prefix beam search. Returns surviving hypotheses sorted by descending
/// total mass (ties broken by prefix order). Width 1 keeps a single
/// mass-tracking path; a width at least the number of reachable prefixes is
/// exact.
inline std::vector<BeamHypothesis> beam_decode(const Tensor& log_posteriors,
                                               std::size_t beam_width) {
  if (beam_width < 1) throw ContractError("beam width must be at least 1");
  if (log_posteriors.rank() != 2) throw DimensionError("beam_decode expects [T,V+1]");
  const std::size_t t_len = log_posteriors.dim(0), cols = log_posteriors.dim(1);
  const double* lp = log_posteriors.data().data();

  const auto by_mass = [](const BeamHypothesis& a, const BeamHypothesis& b) {
    const double ma = a.log_mass(), mb = b.log_mass();
    if (ma != mb) return ma > mb;
    return a.label_prefix < b.label_prefix;
  };

  std::vector<BeamHypothesis> beams{{{}, 0.0, kNegInf}};
  for (std::size_t t = 0; t < t_len; ++t) {
    const double* row = lp + t * cols;
    std::map<LabelSeq, BeamHypothesis> next;
    auto slot = [&next](const LabelSeq& prefix) -> BeamHypothesis& {
      auto [it, inserted] = next.try_emplace(prefix);
      if (inserted) it->second.label_prefix = prefix;
      return it->second;
    };
    for (const auto& h : beams) {
      const double total = h.log_mass();
      auto& same = slot(h.label_prefix);
      same.log_prob_blank = logaddexp(same.log_prob_blank, row[0] + total);
      for (std::size_t c = 1; c < cols; ++c) {
        const std::size_t tok = c - 1;
        LabelSeq ext = h.label_prefix;
        ext.push_back(tok);
        if (!h.label_prefix.empty() && h.label_prefix.back() == tok) {
          auto& e = slot(ext);
          e.log_prob_nonblank = logaddexp(e.log_prob_nonblank, row[c] + h.log_prob_blank);
          auto& s = slot(h.label_prefix);
          s.log_prob_nonblank = logaddexp(s.log_prob_nonblank, row[c] + h.log_prob_nonblank);
        } else {
          auto& e = slot(ext);
          e.log_prob_nonblank = logaddexp(e.log_prob_nonblank, row[c] + total);
        }
      }
    }
    beams.clear();
    for (auto& [prefix, h] : next) {
      if (h.log_mass() != kNegInf) beams.push_back(std::move(h));
    }
    std::sort(beams.begin(), beams.end(), by_mass);
    if (beams.size() > beam_width) beams.resize(beam_width);
  }
  return beams;
}

/// Share of the top hypothesis in the total mass of the surviving beams.
inline double beam_confidence(std::span<const BeamHypothesis> beams) {
  if (beams.empty()) throw ContractError("beam_confidence of an empty beam list");
  double z = kNegInf, top = kNegInf;
  for (const auto& b : beams) {
    const double m = b.log_mass();
    z = logaddexp(z, m);
    top = std::max(top, m);
  }
  return std::exp(top - z);
}

/// Maximum softmax probability and its class for a logits vector.
inline std::pair<std::size_t, double> class_confidence(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double x : logits) z += std::exp(x - mx);
  const auto arg = static_cast<std::size_t>(
      std::max_element(logits.begin(), logits.end()) - logits.begin());
  return {arg, 1.0 / z};
}

/// Levenshtein distance between token sequences.
inline std::size_t edit_distance(const LabelSeq& hyp, const LabelSeq& ref) {
  std::vector<std::size_t> prev(ref.size() + 1), cur(ref.size() + 1);
  for (std::size_t j = 0; j <= ref.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= hyp.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= ref.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1,
                         prev[j - 1] + (hyp[i - 1] == ref[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[ref.size()];
}

}  // namespace udp
