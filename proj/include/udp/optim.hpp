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

#include <cmath>
#include <vector>

#include "udp/error.hpp"
#include "udp/tensor.hpp"

namespace udp {

struct AdamWConfig {
  double lr = 1e-3;
  double weight_decay = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// AdamW (decoupled weight decay) over a fixed parameter list.
class OptimState {
 public:
  OptimState(std::vector<Tensor> params, AdamWConfig cfg) : params_(std::move(params)), cfg_(cfg) {
    for (const auto& p : params_) {
      m_.emplace_back(p.numel(), 0.0);
      v_.emplace_back(p.numel(), 0.0);
    }
  }

  const AdamWConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }
  long step_count() const { return step_; }
  const std::vector<Tensor>& params() const { return params_; }

  /// One update from the accumulated gradients; parameters without a
  /// gradient are left alone. Gradients are cleared afterwards.
  void step() {
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Tensor& p = params_[i];
      if (!p.has_grad()) continue;
      auto g = p.grad();
      auto w = p.mutable_data();
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t j = 0; j < w.size(); ++j) {
        m[j] = cfg_.beta1 * m[j] + (1 - cfg_.beta1) * g[j];
        v[j] = cfg_.beta2 * v[j] + (1 - cfg_.beta2) * g[j] * g[j];
        const double mhat = m[j] / bc1, vhat = v[j] / bc2;
        w[j] -= cfg_.lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * w[j]);
      }
      if (p.dtype() == DType::f32) {
        for (double& x : w) x = static_cast<double>(static_cast<float>(x));
      }
      p.zero_grad();
    }
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

 private:
  std::vector<Tensor> params_;
  AdamWConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  long step_ = 0;
};

}  // namespace udp
