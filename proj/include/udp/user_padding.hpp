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

#include <cstdint>
#include <string>
#include <vector>

#include "udp/tensor.hpp"

namespace udp {

/// One learnable border ring, bound to a front-end conv layer.
struct Ring {
  std::size_t layer_index = 0;
  Tensor values;  // [C, ring_length(H, W, p)] of the layer's declared input
};

/// Per-speaker padding parameters for one model configuration.
struct UserPadding {
  std::string speaker_id;
  std::uint64_t config_fingerprint = 0;
  std::vector<Ring> rings;

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& r : rings) n += r.values.numel();
    return n;
  }

  std::vector<Tensor> tensors() const {
    std::vector<Tensor> out;
    for (const auto& r : rings) out.push_back(r.values);
    return out;
  }

  UserPadding clone() const {
    UserPadding p{speaker_id, config_fingerprint, {}};
    for (const auto& r : rings) {
      Tensor v = r.values.clone();
      v.set_requires_grad(r.values.requires_grad());
      p.rings.push_back({r.layer_index, std::move(v)});
    }
    return p;
  }
};

}  // namespace udp
