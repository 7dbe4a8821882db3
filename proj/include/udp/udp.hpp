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

#include "udp/error.hpp"
#include "udp/tensor.hpp"
#include "udp/nn.hpp"
#include "udp/losses.hpp"
#include "udp/model.hpp"
#include "udp/user_padding.hpp"
#include "udp/padding.hpp"
#include "udp/optim.hpp"
#include "udp/synthdata.hpp"
#include "udp/adapt.hpp"
#include "udp/cluster.hpp"
#include "udp/metrics.hpp"
#include "udp/experiment.hpp"
