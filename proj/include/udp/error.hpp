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

#include <stdexcept>
#include <string>

namespace udp {

// Every library failure derives from Error so callers (the CLI in particular)
// can separate contract/data failures from usage mistakes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error { using Error::Error; };
class ShapeError : public Error { using Error::Error; };
class DomainError : public Error { using Error::Error; };
class NumericError : public Error { using Error::Error; };
class ContractError : public Error { using Error::Error; };
class CompatibilityError : public Error { using Error::Error; };
class FormatError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class IngestError : public Error { using Error::Error; };

}  // namespace udp
