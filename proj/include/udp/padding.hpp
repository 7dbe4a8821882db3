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

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include "udp/error.hpp"
#include "udp/model.hpp"
#include "udp/serialize.hpp"
#include "udp/user_padding.hpp"

namespace udp {

/// Zero rings for every UDP layer of `model`, tracked for gradients. Zero is
/// the padding the model was pretrained with, so the initial padding leaves
/// the model's outputs unchanged.
inline UserPadding init_padding(const RecognizerModel& model, std::string speaker_id) {
  UserPadding p;
  p.speaker_id = std::move(speaker_id);
  p.config_fingerprint = model.fingerprint();
  for (std::size_t l : model.config().udp_layers) {
    p.rings.push_back({l, Tensor::zeros(model.frontend()[l].conv.ring_shape(), true)});
  }
  return p;
}

inline constexpr std::string_view kPaddingMagic = "UDPP";
inline constexpr std::uint8_t kPaddingVersion = 0x01;

/// `.udpp` layout: "UDPP", version u8, speaker_id (u16 length + bytes),
/// fingerprint u64, then per ring: layer_index u16 + UDTF block.
inline std::string padding_bytes(const UserPadding& p) {
  if (p.speaker_id.size() > UINT16_MAX) throw ContractError("speaker id too long");
  ByteWriter w;
  w.bytes(kPaddingMagic);
  w.u8(kPaddingVersion);
  w.u16(static_cast<std::uint16_t>(p.speaker_id.size()));
  w.bytes(p.speaker_id);
  w.u64(p.config_fingerprint);
  for (const auto& r : p.rings) {
    if (r.layer_index > UINT16_MAX) throw ContractError("layer index exceeds u16");
    w.u16(static_cast<std::uint16_t>(r.layer_index));
    write_udtf(w, r.values);
  }
  return w.take();
}

inline UserPadding padding_from_bytes(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.bytes(4) != kPaddingMagic) throw FormatError("not a padding file");
  if (r.u8() != kPaddingVersion) throw FormatError("unsupported padding file version");
  UserPadding p;
  const std::uint16_t len = r.u16();
  p.speaker_id = std::string(r.bytes(len));
  p.config_fingerprint = r.u64();
  while (!r.eof()) {
    const std::size_t layer = r.u16();
    p.rings.push_back({layer, read_udtf(r)});
  }
  return p;
}

inline bool valid_speaker_id(std::string_view id) {
  if (id.empty() || id == "." || id == "..") return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
    if (!ok) return false;
  }
  return true;
}

/// Writes `<dir>/<speaker_id>.udpp` atomically and returns the path.
inline std::filesystem::path save_padding(const UserPadding& p,
                                          const std::filesystem::path& dir) {
  if (!valid_speaker_id(p.speaker_id)) {
    throw ContractError("speaker id '" + p.speaker_id + "' is not a safe file name");
  }
  std::filesystem::create_directories(dir);
  const auto path = dir / (p.speaker_id + ".udpp");
  write_file_atomic(path, padding_bytes(p));
  return path;
}

inline UserPadding load_padding(const std::filesystem::path& path) {
  return padding_from_bytes(read_file(path));
}

/// Loads a padding and binds it to `model`, rejecting foreign configurations.
inline UserPadding load_padding_for(const RecognizerModel& model,
                                    const std::filesystem::path& path) {
  UserPadding p = load_padding(path);
  model.check_padding(p);
  return p;
}

/// Flat directory of per-speaker `.udpp` files for one model.
class PaddingRegistry {
 public:
  PaddingRegistry(std::filesystem::path dir, std::uint64_t fingerprint)
      : dir_(std::move(dir)), fingerprint_(fingerprint) {}

  const std::filesystem::path& directory() const { return dir_; }

  std::filesystem::path path_for(const std::string& speaker_id) const {
    return dir_ / (speaker_id + ".udpp");
  }

  void put(const UserPadding& p) {
    if (p.config_fingerprint != fingerprint_) {
      throw CompatibilityError("registry holds paddings for another model");
    }
    std::unique_lock lock(mu_);
    save_padding(p, dir_);
  }

  /// Returns the speaker's padding, or nullopt when none is stored or the
  /// stored one belongs to another model configuration.
  std::optional<UserPadding> get(const std::string& speaker_id) const {
    if (!valid_speaker_id(speaker_id)) return std::nullopt;
    std::shared_lock lock(mu_);
    const auto path = path_for(speaker_id);
    if (!std::filesystem::exists(path)) return std::nullopt;
    UserPadding p = load_padding(path);
    if (p.config_fingerprint != fingerprint_ || p.speaker_id != speaker_id) return std::nullopt;
    return p;
  }

  bool remove(const std::string& speaker_id) {
    if (!valid_speaker_id(speaker_id)) return false;
    std::unique_lock lock(mu_);
    return std::filesystem::remove(path_for(speaker_id));
  }

  std::vector<std::string> speakers() const {
    std::vector<std::string> ids;
    if (!std::filesystem::exists(dir_)) return ids;
    for (const auto& e : std::filesystem::directory_iterator(dir_)) {
      if (e.path().extension() == ".udpp") ids.push_back(e.path().stem().string());
    }
    std::sort(ids.begin(), ids.end());
    return ids;
  }

  /// Total bytes of all stored paddings.
  std::uintmax_t stored_bytes() const {
    std::uintmax_t n = 0;
    for (const auto& id : speakers()) n += std::filesystem::file_size(path_for(id));
    return n;
  }

 private:
  std::filesystem::path dir_;
  std::uint64_t fingerprint_;
  mutable std::shared_mutex mu_;
};

}  // namespace udp
