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

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "udp/error.hpp"
#include "udp/tensor.hpp"

namespace udp {

static_assert(std::endian::native == std::endian::little,
              "byte-level persistence assumes a little-endian host");

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Append-only little-endian byte sink.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { raw(&v, sizeof v); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void f32(float v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void bytes(std::string_view s) { buf_.append(s); }
  void raw(const void* p, std::size_t n) {
    buf_.append(static_cast<const char*>(p), n);
  }
  const std::string& str() const { return buf_; }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

/// Bounds-checked little-endian reader; every overrun is a FormatError.
class ByteReader {
 public:
  explicit ByteReader(std::string_view buf) : buf_(buf) {}

  std::uint8_t u8() { return pod<std::uint8_t>(); }
  std::uint16_t u16() { return pod<std::uint16_t>(); }
  std::uint32_t u32() { return pod<std::uint32_t>(); }
  std::uint64_t u64() { return pod<std::uint64_t>(); }
  float f32() { return pod<float>(); }
  double f64() { return pod<double>(); }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool eof() const { return pos_ == buf_.size(); }
  std::size_t remaining() const { return buf_.size() - pos_; }

 private:
  template <typename T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) throw FormatError("truncated input");
  }

  std::string_view buf_;
  std::size_t pos_ = 0;
};

inline constexpr std::string_view kUdtfMagic = "UDTF";
inline constexpr std::uint8_t kUdtfVersion = 0x01;

/// UDTF block: magic, version, dtype code, rank, rank x u32 dims, payload.
inline void write_udtf(ByteWriter& w, const Tensor& t) {
  if (t.rank() > 255) throw ShapeError("UDTF rank exceeds 255");
  w.bytes(kUdtfMagic);
  w.u8(kUdtfVersion);
  w.u8(static_cast<std::uint8_t>(t.dtype()));
  w.u8(static_cast<std::uint8_t>(t.rank()));
  for (std::size_t d : t.shape()) {
    if (d > UINT32_MAX) throw ShapeError("UDTF extent exceeds u32");
    w.u32(static_cast<std::uint32_t>(d));
  }
  if (t.dtype() == DType::f64) {
    w.raw(t.data().data(), t.numel() * sizeof(double));
  } else {
    for (double v : t.data()) w.f32(static_cast<float>(v));
  }
}

inline Tensor read_udtf(ByteReader& r) {
  if (r.bytes(4) != kUdtfMagic) throw FormatError("bad UDTF magic");
  if (const auto v = r.u8(); v != kUdtfVersion) {
    throw FormatError("unsupported UDTF version " + std::to_string(v));
  }
  const auto code = r.u8();
  if (code != 0x01 && code != 0x02) {
    throw FormatError("unknown UDTF dtype code " + std::to_string(code));
  }
  const auto dtype = static_cast<DType>(code);
  const auto rank = r.u8();
  Shape shape(rank);
  for (auto& d : shape) d = r.u32();
  const std::size_t n = numel(shape);
  const std::size_t width = dtype == DType::f64 ? 8 : 4;
  if (n != 0 && r.remaining() / width < n) throw FormatError("truncated UDTF payload");
  std::vector<double> data(n);
  if (dtype == DType::f64) {
    auto raw = r.bytes(n * 8);
    std::memcpy(data.data(), raw.data(), n * 8);
  } else {
    for (auto& v : data) v = r.f32();
  }
  return Tensor::from_data(std::move(shape), std::move(data), false, dtype);
}

inline std::string udtf_bytes(const Tensor& t) {
  ByteWriter w;
  write_udtf(w, t);
  return w.take();
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("short write to " + path.string());
}

// Write-temp-then-rename so readers never observe a partial file.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  write_file(tmp, bytes);
  std::filesystem::rename(tmp, path);
}

inline void save_udtf(const std::filesystem::path& path, const Tensor& t) {
  write_file(path, udtf_bytes(t));
}

inline Tensor load_udtf(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  ByteReader r(bytes);
  Tensor t = read_udtf(r);
  if (!r.eof()) throw FormatError("trailing bytes after UDTF block in " + path.string());
  return t;
}

}  // namespace udp
