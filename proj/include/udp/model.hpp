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
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "udp/error.hpp"
#include "udp/nn.hpp"
#include "udp/serialize.hpp"
#include "udp/tensor.hpp"
#include "udp/user_padding.hpp"

namespace udp {

using json = nlohmann::json;

enum class Task { classification, ctc_sequence };

inline std::string to_string(Task t) {
  return t == Task::classification ? "classification" : "ctc_sequence";
}

inline Task task_from_string(const std::string& s) {
  if (s == "classification") return Task::classification;
  if (s == "ctc_sequence" || s == "sequence") return Task::ctc_sequence;
  throw ConfigError("unknown task '" + s + "'");
}

struct ConvSpec {
  std::size_t out_channels = 8;
  std::size_t kernel = 3;
  std::size_t stride = 1;
  std::size_t pad = 1;
};

/// Architecture description. Its canonical JSON (sorted keys, no whitespace)
/// is hashed into the fingerprint that ties checkpoints and paddings together.
struct ModelConfig {
  std::size_t channels = 1;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t max_frames = 8;
  std::vector<ConvSpec> convs;
  std::vector<std::size_t> udp_layers;
  Task task = Task::classification;
  std::size_t vocab = 12;
  std::vector<std::size_t> backend_channels{512, 256};
  std::size_t backend_kernel = 3;
  std::size_t preset = 0;

  json to_json() const {
    json convs_j = json::array();
    for (const auto& c : convs) {
      convs_j.push_back({{"out", c.out_channels}, {"kernel", c.kernel},
                         {"stride", c.stride}, {"pad", c.pad}});
    }
    return {{"input", {{"channels", channels}, {"height", height}, {"width", width},
                       {"max_frames", max_frames}}},
            {"convs", convs_j},
            {"udp_layers", udp_layers},
            {"task", to_string(task)},
            {"vocab", vocab},
            {"backend", {{"channels", backend_channels}, {"kernel", backend_kernel}}},
            {"preset", preset}};
  }

  static ModelConfig from_json(const json& j) {
    try {
      ModelConfig c;
      const auto& in = j.at("input");
      c.channels = in.at("channels");
      c.height = in.at("height");
      c.width = in.at("width");
      c.max_frames = in.at("max_frames");
      for (const auto& cj : j.at("convs")) {
        c.convs.push_back({cj.at("out"), cj.at("kernel"), cj.at("stride"), cj.at("pad")});
      }
      c.udp_layers = j.at("udp_layers").get<std::vector<std::size_t>>();
      c.task = task_from_string(j.at("task"));
      c.vocab = j.at("vocab");
      c.backend_channels = j.at("backend").at("channels").get<std::vector<std::size_t>>();
      c.backend_kernel = j.at("backend").at("kernel");
      c.preset = j.value("preset", std::size_t{0});
      c.validate();
      return c;
    } catch (const json::exception& e) {
      throw FormatError(std::string("malformed model config: ") + e.what());
    }
  }

  std::string canonical() const { return to_json().dump(); }
  std::uint64_t fingerprint() const { return fnv1a64(canonical()); }

  /// Output classes of the head: vocab, or vocab+1 with blank at index 0.
  std::size_t head_size() const { return task == Task::classification ? vocab : vocab + 1; }

  /// Declared (C,H,W) input of every conv layer plus the final map.
  std::vector<std::array<std::size_t, 3>> layer_inputs() const {
    std::vector<std::array<std::size_t, 3>> dims;
    std::array<std::size_t, 3> cur{channels, height, width};
    for (const auto& c : convs) {
      dims.push_back(cur);
      const std::size_t hp = cur[1] + 2 * c.pad, wp = cur[2] + 2 * c.pad;
      if (hp < c.kernel || wp < c.kernel) throw ConfigError("conv kernel exceeds padded map");
      cur = {c.out_channels, (hp - c.kernel) / c.stride + 1, (wp - c.kernel) / c.stride + 1};
    }
    dims.push_back(cur);
    return dims;
  }

  std::size_t feature_dim() const {
    const auto last = layer_inputs().back();
    return last[0] * last[1] * last[2];
  }

  /// Closed-form ring size: sum over UDP layers of C*((H+2p)(W+2p) - HW).
  std::size_t ring_parameter_count() const {
    const auto dims = layer_inputs();
    std::size_t n = 0;
    for (std::size_t l : udp_layers) {
      n += dims[l][0] * ring_length(dims[l][1], dims[l][2], convs[l].pad);
    }
    return n;
  }

  void validate() const {
    if (channels == 0 || height == 0 || width == 0 || max_frames == 0) {
      throw ConfigError("input extents must be positive");
    }
    if (convs.empty()) throw ConfigError("front-end needs at least one conv layer");
    for (const auto& c : convs) {
      if (c.out_channels == 0 || c.kernel == 0 || c.stride == 0) {
        throw ConfigError("conv channels, kernel and stride must be positive");
      }
    }
    for (std::size_t i = 0; i < udp_layers.size(); ++i) {
      if (udp_layers[i] >= convs.size()) throw ConfigError("udp layer index out of range");
      if (i > 0 && udp_layers[i] <= udp_layers[i - 1]) {
        throw ConfigError("udp layer indices must be strictly increasing");
      }
      if (convs[udp_layers[i]].pad == 0) throw ConfigError("udp layer without padding");
    }
    if (vocab < 2) throw ConfigError("vocab must have at least two entries");
    if (backend_kernel % 2 == 0) throw ConfigError("backend kernel must be odd");
    (void)layer_inputs();
  }
};

/// Front-end presets with 5, 11 or 17 padded 3x3 conv layers. Every preset
/// halves the map three times (channels 8/16/32) and feeds a 512->256
/// temporal-conv back-end. UDP is enabled on all padded conv layers.
inline ModelConfig preset_config(std::size_t layers, Task task, std::size_t vocab,
                                 std::size_t height = 32, std::size_t width = 32,
                                 std::size_t max_frames = 8) {
  // extra stride-1 layers after each downsampling conv (8, 16, 32 channels)
  std::array<std::size_t, 3> extra{};
  switch (layers) {
    case 5: extra = {1, 0, 1}; break;
    case 11: extra = {3, 2, 3}; break;
    case 17: extra = {4, 4, 6}; break;
    default: throw ConfigError("preset must be 5, 11 or 17 layers");
  }
  ModelConfig c;
  c.height = height;
  c.width = width;
  c.max_frames = max_frames;
  c.task = task;
  c.vocab = vocab;
  c.preset = layers;
  const std::array<std::size_t, 3> widths{8, 16, 32};
  for (std::size_t s = 0; s < 3; ++s) {
    c.convs.push_back({widths[s], 3, 2, 1});
    for (std::size_t i = 0; i < extra[s]; ++i) c.convs.push_back({widths[s], 3, 1, 1});
  }
  for (std::size_t i = 0; i < c.convs.size(); ++i) c.udp_layers.push_back(i);
  c.validate();
  return c;
}

/// Conv layer whose input border is supplied by a PaddingSource.
struct PaddedConv2d {
  Tensor weight;  // [Cout, Cin, k, k]
  Tensor bias;    // [Cout]
  std::size_t stride = 1;
  PaddingSource padding;
  std::array<std::size_t, 3> declared_input{};

  std::size_t ring_size() const {
    return declared_input[0] *
           ring_length(declared_input[1], declared_input[2], padding.width);
  }

  Shape ring_shape() const {
    return {declared_input[0],
            ring_length(declared_input[1], declared_input[2], padding.width)};
  }

  std::array<std::size_t, 2> output_hw() const {
    const std::size_t k = weight.dim(2), p = padding.width;
    return {(declared_input[1] + 2 * p - k) / stride + 1,
            (declared_input[2] + 2 * p - k) / stride + 1};
  }

  /// Forward over x[N,C,H,W] (or [C,H,W]) using `src` for the border.
  Tensor forward(const Tensor& x, const PaddingSource& src) const {
    const bool batched = x.rank() == 4;
    const std::size_t off = batched ? 1 : 0;
    if ((x.rank() != 3 && x.rank() != 4) || x.dim(off) != declared_input[0] ||
        x.dim(off + 1) != declared_input[1] || x.dim(off + 2) != declared_input[2]) {
      throw ShapeError("conv input " + shape_str(x.shape()) + " does not match declared [" +
                       std::to_string(declared_input[0]) + "," +
                       std::to_string(declared_input[1]) + "," +
                       std::to_string(declared_input[2]) + "]");
    }
    if (src.width != padding.width) throw ShapeError("padding width differs from layer");
    Tensor padded = assemble_padded_input(x, src);
    if (!batched) {
      padded = reshape(padded, {1, padded.dim(0), padded.dim(1), padded.dim(2)});
    }
    Tensor y = conv2d_valid(padded, weight, bias, stride);
    if (!batched) y = reshape(y, {y.dim(1), y.dim(2), y.dim(3)});
    return y;
  }

  Tensor forward(const Tensor& x) const { return forward(x, padding); }
};

struct FrontendBlock {
  PaddedConv2d conv;
  Tensor gamma;
  Tensor beta;
  mutable BatchNormState bn;  // running stats move only in training mode
};

struct TemporalLayer {
  Tensor weight;  // [k, Din, Dout]
  Tensor bias;    // [Dout]
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

inline constexpr std::string_view kCheckpointMagic = "UDPM";
inline constexpr std::uint8_t kCheckpointVersion = 0x01;

/// Spatial conv front-end applied per frame, temporal-conv back-end and a
/// classifier head (word classification or per-frame CTC posteriors).
class RecognizerModel {
 public:
  RecognizerModel() = default;

  static RecognizerModel build(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    RecognizerModel m;
    m.config_ = config;
    m.fingerprint_ = config.fingerprint();
    std::mt19937_64 rng(seed);
    const auto dims = config.layer_inputs();
    for (std::size_t l = 0; l < config.convs.size(); ++l) {
      const auto& spec = config.convs[l];
      const std::size_t cin = dims[l][0], k = spec.kernel;
      FrontendBlock b;
      b.conv.weight = normal_init({spec.out_channels, cin, k, k},
                                  std::sqrt(2.0 / static_cast<double>(cin * k * k)), rng);
      b.conv.bias = Tensor::zeros({spec.out_channels});
      b.conv.stride = spec.stride;
      b.conv.padding = PaddingSource::zeros(spec.pad);
      b.conv.declared_input = dims[l];
      b.gamma = Tensor::full({spec.out_channels}, 1.0);
      b.beta = Tensor::zeros({spec.out_channels});
      b.bn.running_mean.assign(spec.out_channels, 0.0);
      b.bn.running_var.assign(spec.out_channels, 1.0);
      m.frontend_.push_back(std::move(b));
    }
    std::size_t din = config.feature_dim();
    for (std::size_t width : config.backend_channels) {
      const std::size_t k = config.backend_kernel;
      m.backend_.push_back({normal_init({k, din, width},
                                        std::sqrt(2.0 / static_cast<double>(k * din)), rng),
                            Tensor::zeros({width})});
      din = width;
    }
    m.head_w = normal_init({din, config.head_size()}, std::sqrt(1.0 / static_cast<double>(din)), rng);
    m.head_b = Tensor::zeros({config.head_size()});
    return m;
  }

  const ModelConfig& config() const { return config_; }
  std::uint64_t fingerprint() const { return fingerprint_; }
  const std::vector<FrontendBlock>& frontend() const { return frontend_; }

  /// Deep copy (weights, running statistics, trainability flags).
  RecognizerModel clone() const {
    RecognizerModel m = *this;
    auto src = state();
    auto dst = m.mutable_tensor_refs();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      const bool rg = dst[i]->defined() && dst[i]->requires_grad();
      *dst[i] = src[i].tensor.clone();
      if (rg) dst[i]->set_requires_grad(true);
    }
    m.scratch_stats_.clear();  // running stats were copied by value
    return m;
  }

  /// Returns a copy whose UDP layers are replaced (weights shared by value).
  RecognizerModel with_udp_layers(std::vector<std::size_t> layers) const {
    ModelConfig c = config_;
    c.udp_layers = std::move(layers);
    c.validate();
    RecognizerModel m = clone();
    m.config_ = c;
    m.fingerprint_ = c.fingerprint();
    return m;
  }

  /// Trainable parameters in declared order.
  std::vector<Tensor> parameters() const {
    std::vector<Tensor> ps;
    for (const auto& b : frontend_) {
      ps.insert(ps.end(), {b.conv.weight, b.conv.bias, b.gamma, b.beta});
    }
    for (const auto& t : backend_) ps.insert(ps.end(), {t.weight, t.bias});
    ps.insert(ps.end(), {head_w, head_b});
    return ps;
  }

  std::vector<Tensor> frontend_parameters() const {
    std::vector<Tensor> ps;
    for (const auto& b : frontend_) {
      ps.insert(ps.end(), {b.conv.weight, b.conv.bias, b.gamma, b.beta});
    }
    return ps;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : parameters()) n += p.numel();
    return n;
  }

  void set_trainable(bool on) {
    for (auto& p : parameters()) Tensor(p).set_requires_grad(on);
  }

  void set_training(bool on) { training_ = on; }
  bool training() const { return training_; }

  /// Checkpointed tensors in declared order (parameters + running stats).
  std::vector<NamedTensor> state() const {
    std::vector<NamedTensor> s;
    for (std::size_t l = 0; l < frontend_.size(); ++l) {
      const auto& b = frontend_[l];
      const std::string p = "frontend." + std::to_string(l) + ".";
      const std::size_t c = b.gamma.numel();
      s.push_back({p + "conv.weight", b.conv.weight});
      s.push_back({p + "conv.bias", b.conv.bias});
      s.push_back({p + "bn.gamma", b.gamma});
      s.push_back({p + "bn.beta", b.beta});
      s.push_back({p + "bn.running_mean", Tensor::from_data({c}, b.bn.running_mean)});
      s.push_back({p + "bn.running_var", Tensor::from_data({c}, b.bn.running_var)});
    }
    for (std::size_t l = 0; l < backend_.size(); ++l) {
      const std::string p = "backend." + std::to_string(l) + ".";
      s.push_back({p + "weight", backend_[l].weight});
      s.push_back({p + "bias", backend_[l].bias});
    }
    s.push_back({"head.weight", head_w});
    s.push_back({"head.bias", head_b});
    return s;
  }

  std::string checkpoint_bytes() const {
    ByteWriter w;
    const std::string cfg = config_.canonical();
    w.bytes(kCheckpointMagic);
    w.u8(kCheckpointVersion);
    w.u32(static_cast<std::uint32_t>(cfg.size()));
    w.bytes(cfg);
    w.u64(fingerprint_);
    const auto st = state();
    w.u32(static_cast<std::uint32_t>(st.size()));
    for (const auto& nt : st) write_udtf(w, nt.tensor);
    return w.take();
  }

  void save(const std::filesystem::path& path) const {
    write_file_atomic(path, checkpoint_bytes());
  }

  static RecognizerModel from_checkpoint_bytes(std::string_view bytes) {
    ByteReader r(bytes);
    if (r.bytes(4) != kCheckpointMagic) throw FormatError("not a model checkpoint");
    if (r.u8() != kCheckpointVersion) throw FormatError("unsupported checkpoint version");
    const std::uint32_t len = r.u32();
    const std::string cfg_text(r.bytes(len));
    json cj;
    try {
      cj = json::parse(cfg_text);
    } catch (const json::exception& e) {
      throw FormatError(std::string("checkpoint config is not JSON: ") + e.what());
    }
    const ModelConfig cfg = ModelConfig::from_json(cj);
    const std::uint64_t fp = r.u64();
    if (fp != fnv1a64(cfg_text) || fp != cfg.fingerprint()) {
      throw FormatError("checkpoint fingerprint does not match its config");
    }
    RecognizerModel m = build(cfg, 0);
    const std::uint32_t count = r.u32();
    auto refs = m.mutable_tensor_refs();
    if (count != refs.size()) throw FormatError("checkpoint tensor count mismatch");
    for (std::size_t i = 0; i < refs.size(); ++i) {
      Tensor t = read_udtf(r);
      if (t.shape() != refs[i]->shape()) {
        throw FormatError("checkpoint tensor " + std::to_string(i) + " has shape " +
                          shape_str(t.shape()));
      }
      *refs[i] = t;
    }
    if (!r.eof()) throw FormatError("trailing bytes in checkpoint");
    m.sync_running_stats_from_refs();
    return m;
  }

  static RecognizerModel load(const std::filesystem::path& path) {
    return from_checkpoint_bytes(read_file(path));
  }

  /// Rejects paddings built for another configuration.
  void check_padding(const UserPadding& padding) const {
    if (padding.config_fingerprint != fingerprint_) {
      throw CompatibilityError("padding for speaker '" + padding.speaker_id +
                               "' was built for a different model configuration");
    }
    if (padding.rings.size() != config_.udp_layers.size()) {
      throw CompatibilityError("padding ring count does not match the model's UDP layers");
    }
    for (std::size_t i = 0; i < padding.rings.size(); ++i) {
      const auto& r = padding.rings[i];
      if (r.layer_index != config_.udp_layers[i]) {
        throw CompatibilityError("padding ring bound to layer " + std::to_string(r.layer_index) +
                                 ", model expects " + std::to_string(config_.udp_layers[i]));
      }
      if (r.values.numel() != frontend_[r.layer_index].conv.ring_size()) {
        throw CompatibilityError("ring size mismatch at layer " + std::to_string(r.layer_index));
      }
    }
  }

  /// Front-end over frames[N,C,H,W] -> per-frame features [N, F]. When
  /// `conv_trace` is given, every conv output (before normalization) is
  /// appended to it.
  Tensor frontend_features(const Tensor& frames, const UserPadding* padding,
                           std::vector<Tensor>* conv_trace = nullptr) const {
    if (padding) check_padding(*padding);
    if (frames.rank() != 4 || frames.dim(1) != config_.channels ||
        frames.dim(2) != config_.height || frames.dim(3) != config_.width) {
      throw ShapeError("frames " + shape_str(frames.shape()) + " do not match model input");
    }
    std::size_t next_ring = 0;
    Tensor h = frames;
    for (std::size_t l = 0; l < frontend_.size(); ++l) {
      const auto& b = frontend_[l];
      Tensor y;
      if (padding && next_ring < padding->rings.size() &&
          padding->rings[next_ring].layer_index == l) {
        const Tensor& ring = padding->rings[next_ring++].values;
        y = b.conv.forward(h, PaddingSource::user(b.conv.padding.width, ring));
      } else {
        y = b.conv.forward(h);
      }
      if (conv_trace) conv_trace->push_back(y);
      h = relu(batch_norm2d(y, b.gamma, b.beta, b.bn, training_));
    }
    return reshape(h, {frames.dim(0), config_.feature_dim()});
  }

  /// Back-end over features [B,T,F]. Classification -> logits [B,V];
  /// CTC -> log-posteriors [B,T,V+1] with blank at index 0.
  Tensor backend_logits(const Tensor& features) const {
    if (features.rank() != 3 || features.dim(2) != config_.feature_dim()) {
      throw ShapeError("backend expects [B,T," + std::to_string(config_.feature_dim()) + "]");
    }
    const std::size_t bsz = features.dim(0), t = features.dim(1);
    Tensor h = features;
    for (const auto& layer : backend_) h = relu(temporal_conv1d(h, layer.weight, layer.bias));
    if (config_.task == Task::classification) {
      return linear(mean_time(h), head_w, head_b);
    }
    const std::size_t d = h.dim(2);
    Tensor logits = linear(reshape(h, {bsz * t, d}), head_w, head_b);
    return reshape(log_softmax_lastdim(logits), {bsz, t, config_.head_size()});
  }

  /// Batched forward over clips [B,T,C,H,W].
  Tensor forward_batch(const Tensor& clips, const UserPadding* padding = nullptr) const {
    check_clip_shape(clips, 1);
    const std::size_t bsz = clips.dim(0), t = clips.dim(1);
    Tensor frames = reshape(clips, {bsz * t, clips.dim(2), clips.dim(3), clips.dim(4)});
    Tensor feats = frontend_features(frames, padding);
    return backend_logits(reshape(feats, {bsz, t, config_.feature_dim()}));
  }

  /// Single clip [T,C,H,W] -> logits [V] or log-posteriors [T, V+1].
  Tensor forward(const Tensor& clip, const UserPadding* padding = nullptr) const {
    check_clip_shape(clip, 0);
    Tensor batched = reshape(clip, {1, clip.dim(0), clip.dim(1), clip.dim(2), clip.dim(3)});
    Tensor y = forward_batch(batched, padding);
    if (config_.task == Task::classification) return reshape(y, {config_.vocab});
    return reshape(y, {clip.dim(0), config_.head_size()});
  }

 private:
  static Tensor normal_init(Shape shape, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    std::vector<double> v(numel(shape));
    for (auto& x : v) x = dist(rng);
    return Tensor::from_data(std::move(shape), std::move(v));
  }

  void check_clip_shape(const Tensor& clip, std::size_t off) const {
    if (clip.rank() != 4 + off || clip.dim(off + 1) != config_.channels ||
        clip.dim(off + 2) != config_.height || clip.dim(off + 3) != config_.width) {
      throw ShapeError("clip " + shape_str(clip.shape()) + " does not match model input");
    }
    const std::size_t t = clip.dim(off);
    if (t == 0 || t > config_.max_frames) {
      throw ContractError("clip length " + std::to_string(t) + " outside [1, " +
                          std::to_string(config_.max_frames) + "]");
    }
  }

  // Pointers into every checkpointed slot, in state() order. Running
  // statistics go through scratch tensors synced by sync_running_stats_from_refs.
  std::vector<Tensor*> mutable_tensor_refs() {
    scratch_stats_.clear();
    scratch_stats_.reserve(frontend_.size() * 2);
    std::vector<Tensor*> refs;
    for (auto& b : frontend_) {
      refs.push_back(&b.conv.weight);
      refs.push_back(&b.conv.bias);
      refs.push_back(&b.gamma);
      refs.push_back(&b.beta);
      const std::size_t c = b.gamma.numel();
      scratch_stats_.push_back(Tensor::from_data({c}, b.bn.running_mean));
      refs.push_back(&scratch_stats_.back());
      scratch_stats_.push_back(Tensor::from_data({c}, b.bn.running_var));
      refs.push_back(&scratch_stats_.back());
    }
    for (auto& t : backend_) {
      refs.push_back(&t.weight);
      refs.push_back(&t.bias);
    }
    refs.push_back(&head_w);
    refs.push_back(&head_b);
    return refs;
  }

  void sync_running_stats_from_refs() {
    for (std::size_t l = 0; l < frontend_.size(); ++l) {
      auto m = scratch_stats_[2 * l].data();
      auto v = scratch_stats_[2 * l + 1].data();
      frontend_[l].bn.running_mean.assign(m.begin(), m.end());
      frontend_[l].bn.running_var.assign(v.begin(), v.end());
    }
    scratch_stats_.clear();
  }

  ModelConfig config_;
  std::uint64_t fingerprint_ = 0;
  std::vector<FrontendBlock> frontend_;
  std::vector<TemporalLayer> backend_;
  Tensor head_w;
  Tensor head_b;
  bool training_ = false;
  std::vector<Tensor> scratch_stats_;
};

}  // namespace udp
