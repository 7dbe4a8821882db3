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
#include <cstdint>
#include <vector>

#include "udp/tensor.hpp"

namespace udp {

enum class PadMode : std::uint8_t { zero, constant, reflect, user };

/// Where the border ring of a padded convolution input comes from.
///
/// In user mode `ring` is a [C, ring_len] tensor whose columns follow the
/// row-major scan of every padded position outside the interior.
struct PaddingSource {
  PadMode mode = PadMode::zero;
  std::size_t width = 0;
  double constant = 0.0;
  Tensor ring;

  static PaddingSource zeros(std::size_t p) { return {PadMode::zero, p, 0.0, {}}; }
  static PaddingSource filled(std::size_t p, double c) {
    return {PadMode::constant, p, c, {}};
  }
  static PaddingSource reflect(std::size_t p) { return {PadMode::reflect, p, 0.0, {}}; }
  static PaddingSource user(std::size_t p, Tensor ring) {
    return {PadMode::user, p, 0.0, std::move(ring)};
  }

  bool learnable() const { return mode == PadMode::user; }
};

/// Number of border cells per channel: (H+2p)(W+2p) - HW.
inline std::size_t ring_length(std::size_t h, std::size_t w, std::size_t p) {
  return (h + 2 * p) * (w + 2 * p) - h * w;
}

/// Padded-grid flat indices of the ring cells, in storage order.
inline std::vector<std::size_t> ring_positions(std::size_t h, std::size_t w,
                                               std::size_t p) {
  const std::size_t hp = h + 2 * p, wp = w + 2 * p;
  std::vector<std::size_t> pos;
  pos.reserve(ring_length(h, w, p));
  for (std::size_t i = 0; i < hp; ++i)
    for (std::size_t j = 0; j < wp; ++j) {
      const bool interior = i >= p && i < p + h && j >= p && j < p + w;
      if (!interior) pos.push_back(i * wp + j);
    }
  return pos;
}

namespace detail {

// For each padded cell: >= 0 -> interior source index (row-major in HxW),
// < 0 -> ring cell -(r+1).
inline std::vector<std::int64_t> pad_source_map(std::size_t h, std::size_t w,
                                                std::size_t p, bool reflect) {
  const std::size_t hp = h + 2 * p, wp = w + 2 * p;
  std::vector<std::int64_t> map(hp * wp);
  std::int64_t r = 0;
  const auto refl = [](std::int64_t i, std::int64_t n) {
    if (i < 0) return -i;
    if (i >= n) return 2 * (n - 1) - i;
    return i;
  };
  for (std::size_t i = 0; i < hp; ++i)
    for (std::size_t j = 0; j < wp; ++j) {
      const auto si = static_cast<std::int64_t>(i) - static_cast<std::int64_t>(p);
      const auto sj = static_cast<std::int64_t>(j) - static_cast<std::int64_t>(p);
      const bool interior = si >= 0 && si < static_cast<std::int64_t>(h) && sj >= 0 &&
                            sj < static_cast<std::int64_t>(w);
      if (interior) {
        map[i * wp + j] = si * static_cast<std::int64_t>(w) + sj;
      } else if (reflect) {
        map[i * wp + j] = refl(si, static_cast<std::int64_t>(h)) * static_cast<std::int64_t>(w) +
                          refl(sj, static_cast<std::int64_t>(w));
        ++r;
      } else {
        map[i * wp + j] = -(++r);
      }
    }
  return map;
}

}  // namespace detail

/// Builds the padded input [.., C, H+2p, W+2p] for x of shape [C,H,W] or
/// [N,C,H,W]. Interior equals x; the ring is filled from `src`. Gradients flow
/// to x (including reflected cells) and, in user mode, to the ring tensor.
inline Tensor assemble_padded_input(const Tensor& x, const PaddingSource& src) {
  if (x.rank() != 3 && x.rank() != 4) {
    throw DimensionError("padding expects [C,H,W] or [N,C,H,W], got " + shape_str(x.shape()));
  }
  const bool batched = x.rank() == 4;
  const std::size_t n = batched ? x.dim(0) : 1;
  const std::size_t c = x.dim(batched ? 1 : 0);
  const std::size_t h = x.dim(batched ? 2 : 1);
  const std::size_t w = x.dim(batched ? 3 : 2);
  const std::size_t p = src.width;
  const std::size_t hp = h + 2 * p, wp = w + 2 * p;
  const std::size_t rlen = ring_length(h, w, p);
  if (src.mode == PadMode::reflect && p > 0 && (p >= h || p >= w)) {
    throw ShapeError("reflect padding width must be smaller than the map");
  }
  if (src.mode == PadMode::user) {
    if (!src.ring.defined() || src.ring.numel() != c * rlen) {
      throw ShapeError("ring has " +
                       std::to_string(src.ring.defined() ? src.ring.numel() : 0) +
                       " elements, layer needs " + std::to_string(c * rlen));
    }
  }
  const auto map = detail::pad_source_map(h, w, p, src.mode == PadMode::reflect);
  const double fill = src.mode == PadMode::constant ? src.constant : 0.0;
  const double* ring = src.mode == PadMode::user ? src.ring.data().data() : nullptr;

  std::vector<double> out(n * c * hp * wp);
  const auto xv = x.data();
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double* xin = xv.data() + (b * c + ch) * h * w;
      double* y = out.data() + (b * c + ch) * hp * wp;
      for (std::size_t q = 0; q < hp * wp; ++q) {
        const std::int64_t s = map[q];
        if (s >= 0) {
          y[q] = xin[s];
        } else {
          y[q] = ring ? ring[ch * rlen + static_cast<std::size_t>(-s - 1)] : fill;
        }
      }
    }
  Shape shape = batched ? Shape{n, c, hp, wp} : Shape{c, hp, wp};
  const Tensor* ring_input = src.mode == PadMode::user ? &src.ring : nullptr;
  return detail::make_result(
      "pad2d", std::move(shape), std::move(out), {&x, ring_input},
      [n, c, h, w, hp, wp, rlen, map](const detail::TensorImpl& o,
                                      std::span<const detail::ImplPtr> in) {
        const bool gx = detail::wants_grad(in[0]);
        const bool gr = detail::wants_grad(in[1]);
        double* dx = gx ? detail::grad_of(*in[0]).data() : nullptr;
        double* dr = gr ? detail::grad_of(*in[1]).data() : nullptr;
        for (std::size_t b = 0; b < n; ++b)
          for (std::size_t ch = 0; ch < c; ++ch) {
            const double* dy = o.grad.data() + (b * c + ch) * hp * wp;
            for (std::size_t q = 0; q < hp * wp; ++q) {
              const std::int64_t s = map[q];
              if (s >= 0) {
                if (dx) dx[(b * c + ch) * h * w + static_cast<std::size_t>(s)] += dy[q];
              } else if (dr) {
                dr[ch * rlen + static_cast<std::size_t>(-s - 1)] += dy[q];
              }
            }
          }
      });
}

namespace detail {

struct ConvGeom {
  std::size_t c, hp, wp, k, stride, ho, wo;
  std::size_t ckk() const { return c * k * k; }
  std::size_t hw() const { return ho * wo; }
};

// col[(ch,ki,kj), col_offset + pos] for one padded image
inline void im2col(const ConvGeom& g, const double* img, double* col,
                   std::size_t col_stride, std::size_t col_offset) {
  for (std::size_t ch = 0; ch < g.c; ++ch)
    for (std::size_t ki = 0; ki < g.k; ++ki)
      for (std::size_t kj = 0; kj < g.k; ++kj) {
        double* row = col + ((ch * g.k + ki) * g.k + kj) * col_stride + col_offset;
        const double* src = img + ch * g.hp * g.wp + ki * g.wp + kj;
        for (std::size_t oi = 0; oi < g.ho; ++oi) {
          const double* s = src + oi * g.stride * g.wp;
          double* d = row + oi * g.wo;
          if (g.stride == 1) {
            for (std::size_t oj = 0; oj < g.wo; ++oj) d[oj] = s[oj];
          } else {
            for (std::size_t oj = 0; oj < g.wo; ++oj) d[oj] = s[oj * g.stride];
          }
        }
      }
}

inline void col2im_add(const ConvGeom& g, const double* col, std::size_t col_stride,
                       std::size_t col_offset, double* img) {
  for (std::size_t ch = 0; ch < g.c; ++ch)
    for (std::size_t ki = 0; ki < g.k; ++ki)
      for (std::size_t kj = 0; kj < g.k; ++kj) {
        const double* row = col + ((ch * g.k + ki) * g.k + kj) * col_stride + col_offset;
        double* dst = img + ch * g.hp * g.wp + ki * g.wp + kj;
        for (std::size_t oi = 0; oi < g.ho; ++oi) {
          double* d = dst + oi * g.stride * g.wp;
          const double* s = row + oi * g.wo;
          for (std::size_t oj = 0; oj < g.wo; ++oj) d[oj * g.stride] += s[oj];
        }
      }
}

}  // namespace detail

/// Unpadded ("valid") cross-correlation of x[N,C,Hp,Wp] with w[Cout,C,k,k].
/// Padding is applied beforehand by assemble_padded_input.
inline Tensor conv2d_valid(const Tensor& x, const Tensor& w, const Tensor& b,
                           std::size_t stride) {
  if (x.rank() != 4 || w.rank() != 4 || w.dim(1) != x.dim(1) || w.dim(2) != w.dim(3) ||
      b.rank() != 1 || b.dim(0) != w.dim(0)) {
    throw DimensionError("conv2d shape mismatch x" + shape_str(x.shape()) + " w" +
                         shape_str(w.shape()) + " b" + shape_str(b.shape()));
  }
  if (stride == 0) throw ContractError("conv2d stride must be positive");
  const std::size_t n = x.dim(0), cout = w.dim(0), k = w.dim(2);
  if (x.dim(2) < k || x.dim(3) < k) throw DimensionError("conv2d kernel larger than input");
  detail::ConvGeom g{x.dim(1), x.dim(2), x.dim(3), k, stride,
                     (x.dim(2) - k) / stride + 1, (x.dim(3) - k) / stride + 1};
  const std::size_t hw = g.hw(), ckk = g.ckk();
  // Batch several images into one column matrix when maps are small.
  const std::size_t group = std::max<std::size_t>(1, std::min<std::size_t>(n, 256 / hw));

  std::vector<double> out(n * cout * hw);
  std::vector<double> col, acc;
  const auto xv = x.data();
  const auto wv = w.data();
  const auto bv = b.data();
  for (std::size_t b0 = 0; b0 < n; b0 += group) {
    const std::size_t gn = std::min(group, n - b0);
    const std::size_t width = gn * hw;
    col.resize(ckk * width);
    for (std::size_t i = 0; i < gn; ++i)
      detail::im2col(g, xv.data() + (b0 + i) * g.c * g.hp * g.wp, col.data(), width, i * hw);
    acc.resize(cout * width);
    for (std::size_t co = 0; co < cout; ++co)
      std::fill_n(acc.begin() + static_cast<std::ptrdiff_t>(co * width), width, bv[co]);
    kernels::gemm_acc(cout, width, ckk, wv.data(), col.data(), acc.data());
    for (std::size_t i = 0; i < gn; ++i)
      for (std::size_t co = 0; co < cout; ++co)
        std::copy_n(acc.data() + co * width + i * hw, hw,
                    out.data() + ((b0 + i) * cout + co) * hw);
  }
  return detail::make_result(
      "conv2d", {n, cout, g.ho, g.wo}, std::move(out), {&x, &w, &b},
      [g, n, cout, group](const detail::TensorImpl& o, std::span<const detail::ImplPtr> in) {
        const bool gx = detail::wants_grad(in[0]);
        const bool gw = detail::wants_grad(in[1]);
        const bool gb = detail::wants_grad(in[2]);
        const std::size_t hw = g.hw(), ckk = g.ckk();
        const double* xd = in[0]->data.data();
        std::vector<double> wt;
        if (gx) wt = kernels::transposed(cout, ckk, in[1]->data.data());
        double* dw = gw ? detail::grad_of(*in[1]).data() : nullptr;
        double* db = gb ? detail::grad_of(*in[2]).data() : nullptr;
        double* dx = gx ? detail::grad_of(*in[0]).data() : nullptr;
        std::vector<double> col, colt, dout, dcol;
        for (std::size_t b0 = 0; b0 < n; b0 += group) {
          const std::size_t gn = std::min(group, n - b0);
          const std::size_t width = gn * hw;
          dout.resize(cout * width);
          for (std::size_t i = 0; i < gn; ++i)
            for (std::size_t co = 0; co < cout; ++co)
              std::copy_n(o.grad.data() + ((b0 + i) * cout + co) * hw, hw,
                          dout.data() + co * width + i * hw);
          if (db) {
            for (std::size_t co = 0; co < cout; ++co)
              for (std::size_t q = 0; q < width; ++q) db[co] += dout[co * width + q];
          }
          if (dw) {
            col.resize(ckk * width);
            for (std::size_t i = 0; i < gn; ++i)
              detail::im2col(g, xd + (b0 + i) * g.c * g.hp * g.wp, col.data(), width, i * hw);
            colt.resize(width * ckk);
            kernels::transpose(ckk, width, col.data(), colt.data());
            kernels::gemm_acc(cout, ckk, width, dout.data(), colt.data(), dw);
          }
          if (dx) {
            dcol.assign(ckk * width, 0.0);
            kernels::gemm_acc(ckk, width, cout, wt.data(), dout.data(), dcol.data());
            for (std::size_t i = 0; i < gn; ++i)
              detail::col2im_add(g, dcol.data(), width, i * hw,
                                 dx + (b0 + i) * g.c * g.hp * g.wp);
          }
        }
      });
}

/// Per-channel affine normalization with running statistics.
struct BatchNormState {
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.1;
  double eps = 1e-5;
};

/// Normalizes x[N,C,H,W] per channel. In training mode batch statistics are
/// used and the running estimates updated; otherwise the running estimates
/// are used as constants.
inline Tensor batch_norm2d(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                           BatchNormState& state, bool training) {
  if (x.rank() != 4 || gamma.numel() != x.dim(1) || beta.numel() != x.dim(1) ||
      state.running_mean.size() != x.dim(1) || state.running_var.size() != x.dim(1)) {
    throw DimensionError("batch_norm2d shape mismatch " + shape_str(x.shape()));
  }
  const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  const std::size_t m = n * hw;
  std::vector<double> mu(c), inv_std(c);
  const auto xv = x.data();
  if (training) {
    if (m < 2) throw ContractError("batch_norm2d training needs more than one value per channel");
    for (std::size_t ch = 0; ch < c; ++ch) {
      double s = 0.0;
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t q = 0; q < hw; ++q) s += xv[(b * c + ch) * hw + q];
      const double mean = s / static_cast<double>(m);
      double v = 0.0;
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t q = 0; q < hw; ++q) {
          const double d = xv[(b * c + ch) * hw + q] - mean;
          v += d * d;
        }
      const double var = v / static_cast<double>(m);
      mu[ch] = mean;
      inv_std[ch] = 1.0 / std::sqrt(var + state.eps);
      state.running_mean[ch] = (1 - state.momentum) * state.running_mean[ch] + state.momentum * mean;
      state.running_var[ch] = (1 - state.momentum) * state.running_var[ch] +
                              state.momentum * var * static_cast<double>(m) / static_cast<double>(m - 1);
    }
  } else {
    for (std::size_t ch = 0; ch < c; ++ch) {
      mu[ch] = state.running_mean[ch];
      inv_std[ch] = 1.0 / std::sqrt(state.running_var[ch] + state.eps);
    }
  }
  std::vector<double> y(xv.size());
  const auto gv = gamma.data();
  const auto bv = beta.data();
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double a = gv[ch] * inv_std[ch];
      const double off = bv[ch] - a * mu[ch];
      const double* xi = xv.data() + (b * c + ch) * hw;
      double* yo = y.data() + (b * c + ch) * hw;
      for (std::size_t q = 0; q < hw; ++q) yo[q] = a * xi[q] + off;
    }
  return detail::make_result(
      "batch_norm2d", x.shape(), std::move(y), {&x, &gamma, &beta},
      [n, c, hw, m, mu, inv_std, training](const detail::TensorImpl& o,
                                           std::span<const detail::ImplPtr> in) {
        const double* xd = in[0]->data.data();
        const double* gd = in[1]->data.data();
        const double* dy = o.grad.data();
        double* dx = detail::wants_grad(in[0]) ? detail::grad_of(*in[0]).data() : nullptr;
        double* dg = detail::wants_grad(in[1]) ? detail::grad_of(*in[1]).data() : nullptr;
        double* dbeta = detail::wants_grad(in[2]) ? detail::grad_of(*in[2]).data() : nullptr;
        for (std::size_t ch = 0; ch < c; ++ch) {
          double sdy = 0.0, sdyx = 0.0;
          for (std::size_t b = 0; b < n; ++b)
            for (std::size_t q = 0; q < hw; ++q) {
              const std::size_t i = (b * c + ch) * hw + q;
              const double xhat = (xd[i] - mu[ch]) * inv_std[ch];
              sdy += dy[i];
              sdyx += dy[i] * xhat;
            }
          if (dg) dg[ch] += sdyx;
          if (dbeta) dbeta[ch] += sdy;
          if (!dx) continue;
          const double a = gd[ch] * inv_std[ch];
          const double md = static_cast<double>(m);
          for (std::size_t b = 0; b < n; ++b)
            for (std::size_t q = 0; q < hw; ++q) {
              const std::size_t i = (b * c + ch) * hw + q;
              if (training) {
                const double xhat = (xd[i] - mu[ch]) * inv_std[ch];
                dx[i] += a * (dy[i] - sdy / md - xhat * sdyx / md);
              } else {
                dx[i] += a * dy[i];
              }
            }
        }
      });
}

/// "Same" temporal convolution of x[B,T,Din] with w[k,Din,Dout] (odd k,
/// zero padding k/2 on both ends of the time axis).
inline Tensor temporal_conv1d(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.rank() != 3 || w.rank() != 3 || w.dim(1) != x.dim(2) || w.dim(0) % 2 == 0 ||
      b.rank() != 1 || b.dim(0) != w.dim(2)) {
    throw DimensionError("temporal_conv1d shape mismatch x" + shape_str(x.shape()) + " w" +
                         shape_str(w.shape()));
  }
  const std::size_t bsz = x.dim(0), t = x.dim(1), din = x.dim(2);
  const std::size_t k = w.dim(0), dout = w.dim(2), half = k / 2;
  const std::size_t rows = bsz * t, kd = k * din;
  // col[(b,t), (j,p)] = x[b, t + j - half, p], zero outside the clip. With
  // w viewed as [k*Din, Dout] the whole layer is one product.
  const auto gather = [bsz, t, din, k, half](const double* src, double* col) {
    for (std::size_t bi = 0; bi < bsz; ++bi)
      for (std::size_t s = 0; s < t; ++s)
        for (std::size_t j = 0; j < k; ++j) {
          double* dst = col + ((bi * t + s) * k + j) * din;
          if (s + j < half || s + j - half >= t) {
            std::fill_n(dst, din, 0.0);
          } else {
            std::copy_n(src + (bi * t + s + j - half) * din, din, dst);
          }
        }
  };
  std::vector<double> y(rows * dout);
  for (std::size_t r = 0; r < rows; ++r)
    std::copy(b.data().begin(), b.data().end(), y.begin() + static_cast<std::ptrdiff_t>(r * dout));
  {
    std::vector<double> col(rows * kd);
    gather(x.data().data(), col.data());
    kernels::gemm_acc(rows, dout, kd, col.data(), w.data().data(), y.data());
  }
  // valid output rows for tap j: t_out in [lo, hi), reading x row t_out + j - half
  const auto range = [t, half](std::size_t j) {
    const std::size_t lo = j < half ? half - j : 0;
    const std::size_t hi = j > half ? (t > j - half ? t - (j - half) : 0) : t;
    return std::pair{lo, std::max(lo, hi)};
  };
  return detail::make_result(
      "temporal_conv1d", {bsz, t, dout}, std::move(y), {&x, &w, &b},
      [bsz, t, din, k, dout, half, range](const detail::TensorImpl& o,
                                          std::span<const detail::ImplPtr> in) {
        const double* xd = in[0]->data.data();
        const double* dy = o.grad.data();
        double* dx = detail::wants_grad(in[0]) ? detail::grad_of(*in[0]).data() : nullptr;
        double* dw = detail::wants_grad(in[1]) ? detail::grad_of(*in[1]).data() : nullptr;
        if (detail::wants_grad(in[2])) {
          auto& db = detail::grad_of(*in[2]);
          for (std::size_t r = 0; r < bsz * t; ++r)
            for (std::size_t q = 0; q < dout; ++q) db[q] += dy[r * dout + q];
        }
        if (dx) {
          // dcol = dy * w^T, then scatter back along the taps.
          const std::size_t kd = k * din;
          const auto wt = kernels::transposed(kd, dout, in[1]->data.data());
          std::vector<double> dcol(bsz * t * kd, 0.0);
          kernels::gemm_acc(bsz * t, kd, dout, dy, wt.data(), dcol.data());
          for (std::size_t bi = 0; bi < bsz; ++bi)
            for (std::size_t s = 0; s < t; ++s)
              for (std::size_t j = 0; j < k; ++j) {
                if (s + j < half || s + j - half >= t) continue;
                const double* src = dcol.data() + ((bi * t + s) * k + j) * din;
                double* dst = dx + (bi * t + s + j - half) * din;
                for (std::size_t p = 0; p < din; ++p) dst[p] += src[p];
              }
        }
        if (!dw) return;
        for (std::size_t j = 0; j < k; ++j) {
          const auto [lo, hi] = range(j);
          double* dwj = dw + j * din * dout;
          for (std::size_t bi = 0; bi < bsz; ++bi)
            for (std::size_t s = lo; s < hi; ++s) {
              const double* xr = xd + (bi * t + s + j - half) * din;
              const double* g = dy + (bi * t + s) * dout;
              for (std::size_t p = 0; p < din; ++p) {
                const double a = xr[p];
                if (a == 0.0) continue;
                double* row = dwj + p * dout;
                for (std::size_t q = 0; q < dout; ++q) row[q] += a * g[q];
              }
            }
        }
      });
}

}  // namespace udp
