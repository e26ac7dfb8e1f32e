// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

// Layer primitives with explicit backward passes. Backward functions take
// the forward inputs they need and accumulate parameter gradients.

#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "gelforce/nn/tensor.hpp"

namespace gelforce::nn {

/// Zero padding added on each side of the image before a convolution.
struct Padding {
  int top = 0;
  int left = 0;
  int bottom = 0;
  int right = 0;
};

/// Same-size padding for a k x k kernel; even kernels pad bottom/right.
inline Padding same_padding(int k) { return {(k - 1) / 2, (k - 1) / 2, k / 2, k / 2}; }

namespace detail {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
using StridedMap = Eigen::Map<RowMatrix<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using ConstStridedMap = Eigen::Map<const RowMatrix<T>, 0, Eigen::OuterStride<>>;

// Copies sample n into a zero-padded buffer of C planes, each Hp x Wp, with
// kw - 1 trailing slack elements so shifted views never leave the buffer.
template <typename T>
std::vector<T> pad_sample(const Tensor<T>& x, int n, const Padding& p, int hp, int wp, int slack) {
  std::vector<T> buf(static_cast<std::size_t>(x.c()) * hp * wp + slack, T(0));
  for (int c = 0; c < x.c(); ++c) {
    for (int y = 0; y < x.h(); ++y) {
      const T* src = &x(n, c, y, 0);
      std::copy(src, src + x.w(), buf.begin() + (static_cast<std::size_t>(c) * hp + y + p.top) * wp + p.left);
    }
  }
  return buf;
}

// Kernel slice (ky, kx) of an (Co, Ci, kh, kw) weight tensor as a Co x Ci matrix.
template <typename T>
RowMatrix<T> kernel_slice(const Tensor<T>& w, int ky, int kx) {
  RowMatrix<T> k(w.n(), w.c());
  for (int o = 0; o < w.n(); ++o) {
    for (int i = 0; i < w.c(); ++i) k(o, i) = w(o, i, ky, kx);
  }
  return k;
}

}  // namespace detail

/// Cross-correlation of x (N, Ci, H, W) with w (Co, Ci, kh, kw) plus bias
/// (1, Co, 1, 1), after zero padding.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, const Padding& p) {
  if (w.c() != x.c()) {
    throw ShapeError("conv2d: input " + x.shape_string() + " does not match kernel " + w.shape_string());
  }
  if (b.size() != static_cast<std::size_t>(w.n())) {
    throw ShapeError("conv2d: bias " + b.shape_string() + " does not match kernel " + w.shape_string());
  }
  const int kh = w.h(), kw = w.w();
  const int hp = x.h() + p.top + p.bottom, wp = x.w() + p.left + p.right;
  const int ho = hp - kh + 1, wo = wp - kw + 1;
  if (ho < 1 || wo < 1) throw ShapeError("conv2d: kernel " + w.shape_string() + " larger than padded input");
  Tensor<T> y(x.n(), w.n(), ho, wo);
  const auto cols = static_cast<Eigen::Index>(ho) * wp;
  detail::RowMatrix<T> acc(w.n(), cols);
  for (int n = 0; n < x.n(); ++n) {
    const std::vector<T> buf = detail::pad_sample(x, n, p, hp, wp, kw - 1);
    acc.setZero();
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        detail::ConstStridedMap<T> view(buf.data() + ky * wp + kx, x.c(), cols,
                                        Eigen::OuterStride<>(static_cast<Eigen::Index>(hp) * wp));
        acc.noalias() += detail::kernel_slice(w, ky, kx) * view;
      }
    }
    for (int o = 0; o < w.n(); ++o) {
      for (int yy = 0; yy < ho; ++yy) {
        const T* src = acc.data() + static_cast<Eigen::Index>(o) * cols + static_cast<Eigen::Index>(yy) * wp;
        T* dst = &y(n, o, yy, 0);
        for (int xx = 0; xx < wo; ++xx) dst[xx] = src[xx] + b.data()[o];
      }
    }
  }
  return y;
}

/// Gradients of conv2d. `dx` may be null; dw and db are accumulated.
template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const Padding& p, const Tensor<T>& dy, Tensor<T>* dx,
                     Tensor<T>& dw, Tensor<T>& db) {
  require_same_shape(w, dw, "conv2d_backward (weight gradient)");
  const int kh = w.h(), kw = w.w();
  const int hp = x.h() + p.top + p.bottom, wp = x.w() + p.left + p.right;
  const int ho = hp - kh + 1, wo = wp - kw + 1;
  if (dy.n() != x.n() || dy.c() != w.n() || dy.h() != ho || dy.w() != wo) {
    throw ShapeError("conv2d_backward: output gradient " + dy.shape_string() + " does not match the forward output");
  }
  if (dx) *dx = Tensor<T>(x.shape());
  const auto cols = static_cast<Eigen::Index>(ho) * wp;
  const auto stride = Eigen::OuterStride<>(static_cast<Eigen::Index>(hp) * wp);
  detail::RowMatrix<T> g(w.n(), cols);
  for (int n = 0; n < x.n(); ++n) {
    // Output gradient laid out on the padded row pitch, junk columns zero.
    g.setZero();
    for (int o = 0; o < w.n(); ++o) {
      for (int yy = 0; yy < ho; ++yy) {
        const T* src = &dy(n, o, yy, 0);
        T* dst = g.data() + static_cast<Eigen::Index>(o) * cols + static_cast<Eigen::Index>(yy) * wp;
        std::copy(src, src + wo, dst);
        for (int xx = 0; xx < wo; ++xx) db.data()[o] += src[xx];
      }
    }
    const std::vector<T> buf = detail::pad_sample(x, n, p, hp, wp, kw - 1);
    std::vector<T> dbuf(dx ? buf.size() : 0, T(0));
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        const std::ptrdiff_t off = ky * wp + kx;
        detail::ConstStridedMap<T> view(buf.data() + off, x.c(), cols, stride);
        const detail::RowMatrix<T> gw = g * view.transpose();
        for (int o = 0; o < w.n(); ++o) {
          for (int i = 0; i < w.c(); ++i) dw(o, i, ky, kx) += gw(o, i);
        }
        if (dx) {
          detail::StridedMap<T> dview(dbuf.data() + off, x.c(), cols, stride);
          dview.noalias() += detail::kernel_slice(w, ky, kx).transpose() * g;
        }
      }
    }
    if (dx) {
      for (int c = 0; c < x.c(); ++c) {
        for (int yy = 0; yy < x.h(); ++yy) {
          const T* src = dbuf.data() + (static_cast<std::size_t>(c) * hp + yy + p.top) * wp + p.left;
          std::copy(src, src + x.w(), &(*dx)(n, c, yy, 0));
        }
      }
    }
  }
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> y = x;
  y.flat() = y.flat().max(T(0));
  return y;
}

/// Gradient through relu given its output.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& y, const Tensor<T>& dy) {
  require_same_shape(y, dy, "relu_backward");
  Tensor<T> dx(dy.shape());
  dx.flat() = (y.flat() > T(0)).select(dy.flat(), T(0));
  return dx;
}

/// 2x2 max pooling with stride 2. `argmax` receives, per output element,
/// the flat input index of the selected value (first maximum in scan order).
template <typename T>
Tensor<T> maxpool2(const Tensor<T>& x, std::vector<int>* argmax = nullptr) {
  if (x.h() % 2 != 0 || x.w() % 2 != 0) throw ShapeError("maxpool2: odd spatial size " + x.shape_string());
  Tensor<T> y(x.n(), x.c(), x.h() / 2, x.w() / 2);
  if (argmax) argmax->assign(y.size(), 0);
  std::size_t k = 0;
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      for (int yy = 0; yy < y.h(); ++yy) {
        for (int xx = 0; xx < y.w(); ++xx, ++k) {
          int best = -1;
          T v = -std::numeric_limits<T>::infinity();
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const int idx = static_cast<int>(&x(n, c, 2 * yy + dy, 2 * xx + dx) - x.data());
              if (best < 0 || x.data()[idx] > v) {
                best = idx;
                v = x.data()[idx];
              }
            }
          }
          y.data()[k] = v;
          if (argmax) (*argmax)[k] = best;
        }
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> maxpool2_backward(const Tensor<T>& dy, const std::vector<int>& argmax, const typename Tensor<T>::Shape& in) {
  if (argmax.size() != dy.size()) throw ShapeError("maxpool2_backward: index map does not match gradient");
  Tensor<T> dx(in);
  for (std::size_t k = 0; k < dy.size(); ++k) dx.data()[argmax[k]] += dy.data()[k];
  return dx;
}

/// Nearest-neighbour x2 upsampling.
template <typename T>
Tensor<T> upsample2(const Tensor<T>& x) {
  Tensor<T> y(x.n(), x.c(), 2 * x.h(), 2 * x.w());
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      for (int yy = 0; yy < y.h(); ++yy) {
        for (int xx = 0; xx < y.w(); ++xx) y(n, c, yy, xx) = x(n, c, yy / 2, xx / 2);
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> upsample2_backward(const Tensor<T>& dy) {
  if (dy.h() % 2 != 0 || dy.w() % 2 != 0) throw ShapeError("upsample2_backward: odd size " + dy.shape_string());
  Tensor<T> dx(dy.n(), dy.c(), dy.h() / 2, dy.w() / 2);
  for (int n = 0; n < dy.n(); ++n) {
    for (int c = 0; c < dy.c(); ++c) {
      for (int yy = 0; yy < dy.h(); ++yy) {
        for (int xx = 0; xx < dy.w(); ++xx) dx(n, c, yy / 2, xx / 2) += dy(n, c, yy, xx);
      }
    }
  }
  return dx;
}

/// Channel concatenation [a, b].
template <typename T>
Tensor<T> concat(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.n() != b.n() || a.h() != b.h() || a.w() != b.w()) {
    throw ShapeError("concat: shape mismatch " + a.shape_string() + " vs " + b.shape_string());
  }
  Tensor<T> y(a.n(), a.c() + b.c(), a.h(), a.w());
  const std::size_t pa = a.c() * a.plane(), pb = b.c() * b.plane();
  for (int n = 0; n < a.n(); ++n) {
    std::copy(a.data() + n * pa, a.data() + (n + 1) * pa, y.data() + n * (pa + pb));
    std::copy(b.data() + n * pb, b.data() + (n + 1) * pb, y.data() + n * (pa + pb) + pa);
  }
  return y;
}

/// Splits a concat gradient into the parts for its first `ca` channels and the rest.
template <typename T>
void concat_backward(const Tensor<T>& dy, int ca, Tensor<T>& da, Tensor<T>& db) {
  if (ca < 0 || ca > dy.c()) throw ShapeError("concat_backward: split outside " + dy.shape_string());
  da = Tensor<T>(dy.n(), ca, dy.h(), dy.w());
  db = Tensor<T>(dy.n(), dy.c() - ca, dy.h(), dy.w());
  const std::size_t pa = da.c() * da.plane(), pb = db.c() * db.plane();
  for (int n = 0; n < dy.n(); ++n) {
    std::copy(dy.data() + n * (pa + pb), dy.data() + n * (pa + pb) + pa, da.data() + n * pa);
    std::copy(dy.data() + n * (pa + pb) + pa, dy.data() + (n + 1) * (pa + pb), db.data() + n * pb);
  }
}

/// Overlap weights R (out x in): input cell j spreads over output cells in
/// proportion to the overlap of their footprints; columns sum to one, so
/// resizing with R preserves sums.
template <typename T>
detail::RowMatrix<T> area_weights(int in, int out) {
  if (out < 1 || out > in) throw ShapeError("area resize must shrink: " + std::to_string(in) + " -> " + std::to_string(out));
  detail::RowMatrix<T> r = detail::RowMatrix<T>::Zero(out, in);
  for (int j = 0; j < in; ++j) {
    // Input cell j covers [j, j+1) * out / in in output units.
    const double a = static_cast<double>(j) * out / in, b = static_cast<double>(j + 1) * out / in;
    for (int i = static_cast<int>(std::floor(a)); i < out && i < b; ++i) {
      const double overlap = std::min(b, i + 1.0) - std::max(a, static_cast<double>(i));
      if (overlap > 0.0) r(i, j) = static_cast<T>(overlap * in / out);
    }
  }
  return r;
}

/// Sum-preserving area resize of every plane to out_h x out_w.
template <typename T>
Tensor<T> area_resize(const Tensor<T>& x, int out_h, int out_w) {
  const auto ry = area_weights<T>(x.h(), out_h);
  const auto rx = area_weights<T>(x.w(), out_w);
  Tensor<T> y(x.n(), x.c(), out_h, out_w);
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      Eigen::Map<const detail::RowMatrix<T>> in(&x(n, c, 0, 0), x.h(), x.w());
      Eigen::Map<detail::RowMatrix<T>> out(&y(n, c, 0, 0), out_h, out_w);
      out.noalias() = ry * in * rx.transpose();
    }
  }
  return y;
}

template <typename T>
Tensor<T> area_resize_backward(const Tensor<T>& dy, int in_h, int in_w) {
  const auto ry = area_weights<T>(in_h, dy.h());
  const auto rx = area_weights<T>(in_w, dy.w());
  Tensor<T> dx(dy.n(), dy.c(), in_h, in_w);
  for (int n = 0; n < dy.n(); ++n) {
    for (int c = 0; c < dy.c(); ++c) {
      Eigen::Map<const detail::RowMatrix<T>> g(&dy(n, c, 0, 0), dy.h(), dy.w());
      Eigen::Map<detail::RowMatrix<T>> out(&dx(n, c, 0, 0), in_h, in_w);
      out.noalias() = ry.transpose() * g * rx;
    }
  }
  return dx;
}

/// Mean over samples of the per-sample mean squared error over all C*H*W
/// entries. Writes d loss / d pred to `grad` when given.
template <typename T>
T mse_loss(const Tensor<T>& pred, const Tensor<T>& label, Tensor<T>* grad = nullptr) {
  require_same_shape(pred, label, "mse_loss");
  const T denom = static_cast<T>(pred.size());
  const auto diff = pred.flat() - label.flat();
  if (grad) {
    *grad = Tensor<T>(pred.shape());
    grad->flat() = (T(2) / denom) * diff;
  }
  return diff.square().sum() / denom;
}

}  // namespace gelforce::nn
