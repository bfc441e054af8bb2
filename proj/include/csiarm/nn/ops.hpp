// SPDX-License-Identifier: Apache-2.0
//
// Layer primitives, forward and backward, for float (training, SIMD GEMM)
// and double (gradient checks, reference GEMM).
//
// Convolution is cross-correlation over NHWC input with kernels laid out
// [kh][kw][cin][cout], lowered per sample to im2col + GEMM.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "csiarm/error.hpp"
#include "csiarm/nn/tensor.hpp"
#include "csiarm/simd/kernels.hpp"
#include "csiarm/simd/reference.hpp"

namespace csiarm::nn {

// ---------------------------------------------------------------- GEMM glue

template <typename T>
struct Blas {
  static void nn(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc, bool acc) {
    simd::reference::gemm_nn(m, n, k, a, lda, b, ldb, c, ldc, acc);
  }
  static void tn(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc, bool acc) {
    simd::reference::gemm_tn(m, n, k, a, lda, b, ldb, c, ldc, acc);
  }
  static void nt(int m, int n, int k, const T* a, int lda, const T* b, int ldb, T* c, int ldc, bool acc) {
    simd::reference::gemm_nt(m, n, k, a, lda, b, ldb, c, ldc, acc);
  }
};

template <>
struct Blas<float> {
  static void nn(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc,
                 bool acc) {
    simd::active().gemm_nn(m, n, k, a, lda, b, ldb, c, ldc, acc);
  }
  static void tn(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc,
                 bool acc) {
    simd::active().gemm_tn(m, n, k, a, lda, b, ldb, c, ldc, acc);
  }
  static void nt(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc,
                 bool acc) {
    simd::active().gemm_nt(m, n, k, a, lda, b, ldb, c, ldc, acc);
  }
};

// ------------------------------------------------------------ regularizers

struct Regularization {
  double l1 = 0.0;
  double l2 = 0.0;

  bool enabled() const { return l1 != 0.0 || l2 != 0.0; }
};

/// l1 * sum|k| + l2 * sum k^2
template <typename T>
double regularization_penalty(std::span<const T> k, const Regularization& reg) {
  if (!reg.enabled()) return 0.0;
  double a = 0.0, s = 0.0;
  for (T v : k) {
    a += std::abs(static_cast<double>(v));
    s += static_cast<double>(v) * v;
  }
  return reg.l1 * a + reg.l2 * s;
}

/// grad += l1 * sign(k) + 2 * l2 * k, with sign(0) = 0.
template <typename T>
void add_regularization_grad(std::span<const T> k, std::span<T> grad, const Regularization& reg) {
  if (!reg.enabled()) return;
  const T l1 = static_cast<T>(reg.l1);
  const T l2x2 = static_cast<T>(2.0 * reg.l2);
  const T* kp = k.data();
  T* gp = grad.data();
  for (std::size_t i = 0; i < k.size(); ++i) {
    const T s = static_cast<T>(kp[i] > T(0)) - static_cast<T>(kp[i] < T(0));
    gp[i] += l1 * s + l2x2 * kp[i];
  }
}

// ------------------------------------------------------------------- conv

struct ConvShape {
  int kh = 3;
  int kw = 3;
  int cin = 1;
  int cout = 1;
  int stride = 1;
  int pad = 0;

  std::size_t kernel_size() const { return static_cast<std::size_t>(kh) * kw * cin * cout; }
  int patch() const { return kh * kw * cin; }
};

/// floor((in - k + 2 pad) / stride) + 1; 0 when the kernel does not fit.
constexpr int conv_out_dim(int in, int k, int stride, int pad) {
  const int span = in + 2 * pad - k;
  return span < 0 ? 0 : span / stride + 1;
}

namespace detail {

/// Rows are output pixels (oy, ox), columns [ky][kx][ci]. Out-of-range taps are zero.
template <typename T>
void im2col(const T* x, int h, int w, const ConvShape& s, int oh, int ow, T* cols) {
  const int patch = s.patch();
  const int run = s.kw * s.cin;
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      T* row = cols + (static_cast<std::size_t>(oy) * ow + ox) * patch;
      const int y0 = oy * s.stride - s.pad;
      const int x0 = ox * s.stride - s.pad;
      const bool inside = x0 >= 0 && x0 + s.kw <= w;
      for (int ky = 0; ky < s.kh; ++ky) {
        const int y = y0 + ky;
        T* dst = row + ky * run;
        if (y < 0 || y >= h) {
          std::fill_n(dst, run, T(0));
        } else if (inside) {
          std::copy_n(x + (static_cast<std::size_t>(y) * w + x0) * s.cin, run, dst);
        } else {
          for (int kx = 0; kx < s.kw; ++kx) {
            const int xx = x0 + kx;
            if (xx < 0 || xx >= w) {
              std::fill_n(dst + kx * s.cin, s.cin, T(0));
            } else {
              std::copy_n(x + (static_cast<std::size_t>(y) * w + xx) * s.cin, s.cin, dst + kx * s.cin);
            }
          }
        }
      }
    }
  }
}

/// Adjoint of im2col: scatters patch gradients back onto the input grid.
template <typename T>
void col2im(const T* cols, int h, int w, const ConvShape& s, int oh, int ow, T* dx) {
  const int patch = s.patch();
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      const T* row = cols + (static_cast<std::size_t>(oy) * ow + ox) * patch;
      const int y0 = oy * s.stride - s.pad;
      const int x0 = ox * s.stride - s.pad;
      for (int ky = 0; ky < s.kh; ++ky) {
        const int y = y0 + ky;
        if (y < 0 || y >= h) continue;
        for (int kx = 0; kx < s.kw; ++kx) {
          const int xx = x0 + kx;
          if (xx < 0 || xx >= w) continue;
          T* dst = dx + (static_cast<std::size_t>(y) * w + xx) * s.cin;
          const T* src = row + (ky * s.kw + kx) * s.cin;
          for (int ci = 0; ci < s.cin; ++ci) dst[ci] += src[ci];
        }
      }
    }
  }
}

inline void check_conv(int c, std::size_t ksize, std::size_t bsize, const ConvShape& s) {
  if (c != s.cin) {
    fail(ErrorCode::ShapeMismatch, "conv input has " + std::to_string(c) + " channels, kernel expects " +
                                       std::to_string(s.cin));
  }
  if (ksize != s.kernel_size() || bsize != static_cast<std::size_t>(s.cout)) {
    fail(ErrorCode::ShapeMismatch, "conv kernel/bias size does not match its shape");
  }
  if (s.stride < 1 || s.pad < 0 || s.kh < 1 || s.kw < 1) fail(ErrorCode::ShapeMismatch, "bad conv geometry");
}

}  // namespace detail

template <typename T>
Tensor4<T> conv2d_forward(const Tensor4<T>& x, std::span<const T> kernel, std::span<const T> bias,
                          const ConvShape& s) {
  detail::check_conv(x.c, kernel.size(), bias.size(), s);
  const int oh = conv_out_dim(x.h, s.kh, s.stride, s.pad);
  const int ow = conv_out_dim(x.w, s.kw, s.stride, s.pad);
  if (oh < 1 || ow < 1) fail(ErrorCode::ShapeMismatch, "conv kernel larger than input " + x.shape_string());
  Tensor4<T> y(x.n, oh, ow, s.cout);
  const int p = oh * ow;
  std::vector<T> cols(static_cast<std::size_t>(p) * s.patch());
  for (int b = 0; b < x.n; ++b) {
    detail::im2col(x.sample(b), x.h, x.w, s, oh, ow, cols.data());
    T* out = y.sample(b);
    for (int i = 0; i < p; ++i) std::copy(bias.begin(), bias.end(), out + static_cast<std::size_t>(i) * s.cout);
    Blas<T>::nn(p, s.cout, s.patch(), cols.data(), s.patch(), kernel.data(), s.cout, out, s.cout, true);
  }
  return y;
}

/// Accumulates into dkernel/dbias (callers zero them per batch). dx may be
/// null to skip the input gradient. `reg` adds the kernel penalty gradient once.
template <typename T>
void conv2d_backward(const Tensor4<T>& x, std::span<const T> kernel, const ConvShape& s, const Tensor4<T>& dy,
                     Tensor4<T>* dx, std::span<T> dkernel, std::span<T> dbias, const Regularization& reg = {}) {
  detail::check_conv(x.c, kernel.size(), dbias.size(), s);
  const int oh = conv_out_dim(x.h, s.kh, s.stride, s.pad);
  const int ow = conv_out_dim(x.w, s.kw, s.stride, s.pad);
  if (dy.n != x.n || dy.h != oh || dy.w != ow || dy.c != s.cout || dkernel.size() != kernel.size()) {
    fail(ErrorCode::ShapeMismatch, "conv upstream gradient " + dy.shape_string() + " does not match forward");
  }
  const int p = oh * ow;
  const int patch = s.patch();
  std::vector<T> cols(static_cast<std::size_t>(p) * patch);
  std::vector<T> kt;
  if (dx) {
    *dx = Tensor4<T>(x.n, x.h, x.w, x.c);
    kt.resize(kernel.size());
    for (int r = 0; r < patch; ++r) {
      for (int o = 0; o < s.cout; ++o) {
        kt[static_cast<std::size_t>(o) * patch + r] = kernel[static_cast<std::size_t>(r) * s.cout + o];
      }
    }
  }
  for (int b = 0; b < x.n; ++b) {
    const T* g = dy.sample(b);
    detail::im2col(x.sample(b), x.h, x.w, s, oh, ow, cols.data());
    Blas<T>::tn(p, s.cout, patch, cols.data(), patch, g, s.cout, dkernel.data(), s.cout, true);
    for (int i = 0; i < p; ++i) {
      const T* gr = g + static_cast<std::size_t>(i) * s.cout;
      for (int o = 0; o < s.cout; ++o) dbias[static_cast<std::size_t>(o)] += gr[o];
    }
    if (dx) {
      Blas<T>::nn(p, patch, s.cout, g, s.cout, kt.data(), patch, cols.data(), patch, false);
      detail::col2im(cols.data(), x.h, x.w, s, oh, ow, dx->sample(b));
    }
  }
  add_regularization_grad<T>(kernel, dkernel, reg);
}

// ---------------------------------------------------------------- maxpool

struct PoolShape {
  int size = 2;
  int stride = 2;
};

/// Window maxima; `argmax` receives the flat input index feeding each output
/// (first occurrence wins on ties).
template <typename T>
Tensor4<T> maxpool_forward(const Tensor4<T>& x, const PoolShape& ps, std::vector<std::uint32_t>& argmax) {
  if (ps.size < 1 || ps.stride < 1 || x.h < ps.size || x.w < ps.size) {
    fail(ErrorCode::ShapeMismatch, "pool window larger than input " + x.shape_string());
  }
  const int oh = (x.h - ps.size) / ps.stride + 1;
  const int ow = (x.w - ps.size) / ps.stride + 1;
  Tensor4<T> y(x.n, oh, ow, x.c);
  argmax.assign(y.size(), 0);
  std::size_t o = 0;
  for (int b = 0; b < x.n; ++b) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        for (int ch = 0; ch < x.c; ++ch, ++o) {
          const std::size_t corner =
              ((static_cast<std::size_t>(b) * x.h + oy * ps.stride) * x.w + ox * ps.stride) * x.c + ch;
          T best = x.data[corner];
          std::size_t at = corner;
          for (int dy = 0; dy < ps.size; ++dy) {
            for (int dx = 0; dx < ps.size; ++dx) {
              const std::size_t idx = corner + (static_cast<std::size_t>(dy) * x.w + dx) * x.c;
              if (x.data[idx] > best) {
                best = x.data[idx];
                at = idx;
              }
            }
          }
          y.data[o] = best;
          argmax[o] = static_cast<std::uint32_t>(at);
        }
      }
    }
  }
  return y;
}

template <typename T>
Tensor4<T> maxpool_backward(const Tensor4<T>& dy, const std::vector<std::uint32_t>& argmax, int in_h, int in_w) {
  if (argmax.size() != dy.size()) fail(ErrorCode::ShapeMismatch, "pool routing does not match gradient");
  Tensor4<T> dx(dy.n, in_h, in_w, dy.c);
  for (std::size_t o = 0; o < dy.size(); ++o) dx.data[argmax[o]] += dy.data[o];
  return dx;
}

// ------------------------------------------------------------------ dense

/// y[b] = x[b] . W + bias with W stored [in][out]; x is read as B x (h*w*c).
template <typename T>
Tensor4<T> dense_forward(const Tensor4<T>& x, std::span<const T> weight, std::span<const T> bias, int out) {
  const int in = static_cast<int>(x.sample_size());
  if (weight.size() != static_cast<std::size_t>(in) * out || bias.size() != static_cast<std::size_t>(out)) {
    fail(ErrorCode::ShapeMismatch, "dense weight does not match input " + x.shape_string());
  }
  Tensor4<T> y(x.n, 1, 1, out);
  for (int b = 0; b < x.n; ++b) std::copy(bias.begin(), bias.end(), y.sample(b));
  Blas<T>::nn(x.n, out, in, x.data.data(), in, weight.data(), out, y.data.data(), out, true);
  return y;
}

/// Accumulates dW and db; dx (same shape as x) is skipped when null.
template <typename T>
void dense_backward(const Tensor4<T>& x, std::span<const T> weight, const Tensor4<T>& dy, Tensor4<T>* dx,
                    std::span<T> dweight, std::span<T> dbias, const Regularization& reg = {}) {
  const int in = static_cast<int>(x.sample_size());
  const int out = dy.c;
  if (dy.n != x.n || weight.size() != static_cast<std::size_t>(in) * out || dweight.size() != weight.size() ||
      dbias.size() != static_cast<std::size_t>(out)) {
    fail(ErrorCode::ShapeMismatch, "dense gradient shapes do not match forward");
  }
  Blas<T>::tn(x.n, out, in, x.data.data(), in, dy.data.data(), out, dweight.data(), out, true);
  for (int b = 0; b < dy.n; ++b) {
    for (int o = 0; o < out; ++o) dbias[static_cast<std::size_t>(o)] += dy.sample(b)[o];
  }
  if (dx) {
    *dx = Tensor4<T>(x.n, x.h, x.w, x.c);
    Blas<T>::nt(x.n, in, out, dy.data.data(), out, weight.data(), out, dx->data.data(), in, false);
  }
  add_regularization_grad<T>(weight, dweight, reg);
}

// ------------------------------------------------------------ activations

template <typename T>
void relu_forward(Tensor4<T>& x) {
  for (T& v : x.data) v = v > T(0) ? v : T(0);
}

/// `y` is the forward output; the gradient passes where y > 0.
template <typename T>
void relu_backward(const Tensor4<T>& y, Tensor4<T>& dy) {
  if (!y.same_shape(dy)) fail(ErrorCode::ShapeMismatch, "relu gradient shape");
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(y.data[i] > T(0))) dy.data[i] = T(0);
  }
}

/// Inverted dropout. Training: zero with probability p, survivors scaled by
/// 1/(1-p); `mask` keeps the per-element factor. Inference: identity.
template <typename T>
void dropout_forward(Tensor4<T>& x, double p, bool training, std::mt19937_64& rng, std::vector<T>& mask) {
  if (!(p >= 0.0 && p < 1.0)) fail(ErrorCode::InvalidArgument, "dropout rate must be in [0, 1)");
  if (!training || p == 0.0) {
    mask.assign(x.size(), T(1));
    return;
  }
  std::bernoulli_distribution keep(1.0 - p);
  const T scale = static_cast<T>(1.0 / (1.0 - p));
  mask.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask[i] = keep(rng) ? scale : T(0);
    x.data[i] *= mask[i];
  }
}

template <typename T>
void dropout_backward(const std::vector<T>& mask, Tensor4<T>& dy) {
  if (mask.size() != dy.size()) fail(ErrorCode::ShapeMismatch, "dropout mask shape");
  for (std::size_t i = 0; i < dy.size(); ++i) dy.data[i] *= mask[i];
}

// ------------------------------------------------------ softmax + loss

/// Numerically stable softmax over one row.
template <typename T>
void softmax(std::span<const T> logits, std::span<T> probs) {
  const T m = *std::max_element(logits.begin(), logits.end());
  T sum = T(0);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - m);
    sum += probs[i];
  }
  for (T& p : probs) p /= sum;
}

/// Cross-entropy of softmax(logits) against a one-hot target, computed
/// through log-sum-exp. grad = softmax(logits) - onehot.
template <typename T>
T softmax_crossentropy(std::span<const T> logits, int target, std::span<T> grad) {
  if (target < 0 || static_cast<std::size_t>(target) >= logits.size() || grad.size() != logits.size()) {
    fail(ErrorCode::ShapeMismatch, "target class out of range");
  }
  const T m = *std::max_element(logits.begin(), logits.end());
  T sum = T(0);
  for (T z : logits) sum += std::exp(z - m);
  const T lse = m + std::log(sum);
  for (std::size_t i = 0; i < logits.size(); ++i) grad[i] = std::exp(logits[i] - lse);
  grad[static_cast<std::size_t>(target)] -= T(1);
  return lse - logits[static_cast<std::size_t>(target)];
}

/// Mean loss over the batch; `grad` holds d(mean loss)/d(logits).
template <typename T>
T softmax_crossentropy_batch(const Tensor4<T>& logits, std::span<const int> targets, Tensor4<T>& grad) {
  if (targets.size() != static_cast<std::size_t>(logits.n)) fail(ErrorCode::ShapeMismatch, "one target per row");
  grad = Tensor4<T>(logits.n, logits.h, logits.w, logits.c);
  const std::size_t k = logits.sample_size();
  T total = T(0);
  const T inv = T(1) / static_cast<T>(logits.n);
  for (int b = 0; b < logits.n; ++b) {
    std::span<T> g(grad.sample(b), k);
    total += softmax_crossentropy<T>(std::span<const T>(logits.sample(b), k), targets[static_cast<std::size_t>(b)], g);
    for (T& v : g) v *= inv;
  }
  return total * inv;
}

}  // namespace csiarm::nn
