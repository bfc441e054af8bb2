// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "csiarm/error.hpp"

namespace csiarm::nn {

/// NHWC batch. Dense activations use h = w = 1.
template <typename T>
struct Tensor4 {
  int n = 0;
  int h = 0;
  int w = 0;
  int c = 0;
  std::vector<T> data;

  Tensor4() = default;
  Tensor4(int n_, int h_, int w_, int c_, T fill = T(0))
      : n(n_), h(h_), w(w_), c(c_), data(static_cast<std::size_t>(n_) * h_ * w_ * c_, fill) {}

  std::size_t size() const { return data.size(); }
  std::size_t sample_size() const { return static_cast<std::size_t>(h) * w * c; }
  T* sample(int i) { return data.data() + static_cast<std::size_t>(i) * sample_size(); }
  const T* sample(int i) const { return data.data() + static_cast<std::size_t>(i) * sample_size(); }

  T& at(int b, int y, int x, int ch) {
    return data[((static_cast<std::size_t>(b) * h + y) * w + x) * c + ch];
  }
  T at(int b, int y, int x, int ch) const {
    return data[((static_cast<std::size_t>(b) * h + y) * w + x) * c + ch];
  }

  bool same_shape(const Tensor4& o) const { return n == o.n && h == o.h && w == o.w && c == o.c; }
  std::string shape_string() const {
    return std::to_string(n) + "x" + std::to_string(h) + "x" + std::to_string(w) + "x" + std::to_string(c);
  }
};

template <typename T>
bool all_finite(const std::vector<T>& v) {
  for (T x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace csiarm::nn
