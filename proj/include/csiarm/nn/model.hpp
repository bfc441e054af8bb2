// SPDX-License-Identifier: Apache-2.0
//
// The fixed classifier topology:
//
//   Conv(f1) -> MaxPool -> Conv(f2) -> MaxPool -> Conv(f3) -> Flatten
//     -> Dense(d, ReLU) -> Dropout(p) -> Dense(classes, softmax)
//
// Every size is a ModelConfig knob. Convs are valid, stride 1, followed by
// ReLU unless conv_relu is off. Kernel penalties apply to conv and dense
// kernels, never to biases.
#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "csiarm/nn/ops.hpp"
#include "csiarm/nn/tensor.hpp"

namespace csiarm::nn {

struct ModelConfig {
  int input_h = 300;
  int input_w = 234;
  int input_c = 1;
  std::array<int, 3> filters{16, 32, 64};
  int kernel = 3;
  int pool = 2;
  int dense_units = 128;
  double dropout = 0.5;
  int classes = 4;
  double l1 = 1e-4;
  double l2 = 1e-4;
  bool conv_relu = true;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct LayerShape {
  std::string name;
  int h = 0;
  int w = 0;
  int c = 0;

  std::size_t size() const { return static_cast<std::size_t>(h) * w * c; }
  friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

/// Output shape after every layer, input first. Throws ShapeMismatch when
/// the chain collapses to an empty map.
std::vector<LayerShape> layer_shapes(const ModelConfig& cfg);
std::size_t parameter_count(const ModelConfig& cfg);

template <typename T>
struct Param {
  std::string name;
  std::vector<int> shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool regularized = false;
};

template <typename T>
class Cnn {
 public:
  explicit Cnn(const ModelConfig& cfg);

  /// He-uniform kernels (limit sqrt(6 / fan_in)), zero biases.
  void init(std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  std::vector<Param<T>>& params() { return params_; }
  const std::vector<Param<T>>& params() const { return params_; }
  Param<T>& param(const std::string& name);

  /// Logits for a batch shaped (B, input_h, input_w, input_c). Training mode
  /// applies dropout from `rng` and caches activations for backward().
  Tensor4<T> forward(const Tensor4<T>& x, bool training, std::mt19937_64* rng = nullptr);

  /// Gradients of mean cross-entropy plus kernel penalty for the last
  /// training forward. Overwrites every Param::grad; returns that loss.
  double backward(std::span<const int> targets);

  /// forward(training) + backward in one call.
  double loss_and_grad(const Tensor4<T>& x, std::span<const int> targets, std::mt19937_64& rng);

  /// Inference-mode probabilities, rows sum to 1.
  Tensor4<T> predict_proba(const Tensor4<T>& x);

  double penalty() const;

  /// Copies of all parameter values, in params() order.
  std::vector<std::vector<T>> snapshot() const;
  void restore(const std::vector<std::vector<T>>& values);

 private:
  ModelConfig cfg_;
  std::vector<LayerShape> shapes_;
  std::vector<Param<T>> params_;
  std::array<ConvShape, 3> conv_;
  PoolShape pool_;

  // Activations from the last training forward.
  bool cached_ = false;
  Tensor4<T> a0_, a1_, p1_, a2_, p2_, a3_, d1_, logits_;
  std::vector<std::uint32_t> arg1_, arg2_;
  std::vector<T> drop_mask_;
};

extern template class Cnn<float>;
extern template class Cnn<double>;

using CnnModel = Cnn<float>;

}  // namespace csiarm::nn
