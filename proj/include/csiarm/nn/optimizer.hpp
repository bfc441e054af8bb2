// SPDX-License-Identifier: Apache-2.0
//
// First-order update rules. With g the gradient, t the 1-based step:
//
//   sgd      p -= lr g
//   rmsprop  v = rho v + (1-rho) g^2;            p -= lr g / (sqrt(v) + eps)
//   adam     m = b1 m + (1-b1) g; v = b2 v + (1-b2) g^2
//            p -= lr (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
//   adagrad  a += g^2;                           p -= lr g / (sqrt(a) + eps)
//   nadam    m, v as adam;
//            p -= lr (b1 m / (1-b1^(t+1)) + (1-b1) g / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
//   adamax   m as adam; u = max(b2 u, |g|);      p -= lr / (1-b1^t) * m / (u + eps)
//
// Slot accumulators start at zero.
#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "csiarm/nn/model.hpp"

namespace csiarm::nn {

enum class OptimizerKind { Sgd, RmsProp, Adam, Adagrad, Nadam, Adamax };

inline constexpr std::array<OptimizerKind, 6> kAllOptimizers{OptimizerKind::Sgd,     OptimizerKind::RmsProp,
                                                             OptimizerKind::Adam,    OptimizerKind::Adagrad,
                                                             OptimizerKind::Nadam,   OptimizerKind::Adamax};

std::string_view to_string(OptimizerKind k);
/// Case-insensitive; throws UnknownOptimizer.
OptimizerKind parse_optimizer(std::string_view name);

struct OptimizerHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double rho = 0.9;
};

template <typename T>
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double lr, OptimizerHyper hyper = {});

  /// One update over parallel lists of parameter and gradient buffers. The
  /// first call fixes the slot layout; later calls must match it.
  void step(std::span<const std::span<T>> values, std::span<const std::span<const T>> grads);
  void step(std::vector<Param<T>>& params);

  OptimizerKind kind() const { return kind_; }
  double learning_rate() const { return lr_; }
  std::int64_t steps() const { return t_; }

 private:
  void update(std::span<T> p, std::span<const T> g, std::size_t slot, double bc1, double bc1_next, double bc2);

  OptimizerKind kind_;
  double lr_;
  OptimizerHyper h_;
  std::int64_t t_ = 0;
  std::vector<std::vector<T>> m_;  // first moment / adagrad accumulator / rmsprop average
  std::vector<std::vector<T>> v_;  // second moment / adamax infinity norm
};

extern template class Optimizer<float>;
extern template class Optimizer<double>;

}  // namespace csiarm::nn
