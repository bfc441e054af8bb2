// SPDX-License-Identifier: Apache-2.0
#include "csiarm/nn/optimizer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "csiarm/error.hpp"

namespace csiarm::nn {

std::string_view to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::Sgd: return "sgd";
    case OptimizerKind::RmsProp: return "rmsprop";
    case OptimizerKind::Adam: return "adam";
    case OptimizerKind::Adagrad: return "adagrad";
    case OptimizerKind::Nadam: return "nadam";
    case OptimizerKind::Adamax: return "adamax";
  }
  return "?";
}

OptimizerKind parse_optimizer(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (OptimizerKind k : kAllOptimizers) {
    if (lower == to_string(k)) return k;
  }
  fail(ErrorCode::UnknownOptimizer, "unknown optimizer '" + std::string(name) + "'");
}

template <typename T>
Optimizer<T>::Optimizer(OptimizerKind kind, double lr, OptimizerHyper hyper) : kind_(kind), lr_(lr), h_(hyper) {
  if (!(lr > 0.0) || !std::isfinite(lr)) fail(ErrorCode::InvalidArgument, "learning rate must be positive");
}

template <typename T>
void Optimizer<T>::step(std::span<const std::span<T>> values, std::span<const std::span<const T>> grads) {
  if (values.size() != grads.size()) fail(ErrorCode::ShapeMismatch, "one gradient per parameter");
  if (m_.empty()) {
    m_.resize(values.size());
    v_.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      m_[i].assign(values[i].size(), T(0));
      if (kind_ != OptimizerKind::Sgd && kind_ != OptimizerKind::RmsProp && kind_ != OptimizerKind::Adagrad) {
        v_[i].assign(values[i].size(), T(0));
      }
    }
  } else if (m_.size() != values.size()) {
    fail(ErrorCode::ShapeMismatch, "parameter list changed between steps");
  }
  ++t_;
  const double t = static_cast<double>(t_);
  const double bc1 = 1.0 - std::pow(h_.beta1, t);
  const double bc1_next = 1.0 - std::pow(h_.beta1, t + 1.0);
  const double bc2 = 1.0 - std::pow(h_.beta2, t);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].size() != grads[i].size() || values[i].size() != m_[i].size()) {
      fail(ErrorCode::ShapeMismatch, "gradient " + std::to_string(i) + " does not match its parameter");
    }
    update(values[i], grads[i], i, bc1, bc1_next, bc2);
  }
}

template <typename T>
void Optimizer<T>::step(std::vector<Param<T>>& params) {
  std::vector<std::span<T>> values;
  std::vector<std::span<const T>> grads;
  values.reserve(params.size());
  grads.reserve(params.size());
  for (Param<T>& p : params) {
    values.emplace_back(p.value);
    grads.emplace_back(p.grad);
  }
  step(values, grads);
}

template <typename T>
void Optimizer<T>::update(std::span<T> p, std::span<const T> g, std::size_t slot, double bc1, double bc1_next,
                          double bc2) {
  // Scalars are formed in double, then the elementwise loops run in T so
  // they vectorize for float.
  const T lr = static_cast<T>(lr_), b1 = static_cast<T>(h_.beta1), b2 = static_cast<T>(h_.beta2);
  const T eps = static_cast<T>(h_.eps), rho = static_cast<T>(h_.rho);
  const T c1 = static_cast<T>(bc1), c1n = static_cast<T>(bc1_next), c2 = static_cast<T>(bc2);
  const T one = T(1);
  T* pp = p.data();
  const T* gp = g.data();
  T* m = m_[slot].data();
  T* v = v_[slot].data();
  const std::size_t n = p.size();
  switch (kind_) {
    case OptimizerKind::Sgd:
      for (std::size_t i = 0; i < n; ++i) pp[i] -= lr * gp[i];
      break;
    case OptimizerKind::RmsProp:
      for (std::size_t i = 0; i < n; ++i) {
        m[i] = rho * m[i] + (one - rho) * gp[i] * gp[i];
        pp[i] -= lr * gp[i] / (std::sqrt(m[i]) + eps);
      }
      break;
    case OptimizerKind::Adam:
      for (std::size_t i = 0; i < n; ++i) {
        m[i] = b1 * m[i] + (one - b1) * gp[i];
        v[i] = b2 * v[i] + (one - b2) * gp[i] * gp[i];
        pp[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
      }
      break;
    case OptimizerKind::Adagrad:
      for (std::size_t i = 0; i < n; ++i) {
        m[i] += gp[i] * gp[i];
        pp[i] -= lr * gp[i] / (std::sqrt(m[i]) + eps);
      }
      break;
    case OptimizerKind::Nadam:
      for (std::size_t i = 0; i < n; ++i) {
        m[i] = b1 * m[i] + (one - b1) * gp[i];
        v[i] = b2 * v[i] + (one - b2) * gp[i] * gp[i];
        const T mbar = b1 * m[i] / c1n + (one - b1) * gp[i] / c1;
        pp[i] -= lr * mbar / (std::sqrt(v[i] / c2) + eps);
      }
      break;
    case OptimizerKind::Adamax:
      for (std::size_t i = 0; i < n; ++i) {
        m[i] = b1 * m[i] + (one - b1) * gp[i];
        v[i] = std::max(b2 * v[i], std::abs(gp[i]));
        pp[i] -= (lr / c1) * m[i] / (v[i] + eps);
      }
      break;
  }
}

template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace csiarm::nn
