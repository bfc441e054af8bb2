// SPDX-License-Identifier: Apache-2.0
#include "csiarm/nn/model.hpp"

#include <cmath>

#include "csiarm/error.hpp"

namespace csiarm::nn {

std::vector<LayerShape> layer_shapes(const ModelConfig& cfg) {
  if (cfg.input_h < 1 || cfg.input_w < 1 || cfg.input_c < 1 || cfg.kernel < 1 || cfg.pool < 1 ||
      cfg.dense_units < 1 || cfg.classes < 2) {
    fail(ErrorCode::ShapeMismatch, "model sizes must be positive");
  }
  for (int f : cfg.filters) {
    if (f < 1) fail(ErrorCode::ShapeMismatch, "filter counts must be positive");
  }
  std::vector<LayerShape> out;
  LayerShape cur{"input", cfg.input_h, cfg.input_w, cfg.input_c};
  out.push_back(cur);
  auto push = [&](std::string name, int h, int w, int c) {
    if (h < 1 || w < 1) {
      fail(ErrorCode::ShapeMismatch, name + " output is empty for input " + std::to_string(cfg.input_h) + "x" +
                                         std::to_string(cfg.input_w));
    }
    cur = {std::move(name), h, w, c};
    out.push_back(cur);
  };
  auto conv = [&](const char* name, int filters) {
    push(name, conv_out_dim(cur.h, cfg.kernel, 1, 0), conv_out_dim(cur.w, cfg.kernel, 1, 0), filters);
  };
  auto pool = [&](const char* name) {
    push(name, cur.h < cfg.pool ? 0 : (cur.h - cfg.pool) / cfg.pool + 1,
         cur.w < cfg.pool ? 0 : (cur.w - cfg.pool) / cfg.pool + 1, cur.c);
  };
  conv("conv1", cfg.filters[0]);
  pool("pool1");
  conv("conv2", cfg.filters[1]);
  pool("pool2");
  conv("conv3", cfg.filters[2]);
  push("flatten", 1, 1, static_cast<int>(cur.size()));
  push("dense1", 1, 1, cfg.dense_units);
  push("dropout", 1, 1, cfg.dense_units);
  push("dense2", 1, 1, cfg.classes);
  return out;
}

std::size_t parameter_count(const ModelConfig& cfg) {
  const auto s = layer_shapes(cfg);
  const std::size_t k2 = static_cast<std::size_t>(cfg.kernel) * cfg.kernel;
  std::size_t n = 0;
  int cin = cfg.input_c;
  for (int f : cfg.filters) {
    n += k2 * cin * f + f;
    cin = f;
  }
  const std::size_t flat = s[6].size();
  n += flat * cfg.dense_units + cfg.dense_units;
  n += static_cast<std::size_t>(cfg.dense_units) * cfg.classes + cfg.classes;
  return n;
}

template <typename T>
Cnn<T>::Cnn(const ModelConfig& cfg) : cfg_(cfg), shapes_(layer_shapes(cfg)) {
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) fail(ErrorCode::InvalidArgument, "dropout must be in [0, 1)");
  pool_ = {cfg.pool, cfg.pool};
  int cin = cfg.input_c;
  for (int i = 0; i < 3; ++i) {
    conv_[i] = {cfg.kernel, cfg.kernel, cin, cfg.filters[i], 1, 0};
    const std::string base = "conv" + std::to_string(i + 1);
    params_.push_back({base + ".kernel", {cfg.kernel, cfg.kernel, cin, cfg.filters[i]},
                       std::vector<T>(conv_[i].kernel_size()), std::vector<T>(conv_[i].kernel_size()), true});
    params_.push_back({base + ".bias", {cfg.filters[i]}, std::vector<T>(cfg.filters[i]),
                       std::vector<T>(cfg.filters[i]), false});
    cin = cfg.filters[i];
  }
  const int flat = static_cast<int>(shapes_[6].size());
  const std::size_t d1 = static_cast<std::size_t>(flat) * cfg.dense_units;
  params_.push_back({"dense1.kernel", {flat, cfg.dense_units}, std::vector<T>(d1), std::vector<T>(d1), true});
  params_.push_back({"dense1.bias", {cfg.dense_units}, std::vector<T>(cfg.dense_units),
                     std::vector<T>(cfg.dense_units), false});
  const std::size_t d2 = static_cast<std::size_t>(cfg.dense_units) * cfg.classes;
  params_.push_back({"dense2.kernel", {cfg.dense_units, cfg.classes}, std::vector<T>(d2), std::vector<T>(d2), true});
  params_.push_back({"dense2.bias", {cfg.classes}, std::vector<T>(cfg.classes), std::vector<T>(cfg.classes), false});
}

template <typename T>
void Cnn<T>::init(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (Param<T>& p : params_) {
    if (!p.regularized) {
      std::fill(p.value.begin(), p.value.end(), T(0));
      continue;
    }
    // Fan-in is every dimension but the last (output) one.
    std::size_t fan_in = 1;
    for (std::size_t d = 0; d + 1 < p.shape.size(); ++d) fan_in *= static_cast<std::size_t>(p.shape[d]);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (T& v : p.value) v = static_cast<T>(u(rng));
  }
  cached_ = false;
}

template <typename T>
Param<T>& Cnn<T>::param(const std::string& name) {
  for (Param<T>& p : params_) {
    if (p.name == name) return p;
  }
  fail(ErrorCode::InvalidArgument, "no parameter named " + name);
}

template <typename T>
Tensor4<T> Cnn<T>::forward(const Tensor4<T>& x, bool training, std::mt19937_64* rng) {
  if (x.h != cfg_.input_h || x.w != cfg_.input_w || x.c != cfg_.input_c) {
    fail(ErrorCode::ShapeMismatch, "model expects " + std::to_string(cfg_.input_h) + "x" +
                                       std::to_string(cfg_.input_w) + "x" + std::to_string(cfg_.input_c) +
                                       " input, got " + x.shape_string());
  }
  if (training && !rng) fail(ErrorCode::InvalidArgument, "training forward needs an rng");
  auto span_of = [this](int i) { return std::span<const T>(params_[static_cast<std::size_t>(i)].value); };

  Tensor4<T> a1 = conv2d_forward<T>(x, span_of(0), span_of(1), conv_[0]);
  if (cfg_.conv_relu) relu_forward(a1);
  std::vector<std::uint32_t> arg1, arg2;
  Tensor4<T> p1 = maxpool_forward(a1, pool_, arg1);
  Tensor4<T> a2 = conv2d_forward<T>(p1, span_of(2), span_of(3), conv_[1]);
  if (cfg_.conv_relu) relu_forward(a2);
  Tensor4<T> p2 = maxpool_forward(a2, pool_, arg2);
  Tensor4<T> a3 = conv2d_forward<T>(p2, span_of(4), span_of(5), conv_[2]);
  if (cfg_.conv_relu) relu_forward(a3);
  Tensor4<T> d1 = dense_forward<T>(a3, span_of(6), span_of(7), cfg_.dense_units);
  relu_forward(d1);
  std::vector<T> mask;
  if (training) {
    dropout_forward(d1, cfg_.dropout, true, *rng, mask);
  }
  Tensor4<T> logits = dense_forward<T>(d1, span_of(8), span_of(9), cfg_.classes);

  if (training) {
    a0_ = x;
    a1_ = std::move(a1);
    p1_ = std::move(p1);
    a2_ = std::move(a2);
    p2_ = std::move(p2);
    a3_ = std::move(a3);
    d1_ = std::move(d1);
    arg1_ = std::move(arg1);
    arg2_ = std::move(arg2);
    drop_mask_ = std::move(mask);
    logits_ = logits;
    cached_ = true;
  } else {
    cached_ = false;
  }
  return logits;
}

template <typename T>
double Cnn<T>::backward(std::span<const int> targets) {
  if (!cached_) fail(ErrorCode::InvalidArgument, "backward() needs a preceding training forward()");
  for (Param<T>& p : params_) std::fill(p.grad.begin(), p.grad.end(), T(0));
  const Regularization reg{cfg_.l1, cfg_.l2};
  auto val = [this](int i) { return std::span<const T>(params_[static_cast<std::size_t>(i)].value); };
  auto grad = [this](int i) { return std::span<T>(params_[static_cast<std::size_t>(i)].grad); };

  Tensor4<T> g;
  const double ce = softmax_crossentropy_batch<T>(logits_, targets, g);

  Tensor4<T> g_d1;
  dense_backward<T>(d1_, val(8), g, &g_d1, grad(8), grad(9), reg);
  dropout_backward(drop_mask_, g_d1);
  relu_backward(d1_, g_d1);

  Tensor4<T> g_a3;
  dense_backward<T>(a3_, val(6), g_d1, &g_a3, grad(6), grad(7), reg);
  if (cfg_.conv_relu) relu_backward(a3_, g_a3);

  Tensor4<T> g_p2;
  conv2d_backward<T>(p2_, val(4), conv_[2], g_a3, &g_p2, grad(4), grad(5), reg);
  Tensor4<T> g_a2 = maxpool_backward(g_p2, arg2_, a2_.h, a2_.w);
  if (cfg_.conv_relu) relu_backward(a2_, g_a2);

  Tensor4<T> g_p1;
  conv2d_backward<T>(p1_, val(2), conv_[1], g_a2, &g_p1, grad(2), grad(3), reg);
  Tensor4<T> g_a1 = maxpool_backward(g_p1, arg1_, a1_.h, a1_.w);
  if (cfg_.conv_relu) relu_backward(a1_, g_a1);

  conv2d_backward<T>(a0_, val(0), conv_[0], g_a1, nullptr, grad(0), grad(1), reg);
  return ce + penalty();
}

template <typename T>
double Cnn<T>::loss_and_grad(const Tensor4<T>& x, std::span<const int> targets, std::mt19937_64& rng) {
  forward(x, true, &rng);
  return backward(targets);
}

template <typename T>
Tensor4<T> Cnn<T>::predict_proba(const Tensor4<T>& x) {
  Tensor4<T> logits = forward(x, false);
  Tensor4<T> probs(logits.n, 1, 1, logits.c);
  for (int b = 0; b < logits.n; ++b) {
    softmax<T>(std::span<const T>(logits.sample(b), logits.sample_size()),
               std::span<T>(probs.sample(b), probs.sample_size()));
  }
  return probs;
}

template <typename T>
double Cnn<T>::penalty() const {
  const Regularization reg{cfg_.l1, cfg_.l2};
  double s = 0.0;
  for (const Param<T>& p : params_) {
    if (p.regularized) s += regularization_penalty<T>(p.value, reg);
  }
  return s;
}

template <typename T>
std::vector<std::vector<T>> Cnn<T>::snapshot() const {
  std::vector<std::vector<T>> out;
  out.reserve(params_.size());
  for (const Param<T>& p : params_) out.push_back(p.value);
  return out;
}

template <typename T>
void Cnn<T>::restore(const std::vector<std::vector<T>>& values) {
  if (values.size() != params_.size()) fail(ErrorCode::ShapeMismatch, "snapshot has wrong parameter count");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].size() != params_[i].value.size()) {
      fail(ErrorCode::ShapeMismatch, "snapshot size mismatch for " + params_[i].name);
    }
    params_[i].value = values[i];
  }
  cached_ = false;
}

template class Cnn<float>;
template class Cnn<double>;

}  // namespace csiarm::nn
