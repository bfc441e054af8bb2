// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference checks of every layer's backward pass in double
// precision. Each check draws random small shapes, builds the scalar
// f = sum(r * layer(x)) for a random upstream r, and compares the analytic
// gradients with (f(x + h) - f(x - h)) / 2h element by element.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "csiarm/nn/model.hpp"
#include "csiarm/nn/ops.hpp"

namespace csiarm::testkit {

struct GradCheck {
  std::string layer;
  int instances = 0;
  double max_rel_err = 0.0;  // worst ||analytic - numeric|| / max(||analytic||, ||numeric||)
  int skipped_components = 0;  // model check only: components straddling a ReLU/max kink
  int total_components = 0;
};

inline double rel_err(const std::vector<double>& a, const std::vector<double>& n) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - n[i]) * (a[i] - n[i]);
    na += a[i] * a[i];
    nn += n[i] * n[i];
  }
  const double scale = std::max(std::sqrt(na), std::sqrt(nn));
  return scale < 1e-300 ? std::sqrt(diff) : std::sqrt(diff) / scale;
}

/// Numeric gradient of f with respect to every entry of `v`.
inline std::vector<double> numeric_grad(std::vector<double>& v, const std::function<double()>& f, double h = 1e-5) {
  std::vector<double> g(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double keep = v[i];
    v[i] = keep + h;
    const double up = f();
    v[i] = keep - h;
    const double down = f();
    v[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double weighted_sum(const nn::Tensor4<double>& y, const std::vector<double>& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += r[i] * y.data[i];
  return s;
}

inline std::vector<double> normal_vec(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

/// Values bounded away from zero so |.| and ReLU stay differentiable under +-h.
inline std::vector<double> off_zero_vec(std::mt19937_64& rng, std::size_t n, double lo = 0.05) {
  std::uniform_real_distribution<double> u(lo, 1.0);
  std::bernoulli_distribution s(0.5);
  std::vector<double> v(n);
  for (double& x : v) x = s(rng) ? u(rng) : -u(rng);
  return v;
}

inline int uni(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline GradCheck check_conv(int instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GradCheck out{"conv2d", 0, 0.0};
  while (out.instances < instances) {
    nn::ConvShape s;
    s.kh = uni(rng, 1, 3);
    s.kw = uni(rng, 1, 3);
    s.cin = uni(rng, 1, 3);
    s.cout = uni(rng, 1, 3);
    s.stride = uni(rng, 1, 2);
    s.pad = uni(rng, 0, 1);
    const int n = uni(rng, 1, 2), h = uni(rng, 3, 7), w = uni(rng, 3, 7);
    if (nn::conv_out_dim(h, s.kh, s.stride, s.pad) < 1 || nn::conv_out_dim(w, s.kw, s.stride, s.pad) < 1) continue;
    nn::Regularization reg{std::uniform_real_distribution<double>(0.0, 0.1)(rng),
                           std::uniform_real_distribution<double>(0.0, 0.1)(rng)};
    nn::Tensor4<double> x(n, h, w, s.cin);
    x.data = normal_vec(rng, x.size());
    std::vector<double> k = off_zero_vec(rng, s.kernel_size());
    std::vector<double> b = normal_vec(rng, static_cast<std::size_t>(s.cout));
    const nn::Tensor4<double> y0 = nn::conv2d_forward<double>(x, k, b, s);
    const std::vector<double> r = normal_vec(rng, y0.size());

    auto f = [&] {
      return weighted_sum(nn::conv2d_forward<double>(x, k, b, s), r) +
             nn::regularization_penalty<double>(std::span<const double>(k), reg);
    };
    nn::Tensor4<double> dy(y0.n, y0.h, y0.w, y0.c);
    dy.data = r;
    nn::Tensor4<double> dx;
    std::vector<double> dk(k.size(), 0.0), db(b.size(), 0.0);
    nn::conv2d_backward<double>(x, k, s, dy, &dx, dk, db, reg);

    out.max_rel_err = std::max({out.max_rel_err, rel_err(dx.data, numeric_grad(x.data, f)),
                                rel_err(dk, numeric_grad(k, f)), rel_err(db, numeric_grad(b, f))});
    ++out.instances;
  }
  return out;
}

inline GradCheck check_maxpool(int instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GradCheck out{"maxpool", 0, 0.0};
  while (out.instances < instances) {
    nn::PoolShape ps{uni(rng, 1, 3), uni(rng, 1, 3)};
    const int n = uni(rng, 1, 2), h = uni(rng, 2, 8), w = uni(rng, 2, 8), c = uni(rng, 1, 3);
    if (h < ps.size || w < ps.size) continue;
    nn::Tensor4<double> x(n, h, w, c);
    // Distinct values 0.01 apart: no window maximum changes under +-h.
    for (std::size_t i = 0; i < x.size(); ++i) x.data[i] = 0.01 * static_cast<double>(i);
    std::shuffle(x.data.begin(), x.data.end(), rng);
    std::vector<std::uint32_t> arg;
    const nn::Tensor4<double> y0 = nn::maxpool_forward<double>(x, ps, arg);
    const std::vector<double> r = normal_vec(rng, y0.size());
    auto f = [&] {
      std::vector<std::uint32_t> a;
      return weighted_sum(nn::maxpool_forward<double>(x, ps, a), r);
    };
    nn::Tensor4<double> dy(y0.n, y0.h, y0.w, y0.c);
    dy.data = r;
    const nn::Tensor4<double> dx = nn::maxpool_backward<double>(dy, arg, h, w);
    out.max_rel_err = std::max(out.max_rel_err, rel_err(dx.data, numeric_grad(x.data, f)));
    ++out.instances;
  }
  return out;
}

inline GradCheck check_dense(int instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GradCheck out{"dense", 0, 0.0};
  while (out.instances < instances) {
    const int n = uni(rng, 1, 3), in = uni(rng, 1, 12), units = uni(rng, 1, 6);
    nn::Regularization reg{std::uniform_real_distribution<double>(0.0, 0.1)(rng),
                           std::uniform_real_distribution<double>(0.0, 0.1)(rng)};
    // Input with a spatial shape: dense reads it flattened.
    nn::Tensor4<double> x(n, 1, in, 1);
    x.data = normal_vec(rng, x.size());
    std::vector<double> wt = off_zero_vec(rng, static_cast<std::size_t>(in) * units);
    std::vector<double> b = normal_vec(rng, static_cast<std::size_t>(units));
    const std::vector<double> r = normal_vec(rng, static_cast<std::size_t>(n) * units);
    auto f = [&] {
      return weighted_sum(nn::dense_forward<double>(x, wt, b, units), r) +
             nn::regularization_penalty<double>(std::span<const double>(wt), reg);
    };
    nn::Tensor4<double> dy(n, 1, 1, units);
    dy.data = r;
    nn::Tensor4<double> dx;
    std::vector<double> dw(wt.size(), 0.0), db(b.size(), 0.0);
    nn::dense_backward<double>(x, wt, dy, &dx, dw, db, reg);
    out.max_rel_err = std::max({out.max_rel_err, rel_err(dx.data, numeric_grad(x.data, f)),
                                rel_err(dw, numeric_grad(wt, f)), rel_err(db, numeric_grad(b, f))});
    ++out.instances;
  }
  return out;
}

inline GradCheck check_relu(int instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GradCheck out{"relu", 0, 0.0};
  for (; out.instances < instances; ++out.instances) {
    nn::Tensor4<double> x(uni(rng, 1, 3), uni(rng, 1, 5), uni(rng, 1, 5), uni(rng, 1, 3));
    x.data = off_zero_vec(rng, x.size(), 0.01);
    const std::vector<double> r = normal_vec(rng, x.size());
    auto f = [&] {
      nn::Tensor4<double> y = x;
      nn::relu_forward(y);
      return weighted_sum(y, r);
    };
    nn::Tensor4<double> y = x;
    nn::relu_forward(y);
    nn::Tensor4<double> dy(x.n, x.h, x.w, x.c);
    dy.data = r;
    nn::relu_backward(y, dy);
    out.max_rel_err = std::max(out.max_rel_err, rel_err(dy.data, numeric_grad(x.data, f)));
  }
  return out;
}

inline GradCheck check_dropout(int instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GradCheck out{"dropout", 0, 0.0};
  for (; out.instances < instances; ++out.instances) {
    nn::Tensor4<double> x(uni(rng, 1, 3), 1, 1, uni(rng, 1, 16));
    x.data = normal_vec(rng, x.size());
    const double p = std::uniform_real_distribution<double>(0.0, 0.9)(rng);
    const std::uint64_t mask_seed = rng();
    const std::vector<double> r = normal_vec(rng, x.size());
    auto f = [&] {
      nn::Tensor4<double> y = x;
      std::mt19937_64 mr(mask_seed);
      std::vector<double> m;
      nn::dropout_forward(y, p, true, mr, m);
      return weighted_sum(y, r);
    };
    nn::Tensor4<double> y = x;
    std::mt19937_64 mr(mask_seed);
    std::vector<double> mask;
    nn::dropout_forward(y, p, true, mr, mask);
    nn::Tensor4<double> dy(x.n, x.h, x.w, x.c);
    dy.data = r;
    nn::dropout_backward(mask, dy);
    out.max_rel_err = std::max(out.max_rel_err, rel_err(dy.data, numeric_grad(x.data, f)));
  }
  return out;
}

inline GradCheck check_softmax_ce(int instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GradCheck out{"softmax-crossentropy", 0, 0.0};
  for (; out.instances < instances; ++out.instances) {
    const int n = uni(rng, 1, 4), k = uni(rng, 2, 6);
    nn::Tensor4<double> z(n, 1, 1, k);
    z.data = normal_vec(rng, z.size());
    for (double& v : z.data) v *= 3.0;
    std::vector<int> t(static_cast<std::size_t>(n));
    for (int& v : t) v = uni(rng, 0, k - 1);
    auto f = [&] {
      nn::Tensor4<double> g;
      return nn::softmax_crossentropy_batch<double>(z, t, g);
    };
    nn::Tensor4<double> g;
    nn::softmax_crossentropy_batch<double>(z, t, g);
    out.max_rel_err = std::max(out.max_rel_err, rel_err(g.data, numeric_grad(z.data, f)));
  }
  return out;
}

/// Whole network in double: loss = mean CE + kernel penalty, gradients for
/// every parameter. Interior ReLUs and max-pools can sit within h of a kink;
/// such components are detected by disagreement between step h and h/4 and
/// excluded, and their number is reported.
inline GradCheck check_model(int instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GradCheck out{"model", 0, 0.0};
  for (; out.instances < instances; ++out.instances) {
    nn::ModelConfig cfg;
    cfg.input_h = uni(rng, 18, 21);
    cfg.input_w = uni(rng, 18, 21);
    cfg.input_c = 1;
    cfg.filters = {uni(rng, 1, 3), uni(rng, 1, 3), uni(rng, 1, 3)};
    cfg.dense_units = uni(rng, 2, 6);
    cfg.dropout = 0.3;
    cfg.l1 = 1e-3;
    cfg.l2 = 1e-3;
    nn::Cnn<double> model(cfg);
    model.init(rng());
    // Zero biases behind a dead layer leave pre-activations exactly on the
    // ReLU kink, where the one-sided analytic rule and the central difference
    // legitimately disagree.
    for (auto& p : model.params()) {
      if (!p.regularized) p.value = normal_vec(rng, p.value.size());
    }
    const int b = uni(rng, 1, 3);
    nn::Tensor4<double> x(b, cfg.input_h, cfg.input_w, 1);
    x.data = normal_vec(rng, x.size());
    std::vector<int> t(static_cast<std::size_t>(b));
    for (int& v : t) v = uni(rng, 0, cfg.classes - 1);
    const std::uint64_t drop_seed = rng();

    std::mt19937_64 r0(drop_seed);
    model.loss_and_grad(x, t, r0);
    std::vector<std::vector<double>> analytic;
    for (const auto& p : model.params()) analytic.push_back(p.grad);

    auto f = [&] {
      std::mt19937_64 r(drop_seed);
      const nn::Tensor4<double> logits = model.forward(x, true, &r);
      nn::Tensor4<double> g;
      return nn::softmax_crossentropy_batch<double>(logits, t, g) + model.penalty();
    };
    for (std::size_t pi = 0; pi < model.params().size(); ++pi) {
      std::vector<double>& v = model.params()[pi].value;
      const std::vector<double> coarse = numeric_grad(v, f, 1e-5);
      const std::vector<double> fine = numeric_grad(v, f, 2.5e-6);
      std::vector<double> a, n;
      for (std::size_t i = 0; i < v.size(); ++i) {
        ++out.total_components;
        const double scale = std::max({std::abs(coarse[i]), std::abs(fine[i]), 1e-6});
        if (std::abs(coarse[i] - fine[i]) > 1e-4 * scale) {
          ++out.skipped_components;
          continue;
        }
        a.push_back(analytic[pi][i]);
        n.push_back(coarse[i]);
      }
      out.max_rel_err = std::max(out.max_rel_err, rel_err(a, n));
    }
  }
  return out;
}

}  // namespace csiarm::testkit
