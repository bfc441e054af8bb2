// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <vector>

namespace csiarm::testkit {

struct OracleMetrics {
  std::array<double, 4> p{}, r{}, f{};
  std::array<bool, 4> p_undef{}, r_undef{};
  double accuracy = 0.0, macro_r = 0.0;
};

// Counting from scratch, no shared code with the library.
inline OracleMetrics metrics_oracle(const std::vector<int>& pred, const std::vector<int>& truth) {
  OracleMetrics o;
  int correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == truth[i];
  o.accuracy = 100.0 * correct / static_cast<double>(pred.size());
  for (int c = 0; c < 4; ++c) {
    int tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      tp += pred[i] == c && truth[i] == c;
      fp += pred[i] == c && truth[i] != c;
      fn += pred[i] != c && truth[i] == c;
    }
    o.p_undef[c] = tp + fp == 0;
    o.r_undef[c] = tp + fn == 0;
    o.p[c] = o.p_undef[c] ? 0.0 : 100.0 * tp / (tp + fp);
    o.r[c] = o.r_undef[c] ? 0.0 : 100.0 * tp / (tp + fn);
    o.f[c] = o.p[c] + o.r[c] == 0.0 ? 0.0 : 2.0 * o.p[c] * o.r[c] / (o.p[c] + o.r[c]);
    o.macro_r += o.r[c] / 4.0;
  }
  return o;
}

}  // namespace csiarm::testkit
