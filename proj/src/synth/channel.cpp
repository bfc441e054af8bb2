// SPDX-License-Identifier: Apache-2.0
#include "csiarm/synth/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "csiarm/error.hpp"

namespace csiarm::synth {
namespace {

constexpr double kMinLeg = 1e-9;

struct Path {
  double length;
  double amplitude;
};

bool uniform_grid(std::span<const double> f) {
  if (f.size() < 2) return true;
  const double step = f[1] - f[0];
  for (std::size_t k = 2; k < f.size(); ++k) {
    if (std::abs((f[k] - f[k - 1]) - step) > 1e-6 * std::abs(step)) return false;
  }
  return true;
}

void add_path(std::vector<std::complex<double>>& h, const Path& p, std::span<const double> freqs,
              bool uniform) {
  const double tau = p.length / kSpeedOfLight;
  const double w = -2.0 * std::numbers::pi * tau;
  if (uniform && freqs.size() > 1) {
    // Phasor recursion across the evenly spaced tones.
    std::complex<double> cur = std::polar(p.amplitude, w * freqs[0]);
    const std::complex<double> step = std::polar(1.0, w * (freqs[1] - freqs[0]));
    for (auto& v : h) {
      v += cur;
      cur *= step;
    }
  } else {
    for (std::size_t k = 0; k < freqs.size(); ++k) h[k] += std::polar(p.amplitude, w * freqs[k]);
  }
}

}  // namespace

std::vector<double> subcarrier_frequencies(const SceneConfig& scene) {
  std::vector<double> f(kSubcarriers);
  const double spacing = scene.bandwidth_hz / kSubcarriers;
  for (int k = -kSubcarriers / 2; k < kSubcarriers / 2; ++k) {
    f[static_cast<std::size_t>(k + kSubcarriers / 2)] = scene.carrier_hz + k * spacing;
  }
  return f;
}

double obstacle_gain(const SceneConfig& scene) {
  return std::pow(10.0, -scene.obstacle_attenuation_db / 20.0);
}

std::vector<std::complex<double>> channel_response_exact(const SceneConfig& scene,
                                                         std::span<const Scatterer> moving,
                                                         std::span<const double> freqs) {
  const double gain = obstacle_gain(scene);
  auto blocked = [&](Vec3 a, Vec3 b) {
    return scene.obstacle.has_value() && scene.obstacle->intersects_segment(a, b);
  };

  std::vector<std::complex<double>> h(freqs.size());
  const bool uniform = uniform_grid(freqs);

  const double d_los = distance(scene.tx_pos, scene.rx_pos);
  if (d_los < kMinLeg) fail(ErrorCode::DegenerateGeometry, "zero-length direct path");
  double a_los = 1.0 / d_los;
  if (blocked(scene.tx_pos, scene.rx_pos)) a_los *= gain;
  add_path(h, {d_los, a_los}, freqs, uniform);

  auto add_reflection = [&](const Scatterer& s, std::size_t index) {
    const double d1 = distance(scene.tx_pos, s.position);
    const double d2 = distance(s.position, scene.rx_pos);
    if (d1 < kMinLeg || d2 < kMinLeg) {
      fail(ErrorCode::DegenerateGeometry, "scatterer " + std::to_string(index) + " sits on an antenna");
    }
    double a = s.reflectivity / (d1 + d2);
    if (blocked(scene.tx_pos, s.position)) a *= gain;
    if (blocked(s.position, scene.rx_pos)) a *= gain;
    add_path(h, {d1 + d2, a}, freqs, uniform);
  };
  std::size_t index = 0;
  for (const Scatterer& s : scene.static_scatterers) add_reflection(s, index++);
  for (const Scatterer& s : moving) add_reflection(s, index++);
  return h;
}

std::vector<ComplexSample> channel_response(const SceneConfig& scene, std::span<const Scatterer> moving,
                                            std::span<const double> freqs) {
  const auto h = channel_response_exact(scene, moving, freqs);
  std::vector<ComplexSample> out(h.size());
  for (std::size_t k = 0; k < h.size(); ++k) {
    out[k] = {static_cast<float>(h[k].real()), static_cast<float>(h[k].imag())};
  }
  return out;
}

CsiRecording generate_recording(const SceneConfig& scene, const Trajectory& traj, std::size_t n_packets,
                                double rate_hz) {
  validate(scene);
  if (n_packets < 1) fail(ErrorCode::InvalidArgument, "n_packets must be >= 1");
  if (!(rate_hz > 0.0)) fail(ErrorCode::InvalidArgument, "rate_hz must be positive");

  const auto freqs = subcarrier_frequencies(scene);
  std::mt19937_64 rng(scene.seed);
  std::normal_distribution<double> noise(0.0, scene.noise_std / std::numbers::sqrt2);

  CsiRecording rec;
  rec.label = traj.action;
  rec.scenario_id = 1;
  rec.los = !(scene.obstacle && scene.obstacle->intersects_segment(scene.tx_pos, scene.rx_pos));
  rec.sample_rate_hz = static_cast<float>(rate_hz);
  rec.frames.resize(n_packets);

  for (std::size_t i = 0; i < n_packets; ++i) {
    const double t = static_cast<double>(i) / rate_hz;
    const auto moving = trajectory_at(traj, t);
    const auto h = channel_response_exact(scene, moving, freqs);

    CsiFrame& f = rec.frames[i];
    f.timestamp = t;
    f.seq = static_cast<std::uint32_t>(i);
    f.subcarriers.resize(h.size());
    double power = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) {
      std::complex<double> v = h[k];
      if (scene.noise_std > 0.0) {
        const double re = noise(rng);
        const double im = noise(rng);
        v += std::complex<double>(re, im);
      }
      f.subcarriers[k] = {static_cast<float>(v.real()), static_cast<float>(v.imag())};
      power += std::norm(v);
    }
    const double mean_power = power / static_cast<double>(h.size());
    f.rssi = static_cast<std::int16_t>(std::lround(10.0 * std::log10(std::max(mean_power, 1e-12)) - 30.0));
  }
  return rec;
}

}  // namespace csiarm::synth
