// SPDX-License-Identifier: Apache-2.0
//
// Single-bounce geometric multipath model:
//
//   H(f) = a_los e^{-j 2 pi f tau_los} + sum_k rho_k a_k e^{-j 2 pi f tau_k}
//
// with a = 1 / path length and tau = path length / c. Every path leg that
// crosses the obstacle is scaled by the configured attenuation.
#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "csiarm/csi/types.hpp"
#include "csiarm/synth/scene.hpp"
#include "csiarm/synth/trajectory.hpp"

namespace csiarm::synth {

inline constexpr double kSpeedOfLight = 299792458.0;

/// carrier + k * bandwidth / 256 for k = -128 ... 127.
std::vector<double> subcarrier_frequencies(const SceneConfig& scene);

/// Linear amplitude factor for the scene's obstacle attenuation.
double obstacle_gain(const SceneConfig& scene);

/// Noise-free response in double precision. `moving` is added to the scene's
/// static scatterers. Throws DegenerateGeometry on a zero-length path leg.
std::vector<std::complex<double>> channel_response_exact(const SceneConfig& scene,
                                                         std::span<const Scatterer> moving,
                                                         std::span<const double> freqs);

std::vector<ComplexSample> channel_response(const SceneConfig& scene, std::span<const Scatterer> moving,
                                            std::span<const double> freqs);

/// Frame i is sampled at t = i / rate_hz, with i.i.d. complex Gaussian noise
/// of total standard deviation noise_std on every subcarrier. Deterministic
/// in scene.seed. The recording is labeled with traj.action.
CsiRecording generate_recording(const SceneConfig& scene, const Trajectory& traj, std::size_t n_packets,
                                double rate_hz);

}  // namespace csiarm::synth
