// SPDX-License-Identifier: Apache-2.0
//
// CSI recording -> amplitude -> subcarrier filter -> windowed samples.
//
// Sample tensors use the layout data[v][u][w]: V frontal slices of U packets
// by W' retained subcarriers, each slice contiguous. Everything here is
// deterministic.
#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "csiarm/csi/types.hpp"

namespace csiarm::pipeline {

inline constexpr int kRemovedCount = 22;
inline constexpr int kRetainedSubcarriers = kSubcarriers - kRemovedCount;  // 234
inline constexpr int kDefaultWindow = 300;

/// 802.11ac 80 MHz tone map, in tone indices -128..127 (bin = tone + 128).
inline constexpr std::array<int, kRemovedCount> kRemovedTones{
    // lower guard
    -128, -127, -126, -125, -124, -123,
    // pilots
    -103, -75, -39, -11,
    // DC nulls
    -1, 0, 1,
    // pilots
    11, 39, 75, 103,
    // upper guard
    123, 124, 125, 126, 127};

/// Ascending FFT-bin indices kept by filter_subcarriers (234 of them).
const std::array<int, kRetainedSubcarriers>& retained_bins();
bool is_removed_bin(int bin);

struct AmplitudeMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major
  std::optional<ActionClass> label;
  std::uint8_t scenario_id = 1;
  bool los = true;

  double at(std::size_t n, std::size_t w) const { return data[n * cols + w]; }
  std::span<const double> row(std::size_t n) const { return {data.data() + n * cols, cols}; }

  friend bool operator==(const AmplitudeMatrix&, const AmplitudeMatrix&) = default;
};

/// |H[n][w]| for every packet and subcarrier.
AmplitudeMatrix amplitude(const CsiRecording& rec);

/// 256 -> 234. Throws LengthMismatch for any other input length.
std::vector<double> filter_subcarriers(std::span<const double> row);
void filter_subcarriers(std::span<const double> row, std::span<double> out);

/// Applies filter_subcarriers to every row.
AmplitudeMatrix filter_rows(const AmplitudeMatrix& amp);

struct SampleTensor {
  std::size_t window = 0;    // U
  std::size_t width = 0;     // W'
  std::size_t count = 0;     // V
  std::size_t stride = 0;
  std::vector<double> data;  // [v][u][w]
  std::optional<ActionClass> label;
  std::uint8_t scenario_id = 1;
  bool los = true;

  std::span<const double> slice(std::size_t v) const {
    return {data.data() + v * window * width, window * width};
  }
};

/// V = floor((N - window) / stride) + 1 windows starting at v * stride.
/// Accepts raw 256-wide amplitudes (filtered here) or already filtered
/// 234-wide ones. Throws WindowTooLarge when window > N.
SampleTensor tensorize(const AmplitudeMatrix& amp, std::size_t window = kDefaultWindow,
                       std::size_t stride = kDefaultWindow);

/// Concatenates frontal slices back into a (V * window) x W' matrix.
/// Throws NotInvertible for overlapping or gapped windows.
AmplitudeMatrix matrixize(const SampleTensor& t);

struct SampleInfo {
  ActionClass label = ActionClass::Silence;
  std::uint8_t scenario_id = 1;
  bool los = true;

  friend bool operator==(const SampleInfo&, const SampleInfo&) = default;
};

/// Float32 samples of identical shape, stored back to back.
struct LabeledDataset {
  std::size_t window = 0;
  std::size_t width = 0;
  std::vector<float> data;
  std::vector<SampleInfo> info;

  std::size_t size() const { return info.size(); }
  std::size_t sample_size() const { return window * width; }
  std::span<const float> sample(std::size_t i) const { return {data.data() + i * sample_size(), sample_size()}; }
  std::span<float> sample(std::size_t i) { return {data.data() + i * sample_size(), sample_size()}; }

  std::array<std::size_t, kNumClasses> class_counts() const;
  LabeledDataset subset(std::span<const std::size_t> indices) const;
  /// Throws ShapeMismatch when the sample shapes differ.
  void append(const LabeledDataset& other);

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;
};

struct AssembleOptions {
  std::size_t window = kDefaultWindow;
  std::size_t stride = kDefaultWindow;
  std::optional<std::size_t> per_class_cap;
  std::vector<ActionClass> classes{kAllActions.begin(), kAllActions.end()};
};

/// Windows every recording (list order, then window order) and truncates each
/// requested class to min(cap, smallest class count). Throws
/// UnlabeledRecording, EmptyClass, LengthMismatch on mixed widths.
LabeledDataset assemble(std::span<const CsiRecording> recordings, const AssembleOptions& opt);

enum class NormMode { None, PerSampleStandardize, GlobalMinMax };

inline constexpr double kStdFloor = 1e-8;

std::string_view to_string(NormMode m);
std::optional<NormMode> parse_norm_mode(std::string_view s);

/// Enough to repeat a normalization at inference time.
struct NormStats {
  NormMode mode = NormMode::PerSampleStandardize;
  double min = 0.0;  // global-minmax only
  double max = 1.0;

  friend bool operator==(const NormStats&, const NormStats&) = default;
};

struct Normalized {
  LabeledDataset dataset;
  NormStats stats;
};

/// Fits the transform on `ds` and applies it.
Normalized normalize(LabeledDataset ds, NormMode mode = NormMode::PerSampleStandardize);

/// Applies previously fitted stats, e.g. to a test split.
void apply_normalization(LabeledDataset& ds, const NormStats& stats);
void apply_normalization(std::span<float> sample, const NormStats& stats);

/// "CSDS" container: documented header, per-sample metadata, float32 payload.
std::vector<std::byte> encode_dataset(const LabeledDataset& ds);
LabeledDataset decode_dataset(std::span<const std::byte> bytes);
void write_dataset(const std::string& path, const LabeledDataset& ds);
LabeledDataset read_dataset(const std::string& path);

/// One line per sample: label,scenario,los,v0,v1,...
void export_dataset_csv(const std::string& path, const LabeledDataset& ds);

}  // namespace csiarm::pipeline
