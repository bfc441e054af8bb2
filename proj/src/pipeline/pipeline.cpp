// SPDX-License-Identifier: Apache-2.0
#include "csiarm/pipeline/pipeline.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "csiarm/error.hpp"
#include "csiarm/io/bytes.hpp"
#include "csiarm/simd/kernels.hpp"

namespace csiarm::pipeline {
namespace {

static_assert(sizeof(ComplexSample) == 2 * sizeof(float), "ComplexSample must be two packed floats");

constexpr char kDatasetMagic[4] = {'C', 'S', 'D', 'S'};
constexpr std::uint16_t kDatasetVersion = 1;
constexpr std::size_t kDatasetHeaderSize = 24;

std::array<bool, kSubcarriers> make_removed_mask() {
  std::array<bool, kSubcarriers> mask{};
  for (int tone : kRemovedTones) mask[static_cast<std::size_t>(tone + kSubcarriers / 2)] = true;
  return mask;
}

const std::array<bool, kSubcarriers>& removed_mask() {
  static const auto mask = make_removed_mask();
  return mask;
}

std::array<int, kRetainedSubcarriers> make_retained() {
  std::array<int, kRetainedSubcarriers> out{};
  std::size_t j = 0;
  for (int b = 0; b < kSubcarriers; ++b) {
    if (!removed_mask()[static_cast<std::size_t>(b)]) out[j++] = b;
  }
  return out;
}

}  // namespace

const std::array<int, kRetainedSubcarriers>& retained_bins() {
  static const auto bins = make_retained();
  return bins;
}

bool is_removed_bin(int bin) {
  return bin >= 0 && bin < kSubcarriers && removed_mask()[static_cast<std::size_t>(bin)];
}

AmplitudeMatrix amplitude(const CsiRecording& rec) {
  AmplitudeMatrix out;
  out.rows = rec.frames.size();
  out.cols = rec.frames.empty() ? 0 : rec.frames.front().subcarriers.size();
  out.label = rec.label;
  out.scenario_id = rec.scenario_id;
  out.los = rec.los;
  out.data.resize(out.rows * out.cols);
  const auto& k = simd::active();
  for (std::size_t n = 0; n < out.rows; ++n) {
    const auto& sc = rec.frames[n].subcarriers;
    if (sc.size() != out.cols) {
      fail(ErrorCode::LengthMismatch, "frame " + std::to_string(n) + " has " + std::to_string(sc.size()) +
                                          " subcarriers, expected " + std::to_string(out.cols));
    }
    k.magnitude(reinterpret_cast<const float*>(sc.data()), out.data.data() + n * out.cols, out.cols);
  }
  return out;
}

void filter_subcarriers(std::span<const double> row, std::span<double> out) {
  if (row.size() != static_cast<std::size_t>(kSubcarriers)) {
    fail(ErrorCode::LengthMismatch, "expected 256 subcarriers, got " + std::to_string(row.size()));
  }
  if (out.size() != static_cast<std::size_t>(kRetainedSubcarriers)) {
    fail(ErrorCode::LengthMismatch, "output must hold 234 values");
  }
  const auto& bins = retained_bins();
  for (std::size_t j = 0; j < bins.size(); ++j) out[j] = row[static_cast<std::size_t>(bins[j])];
}

std::vector<double> filter_subcarriers(std::span<const double> row) {
  std::vector<double> out(kRetainedSubcarriers);
  filter_subcarriers(row, out);
  return out;
}

AmplitudeMatrix filter_rows(const AmplitudeMatrix& amp) {
  AmplitudeMatrix out;
  out.rows = amp.rows;
  out.cols = kRetainedSubcarriers;
  out.label = amp.label;
  out.scenario_id = amp.scenario_id;
  out.los = amp.los;
  out.data.resize(out.rows * out.cols);
  for (std::size_t n = 0; n < amp.rows; ++n) {
    filter_subcarriers(amp.row(n), std::span<double>(out.data.data() + n * out.cols, out.cols));
  }
  return out;
}

SampleTensor tensorize(const AmplitudeMatrix& amp, std::size_t window, std::size_t stride) {
  if (window < 1) fail(ErrorCode::InvalidArgument, "window must be >= 1");
  if (stride < 1) fail(ErrorCode::InvalidArgument, "stride must be >= 1");
  if (window > amp.rows) {
    fail(ErrorCode::WindowTooLarge,
         "window " + std::to_string(window) + " exceeds " + std::to_string(amp.rows) + " packets");
  }
  const bool raw = amp.cols == static_cast<std::size_t>(kSubcarriers);
  if (!raw && amp.cols != static_cast<std::size_t>(kRetainedSubcarriers)) {
    fail(ErrorCode::LengthMismatch, "amplitude width " + std::to_string(amp.cols));
  }

  SampleTensor t;
  t.window = window;
  t.width = kRetainedSubcarriers;
  t.count = (amp.rows - window) / stride + 1;
  t.stride = stride;
  t.label = amp.label;
  t.scenario_id = amp.scenario_id;
  t.los = amp.los;
  t.data.resize(t.count * window * t.width);

  for (std::size_t v = 0; v < t.count; ++v) {
    for (std::size_t u = 0; u < window; ++u) {
      const std::size_t src = v * stride + u;
      double* dst = t.data.data() + (v * window + u) * t.width;
      if (raw) {
        filter_subcarriers(amp.row(src), std::span<double>(dst, t.width));
      } else {
        std::copy_n(amp.data.data() + src * amp.cols, t.width, dst);
      }
    }
  }
  return t;
}

AmplitudeMatrix matrixize(const SampleTensor& t) {
  if (t.stride != t.window) {
    fail(ErrorCode::NotInvertible, "stride " + std::to_string(t.stride) + " != window " + std::to_string(t.window));
  }
  AmplitudeMatrix out;
  out.rows = t.count * t.window;
  out.cols = t.width;
  out.data = t.data;  // slices are stored contiguously in v order
  out.label = t.label;
  out.scenario_id = t.scenario_id;
  out.los = t.los;
  return out;
}

std::array<std::size_t, kNumClasses> LabeledDataset::class_counts() const {
  std::array<std::size_t, kNumClasses> counts{};
  for (const auto& s : info) ++counts[static_cast<std::size_t>(code(s.label))];
  return counts;
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
  LabeledDataset out;
  out.window = window;
  out.width = width;
  out.data.resize(indices.size() * sample_size());
  out.info.reserve(indices.size());
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const std::size_t i = indices[j];
    if (i >= size()) fail(ErrorCode::InvalidArgument, "sample index " + std::to_string(i) + " out of range");
    std::copy_n(data.data() + i * sample_size(), sample_size(), out.data.data() + j * sample_size());
    out.info.push_back(info[i]);
  }
  return out;
}

void LabeledDataset::append(const LabeledDataset& other) {
  if (other.size() == 0) return;
  if (size() == 0 && data.empty()) {
    window = other.window;
    width = other.width;
  } else if (other.window != window || other.width != width) {
    fail(ErrorCode::ShapeMismatch, "cannot append " + std::to_string(other.window) + "x" +
                                       std::to_string(other.width) + " samples to " + std::to_string(window) +
                                       "x" + std::to_string(width));
  }
  data.insert(data.end(), other.data.begin(), other.data.end());
  info.insert(info.end(), other.info.begin(), other.info.end());
}

LabeledDataset assemble(std::span<const CsiRecording> recordings, const AssembleOptions& opt) {
  if (opt.classes.empty()) fail(ErrorCode::InvalidArgument, "no classes requested");
  if (opt.window < 1 || opt.stride < 1) fail(ErrorCode::InvalidArgument, "window and stride must be >= 1");

  // First pass: validate and count windows without materializing anything.
  std::array<std::size_t, kNumClasses> available{};
  std::size_t width = 0;
  for (std::size_t r = 0; r < recordings.size(); ++r) {
    const CsiRecording& rec = recordings[r];
    if (!rec.label) fail(ErrorCode::UnlabeledRecording, "recording " + std::to_string(r) + " has no label");
    if (std::find(opt.classes.begin(), opt.classes.end(), *rec.label) == opt.classes.end()) continue;
    const std::size_t w = rec.frames.empty() ? 0 : rec.frames.front().subcarriers.size();
    if (width == 0) width = w;
    if (w != width) {
      fail(ErrorCode::LengthMismatch, "recording " + std::to_string(r) + " has width " + std::to_string(w));
    }
    if (opt.window > rec.frames.size()) {
      fail(ErrorCode::WindowTooLarge, "recording " + std::to_string(r) + ": window " + std::to_string(opt.window) +
                                          " exceeds " + std::to_string(rec.frames.size()) + " packets");
    }
    available[static_cast<std::size_t>(code(*rec.label))] += (rec.frames.size() - opt.window) / opt.stride + 1;
  }

  std::size_t take = std::numeric_limits<std::size_t>::max();
  for (ActionClass c : opt.classes) {
    const std::size_t n = available[static_cast<std::size_t>(code(c))];
    if (n == 0) fail(ErrorCode::EmptyClass, "no samples for class " + std::string(to_string(c)));
    take = std::min(take, n);
  }
  if (opt.per_class_cap) take = std::min(take, *opt.per_class_cap);

  LabeledDataset ds;
  ds.window = opt.window;
  ds.width = kRetainedSubcarriers;
  const std::size_t total = take * opt.classes.size();
  ds.data.resize(total * ds.sample_size());
  ds.info.resize(total);

  // Class c occupies output slots [rank(c) * take, (rank(c) + 1) * take).
  std::array<std::size_t, kNumClasses> filled{};
  for (const CsiRecording& rec : recordings) {
    const auto pos = std::find(opt.classes.begin(), opt.classes.end(), *rec.label);
    if (pos == opt.classes.end()) continue;
    const auto c = static_cast<std::size_t>(code(*rec.label));
    if (filled[c] >= take) continue;
    const SampleTensor t = tensorize(amplitude(rec), opt.window, opt.stride);
    const auto base = static_cast<std::size_t>(pos - opt.classes.begin()) * take;
    for (std::size_t v = 0; v < t.count && filled[c] < take; ++v, ++filled[c]) {
      const std::size_t slot = base + filled[c];
      const auto slice = t.slice(v);
      std::transform(slice.begin(), slice.end(),
                     ds.data.begin() + static_cast<std::ptrdiff_t>(slot * ds.sample_size()),
                     [](double x) { return static_cast<float>(x); });
      ds.info[slot] = {*rec.label, rec.scenario_id, rec.los};
    }
  }
  return ds;
}

std::string_view to_string(NormMode m) {
  switch (m) {
    case NormMode::None: return "none";
    case NormMode::PerSampleStandardize: return "per-sample-standardize";
    case NormMode::GlobalMinMax: return "global-minmax";
  }
  return "?";
}

std::optional<NormMode> parse_norm_mode(std::string_view s) {
  for (NormMode m : {NormMode::None, NormMode::PerSampleStandardize, NormMode::GlobalMinMax}) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

void apply_normalization(std::span<float> sample, const NormStats& stats) {
  switch (stats.mode) {
    case NormMode::None:
      return;
    case NormMode::PerSampleStandardize: {
      if (sample.empty()) return;
      double mean = 0.0;
      for (float x : sample) mean += x;
      mean /= static_cast<double>(sample.size());
      double var = 0.0;
      for (float x : sample) var += (x - mean) * (x - mean);
      const double sd = std::max(std::sqrt(var / static_cast<double>(sample.size())), kStdFloor);
      for (float& x : sample) x = static_cast<float>((x - mean) / sd);
      return;
    }
    case NormMode::GlobalMinMax: {
      const double range = std::max(stats.max - stats.min, kStdFloor);
      for (float& x : sample) x = static_cast<float>((x - stats.min) / range);
      return;
    }
  }
}

void apply_normalization(LabeledDataset& ds, const NormStats& stats) {
  for (std::size_t i = 0; i < ds.size(); ++i) apply_normalization(ds.sample(i), stats);
}

Normalized normalize(LabeledDataset ds, NormMode mode) {
  NormStats stats;
  stats.mode = mode;
  if (mode == NormMode::GlobalMinMax && !ds.data.empty()) {
    const auto [lo, hi] = std::minmax_element(ds.data.begin(), ds.data.end());
    stats.min = *lo;
    stats.max = *hi;
  }
  apply_normalization(ds, stats);
  return {std::move(ds), stats};
}

// CSDS v1, little-endian:
//   0  magic "CSDS"
//   4  u16 version
//   6  u16 reserved
//   8  u32 sample count
//  12  u32 window (U)
//  16  u32 width (W')
//  20  u32 reserved
//  24  count x {u8 label, u8 scenario, u8 los, u8 reserved}
//  ..  count x U x W' float32
std::vector<std::byte> encode_dataset(const LabeledDataset& ds) {
  if (ds.data.size() != ds.size() * ds.sample_size()) {
    fail(ErrorCode::ShapeMismatch, "payload does not match sample count");
  }
  std::vector<std::byte> out;
  out.reserve(kDatasetHeaderSize + ds.size() * 4 + ds.data.size() * sizeof(float));
  io::ByteWriter w(out);
  w.put_bytes(std::string_view(kDatasetMagic, 4));
  w.put<std::uint16_t>(kDatasetVersion);
  w.pad(2);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ds.size()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ds.window));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ds.width));
  w.pad(4);
  for (const SampleInfo& s : ds.info) {
    w.put<std::uint8_t>(static_cast<std::uint8_t>(code(s.label)));
    w.put<std::uint8_t>(s.scenario_id);
    w.put<std::uint8_t>(s.los ? 1 : 0);
    w.pad(1);
  }
  if constexpr (std::endian::native == std::endian::little) {
    const auto* p = reinterpret_cast<const std::byte*>(ds.data.data());
    out.insert(out.end(), p, p + ds.data.size() * sizeof(float));
  } else {
    for (float x : ds.data) w.put<float>(x);
  }
  return out;
}

LabeledDataset decode_dataset(std::span<const std::byte> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kDatasetMagic, 4) != 0) {
    fail(ErrorCode::BadMagic, "not a CSDS file");
  }
  io::ByteReader r(bytes);
  r.skip(4);
  const auto version = r.get<std::uint16_t>();
  if (version != kDatasetVersion) fail(ErrorCode::UnsupportedVersion, "CSDS version " + std::to_string(version));
  r.skip(2);
  const std::size_t count = r.get<std::uint32_t>();
  LabeledDataset ds;
  ds.window = r.get<std::uint32_t>();
  ds.width = r.get<std::uint32_t>();
  r.skip(4);

  const std::size_t per = ds.window * ds.width;
  if (count > 0 && per == 0) fail(ErrorCode::CorruptFrame, "zero-sized samples");
  if (r.remaining() < count * 4 || (r.remaining() - count * 4) / sizeof(float) / std::max<std::size_t>(per, 1) < count) {
    fail(ErrorCode::TruncatedPayload, "dataset payload shorter than header claims");
  }
  ds.info.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto label = action_from_code(r.get<std::uint8_t>());
    if (!label) fail(ErrorCode::CorruptFrame, "bad label in sample " + std::to_string(i));
    const auto scenario = r.get<std::uint8_t>();
    const auto los = r.get<std::uint8_t>();
    if (los > 1) fail(ErrorCode::CorruptFrame, "bad los flag in sample " + std::to_string(i));
    r.skip(1);
    ds.info.push_back({*label, scenario, los == 1});
  }
  ds.data.resize(count * per);
  for (float& x : ds.data) x = r.get<float>();
  if (r.remaining() != 0) fail(ErrorCode::CorruptFrame, "trailing bytes after dataset payload");
  return ds;
}

void write_dataset(const std::string& path, const LabeledDataset& ds) { io::write_file(path, encode_dataset(ds)); }

LabeledDataset read_dataset(const std::string& path) { return decode_dataset(io::read_file(path)); }

void export_dataset_csv(const std::string& path, const LabeledDataset& ds) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path);
  out.precision(std::numeric_limits<float>::max_digits10);
  out << "label,scenario,los";
  for (std::size_t j = 0; j < ds.sample_size(); ++j) out << ",v" << j;
  out << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << to_string(ds.info[i].label) << ',' << int(ds.info[i].scenario_id) << ',' << (ds.info[i].los ? 1 : 0);
    for (float x : ds.sample(i)) out << ',' << x;
    out << '\n';
  }
  if (!out) fail(ErrorCode::Io, "short write to " + path);
}

}  // namespace csiarm::pipeline
