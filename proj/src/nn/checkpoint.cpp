// SPDX-License-Identifier: Apache-2.0
#include "csiarm/nn/checkpoint.hpp"

#include <cmath>
#include <cstring>

#include "csiarm/error.hpp"
#include "csiarm/io/bytes.hpp"

namespace csiarm::nn {
namespace {

constexpr char kMagic[4] = {'C', 'S', 'N', 'N'};
constexpr std::uint16_t kVersion = 1;

}  // namespace

std::vector<std::byte> encode_checkpoint(const CnnModel& model, const pipeline::NormStats& norm) {
  const ModelConfig& c = model.config();
  std::vector<std::byte> out;
  io::ByteWriter w(out);
  w.put_bytes(std::string_view(kMagic, 4));
  w.put<std::uint16_t>(kVersion);
  w.pad(2);
  for (int v : {c.input_h, c.input_w, c.input_c, c.filters[0], c.filters[1], c.filters[2], c.kernel, c.pool,
                c.dense_units, c.classes}) {
    w.put<std::int32_t>(v);
  }
  w.put<std::uint8_t>(c.conv_relu ? 1 : 0);
  w.pad(7);
  w.put<double>(c.dropout);
  w.put<double>(c.l1);
  w.put<double>(c.l2);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(norm.mode));
  w.pad(7);
  w.put<double>(norm.min);
  w.put<double>(norm.max);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.params().size()));
  for (const Param<float>& p : model.params()) {
    w.put<std::uint16_t>(static_cast<std::uint16_t>(p.name.size()));
    w.put_bytes(p.name);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(p.shape.size()));
    for (int d : p.shape) w.put<std::int32_t>(d);
    w.put<std::uint64_t>(p.value.size());
    if constexpr (std::endian::native == std::endian::little) {
      const auto* b = reinterpret_cast<const std::byte*>(p.value.data());
      out.insert(out.end(), b, b + p.value.size() * sizeof(float));
    } else {
      for (float v : p.value) w.put<float>(v);
    }
  }
  return out;
}

Checkpoint decode_checkpoint(std::span<const std::byte> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) fail(ErrorCode::BadMagic, "not a CSNN file");
  io::ByteReader r(bytes);
  r.skip(4);
  const auto version = r.get<std::uint16_t>();
  if (version != kVersion) fail(ErrorCode::UnsupportedVersion, "CSNN version " + std::to_string(version));
  r.skip(2);

  ModelConfig c;
  c.input_h = r.get<std::int32_t>();
  c.input_w = r.get<std::int32_t>();
  c.input_c = r.get<std::int32_t>();
  for (int& f : c.filters) f = r.get<std::int32_t>();
  c.kernel = r.get<std::int32_t>();
  c.pool = r.get<std::int32_t>();
  c.dense_units = r.get<std::int32_t>();
  c.classes = r.get<std::int32_t>();
  const auto relu = r.get<std::uint8_t>();
  if (relu > 1) fail(ErrorCode::BadCheckpoint, "conv_relu flag");
  c.conv_relu = relu == 1;
  r.skip(7);
  c.dropout = r.get<double>();
  c.l1 = r.get<double>();
  c.l2 = r.get<double>();

  pipeline::NormStats norm;
  const auto mode = r.get<std::uint8_t>();
  if (mode > static_cast<std::uint8_t>(pipeline::NormMode::GlobalMinMax)) fail(ErrorCode::BadCheckpoint, "norm mode");
  norm.mode = static_cast<pipeline::NormMode>(mode);
  r.skip(7);
  norm.min = r.get<double>();
  norm.max = r.get<double>();

  // Size sanity before allocating a model from untrusted numbers.
  for (int v : {c.input_h, c.input_w, c.input_c, c.filters[0], c.filters[1], c.filters[2], c.kernel, c.pool,
                c.dense_units, c.classes}) {
    if (v < 1 || v > 1 << 16) fail(ErrorCode::BadCheckpoint, "implausible model dimension " + std::to_string(v));
  }
  std::size_t expected = 0;
  try {
    expected = parameter_count(c);
  } catch (const Error& e) {
    fail(ErrorCode::BadCheckpoint, e.what());
  }
  if (expected * sizeof(float) > r.remaining()) fail(ErrorCode::TruncatedPayload, "weights shorter than the config");

  Checkpoint ck{CnnModel(c), norm};
  const auto count = r.get<std::uint32_t>();
  auto& params = ck.model.params();
  if (count != params.size()) fail(ErrorCode::BadCheckpoint, "expected " + std::to_string(params.size()) + " parameters");
  for (Param<float>& p : params) {
    const auto name = r.get_string(r.get<std::uint16_t>());
    if (name != p.name) fail(ErrorCode::BadCheckpoint, "expected parameter " + p.name + ", found " + name);
    const auto rank = r.get<std::uint8_t>();
    if (rank != p.shape.size()) fail(ErrorCode::BadCheckpoint, "rank of " + p.name);
    for (int d : p.shape) {
      if (r.get<std::int32_t>() != d) fail(ErrorCode::BadCheckpoint, "shape of " + p.name);
    }
    if (r.get<std::uint64_t>() != p.value.size()) fail(ErrorCode::BadCheckpoint, "size of " + p.name);
    for (float& v : p.value) {
      v = r.get<float>();
      if (!std::isfinite(v)) fail(ErrorCode::BadCheckpoint, "non-finite weight in " + p.name);
    }
  }
  if (r.remaining() != 0) fail(ErrorCode::BadCheckpoint, "trailing bytes");
  return ck;
}

void save_checkpoint(const std::string& path, const CnnModel& model, const pipeline::NormStats& norm) {
  io::write_file(path, encode_checkpoint(model, norm));
}

Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(io::read_file(path)); }

}  // namespace csiarm::nn
