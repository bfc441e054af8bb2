// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace csiarm {

/// Every failure mode the library reports. Codes are grouped by the module
/// that raises them; the CLI maps them onto process exit codes.
enum class ErrorCode {
  // csi
  BadMagic,
  UnsupportedVersion,
  TruncatedPayload,
  CorruptFrame,
  LengthMismatch,
  BindFailure,
  InvalidRecording,
  // synth
  DegenerateGeometry,
  InvalidScene,
  BadPlan,
  // pipeline
  WindowTooLarge,
  NotInvertible,
  UnlabeledRecording,
  EmptyClass,
  // nn
  ShapeMismatch,
  UnknownOptimizer,
  EmptyDataset,
  BadCheckpoint,
  NonFinite,
  // eval
  TooFewSamples,
  MissingScenario,
  EmptyInput,
  MissingCell,
  // generic
  Io,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace csiarm
