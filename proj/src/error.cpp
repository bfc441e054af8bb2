// SPDX-License-Identifier: Apache-2.0
#include "csiarm/error.hpp"

namespace csiarm {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::CorruptFrame: return "CorruptFrame";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::BindFailure: return "BindFailure";
    case ErrorCode::InvalidRecording: return "InvalidRecording";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::InvalidScene: return "InvalidScene";
    case ErrorCode::BadPlan: return "BadPlan";
    case ErrorCode::WindowTooLarge: return "WindowTooLarge";
    case ErrorCode::NotInvertible: return "NotInvertible";
    case ErrorCode::UnlabeledRecording: return "UnlabeledRecording";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::UnknownOptimizer: return "UnknownOptimizer";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::BadCheckpoint: return "BadCheckpoint";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::MissingScenario: return "MissingScenario";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::MissingCell: return "MissingCell";
    case ErrorCode::Io: return "Io";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace csiarm
