// Copyright 2026 The fiberq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fiberq {

enum class ErrorCode {
    InvalidArgument,
    InvalidRotation,
    NonUnitProbe,
    DegenerateProbes,
    InvalidTransmission,
    FullyExtinguished,
    VoltageOutOfRange,
    EmptySeries,
    SingularDesign,
    InsufficientSamples,
    FitDiverged,
    EmptyOverlap,
    ConfigInvalid,
    ProtocolFailed,
};

inline std::string_view error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::InvalidRotation: return "InvalidRotation";
        case ErrorCode::NonUnitProbe: return "NonUnitProbe";
        case ErrorCode::DegenerateProbes: return "DegenerateProbes";
        case ErrorCode::InvalidTransmission: return "InvalidTransmission";
        case ErrorCode::FullyExtinguished: return "FullyExtinguished";
        case ErrorCode::VoltageOutOfRange: return "VoltageOutOfRange";
        case ErrorCode::EmptySeries: return "EmptySeries";
        case ErrorCode::SingularDesign: return "SingularDesign";
        case ErrorCode::InsufficientSamples: return "InsufficientSamples";
        case ErrorCode::FitDiverged: return "FitDiverged";
        case ErrorCode::EmptyOverlap: return "EmptyOverlap";
        case ErrorCode::ConfigInvalid: return "ConfigInvalid";
        case ErrorCode::ProtocolFailed: return "ProtocolFailed";
    }
    return "Unknown";
}

/// Exception carrying a machine-readable error code.
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string &what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

}  // namespace fiberq
