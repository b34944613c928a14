// pscaug/error.hpp

// Copyright 2026  The pscaug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pscaug {

/// Every failure the library reports is one of these.
enum class Errc {
  kIoError,
  kMalformedWav,
  kUnsupportedEncoding,
  kSilentInput,
  kInvalidArgument,
  kBufferTooShort,
  kMalformedSegmentLine,
  kOverlapError,
  kDecayTooShort,
  kEmptyPool,
  kRateMismatch,
  kUnknownClass,
  kSilentNoise,
  kCutoffAboveNyquist,
  kWrongSampleRate,
  kDropRateAboveCeiling,
  kCodecCommandFailed,
  kOutputUnreadable,
  kMalformedCtmLine,
  kMalformedStmLine,
  kDegenerateLabels,
  kEmptyReference,
  kUtteranceMismatch,
  kConfigError,
};

inline std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kIoError: return "IoError";
    case Errc::kMalformedWav: return "MalformedWav";
    case Errc::kUnsupportedEncoding: return "UnsupportedEncoding";
    case Errc::kSilentInput: return "SilentInput";
    case Errc::kInvalidArgument: return "InvalidArgument";
    case Errc::kBufferTooShort: return "BufferTooShort";
    case Errc::kMalformedSegmentLine: return "MalformedSegmentLine";
    case Errc::kOverlapError: return "OverlapError";
    case Errc::kDecayTooShort: return "DecayTooShort";
    case Errc::kEmptyPool: return "EmptyPool";
    case Errc::kRateMismatch: return "RateMismatch";
    case Errc::kUnknownClass: return "UnknownClass";
    case Errc::kSilentNoise: return "SilentNoise";
    case Errc::kCutoffAboveNyquist: return "CutoffAboveNyquist";
    case Errc::kWrongSampleRate: return "WrongSampleRate";
    case Errc::kDropRateAboveCeiling: return "DropRateAboveCeiling";
    case Errc::kCodecCommandFailed: return "CodecCommandFailed";
    case Errc::kOutputUnreadable: return "OutputUnreadable";
    case Errc::kMalformedCtmLine: return "MalformedCtmLine";
    case Errc::kMalformedStmLine: return "MalformedStmLine";
    case Errc::kDegenerateLabels: return "DegenerateLabels";
    case Errc::kEmptyReference: return "EmptyReference";
    case Errc::kUtteranceMismatch: return "UtteranceMismatch";
    case Errc::kConfigError: return "ConfigError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace pscaug
