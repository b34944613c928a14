// pscaug/codec.hpp

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

#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pscaug/audio.hpp"
#include "pscaug/error.hpp"
#include "pscaug/resample.hpp"
#include "pscaug/rng.hpp"
#include "pscaug/wav.hpp"

namespace pscaug {

// G.711 companding, bit-exact with the ITU-T G.191 reference coder. Both
// laws take and return 16-bit linear PCM.

inline std::uint8_t ulaw_encode(std::int16_t pcm) {
  // One's complement for negatives, then drop to 14 bits and add the bias.
  std::int32_t mag = pcm < 0 ? ((~pcm) >> 2) : (pcm >> 2);
  mag += 33;
  if (mag > 0x1FFF) mag = 0x1FFF;
  std::int32_t seg = 1;
  for (std::int32_t i = mag >> 6; i != 0; i >>= 1) ++seg;
  const std::int32_t high = 8 - seg;
  const std::int32_t low = 0x0F - ((mag >> seg) & 0x0F);
  std::int32_t code = (high << 4) | low;
  if (pcm >= 0) code |= 0x80;
  return static_cast<std::uint8_t>(code);
}

inline std::int16_t ulaw_decode(std::uint8_t code) {
  const int sign = code < 0x80 ? -1 : 1;
  const int inv = static_cast<std::uint8_t>(~code);
  const int exponent = (inv >> 4) & 0x07;
  const int mantissa = inv & 0x0F;
  const int step = 4 << (exponent + 1);
  return static_cast<std::int16_t>(sign *
                                   ((0x80 << exponent) + step * mantissa + step / 2 - 4 * 33));
}

inline std::uint8_t alaw_encode(std::int16_t pcm) {
  std::int32_t ix = pcm < 0 ? ((~pcm) >> 4) : (pcm >> 4);
  if (ix > 15) {
    std::int32_t exponent = 1;
    while (ix > 16 + 15) {
      ix >>= 1;
      ++exponent;
    }
    ix -= 16;
    ix += exponent << 4;
  }
  if (pcm >= 0) ix |= 0x80;
  return static_cast<std::uint8_t>(ix ^ 0x55);
}

inline std::int16_t alaw_decode(std::uint8_t code) {
  const int ix = (code ^ 0x55) & 0x7F;
  const int exponent = ix >> 4;
  int mantissa = ix & 0x0F;
  if (exponent > 0) mantissa += 16;
  mantissa = (mantissa << 4) + 0x08;
  if (exponent > 1) mantissa <<= (exponent - 1);
  return static_cast<std::int16_t>(code > 127 ? mantissa : -mantissa);
}

enum class G711Law { kMu, kA };

/// Encode/decode every sample through 8-bit G.711. Input must be 8 kHz.
inline AudioBuffer g711_roundtrip(const AudioBuffer& buffer, G711Law law) {
  if (buffer.sample_rate_hz != 8000)
    fail(Errc::kWrongSampleRate, "G.711 needs 8000 Hz, got " + std::to_string(buffer.sample_rate_hz));
  AudioBuffer out = buffer;
  for (double& v : out.samples) {
    const std::int16_t pcm = to_pcm16(v);
    v = from_pcm16(law == G711Law::kMu ? ulaw_decode(ulaw_encode(pcm))
                                       : alaw_decode(alaw_encode(pcm)));
  }
  return out;
}

enum class CodecKind { kNone, kG711Mu, kG711A, kExternal };

inline std::string_view codec_kind_name(CodecKind kind) {
  switch (kind) {
    case CodecKind::kNone: return "none";
    case CodecKind::kG711Mu: return "g711_mu";
    case CodecKind::kG711A: return "g711_a";
    case CodecKind::kExternal: return "external";
  }
  return "unknown";
}

inline CodecKind parse_codec_kind(std::string_view name) {
  if (name == "none") return CodecKind::kNone;
  if (name == "g711_mu") return CodecKind::kG711Mu;
  if (name == "g711_a") return CodecKind::kG711A;
  if (name == "external") return CodecKind::kExternal;
  fail(Errc::kConfigError, "unknown codec kind '" + std::string(name) + "'");
}

inline constexpr double kDropRateCeiling = 0.06;

struct CodecSpec {
  std::string name;  // label used in manifests
  CodecKind kind = CodecKind::kNone;
  double frame_ms = 20.0;
  double drop_rate = 0.0;
  bool allow_drop_above_ceiling = false;
  // External only; "{in}" and "{out}" are replaced by file paths.
  std::string encode_cmd;
  std::string decode_cmd;

  void validate() const {
    if (!(frame_ms > 0.0)) fail(Errc::kInvalidArgument, "codec frame_ms must be > 0");
    if (!(drop_rate >= 0.0 && drop_rate <= 1.0))
      fail(Errc::kInvalidArgument, "drop rate must be in [0, 1]");
    if (drop_rate > kDropRateCeiling && !allow_drop_above_ceiling)
      fail(Errc::kDropRateAboveCeiling,
           "drop rate " + std::to_string(drop_rate) + " exceeds the 6% ceiling");
    if (kind == CodecKind::kExternal) {
      for (const auto* cmd : {&encode_cmd, &decode_cmd})
        if (cmd->find("{in}") == std::string::npos || cmd->find("{out}") == std::string::npos)
          fail(Errc::kConfigError, "external codec command lacks {in}/{out}: " + *cmd);
    }
  }
};

struct DropResult {
  AudioBuffer audio;
  std::size_t frames = 0;
  std::size_t dropped = 0;
};

/// Zeroes whole frames, each independently with probability drop_rate. One
/// uniform draw per frame, in order.
inline DropResult drop_frames(const AudioBuffer& buffer, const CodecSpec& spec, Rng& rng) {
  spec.validate();
  const auto frame_len = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(spec.frame_ms * buffer.sample_rate_hz / 1000.0)));
  DropResult result{buffer, 0, 0};
  auto& x = result.audio.samples;
  for (std::size_t start = 0; start < x.size(); start += frame_len) {
    ++result.frames;
    if (rng.uniform01() < spec.drop_rate) {
      ++result.dropped;
      std::fill(x.begin() + static_cast<std::ptrdiff_t>(start),
                x.begin() + static_cast<std::ptrdiff_t>(std::min(x.size(), start + frame_len)), 0.0);
    }
  }
  return result;
}

class CodecCommandError : public Error {
 public:
  CodecCommandError(int exit_code, const std::string& command, const std::string& diagnostics)
      : Error(Errc::kCodecCommandFailed,
              "'" + command + "' exited with code " + std::to_string(exit_code) +
                  (diagnostics.empty() ? std::string() : ": " + diagnostics)),
        exit_code_(exit_code),
        diagnostics_(diagnostics) {}

  int exit_code() const noexcept { return exit_code_; }
  const std::string& diagnostics() const noexcept { return diagnostics_; }

 private:
  int exit_code_;
  std::string diagnostics_;
};

namespace codec_detail {

inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

inline std::string substitute(std::string tmpl, const std::filesystem::path& in,
                              const std::filesystem::path& out) {
  const auto replace_all = [&tmpl](std::string_view key, const std::string& value) {
    for (std::size_t pos = tmpl.find(key); pos != std::string::npos;
         pos = tmpl.find(key, pos + value.size()))
      tmpl.replace(pos, key.size(), value);
  };
  replace_all("{in}", shell_quote(in.string()));
  replace_all("{out}", shell_quote(out.string()));
  return tmpl;
}

inline void run_command(const std::string& command) {
  // Newline before the redirect so a trailing '#' comment cannot swallow it.
  const std::string full = "(" + command + "\n) 2>&1";
  FILE* pipe = ::popen(full.c_str(), "r");
  if (pipe == nullptr) throw CodecCommandError(-1, command, "popen failed");
  std::string diagnostics;
  std::array<char, 512> buf{};
  while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe) != nullptr) {
    if (diagnostics.size() < 4096) diagnostics += buf.data();
  }
  const int status = ::pclose(pipe);
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  if (status == -1 || code != 0) {
    while (!diagnostics.empty() && (diagnostics.back() == '\n' || diagnostics.back() == '\r'))
      diagnostics.pop_back();
    throw CodecCommandError(status == -1 ? -1 : code, command, diagnostics);
  }
}

/// Unique scratch directory, removed on scope exit.
class ScratchDir {
 public:
  ScratchDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "pscaug-codec-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) fail(Errc::kIoError, "mkdtemp failed");
    path_ = tmpl;
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace codec_detail

/// Runs the buffer through an external encoder and decoder via PCM16 WAV
/// temp files. The decoded audio is brought back to the input rate and
/// truncated or zero-padded to the input length.
inline AudioBuffer external_codec_roundtrip(const AudioBuffer& buffer, const CodecSpec& spec) {
  using namespace codec_detail;
  spec.validate();
  if (spec.kind != CodecKind::kExternal)
    fail(Errc::kInvalidArgument, "codec spec is not external");
  ScratchDir scratch;
  const auto input = scratch.path() / "input.wav";
  const auto encoded = scratch.path() / "encoded.bin";
  const auto decoded = scratch.path() / "decoded.wav";
  write_wav(buffer, input);
  run_command(substitute(spec.encode_cmd, input, encoded));
  run_command(substitute(spec.decode_cmd, encoded, decoded));

  AudioBuffer out;
  try {
    out = read_wav(decoded);
  } catch (const Error& e) {
    fail(Errc::kOutputUnreadable, e.what());
  }
  if (out.sample_rate_hz != buffer.sample_rate_hz) out = resample(out, buffer.sample_rate_hz);
  out.samples.resize(buffer.size(), 0.0);
  return out;
}

/// Codec round trip without frame loss; G.711 at other rates goes via 8 kHz.
inline AudioBuffer codec_roundtrip(const AudioBuffer& buffer, const CodecSpec& spec) {
  switch (spec.kind) {
    case CodecKind::kNone:
      return buffer;
    case CodecKind::kG711Mu:
    case CodecKind::kG711A: {
      const G711Law law = spec.kind == CodecKind::kG711Mu ? G711Law::kMu : G711Law::kA;
      if (buffer.sample_rate_hz == 8000) return g711_roundtrip(buffer, law);
      AudioBuffer coded = g711_roundtrip(resample(buffer, 8000), law);
      AudioBuffer back = resample(coded, buffer.sample_rate_hz);
      back.samples.resize(buffer.size(), 0.0);
      return back;
    }
    case CodecKind::kExternal:
      return external_codec_roundtrip(buffer, spec);
  }
  return buffer;
}

}  // namespace pscaug
