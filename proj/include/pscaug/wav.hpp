// pscaug/wav.hpp

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

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "pscaug/audio.hpp"
#include "pscaug/error.hpp"

namespace pscaug {

namespace wav_detail {

inline std::uint32_t le32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
         (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}
inline std::uint16_t le16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace wav_detail

inline std::int16_t to_pcm16(double sample) {
  const double scaled = std::nearbyint(sample * 32768.0);
  if (scaled >= 32767.0) return 32767;
  if (scaled <= -32768.0) return -32768;
  return static_cast<std::int16_t>(scaled);
}

inline double from_pcm16(std::int16_t value) { return value / 32768.0; }

/// Parses an in-memory RIFF/WAVE image. Multichannel frames are averaged.
inline AudioBuffer decode_wav(const std::vector<std::uint8_t>& bytes) {
  using namespace wav_detail;
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    fail(Errc::kMalformedWav, "missing RIFF/WAVE signature");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size())
        fail(Errc::kMalformedWav, "truncated fmt chunk");
      format = le16(bytes.data() + body);
      channels = le16(bytes.data() + body + 2);
      rate = le32(bytes.data() + body + 4);
      bits = le16(bytes.data() + body + 14);
      if (format == kFormatExtensible) {
        if (size < 40) fail(Errc::kMalformedWav, "truncated extensible fmt chunk");
        // First two bytes of the SubFormat GUID carry the real format tag.
        format = le16(bytes.data() + body + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (body + size > bytes.size())
        fail(Errc::kMalformedWav, "data chunk runs past end of file");
      data = bytes.data() + body;
      data_size = size;
      break;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) fail(Errc::kMalformedWav, "no fmt chunk");
  if (data == nullptr) fail(Errc::kMalformedWav, "no data chunk");
  if (channels == 0 || rate == 0)
    fail(Errc::kMalformedWav, "zero channels or sample rate");

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32)
    fail(Errc::kUnsupportedEncoding,
         "format tag " + std::to_string(format) + " with " +
             std::to_string(bits) + " bits per sample");

  const std::size_t frame_bytes = std::size_t(channels) * (bits / 8);
  if (data_size % frame_bytes != 0)
    fail(Errc::kMalformedWav, "data size is not a whole number of frames");
  const std::size_t frames = data_size / frame_bytes;

  std::vector<double> samples(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const std::uint8_t* p = data + f * frame_bytes + c * (bits / 8);
      if (pcm16) {
        acc += from_pcm16(static_cast<std::int16_t>(le16(p)));
      } else {
        const std::uint32_t raw = le32(p);
        float v;
        std::memcpy(&v, &raw, sizeof v);
        acc += v;
      }
    }
    samples[f] = acc / channels;
  }
  return AudioBuffer(std::move(samples), static_cast<int>(rate));
}

/// Canonical 44-byte-header PCM16 mono image; out-of-range samples saturate.
inline std::vector<std::uint8_t> encode_wav(const AudioBuffer& buffer) {
  using namespace wav_detail;
  if (buffer.empty()) fail(Errc::kInvalidArgument, "refusing to write an empty buffer");
  const std::uint32_t data_size = static_cast<std::uint32_t>(buffer.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put32(out, 36 + data_size);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put32(out, 16);
  put16(out, kFormatPcm);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(buffer.sample_rate_hz));
  put32(out, static_cast<std::uint32_t>(buffer.sample_rate_hz) * 2);
  put16(out, 2);
  put16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put32(out, data_size);
  for (double s : buffer.samples)
    put16(out, static_cast<std::uint16_t>(to_pcm16(s)));
  return out;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::kIoError, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

inline AudioBuffer read_wav(const std::filesystem::path& path) {
  return decode_wav(read_file_bytes(path));
}

inline void write_wav(const AudioBuffer& buffer, const std::filesystem::path& path) {
  const auto bytes = encode_wav(buffer);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::kIoError, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Errc::kIoError, "short write to " + path.string());
}

}  // namespace pscaug
