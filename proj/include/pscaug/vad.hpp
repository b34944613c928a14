// pscaug/vad.hpp

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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pscaug/audio.hpp"
#include "pscaug/error.hpp"

namespace pscaug {

struct SpeechSegment {
  double start_s = 0.0;
  double end_s = 0.0;
  double duration_s() const { return end_s - start_s; }
  bool operator==(const SpeechSegment&) const = default;
};

/// Consecutive speech segments grouped until their speech time reaches the
/// minimum chunk length. Augmentation parameters are redrawn per chunk.
struct SegmentChunk {
  std::vector<SpeechSegment> segments;
  double total_speech_s = 0.0;
};

struct VadConfig {
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  double energy_margin_db = 6.0;
  int hangover_frames = 5;
  double min_chunk_s = 5.0;
  // Frames quieter than this are never speech, whatever the file statistics.
  double silence_floor_dbfs = -80.0;
  double noise_floor_percentile = 30.0;

  void validate() const {
    if (!(hop_ms > 0.0) || frame_ms < hop_ms)
      fail(Errc::kInvalidArgument, "vad: need frame_ms >= hop_ms > 0");
    if (!(min_chunk_s > 0.0)) fail(Errc::kInvalidArgument, "vad: min_chunk_s must be > 0");
    if (hangover_frames < 0) fail(Errc::kInvalidArgument, "vad: negative hangover");
  }
};

using SegmentTable = std::map<std::string, std::vector<SpeechSegment>>;

inline std::vector<double> frame_energies_db(const AudioBuffer& buffer,
                                             std::size_t frame_len,
                                             std::size_t hop) {
  std::vector<double> energies;
  if (buffer.size() < frame_len) return energies;
  const std::size_t frames = 1 + (buffer.size() - frame_len) / hop;
  energies.reserve(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    const double p = mean_power(
        std::span<const double>(buffer.samples).subspan(f * hop, frame_len));
    energies.push_back(10.0 * std::log10(p + 1e-20));
  }
  return energies;
}

/// Energy detector. The noise floor is a low percentile of the frame
/// energies; a frame is speech when it clears floor + margin. The threshold
/// is capped at (loudest frame - margin) so a uniformly loud file is all
/// speech, and the absolute silence floor keeps digital silence out.
inline std::vector<SpeechSegment> detect_speech(const AudioBuffer& buffer,
                                                const VadConfig& config = {}) {
  config.validate();
  const double rate = buffer.sample_rate_hz;
  const auto frame_len = static_cast<std::size_t>(std::lround(config.frame_ms * rate / 1000.0));
  const auto hop = static_cast<std::size_t>(std::lround(config.hop_ms * rate / 1000.0));
  if (frame_len == 0 || hop == 0 || buffer.size() < frame_len)
    fail(Errc::kBufferTooShort, "buffer shorter than one analysis frame");

  const std::vector<double> energy = frame_energies_db(buffer, frame_len, hop);
  std::vector<double> sorted = energy;
  const auto rank = static_cast<std::size_t>(
      std::floor(config.noise_floor_percentile / 100.0 * static_cast<double>(sorted.size() - 1)));
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank), sorted.end());
  const double floor_db = sorted[rank];
  const double loudest = *std::max_element(energy.begin(), energy.end());
  const double threshold = std::min(floor_db + config.energy_margin_db,
                                    loudest - config.energy_margin_db);

  const std::size_t n = energy.size();
  std::vector<bool> speech(n, false);
  for (std::size_t f = 0; f < n; ++f)
    speech[f] = energy[f] > threshold && energy[f] > config.silence_floor_dbfs;

  // Hangover: keep each speech run alive for a few frames after it ends.
  std::vector<bool> extended = speech;
  for (std::size_t f = 0; f < n; ++f) {
    if (!speech[f]) continue;
    const std::size_t until = std::min(n, f + 1 + static_cast<std::size_t>(config.hangover_frames));
    for (std::size_t g = f + 1; g < until; ++g) extended[g] = true;
  }

  std::vector<SpeechSegment> segments;
  const double duration = buffer.duration_s();
  for (std::size_t f = 0; f < n;) {
    if (!extended[f]) {
      ++f;
      continue;
    }
    std::size_t last = f;
    while (last + 1 < n && extended[last + 1]) ++last;
    const double start = static_cast<double>(f * hop) / rate;
    const double end = std::min(duration, static_cast<double>(last * hop + frame_len) / rate);
    if (!segments.empty() && start <= segments.back().end_s)
      segments.back().end_s = std::max(segments.back().end_s, end);
    else
      segments.push_back({start, end});
    f = last + 1;
  }
  return segments;
}

inline void sort_and_check_segments(const std::string& recording,
                                    std::vector<SpeechSegment>& segments) {
  std::sort(segments.begin(), segments.end(),
            [](const SpeechSegment& a, const SpeechSegment& b) {
              return a.start_s < b.start_s || (a.start_s == b.start_s && a.end_s < b.end_s);
            });
  for (std::size_t i = 1; i < segments.size(); ++i)
    if (segments[i].start_s < segments[i - 1].end_s)
      fail(Errc::kOverlapError, "overlapping segments for " + recording);
}

/// Reads "recording-id start end" lines into per-recording sorted lists.
inline SegmentTable parse_segments(std::istream& in) {
  SegmentTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string id;
    if (!(fields >> id)) continue;
    SpeechSegment seg;
    std::string extra;
    if (!(fields >> seg.start_s >> seg.end_s) || (fields >> extra) ||
        !(seg.start_s >= 0.0) || !(seg.end_s > seg.start_s))
      fail(Errc::kMalformedSegmentLine, "line " + std::to_string(line_no) + ": '" + line + "'");
    table[id].push_back(seg);
  }
  for (auto& [id, segs] : table) sort_and_check_segments(id, segs);
  return table;
}

inline SegmentTable import_segments(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::kIoError, "cannot open " + path.string());
  return parse_segments(in);
}

inline void write_segments(std::ostream& out, const std::string& recording,
                           const std::vector<SpeechSegment>& segments) {
  for (const auto& s : segments)
    out << recording << ' ' << s.start_s << ' ' << s.end_s << '\n';
}

/// Greedy in-order grouping. A short trailing remainder joins the previous
/// chunk; if nothing closed, the remainder is the sole chunk.
inline std::vector<SegmentChunk> group_chunks(const std::vector<SpeechSegment>& segments,
                                              double min_chunk_s) {
  if (!(min_chunk_s > 0.0)) fail(Errc::kInvalidArgument, "min_chunk_s must be > 0");
  std::vector<SegmentChunk> chunks;
  SegmentChunk open;
  for (const auto& seg : segments) {
    open.segments.push_back(seg);
    open.total_speech_s += seg.duration_s();
    if (open.total_speech_s >= min_chunk_s) {
      chunks.push_back(std::move(open));
      open = SegmentChunk{};
    }
  }
  if (!open.segments.empty()) {
    if (chunks.empty()) {
      chunks.push_back(std::move(open));
    } else {
      auto& last = chunks.back();
      last.segments.insert(last.segments.end(), open.segments.begin(), open.segments.end());
      last.total_speech_s += open.total_speech_s;
    }
  }
  return chunks;
}

/// "recording-id chunk-index start end [start end ...]"
inline void write_chunk_manifest(std::ostream& out, const std::string& recording,
                                 const std::vector<SegmentChunk>& chunks) {
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    out << recording << ' ' << i;
    for (const auto& s : chunks[i].segments) out << ' ' << s.start_s << ' ' << s.end_s;
    out << '\n';
  }
}

}  // namespace pscaug
