// pscaug/noise.hpp

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
#include <map>
#include <string>
#include <vector>

#include "pscaug/audio.hpp"
#include "pscaug/error.hpp"
#include "pscaug/manifest.hpp"
#include "pscaug/resample.hpp"
#include "pscaug/rng.hpp"
#include "pscaug/wav.hpp"

namespace pscaug {

struct NoiseClip {
  AudioBuffer audio;
  std::string source_id;
  std::string source_class;
  double weight = 1.0;  // replication factor of the clip's class
};

struct SnrBand {
  std::string name;
  double low_db = 0.0;
  double high_db = 0.0;

  void validate() const {
    if (!(low_db <= high_db)) fail(Errc::kInvalidArgument, "snr band '" + name + "' has low > high");
  }
};

inline std::vector<SnrBand> default_snr_bands() { return {{"low", 1.0, 8.0}, {"mid", 9.0, 15.0}}; }

struct NoiseEvent {
  std::string clip_id;
  double start_offset_s = 0.0;
  double snr_db = 0.0;

  bool operator==(const NoiseEvent&) const = default;
};

struct NoiseClassSummary {
  std::size_t clips = 0;
  double minutes = 0.0;
  double weight = 1.0;
  double effective_minutes() const { return minutes * weight; }
};

/// Weighted clip pool; immutable once built.
class NoisePool {
 public:
  NoisePool() = default;
  explicit NoisePool(std::vector<NoiseClip> clips) : clips_(std::move(clips)) {
    double acc = 0.0;
    for (const auto& c : clips_) {
      if (!(c.weight > 0.0)) fail(Errc::kInvalidArgument, "clip " + c.source_id + " has weight <= 0");
      if (is_silent(c.audio.samples)) fail(Errc::kSilentNoise, "clip " + c.source_id + " is silent");
      acc += c.weight;
      cumulative_.push_back(acc);
      auto& s = classes_[c.source_class];
      s.clips += 1;
      s.minutes += c.audio.duration_s() / 60.0;
      s.weight = c.weight;
    }
    if (clips_.empty()) fail(Errc::kEmptyPool, "noise pool has no clips");
  }

  const std::vector<NoiseClip>& clips() const { return clips_; }
  const std::map<std::string, NoiseClassSummary>& classes() const { return classes_; }

  const NoiseClip* find(const std::string& id) const {
    for (const auto& c : clips_)
      if (c.source_id == id) return &c;
    return nullptr;
  }

  const NoiseClip& draw(Rng& rng) const {
    const double target = rng.uniform01() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    if (it == cumulative_.end()) --it;
    return clips_[static_cast<std::size_t>(it - cumulative_.begin())];
  }

 private:
  std::vector<NoiseClip> clips_;
  std::vector<double> cumulative_;
  std::map<std::string, NoiseClassSummary> classes_;
};

/// Manifest lines are "clip-id class wav-path"; every class must appear in
/// class_weights. Clips are resampled to target_rate_hz.
inline NoisePool build_noise_pool(const std::filesystem::path& manifest,
                                  const std::map<std::string, double>& class_weights,
                                  int target_rate_hz) {
  std::vector<NoiseClip> clips;
  for (const auto& line : read_manifest(manifest, 3)) {
    const auto& cls = line.fields[1];
    auto w = class_weights.find(cls);
    if (w == class_weights.end())
      fail(Errc::kUnknownClass, "class '" + cls + "' at " + manifest.string() + ":" +
                                    std::to_string(line.line_no));
    AudioBuffer audio = resample(read_wav(resolve_path(manifest, line.fields[2])), target_rate_hz);
    clips.push_back({std::move(audio), line.fields[0], cls, w->second});
  }
  if (clips.empty()) fail(Errc::kEmptyPool, "no clips in " + manifest.string());
  return NoisePool(std::move(clips));
}

/// Draw order: clip, then start offset, then SNR.
inline NoiseEvent draw_noise_event(const NoisePool& pool, const SnrBand& band, Rng& rng) {
  band.validate();
  const NoiseClip& clip = pool.draw(rng);
  NoiseEvent event;
  event.clip_id = clip.source_id;
  event.start_offset_s = rng.uniform01() * clip.audio.duration_s();
  event.snr_db = rng.uniform(band.low_db, band.high_db);
  return event;
}

/// `length` samples read cyclically from `start`.
inline std::vector<double> tile_noise(const std::vector<double>& noise, std::size_t start,
                                      std::size_t length) {
  std::vector<double> out(length);
  const std::size_t n = noise.size();
  std::size_t idx = start % n;
  for (std::size_t i = 0; i < length; ++i) {
    out[i] = noise[idx];
    if (++idx == n) idx = 0;
  }
  return out;
}

inline std::size_t offset_to_sample(double offset_s, int rate_hz) {
  return static_cast<std::size_t>(std::floor(offset_s * rate_hz));
}

struct MixResult {
  AudioBuffer audio;
  double noise_gain = 0.0;
  // Factor applied to the whole mixture when it overflowed full scale.
  double rescale = 1.0;
};

/// Adds the noise at the requested SNR, powers measured over the whole
/// speech chunk. A mixture peaking above 1.0 is rescaled to 0.999.
inline MixResult mix_at_snr(const AudioBuffer& speech, const AudioBuffer& noise,
                            const NoiseEvent& event) {
  if (speech.sample_rate_hz != noise.sample_rate_hz)
    fail(Errc::kRateMismatch, "speech and noise sample rates differ");
  if (noise.empty()) fail(Errc::kSilentNoise, "empty noise clip " + event.clip_id);
  const double ps = mean_power(speech.samples);
  if (ps == 0.0) fail(Errc::kSilentInput, "speech chunk is silent");

  const std::vector<double> tiled =
      tile_noise(noise.samples, offset_to_sample(event.start_offset_s, noise.sample_rate_hz),
                 speech.size());
  const double pn = mean_power(tiled);
  if (pn == 0.0) fail(Errc::kSilentNoise, "noise segment from " + event.clip_id + " is silent");

  MixResult result;
  result.noise_gain = std::sqrt(ps / (pn * std::pow(10.0, event.snr_db / 10.0)));
  result.audio = speech;
  for (std::size_t i = 0; i < tiled.size(); ++i)
    result.audio.samples[i] += result.noise_gain * tiled[i];
  const double peak = peak_abs(result.audio.samples);
  if (peak > 1.0) {
    result.rescale = 0.999 / peak;
    for (double& v : result.audio.samples) v *= result.rescale;
  }
  return result;
}

}  // namespace pscaug
