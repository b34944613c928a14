// pscaug/audio.hpp

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
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "pscaug/error.hpp"

namespace pscaug {

/// Mono audio at a fixed sample rate. Samples are nominally in [-1, 1].
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate_hz = 8000;

  AudioBuffer() = default;
  AudioBuffer(std::vector<double> s, int rate)
      : samples(std::move(s)), sample_rate_hz(rate) {
    if (rate <= 0) fail(Errc::kInvalidArgument, "sample rate must be positive");
  }

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  double duration_s() const noexcept {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
  std::span<const double> view() const noexcept { return samples; }
};

inline bool all_finite(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(),
                     [](double v) { return std::isfinite(v); });
}

inline bool is_silent(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; });
}

inline double peak_abs(std::span<const double> x) {
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  return peak;
}

inline double mean_power(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

inline double db_to_amplitude(double db) { return std::pow(10.0, db / 20.0); }

inline double amplitude_to_db(double amplitude) {
  if (amplitude <= 0.0) return -std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(amplitude);
}

struct LevelReport {
  double peak_dbfs = -std::numeric_limits<double>::infinity();
  double rms_dbfs = -std::numeric_limits<double>::infinity();
  double clipped_fraction = 0.0;  // samples with |s| >= 1
};

/// Peak is referenced to |s| = 1 and RMS to RMS = 1, so a full-scale square
/// wave reads 0 dBFS on both. Silence reads -inf on both.
inline LevelReport measure_levels(const AudioBuffer& buffer) {
  LevelReport report;
  if (buffer.empty()) return report;
  std::size_t clipped = 0;
  for (double v : buffer.samples)
    if (std::abs(v) >= 1.0) ++clipped;
  report.peak_dbfs = amplitude_to_db(peak_abs(buffer.samples));
  report.rms_dbfs = amplitude_to_db(std::sqrt(mean_power(buffer.samples)));
  report.clipped_fraction =
      static_cast<double>(clipped) / static_cast<double>(buffer.size());
  return report;
}

/// Single scalar gain so that max |s| lands on target_dbfs.
inline AudioBuffer peak_normalize(const AudioBuffer& buffer,
                                  double target_dbfs) {
  const double peak = peak_abs(buffer.samples);
  if (peak == 0.0) fail(Errc::kSilentInput, "cannot normalize a silent buffer");
  const double scale = db_to_amplitude(target_dbfs) / peak;
  AudioBuffer out = buffer;
  for (double& v : out.samples) v *= scale;
  return out;
}

struct ClipResult {
  AudioBuffer audio;
  double clipped_fraction = 0.0;
};

/// Linear gain followed by hard saturation at +-1.
inline ClipResult gain_and_clip(const AudioBuffer& buffer, double gain_db) {
  const double gain = db_to_amplitude(gain_db);
  ClipResult result{buffer, 0.0};
  std::size_t clipped = 0;
  for (double& v : result.audio.samples) {
    v *= gain;
    if (v > 1.0) {
      v = 1.0;
      ++clipped;
    } else if (v < -1.0) {
      v = -1.0;
      ++clipped;
    }
  }
  if (!buffer.empty())
    result.clipped_fraction =
        static_cast<double>(clipped) / static_cast<double>(buffer.size());
  return result;
}

}  // namespace pscaug
