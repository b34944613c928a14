// pscaug/channel.hpp

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
#include <functional>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "pscaug/audio.hpp"
#include "pscaug/error.hpp"
#include "pscaug/rng.hpp"

namespace pscaug {

struct PhaserParams {
  double in_gain = 0.8;
  double out_gain = 0.74;
  double delay_ms = 3.0;
  double decay = 0.4;
  double speed_hz = 0.5;

  void validate() const {
    if (!(decay >= 0.0 && decay < 1.0)) fail(Errc::kInvalidArgument, "phaser decay must be in [0, 1)");
    if (!(delay_ms > 0.0)) fail(Errc::kInvalidArgument, "phaser delay must be > 0");
    if (!(speed_hz > 0.0)) fail(Errc::kInvalidArgument, "phaser speed must be > 0");
  }
};

struct ChannelConfig {
  double gain_db = 20.0;
  std::vector<double> cutoff_choices_hz{300.0, 600.0, 1000.0, 1500.0};
  PhaserParams phaser;
  double apply_probability = 0.5;

  void validate(int sample_rate_hz) const {
    if (!(gain_db >= 0.0)) fail(Errc::kInvalidArgument, "channel gain must be >= 0 dB");
    if (cutoff_choices_hz.empty()) fail(Errc::kInvalidArgument, "no high-pass cutoffs configured");
    for (double c : cutoff_choices_hz)
      if (!(c > 0.0 && c < sample_rate_hz / 2.0))
        fail(Errc::kCutoffAboveNyquist, "cutoff " + std::to_string(c) + " Hz at " +
                                            std::to_string(sample_rate_hz) + " Hz");
    if (!(apply_probability >= 0.0 && apply_probability <= 1.0))
      fail(Errc::kInvalidArgument, "apply_probability must be in [0, 1]");
    phaser.validate();
  }
};

/// Second-order Butterworth high-pass (bilinear, prewarped at the cutoff so
/// the -3 dB point lands exactly there). Single forward pass.
inline AudioBuffer highpass(const AudioBuffer& buffer, double cutoff_hz) {
  const double fs = buffer.sample_rate_hz;
  if (!(cutoff_hz > 0.0)) fail(Errc::kInvalidArgument, "cutoff must be positive");
  if (!(cutoff_hz < fs / 2.0))
    fail(Errc::kCutoffAboveNyquist, std::to_string(cutoff_hz) + " Hz >= Nyquist");

  const double w0 = 2.0 * std::numbers::pi * cutoff_hz / fs;
  const double cw = std::cos(w0);
  const double alpha = std::sin(w0) / std::numbers::sqrt2;  // Q = 1/sqrt(2)
  const double a0 = 1.0 + alpha;
  const double b0 = (1.0 + cw) / 2.0 / a0;
  const double b1 = -(1.0 + cw) / a0;
  const double b2 = b0;
  const double a1 = -2.0 * cw / a0;
  const double a2 = (1.0 - alpha) / a0;

  AudioBuffer out = buffer;
  double s1 = 0.0, s2 = 0.0;  // transposed direct form II state
  for (double& v : out.samples) {
    const double x = v;
    const double y = b0 * x + s1;
    s1 = b1 * x - a1 * y + s2;
    s2 = b2 * x - a2 * y;
    v = y;
  }
  return out;
}

/// Modulated single-tap delay:
///   y[n] = out_gain * (in_gain * x[n] + decay * x[n - d[n]])
///   d[n] = D * (1 + sin(2 pi speed n / rate)) / 2,  D = delay_ms * rate / 1000
/// with linear interpolation between neighbouring samples.
inline AudioBuffer phaser(const AudioBuffer& buffer, const PhaserParams& params = {}) {
  params.validate();
  const double rate = buffer.sample_rate_hz;
  const double delay_samples = params.delay_ms * rate / 1000.0;
  if (delay_samples < 1.0) fail(Errc::kInvalidArgument, "phaser delay is under one sample");

  const auto& x = buffer.samples;
  const auto at = [&x](std::ptrdiff_t i) {
    return i < 0 ? 0.0 : x[static_cast<std::size_t>(i)];
  };
  AudioBuffer out = buffer;
  const double w = 2.0 * std::numbers::pi * params.speed_hz / rate;
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double d = delay_samples * (1.0 + std::sin(w * static_cast<double>(n))) / 2.0;
    const double pos = static_cast<double>(n) - d;
    const double base = std::floor(pos);
    const double frac = pos - base;
    const auto i = static_cast<std::ptrdiff_t>(base);
    const double delayed = (1.0 - frac) * at(i) + frac * at(i + 1);
    out.samples[n] = params.out_gain * (params.in_gain * x[n] + params.decay * delayed);
  }
  return out;
}

/// Observer for each intermediate stage: "normalize", "clip", "highpass", "phaser".
using StageTrace = std::function<void(std::string_view stage, const AudioBuffer&)>;

struct ChannelResult {
  AudioBuffer audio;
  double cutoff_hz = 0.0;
  double clipped_fraction = 0.0;
};

/// Handheld-radio chain at a given high-pass cutoff: peak-normalize to
/// 0 dBFS, overdrive and hard clip, high-pass, then phaser. The high-pass
/// output is limited to +-1 (filter overshoot on clipped edges would
/// otherwise exceed full scale).
inline ChannelResult walkie_talkie_at(const AudioBuffer& buffer, const ChannelConfig& config,
                                      double cutoff_hz, const StageTrace& trace = {}) {
  config.validate(buffer.sample_rate_hz);
  ChannelResult result;
  result.cutoff_hz = cutoff_hz;

  AudioBuffer stage = peak_normalize(buffer, 0.0);
  if (trace) trace("normalize", stage);
  ClipResult clipped = gain_and_clip(stage, config.gain_db);
  result.clipped_fraction = clipped.clipped_fraction;
  if (trace) trace("clip", clipped.audio);
  stage = highpass(clipped.audio, cutoff_hz);
  for (double& v : stage.samples) v = std::clamp(v, -1.0, 1.0);
  if (trace) trace("highpass", stage);
  result.audio = phaser(stage, config.phaser);
  if (trace) trace("phaser", result.audio);
  return result;
}

inline double draw_cutoff(const ChannelConfig& config, Rng& rng) {
  if (config.cutoff_choices_hz.empty()) fail(Errc::kInvalidArgument, "no high-pass cutoffs configured");
  return config.cutoff_choices_hz[rng.index(config.cutoff_choices_hz.size())];
}

/// The chain with the cutoff drawn uniformly from the configured choices
/// (one draw from rng).
inline ChannelResult walkie_talkie(const AudioBuffer& buffer, const ChannelConfig& config, Rng& rng,
                                   const StageTrace& trace = {}) {
  config.validate(buffer.sample_rate_hz);
  return walkie_talkie_at(buffer, config, draw_cutoff(config, rng), trace);
}

}  // namespace pscaug
