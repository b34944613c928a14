// pscaug/resample.hpp

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
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <vector>

#include "pscaug/audio.hpp"
#include "pscaug/error.hpp"

namespace pscaug {

struct ResamplerDesign {
  int taps_per_phase = 64;
  double kaiser_beta = 8.6;
  // Anti-alias cutoff as a fraction of the lower of the two Nyquist rates.
  double cutoff_fraction = 0.9;
};

namespace resample_detail {

inline double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

inline double kaiser(double x, double half_width, double beta) {
  const double r = x / half_width;
  if (r <= -1.0 || r >= 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - r * r)) /
         std::cyl_bessel_i(0.0, beta);
}

// Whole-sample symmetric reflection keeps DC exact at the edges.
inline std::int64_t reflect(std::int64_t i, std::int64_t n) {
  if (n == 1) return 0;
  const std::int64_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

// Taps for one phase, normalized to unit DC gain. Tap j multiplies input
// sample (base - half + 1 + j) where base = floor(position).
inline std::vector<double> phase_taps(double frac, double cutoff_norm,
                                      const ResamplerDesign& design) {
  const int taps = design.taps_per_phase;
  const int half = taps / 2;
  std::vector<double> h(static_cast<std::size_t>(taps));
  double sum = 0.0;
  for (int j = 0; j < taps; ++j) {
    const double x = static_cast<double>(half - 1 - j) + frac;
    h[static_cast<std::size_t>(j)] = 2.0 * cutoff_norm * sinc(2.0 * cutoff_norm * x) *
                                     kaiser(x, half, design.kaiser_beta);
    sum += h[static_cast<std::size_t>(j)];
  }
  for (double& v : h) v /= sum;
  return h;
}

}  // namespace resample_detail

/// Polyphase Kaiser-windowed-sinc rate conversion. Zero-phase: output sample
/// n sits at input time n * src / dst, so no delay compensation is needed.
inline AudioBuffer resample(const AudioBuffer& buffer, int target_rate_hz,
                            const ResamplerDesign& design = {}) {
  using namespace resample_detail;
  if (target_rate_hz <= 0 || buffer.sample_rate_hz <= 0)
    fail(Errc::kInvalidArgument, "sample rates must be positive");
  if (target_rate_hz == buffer.sample_rate_hz || buffer.empty()) {
    AudioBuffer out = buffer;
    out.sample_rate_hz = target_rate_hz;
    return out;
  }

  const std::int64_t src = buffer.sample_rate_hz;
  const std::int64_t dst = target_rate_hz;
  const std::int64_t g = std::gcd(src, dst);
  const std::int64_t up = dst / g;    // phases
  const std::int64_t down = src / g;  // input step per output, in phases
  const auto n_in = static_cast<std::int64_t>(buffer.size());
  const std::int64_t n_out = (n_in * dst + src / 2) / src;

  const double cutoff_hz =
      design.cutoff_fraction * 0.5 * static_cast<double>(std::min(src, dst));
  const double cutoff_norm = cutoff_hz / static_cast<double>(src);
  const int taps = design.taps_per_phase;
  const int half = taps / 2;

  const bool tabulate = up <= 4096;
  std::vector<std::vector<double>> table;
  if (tabulate) {
    table.reserve(static_cast<std::size_t>(up));
    for (std::int64_t p = 0; p < up; ++p)
      table.push_back(phase_taps(static_cast<double>(p) / static_cast<double>(up),
                                 cutoff_norm, design));
  }

  std::vector<double> out(static_cast<std::size_t>(n_out));
  const auto& x = buffer.samples;
  for (std::int64_t n = 0; n < n_out; ++n) {
    const std::int64_t num = n * down;
    const std::int64_t base = num / up;
    const std::int64_t phase = num % up;
    std::vector<double> scratch;
    const std::vector<double>* h = nullptr;
    if (tabulate) {
      h = &table[static_cast<std::size_t>(phase)];
    } else {
      scratch = phase_taps(static_cast<double>(phase) / static_cast<double>(up),
                           cutoff_norm, design);
      h = &scratch;
    }
    double acc = 0.0;
    const std::int64_t first = base - half + 1;
    for (int j = 0; j < taps; ++j) {
      std::int64_t k = first + j;
      if (k < 0 || k >= n_in) k = reflect(k, n_in);
      acc += (*h)[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(k)];
    }
    out[static_cast<std::size_t>(n)] = acc;
  }
  return AudioBuffer(std::move(out), target_rate_hz);
}

}  // namespace pscaug
