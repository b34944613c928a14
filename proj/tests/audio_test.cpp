// tests/audio_test.cpp

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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "pscaug/audio.hpp"
#include "test_support.hpp"

using namespace pscaug;
using testing_support::sine;
using testing_support::white_noise;

TEST(AudioBuffer, RejectsNonPositiveRate) {
  EXPECT_THROW(AudioBuffer({0.0}, 0), Error);
  EXPECT_THROW(AudioBuffer({0.0}, -8000), Error);
  EXPECT_DOUBLE_EQ(AudioBuffer(std::vector<double>(8000), 8000).duration_s(), 1.0);
}

TEST(PeakNormalize, ScalesToTarget) {
  const auto out = peak_normalize(AudioBuffer({0.5, -0.25}, 8000), 0.0);
  EXPECT_DOUBLE_EQ(out.samples[0], 1.0);
  EXPECT_DOUBLE_EQ(out.samples[1], -0.5);
}

TEST(PeakNormalize, FullScaleIsIdentity) {
  const AudioBuffer in({1.0, -0.3, 0.7}, 8000);
  EXPECT_EQ(peak_normalize(in, 0.0).samples, in.samples);
}

TEST(PeakNormalize, RemeasuredPeakMatchesTarget) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto x = white_noise(4000, 8000, seed, 0.1 * static_cast<double>(seed));
    for (double target : {-6.0, -20.0, 0.0, -0.5}) {
      const auto y = peak_normalize(x, target);
      EXPECT_NEAR(measure_levels(y).peak_dbfs, target, 1e-6);
      // single scalar: ratios preserved
      EXPECT_NEAR(y.samples[7] / y.samples[3], x.samples[7] / x.samples[3], 1e-9);
    }
  }
}

TEST(PeakNormalize, SilentInputThrows) {
  try {
    peak_normalize(AudioBuffer(std::vector<double>(10, 0.0), 8000), 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kSilentInput);
  }
}

TEST(GainAndClip, OverdriveClips) {
  const auto r = gain_and_clip(AudioBuffer({0.5}, 8000), 20.0);
  EXPECT_DOUBLE_EQ(r.audio.samples[0], 1.0);
  EXPECT_DOUBLE_EQ(r.clipped_fraction, 1.0);
}

TEST(GainAndClip, ZeroGainIsIdentity) {
  const auto x = white_noise(1000, 8000, 3, 1.0);
  const auto r = gain_and_clip(x, 0.0);
  EXPECT_EQ(r.audio.samples, x.samples);
  EXPECT_EQ(r.clipped_fraction, 0.0);
}

TEST(GainAndClip, NegativeGainNeverClips) {
  const auto x = white_noise(1000, 8000, 4, 1.0);
  for (double g : {-0.1, -3.0, -40.0}) EXPECT_EQ(gain_and_clip(x, g).clipped_fraction, 0.0);
}

TEST(GainAndClip, SineClipFractionMatchesDirectCount) {
  const auto x = sine(440.0, 1.0, 8000);
  const auto r = gain_and_clip(x, 20.0);
  std::size_t count = 0;
  for (double v : x.samples)
    if (std::abs(10.0 * v) > 1.0) ++count;
  EXPECT_DOUBLE_EQ(r.clipped_fraction, static_cast<double>(count) / static_cast<double>(x.size()));
  for (double v : r.audio.samples) EXPECT_LE(std::abs(v), 1.0);
}

TEST(MeasureLevels, SquareWaveIsZeroDbfs) {
  std::vector<double> sq(800);
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = (i / 10) % 2 ? 1.0 : -1.0;
  const auto r = measure_levels(AudioBuffer(sq, 8000));
  EXPECT_NEAR(r.peak_dbfs, 0.0, 1e-12);
  EXPECT_NEAR(r.rms_dbfs, 0.0, 1e-12);
}

TEST(MeasureLevels, FullScaleSine) {
  // 1 kHz at 8 kHz: integer number of periods, exact mean power of 1/2.
  const auto r = measure_levels(sine(1000.0, 1.0, 8000, 1.0, 0.3));
  EXPECT_NEAR(r.rms_dbfs, -3.0103, 1e-4);
}

TEST(MeasureLevels, SilenceIsMinusInfinity) {
  const auto r = measure_levels(AudioBuffer(std::vector<double>(100, 0.0), 8000));
  EXPECT_EQ(r.peak_dbfs, -std::numeric_limits<double>::infinity());
  EXPECT_EQ(r.rms_dbfs, -std::numeric_limits<double>::infinity());
}

TEST(MeasureLevels, MatchesTwoPassComputation) {
  const auto x = white_noise(5000, 8000, 11, 0.8);
  double peak = 0.0, sum = 0.0;
  for (double v : x.samples) peak = std::max(peak, std::fabs(v));
  for (double v : x.samples) sum += v * v;
  const auto r = measure_levels(x);
  EXPECT_NEAR(r.peak_dbfs, 20.0 * std::log10(peak), 1e-12);
  EXPECT_NEAR(r.rms_dbfs, 10.0 * std::log10(sum / 5000.0), 1e-9);
  EXPECT_GE(r.peak_dbfs, r.rms_dbfs);
  EXPECT_GE(r.clipped_fraction, 0.0);
  EXPECT_LE(r.clipped_fraction, 1.0);
}
