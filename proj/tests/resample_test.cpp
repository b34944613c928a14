// tests/resample_test.cpp

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

#include "pscaug/resample.hpp"
#include "test_support.hpp"

using namespace pscaug;
using testing_support::rms;
using testing_support::sine;

namespace {

double normalized_xcorr(const std::vector<double>& a, const std::vector<double>& b, std::size_t from,
                        std::size_t to) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = from; i < to; ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

}  // namespace

TEST(Resample, OutputLength) {
  for (std::size_t n : {1u, 2u, 3u, 999u, 16000u, 16001u}) {
    const AudioBuffer x(std::vector<double>(n, 0.1), 16000);
    EXPECT_EQ(resample(x, 8000).size(), static_cast<std::size_t>(std::llround(n * 0.5 + 1e-9)))
        << n;
    EXPECT_EQ(resample(x, 44100).size(), (n * 44100 + 8000) / 16000) << n;
  }
}

TEST(Resample, SameRateIsIdentity) {
  const auto x = testing_support::white_noise(100, 8000, 1);
  EXPECT_EQ(resample(x, 8000).samples, x.samples);
}

TEST(Resample, DcIsPreserved) {
  const AudioBuffer x(std::vector<double>(16000, 0.4), 16000);
  for (int target : {8000, 11025, 22050}) {
    const auto y = resample(x, target);
    EXPECT_EQ(y.sample_rate_hz, target);
    for (double v : y.samples) EXPECT_NEAR(v, 0.4, 1e-3);
  }
}

TEST(Resample, InBandSineSurvivesDownsampling) {
  const auto y = resample(sine(1000.0, 1.0, 16000, 0.8), 8000);
  const auto ref = sine(1000.0, 1.0, 8000, 0.8);
  EXPECT_GT(normalized_xcorr(y.samples, ref.samples, 64, y.size() - 64), 0.99);
}

TEST(Resample, AliasBandIsRejected) {
  const auto x = sine(7000.0, 1.0, 16000, 0.8);
  const auto y = resample(x, 8000);
  // Skip the edge transients where the reflection padding is not a sine.
  const double ratio_db = 20.0 * std::log10(rms(y.samples, 100) / rms(x.samples));
  EXPECT_LT(ratio_db, -40.0);
}

TEST(Resample, UpThenDownRoundTrip) {
  const auto x = testing_support::babble(1.0, 8000, 3);
  const auto back = resample(resample(x, 16000), 8000);
  ASSERT_EQ(back.size(), x.size());
  EXPECT_GT(normalized_xcorr(x.samples, back.samples, 100, x.size() - 100), 0.99);
}

TEST(Resample, IrregularRatioStaysFinite) {
  const auto x = testing_support::white_noise(4410, 44100, 2);
  const auto y = resample(x, 8000);
  EXPECT_EQ(y.size(), 800u);
  EXPECT_TRUE(all_finite(y.samples));
}
