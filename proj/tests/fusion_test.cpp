// tests/fusion_test.cpp

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

#include "pscaug/fusion.hpp"
#include "synthetic_asr.hpp"

using namespace pscaug;
using testing_support::corrupt;
using testing_support::synthetic_reference;

TEST(LabelWords, CaseFoldOnly) {
  const std::vector<HypothesisWord> hyp{{"Hello", 0, 0.1, 0.9, std::nullopt},
                                        {"uh", 0.1, 0.1, 0.9, std::nullopt},
                                        {"world", 0.2, 0.1, 0.9, std::nullopt}};
  TextNormalizer norm;
  norm.drop_tokens = {"uh"};
  EXPECT_EQ(label_words(hyp, {"hello", "world"}, norm), (std::vector<bool>{true, false, true}));
}

TEST(Fuse, SingleSystemPassesThrough) {
  const auto ref = synthetic_reference(200, 10, 50, 1);
  const auto sys = corrupt(ref, {}, 2);
  const auto r = run_fuse({sys});
  EXPECT_EQ(r.fused, sys);
  EXPECT_TRUE(r.skipped.empty());
  EXPECT_FALSE(r.fused_wer);
}

TEST(Fuse, SkipsUtterancesMissingFromASystem) {
  const auto ref = synthetic_reference(100, 10, 50, 3);
  auto a = corrupt(ref, {}, 4);
  auto b = corrupt(ref, {}, 5);
  b.erase({"utt3", "1"});
  const auto r = run_fuse({a, b});
  ASSERT_EQ(r.skipped.size(), 1u);
  EXPECT_EQ(r.skipped[0].recording, "utt3");
  EXPECT_EQ(r.fused.size(), 9u);
}

TEST(Fuse, ThreeSystemsBeatTheBest) {
  const auto ref = synthetic_reference(3000, 10, 500, 6);
  const std::vector<HypothesisTable> systems{corrupt(ref, {}, 7), corrupt(ref, {}, 8), corrupt(ref, {}, 9)};
  const auto r = run_fuse(systems, {}, &ref);
  ASSERT_EQ(r.systems.size(), 3u);
  double best = 1e9;
  for (const auto& s : r.systems) best = std::min(best, s.wer.wer_percent());
  EXPECT_GT(best, 15.0);
  EXPECT_LT(r.fused_wer->wer_percent(), best);
  EXPECT_TRUE(r.fused_nce);
  EXPECT_TRUE(r.nce_before);
  EXPECT_FALSE(r.nce_after);
}

TEST(Fuse, CalibrationImprovesPooledNce) {
  testing_support::CorruptionModel m;
  m.wrong_low = 0.7;
  m.wrong_high = 1.0;
  m.correct_low = 0.75;
  const auto train_ref = synthetic_reference(3000, 10, 500, 10);
  std::vector<CalibrationExample> examples;
  for (std::uint64_t s : {11, 12, 13}) {
    const auto ex = calibration_examples(corrupt(train_ref, m, s), train_ref);
    examples.insert(examples.end(), ex.begin(), ex.end());
  }
  FuseOptions opt;
  opt.pooled_calibration = train_calibration(examples, 1e-3);

  const auto test_ref = synthetic_reference(3000, 10, 500, 20);
  const std::vector<HypothesisTable> systems{corrupt(test_ref, m, 21), corrupt(test_ref, m, 22)};
  const auto r = run_fuse(systems, opt, &test_ref);
  ASSERT_TRUE(r.nce_before && r.nce_after);
  EXPECT_GT(*r.nce_after, *r.nce_before);
  for (const auto& s : r.systems) EXPECT_GT(*s.nce_after, *s.nce_before);
}

TEST(Fuse, PerSystemCalibrationNeedsOneModelEach) {
  const auto ref = synthetic_reference(50, 10, 20, 30);
  FuseOptions opt;
  opt.per_system_calibration.resize(1);
  EXPECT_THROW(run_fuse({corrupt(ref, {}, 1), corrupt(ref, {}, 2)}, opt), Error);
  opt.per_system_calibration.resize(2);
  EXPECT_NO_THROW(run_fuse({corrupt(ref, {}, 1), corrupt(ref, {}, 2)}, opt));
  EXPECT_THROW(run_fuse({}), Error);
}
