// pscaug/fusion.hpp

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

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pscaug/calibration.hpp"
#include "pscaug/ctm.hpp"
#include "pscaug/error.hpp"
#include "pscaug/rover.hpp"
#include "pscaug/scoring.hpp"

namespace pscaug {

/// Correctness of each hypothesis word against the reference. Hypothesis
/// words are only case-folded so labels stay index-aligned with the words.
inline std::vector<bool> label_words(const std::vector<HypothesisWord>& hyp, const std::vector<std::string>& ref,
                                     const TextNormalizer& norm = {}) {
  std::vector<std::string> words;
  words.reserve(hyp.size());
  for (const auto& w : hyp) words.push_back(w.word);
  TextNormalizer fold;
  fold.case_fold = norm.case_fold;
  return hypothesis_correctness(norm(ref), fold(words));
}

/// Training examples from a system's output. Utterances without a reference
/// are skipped.
inline std::vector<CalibrationExample> calibration_examples(const HypothesisTable& hyp, const TranscriptTable& ref,
                                                            const TextNormalizer& norm = {}) {
  std::vector<CalibrationExample> out;
  for (const auto& [id, words] : hyp) {
    auto r = ref.find(id);
    if (r == ref.end()) continue;
    const auto ok = label_words(words, r->second, norm);
    for (std::size_t i = 0; i < words.size(); ++i)
      out.push_back({words[i].confidence, words[i].lm_score.value_or(0.0), ok[i]});
  }
  return out;
}

/// (confidence, correct) pairs for NCE.
inline std::vector<std::pair<double, bool>> labelled_confidences(const HypothesisTable& hyp,
                                                                 const TranscriptTable& ref,
                                                                 const TextNormalizer& norm = {}) {
  std::vector<std::pair<double, bool>> out;
  for (const auto& ex : calibration_examples(hyp, ref, norm)) out.emplace_back(ex.confidence, ex.correct);
  return out;
}

/// NCE, or nothing when the labels are all equal.
inline std::optional<double> try_nce(const std::vector<std::pair<double, bool>>& scored) {
  try {
    return compute_nce(scored);
  } catch (const Error& e) {
    if (e.code() == Errc::kDegenerateLabels) return std::nullopt;
    throw;
  }
}

struct FuseOptions {
  VoteConfig vote;
  WtnOptions wtn;
  // Either one model for every system or one per system (in input order).
  std::optional<CalibrationModel> pooled_calibration;
  std::vector<CalibrationModel> per_system_calibration;
  TextNormalizer normalizer;
};

struct SystemScore {
  WerReport wer;
  std::optional<double> nce_before;
  std::optional<double> nce_after;  // only with calibration
};

struct FuseReport {
  HypothesisTable fused;
  std::vector<UtteranceId> skipped;  // not present in every system
  // Filled only when a reference is given.
  std::vector<SystemScore> systems;
  std::optional<WerReport> fused_wer;
  std::optional<double> fused_nce;
  std::optional<double> nce_before;  // all input words pooled
  std::optional<double> nce_after;
};

/// Applies the configured calibration to each system's table.
inline std::vector<HypothesisTable> calibrate_systems(std::vector<HypothesisTable> systems,
                                                      const FuseOptions& options) {
  if (!options.per_system_calibration.empty()) {
    if (options.per_system_calibration.size() != systems.size())
      fail(Errc::kInvalidArgument, "need one calibration model per system");
    for (std::size_t i = 0; i < systems.size(); ++i) apply_calibration(options.per_system_calibration[i], systems[i]);
  } else if (options.pooled_calibration) {
    for (auto& s : systems) apply_calibration(*options.pooled_calibration, s);
  }
  return systems;
}

/// Per utterance: align all systems into a WTN and vote. An utterance some
/// system lacks is skipped and listed. A single system passes through
/// unchanged (after calibration, if any).
inline FuseReport run_fuse(const std::vector<HypothesisTable>& inputs, const FuseOptions& options = {},
                           const TranscriptTable* reference = nullptr) {
  if (inputs.empty()) fail(Errc::kInvalidArgument, "fusion needs at least one system");
  const bool calibrating = options.pooled_calibration || !options.per_system_calibration.empty();
  const std::vector<HypothesisTable> systems = calibrate_systems(inputs, options);

  FuseReport report;
  std::set<UtteranceId> all;
  for (const auto& s : systems)
    for (const auto& [id, w] : s) all.insert(id);
  for (const auto& id : all) {
    std::vector<std::vector<HypothesisWord>> per_system;
    for (const auto& s : systems) {
      auto it = s.find(id);
      if (it == s.end()) break;
      per_system.push_back(it->second);
    }
    if (per_system.size() != systems.size()) {
      report.skipped.push_back(id);
      continue;
    }
    report.fused[id] = systems.size() == 1 ? per_system.front()
                                           : vote(build_wtn(per_system, options.wtn), options.vote);
  }

  if (reference != nullptr) {
    const auto& norm = options.normalizer;
    std::vector<std::pair<double, bool>> pooled_before, pooled_after;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      SystemScore score;
      score.wer = score_transcripts(*reference, words_of(inputs[i]), norm);
      auto before = labelled_confidences(inputs[i], *reference, norm);
      score.nce_before = try_nce(before);
      pooled_before.insert(pooled_before.end(), before.begin(), before.end());
      if (calibrating) {
        auto after = labelled_confidences(systems[i], *reference, norm);
        score.nce_after = try_nce(after);
        pooled_after.insert(pooled_after.end(), after.begin(), after.end());
      }
      report.systems.push_back(std::move(score));
    }
    report.nce_before = try_nce(pooled_before);
    if (calibrating) report.nce_after = try_nce(pooled_after);
    report.fused_wer = score_transcripts(*reference, words_of(report.fused), norm);
    report.fused_nce = try_nce(labelled_confidences(report.fused, *reference, norm));
  }
  return report;
}

}  // namespace pscaug
