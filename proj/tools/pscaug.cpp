// tools/pscaug.cpp

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

// Command-line front end: vad, chunk, rt60, augment, fuse, calibrate, score.
// Exit status is 0 only when every input was processed.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pscaug/calibration.hpp"
#include "pscaug/config.hpp"
#include "pscaug/ctm.hpp"
#include "pscaug/fusion.hpp"
#include "pscaug/pipeline.hpp"
#include "pscaug/reverb.hpp"
#include "pscaug/scoring.hpp"
#include "pscaug/vad.hpp"
#include "pscaug/wav.hpp"

namespace fs = std::filesystem;
using namespace pscaug;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string config;
  bool allow_drop_above_ceiling = false;
};

PipelineConfig config_or_default(const Globals& g) {
  PipelineConfig c = g.config.empty() ? PipelineConfig{} : read_pipeline_config(g.config);
  if (g.seed) c.master_seed = *g.seed;
  if (g.workers) c.workers = *g.workers;
  if (g.allow_drop_above_ceiling)
    for (auto& choice : c.codecs) choice.spec.allow_drop_above_ceiling = true;
  return c;
}

void print_nce(const char* label, const std::optional<double>& nce) {
  std::cout << label << ' ';
  if (nce)
    std::cout << std::fixed << std::setprecision(4) << *nce << '\n';
  else
    std::cout << "n/a\n";
  std::cout << std::defaultfloat;
}

std::vector<HypothesisTable> read_systems(const std::vector<std::string>& paths, const std::string& lm_scores) {
  std::vector<HypothesisTable> systems;
  for (const auto& p : paths) {
    HypothesisTable t = read_ctm(p);
    if (!lm_scores.empty()) {
      std::ifstream in(lm_scores);
      if (!in) fail(Errc::kIoError, "cannot open " + lm_scores);
      broadcast_lm_scores(t, in);
    }
    systems.push_back(std::move(t));
  }
  return systems;
}

int cmd_vad(const Globals& g, const std::vector<std::string>& wavs, const std::string& out_path) {
  const PipelineConfig c = config_or_default(g);
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) fail(Errc::kIoError, "cannot create " + out_path);
  }
  std::ostream& out = out_path.empty() ? std::cout : file;
  int failed = 0;
  for (const auto& w : wavs) {
    try {
      const AudioBuffer audio = read_wav(w);
      write_segments(out, fs::path(w).stem().string(), detect_speech(audio, c.vad));
    } catch (const Error& e) {
      std::cerr << w << ": " << e.what() << '\n';
      ++failed;
    }
  }
  return failed == 0 ? 0 : 1;
}

int cmd_chunk(const Globals& g, const std::string& segments, std::optional<double> min_chunk_s) {
  const PipelineConfig c = config_or_default(g);
  const double min_s = min_chunk_s.value_or(c.vad.min_chunk_s);
  for (const auto& [rec, segs] : import_segments(segments))
    write_chunk_manifest(std::cout, rec, group_chunks(segs, min_s));
  return 0;
}

int cmd_rt60(const Globals& g, const std::string& manifest, std::optional<double> max_rt60,
             std::optional<int> rate) {
  const PipelineConfig c = config_or_default(g);
  const IrPool pool = assess_ir_manifest(manifest, max_rt60.value_or(c.max_rt60_s), rate.value_or(c.sample_rate_hz));
  write_pool_report(std::cout, pool);
  std::cerr << pool.entries.size() << " kept, " << pool.excluded() << " dropped\n";
  bool unreadable = false;
  for (const auto& d : pool.report) unreadable = unreadable || !d.rt60_s;
  return pool.entries.empty() || unreadable ? 1 : 0;
}

int cmd_augment(const Globals& g) {
  if (g.config.empty()) fail(Errc::kConfigError, "augment needs --config");
  const AugmentSummary s = run_augment(config_or_default(g));
  for (const auto& f : s.failures) std::cerr << f.recording_id << ": " << f.message << '\n';
  std::cerr << s.recordings - s.failures.size() << "/" << s.recordings << " recordings, " << s.records.size()
            << " chunks; manifest " << s.manifest_path.string() << '\n';
  return s.ok() ? 0 : 1;
}

struct FuseArgs {
  std::vector<std::string> ctms;
  std::string out;
  std::string ref;
  std::vector<std::string> models;
  std::string lm_scores;
  double alpha = 0.5;
  double null_confidence = 0.7;
};

int cmd_fuse(const FuseArgs& a) {
  FuseOptions opt;
  opt.vote.alpha = a.alpha;
  opt.vote.null_confidence = a.null_confidence;
  if (a.models.size() == 1) {
    opt.pooled_calibration = load_calibration(fs::path(a.models.front()));
  } else {
    for (const auto& m : a.models) opt.per_system_calibration.push_back(load_calibration(fs::path(m)));
  }
  const auto systems = read_systems(a.ctms, a.lm_scores);
  std::optional<TranscriptTable> ref;
  if (!a.ref.empty()) ref = read_transcripts(a.ref);
  const FuseReport r = run_fuse(systems, opt, ref ? &*ref : nullptr);

  if (a.out.empty())
    write_ctm(std::cout, r.fused);
  else
    write_ctm(fs::path(a.out), r.fused);
  for (const auto& id : r.skipped) std::cerr << "UtteranceMismatch: " << id.str() << " skipped\n";
  if (ref) {
    std::ostream& rep = a.out.empty() ? std::cerr : std::cout;
    rep << std::fixed << std::setprecision(2);
    for (std::size_t i = 0; i < r.systems.size(); ++i)
      rep << "system " << a.ctms[i] << " WER " << r.systems[i].wer.wer_percent() << "%\n";
    rep << "fused WER " << r.fused_wer->wer_percent() << "%\n" << std::defaultfloat;
    const auto show = [&rep](const char* label, const std::optional<double>& v) {
      rep << label << ' ';
      if (v)
        rep << std::fixed << std::setprecision(4) << *v << std::defaultfloat << '\n';
      else
        rep << "n/a\n";
    };
    show("NCE before calibration", r.nce_before);
    if (!a.models.empty()) show("NCE after calibration", r.nce_after);
    show("fused NCE", r.fused_nce);
  }
  return r.skipped.empty() ? 0 : 1;
}

int cmd_calibrate(const std::vector<std::string>& ctms, const std::string& ref_path, const std::string& out,
                  double lambda, const std::string& lm_scores) {
  const auto systems = read_systems(ctms, lm_scores);
  const TranscriptTable ref = read_transcripts(ref_path);
  std::vector<CalibrationExample> examples;
  for (const auto& s : systems) {
    auto ex = calibration_examples(s, ref);
    examples.insert(examples.end(), ex.begin(), ex.end());
  }
  const CalibrationModel model = train_calibration(examples, lambda);
  if (out.empty())
    save_calibration(std::cout, model);
  else
    save_calibration(fs::path(out), model);
  std::vector<std::pair<double, bool>> before, after;
  for (const auto& ex : examples) {
    before.emplace_back(ex.confidence, ex.correct);
    after.emplace_back(calibrated_confidence(model, ex.confidence, ex.lm_score), ex.correct);
  }
  std::cerr << examples.size() << " words" << (model.intercept_only ? ", intercept-only model" : "")
            << (model.converged ? "" : ", not converged") << '\n';
  print_nce("NCE before", try_nce(before));
  print_nce("NCE after", try_nce(after));
  return model.converged ? 0 : 1;
}

int cmd_score(const std::string& ref_path, const std::string& hyp_path, const std::vector<std::string>& drop,
              bool keep_case) {
  TextNormalizer norm;
  norm.case_fold = !keep_case;
  norm.drop_tokens.insert(drop.begin(), drop.end());
  write_wer_report(std::cout, score_transcripts(read_transcripts(ref_path), read_transcripts(hyp_path), norm));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speech corpus degradation and hypothesis fusion toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  Globals g;
  app.add_option("--seed", g.seed, "Master seed (overrides the config)");
  app.add_option("--workers", g.workers, "Parallel workers (overrides the config)")->check(CLI::PositiveNumber);
  app.add_option("--config", g.config, "Pipeline INI file")->check(CLI::ExistingFile);
  app.add_flag("--allow-drop-above-ceiling", g.allow_drop_above_ceiling,
               "Permit frame-drop rates above 6%");

  std::vector<std::string> vad_wavs;
  std::string vad_out;
  auto* vad = app.add_subcommand("vad", "Energy VAD; prints 'recording start end' lines");
  vad->add_option("wavs", vad_wavs, "Input WAV files")->required()->check(CLI::ExistingFile);
  vad->add_option("-o,--output", vad_out, "Segments file (default stdout)");

  std::string chunk_segments;
  std::optional<double> chunk_min;
  auto* chunk = app.add_subcommand("chunk", "Group segments into chunks of at least the minimum speech time");
  chunk->add_option("segments", chunk_segments, "Segments file")->required()->check(CLI::ExistingFile);
  chunk->add_option("--min-chunk-s", chunk_min, "Minimum speech per chunk in seconds");

  std::string rt60_manifest;
  std::optional<double> rt60_max;
  std::optional<int> rt60_rate;
  auto* rt60 = app.add_subcommand("rt60", "Estimate RT60 per impulse response and apply the pool cap");
  rt60->add_option("manifest", rt60_manifest, "'ir-id wav-path' manifest")->required()->check(CLI::ExistingFile);
  rt60->add_option("--max-rt60", rt60_max, "Exclusive RT60 cap in seconds");
  rt60->add_option("--sample-rate", rt60_rate, "Rate to resample IRs to");

  auto* augment = app.add_subcommand("augment", "Run the augmentation pipeline described by --config");

  FuseArgs fa;
  auto* fuse = app.add_subcommand("fuse", "Combine CTM hypotheses by alignment and voting");
  fuse->add_option("ctms", fa.ctms, "System CTM files")->required()->check(CLI::ExistingFile);
  fuse->add_option("-o,--output", fa.out, "Fused CTM (default stdout)");
  fuse->add_option("--ref", fa.ref, "Reference (.stm, .ctm or 'id words...')")->check(CLI::ExistingFile);
  fuse->add_option("--calibration", fa.models, "One pooled model, or one model per system")
      ->check(CLI::ExistingFile);
  fuse->add_option("--lm-scores", fa.lm_scores, "'recording channel score' lines")->check(CLI::ExistingFile);
  fuse->add_option("--alpha", fa.alpha, "Frequency vs confidence trade-off")->check(CLI::Range(0.0, 1.0));
  fuse->add_option("--null-confidence", fa.null_confidence, "Confidence credited to NULL")
      ->check(CLI::Range(0.0, 1.0));

  std::vector<std::string> cal_ctms;
  std::string cal_ref, cal_out, cal_lm;
  double cal_lambda = 1e-3;
  auto* calibrate = app.add_subcommand("calibrate", "Fit a confidence calibration model");
  calibrate->add_option("ctms", cal_ctms, "Training CTM files")->required()->check(CLI::ExistingFile);
  calibrate->add_option("--ref", cal_ref, "Reference transcripts")->required()->check(CLI::ExistingFile);
  calibrate->add_option("-o,--output", cal_out, "Model file (default stdout)");
  calibrate->add_option("--lambda", cal_lambda, "L2 penalty")->check(CLI::NonNegativeNumber);
  calibrate->add_option("--lm-scores", cal_lm, "'recording channel score' lines")->check(CLI::ExistingFile);

  std::string score_ref, score_hyp;
  std::vector<std::string> score_drop;
  bool score_keep_case = false;
  auto* score = app.add_subcommand("score", "Word error rate of a hypothesis against a reference");
  score->add_option("--ref", score_ref, "Reference transcripts")->required()->check(CLI::ExistingFile);
  score->add_option("--hyp", score_hyp, "Hypothesis transcripts")->required()->check(CLI::ExistingFile);
  score->add_option("--drop-token", score_drop, "Token removed before scoring (repeatable)");
  score->add_flag("--keep-case", score_keep_case, "Disable case folding");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*vad) return cmd_vad(g, vad_wavs, vad_out);
    if (*chunk) return cmd_chunk(g, chunk_segments, chunk_min);
    if (*rt60) return cmd_rt60(g, rt60_manifest, rt60_max, rt60_rate);
    if (*augment) return cmd_augment(g);
    if (*fuse) return cmd_fuse(fa);
    if (*calibrate) return cmd_calibrate(cal_ctms, cal_ref, cal_out, cal_lambda, cal_lm);
    if (*score) return cmd_score(score_ref, score_hyp, score_drop, score_keep_case);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
