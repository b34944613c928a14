// tests/acceptance.cpp

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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "g711_tables.hpp"
#include "pscaug/calibration.hpp"
#include "pscaug/channel.hpp"
#include "pscaug/codec.hpp"
#include "pscaug/convolve.hpp"
#include "pscaug/fusion.hpp"
#include "pscaug/noise.hpp"
#include "pscaug/pipeline.hpp"
#include "pscaug/reverb.hpp"
#include "pscaug/rover.hpp"
#include "pscaug/scoring.hpp"
#include "synthetic_asr.hpp"
#include "test_support.hpp"
#include "toy_corpus.hpp"

using namespace pscaug;
namespace ts = testing_support;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// 1 -------------------------------------------------------------------------
Outcome snr_fidelity() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::array<SnrBand, 2> bands{SnrBand{"low", 1.0, 8.0}, SnrBand{"mid", 9.0, 15.0}};
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int rate = 8000;
    const auto speech = ts::babble(0.5 + 2.5 * u(gen), rate, gen());
    const std::size_t noise_len = 200 + gen() % 30000;  // often shorter than the speech
    const auto noise = trial % 2 ? ts::white_noise(noise_len, rate, gen(), 0.05 + u(gen))
                                 : ts::babble(static_cast<double>(noise_len) / rate, rate, gen());
    const SnrBand& band = bands[static_cast<std::size_t>(trial) % 2];
    NoiseEvent ev{"n", u(gen) * noise.duration_s(), band.low_db + (band.high_db - band.low_db) * u(gen)};
    const auto mix = mix_at_snr(speech, noise, ev);
    // Recover the added noise from the output and measure before the sum.
    double ps = 0.0, pn = 0.0;
    for (std::size_t i = 0; i < speech.size(); ++i) {
      const double added = mix.audio.samples[i] / mix.rescale - speech.samples[i];
      ps += speech.samples[i] * speech.samples[i];
      pn += added * added;
    }
    worst = std::max(worst, std::abs(10.0 * std::log10(ps / pn) - ev.snr_db));
  }
  const double secs = seconds_since(t0);
  return {worst <= 0.01 && secs < 30.0, fmt("max |SNR error| %.2e dB over 1000 pairs, %.1f s", worst, secs)};
}

// 2 -------------------------------------------------------------------------
Outcome g711_conformance() {
  int table_mismatch = 0;
  for (int c = 0; c < 256; ++c) {
    const auto code = static_cast<std::uint8_t>(c);
    table_mismatch += ulaw_decode(code) != g711_tables::mu_decoded(code);
    table_mismatch += alaw_decode(code) != g711_tables::a_decoded(code);
  }
  std::mt19937_64 gen(202);
  std::uniform_int_distribution<int> pcm(-32768, 32767);
  long over_bound = 0;
  for (int i = 0; i < 1'000'000; ++i) {
    const int v = pcm(gen);
    const auto s = static_cast<std::int16_t>(v);
    const auto mu = ulaw_encode(s);
    const auto a = alaw_encode(s);
    over_bound += std::abs(ulaw_decode(mu) - v) > g711_tables::mu_step16(g711_tables::mu_segment(mu));
    over_bound += std::abs(alaw_decode(a) - v) > g711_tables::a_step16(g711_tables::a_segment(a));
  }
  return {table_mismatch == 0 && over_bound == 0,
          fmt("%.0f of 512 codes differ from the table; %.0f of 2e6 round trips exceed the segment step",
              table_mismatch, static_cast<double>(over_bound))};
}

// 3 -------------------------------------------------------------------------
Outcome rt60_estimator() {
  const int rate = 16000;
  const double truth[] = {0.1, 0.3, 0.5, 0.8};
  std::vector<ImpulseResponse> candidates;
  double worst = 0.0;
  for (double t : truth) {
    const auto ir = ts::exponential_ir(t, rate);
    worst = std::max(worst, std::abs(estimate_rt60(ir) - t) / t);
    candidates.push_back({ir, 0.0, fmt("%.1f", t)});
  }
  const IrPool pool = assess_ir_candidates(candidates, 0.5);
  std::vector<std::string> kept;
  for (const auto& e : pool.entries) kept.push_back(e.source_id);
  const bool pool_ok = kept == std::vector<std::string>{"0.1", "0.3"};
  return {worst <= 0.10 && pool_ok,
          fmt("max relative error %.2f%%; pool keeps ", 100 * worst) + std::to_string(kept.size()) +
              " of 4 (0.1 and 0.3 expected)"};
}

// 4 -------------------------------------------------------------------------
Outcome convolution_oracle() {
  std::mt19937_64 gen(404);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + gen() % 20000, m = 1 + gen() % 4000;
    const auto x = ts::white_noise(n, 8000, gen(), 1.0).samples;
    const auto h = ts::synthetic_ir(0.05 + 0.0001 * static_cast<double>(m), 8000, gen(),
                                    static_cast<double>(m) / 8000.0).samples;
    std::vector<double> direct(n + h.size() - 1, 0.0);  // independent textbook loop
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < h.size(); ++k) direct[i + k] += x[i] * h[k];
    const auto fft = convolve_fft(x, h, direct.size());
    if (fft.size() != direct.size()) return {false, "length mismatch"};
    for (std::size_t i = 0; i < direct.size(); ++i) worst = std::max(worst, std::abs(fft[i] - direct[i]));
    const AudioBuffer wet = apply_reverb(AudioBuffer(x, 8000), {AudioBuffer(h, 8000), 0.0, "ir"}, {false});
    if (wet.size() != n) return {false, "reverb changed the length"};
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(wet.samples[i] - direct[i]));
  }
  return {worst <= 1e-6, fmt("max |FFT - direct| %.2e over 100 pairs (raw convolution and reverb stage)", worst)};
}

// 5 -------------------------------------------------------------------------
double highpass_gain_db(double freq, double cutoff, int rate) {
  const auto x = ts::sine(freq, 3.0, rate);
  const auto y = highpass(x, cutoff);
  const std::size_t from = static_cast<std::size_t>(rate);  // skip the transient
  return 20.0 * std::log10(ts::rms(y.samples, from) / ts::rms(x.samples, from));
}

Outcome filter_spec() {
  double worst_cut = 0.0, weakest_stop = 1e9;
  for (int rate : {8000, 16000})
    for (double fc : {300.0, 600.0, 1000.0, 1500.0}) {
      worst_cut = std::max(worst_cut, std::abs(-highpass_gain_db(fc, fc, rate) - 3.0));
      weakest_stop = std::min(weakest_stop, -highpass_gain_db(fc / 4.0, fc, rate));
    }
  return {worst_cut <= 0.5 && weakest_stop > 20.0,
          fmt("attenuation at cutoff within %.3f dB of 3 dB; at cutoff/4 at least %.2f dB", worst_cut, weakest_stop)};
}

// 6 -------------------------------------------------------------------------
Outcome frame_drop_statistics() {
  const int rate = 8000;
  const auto x = ts::white_noise(static_cast<std::size_t>(rate) * 400, rate, 606, 0.8);  // 20000 frames
  CodecSpec spec;
  spec.drop_rate = 0.06;
  Rng rng(606);
  const auto r = drop_frames(x, spec, rng);
  const std::size_t frame = static_cast<std::size_t>(spec.frame_ms * rate / 1000.0);
  std::size_t dropped = 0, frames = 0;
  bool clean = true;
  for (std::size_t start = 0; start < x.size(); start += frame, ++frames) {
    const std::size_t end = std::min(x.size(), start + frame);
    bool zero = true, same = true;
    for (std::size_t i = start; i < end; ++i) {
      zero = zero && r.audio.samples[i] == 0.0;
      same = same && r.audio.samples[i] == x.samples[i];
    }
    dropped += zero;
    clean = clean && (zero || same);
  }
  const double frac = static_cast<double>(dropped) / static_cast<double>(frames);
  return {frames >= 10000 && clean && std::abs(frac - 0.06) <= 0.01 && dropped == r.dropped,
          fmt("%.0f frames, drop fraction %.4f, every frame exactly zero or untouched: ", static_cast<double>(frames),
              frac) + (clean ? "yes" : "no")};
}

// 7 -------------------------------------------------------------------------
using Seq = std::vector<int>;

// Minimal sum-of-pairs cost over every multiple alignment: top-down
// recursion over the position tuple, each step consuming any nonempty
// subset of the unfinished systems.
class AlignmentSearch {
 public:
  explicit AlignmentSearch(const std::vector<Seq>& s) : s_(s) { memo_.fill(-1); }

  int best(std::array<std::size_t, 3> p) {
    const std::size_t n = s_.size();
    bool done = true;
    for (std::size_t i = 0; i < n; ++i) done = done && p[i] == s_[i].size();
    if (done) return 0;
    int& slot = memo_[(p[0] * 6 + p[1]) * 6 + p[2]];
    if (slot >= 0) return slot;
    int result = 1 << 30;
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
      std::array<int, 3> col{-1, -1, -1};
      bool ok = true;
      for (std::size_t i = 0; i < n; ++i)
        if (mask >> i & 1u) {
          if (p[i] == s_[i].size()) ok = false;
          else col[i] = s_[i][p[i]];
        }
      if (!ok) continue;
      int cost = 0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) cost += col[i] != col[j];
      auto q = p;
      for (std::size_t i = 0; i < n; ++i) q[i] += mask >> i & 1u;
      result = std::min(result, cost + best(q));
    }
    return slot = result;
  }

 private:
  const std::vector<Seq>& s_;
  std::array<int, 216> memo_;  // sequences have at most 5 words
};

int min_alignment_cost(const std::vector<Seq>& s) { return AlignmentSearch(s).best({0, 0, 0}); }

Outcome rover_oracle() {
  std::vector<Seq> all{{}};
  for (std::size_t k = 0; k < all.size(); ++k)
    if (all[k].size() < 5)
      for (int sym = 0; sym < 3; ++sym) {
        auto next = all[k];
        next.push_back(sym);
        all.push_back(next);
      }
  const std::string names[] = {"a", "b", "c"};
  const auto words = [&](const Seq& s) {
    std::vector<std::string> w;
    for (int v : s) w.push_back(names[v]);
    return w;
  };
  std::vector<std::vector<std::string>> as_words;
  std::vector<std::vector<HypothesisWord>> as_hyp;
  for (const auto& s : all) {
    as_words.push_back(words(s));
    as_hyp.push_back(as_hypothesis(as_words.back()));
  }

  long sets = 0, mismatches = 0;
  std::vector<Seq> seqs;
  std::vector<std::vector<HypothesisWord>> systems;
  const auto check = [&](std::initializer_list<std::size_t> idx) {
    seqs.clear();
    systems.clear();
    for (auto i : idx) {
      seqs.push_back(all[i]);
      systems.push_back(as_hyp[i]);
    }
    ++sets;
    if (build_wtn(systems).alignment_cost() != min_alignment_cost(seqs)) ++mismatches;
  };
  // Every multiset of one, two or three systems.
  const std::size_t n = all.size();
  for (std::size_t a = 0; a < n; ++a) {
    check({a});
    for (std::size_t b = a; b < n; ++b) {
      check({a, b});
      for (std::size_t c = b; c < n; ++c) check({a, b, c});
    }
  }

  // Single-system fusion returns its input.
  long identity_failures = 0;
  std::mt19937_64 gen(707);
  for (std::size_t k = 0; k < n; ++k) {
    HypothesisTable table;
    auto& utt = table[{"u", "1"}];
    for (std::size_t i = 0; i < all[k].size(); ++i)
      utt.push_back({as_words[k][i], 0.3 * static_cast<double>(i), 0.25, (gen() % 1000) / 999.0,
                     gen() % 2 ? std::optional<double>(-1.5) : std::nullopt});
    if (run_fuse({table}).fused != table) ++identity_failures;
    const auto voted = vote(build_wtn({utt}));
    bool same = voted.size() == utt.size();
    for (std::size_t i = 0; same && i < utt.size(); ++i)
      same = voted[i].word == utt[i].word && voted[i].start_s == utt[i].start_s && voted[i].dur_s == utt[i].dur_s;
    if (!same) ++identity_failures;
  }
  return {mismatches == 0 && identity_failures == 0,
          std::to_string(mismatches) + " cost mismatches over " + std::to_string(sets) + " system sets; " +
              std::to_string(identity_failures) + " single-system identity failures"};
}

// 8 -------------------------------------------------------------------------
Outcome fusion_gain() {
  const auto t0 = Clock::now();
  int wins = 0;
  double mean_best = 0.0, mean_fused = 0.0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    const auto ref = ts::synthetic_reference(10000, 10, 2000, 800 + trial);
    std::vector<HypothesisTable> systems;
    for (std::uint64_t k = 0; k < 3; ++k) systems.push_back(ts::corrupt(ref, {}, trial * 10 + k));
    double best = 1e9;
    for (const auto& s : systems) best = std::min(best, score_transcripts(ref, words_of(s)).wer_percent());
    const double fused = score_transcripts(ref, words_of(run_fuse(systems).fused)).wer_percent();
    wins += fused < best;
    mean_best += best / 100.0;
    mean_fused += fused / 100.0;
  }
  const double secs = seconds_since(t0);
  return {wins >= 95 && secs < 60.0,
          fmt("fused beat the best system in %.0f/100 trials (mean WER %.2f%% vs %.2f%%)", wins, mean_fused,
              mean_best) + fmt(", %.1f s", secs)};
}

// 9 -------------------------------------------------------------------------
Outcome calibration() {
  ts::CorruptionModel over;
  over.correct_low = 0.7;
  over.wrong_low = 0.6;
  over.wrong_high = 1.0;
  const auto train_ref = ts::synthetic_reference(10000, 10, 2000, 901);
  const auto test_ref = ts::synthetic_reference(10000, 10, 2000, 902);
  std::vector<CalibrationExample> train;
  for (std::uint64_t k = 0; k < 3; ++k) {
    auto ex = calibration_examples(ts::corrupt(train_ref, over, 910 + k), train_ref);
    train.insert(train.end(), ex.begin(), ex.end());
  }
  const auto model = train_calibration(train, 1e-3);

  bool improved = true;
  double before_min = 1e9, after_min = 1e9;
  for (std::uint64_t k = 0; k < 3; ++k) {
    const auto hyp = ts::corrupt(test_ref, over, 920 + k);
    HypothesisTable calibrated = hyp;
    apply_calibration(model, calibrated);
    const double before = compute_nce(labelled_confidences(hyp, test_ref));
    const double after = compute_nce(labelled_confidences(calibrated, test_ref));
    improved = improved && after > before;
    before_min = std::min(before_min, before);
    after_min = std::min(after_min, after);
  }

  // Gradient versus central differences of the objective at random points.
  std::mt19937_64 gen(930);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst_rel = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Vector3d w(g(gen), g(gen), 0.3 * g(gen));
    const double lambda = trial % 2 ? 1e-3 : 0.0;
    const auto obj = calibration_objective(train, w, lambda);
    const double h = 1e-4;
    for (int k = 0; k < 3; ++k) {
      Eigen::Vector3d up = w, dn = w;
      up[k] += h;
      dn[k] -= h;
      const double fd =
          (calibration_objective(train, up, lambda).value - calibration_objective(train, dn, lambda).value) / (2 * h);
      worst_rel = std::max(worst_rel, std::abs(obj.gradient[k] - fd) / std::max(std::abs(obj.gradient[k]), std::abs(fd)));
    }
  }
  return {improved && worst_rel <= 1e-6,
          fmt("held-out NCE %.3f -> %.3f (worst of 3 systems); gradient max relative error %.2e", before_min,
              after_min, worst_rel)};
}

// 10 ------------------------------------------------------------------------
Outcome nce_endpoints() {
  double worst_prior = 0.0, worst_perfect = 0.0;
  for (int n : {2, 7, 100, 1001}) {
    for (int correct = 1; correct < n; correct += std::max(1, n / 13)) {
      const double prior = static_cast<double>(correct) / n;
      std::vector<std::pair<double, bool>> a, b;
      for (int i = 0; i < n; ++i) {
        a.emplace_back(prior, i < correct);
        b.emplace_back(i < correct ? 1.0 : 0.0, i < correct);
      }
      worst_prior = std::max(worst_prior, std::abs(compute_nce(a)));
      worst_perfect = std::max(worst_perfect, std::abs(compute_nce(b) - 1.0));
    }
  }
  return {worst_prior <= 1e-12 && worst_perfect <= 1e-12,
          fmt("prior confidences |NCE| <= %.1e; perfect confidences |NCE - 1| <= %.1e", worst_prior, worst_perfect)};
}

// 11 ------------------------------------------------------------------------
struct Best {
  int cost;
  unsigned errors;  // bit e set when e errors is reachable at the minimum cost
};

Outcome wer_oracle() {
  std::vector<std::vector<std::string>> all{{}};
  for (std::size_t k = 0; k < all.size(); ++k)
    if (all[k].size() < 6)
      for (const char* sym : {"a", "b", "c"}) {
        auto next = all[k];
        next.push_back(sym);
        all.push_back(next);
      }
  long pairs = 0, mismatches = 0;
  std::vector<Best> memo;
  for (const auto& r : all)
    for (const auto& h : all) {
      ++pairs;
      // Exhaustive search over alignments, memoized on the position pair.
      const std::size_t w = h.size() + 1;
      memo.assign((r.size() + 1) * w, Best{-1, 0});
      std::function<Best(std::size_t, std::size_t)> search = [&](std::size_t i, std::size_t j) -> Best {
        if (i == r.size() && j == h.size()) return {0, 1u};
        Best& m = memo[i * w + j];
        if (m.cost >= 0) return m;
        Best out{1 << 30, 0};
        const auto offer = [&out](Best b, int cost, int err) {
          b.cost += cost;
          b.errors <<= err;
          if (b.cost < out.cost) out = b;
          else if (b.cost == out.cost) out.errors |= b.errors;
        };
        if (i < r.size() && j < h.size()) {
          const bool same = r[i] == h[j];
          offer(search(i + 1, j + 1), same ? 0 : 4, same ? 0 : 1);
        }
        if (j < h.size()) offer(search(i, j + 1), 3, 1);
        if (i < r.size()) offer(search(i + 1, j), 3, 1);
        return m = out;
      };
      const Best oracle = search(0, 0);
      const auto path = align_words(r, h);
      int cost = 0;
      for (const auto& p : path) cost += p.op == EditOp::kCorrect ? 0 : p.op == EditOp::kSubstitution ? 4 : 3;
      const auto counts = count_errors(path);
      const bool ok = cost == oracle.cost && (oracle.errors >> counts.errors() & 1u) &&
                      counts.ref_words == r.size() &&
                      counts.correct + counts.substitutions + counts.insertions == h.size();
      mismatches += !ok;
    }
  const double example = wer_percent(align_and_count({"a", "b", "c"}, {"a", "x", "c", "d"}));
  const bool example_ok = std::abs(example - 200.0 / 3.0) < 1e-9;
  return {mismatches == 0 && example_ok,
          std::to_string(mismatches) + " mismatches over " + std::to_string(pairs) + " pairs; example WER " +
              fmt("%.2f%%", example)};
}

// 12 ------------------------------------------------------------------------
std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome end_to_end_determinism() {
  const auto t0 = Clock::now();
  ts::TempDir dir("pscaug-acceptance");
  const auto toy = ts::make_toy_corpus(dir.path(), 20, 1212);
  std::vector<std::filesystem::path> outputs;
  std::size_t records = 0;
  for (int workers : {1, 4, 8}) {
    auto c = toy.config;
    c.workers = workers;
    c.output_dir = dir / ("out" + std::to_string(workers));
    const auto summary = run_augment(c);
    if (!summary.ok()) return {false, summary.failures.front().recording_id + ": " + summary.failures.front().message};
    records = summary.records.size();
    outputs.push_back(c.output_dir);
  }
  std::size_t differing = 0, compared = 0;
  for (std::size_t k = 1; k < outputs.size(); ++k) {
    std::vector<std::string> files{std::string(kAugmentManifestName)};
    for (const auto& id : toy.ids) files.push_back(id + ".wav");
    for (const auto& f : files) {
      ++compared;
      const auto a = slurp(outputs[0] / f);
      differing += a.empty() || a != slurp(outputs[k] / f);
    }
  }
  const double secs = seconds_since(t0);
  return {differing == 0 && secs < 120.0,
          std::to_string(differing) + " of " + std::to_string(compared) + " files differ across 1/4/8 workers (" +
              std::to_string(records) + " chunk records)" + fmt(", %.1f s", secs)};
}

}  // namespace

int main() {
  const std::pair<const char*, Outcome (*)()> criteria[] = {
      {"snr-fidelity", snr_fidelity},
      {"g711-conformance", g711_conformance},
      {"rt60-estimator", rt60_estimator},
      {"convolution-oracle", convolution_oracle},
      {"highpass-response", filter_spec},
      {"frame-drop-statistics", frame_drop_statistics},
      {"rover-oracle", rover_oracle},
      {"fusion-gain", fusion_gain},
      {"calibration", calibration},
      {"nce-endpoints", nce_endpoints},
      {"wer-oracle", wer_oracle},
      {"end-to-end-determinism", end_to_end_determinism},
  };
  int failed = 0, index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] %2d %-24s %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of %d criteria passed\n", index - failed, index);
  return failed == 0 ? 0 : 1;
}
