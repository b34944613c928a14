// pscaug/reverb.hpp

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
#include <filesystem>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pscaug/audio.hpp"
#include "pscaug/convolve.hpp"
#include "pscaug/error.hpp"
#include "pscaug/manifest.hpp"
#include "pscaug/resample.hpp"
#include "pscaug/wav.hpp"

namespace pscaug {

struct ImpulseResponse {
  AudioBuffer ir;
  double rt60_s = 0.0;
  std::string source_id;
};

struct Rt60Options {
  double fit_start_db = -5.0;
  double fit_end_db = -25.0;
  // A decay that skips the whole fit span (e.g. a bare delta) reports 0
  // unless this is set, in which case it raises DecayTooShort.
  bool degenerate_is_error = false;
  // Estimates are reported on this grid (seconds); 0 disables rounding.
  double resolution_s = 1e-3;
};

/// Schroeder backward integration, least-squares line through the
/// [-5, -25] dB part of the decay curve, extrapolated to 60 dB (T20 x 3).
inline double estimate_rt60(const AudioBuffer& ir, const Rt60Options& options = {}) {
  if (ir.empty() || is_silent(ir.samples))
    fail(Errc::kSilentInput, "impulse response is empty or silent");

  const std::size_t n = ir.size();
  std::vector<double> edc(n);
  double tail = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    tail += ir.samples[i] * ir.samples[i];
    edc[i] = tail;
  }
  const double total = edc[0];

  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  std::size_t count = 0;
  bool reached_end = false;
  for (std::size_t i = 0; i < n; ++i) {
    const double db = edc[i] > 0.0 ? 10.0 * std::log10(edc[i] / total)
                                   : -std::numeric_limits<double>::infinity();
    if (db < options.fit_end_db) {
      reached_end = true;
      break;
    }
    if (db <= options.fit_start_db) {
      const double t = static_cast<double>(i) / ir.sample_rate_hz;
      st += t;
      sy += db;
      stt += t * t;
      sty += t * db;
      ++count;
    }
  }
  if (!reached_end)
    fail(Errc::kDecayTooShort, "energy decay never reaches " +
                                   std::to_string(options.fit_end_db) + " dB");
  if (count < 2) {
    if (options.degenerate_is_error)
      fail(Errc::kDecayTooShort, "decay skips the fit span");
    return 0.0;
  }
  const double c = static_cast<double>(count);
  const double slope = (c * sty - st * sy) / (c * stt - st * st);  // dB per second
  double rt60 = -60.0 / slope;
  if (options.resolution_s > 0.0)
    rt60 = std::round(rt60 / options.resolution_s) * options.resolution_s;
  return rt60;
}

struct PoolDecision {
  std::string source_id;
  std::optional<double> rt60_s;  // empty when the file could not be used
  bool kept = false;
  std::string reason;
};

/// Impulse responses whose RT60 is strictly below max_rt60_s.
struct IrPool {
  std::vector<ImpulseResponse> entries;
  double max_rt60_s = 0.5;
  std::vector<PoolDecision> report;

  std::size_t excluded() const { return report.size() - entries.size(); }

  const ImpulseResponse* find(const std::string& id) const {
    for (const auto& e : entries)
      if (e.source_id == id) return &e;
    return nullptr;
  }
};

inline bool admits_rt60(double rt60_s, double max_rt60_s) { return rt60_s < max_rt60_s; }

/// Estimates RT60 for each candidate and keeps those under the cap. Never
/// throws for bad candidates; they are recorded as dropped.
inline IrPool assess_ir_candidates(std::vector<ImpulseResponse> candidates, double max_rt60_s,
                                   const Rt60Options& options = {}) {
  IrPool pool;
  pool.max_rt60_s = max_rt60_s;
  for (auto& c : candidates) {
    PoolDecision d{c.source_id, std::nullopt, false, {}};
    try {
      c.rt60_s = estimate_rt60(c.ir, options);
      d.rt60_s = c.rt60_s;
      d.kept = admits_rt60(c.rt60_s, max_rt60_s);
      if (d.kept)
        pool.entries.push_back(std::move(c));
      else
        d.reason = "rt60 above cap";
    } catch (const Error& e) {
      d.reason = e.what();
    }
    pool.report.push_back(std::move(d));
  }
  return pool;
}

inline IrPool filter_ir_pool(std::vector<ImpulseResponse> candidates, double max_rt60_s,
                             const Rt60Options& options = {}) {
  IrPool pool = assess_ir_candidates(std::move(candidates), max_rt60_s, options);
  if (pool.entries.empty()) fail(Errc::kEmptyPool, "no impulse response passed the RT60 gate");
  return pool;
}

/// Manifest lines are "ir-id wav-path". IRs are resampled to target_rate_hz.
/// The returned pool may be empty; see build_ir_pool.
inline IrPool assess_ir_manifest(const std::filesystem::path& manifest, double max_rt60_s,
                                 int target_rate_hz, const Rt60Options& options = {}) {
  std::vector<ImpulseResponse> candidates;
  std::vector<PoolDecision> unreadable;
  for (const auto& line : read_manifest(manifest, 2)) {
    const std::string& id = line.fields[0];
    try {
      AudioBuffer ir = read_wav(resolve_path(manifest, line.fields[1]));
      candidates.push_back({resample(ir, target_rate_hz), 0.0, id});
    } catch (const Error& e) {
      unreadable.push_back({id, std::nullopt, false, e.what()});
    }
  }
  IrPool pool = assess_ir_candidates(std::move(candidates), max_rt60_s, options);
  pool.report.insert(pool.report.end(), unreadable.begin(), unreadable.end());
  return pool;
}

inline IrPool build_ir_pool(const std::filesystem::path& manifest, double max_rt60_s,
                            int target_rate_hz, const Rt60Options& options = {}) {
  IrPool pool = assess_ir_manifest(manifest, max_rt60_s, target_rate_hz, options);
  if (pool.entries.empty())
    fail(Errc::kEmptyPool, "no usable impulse response in " + manifest.string());
  return pool;
}

/// "ir-id rt60 kept|dropped"; unusable files print '-' for rt60.
inline void write_pool_report(std::ostream& out, const IrPool& pool) {
  for (const auto& d : pool.report) {
    out << d.source_id << ' ';
    if (d.rt60_s)
      out << *d.rt60_s;
    else
      out << '-';
    out << ' ' << (d.kept ? "kept" : "dropped") << '\n';
  }
}

struct ReverbOptions {
  bool renormalize = true;
};

/// Convolution truncated to the input length, then rescaled to the input's
/// peak so the SNR stage downstream sees the original gross level.
inline AudioBuffer apply_reverb(const AudioBuffer& audio, const ImpulseResponse& ir,
                                const ReverbOptions& options = {}) {
  if (audio.sample_rate_hz != ir.ir.sample_rate_hz)
    fail(Errc::kRateMismatch, "audio at " + std::to_string(audio.sample_rate_hz) +
                                  " Hz, impulse response at " +
                                  std::to_string(ir.ir.sample_rate_hz) + " Hz");
  AudioBuffer out(convolve(audio.samples, ir.ir.samples, audio.size()), audio.sample_rate_hz);
  if (options.renormalize) {
    const double in_peak = peak_abs(audio.samples);
    const double out_peak = peak_abs(out.samples);
    if (in_peak > 0.0 && out_peak > 0.0)
      for (double& v : out.samples) v *= in_peak / out_peak;
  }
  return out;
}

}  // namespace pscaug
