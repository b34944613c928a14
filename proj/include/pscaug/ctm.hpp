// pscaug/ctm.hpp

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
#include <compare>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pscaug/error.hpp"

namespace pscaug {

struct HypothesisWord {
  std::string word;
  double start_s = 0.0;
  double dur_s = 0.0;
  double confidence = 1.0;
  std::optional<double> lm_score;

  double end_s() const { return start_s + dur_s; }
  bool operator==(const HypothesisWord&) const = default;
};

/// Recording plus channel, the unit CTM/STM files are keyed by.
struct UtteranceId {
  std::string recording;
  std::string channel = "1";
  auto operator<=>(const UtteranceId&) const = default;
  std::string str() const { return recording + " " + channel; }
};

using HypothesisTable = std::map<UtteranceId, std::vector<HypothesisWord>>;

/// NIST CTM: "recording channel start dur word [confidence [lm-score]]".
/// Lines starting with ";;" are comments. Words are ordered by start time.
inline HypothesisTable parse_ctm(std::istream& in, const std::string& origin = "<ctm>") {
  HypothesisTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::vector<std::string> f;
    for (std::string tok; ss >> tok;) f.push_back(tok);
    if (f.empty() || f[0].starts_with(";;")) continue;
    const auto bad = [&](const std::string& why) {
      fail(Errc::kMalformedCtmLine, origin + ":" + std::to_string(line_no) + ": " + why);
    };
    if (f.size() < 5 || f.size() > 7) bad("expected 5 to 7 fields");
    HypothesisWord w;
    try {
      std::size_t used = 0;
      w.start_s = std::stod(f[2], &used);
      if (used != f[2].size()) bad("bad start time");
      w.dur_s = std::stod(f[3], &used);
      if (used != f[3].size()) bad("bad duration");
      w.word = f[4];
      if (f.size() >= 6) {
        w.confidence = std::stod(f[5], &used);
        if (used != f[5].size()) bad("bad confidence");
      }
      if (f.size() == 7) {
        w.lm_score = std::stod(f[6], &used);
        if (used != f[6].size()) bad("bad lm score");
      }
    } catch (const std::logic_error&) {
      bad("non-numeric field");
    }
    if (!(w.confidence >= 0.0 && w.confidence <= 1.0)) bad("confidence outside [0, 1]");
    if (!(w.dur_s >= 0.0)) bad("negative duration");
    table[{f[0], f[1]}].push_back(std::move(w));
  }
  for (auto& [id, words] : table)
    std::stable_sort(words.begin(), words.end(),
                     [](const HypothesisWord& a, const HypothesisWord& b) { return a.start_s < b.start_s; });
  return table;
}

inline HypothesisTable read_ctm(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::kIoError, "cannot open " + path.string());
  return parse_ctm(in, path.string());
}

inline void write_ctm(std::ostream& out, const HypothesisTable& table) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::defaultfloat << std::setprecision(10);
  for (const auto& [id, words] : table) {
    for (const auto& w : words) {
      out << id.recording << ' ' << id.channel << ' ' << w.start_s << ' ' << w.dur_s << ' '
          << w.word << ' ' << w.confidence;
      if (w.lm_score) out << ' ' << *w.lm_score;
      out << '\n';
    }
  }
  out.flags(flags);
  out.precision(precision);
}

inline void write_ctm(const std::filesystem::path& path, const HypothesisTable& table) {
  std::ofstream out(path);
  if (!out) fail(Errc::kIoError, "cannot create " + path.string());
  write_ctm(out, table);
}

/// "recording channel score" lines; the score is copied onto every word of
/// that utterance that carries no per-word LM score.
inline void broadcast_lm_scores(HypothesisTable& table, std::istream& in) {
  std::string rec, chan;
  double score;
  while (in >> rec >> chan >> score) {
    auto it = table.find({rec, chan});
    if (it == table.end()) continue;
    for (auto& w : it->second)
      if (!w.lm_score) w.lm_score = score;
  }
}

}  // namespace pscaug
