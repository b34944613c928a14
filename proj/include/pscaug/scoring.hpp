// pscaug/scoring.hpp

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
#include <cctype>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pscaug/ctm.hpp"
#include "pscaug/error.hpp"

namespace pscaug {

struct ErrorCounts {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t correct = 0;
  std::size_t ref_words = 0;

  std::size_t errors() const { return substitutions + deletions + insertions; }

  ErrorCounts& operator+=(const ErrorCounts& o) {
    substitutions += o.substitutions;
    deletions += o.deletions;
    insertions += o.insertions;
    correct += o.correct;
    ref_words += o.ref_words;
    return *this;
  }
  bool operator==(const ErrorCounts&) const = default;
};

enum class EditOp { kCorrect, kSubstitution, kInsertion, kDeletion };

struct AlignedPair {
  EditOp op;
  std::ptrdiff_t ref_index;  // -1 for insertions
  std::ptrdiff_t hyp_index;  // -1 for deletions
};

struct AlignmentCosts {
  int substitution = 4;
  int insertion = 3;
  int deletion = 3;
};

/// Minimum-cost alignment with sclite-style weights. On the backtrace, equal
/// cost paths prefer correct, then substitution, insertion, deletion.
inline std::vector<AlignedPair> align_words(const std::vector<std::string>& ref,
                                            const std::vector<std::string>& hyp,
                                            const AlignmentCosts& costs = {}) {
  const std::size_t r = ref.size(), h = hyp.size(), w = h + 1;
  std::vector<int> d((r + 1) * w, 0);
  for (std::size_t i = 1; i <= r; ++i) d[i * w] = static_cast<int>(i) * costs.deletion;
  for (std::size_t j = 1; j <= h; ++j) d[j] = static_cast<int>(j) * costs.insertion;
  for (std::size_t i = 1; i <= r; ++i)
    for (std::size_t j = 1; j <= h; ++j) {
      const int diag = d[(i - 1) * w + j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : costs.substitution);
      d[i * w + j] = std::min({diag, d[i * w + j - 1] + costs.insertion, d[(i - 1) * w + j] + costs.deletion});
    }

  std::vector<AlignedPair> path;
  std::size_t i = r, j = h;
  while (i > 0 || j > 0) {
    const int here = d[i * w + j];
    if (i > 0 && j > 0 && ref[i - 1] == hyp[j - 1] && here == d[(i - 1) * w + j - 1]) {
      path.push_back({EditOp::kCorrect, static_cast<std::ptrdiff_t>(i - 1), static_cast<std::ptrdiff_t>(j - 1)});
      --i, --j;
    } else if (i > 0 && j > 0 && ref[i - 1] != hyp[j - 1] &&
               here == d[(i - 1) * w + j - 1] + costs.substitution) {
      path.push_back({EditOp::kSubstitution, static_cast<std::ptrdiff_t>(i - 1), static_cast<std::ptrdiff_t>(j - 1)});
      --i, --j;
    } else if (j > 0 && here == d[i * w + j - 1] + costs.insertion) {
      path.push_back({EditOp::kInsertion, -1, static_cast<std::ptrdiff_t>(j - 1)});
      --j;
    } else {
      path.push_back({EditOp::kDeletion, static_cast<std::ptrdiff_t>(i - 1), -1});
      --i;
    }
  }
  std::reverse(path.begin(), path.end());
  return path;
}

inline ErrorCounts count_errors(const std::vector<AlignedPair>& path) {
  ErrorCounts c;
  for (const auto& p : path) {
    switch (p.op) {
      case EditOp::kCorrect: ++c.correct; break;
      case EditOp::kSubstitution: ++c.substitutions; break;
      case EditOp::kInsertion: ++c.insertions; break;
      case EditOp::kDeletion: ++c.deletions; break;
    }
  }
  c.ref_words = c.correct + c.substitutions + c.deletions;
  return c;
}

inline ErrorCounts align_and_count(const std::vector<std::string>& ref, const std::vector<std::string>& hyp,
                                   const AlignmentCosts& costs = {}) {
  return count_errors(align_words(ref, hyp, costs));
}

/// Per hypothesis word: true when it aligned as correct.
inline std::vector<bool> hypothesis_correctness(const std::vector<std::string>& ref,
                                                const std::vector<std::string>& hyp) {
  std::vector<bool> ok(hyp.size(), false);
  for (const auto& p : align_words(ref, hyp))
    if (p.op == EditOp::kCorrect) ok[static_cast<std::size_t>(p.hyp_index)] = true;
  return ok;
}

/// Case folding plus an optional list of tokens (hesitations, noise marks)
/// removed before scoring.
struct TextNormalizer {
  bool case_fold = true;
  std::set<std::string> drop_tokens;

  std::vector<std::string> operator()(const std::vector<std::string>& words) const {
    std::vector<std::string> out;
    out.reserve(words.size());
    for (std::string w : words) {
      if (case_fold)
        std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      if (!drop_tokens.count(w)) out.push_back(std::move(w));
    }
    return out;
  }
};

using TranscriptTable = std::map<UtteranceId, std::vector<std::string>>;

/// STM: "file channel speaker start end [<labels>] words...". Segments of one
/// file+channel are concatenated in start-time order.
inline TranscriptTable parse_stm(std::istream& in, const std::string& origin = "<stm>") {
  struct Seg {
    double start;
    std::vector<std::string> words;
  };
  std::map<UtteranceId, std::vector<Seg>> segs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::vector<std::string> f;
    for (std::string tok; ss >> tok;) f.push_back(tok);
    if (f.empty() || f[0].starts_with(";;")) continue;
    if (f.size() < 5) fail(Errc::kMalformedStmLine, origin + ":" + std::to_string(line_no));
    Seg seg;
    try {
      seg.start = std::stod(f[3]);
      (void)std::stod(f[4]);
    } catch (const std::logic_error&) {
      fail(Errc::kMalformedStmLine, origin + ":" + std::to_string(line_no) + ": bad times");
    }
    std::size_t k = 5;
    if (k < f.size() && f[k].starts_with('<')) ++k;
    auto& list = segs[{f[0], f[1]}];
    if (k < f.size() && f[k] == "ignore_time_segment_in_scoring") continue;
    seg.words.assign(f.begin() + static_cast<std::ptrdiff_t>(k), f.end());
    list.push_back(std::move(seg));
  }
  TranscriptTable table;
  for (auto& [id, list] : segs) {
    std::stable_sort(list.begin(), list.end(), [](const Seg& a, const Seg& b) { return a.start < b.start; });
    auto& words = table[id];
    for (auto& s : list) words.insert(words.end(), s.words.begin(), s.words.end());
  }
  return table;
}

/// Plain transcripts: "utterance-id words...", keyed as (utterance-id, "1").
inline TranscriptTable parse_plain_transcripts(std::istream& in) {
  TranscriptTable table;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string id;
    if (!(ss >> id)) continue;
    auto& words = table[{id, "1"}];
    for (std::string w; ss >> w;) words.push_back(w);
  }
  return table;
}

inline TranscriptTable words_of(const HypothesisTable& hyp) {
  TranscriptTable table;
  for (const auto& [id, words] : hyp) {
    auto& out = table[id];
    for (const auto& w : words) out.push_back(w.word);
  }
  return table;
}

/// Picks the reader from the extension: .stm, .ctm, anything else is plain.
inline TranscriptTable read_transcripts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::kIoError, "cannot open " + path.string());
  const auto ext = path.extension().string();
  if (ext == ".stm") return parse_stm(in, path.string());
  if (ext == ".ctm") return words_of(parse_ctm(in, path.string()));
  return parse_plain_transcripts(in);
}

struct WerReport {
  std::vector<std::pair<UtteranceId, ErrorCounts>> utterances;
  ErrorCounts total;

  double wer_percent() const {
    if (total.ref_words == 0) fail(Errc::kEmptyReference, "no reference words");
    return 100.0 * static_cast<double>(total.errors()) / static_cast<double>(total.ref_words);
  }
};

inline double wer_percent(const ErrorCounts& c) {
  if (c.ref_words == 0) fail(Errc::kEmptyReference, "no reference words");
  return 100.0 * static_cast<double>(c.errors()) / static_cast<double>(c.ref_words);
}

/// Scores every utterance present in either table; a side that is missing
/// counts as empty.
inline WerReport score_transcripts(const TranscriptTable& ref, const TranscriptTable& hyp,
                                   const TextNormalizer& norm = {}) {
  std::set<UtteranceId> ids;
  for (const auto& [id, w] : ref) ids.insert(id);
  for (const auto& [id, w] : hyp) ids.insert(id);
  WerReport report;
  static const std::vector<std::string> kEmpty;
  for (const auto& id : ids) {
    auto r = ref.find(id);
    auto h = hyp.find(id);
    const ErrorCounts c = align_and_count(norm(r == ref.end() ? kEmpty : r->second),
                                          norm(h == hyp.end() ? kEmpty : h->second));
    report.utterances.emplace_back(id, c);
    report.total += c;
  }
  return report;
}

inline void write_wer_report(std::ostream& out, const WerReport& report) {
  const auto flags = out.flags();
  const auto prec = out.precision();
  out << std::fixed << std::setprecision(2);
  out << "# utterance channel ref corr sub del ins wer%\n";
  for (const auto& [id, c] : report.utterances) {
    out << id.recording << ' ' << id.channel << ' ' << c.ref_words << ' ' << c.correct << ' ' << c.substitutions
        << ' ' << c.deletions << ' ' << c.insertions << ' ';
    if (c.ref_words > 0)
      out << wer_percent(c);
    else
      out << "n/a";
    out << '\n';
  }
  const auto& t = report.total;
  out << "TOTAL - " << t.ref_words << ' ' << t.correct << ' ' << t.substitutions << ' ' << t.deletions << ' '
      << t.insertions << ' ' << report.wer_percent() << '\n';
  out.flags(flags);
  out.precision(prec);
}

}  // namespace pscaug
