// pscaug/rover.hpp

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
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "pscaug/ctm.hpp"
#include "pscaug/error.hpp"

namespace pscaug {

/// Aligned slots across systems. slots[s][i] is system i's word in slot s,
/// or nullopt for NULL. Every system's words appear in their original order.
struct WordTransitionNetwork {
  std::size_t num_systems = 0;
  std::vector<std::vector<std::optional<HypothesisWord>>> slots;
  bool exact = false;  // true when the multiple alignment is globally optimal

  /// Sum-of-pairs cost: per slot, every pair of systems costs 1 when one is
  /// NULL and the other is not, or when both hold different words.
  int alignment_cost() const {
    int cost = 0;
    for (const auto& slot : slots)
      for (std::size_t i = 0; i < slot.size(); ++i)
        for (std::size_t j = i + 1; j < slot.size(); ++j) {
          const auto& a = slot[i];
          const auto& b = slot[j];
          if (a.has_value() != b.has_value() || (a && b && a->word != b->word)) ++cost;
        }
    return cost;
  }

  /// System i's sequence with NULLs removed.
  std::vector<HypothesisWord> system_words(std::size_t i) const {
    std::vector<HypothesisWord> out;
    for (const auto& slot : slots)
      if (slot[i]) out.push_back(*slot[i]);
    return out;
  }
};

struct WtnOptions {
  // Exact multiple alignment is used while prod(len_i + 1) * (2^N - 1) stays
  // under this; longer inputs fall back to progressive alignment, where
  // each system in list order is aligned against the network built so far.
  std::size_t exact_work_budget = 8'000'000;
};

namespace rover_detail {

struct Cost {
  int edits = std::numeric_limits<int>::max();
  double gap = 0.0;  // tie-break: summed time distance between aligned words

  Cost operator+(const Cost& o) const { return {edits + o.edits, gap + o.gap}; }
  bool operator<(const Cost& o) const {
    return edits != o.edits ? edits < o.edits : gap < o.gap;
  }
};

inline double time_gap(const HypothesisWord& a, const HypothesisWord& b) {
  const double lo = std::max(a.start_s, b.start_s);
  const double hi = std::min(a.end_s(), b.end_s());
  return lo > hi ? lo - hi : 0.0;
}

struct Interned {
  std::vector<std::vector<int>> ids;
};

inline Interned intern(const std::vector<std::vector<HypothesisWord>>& systems) {
  std::unordered_map<std::string, int> table;
  Interned out;
  for (const auto& sys : systems) {
    std::vector<int> ids;
    ids.reserve(sys.size());
    for (const auto& w : sys) ids.push_back(table.emplace(w.word, static_cast<int>(table.size())).first->second);
    out.ids.push_back(std::move(ids));
  }
  return out;
}

inline bool exact_fits(const std::vector<std::vector<HypothesisWord>>& systems, std::size_t budget) {
  if (systems.size() > 16) return false;
  const double masks = static_cast<double>((std::size_t{1} << systems.size()) - 1);
  double cells = 1.0;
  for (const auto& s : systems) cells *= static_cast<double>(s.size() + 1);
  return cells * masks <= static_cast<double>(budget);
}

inline WordTransitionNetwork align_exact(const std::vector<std::vector<HypothesisWord>>& systems) {
  const std::size_t n = systems.size();
  const Interned in = intern(systems);
  std::vector<std::size_t> dims(n), stride(n);
  std::size_t cells = 1;
  for (std::size_t i = 0; i < n; ++i) {
    dims[i] = systems[i].size() + 1;
    stride[i] = cells;
    cells *= dims[i];
  }
  const std::uint32_t full = (std::uint32_t{1} << n) - 1;

  std::vector<Cost> best(cells);
  std::vector<std::uint32_t> back(cells, 0);
  best[0] = {0, 0.0};
  std::vector<std::size_t> idx(n, 0);
  std::vector<std::size_t> chosen;
  chosen.reserve(n);

  for (std::size_t cell = 1; cell < cells; ++cell) {
    for (std::size_t i = 0; i < n; ++i) {  // mixed-radix increment
      if (++idx[i] < dims[i]) break;
      idx[i] = 0;
    }
    Cost cell_best;
    std::uint32_t cell_mask = 0;
    // Larger masks first: on equal cost, prefer aligning words together.
    for (std::uint32_t mask = full; mask >= 1; --mask) {
      std::size_t prev = cell;
      chosen.clear();
      bool ok = true;
      for (std::size_t i = 0; i < n && ok; ++i) {
        if (!(mask >> i & 1u)) continue;
        if (idx[i] == 0) ok = false;
        prev -= stride[i];
        chosen.push_back(i);
      }
      if (!ok) continue;
      const Cost& before = best[prev];
      if (before.edits == std::numeric_limits<int>::max()) continue;
      const std::size_t k = chosen.size();
      Cost col{static_cast<int>(k * (n - k)), 0.0};
      for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = a + 1; b < k; ++b) {
          const std::size_t ia = chosen[a], ib = chosen[b];
          if (in.ids[ia][idx[ia] - 1] != in.ids[ib][idx[ib] - 1]) ++col.edits;
          col.gap += time_gap(systems[ia][idx[ia] - 1], systems[ib][idx[ib] - 1]);
        }
      const Cost total = before + col;
      if (cell_mask == 0 || total < cell_best) {
        cell_best = total;
        cell_mask = mask;
      }
    }
    best[cell] = cell_best;
    back[cell] = cell_mask;
  }

  WordTransitionNetwork wtn;
  wtn.num_systems = n;
  wtn.exact = true;
  std::size_t cell = cells - 1;
  for (std::size_t i = 0; i < n; ++i) idx[i] = dims[i] - 1;
  while (cell != 0) {
    const std::uint32_t mask = back[cell];
    std::vector<std::optional<HypothesisWord>> slot(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!(mask >> i & 1u)) continue;
      slot[i] = systems[i][idx[i] - 1];
      --idx[i];
      cell -= stride[i];
    }
    wtn.slots.push_back(std::move(slot));
  }
  std::reverse(wtn.slots.begin(), wtn.slots.end());
  return wtn;
}

inline WordTransitionNetwork align_progressive(const std::vector<std::vector<HypothesisWord>>& systems) {
  const std::size_t n = systems.size();
  WordTransitionNetwork wtn;
  wtn.num_systems = n;
  for (const auto& w : systems[0]) {
    std::vector<std::optional<HypothesisWord>> slot(n);
    slot[0] = w;
    wtn.slots.push_back(std::move(slot));
  }

  for (std::size_t k = 1; k < n; ++k) {
    const auto& seq = systems[k];
    const std::size_t rows = wtn.slots.size();
    const std::size_t cols = seq.size();
    const std::size_t width = cols + 1;

    // Placing a word in a slot costs one per earlier system that disagrees.
    std::vector<std::map<std::string, int>> counts(rows);
    std::vector<int> non_null(rows, 0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t i = 0; i < k; ++i)
        if (const auto& e = wtn.slots[r][i]) {
          ++counts[r][e->word];
          ++non_null[r];
        }
    const auto place = [&](std::size_t r, const HypothesisWord& w) {
      auto it = counts[r].find(w.word);
      Cost c{static_cast<int>(k) - (it == counts[r].end() ? 0 : it->second), 0.0};
      for (std::size_t i = 0; i < k; ++i)
        if (const auto& e = wtn.slots[r][i]) c.gap += time_gap(*e, w);
      return c;
    };

    enum : std::uint8_t { kDiag, kNull, kInsert };
    std::vector<Cost> dp((rows + 1) * width);
    std::vector<std::uint8_t> op((rows + 1) * width, kDiag);
    dp[0] = {0, 0.0};
    for (std::size_t r = 0; r <= rows; ++r)
      for (std::size_t c = 0; c <= cols; ++c) {
        if (r == 0 && c == 0) continue;
        Cost bestc;
        std::uint8_t bop = kDiag;
        bool have = false;
        const auto consider = [&](const Cost& cand, std::uint8_t o) {
          if (!have || cand < bestc) {
            bestc = cand;
            bop = o;
            have = true;
          }
        };
        if (r > 0 && c > 0) consider(dp[(r - 1) * width + c - 1] + place(r - 1, seq[c - 1]), kDiag);
        if (r > 0) consider(dp[(r - 1) * width + c] + Cost{non_null[r - 1], 0.0}, kNull);
        if (c > 0) consider(dp[r * width + c - 1] + Cost{static_cast<int>(k), 0.0}, kInsert);
        dp[r * width + c] = bestc;
        op[r * width + c] = bop;
      }

    std::vector<std::vector<std::optional<HypothesisWord>>> merged;
    std::size_t r = rows, c = cols;
    while (r > 0 || c > 0) {
      switch (op[r * width + c]) {
        case kDiag:
          merged.push_back(wtn.slots[r - 1]);
          merged.back()[k] = seq[c - 1];
          --r;
          --c;
          break;
        case kNull:
          merged.push_back(wtn.slots[r - 1]);
          --r;
          break;
        default: {
          std::vector<std::optional<HypothesisWord>> slot(n);
          slot[k] = seq[c - 1];
          merged.push_back(std::move(slot));
          --c;
        }
      }
    }
    std::reverse(merged.begin(), merged.end());
    wtn.slots = std::move(merged);
  }
  return wtn;
}

}  // namespace rover_detail

/// Multiple alignment of the systems' word sequences into a WTN, minimizing
/// the sum-of-pairs edit cost (time overlap breaks ties).
inline WordTransitionNetwork build_wtn(const std::vector<std::vector<HypothesisWord>>& systems,
                                       const WtnOptions& options = {}) {
  if (systems.empty()) fail(Errc::kInvalidArgument, "build_wtn needs at least one system");
  if (rover_detail::exact_fits(systems, options.exact_work_budget))
    return rover_detail::align_exact(systems);
  return rover_detail::align_progressive(systems);
}

inline std::vector<HypothesisWord> as_hypothesis(const std::vector<std::string>& words) {
  std::vector<HypothesisWord> out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back({w, 0.0, 0.0, 1.0, std::nullopt});
  return out;
}

inline WordTransitionNetwork build_wtn(const std::vector<std::vector<std::string>>& systems,
                                       const WtnOptions& options = {}) {
  std::vector<std::vector<HypothesisWord>> hyp;
  for (const auto& s : systems) hyp.push_back(as_hypothesis(s));
  return build_wtn(hyp, options);
}

struct VoteConfig {
  double alpha = 0.5;            // weight of word frequency vs confidence
  double null_confidence = 0.7;  // confidence credited to a NULL

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) fail(Errc::kInvalidArgument, "alpha must be in [0, 1]");
    if (!(null_confidence >= 0.0 && null_confidence <= 1.0))
      fail(Errc::kInvalidArgument, "null_confidence must be in [0, 1]");
  }
};

/// Per slot: score(w) = alpha * N_w / N_sys + (1 - alpha) * maxconf(w), with
/// NULL scored using null_confidence. Ties go to the more frequent entry,
/// then to the lexicographically smaller word (NULL sorts first). A winning
/// NULL emits nothing; otherwise the word is emitted with the timing of its
/// most confident instance and the winning score as confidence.
inline std::vector<HypothesisWord> vote(const WordTransitionNetwork& wtn, const VoteConfig& config = {}) {
  config.validate();
  std::vector<HypothesisWord> out;
  const double n_sys = static_cast<double>(wtn.num_systems);
  for (const auto& slot : wtn.slots) {
    struct Candidate {
      int count = 0;
      double max_conf = -1.0;
      const HypothesisWord* best = nullptr;
    };
    std::map<std::string, Candidate> words;
    int nulls = 0;
    for (const auto& e : slot) {
      if (!e) {
        ++nulls;
        continue;
      }
      auto& c = words[e->word];
      ++c.count;
      if (e->confidence > c.max_conf) {
        c.max_conf = e->confidence;
        c.best = &*e;
      }
    }

    // NULL first so that it wins exact ties by sorting first.
    bool have = false;
    double win_score = 0.0;
    int win_count = 0;
    const HypothesisWord* winner = nullptr;
    const auto offer = [&](double score, int count, const HypothesisWord* w) {
      if (!have || score > win_score || (score == win_score && count > win_count)) {
        have = true;
        win_score = score;
        win_count = count;
        winner = w;
      }
    };
    if (nulls > 0)
      offer(config.alpha * nulls / n_sys + (1.0 - config.alpha) * config.null_confidence, nulls, nullptr);
    for (const auto& [word, c] : words)  // std::map iterates in lexicographic order
      offer(config.alpha * c.count / n_sys + (1.0 - config.alpha) * c.max_conf, c.count, c.best);

    if (winner != nullptr) {
      HypothesisWord w = *winner;
      w.confidence = std::clamp(win_score, 0.0, 1.0);
      out.push_back(std::move(w));
    }
  }
  return out;
}

}  // namespace pscaug
