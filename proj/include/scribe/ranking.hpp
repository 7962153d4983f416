#pragma once

// Result types shared by the decoders and their brute-force references.

#include "scribe/core.hpp"

#include <vector>

namespace scribe {

using WordSequence = std::vector<int>;

struct RankEntry {
  WordSequence words;  // a single index for per-word ranking
  double log_score = kLogZero;

  friend bool operator==(const RankEntry&, const RankEntry&) = default;
};

/// Best first; equal scores ordered by ascending dictionary index.
struct Ranking {
  std::vector<RankEntry> entries;
};

struct SequenceHypothesis {
  WordSequence words;
  double log_score = kLogZero;
};

}  // namespace scribe
