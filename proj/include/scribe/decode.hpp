#pragma once

// Best-path decoding, exact dictionary-word scoring and ranking, bigram
// token-passing over word sequences, and top-k recognition rates.

#include "scribe/ctc.hpp"
#include "scribe/lm.hpp"
#include "scribe/ranking.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace scribe {

/// Framewise argmax (lowest index on ties), collapse repeats, drop blanks.
inline LabelSequence best_path_decode(const LogProbMatrix& log_probs) {
  const Label blank = blank_of(log_probs);
  LabelSequence out;
  Label previous = -1;
  for (Eigen::Index t = 0; t < log_probs.rows(); ++t) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < log_probs.cols(); ++k) {
      if (log_probs(t, k) > log_probs(t, best)) best = k;
    }
    const auto label = static_cast<Label>(best);
    if (label != previous && label != blank) out.push_back(label);
    previous = label;
  }
  return out;
}

/// log p(word | input), summed over all alignments; -inf when infeasible.
inline double score_word(const LogProbMatrix& log_probs, const LabelSequence& word) {
  return ctc_log_likelihood(log_probs, word);
}

/// Single-word recognition: every dictionary word scored by
/// log p(word | input) + lm_weight * start_log_prob(word). `lm` may be null.
inline Ranking dictionary_rank(const LogProbMatrix& log_probs, const Dictionary& dict, const BigramModel* lm,
                               std::size_t k, double lm_weight = 1.0) {
  if (dict.empty()) throw ConfigError("dictionary_rank needs a non-empty dictionary");
  if (k == 0) throw ConfigError("k must be positive");
  if (lm && lm->size() != dict.size()) throw ConfigError("bigram model size does not match the dictionary");
  std::vector<RankEntry> all;
  all.reserve(dict.size());
  for (std::size_t w = 0; w < dict.size(); ++w) {
    double score = score_word(log_probs, dict.word(w));
    if (lm && score != kLogZero) score += lm_weight * lm->start_log_prob(static_cast<Eigen::Index>(w));
    all.push_back({{static_cast<int>(w)}, score});
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const RankEntry& a, const RankEntry& b) { return a.log_score > b.log_score; });
  all.resize(std::min(k, all.size()));
  return {std::move(all)};
}

/// Token passing over (word, augmented-target state) pairs with Viterbi
/// scores: log p(path) + lm_weight * log p(words | bigram). At most
/// `beam_width` states survive each frame; with a beam at least as large as
/// the total state count the search is exhaustive.
inline SequenceHypothesis sequence_decode(const LogProbMatrix& log_probs, const Dictionary& dict,
                                          const BigramModel& lm, std::size_t beam_width, double lm_weight = 1.0) {
  if (beam_width < 1) throw ConfigError("beam_width must be at least 1");
  if (dict.empty()) throw ConfigError("sequence_decode needs a non-empty dictionary");
  if (lm.size() != dict.size()) throw ConfigError("bigram model size does not match the dictionary");
  if (log_probs.rows() < 1) throw DataError("sequence_decode needs at least one frame");
  const Label blank = blank_of(log_probs);
  for (const auto& w : dict.words()) {
    for (Label l : w) {
      if (l < 0 || l >= blank) throw DataError("dictionary label outside the output alphabet");
    }
  }

  // Word-history links shared between tokens; index -1 is the empty history.
  struct Link {
    int word;
    int previous;
  };
  std::vector<Link> links;

  struct StateRef {
    int word;
    int state;
  };
  std::vector<StateRef> states;
  std::vector<std::size_t> first_state(dict.size());
  for (std::size_t w = 0; w < dict.size(); ++w) {
    first_state[w] = states.size();
    for (std::size_t s = 0; s < 2 * dict.word(w).size() + 1; ++s) {
      states.push_back({static_cast<int>(w), static_cast<int>(s)});
    }
  }
  const std::size_t n_states = states.size();
  auto label_at = [&](const StateRef& st) -> Label {
    return st.state % 2 == 0 ? blank : dict.word(static_cast<std::size_t>(st.word))[static_cast<std::size_t>(st.state / 2)];
  };

  std::vector<double> score(n_states, kLogZero), next(n_states, kLogZero);
  std::vector<int> history(n_states, -1), next_history(n_states, -1);

  auto enter = [&](std::size_t w, int prev_link, double base, std::vector<double>& into, std::vector<int>& hist,
                   Label forbidden_first, Eigen::Index t) {
    const std::size_t i0 = first_state[w];
    const double s0 = base + log_probs(t, blank);
    int link = -1;
    auto make_link = [&] {
      if (link < 0) {
        links.push_back({static_cast<int>(w), prev_link});
        link = static_cast<int>(links.size()) - 1;
      }
      return link;
    };
    if (s0 > into[i0]) {
      into[i0] = s0;
      hist[i0] = make_link();
    }
    const Label first = dict.word(w).front();
    if (first != forbidden_first) {
      const double s1 = base + log_probs(t, first);
      if (s1 > into[i0 + 1]) {
        into[i0 + 1] = s1;
        hist[i0 + 1] = make_link();
      }
    }
  };

  for (std::size_t w = 0; w < dict.size(); ++w) {
    enter(w, -1, lm_weight * lm.start_log_prob(static_cast<Eigen::Index>(w)), score, history, -1, 0);
  }

  std::vector<std::size_t> order(n_states);
  auto prune = [&](std::vector<double>& sc) {
    if (beam_width >= n_states) return;
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sc[a] > sc[b]; });
    for (std::size_t r = beam_width; r < n_states; ++r) sc[order[r]] = kLogZero;
  };
  prune(score);

  for (Eigen::Index t = 1; t < log_probs.rows(); ++t) {
    std::fill(next.begin(), next.end(), kLogZero);
    std::fill(next_history.begin(), next_history.end(), -1);
    // Within-word transitions.
    for (std::size_t i = 0; i < n_states; ++i) {
      const StateRef& st = states[i];
      const Label lab = label_at(st);
      double best = score[i];
      int hist = history[i];
      if (st.state >= 1 && score[i - 1] > best) {
        best = score[i - 1];
        hist = history[i - 1];
      }
      if (st.state >= 2 && lab != blank && lab != label_at(states[i - 2]) && score[i - 2] > best) {
        best = score[i - 2];
        hist = history[i - 2];
      }
      if (best != kLogZero) {
        next[i] = best + log_probs(t, lab);
        next_history[i] = hist;
      }
    }
    // Word ends at t-1 feed word starts at t.
    for (std::size_t v = 0; v < dict.size(); ++v) {
      const std::size_t last = first_state[v] + 2 * dict.word(v).size();
      for (std::size_t end : {last, last - 1}) {
        if (score[end] == kLogZero) continue;
        const Label forbidden = end == last - 1 ? dict.word(v).back() : -1;
        for (std::size_t w = 0; w < dict.size(); ++w) {
          const double base = score[end] + lm_weight * lm.transition_log_prob(static_cast<Eigen::Index>(v),
                                                                               static_cast<Eigen::Index>(w));
          enter(w, history[end], base, next, next_history, forbidden, t);
        }
      }
    }
    prune(next);
    std::swap(score, next);
    std::swap(history, next_history);
  }

  SequenceHypothesis best;
  int best_link = -1;
  for (std::size_t w = 0; w < dict.size(); ++w) {
    const std::size_t last = first_state[w] + 2 * dict.word(w).size();
    for (std::size_t end : {last - 1, last}) {
      if (score[end] > best.log_score) {
        best.log_score = score[end];
        best_link = history[end];
      }
    }
  }
  for (int l = best_link; l >= 0; l = links[static_cast<std::size_t>(l)].previous) {
    best.words.push_back(links[static_cast<std::size_t>(l)].word);
  }
  std::reverse(best.words.begin(), best.words.end());
  return best;
}

/// Fraction of samples whose truth is among the first k entries, per k.
inline std::map<int, double> top_k_accuracy(const std::vector<Ranking>& rankings, const std::vector<WordSequence>& truths,
                                            const std::vector<int>& ks = {1, 5, 10}) {
  if (rankings.empty()) throw DataError("top-k accuracy of an empty evaluation");
  if (rankings.size() != truths.size()) throw ConfigError("rankings and truths differ in length");
  std::map<int, double> rates;
  for (int k : ks) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < rankings.size(); ++i) {
      const auto& entries = rankings[i].entries;
      const std::size_t limit = std::min(entries.size(), static_cast<std::size_t>(k));
      for (std::size_t r = 0; r < limit; ++r) {
        if (entries[r].words == truths[i]) {
          ++hits;
          break;
        }
      }
    }
    rates[k] = static_cast<double>(hits) / static_cast<double>(rankings.size());
  }
  return rates;
}

inline std::size_t edit_distance(const LabelSequence& a, const LabelSequence& b) {
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

/// Recognition CSV: sample_id,rank,word,log_score (rank is 1-based; word
/// symbols are space separated, words of a sequence joined by " | ").
inline void write_ranking_csv_header(std::ostream& out) { out << "sample_id,rank,word,log_score\n"; }

inline void write_ranking_csv(std::ostream& out, const std::string& sample_id, const Ranking& ranking,
                              const Dictionary& dict, const Alphabet& alphabet) {
  for (std::size_t r = 0; r < ranking.entries.size(); ++r) {
    std::string word;
    for (std::size_t i = 0; i < ranking.entries[r].words.size(); ++i) {
      if (i) word += " | ";
      word += alphabet.to_string(dict.word(static_cast<std::size_t>(ranking.entries[r].words[i])));
    }
    std::ostringstream score;
    score.precision(17);
    score << ranking.entries[r].log_score;
    out << sample_id << ',' << (r + 1) << ',' << word << ',' << score.str() << '\n';
  }
}

}  // namespace scribe
