#pragma once

// Slow, obviously-correct references for the CTC, decoding and gradient
// code. Nothing here calls into ctc.hpp, decode.hpp or network.hpp; only
// shared data types are used.

#include "scribe/core.hpp"
#include "scribe/lm.hpp"
#include "scribe/ranking.hpp"
#include "scribe/strokes.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <numbers>
#include <vector>

namespace scribe::oracles {

inline constexpr double kMaxPaths = 1e7;

/// Merge repeats, then delete blanks.
inline LabelSequence collapse_path(const std::vector<int>& path, int blank) {
  LabelSequence out;
  for (std::size_t t = 0; t < path.size(); ++t) {
    if (t > 0 && path[t] == path[t - 1]) continue;
    if (path[t] != blank) out.push_back(path[t]);
  }
  return out;
}

/// Calls visit(path, log_prob) for every length-T path over all K classes.
inline void for_each_path(const Matrix& log_probs, const std::function<void(const std::vector<int>&, double)>& visit) {
  const auto T = static_cast<std::size_t>(log_probs.rows());
  const auto K = static_cast<int>(log_probs.cols());
  if (std::pow(static_cast<double>(K), static_cast<double>(T)) > kMaxPaths) {
    throw ConfigError("brute-force enumeration exceeds 1e7 paths");
  }
  std::vector<int> path(T, 0);
  while (true) {
    double lp = 0.0;
    for (std::size_t t = 0; t < T; ++t) lp += log_probs(static_cast<Eigen::Index>(t), path[t]);
    visit(path, lp);
    std::size_t t = 0;
    while (t < T && ++path[t] == K) path[t++] = 0;
    if (t == T) break;
  }
}

/// Sum of probabilities of every path collapsing to `target` (linear scale).
inline double brute_ctc_likelihood(const Matrix& log_probs, const LabelSequence& target) {
  const int blank = static_cast<int>(log_probs.cols()) - 1;
  double total = 0.0;
  for_each_path(log_probs, [&](const std::vector<int>& path, double lp) {
    if (collapse_path(path, blank) == target) total += std::exp(lp);
  });
  return total;
}

/// Probability mass of every labelling reachable in T frames.
inline std::map<LabelSequence, double> brute_labelling_distribution(const Matrix& log_probs) {
  const int blank = static_cast<int>(log_probs.cols()) - 1;
  std::map<LabelSequence, double> mass;
  for_each_path(log_probs, [&](const std::vector<int>& path, double lp) { mass[collapse_path(path, blank)] += std::exp(lp); });
  return mass;
}

/// Every dictionary word rescored independently by brute force, fully sorted.
inline Ranking brute_dictionary_decode(const Matrix& log_probs, const Dictionary& dict, const BigramModel* lm,
                                       double lm_weight = 1.0) {
  if (dict.size() > 50) throw ConfigError("brute dictionary decode limited to 50 words");
  const auto mass = brute_labelling_distribution(log_probs);
  Ranking r;
  for (std::size_t w = 0; w < dict.size(); ++w) {
    auto it = mass.find(dict.word(w));
    const double p = it == mass.end() ? 0.0 : it->second;
    double score = p > 0.0 ? std::log(p) : kLogZero;
    if (lm && p > 0.0) score += lm_weight * lm->start_log_prob(static_cast<Eigen::Index>(w));
    r.entries.push_back({{static_cast<int>(w)}, score});
  }
  std::stable_sort(r.entries.begin(), r.entries.end(),
                   [](const RankEntry& a, const RankEntry& b) { return a.log_score > b.log_score; });
  return r;
}

/// Exhaustive word-sequence search with the Viterbi path score: for each
/// labelling, the best single path collapsing to it, plus the weighted
/// bigram log probability of every segmentation into dictionary words.
inline SequenceHypothesis brute_sequence_decode(const Matrix& log_probs, const Dictionary& dict, const BigramModel& lm,
                                                double lm_weight = 1.0) {
  const int blank = static_cast<int>(log_probs.cols()) - 1;
  std::map<LabelSequence, double> best_path;
  for_each_path(log_probs, [&](const std::vector<int>& path, double lp) {
    auto [it, inserted] = best_path.emplace(collapse_path(path, blank), lp);
    if (!inserted) it->second = std::max(it->second, lp);
  });

  SequenceHypothesis best;
  for (const auto& [labels, path_score] : best_path) {
    // Depth-first over segmentations of `labels` into dictionary words.
    std::vector<int> words;
    std::function<void(std::size_t)> segment = [&](std::size_t pos) {
      if (pos == labels.size()) {
        if (words.empty()) return;
        double lm_score = lm.start_log_prob(words[0]);
        for (std::size_t i = 1; i < words.size(); ++i) lm_score += lm.transition_log_prob(words[i - 1], words[i]);
        const double total = path_score + lm_weight * lm_score;
        if (total > best.log_score) best = {words, total};
        return;
      }
      for (std::size_t w = 0; w < dict.size(); ++w) {
        const auto& word = dict.word(w);
        if (pos + word.size() <= labels.size() && std::equal(word.begin(), word.end(), labels.begin() + static_cast<std::ptrdiff_t>(pos))) {
          words.push_back(static_cast<int>(w));
          segment(pos + word.size());
          words.pop_back();
        }
      }
    };
    segment(0);
  }
  return best;
}

/// Gaussian filter by direct summation: for each point l of a stroke,
/// sum_m w_m X_{l+m} / sum_m w_m over |m| <= ceil(3 delta) inside the stroke.
inline PointList direct_gaussian_smooth(const PointList& points, double delta) {
  const int radius = static_cast<int>(std::ceil(3.0 * delta));
  PointList out = points;
  std::size_t begin = 0;
  while (begin < points.size()) {
    std::size_t end = begin + 1;
    while (end < points.size() && points[end].stroke_index == points[begin].stroke_index) ++end;
    for (std::size_t l = begin; l < end; ++l) {
      double num_x = 0.0, num_y = 0.0, den = 0.0;
      for (int m = -radius; m <= radius; ++m) {
        const auto k = static_cast<std::ptrdiff_t>(l) + m;
        if (k < static_cast<std::ptrdiff_t>(begin) || k >= static_cast<std::ptrdiff_t>(end)) continue;
        const double w = std::exp(-static_cast<double>(m * m) / (2.0 * delta * delta));
        num_x += w * points[static_cast<std::size_t>(k)].x;
        num_y += w * points[static_cast<std::size_t>(k)].y;
        den += w;
      }
      out[l].x = num_x / den;
      out[l].y = num_y / den;
    }
    begin = end;
  }
  return out;
}

/// theta_m = arg((X_{m+1} - X_{m-1}) + j (Y_{m+1} - Y_{m-1})), one-sided at
/// stroke ends, 0 for single-point strokes, -pi reported as pi.
inline std::vector<double> complex_tangent_angles(const PointList& points) {
  std::vector<double> theta(points.size(), 0.0);
  for (std::size_t m = 0; m < points.size(); ++m) {
    const int s = points[m].stroke_index;
    const bool has_prev = m > 0 && points[m - 1].stroke_index == s;
    const bool has_next = m + 1 < points.size() && points[m + 1].stroke_index == s;
    if (!has_prev && !has_next) continue;
    const RawPoint& a = has_prev ? points[m - 1] : points[m];
    const RawPoint& b = has_next ? points[m + 1] : points[m];
    const double angle = std::arg(std::complex<double>(b.x - a.x, b.y - a.y));
    theta[m] = angle == -std::numbers::pi ? std::numbers::pi : angle;
  }
  return theta;
}

/// Central differences, one coordinate at a time.
inline std::vector<double> finite_difference_gradient(const std::function<double(const std::vector<double>&)>& loss,
                                                      std::vector<double> params, double eps) {
  if (!(eps >= 1e-7 && eps <= 1e-4)) throw ConfigError("finite-difference step must lie in [1e-7, 1e-4]");
  std::vector<double> grad(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + eps;
    const double up = loss(params);
    params[i] = saved - eps;
    const double down = loss(params);
    params[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw DataError("non-finite loss at finite-difference probe " + std::to_string(i));
    }
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

}  // namespace scribe::oracles
