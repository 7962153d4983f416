#pragma once

// Random instance generators shared by the unit tests and the acceptance run.

#include "scribe/core.hpp"
#include "scribe/ctc.hpp"
#include "scribe/lm.hpp"
#include "scribe/strokes.hpp"

#include <random>
#include <set>
#include <vector>

namespace scribe::testing {

using Rng = std::mt19937_64;

inline Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

/// T x (N+1) log-softmax of Gaussian activations.
inline Matrix random_log_probs(Rng& rng, Eigen::Index T, Eigen::Index N, double scale = 1.5) {
  return softmax_rows(random_matrix(rng, T, N + 1, scale));
}

inline LabelSequence random_labels(Rng& rng, std::size_t length, int N) {
  std::uniform_int_distribution<int> label(0, N - 1);
  LabelSequence out(length);
  for (auto& l : out) l = label(rng);
  return out;
}

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

/// Up to `words` distinct words of length [1, max_length] over N labels.
inline Dictionary random_dictionary(Rng& rng, std::size_t words, int N, std::size_t max_length) {
  std::set<LabelSequence> seen;
  std::vector<LabelSequence> out;
  for (int attempt = 0; out.size() < words && attempt < 1000; ++attempt) {
    LabelSequence w = random_labels(rng, static_cast<std::size_t>(uniform_int(rng, 1, static_cast<int>(max_length))), N);
    if (seen.insert(w).second) out.push_back(std::move(w));
  }
  return Dictionary(out);
}

/// Random normalized start and transition distributions.
inline BigramModel random_bigram(Rng& rng, std::size_t W) {
  const auto n = static_cast<Eigen::Index>(W);
  BigramModel m{Vector(n), Matrix(n, n)};
  m.start_log_prob = softmax_rows(random_matrix(rng, 1, n)).row(0).transpose();
  m.transition_log_prob = softmax_rows(random_matrix(rng, n, n));
  return m;
}

/// A random multi-stroke point list with coordinates of order `scale`.
inline PointList random_polyline(Rng& rng, std::size_t points, int strokes, double scale = 1.0) {
  std::normal_distribution<double> step(0.0, scale);
  PointList out;
  double x = 0.0, y = 0.0;
  int stroke = 0;
  for (std::size_t i = 0; i < points; ++i) {
    if (i > 0 && stroke + 1 < strokes && uniform_int(rng, 0, static_cast<int>(points) / std::max(strokes, 1)) == 0) {
      ++stroke;
    }
    x += step(rng);
    y += step(rng);
    out.push_back({x, y, stroke});
  }
  return out;
}

}  // namespace scribe::testing
