#pragma once

// Connectionist temporal classification: log-softmax outputs, log-space
// forward-backward over the blank-augmented target, loss and gradient.

#include "scribe/core.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace scribe {

/// T x (N+1) log probabilities; the last column is the blank.
using LogProbMatrix = Matrix;

inline Label blank_of(const LogProbMatrix& log_probs) { return static_cast<Label>(log_probs.cols() - 1); }

/// Row-wise log-softmax with max subtraction.
inline LogProbMatrix softmax_rows(const Matrix& activations) {
  LogProbMatrix out(activations.rows(), activations.cols());
  for (Eigen::Index t = 0; t < activations.rows(); ++t) {
    const double peak = activations.row(t).maxCoeff();
    const double log_z = peak + std::log((activations.row(t).array() - peak).exp().sum());
    out.row(t) = activations.row(t).array() - log_z;
  }
  return out;
}

struct CtcTables {
  Matrix log_alpha;  // T x (2L+1)
  Matrix log_beta;   // T x (2L+1), both include the emission at t
  double log_likelihood = kLogZero;
};

namespace detail {

/// (blank, t1, blank, t2, ..., blank)
inline LabelSequence augment(const LabelSequence& target, Label blank) {
  LabelSequence z(2 * target.size() + 1, blank);
  for (std::size_t i = 0; i < target.size(); ++i) z[2 * i + 1] = target[i];
  return z;
}

inline void check_ctc_inputs(const LogProbMatrix& log_probs, const LabelSequence& target) {
  if (log_probs.rows() < 1 || log_probs.cols() < 2) {
    throw DataError("CTC needs at least one frame and one non-blank class");
  }
  const Label blank = blank_of(log_probs);
  for (Label l : target) {
    if (l < 0 || l >= blank) {
      throw DataError("CTC target label " + std::to_string(l) + " outside [0, " + std::to_string(blank) + ")");
    }
  }
}

inline bool can_skip(const LabelSequence& z, std::size_t s, Label blank) {
  return s >= 2 && z[s] != blank && z[s] != z[s - 2];
}

inline Matrix forward_table(const LogProbMatrix& lp, const LabelSequence& z, Label blank) {
  const Eigen::Index T = lp.rows();
  const auto S = static_cast<Eigen::Index>(z.size());
  Matrix alpha = Matrix::Constant(T, S, kLogZero);
  alpha(0, 0) = lp(0, blank);
  if (S > 1) alpha(0, 1) = lp(0, z[1]);
  for (Eigen::Index t = 1; t < T; ++t) {
    for (Eigen::Index s = 0; s < S; ++s) {
      double a = alpha(t - 1, s);
      if (s >= 1) a = log_add(a, alpha(t - 1, s - 1));
      if (can_skip(z, static_cast<std::size_t>(s), blank)) a = log_add(a, alpha(t - 1, s - 2));
      alpha(t, s) = a == kLogZero ? kLogZero : a + lp(t, z[static_cast<std::size_t>(s)]);
    }
  }
  return alpha;
}

inline Matrix backward_table(const LogProbMatrix& lp, const LabelSequence& z, Label blank) {
  const Eigen::Index T = lp.rows();
  const auto S = static_cast<Eigen::Index>(z.size());
  Matrix beta = Matrix::Constant(T, S, kLogZero);
  beta(T - 1, S - 1) = lp(T - 1, blank);
  if (S > 1) beta(T - 1, S - 2) = lp(T - 1, z[static_cast<std::size_t>(S - 2)]);
  for (Eigen::Index t = T - 2; t >= 0; --t) {
    for (Eigen::Index s = 0; s < S; ++s) {
      double b = beta(t + 1, s);
      if (s + 1 < S) b = log_add(b, beta(t + 1, s + 1));
      if (s + 2 < S && can_skip(z, static_cast<std::size_t>(s + 2), blank)) b = log_add(b, beta(t + 1, s + 2));
      beta(t, s) = b == kLogZero ? kLogZero : b + lp(t, z[static_cast<std::size_t>(s)]);
    }
  }
  return beta;
}

inline double terminal_likelihood(const Matrix& alpha) {
  const Eigen::Index T = alpha.rows(), S = alpha.cols();
  double ll = alpha(T - 1, S - 1);
  if (S > 1) ll = log_add(ll, alpha(T - 1, S - 2));
  return ll;
}

}  // namespace detail

/// Fewest frames any alignment of `target` needs (a blank between repeats).
inline std::size_t min_ctc_frames(const LabelSequence& target) {
  std::size_t frames = target.size();
  for (std::size_t i = 1; i < target.size(); ++i) frames += target[i] == target[i - 1];
  return frames;
}

/// Infeasible targets give log_likelihood = -inf rather than an exception.
inline CtcTables ctc_forward_backward(const LogProbMatrix& log_probs, const LabelSequence& target) {
  detail::check_ctc_inputs(log_probs, target);
  const Label blank = blank_of(log_probs);
  const LabelSequence z = detail::augment(target, blank);
  CtcTables tables;
  tables.log_alpha = detail::forward_table(log_probs, z, blank);
  tables.log_beta = detail::backward_table(log_probs, z, blank);
  tables.log_likelihood = detail::terminal_likelihood(tables.log_alpha);
  return tables;
}

/// log p(target | input), forward pass only.
inline double ctc_log_likelihood(const LogProbMatrix& log_probs, const LabelSequence& target) {
  detail::check_ctc_inputs(log_probs, target);
  if (min_ctc_frames(target) > static_cast<std::size_t>(log_probs.rows())) return kLogZero;
  const Label blank = blank_of(log_probs);
  return detail::terminal_likelihood(detail::forward_table(log_probs, detail::augment(target, blank), blank));
}

struct CtcLoss {
  double loss = 0.0;                     // +inf when any pair is infeasible
  std::vector<std::size_t> infeasible;   // indices of pairs with zero likelihood
};

/// -sum ln p(target | input) over the batch.
inline CtcLoss ctc_loss(const std::vector<std::pair<LogProbMatrix, LabelSequence>>& batch) {
  CtcLoss result;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double ll = ctc_log_likelihood(batch[i].first, batch[i].second);
    if (ll == kLogZero) {
      result.infeasible.push_back(i);
      result.loss = std::numeric_limits<double>::infinity();
    } else {
      result.loss -= ll;
    }
  }
  return result;
}

/// d(-ln p) / d(pre-softmax activations), given the tables for `log_probs`.
inline Matrix ctc_gradient(const LogProbMatrix& log_probs, const LabelSequence& target, const CtcTables& tables) {
  if (tables.log_likelihood == kLogZero || !std::isfinite(tables.log_likelihood)) {
    throw DataError("CTC gradient undefined: target has zero probability");
  }
  const Label blank = blank_of(log_probs);
  const LabelSequence z = detail::augment(target, blank);
  const Eigen::Index T = log_probs.rows(), K = log_probs.cols();
  Matrix grad = log_probs.array().exp().matrix();
  std::vector<double> occupancy(static_cast<std::size_t>(K));
  for (Eigen::Index t = 0; t < T; ++t) {
    std::fill(occupancy.begin(), occupancy.end(), kLogZero);
    for (std::size_t s = 0; s < z.size(); ++s) {
      const double a = tables.log_alpha(t, static_cast<Eigen::Index>(s));
      const double b = tables.log_beta(t, static_cast<Eigen::Index>(s));
      if (a == kLogZero || b == kLogZero) continue;
      auto& occ = occupancy[static_cast<std::size_t>(z[s])];
      occ = log_add(occ, a + b - log_probs(t, z[s]));
    }
    for (Eigen::Index k = 0; k < K; ++k) {
      const double occ = occupancy[static_cast<std::size_t>(k)];
      if (occ != kLogZero) grad(t, k) -= std::exp(occ - tables.log_likelihood);
    }
  }
  return grad;
}

inline Matrix ctc_gradient(const LogProbMatrix& log_probs, const LabelSequence& target) {
  return ctc_gradient(log_probs, target, ctc_forward_backward(log_probs, target));
}

}  // namespace scribe
