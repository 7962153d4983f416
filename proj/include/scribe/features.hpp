#pragma once

// Per-point features: local [x, y, theta], corpus above/below counts and a
// 3x3 neighbourhood map; plus mean/std standardization.

#include "scribe/preprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace scribe {

struct FeatureSequence {
  Matrix values;  // T x D
  std::vector<std::string> feature_names;

  Eigen::Index frames() const { return values.rows(); }
  Eigen::Index dims() const { return values.cols(); }
};

/// Named column subsets. "full" is every feature; the others are prefixes.
inline const std::vector<std::string>& full_feature_names() {
  static const std::vector<std::string> names = {"x",     "y",     "theta", "above", "below", "map0", "map1",
                                                 "map2",  "map3",  "map4",  "map5",  "map6",  "map7", "map8"};
  return names;
}

inline std::size_t feature_set_width(const std::string& name) {
  if (name == "full") return 14;
  if (name == "local") return 3;
  if (name == "local_corpus") return 5;
  throw ConfigError("unknown feature set '" + name + "' (expected full, local or local_corpus)");
}

struct FeatureConfig {
  std::string feature_set = "full";
  double window = 0.0;  // 0 selects the corpus height

  void check() const {
    feature_set_width(feature_set);
    if (!(window >= 0.0) || !std::isfinite(window)) throw ConfigError("features.window must be >= 0");
  }
};

/// Tangent direction per point, per stroke, in (-pi, pi]. Interior points
/// use central differences, endpoints one-sided ones.
inline std::vector<double> tangent_angles(const PointList& points) {
  std::vector<double> theta(points.size(), 0.0);
  for (auto [begin, end] : stroke_ranges(points)) {
    if (end - begin < 2) continue;
    for (std::size_t m = begin; m < end; ++m) {
      const std::size_t a = m == begin ? m : m - 1;
      const std::size_t b = m + 1 == end ? m : m + 1;
      double angle = std::atan2(points[b].y - points[a].y, points[b].x - points[a].x);
      if (angle <= -std::numbers::pi) angle = std::numbers::pi;
      theta[m] = angle;
    }
  }
  return theta;
}

/// 11 values per point: above, below, then the row-major 3x3 map (top row
/// first, centre at index 4) normalized by the window count.
inline std::vector<std::array<double, 11>> offline_context(const PointList& points, const CorpusBand& band,
                                                           double window) {
  if (!(window > 0.0) || !std::isfinite(window)) throw ConfigError("context window must be positive");
  const double half = window / 2.0;
  const double cell = window / 3.0;
  std::vector<std::array<double, 11>> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto& f = out[i];
    f.fill(0.0);
    double inside = 0.0;
    for (const auto& q : points) {
      const double dx = q.x - points[i].x;
      const double dy = q.y - points[i].y;
      if (std::abs(dx) > half) continue;
      if (q.y > band.corpus_top_y) f[0] += 1.0;
      if (q.y < band.baseline_y) f[1] += 1.0;
      if (std::abs(dy) > half) continue;
      const int col = std::clamp(static_cast<int>(std::floor((dx + half) / cell)), 0, 2);
      const int row = std::clamp(static_cast<int>(std::floor((half - dy) / cell)), 0, 2);
      f[static_cast<std::size_t>(2 + 3 * row + col)] += 1.0;
      inside += 1.0;
    }
    if (inside > 0.0) {
      for (std::size_t c = 2; c < 11; ++c) f[c] /= inside;
    }
  }
  return out;
}

inline FeatureSequence extract_features(const InkSample& sample, const CorpusBand& band, const FeatureConfig& config) {
  config.check();
  if (sample.points.empty()) throw DataError("sample '" + sample.sample_id + "' has no points");
  const std::size_t width = feature_set_width(config.feature_set);
  const auto T = static_cast<Eigen::Index>(sample.points.size());

  FeatureSequence seq;
  seq.feature_names.assign(full_feature_names().begin(), full_feature_names().begin() + static_cast<std::ptrdiff_t>(width));
  seq.values.resize(T, static_cast<Eigen::Index>(width));

  const auto theta = tangent_angles(sample.points);
  std::vector<std::array<double, 11>> context;
  if (width > 3) {
    double window = config.window;
    if (window == 0.0) window = band.height() > 0.0 ? band.height() : 1.0;
    context = offline_context(sample.points, band, window);
  }
  for (Eigen::Index t = 0; t < T; ++t) {
    const auto i = static_cast<std::size_t>(t);
    seq.values(t, 0) = sample.points[i].x;
    seq.values(t, 1) = sample.points[i].y;
    seq.values(t, 2) = theta[i];
    for (std::size_t c = 3; c < width; ++c) seq.values(t, static_cast<Eigen::Index>(c)) = context[i][c - 3];
  }
  return seq;
}

struct Standardizer {
  Vector mean;
  Vector std;

  static constexpr double kFloor = 1e-8;
};

/// Population statistics over every frame of every sequence.
inline Standardizer fit_standardizer(const std::vector<FeatureSequence>& training) {
  if (training.empty()) throw DataError("cannot fit a standardizer on an empty training set");
  const Eigen::Index D = training.front().dims();
  Vector sum = Vector::Zero(D);
  double frames = 0.0;
  for (const auto& s : training) {
    if (s.dims() != D) throw DataError("feature sequences differ in dimension");
    sum += s.values.colwise().sum().transpose();
    frames += static_cast<double>(s.frames());
  }
  if (frames == 0.0) throw DataError("training sequences hold no frames");
  Standardizer st;
  st.mean = sum / frames;
  Vector sq = Vector::Zero(D);
  for (const auto& s : training) {
    sq += (s.values.rowwise() - st.mean.transpose()).array().square().colwise().sum().matrix().transpose();
  }
  st.std = (sq / frames).array().sqrt().max(Standardizer::kFloor).matrix();
  return st;
}

inline FeatureSequence apply_standardizer(const FeatureSequence& seq, const Standardizer& s) {
  if (seq.dims() != s.mean.size()) {
    throw DataError("feature dimension " + std::to_string(seq.dims()) + " does not match standardizer dimension " +
                    std::to_string(s.mean.size()));
  }
  FeatureSequence out = seq;
  out.values = ((seq.values.rowwise() - s.mean.transpose()).array().rowwise() / s.std.transpose().array()).matrix();
  return out;
}

inline FeatureSequence invert_standardizer(const FeatureSequence& seq, const Standardizer& s) {
  if (seq.dims() != s.mean.size()) throw DataError("feature dimension does not match standardizer");
  FeatureSequence out = seq;
  out.values = ((seq.values.array().rowwise() * s.std.transpose().array()).rowwise() + s.mean.transpose().array()).matrix();
  return out;
}

}  // namespace scribe
