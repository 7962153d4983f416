#pragma once

// Online ink preprocessing: duplicate erasure, per-stroke Gaussian
// smoothing, slant estimation/correction and corpus-band size normalization.

#include "scribe/strokes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace scribe {

struct PreprocessConfig {
  double delta = 2.0;  // Gaussian sigma in sample indices
  double target_height = 1.0;
  bool slant_correction_enabled = true;

  void check() const {
    if (!(delta > 0.0)) throw ConfigError("preprocess.delta must be positive");
    if (!(target_height > 0.0)) throw ConfigError("preprocess.target_height must be positive");
  }
};

/// Horizontal band holding the main body of the writing (y grows upward).
struct CorpusBand {
  double baseline_y = 0.0;
  double corpus_top_y = 0.0;

  double height() const { return corpus_top_y - baseline_y; }
};

/// Collapses runs of identical consecutive positions within a stroke to their first point.
inline PointList remove_duplicates(const PointList& points) {
  PointList out;
  out.reserve(points.size());
  for (const auto& p : points) {
    if (!out.empty()) {
      const auto& last = out.back();
      if (last.stroke_index == p.stroke_index && last.x == p.x && last.y == p.y) continue;
    }
    out.push_back(p);
  }
  return out;
}

/// Normalized Gaussian weights exp(-m^2 / (2 delta^2)) for m in [-ceil(3 delta), ceil(3 delta)].
inline std::vector<double> gaussian_kernel(double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw ConfigError("Gaussian delta must be positive");
  const int radius = static_cast<int>(std::ceil(3.0 * delta));
  std::vector<double> w(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int m = -radius; m <= radius; ++m) {
    w[static_cast<std::size_t>(m + radius)] = std::exp(-(m * m) / (2.0 * delta * delta));
    sum += w[static_cast<std::size_t>(m + radius)];
  }
  for (auto& v : w) v /= sum;
  return w;
}

/// Smooths x and y independently within each stroke. Near stroke ends the
/// kernel is truncated and renormalized, so constants are preserved.
inline PointList gaussian_smooth(const PointList& points, double delta) {
  const std::vector<double> kernel = gaussian_kernel(delta);
  const int radius = static_cast<int>(kernel.size() / 2);
  PointList out = points;
  for (auto [begin, end] : stroke_ranges(points)) {
    const auto b = static_cast<std::ptrdiff_t>(begin);
    const auto e = static_cast<std::ptrdiff_t>(end);
    for (std::ptrdiff_t l = b; l < e; ++l) {
      const std::ptrdiff_t lo = std::max(b, l - radius);
      const std::ptrdiff_t hi = std::min(e - 1, l + radius);
      // Accumulate offsets from the centre point: exact for constants and
      // for the odd part of an affine run.
      double wsum = 0.0, dx = 0.0, dy = 0.0;
      for (std::ptrdiff_t k = lo; k <= hi; ++k) {
        const double w = kernel[static_cast<std::size_t>(k - l + radius)];
        wsum += w;
        dx += w * (points[static_cast<std::size_t>(k)].x - points[static_cast<std::size_t>(l)].x);
        dy += w * (points[static_cast<std::size_t>(k)].y - points[static_cast<std::size_t>(l)].y);
      }
      out[static_cast<std::size_t>(l)].x = points[static_cast<std::size_t>(l)].x + dx / wsum;
      out[static_cast<std::size_t>(l)].y = points[static_cast<std::size_t>(l)].y + dy / wsum;
    }
  }
  return out;
}

struct SlantEstimate {
  double angle = 0.0;        // radians; positive leans right (x grows with y)
  bool degenerate = false;   // no segment fell inside the acceptance cone
};

inline constexpr double kSlantCone = 50.0 * std::numbers::pi / 180.0;

/// Length-weighted mean deviation from vertical over segments within
/// kSlantCone of vertical.
inline SlantEstimate estimate_slant(const InkSample& sample) {
  double weighted = 0.0, total = 0.0;
  for (auto [begin, end] : stroke_ranges(sample.points)) {
    for (std::size_t i = begin + 1; i < end; ++i) {
      double dx = sample.points[i].x - sample.points[i - 1].x;
      double dy = sample.points[i].y - sample.points[i - 1].y;
      if (dy < 0.0) {
        dx = -dx;
        dy = -dy;
      }
      const double len = std::hypot(dx, dy);
      if (!(len > 0.0) || !std::isfinite(len)) continue;
      const double deviation = std::atan2(dx, dy);
      if (std::abs(deviation) < kSlantCone) {
        weighted += len * deviation;
        total += len;
      }
    }
  }
  if (!(total > 0.0)) return {0.0, true};
  return {weighted / total, false};
}

/// Shear about y = baseline_y: x' = x - (y - baseline_y) tan(angle).
inline InkSample correct_slant(const InkSample& sample, double angle, double baseline_y) {
  if (!(std::abs(angle) < std::numbers::pi / 2)) throw ConfigError("slant angle must lie in (-pi/2, pi/2)");
  const double shear = std::tan(angle);
  InkSample out = sample;
  for (auto& p : out.points) p.x -= (p.y - baseline_y) * shear;
  return out;
}

inline CorpusBand find_corpus_band(const InkSample& sample);

inline InkSample correct_slant(const InkSample& sample, double angle) {
  return correct_slant(sample, angle, find_corpus_band(sample).baseline_y);
}

inline constexpr int kBandBins = 32;

/// Half-peak run of a 32-bin y histogram, taken around the (first) peak bin.
/// Counts pass through a [1 2 1]/4 filter first; sparse ink otherwise splits
/// the body into single-bin runs.
inline CorpusBand find_corpus_band(const InkSample& sample) {
  if (sample.points.empty()) throw DataError("corpus band of empty ink");
  double lo = sample.points.front().y, hi = lo;
  for (const auto& p : sample.points) {
    lo = std::min(lo, p.y);
    hi = std::max(hi, p.y);
  }
  const double height = hi - lo;
  if (!(height > 0.0)) return {lo, lo};

  const double bin = height / kBandBins;
  std::array<double, kBandBins> counts{};
  for (const auto& p : sample.points) {
    const int b = std::clamp(static_cast<int>((p.y - lo) / bin), 0, kBandBins - 1);
    counts[static_cast<std::size_t>(b)] += 1.0;
  }
  std::array<double, kBandBins> density{};
  for (int b = 0; b < kBandBins; ++b) {
    double sum = 2.0 * counts[static_cast<std::size_t>(b)], weight = 2.0;
    if (b > 0) sum += counts[static_cast<std::size_t>(b - 1)], weight += 1.0;
    if (b + 1 < kBandBins) sum += counts[static_cast<std::size_t>(b + 1)], weight += 1.0;
    density[static_cast<std::size_t>(b)] = sum / weight;
  }
  const auto peak_it = std::max_element(density.begin(), density.end());
  const int peak = static_cast<int>(peak_it - density.begin());
  const double half = *peak_it / 2.0;
  int first = peak, last = peak;
  while (first > 0 && density[static_cast<std::size_t>(first - 1)] > half) --first;
  while (last + 1 < kBandBins && density[static_cast<std::size_t>(last + 1)] > half) ++last;
  return {lo + first * bin, last + 1 == kBandBins ? hi : lo + (last + 1) * bin};
}

/// Uniform scale making the band `target_height` tall, baseline moved to y = 0.
/// A zero-thickness band falls back to the total ink height.
inline InkSample size_normalize(const InkSample& sample, const CorpusBand& band, double target_height) {
  if (!(target_height > 0.0)) throw ConfigError("target_height must be positive");
  double reference = band.height();
  if (!(reference > 0.0)) {
    double lo = 0.0, hi = 0.0;
    if (!sample.points.empty()) {
      lo = hi = sample.points.front().y;
      for (const auto& p : sample.points) {
        lo = std::min(lo, p.y);
        hi = std::max(hi, p.y);
      }
    }
    reference = hi - lo;
  }
  const double scale = reference > 0.0 ? target_height / reference : 1.0;
  InkSample out = sample;
  for (auto& p : out.points) {
    p.x *= scale;
    p.y = (p.y - band.baseline_y) * scale;
  }
  return out;
}

struct PreprocessResult {
  InkSample sample;
  CorpusBand band;  // in normalized coordinates
  SlantEstimate slant;
};

/// dedup -> smooth -> slant -> normalize.
inline PreprocessResult preprocess(const InkSample& raw, const PreprocessConfig& config) {
  config.check();
  if (raw.points.empty()) throw DataError("sample '" + raw.sample_id + "' has no ink");
  PreprocessResult r;
  r.sample = raw;
  r.sample.points = gaussian_smooth(remove_duplicates(raw.points), config.delta);
  if (config.slant_correction_enabled) {
    r.slant = estimate_slant(r.sample);
    if (!r.slant.degenerate) r.sample = correct_slant(r.sample, r.slant.angle);
  }
  const CorpusBand band = find_corpus_band(r.sample);
  const double reference = band.height();
  r.sample = size_normalize(r.sample, band, config.target_height);
  r.band = reference > 0.0 ? CorpusBand{0.0, config.target_height} : find_corpus_band(r.sample);
  return r;
}

}  // namespace scribe
