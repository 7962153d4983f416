#pragma once

// Ink data model, the line-delimited JSON ink format, and the seeded
// synthetic cursive-word generator.

#include "scribe/core.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace scribe {

struct RawPoint {
  double x = 0.0;
  double y = 0.0;
  int stroke_index = 0;

  friend bool operator==(const RawPoint&, const RawPoint&) = default;
};

using PointList = std::vector<RawPoint>;

/// Half-open [begin, end) index ranges of consecutive points sharing a stroke_index.
inline std::vector<std::pair<std::size_t, std::size_t>> stroke_ranges(const PointList& points) {
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= points.size(); ++i) {
    if (i == points.size() || points[i].stroke_index != points[begin].stroke_index) {
      if (i > begin) ranges.emplace_back(begin, i);
      begin = i;
    }
  }
  return ranges;
}

/// The task symbols. The blank is not a symbol; its label is size().
class Alphabet {
 public:
  static constexpr std::size_t kDefaultSize = 42;

  Alphabet() = default;

  explicit Alphabet(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
      if (symbols_[i].empty()) throw ConfigError("alphabet symbol " + std::to_string(i) + " is empty");
      if (!index_.emplace(symbols_[i], static_cast<Label>(i)).second) {
        throw ConfigError("duplicate alphabet symbol '" + symbols_[i] + "'");
      }
    }
  }

  /// Synthetic alphabet "c00", "c01", ... of the given size.
  static Alphabet make_default(std::size_t size = kDefaultSize) {
    std::vector<std::string> symbols;
    symbols.reserve(size);
    for (std::size_t i = 0; i < size; ++i) {
      std::ostringstream name;
      name << 'c' << std::setw(2) << std::setfill('0') << i;
      symbols.push_back(name.str());
    }
    return Alphabet(std::move(symbols));
  }

  std::size_t size() const { return symbols_.size(); }
  Label blank() const { return static_cast<Label>(symbols_.size()); }
  const std::vector<std::string>& symbols() const { return symbols_; }

  const std::string& symbol(Label label) const {
    if (label < 0 || static_cast<std::size_t>(label) >= symbols_.size()) {
      throw DataError("label " + std::to_string(label) + " outside alphabet of size " +
                      std::to_string(symbols_.size()));
    }
    return symbols_[static_cast<std::size_t>(label)];
  }

  std::optional<Label> find(const std::string& symbol) const {
    auto it = index_.find(symbol);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  Label encode(const std::string& symbol) const {
    if (auto label = find(symbol)) return *label;
    throw DataError("unknown symbol '" + symbol + "'");
  }

  LabelSequence encode(const std::vector<std::string>& symbols) const {
    LabelSequence labels;
    labels.reserve(symbols.size());
    for (const auto& s : symbols) labels.push_back(encode(s));
    return labels;
  }

  std::string to_string(const LabelSequence& labels, const std::string& sep = " ") const {
    std::string out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (i) out += sep;
      out += symbol(labels[i]);
    }
    return out;
  }

  friend bool operator==(const Alphabet& a, const Alphabet& b) { return a.symbols_ == b.symbols_; }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, Label> index_;
};

struct InkSample {
  PointList points;
  std::optional<LabelSequence> transcription;
  std::string sample_id;

  friend bool operator==(const InkSample&, const InkSample&) = default;
};

/// Throws DataError when the sample breaks the InkSample invariants.
inline void validate(const InkSample& sample, const Alphabet& alphabet) {
  int previous = 0;
  for (std::size_t i = 0; i < sample.points.size(); ++i) {
    const auto& p = sample.points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw DataError("sample '" + sample.sample_id + "': non-finite coordinate at point " + std::to_string(i));
    }
    const int next = i == 0 ? 0 : previous + 1;
    if (p.stroke_index != previous && p.stroke_index != next) {
      throw DataError("sample '" + sample.sample_id + "': stroke indices not contiguous from 0");
    }
    previous = p.stroke_index;
  }
  if (sample.transcription) {
    if (!sample.transcription->empty() && sample.points.empty()) {
      throw DataError("sample '" + sample.sample_id + "': transcription without ink");
    }
    for (Label l : *sample.transcription) (void)alphabet.symbol(l);
  }
}

// ---------------------------------------------------------------------------
// Ink file: line-delimited JSON, header first.

inline constexpr const char* kInkFormatTag = "scribe-ink/1";

struct InkFile {
  Alphabet alphabet;
  std::vector<InkSample> samples;
};

namespace detail {

inline nlohmann::ordered_json sample_to_json(const InkSample& sample, const Alphabet& alphabet) {
  nlohmann::ordered_json record;
  record["id"] = sample.sample_id;
  if (sample.transcription) {
    auto symbols = nlohmann::ordered_json::array();
    for (Label l : *sample.transcription) symbols.push_back(alphabet.symbol(l));
    record["transcription"] = std::move(symbols);
  }
  auto strokes = nlohmann::ordered_json::array();
  for (auto [begin, end] : stroke_ranges(sample.points)) {
    auto stroke = nlohmann::ordered_json::array();
    for (std::size_t i = begin; i < end; ++i) {
      stroke.push_back({sample.points[i].x, sample.points[i].y});
    }
    strokes.push_back(std::move(stroke));
  }
  record["strokes"] = std::move(strokes);
  return record;
}

inline InkSample sample_from_json(const nlohmann::json& record, const Alphabet& alphabet) {
  if (!record.is_object()) throw DataError("record is not a JSON object");
  InkSample sample;
  if (!record.contains("id") || !record["id"].is_string()) throw DataError("missing string field 'id'");
  sample.sample_id = record["id"].get<std::string>();
  if (record.contains("transcription")) {
    const auto& t = record["transcription"];
    if (!t.is_array()) throw DataError("'transcription' is not an array");
    LabelSequence labels;
    for (const auto& s : t) {
      if (!s.is_string()) throw DataError("transcription entries must be strings");
      auto label = alphabet.find(s.get<std::string>());
      if (!label) throw DataError("unknown symbol '" + s.get<std::string>() + "' in transcription");
      labels.push_back(*label);
    }
    sample.transcription = std::move(labels);
  }
  if (!record.contains("strokes") || !record["strokes"].is_array()) {
    throw DataError("missing array field 'strokes'");
  }
  int stroke_index = 0;
  for (const auto& stroke : record["strokes"]) {
    if (!stroke.is_array() || stroke.empty()) throw DataError("strokes must be non-empty arrays");
    for (const auto& xy : stroke) {
      if (!xy.is_array() || xy.size() != 2 || !xy[0].is_number() || !xy[1].is_number()) {
        throw DataError("points must be [x, y] number pairs");
      }
      sample.points.push_back({xy[0].get<double>(), xy[1].get<double>(), stroke_index});
    }
    ++stroke_index;
  }
  validate(sample, alphabet);
  return sample;
}

}  // namespace detail

/// Serializes the whole file to a string; identical input gives identical bytes.
inline std::string format_ink(const std::vector<InkSample>& samples, const Alphabet& alphabet) {
  nlohmann::ordered_json header;
  header["format"] = kInkFormatTag;
  header["alphabet"] = alphabet.symbols();
  std::string out = header.dump() + "\n";
  for (const auto& sample : samples) {
    out += detail::sample_to_json(sample, alphabet).dump();
    out += '\n';
  }
  return out;
}

inline InkFile parse_ink(std::istream& in) {
  InkFile file;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto where = [&] { return "line " + std::to_string(line_no) + ": "; };
    nlohmann::json value;
    try {
      value = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where() + "malformed JSON (" + e.what() + ")");
    }
    try {
      if (!have_header) {
        if (!value.is_object() || value.value("format", "") != kInkFormatTag) {
          throw DataError(std::string("expected header with format '") + kInkFormatTag + "'");
        }
        if (!value.contains("alphabet") || !value["alphabet"].is_array()) {
          throw DataError("header lacks an 'alphabet' array");
        }
        file.alphabet = Alphabet(value["alphabet"].get<std::vector<std::string>>());
        have_header = true;
      } else {
        file.samples.push_back(detail::sample_from_json(value, file.alphabet));
      }
    } catch (const DataError& e) {
      throw DataError(where() + e.what());
    } catch (const ConfigError& e) {
      throw DataError(where() + e.what());
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where() + e.what());
    }
  }
  return file;
}

/// An empty file yields an empty sample list and an empty alphabet.
inline InkFile parse_ink_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open ink file " + path.string());
  return parse_ink(in);
}

inline void write_ink_file(const std::vector<InkSample>& samples, const Alphabet& alphabet,
                           const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write ink file " + path.string());
  out << format_ink(samples, alphabet);
  if (!out) throw DataError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Synthetic cursive words.

struct SynthStyle {
  double slant_angle = 0.0;  // radians, shear x' = x + y tan(angle)
  double scale = 1.0;
  double jitter_std = 0.0;
  int points_per_glyph = 20;
  std::uint64_t rng_seed = 0;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Pen path of one symbol in glyph-local units. Starts at (0, 0) on the
/// baseline, travels leftward and ends on the baseline at (-width, 0).
struct GlyphTemplate {
  std::vector<Point2> path;
  bool joins_next = true;  // false for symbols that never connect to their left neighbour
  double width() const { return -path.back().x; }
};

namespace synth {

inline constexpr double kBodyHeight = 0.5;
inline constexpr double kAscenderHeight = 1.0;
inline constexpr double kDescenderDepth = 0.4;
inline constexpr double kToothGap = 0.1;
inline constexpr double kLoopWidth = 0.08;
inline constexpr double kConnectorGap = 0.12;
inline constexpr double kPenLiftGap = 0.3;
inline constexpr double kConnectorRise = 0.15;
/// Interior points emitted on each connecting stroke between two glyphs.
inline constexpr int kConnectorPoints = 2;

}  // namespace synth

/// Each symbol index maps to a distinct combination of tooth count, which
/// tooth rises to ascender height, descender placement and tooth form.
/// Teeth are narrow inverted V shapes whose two legs lean symmetrically, so
/// an unsheared glyph has no net slant and no long horizontal runs.
inline GlyphTemplate glyph_template(Label symbol) {
  using namespace synth;
  if (symbol < 0) throw DataError("negative glyph label");
  const int teeth = 1 + symbol % 3;
  const int tall = (symbol / 3) % 3;        // 0 none, 1 first tooth, 2 last tooth
  const int descender = (symbol / 9) % 3;   // 0 none, 1 leading, 2 trailing
  const bool looped = (symbol / 27) % 2 == 1;
  const double stretch = 1.0 + 0.25 * (symbol / 54);

  GlyphTemplate g;
  g.joins_next = symbol % 7 != 6;
  double x = 0.0;
  g.path.push_back({x, 0.0});
  auto tooth = [&](double height) {
    x -= kToothGap / 2;
    g.path.push_back({x, height});
    if (looped) {
      x -= kLoopWidth;
      g.path.push_back({x, height});
    }
    x -= kToothGap / 2;
    g.path.push_back({x, 0.0});
  };
  if (descender == 1) tooth(-kDescenderDepth);
  for (int i = 0; i < teeth; ++i) {
    const bool is_tall = (tall == 1 && i == 0) || (tall == 2 && i == teeth - 1);
    tooth((is_tall ? kAscenderHeight : kBodyHeight) * stretch);
  }
  if (descender == 2) tooth(-kDescenderDepth);
  return g;
}

/// `count` points spaced uniformly by arc length along `path`, endpoints included.
inline std::vector<Point2> resample_path(const std::vector<Point2>& path, int count) {
  std::vector<double> cumulative(path.size(), 0.0);
  for (std::size_t i = 1; i < path.size(); ++i) {
    cumulative[i] = cumulative[i - 1] + std::hypot(path[i].x - path[i - 1].x, path[i].y - path[i - 1].y);
  }
  const double total = cumulative.back();
  std::vector<Point2> out;
  out.reserve(static_cast<std::size_t>(count));
  std::size_t seg = 1;
  for (int k = 0; k < count; ++k) {
    const double s = count == 1 ? 0.0 : total * k / (count - 1);
    while (seg + 1 < path.size() && cumulative[seg] < s) ++seg;
    const double len = cumulative[seg] - cumulative[seg - 1];
    const double u = len > 0.0 ? std::clamp((s - cumulative[seg - 1]) / len, 0.0, 1.0) : 0.0;
    out.push_back({path[seg - 1].x + u * (path[seg].x - path[seg - 1].x),
                   path[seg - 1].y + u * (path[seg].y - path[seg - 1].y)});
  }
  return out;
}

/// Renders `word` right to left, starting at x = 0 on the baseline y = 0.
/// A pure function of its arguments.
inline InkSample synth_word(const LabelSequence& word, const SynthStyle& style, const Alphabet& alphabet) {
  if (word.empty()) throw DataError("cannot synthesize an empty word");
  if (style.points_per_glyph < 2) throw ConfigError("points_per_glyph must be at least 2");
  if (!(style.scale > 0.0)) throw ConfigError("synth scale must be positive");
  if (!(style.jitter_std >= 0.0)) throw ConfigError("synth jitter_std must be non-negative");
  for (Label l : word) (void)alphabet.symbol(l);

  InkSample sample;
  sample.transcription = word;
  double cursor = 0.0;
  int stroke = 0;
  for (std::size_t j = 0; j < word.size(); ++j) {
    const GlyphTemplate glyph = glyph_template(word[j]);
    for (const auto& p : resample_path(glyph.path, style.points_per_glyph)) {
      sample.points.push_back({cursor + p.x, p.y, stroke});
    }
    cursor -= glyph.width();
    if (j + 1 == word.size()) break;
    if (glyph.joins_next) {
      for (int k = 1; k <= synth::kConnectorPoints; ++k) {
        const double u = static_cast<double>(k) / (synth::kConnectorPoints + 1);
        sample.points.push_back({cursor - u * synth::kConnectorGap,
                                 synth::kConnectorRise * std::sin(std::numbers::pi * u), stroke});
      }
      cursor -= synth::kConnectorGap;
    } else {
      cursor -= synth::kPenLiftGap;
      ++stroke;
    }
  }

  const double shear = std::tan(style.slant_angle);
  std::mt19937_64 rng(style.rng_seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (auto& p : sample.points) {
    p.x = style.scale * (p.x + p.y * shear);
    p.y = style.scale * p.y;
    if (style.jitter_std > 0.0) {
      p.x += style.jitter_std * noise(rng);
      p.y += style.jitter_std * noise(rng);
    }
  }
  return sample;
}

}  // namespace scribe
