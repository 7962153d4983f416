#pragma once

// Synthetic experiment data: a random dictionary, styled word instances and
// a word-sequence corpus for the bigram model.

#include "scribe/lm.hpp"
#include "scribe/strokes.hpp"

#include <cstdint>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>
#include <vector>

namespace scribe {

struct SynthConfig {
  std::size_t dict_size = 10;
  std::size_t samples_per_word = 60;
  std::size_t min_word_length = 3;
  std::size_t max_word_length = 5;
  double max_slant = 0.3;  // instance slant drawn from U(-max, max)
  double min_scale = 0.8;
  double max_scale = 1.25;
  double jitter_std = 0.005;
  int points_per_glyph = 24;
  std::size_t corpus_sentences = 200;
  std::size_t max_sentence_words = 3;

  void check(const Alphabet& alphabet) const {
    if (dict_size < 1) throw ConfigError("synth.dict_size must be at least 1");
    if (samples_per_word < 1) throw ConfigError("synth.samples_per_word must be at least 1");
    if (min_word_length < 1 || max_word_length < min_word_length) {
      throw ConfigError("synth word lengths must satisfy 1 <= min_word_length <= max_word_length");
    }
    if (alphabet.size() == 0) throw ConfigError("synth needs a non-empty alphabet");
    double distinct = 0.0;
    for (std::size_t len = min_word_length; len <= max_word_length && distinct < 1e18; ++len) {
      distinct += std::pow(static_cast<double>(alphabet.size()), static_cast<double>(len));
    }
    if (distinct < static_cast<double>(dict_size)) throw ConfigError("synth.dict_size exceeds the number of distinct words");
    if (!(max_slant >= 0.0 && max_slant < 1.2)) throw ConfigError("synth.max_slant must lie in [0, 1.2)");
    if (!(min_scale > 0.0 && max_scale >= min_scale)) throw ConfigError("synth scale range invalid");
    if (!(jitter_std >= 0.0)) throw ConfigError("synth.jitter_std must be non-negative");
    if (points_per_glyph < 2) throw ConfigError("synth.points_per_glyph must be at least 2");
    if (max_sentence_words < 1) throw ConfigError("synth.max_sentence_words must be at least 1");
  }
};

struct SynthData {
  Dictionary dictionary;
  std::vector<InkSample> samples;  // grouped by word, samples_per_word each
  std::vector<WordSequence> corpus;
};

inline SynthData synthesize(const SynthConfig& config, const Alphabet& alphabet, std::uint64_t seed) {
  config.check(alphabet);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> length(config.min_word_length, config.max_word_length);
  std::uniform_int_distribution<Label> symbol(0, static_cast<Label>(alphabet.size()) - 1);

  std::vector<LabelSequence> words;
  std::set<LabelSequence> seen;
  while (words.size() < config.dict_size) {
    LabelSequence w(length(rng));
    for (auto& l : w) l = symbol(rng);
    if (seen.insert(w).second) words.push_back(std::move(w));
  }

  SynthData data;
  data.dictionary = Dictionary(words);
  std::uniform_real_distribution<double> slant(-config.max_slant, config.max_slant);
  std::uniform_real_distribution<double> scale(config.min_scale, config.max_scale);
  for (std::size_t w = 0; w < words.size(); ++w) {
    for (std::size_t i = 0; i < config.samples_per_word; ++i) {
      SynthStyle style;
      style.slant_angle = slant(rng);
      style.scale = scale(rng);
      style.jitter_std = config.jitter_std * style.scale;
      style.points_per_glyph = config.points_per_glyph;
      style.rng_seed = rng();
      InkSample s = synth_word(words[w], style, alphabet);
      std::ostringstream id;
      id << 'w' << std::setw(3) << std::setfill('0') << w << "-" << std::setw(4) << std::setfill('0') << i;
      s.sample_id = id.str();
      data.samples.push_back(std::move(s));
    }
  }

  std::uniform_int_distribution<std::size_t> sentence_length(1, config.max_sentence_words);
  std::uniform_int_distribution<int> word(0, static_cast<int>(words.size()) - 1);
  for (std::size_t s = 0; s < config.corpus_sentences; ++s) {
    WordSequence sentence(sentence_length(rng));
    for (auto& w : sentence) w = word(rng);
    data.corpus.push_back(std::move(sentence));
  }
  return data;
}

}  // namespace scribe
