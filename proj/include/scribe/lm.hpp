#pragma once

// Word dictionary and bigram grammar with add-k estimation.

#include "scribe/core.hpp"
#include "scribe/ranking.hpp"
#include "scribe/strokes.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace scribe {

class Dictionary {
 public:
  Dictionary() = default;

  explicit Dictionary(std::vector<LabelSequence> words) : words_(std::move(words)) {
    for (std::size_t i = 0; i < words_.size(); ++i) {
      if (words_[i].empty()) throw DataError("dictionary word " + std::to_string(i) + " is empty");
      if (!index_.emplace(words_[i], static_cast<int>(i)).second) {
        throw DataError("duplicate dictionary word at entry " + std::to_string(i));
      }
    }
  }

  std::size_t size() const { return words_.size(); }
  bool empty() const { return words_.empty(); }
  const LabelSequence& word(std::size_t i) const { return words_.at(i); }
  const std::vector<LabelSequence>& words() const { return words_; }

  std::optional<int> find(const LabelSequence& word) const {
    auto it = index_.find(word);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::vector<LabelSequence> words_;
  std::map<LabelSequence, int> index_;
};

namespace detail {

inline std::vector<std::string> split_ws(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

}  // namespace detail

/// One word per line, symbols separated by whitespace. Blank lines are skipped.
inline Dictionary load_dictionary(const std::filesystem::path& path, const Alphabet& alphabet) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dictionary " + path.string());
  std::vector<LabelSequence> words;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    auto symbols = detail::split_ws(line);
    if (symbols.empty()) continue;
    try {
      words.push_back(alphabet.encode(symbols));
    } catch (const DataError& e) {
      throw DataError(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return Dictionary(std::move(words));
}

inline void write_dictionary(const Dictionary& dict, const Alphabet& alphabet, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write dictionary " + path.string());
  for (const auto& w : dict.words()) out << alphabet.to_string(w) << '\n';
}

/// Corpus lines hold word sequences; words are separated by '|' and each
/// word's symbols by whitespace, e.g. "c01 c02 | c07 c03".
inline std::vector<WordSequence> load_corpus(const std::filesystem::path& path, const Alphabet& alphabet,
                                             const Dictionary& dict) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus " + path.string());
  std::vector<WordSequence> corpus;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (detail::split_ws(line).empty()) continue;
    WordSequence sentence;
    std::istringstream words(line);
    for (std::string chunk; std::getline(words, chunk, '|');) {
      auto symbols = detail::split_ws(chunk);
      auto where = [&] { return path.string() + " line " + std::to_string(line_no) + ": "; };
      if (symbols.empty()) throw DataError(where() + "empty word");
      LabelSequence labels;
      try {
        labels = alphabet.encode(symbols);
      } catch (const DataError& e) {
        throw DataError(where() + e.what());
      }
      auto index = dict.find(labels);
      if (!index) throw DataError(where() + "word '" + chunk + "' is not in the dictionary");
      sentence.push_back(*index);
    }
    corpus.push_back(std::move(sentence));
  }
  return corpus;
}

inline void write_corpus(const std::vector<WordSequence>& corpus, const Dictionary& dict, const Alphabet& alphabet,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write corpus " + path.string());
  for (const auto& sentence : corpus) {
    for (std::size_t i = 0; i < sentence.size(); ++i) {
      if (i) out << " | ";
      out << alphabet.to_string(dict.word(static_cast<std::size_t>(sentence[i])));
    }
    out << '\n';
  }
}

struct BigramModel {
  Vector start_log_prob;       // W
  Matrix transition_log_prob;  // W x W, row = predecessor

  std::size_t size() const { return static_cast<std::size_t>(start_log_prob.size()); }

  static BigramModel uniform(std::size_t words) {
    const double lp = -std::log(static_cast<double>(words));
    const auto w = static_cast<Eigen::Index>(words);
    return {Vector::Constant(w, lp), Matrix::Constant(w, w, lp)};
  }
};

/// Add-k relative frequencies. Rows with no observations (possible only
/// when k = 0) fall back to uniform.
inline BigramModel train_bigram(const std::vector<WordSequence>& corpus, std::size_t vocabulary, double smoothing_k = 1.0) {
  if (vocabulary == 0) throw ConfigError("bigram model needs a non-empty dictionary");
  if (!(smoothing_k >= 0.0)) throw ConfigError("smoothing k must be non-negative");
  std::size_t tokens = 0;
  for (const auto& s : corpus) tokens += s.size();
  if (tokens == 0 && smoothing_k == 0.0) throw ConfigError("empty corpus with k = 0 leaves the model undefined");

  const auto W = static_cast<Eigen::Index>(vocabulary);
  Vector start = Vector::Zero(W);
  Matrix pairs = Matrix::Zero(W, W);
  for (const auto& sentence : corpus) {
    for (std::size_t i = 0; i < sentence.size(); ++i) {
      if (sentence[i] < 0 || sentence[i] >= W) {
        throw DataError("corpus word index " + std::to_string(sentence[i]) + " outside the dictionary");
      }
      if (i == 0) {
        start(sentence[i]) += 1.0;
      } else {
        pairs(sentence[i - 1], sentence[i]) += 1.0;
      }
    }
  }
  auto normalize = [&](Eigen::RowVectorXd& row) {
    const double total = row.sum() + smoothing_k * static_cast<double>(W);
    if (total > 0.0) {
      row = ((row.array() + smoothing_k) / total).log().matrix();
    } else {
      row.setConstant(-std::log(static_cast<double>(W)));
    }
  };
  BigramModel model;
  Eigen::RowVectorXd start_row = start.transpose();
  normalize(start_row);
  model.start_log_prob = start_row.transpose();
  for (Eigen::Index r = 0; r < W; ++r) {
    Eigen::RowVectorXd row = pairs.row(r);
    normalize(row);
    pairs.row(r) = row;
  }
  model.transition_log_prob = std::move(pairs);
  return model;
}

struct SequenceLogProb {
  double log_prob = 0.0;
  bool empty = false;  // the empty product: log_prob is 0
};

inline SequenceLogProb sequence_log_prob(const BigramModel& model, const WordSequence& words) {
  if (words.empty()) return {0.0, true};
  const auto W = static_cast<int>(model.size());
  for (int w : words) {
    if (w < 0 || w >= W) throw DataError("word index " + std::to_string(w) + " outside the bigram model");
  }
  double lp = model.start_log_prob(words.front());
  for (std::size_t i = 1; i < words.size(); ++i) lp += model.transition_log_prob(words[i - 1], words[i]);
  return {lp, false};
}

inline nlohmann::json bigram_to_json(const BigramModel& model) {
  nlohmann::json j;
  j["format"] = "scribe-bigram/1";
  j["start_log_prob"] = std::vector<double>(model.start_log_prob.data(),
                                            model.start_log_prob.data() + model.start_log_prob.size());
  auto rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < model.transition_log_prob.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(model.transition_log_prob.cols()));
    for (Eigen::Index c = 0; c < model.transition_log_prob.cols(); ++c) row[static_cast<std::size_t>(c)] = model.transition_log_prob(r, c);
    rows.push_back(row);
  }
  j["transition_log_prob"] = std::move(rows);
  return j;
}

inline BigramModel bigram_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "scribe-bigram/1") throw DataError("not a scribe-bigram/1 document");
  // JSON has no -inf; unseen pairs under k = 0 are written as null.
  auto number = [](const nlohmann::json& v) { return v.is_null() ? kLogZero : v.get<double>(); };
  const auto& start = j.at("start_log_prob");
  const auto W = static_cast<Eigen::Index>(start.size());
  BigramModel m;
  m.start_log_prob.resize(W);
  for (Eigen::Index i = 0; i < W; ++i) m.start_log_prob(i) = number(start[static_cast<std::size_t>(i)]);
  const auto& rows = j.at("transition_log_prob");
  if (static_cast<Eigen::Index>(rows.size()) != W) throw DataError("bigram transition table is not W x W");
  m.transition_log_prob.resize(W, W);
  for (Eigen::Index r = 0; r < W; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    if (static_cast<Eigen::Index>(row.size()) != W) throw DataError("bigram transition table is not W x W");
    for (Eigen::Index c = 0; c < W; ++c) m.transition_log_prob(r, c) = number(row[static_cast<std::size_t>(c)]);
  }
  return m;
}

}  // namespace scribe
