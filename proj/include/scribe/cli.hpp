#pragma once

// Experiment configuration and the subcommand bodies behind tools/scribe.

#include "scribe/synth.hpp"
#include "scribe/train.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>

namespace scribe {

struct DecodeConfig {
  std::size_t k = 10;
  double lm_weight = 1.0;
  double smoothing_k = 1.0;
};

struct ExperimentConfig {
  std::size_t alphabet_size = Alphabet::kDefaultSize;
  std::vector<std::string> alphabet_symbols;  // overrides alphabet_size when non-empty
  std::string ink_path;         // default <output_dir>/ink.jsonl
  std::string dictionary_path;  // default <output_dir>/dictionary.txt
  std::string corpus_path;      // default <output_dir>/corpus.txt
  SynthConfig synth;
  PreprocessConfig preprocess;
  FeatureConfig features;
  std::size_t hidden = 50;
  TrainConfig train;
  std::array<double, 3> split{0.75, 0.15, 0.10};
  DecodeConfig decode;
  std::string output_dir = "scribe-out";
  std::uint64_t seed = 1;

  Alphabet alphabet() const {
    return alphabet_symbols.empty() ? Alphabet::make_default(alphabet_size) : Alphabet(alphabet_symbols);
  }
  std::filesystem::path out(const std::string& name) const { return std::filesystem::path(output_dir) / name; }
  std::filesystem::path ink() const { return ink_path.empty() ? out("ink.jsonl") : std::filesystem::path(ink_path); }
  std::filesystem::path dictionary() const {
    return dictionary_path.empty() ? out("dictionary.txt") : std::filesystem::path(dictionary_path);
  }
  std::filesystem::path corpus() const { return corpus_path.empty() ? out("corpus.txt") : std::filesystem::path(corpus_path); }

  void check() const {
    if (alphabet_symbols.empty() && alphabet_size == 0) throw ConfigError("alphabet_size must be positive");
    alphabet();
    preprocess.check();
    features.check();
    if (hidden < 1) throw ConfigError("network.hidden must be at least 1");
    train.check();
    if (decode.k < 1) throw ConfigError("decode.k must be positive");
    if (!(decode.smoothing_k >= 0.0)) throw ConfigError("decode.smoothing_k must be non-negative");
    if (!std::isfinite(decode.lm_weight)) throw ConfigError("decode.lm_weight must be finite");
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  }
};

namespace detail {

/// Reads j[key] into `field` if present; type errors name the field.
template <typename T>
void read_field(const nlohmann::json& j, const std::string& section, const std::string& key, T& field) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config field '" + (section.empty() ? key : section + "." + key) + "': " + e.what());
  }
}

inline void reject_unknown(const nlohmann::json& j, const std::string& section, const std::set<std::string>& known) {
  if (!j.is_object()) throw ConfigError("config section '" + section + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown config field '" + (section.empty() ? key : section + "." + key) + "'");
  }
}

}  // namespace detail

inline nlohmann::ordered_json config_to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["alphabet_size"] = c.alphabet_size;
  j["alphabet_symbols"] = c.alphabet_symbols;
  j["ink_path"] = c.ink_path;
  j["dictionary_path"] = c.dictionary_path;
  j["corpus_path"] = c.corpus_path;
  j["synth"] = {{"dict_size", c.synth.dict_size},
                {"samples_per_word", c.synth.samples_per_word},
                {"min_word_length", c.synth.min_word_length},
                {"max_word_length", c.synth.max_word_length},
                {"max_slant", c.synth.max_slant},
                {"min_scale", c.synth.min_scale},
                {"max_scale", c.synth.max_scale},
                {"jitter_std", c.synth.jitter_std},
                {"points_per_glyph", c.synth.points_per_glyph},
                {"corpus_sentences", c.synth.corpus_sentences},
                {"max_sentence_words", c.synth.max_sentence_words}};
  j["preprocess"] = {{"delta", c.preprocess.delta},
                     {"target_height", c.preprocess.target_height},
                     {"slant_correction_enabled", c.preprocess.slant_correction_enabled}};
  j["features"] = {{"feature_set", c.features.feature_set}, {"window", c.features.window}};
  j["network"] = {{"hidden", c.hidden}};
  j["train"] = {{"learning_rate", c.train.learning_rate},
                {"momentum", c.train.momentum},
                {"input_noise_std", c.train.input_noise_std},
                {"init_range", c.train.init_range},
                {"early_stop_patience", c.train.early_stop_patience},
                {"max_epochs", c.train.max_epochs}};
  j["split"] = c.split;
  j["decode"] = {{"k", c.decode.k}, {"lm_weight", c.decode.lm_weight}, {"smoothing_k", c.decode.smoothing_k}};
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  using detail::read_field;
  ExperimentConfig c;
  detail::reject_unknown(j, "", {"alphabet_size", "alphabet_symbols", "ink_path", "dictionary_path", "corpus_path",
                                 "synth", "preprocess", "features", "network", "train", "split", "decode",
                                 "output_dir", "seed"});
  read_field(j, "", "alphabet_size", c.alphabet_size);
  read_field(j, "", "alphabet_symbols", c.alphabet_symbols);
  read_field(j, "", "ink_path", c.ink_path);
  read_field(j, "", "dictionary_path", c.dictionary_path);
  read_field(j, "", "corpus_path", c.corpus_path);
  read_field(j, "", "output_dir", c.output_dir);
  read_field(j, "", "seed", c.seed);
  read_field(j, "", "split", c.split);
  if (j.contains("synth")) {
    const auto& s = j["synth"];
    detail::reject_unknown(s, "synth", {"dict_size", "samples_per_word", "min_word_length", "max_word_length",
                                        "max_slant", "min_scale", "max_scale", "jitter_std", "points_per_glyph",
                                        "corpus_sentences", "max_sentence_words"});
    read_field(s, "synth", "dict_size", c.synth.dict_size);
    read_field(s, "synth", "samples_per_word", c.synth.samples_per_word);
    read_field(s, "synth", "min_word_length", c.synth.min_word_length);
    read_field(s, "synth", "max_word_length", c.synth.max_word_length);
    read_field(s, "synth", "max_slant", c.synth.max_slant);
    read_field(s, "synth", "min_scale", c.synth.min_scale);
    read_field(s, "synth", "max_scale", c.synth.max_scale);
    read_field(s, "synth", "jitter_std", c.synth.jitter_std);
    read_field(s, "synth", "points_per_glyph", c.synth.points_per_glyph);
    read_field(s, "synth", "corpus_sentences", c.synth.corpus_sentences);
    read_field(s, "synth", "max_sentence_words", c.synth.max_sentence_words);
  }
  if (j.contains("preprocess")) {
    const auto& s = j["preprocess"];
    detail::reject_unknown(s, "preprocess", {"delta", "target_height", "slant_correction_enabled"});
    read_field(s, "preprocess", "delta", c.preprocess.delta);
    read_field(s, "preprocess", "target_height", c.preprocess.target_height);
    read_field(s, "preprocess", "slant_correction_enabled", c.preprocess.slant_correction_enabled);
  }
  if (j.contains("features")) {
    const auto& s = j["features"];
    detail::reject_unknown(s, "features", {"feature_set", "window"});
    read_field(s, "features", "feature_set", c.features.feature_set);
    read_field(s, "features", "window", c.features.window);
  }
  if (j.contains("network")) {
    const auto& s = j["network"];
    detail::reject_unknown(s, "network", {"hidden"});
    read_field(s, "network", "hidden", c.hidden);
  }
  if (j.contains("train")) {
    const auto& s = j["train"];
    detail::reject_unknown(s, "train", {"learning_rate", "momentum", "input_noise_std", "init_range",
                                        "early_stop_patience", "max_epochs"});
    read_field(s, "train", "learning_rate", c.train.learning_rate);
    read_field(s, "train", "momentum", c.train.momentum);
    read_field(s, "train", "input_noise_std", c.train.input_noise_std);
    read_field(s, "train", "init_range", c.train.init_range);
    read_field(s, "train", "early_stop_patience", c.train.early_stop_patience);
    read_field(s, "train", "max_epochs", c.train.max_epochs);
  }
  if (j.contains("decode")) {
    const auto& s = j["decode"];
    detail::reject_unknown(s, "decode", {"k", "lm_weight", "smoothing_k"});
    read_field(s, "decode", "k", c.decode.k);
    read_field(s, "decode", "lm_weight", c.decode.lm_weight);
    read_field(s, "decode", "smoothing_k", c.decode.smoothing_k);
  }
  c.train.seed = c.seed;
  c.check();
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

inline void prepare_output_dir(const ExperimentConfig& c) {
  std::error_code ec;
  std::filesystem::create_directories(c.output_dir, ec);
  if (ec || !std::filesystem::is_directory(c.output_dir)) {
    throw DataError("cannot create output directory " + c.output_dir);
  }
  write_text(c.out("config.json"), config_to_json(c).dump(2) + "\n");
}

namespace detail {

inline void require_file(const std::string& field, const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw ConfigError("config field '" + field + "': file not found: " + path.string());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Subcommands. Diagnostics go to `log`; nothing is written to stdout except
// by cmd_recognize and cmd_inspect.

inline void cmd_synth(const ExperimentConfig& c, std::ostream& log) {
  c.check();
  const Alphabet alphabet = c.alphabet();
  c.synth.check(alphabet);
  prepare_output_dir(c);
  const SynthData data = synthesize(c.synth, alphabet, c.seed);
  write_ink_file(data.samples, alphabet, c.ink());
  write_dictionary(data.dictionary, alphabet, c.dictionary());
  write_corpus(data.corpus, data.dictionary, alphabet, c.corpus());
  log << "synth: " << data.samples.size() << " samples, " << data.dictionary.size() << " words, "
      << data.corpus.size() << " corpus lines -> " << c.output_dir << '\n';
}

struct LoadedData {
  Alphabet alphabet;
  std::vector<InkSample> samples;
  Dictionary dictionary;
  std::vector<WordSequence> corpus;
};

inline LoadedData load_experiment_data(const ExperimentConfig& c) {
  detail::require_file(c.ink_path.empty() ? "ink_path (default <output_dir>/ink.jsonl)" : "ink_path", c.ink());
  detail::require_file(c.dictionary_path.empty() ? "dictionary_path (default <output_dir>/dictionary.txt)" : "dictionary_path",
                       c.dictionary());
  detail::require_file(c.corpus_path.empty() ? "corpus_path (default <output_dir>/corpus.txt)" : "corpus_path", c.corpus());
  LoadedData d;
  InkFile ink = parse_ink_file(c.ink());
  if (!(ink.alphabet == c.alphabet())) throw DataError("ink file alphabet differs from the configured alphabet");
  d.alphabet = std::move(ink.alphabet);
  d.samples = std::move(ink.samples);
  d.dictionary = load_dictionary(c.dictionary(), d.alphabet);
  d.corpus = load_corpus(c.corpus(), d.alphabet, d.dictionary);
  if (d.samples.empty()) throw DataError("ink file " + c.ink().string() + " holds no samples");
  if (d.dictionary.empty()) throw DataError("dictionary " + c.dictionary().string() + " is empty");
  return d;
}

struct TrainOptions {
  std::optional<std::filesystem::path> checkpoint;  // warm start
};

inline void write_split(const std::filesystem::path& path, const std::vector<Example>& train_set,
                        const std::vector<Example>& validation_set, const std::vector<Example>& test_set) {
  nlohmann::ordered_json j;
  auto ids = [](const std::vector<Example>& v) {
    std::vector<std::string> out;
    for (const auto& e : v) out.push_back(e.sample_id);
    return out;
  };
  j["train"] = ids(train_set);
  j["validation"] = ids(validation_set);
  j["test"] = ids(test_set);
  write_text(path, j.dump(1) + "\n");
}

inline TrainResult cmd_train(const ExperimentConfig& c, const TrainOptions& options, std::ostream& log) {
  c.check();
  const LoadedData data = load_experiment_data(c);
  prepare_output_dir(c);

  std::vector<Example> examples = make_examples(data.samples, data.alphabet, c.preprocess, c.features);
  auto [train_set, validation_set, test_set] = split_dataset(std::move(examples), c.split, c.seed);
  std::vector<FeatureSequence> train_features;
  for (const auto& e : train_set) train_features.push_back(e.features);

  BlstmModel initial;
  if (options.checkpoint) {
    initial = load_model(*options.checkpoint);
    if (!(initial.alphabet == data.alphabet)) throw DataError("checkpoint alphabet differs from the data alphabet");
    if (initial.config.feature_set != c.features.feature_set ||
        initial.config.input_size != feature_set_width(c.features.feature_set) || initial.config.hidden != c.hidden) {
      throw DataError("checkpoint network/feature configuration differs from the experiment config");
    }
    log << "train: warm start from " << options.checkpoint->string() << '\n';
  } else {
    ModelConfig mc;
    mc.input_size = feature_set_width(c.features.feature_set);
    mc.hidden = c.hidden;
    mc.feature_set = c.features.feature_set;
    mc.window = c.features.window;
    mc.preprocess = c.preprocess;
    initial = init_model(mc, data.alphabet, c.seed, c.train.init_range);
    initial.standardizer = fit_standardizer(train_features);
  }
  standardize_examples(train_set, initial.standardizer);
  standardize_examples(validation_set, initial.standardizer);
  standardize_examples(test_set, initial.standardizer);
  write_split(c.out("split.json"), train_set, validation_set, test_set);

  log << "train: " << train_set.size() << " train / " << validation_set.size() << " validation / "
      << test_set.size() << " test samples\n";
  const auto checkpoint_path = c.out("checkpoint.bin");
  TrainResult result = train(initial, train_set, validation_set, c.train, [&](const BlstmModel& m, const EpochRecord& r) {
    save_model(m, checkpoint_path);
    log << "epoch " << r.epoch << " loss " << r.train_loss << " val_ler " << r.validation_label_error_rate
        << " val_word " << r.validation_word_rate << (r.skipped ? " skipped " + std::to_string(r.skipped) : "") << '\n';
  });
  save_model(result.model, c.out("model.bin"));
  std::ostringstream report;
  write_report_jsonl(report, result.report);
  write_text(c.out("train_report.jsonl"), report.str());
  const BigramModel lm = train_bigram(data.corpus, data.dictionary.size(), c.decode.smoothing_k);
  write_text(c.out("lm.json"), bigram_to_json(lm).dump() + "\n");
  log << "train: best epoch " << result.report.best_epoch << " of " << result.report.stopping_epoch << '\n';
  return result;
}

/// Features standardized with the model's own statistics.
inline std::vector<Example> model_examples(const BlstmModel& model, const std::vector<InkSample>& samples) {
  FeatureConfig fc;
  fc.feature_set = model.config.feature_set;
  fc.window = model.config.window;
  std::vector<Example> ex = make_examples(samples, model.alphabet, model.config.preprocess, fc);
  for (const auto& e : ex) {
    if (e.features.dims() != static_cast<Eigen::Index>(model.config.input_size)) {
      throw DataError("model expects " + std::to_string(model.config.input_size) + " features, sample '" +
                      e.sample_id + "' yields " + std::to_string(e.features.dims()));
    }
  }
  standardize_examples(ex, model.standardizer);
  return ex;
}

struct ReportSummary {
  std::size_t best_epoch = 0;
  std::optional<std::uint64_t> seed;
};

/// The closing summary line of a train_report.jsonl, if any.
inline ReportSummary read_report_summary(const std::filesystem::path& report_path) {
  std::ifstream in(report_path);
  std::string line, last;
  while (std::getline(in, line)) {
    if (!line.empty()) last = line;
  }
  ReportSummary r;
  const auto j = nlohmann::json::parse(last, nullptr, false);
  if (!j.is_object() || !j.contains("best_epoch")) return r;
  r.best_epoch = j.value("best_epoch", std::size_t{0});
  if (j.contains("seed")) r.seed = j["seed"].get<std::uint64_t>();
  return r;
}

struct EvaluateOptions {
  std::optional<std::filesystem::path> model;  // default <output_dir>/model.bin
};

inline EvalResult cmd_evaluate(const ExperimentConfig& c, const EvaluateOptions& options, std::ostream& log) {
  c.check();
  const auto model_path = options.model.value_or(c.out("model.bin"));
  detail::require_file("model", model_path);
  const BlstmModel model = load_model(model_path);
  const LoadedData data = load_experiment_data(c);
  if (!(model.alphabet == data.alphabet)) throw DataError("model alphabet differs from the data alphabet");

  // The test part recorded at training time; every sample when absent.
  std::vector<InkSample> test_samples;
  const auto split_path = c.out("split.json");
  if (std::filesystem::is_regular_file(split_path)) {
    std::ifstream in(split_path);
    const auto split = nlohmann::json::parse(in, nullptr, false);
    if (!split.is_object() || !split.contains("test")) throw DataError(split_path.string() + " is malformed");
    std::set<std::string> ids;
    for (const auto& id : split["test"]) ids.insert(id.get<std::string>());
    for (const auto& s : data.samples) {
      if (ids.count(s.sample_id)) test_samples.push_back(s);
    }
  } else {
    log << "evaluate: no split.json, scoring every sample\n";
    test_samples = data.samples;
  }
  const std::vector<Example> test_set = model_examples(model, test_samples);
  const BigramModel lm = train_bigram(data.corpus, data.dictionary.size(), c.decode.smoothing_k);
  EvalResult r = evaluate(model, test_set, data.dictionary, lm);

  std::filesystem::create_directories(c.output_dir);
  std::ostringstream csv;
  // Epoch and seed describe the trained model, so --seed has no effect here.
  const ReportSummary trained = read_report_summary(c.out("train_report.jsonl"));
  write_metrics_csv(csv, r, trained.best_epoch, trained.seed.value_or(c.seed));
  write_text(c.out("metrics.csv"), csv.str());
  nlohmann::ordered_json summary;
  summary["test_samples"] = test_set.size();
  summary["best_path_exact_match"] = r.best_path_exact_match;
  summary["label_error_rate"] = r.without_lm.label_error_rate;
  write_text(c.out("eval_summary.json"), summary.dump(2) + "\n");
  log << "evaluate: " << test_set.size() << " samples, top1 lm=" << r.with_lm.top_k[1]
      << " no-lm=" << r.without_lm.top_k[1] << " best-path=" << r.best_path_exact_match << '\n';
  return r;
}

struct RecognizeOptions {
  std::filesystem::path model;
  std::filesystem::path ink;
  std::filesystem::path dictionary;
  std::optional<std::filesystem::path> lm;  // bigram JSON; absent = no language model
  std::size_t k = 10;
  double lm_weight = 1.0;
};

inline void cmd_recognize(const RecognizeOptions& o, std::ostream& out) {
  if (o.k < 1) throw ConfigError("--k must be positive");
  detail::require_file("model", o.model);
  detail::require_file("ink", o.ink);
  detail::require_file("dictionary", o.dictionary);
  const BlstmModel model = load_model(o.model);
  const InkFile ink = parse_ink_file(o.ink);
  if (!(ink.alphabet == model.alphabet)) throw DataError("ink file alphabet differs from the model alphabet");
  const Dictionary dict = load_dictionary(o.dictionary, model.alphabet);
  if (dict.empty()) throw DataError("dictionary " + o.dictionary.string() + " is empty");
  std::optional<BigramModel> lm;
  if (o.lm) {
    detail::require_file("lm", *o.lm);
    std::ifstream in(*o.lm);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw DataError("language model " + o.lm->string() + " is not valid JSON: " + e.what());
    }
    lm = bigram_from_json(j);
    if (lm->size() != dict.size()) throw DataError("language model size does not match the dictionary");
  }
  FeatureConfig fc;
  fc.feature_set = model.config.feature_set;
  fc.window = model.config.window;
  write_ranking_csv_header(out);
  for (const auto& s : ink.samples) {
    validate(s, model.alphabet);
    const FeatureSequence f = apply_standardizer(featurize(s, model.config.preprocess, fc), model.standardizer);
    const LogProbMatrix lp = softmax_rows(blstm_forward(model.weights, f.values));
    const Ranking r = dictionary_rank(lp, dict, lm ? &*lm : nullptr, o.k, o.lm_weight);
    write_ranking_csv(out, s.sample_id, r, dict, model.alphabet);
  }
}

/// JSON summary of a model, ink or bigram file.
inline void cmd_inspect(const std::filesystem::path& path, std::ostream& out) {
  detail::require_file("path", path);
  std::ifstream in(path, std::ios::binary);
  std::string head(12, '\0');
  in.read(head.data(), 12);
  head.resize(static_cast<std::size_t>(in.gcount()));
  nlohmann::ordered_json j;
  if (head == std::string(kModelMagic, sizeof kModelMagic)) {
    const BlstmModel m = load_model(path);
    j["kind"] = "model";
    j["version"] = kModelVersion;
    j["alphabet_size"] = m.alphabet.size();
    j["input_size"] = m.config.input_size;
    j["hidden"] = m.config.hidden;
    j["feature_set"] = m.config.feature_set;
    j["parameters"] = m.weights.parameter_count();
  } else {
    std::ifstream text(path);
    std::string first;
    std::getline(text, first);
    const auto header = nlohmann::json::parse(first, nullptr, false);
    if (header.is_object() && header.value("format", "") == kInkFormatTag) {
      const InkFile ink = parse_ink_file(path);
      std::size_t points = 0, labelled = 0;
      for (const auto& s : ink.samples) {
        points += s.points.size();
        labelled += s.transcription ? 1 : 0;
      }
      j["kind"] = "ink";
      j["alphabet_size"] = ink.alphabet.size();
      j["samples"] = ink.samples.size();
      j["transcribed"] = labelled;
      j["points"] = points;
    } else {
      std::ifstream whole(path);
      const auto doc = nlohmann::json::parse(whole, nullptr, false);
      if (!doc.is_object() || doc.value("format", "") != "scribe-bigram/1") {
        throw DataError(path.string() + " is not a model, ink or bigram file");
      }
      const BigramModel lm = bigram_from_json(doc);
      j["kind"] = "bigram";
      j["words"] = lm.size();
    }
  }
  out << j.dump(2) << '\n';
}

}  // namespace scribe
