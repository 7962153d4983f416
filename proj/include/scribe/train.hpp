#pragma once

// Online SGD with momentum on the CTC objective, input noise, early stopping
// on validation label error, dataset splitting and the evaluation harness.

#include "scribe/ctc.hpp"
#include "scribe/decode.hpp"
#include "scribe/network.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace scribe {

/// One training or evaluation item: features plus its label sequence.
struct Example {
  std::string sample_id;
  FeatureSequence features;
  LabelSequence target;
};

/// preprocess -> extract_features, unstandardized.
inline FeatureSequence featurize(const InkSample& sample, const PreprocessConfig& preprocess_config,
                                 const FeatureConfig& feature_config) {
  const PreprocessResult r = preprocess(sample, preprocess_config);
  return extract_features(r.sample, r.band, feature_config);
}

inline std::vector<Example> make_examples(const std::vector<InkSample>& samples, const Alphabet& alphabet,
                                          const PreprocessConfig& preprocess_config,
                                          const FeatureConfig& feature_config) {
  std::vector<Example> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    validate(s, alphabet);
    if (!s.transcription) throw DataError("sample '" + s.sample_id + "' has no transcription");
    out.push_back({s.sample_id, featurize(s, preprocess_config, feature_config), *s.transcription});
  }
  return out;
}

inline void standardize_examples(std::vector<Example>& examples, const Standardizer& s) {
  for (auto& e : examples) e.features = apply_standardizer(e.features, s);
}

/// Seeded shuffle then contiguous train / validation / test parts.
template <typename T>
std::tuple<std::vector<T>, std::vector<T>, std::vector<T>> split_dataset(std::vector<T> items,
                                                                        std::array<double, 3> fractions,
                                                                        std::uint64_t seed) {
  for (double f : fractions) {
    if (!(f > 0.0)) throw ConfigError("split fractions must be positive");
  }
  if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
  const std::size_t n = items.size();
  if (n < 3) throw DataError("need at least 3 samples to split into train/validation/test");
  std::mt19937_64 rng(seed);
  std::shuffle(items.begin(), items.end(), rng);

  std::array<std::size_t, 3> sizes{};
  sizes[0] = static_cast<std::size_t>(std::llround(fractions[0] * static_cast<double>(n)));
  sizes[1] = static_cast<std::size_t>(std::llround(fractions[1] * static_cast<double>(n)));
  sizes[0] = std::min(sizes[0], n);
  sizes[1] = std::min(sizes[1], n - sizes[0]);
  sizes[2] = n - sizes[0] - sizes[1];
  for (auto& s : sizes) {
    if (s == 0) {
      --*std::max_element(sizes.begin(), sizes.end());
      s = 1;
    }
  }
  auto a = items.begin();
  auto b = a + static_cast<std::ptrdiff_t>(sizes[0]);
  auto c = b + static_cast<std::ptrdiff_t>(sizes[1]);
  return {std::vector<T>(a, b), std::vector<T>(b, c), std::vector<T>(c, items.end())};
}

struct TrainConfig {
  double learning_rate = 0.05;
  double momentum = 0.8;
  double input_noise_std = 0.55;
  double init_range = 0.1;
  std::uint64_t seed = 1;
  std::size_t early_stop_patience = 20;
  std::size_t max_epochs = 200;

  void check() const {
    if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train.momentum must lie in [0, 1)");
    if (!(input_noise_std >= 0.0)) throw ConfigError("train.input_noise_std must be non-negative");
    if (!(init_range > 0.0)) throw ConfigError("train.init_range must be positive");
    if (early_stop_patience < 1) throw ConfigError("train.early_stop_patience must be positive");
    if (max_epochs < 1) throw ConfigError("train.max_epochs must be positive");
  }
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double validation_label_error_rate = 0.0;
  double validation_word_rate = 0.0;
  std::size_t skipped = 0;  // infeasible training targets
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  std::size_t stopping_epoch = 0;
  double learning_rate = 0.0;
  double momentum = 0.0;
  double input_noise_std = 0.0;
  std::uint64_t seed = 0;
};

inline void write_report_jsonl(std::ostream& out, const TrainReport& report) {
  for (const auto& e : report.epochs) {
    nlohmann::ordered_json j;
    j["epoch"] = e.epoch;
    j["train_loss"] = e.train_loss;
    j["validation_label_error_rate"] = e.validation_label_error_rate;
    j["validation_word_rate"] = e.validation_word_rate;
    j["skipped"] = e.skipped;
    j["seconds"] = e.seconds;
    out << j.dump() << '\n';
  }
  nlohmann::ordered_json summary;
  summary["best_epoch"] = report.best_epoch;
  summary["stopping_epoch"] = report.stopping_epoch;
  summary["learning_rate"] = report.learning_rate;
  summary["momentum"] = report.momentum;
  summary["input_noise_std"] = report.input_noise_std;
  summary["seed"] = report.seed;
  out << summary.dump() << '\n';
}

struct LabelErrorStats {
  double label_error_rate = 0.0;  // total edit distance / total target length
  double exact_match_rate = 0.0;  // best path equals the target
};

/// Unconstrained best-path decoding over a set of examples.
inline LabelErrorStats best_path_stats(const BlstmWeights& w, const std::vector<Example>& examples) {
  if (examples.empty()) throw DataError("cannot score an empty example set");
  double errors = 0.0, length = 0.0, exact = 0.0;
  for (const auto& e : examples) {
    const LabelSequence decoded = best_path_decode(softmax_rows(blstm_forward(w, e.features.values)));
    errors += static_cast<double>(edit_distance(decoded, e.target));
    length += static_cast<double>(e.target.size());
    exact += decoded == e.target ? 1.0 : 0.0;
  }
  return {length > 0.0 ? errors / length : errors, exact / static_cast<double>(examples.size())};
}

struct TrainResult {
  BlstmModel model;
  TrainReport report;
};

using EpochCallback = std::function<void(const BlstmModel& current, const EpochRecord& record)>;

/// One momentum step from a single example; returns its loss, or +inf when
/// the target is infeasible (nothing is updated then). NaN when the forward
/// pass is no longer finite.
inline double sgd_step(BlstmWeights& w, BlstmWeights& velocity, const Matrix& inputs, const LabelSequence& target,
                       double learning_rate, double momentum) {
  const BlstmTrace tr = blstm_trace(w, inputs);
  const LogProbMatrix lp = softmax_rows(tr.outputs);
  const CtcTables tables = ctc_forward_backward(lp, target);
  if (tables.log_likelihood == kLogZero) return std::numeric_limits<double>::infinity();
  if (!std::isfinite(tables.log_likelihood)) return std::numeric_limits<double>::quiet_NaN();
  BlstmWeights grad = blstm_backward(w, inputs, tr, ctc_gradient(lp, target, tables));
  velocity.zip(grad, [&](Matrix& v, Matrix& g) { v = momentum * v - learning_rate * g; });
  w.zip(velocity, [](Matrix& p, Matrix& v) { p += v; });
  return -tables.log_likelihood;
}

/// Online training from `initial`. Examples must already be standardized.
inline TrainResult train(const BlstmModel& initial, const std::vector<Example>& train_set,
                         const std::vector<Example>& validation_set, const TrainConfig& config,
                         const EpochCallback& on_epoch = {}) {
  config.check();
  if (train_set.empty()) throw DataError("training set is empty");
  if (validation_set.empty()) throw DataError("validation set is empty");
  for (const auto* set : {&train_set, &validation_set}) {
    for (const auto& e : *set) {
      if (e.features.dims() != initial.weights.forward.input_size()) {
        throw DataError("sample '" + e.sample_id + "' has " + std::to_string(e.features.dims()) +
                        " features, model expects " + std::to_string(initial.weights.forward.input_size()));
      }
    }
  }

  TrainResult result{initial, {}};
  result.report.learning_rate = config.learning_rate;
  result.report.momentum = config.momentum;
  result.report.input_noise_std = config.input_noise_std;
  result.report.seed = config.seed;
  BlstmWeights& w = result.model.weights;
  BlstmWeights velocity = w.zeros_like();
  BlstmWeights best = w;
  double best_ler = std::numeric_limits<double>::infinity();

  std::seed_seq seeds{config.seed, std::uint64_t{0x5eed}};
  std::array<std::uint64_t, 2> streams{};
  seeds.generate(streams.begin(), streams.end());
  std::mt19937_64 order_rng(streams[0]), noise_rng(streams[1]);
  std::normal_distribution<double> noise(0.0, config.input_noise_std > 0.0 ? config.input_noise_std : 1.0);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), order_rng);
    EpochRecord rec;
    rec.epoch = epoch;
    for (std::size_t i : order) {
      const Example& ex = train_set[i];
      Matrix inputs = ex.features.values;
      if (config.input_noise_std > 0.0) {
        for (Eigen::Index k = 0; k < inputs.size(); ++k) inputs.data()[k] += noise(noise_rng);
      }
      const double loss = sgd_step(w, velocity, inputs, ex.target, config.learning_rate, config.momentum);
      if (std::isinf(loss) && loss > 0.0) {
        ++rec.skipped;
        continue;
      }
      if (!std::isfinite(loss) || !w.all_finite()) {
        throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + " on sample '" + ex.sample_id +
                              "' (non-finite loss or weights)");
      }
      rec.train_loss += loss;
    }
    const LabelErrorStats val = best_path_stats(w, validation_set);
    rec.validation_label_error_rate = val.label_error_rate;
    rec.validation_word_rate = val.exact_match_rate;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.report.epochs.push_back(rec);
    result.report.stopping_epoch = epoch;

    if (val.label_error_rate < best_ler) {
      best_ler = val.label_error_rate;
      best = w;
      result.report.best_epoch = epoch;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (on_epoch) on_epoch(result.model, rec);
    if (since_best >= config.early_stop_patience) break;
  }
  w = best;
  return result;
}

struct EvalConfiguration {
  bool lm = false;
  std::map<int, double> top_k;
  double label_error_rate = 0.0;
};

struct EvalResult {
  EvalConfiguration with_lm;
  EvalConfiguration without_lm;
  double best_path_exact_match = 0.0;
  std::vector<Ranking> rankings_with_lm;
};

/// Per-sample dictionary ranking with and without the bigram start
/// probabilities, plus unconstrained best-path statistics.
inline EvalResult evaluate(const BlstmModel& model, const std::vector<Example>& test_set, const Dictionary& dict,
                           const BigramModel& lm, const std::vector<int>& ks = {1, 5, 10}) {
  if (test_set.empty()) throw DataError("test set is empty");
  if (lm.size() != dict.size()) throw ConfigError("bigram model size does not match the dictionary");
  const int k_max = *std::max_element(ks.begin(), ks.end());
  std::vector<Ranking> with, without;
  std::vector<WordSequence> truths;
  for (const auto& e : test_set) {
    if (e.features.dims() != model.weights.forward.input_size()) {
      throw DataError("sample '" + e.sample_id + "' has " + std::to_string(e.features.dims()) +
                      " features, model expects " + std::to_string(model.weights.forward.input_size()));
    }
    const auto index = dict.find(e.target);
    if (!index) throw DataError("sample '" + e.sample_id + "' transcription is not in the dictionary");
    truths.push_back({*index});
    const LogProbMatrix lp = softmax_rows(blstm_forward(model.weights, e.features.values));
    with.push_back(dictionary_rank(lp, dict, &lm, static_cast<std::size_t>(k_max)));
    without.push_back(dictionary_rank(lp, dict, nullptr, static_cast<std::size_t>(k_max)));
  }
  const LabelErrorStats stats = best_path_stats(model.weights, test_set);
  EvalResult r;
  r.with_lm = {true, top_k_accuracy(with, truths, ks), stats.label_error_rate};
  r.without_lm = {false, top_k_accuracy(without, truths, ks), stats.label_error_rate};
  r.best_path_exact_match = stats.exact_match_rate;
  r.rankings_with_lm = std::move(with);
  return r;
}

inline void write_metrics_csv(std::ostream& out, const EvalResult& r, std::size_t epoch, std::uint64_t seed) {
  out << "method,lm,top1,top5,top10,label_error_rate,epoch,seed\n";
  for (const auto* row : {&r.with_lm, &r.without_lm}) {
    auto rate = [&](int k) {
      auto it = row->top_k.find(k);
      std::ostringstream s;
      if (it != row->top_k.end()) s << std::fixed << std::setprecision(6) << it->second;
      return s.str();
    };
    std::ostringstream ler;
    ler << std::fixed << std::setprecision(6) << row->label_error_rate;
    out << "CTC," << (row->lm ? "yes" : "no") << ',' << rate(1) << ',' << rate(5) << ',' << rate(10) << ','
        << ler.str() << ',' << epoch << ',' << seed << '\n';
  }
}

}  // namespace scribe
