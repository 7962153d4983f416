// scribe: synth | train | evaluate | recognize | inspect

#include "scribe/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
};

scribe::ExperimentConfig resolve(const Overrides& o) {
  scribe::ExperimentConfig c = o.config_path.empty() ? scribe::ExperimentConfig{} : scribe::load_config(o.config_path);
  if (o.seed) {
    c.seed = *o.seed;
    c.train.seed = *o.seed;
  }
  if (o.output) c.output_dir = *o.output;
  c.check();
  return c;
}

void add_overrides(CLI::App* cmd, Overrides& o, bool config_required) {
  auto* opt = cmd->add_option("-c,--config", o.config_path, "experiment config (JSON)");
  if (config_required) opt->required();
  cmd->add_option("--seed", o.seed, "override the config seed");
  cmd->add_option("-o,--output", o.output, "override the output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online handwritten word recognition with a BLSTM-CTC network"};
  app.require_subcommand(1);

  Overrides synth_o, train_o, eval_o;
  std::optional<std::string> checkpoint, eval_model;
  scribe::RecognizeOptions rec;
  std::string rec_model, rec_ink, rec_dict;
  std::optional<std::string> rec_lm;
  std::string inspect_path;

  auto* synth = app.add_subcommand("synth", "generate synthetic ink, dictionary and corpus");
  add_overrides(synth, synth_o, false);

  auto* train = app.add_subcommand("train", "preprocess, featurize and train a model");
  add_overrides(train, train_o, false);
  train->add_option("--checkpoint", checkpoint, "warm start from this model file");

  auto* evaluate = app.add_subcommand("evaluate", "write top-k metrics with and without the language model");
  add_overrides(evaluate, eval_o, false);
  evaluate->add_option("-m,--model", eval_model, "model file (default <output>/model.bin)");

  auto* recognize = app.add_subcommand("recognize", "rank dictionary words for every sample, CSV to stdout");
  recognize->add_option("-m,--model", rec_model, "model file")->required();
  recognize->add_option("-i,--ink", rec_ink, "ink file")->required();
  recognize->add_option("-d,--dictionary", rec_dict, "dictionary file")->required();
  recognize->add_option("--lm", rec_lm, "bigram model JSON (omit for no language model)");
  recognize->add_option("-k", rec.k, "entries per sample")->capture_default_str();
  recognize->add_option("--lm-weight", rec.lm_weight, "language model weight")->capture_default_str();

  auto* inspect = app.add_subcommand("inspect", "summarize a model, ink or bigram file as JSON");
  inspect->add_option("path", inspect_path, "file to inspect")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*synth) {
      scribe::cmd_synth(resolve(synth_o), std::cerr);
    } else if (*train) {
      scribe::TrainOptions options;
      if (checkpoint) options.checkpoint = *checkpoint;
      scribe::cmd_train(resolve(train_o), options, std::cerr);
    } else if (*evaluate) {
      scribe::EvaluateOptions options;
      if (eval_model) options.model = *eval_model;
      scribe::cmd_evaluate(resolve(eval_o), options, std::cerr);
    } else if (*recognize) {
      rec.model = rec_model;
      rec.ink = rec_ink;
      rec.dictionary = rec_dict;
      if (rec_lm) rec.lm = *rec_lm;
      scribe::cmd_recognize(rec, std::cout);
    } else if (*inspect) {
      scribe::cmd_inspect(inspect_path, std::cout);
    }
  } catch (const scribe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const scribe::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const scribe::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
