#include "s2srl/config.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <sstream>

#include "CLI11.hpp"

namespace s2srl {

namespace {

struct Key {
  std::string name;
  std::function<CLI::Option*(CLI::App&)> add;
  std::function<std::string()> show;
};

template <typename T>
std::string show_value(const T& v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

std::string show_value(bool v) { return v ? "true" : "false"; }
std::string show_value(const std::string& v) { return v; }
std::string show_value(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ",") + s;
  return out;
}

// "--hidden_dim,--hidden-dim": both spellings work on the command line and in files.
std::string option_names(const std::string& name) {
  std::string dashed = name;
  std::replace(dashed.begin(), dashed.end(), '_', '-');
  return dashed == name ? "--" + name : "--" + name + ",--" + dashed;
}

template <typename T>
Key plain(const std::string& name, T& field, const std::string& help) {
  return {name, [&field, name, help](CLI::App& app) { return app.add_option(option_names(name), field, help); },
          [&field] { return show_value(field); }};
}

Key flag(const std::string& name, bool& field, const std::string& help) {
  return {name,
          [&field, name, help](CLI::App& app) {
            return app.add_flag(option_names(name), field, help);
          },
          [&field] { return show_value(field); }};
}

template <typename E>
Key choice(const std::string& name, E& field, const std::map<std::string, E>& names, const std::string& help) {
  return {name,
          [&field, name, names, help](CLI::App& app) {
            return app.add_option(option_names(name), field, help)
                ->transform(CLI::CheckedTransformer(names, CLI::ignore_case));
          },
          [&field, names] {
            for (const auto& [k, v] : names) {
              if (v == field) return k;
            }
            return std::string("?");
          }};
}

std::vector<Key> keys(RunConfig& c) {
  PipelineConfig& p = c.pipeline;
  const std::map<std::string, CandidateSelection> selections{{"uniform", CandidateSelection::kUniform},
                                                             {"best", CandidateSelection::kBestReward}};
  const std::map<std::string, SimplicityNormalizer> normalizers{
      {"cardinality", SimplicityNormalizer::kCardinality}, {"literal", SimplicityNormalizer::kLiteral}};
  return {
      plain("seed", p.seed, "run seed"),
      plain("workdir", c.workdir, "directory holding corpus, vocab and stage checkpoints"),
      plain("out", c.out, "output path"),
      plain("corpus", c.corpus, "corpus file"),
      plain("model", c.model, "checkpoint for chat and simulate"),
      {"models",
       [&c](CLI::App& app) {
         return app.add_option("--models", c.models, "checkpoints to evaluate")->delimiter(',');
       },
       [&c] { return show_value(c.models); }},
      plain("input", c.input, "scripted chat input"),
      plain("n_episodes", c.n_episodes, "episodes to simulate (0: all test inputs)"),
      flag("show_rewards", c.show_rewards, "print per-reply rewards in chat"),
      plain("log", c.log, "training log path"),
      // corpus
      plain("n_dialogues", p.grammar.n_dialogues, "synthetic dialogues"),
      plain("corpus_min_turns", p.grammar.min_turns, "shortest generated dialogue"),
      plain("corpus_max_turns", p.grammar.max_turns, "longest generated dialogue"),
      plain("dull_fraction", p.grammar.dull_fraction, "target share of dull turns"),
      plain("dull_file", p.dull_file, "dull responses, one per line"),
      plain("vocab_max", p.vocab_max, "vocabulary size cap including reserved tokens"),
      // model and MLE
      plain("embed_dim", p.hyper.embed_dim, "embedding size"),
      plain("hidden_dim", p.hyper.hidden_dim, "LSTM hidden size"),
      flag("attention", p.hyper.attention, "additive attention over encoder states"),
      plain("init_scale", p.hyper.init_scale, "uniform init half-width"),
      plain("learning_rate", p.hyper.learning_rate, "MLE learning rate"),
      plain("clip_norm", p.hyper.clip_norm, "MLE gradient clip"),
      plain("batch_size", p.hyper.batch_size, "MLE batch size"),
      plain("epochs", p.hyper.epochs, "forward model epochs"),
      plain("backward_epochs", p.backward_epochs, "backward model epochs"),
      plain("beam_width", p.hyper.beam_width, "beam width"),
      plain("max_decode_len", p.hyper.max_decode_len, "decode length cap"),
      // mutual information stage
      plain("mi_alpha_start", p.mi.alpha_start, "MLE weight at the first MI update"),
      plain("mi_alpha_end", p.mi.alpha_end, "MLE weight at the last MI update"),
      plain("mi_epochs", p.mi.epochs, "MI epochs"),
      plain("mi_batch_size", p.mi.batch_size, "MI batch size"),
      plain("mi_learning_rate", p.mi.learning_rate, "MI learning rate"),
      plain("mi_clip_norm", p.mi.clip_norm, "MI gradient clip"),
      plain("mi_temperature", p.mi.temperature, "MI sampling temperature"),
      // RL stage
      plain("turns_start", p.curriculum.start_turns, "first curriculum turn limit"),
      plain("turns_end", p.curriculum.end_turns, "last curriculum turn limit"),
      plain("candidates", p.curriculum.candidates, "candidates sampled per simulated turn"),
      plain("iterations_per_stage", p.curriculum.iterations_per_stage, "updates per curriculum stage"),
      plain("episodes_per_iteration", p.curriculum.episodes_per_iteration, "episodes per update"),
      plain("temperature", p.temperature, "simulation sampling temperature"),
      choice("selection", p.selection, selections, "candidate selection: uniform or best"),
      plain("rl_learning_rate", p.rl.learning_rate, "RL learning rate"),
      plain("rl_clip_norm", p.rl.clip_norm, "RL gradient clip"),
      flag("train_early_stop", p.train_early_stop, "end training episodes at dull or looping turns"),
      // rewards
      plain("w_simplicity", p.weights.simplicity, "weight of the ease-of-answering reward"),
      plain("w_information_flow", p.weights.information_flow, "weight of the information-flow reward"),
      plain("w_coherence", p.weights.coherence, "weight of the coherence reward"),
      choice("simplicity_normalizer", p.normalizer, normalizers, "cardinality or literal"),
      // evaluation
      plain("keep_fraction", p.keep_fraction, "share of candidate inputs kept by the dull filter"),
      plain("n_test", p.n_test, "test inputs"),
      plain("heldout_dialogues", p.heldout_dialogues, "dialogues generated for test inputs"),
      plain("overlap_threshold", p.overlap_threshold, "Jaccard overlap that counts as repetition"),
      plain("overlap_window", p.overlap_window, "same-agent utterances compared (2 or 3)"),
      plain("max_turns", p.max_turns, "turn cap for evaluation dialogues"),
  };
}

}  // namespace

void RunConfig::validate() const {
  pipeline.validate();
  if (workdir.empty()) throw ConfigError("workdir must not be empty");
}

void register_run_options(CLI::App& app, RunConfig& cfg) {
  for (auto& k : keys(cfg)) k.add(app);
  app.set_config("--config", "", "key=value config file; flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);
}

std::string effective_config(const RunConfig& cfg) {
  RunConfig copy = cfg;
  auto table = keys(copy);
  std::sort(table.begin(), table.end(), [](const Key& a, const Key& b) { return a.name < b.name; });
  std::string out;
  for (const auto& k : table) out += k.name + "=" + k.show() + "\n";
  return out;
}

std::string to_string(CandidateSelection s) { return s == CandidateSelection::kUniform ? "uniform" : "best"; }

std::string to_string(SimplicityNormalizer n) {
  return n == SimplicityNormalizer::kCardinality ? "cardinality" : "literal";
}

}  // namespace s2srl
