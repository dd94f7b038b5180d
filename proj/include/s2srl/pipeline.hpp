#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "s2srl/evaluation.hpp"
#include "s2srl/rl_policy.hpp"
#include "s2srl/seq2seq_model.hpp"

namespace s2srl {

/// Every knob of a full run. Defaults reproduce the reference setup.
struct PipelineConfig {
  std::uint64_t seed = 1;
  GrammarConfig grammar;
  std::size_t vocab_max = 200;
  HyperConfig hyper;
  std::size_t backward_epochs = 12;
  MiConfig mi;
  CurriculumSchedule curriculum;
  double temperature = 1.0;
  CandidateSelection selection = CandidateSelection::kUniform;
  RlHyper rl;
  /// Stop training episodes at dull or looping turns. Off: every training
  /// episode runs to the stage's turn limit.
  bool train_early_stop = true;
  RewardWeights weights;
  SimplicityNormalizer normalizer = SimplicityNormalizer::kCardinality;
  double keep_fraction = 0.08;
  std::size_t n_test = 200;
  std::size_t heldout_dialogues = 8000;
  double overlap_threshold = 0.8;
  std::size_t overlap_window = 2;
  std::size_t max_turns = 8;
  std::string dull_file;  // empty: built-in list

  void validate() const;
};

/// Corpus-derived data shared by every stage.
struct Workspace {
  std::vector<Dialogue> corpus;
  Vocab vocab;
  DullSet dull;
  std::vector<TrainingPair> pairs;
};

std::vector<std::string> dull_texts(const PipelineConfig& cfg);
Workspace prepare_workspace(std::vector<Dialogue> corpus, const PipelineConfig& cfg);
Workspace prepare_workspace(std::vector<Dialogue> corpus, Vocab vocab, const PipelineConfig& cfg);

ModelDims model_dims(const Workspace& ws, const PipelineConfig& cfg);
ModelParams train_forward(const Workspace& ws, const PipelineConfig& cfg);
ModelParams train_backward(const Workspace& ws, const PipelineConfig& cfg);

/// Distinct turns of `dialogues` in first-seen order.
std::vector<Utterance> distinct_turns(std::span<const Dialogue> dialogues, const Vocab& vocab);

/// Filtered initial messages from the training corpus (RL simulation pool).
std::vector<Utterance> training_pool(const Workspace& ws, const ModelParams& forward, const PipelineConfig& cfg);
/// Filtered initial messages from a held-out corpus; the first n_test are kept.
std::vector<Utterance> test_inputs(const Workspace& ws, const ModelParams& forward, const PipelineConfig& cfg);

MiResult run_mi(const Workspace& ws, const ModelParams& forward, const ModelParams& backward,
                const PipelineConfig& cfg);
CurriculumResult run_rl(const Workspace& ws, const ModelParams& mi, const ModelParams& forward,
                        const ModelParams& backward, const PipelineConfig& cfg);

TerminationRule eval_rule(const Workspace& ws, const PipelineConfig& cfg);

struct ModelEval {
  EvalReport report;
  std::vector<Episode> episodes;
  std::vector<Utterance> responses;
};

ModelEval evaluate_model(const std::string& tag, const ModelParams& params, const Workspace& ws,
                         std::span<const Utterance> inputs, const PipelineConfig& cfg);

}  // namespace s2srl
