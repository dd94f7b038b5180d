#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "s2srl/evaluation.hpp"
#include "s2srl/rewards.hpp"
#include "s2srl/seq2seq_model.hpp"

namespace s2srl {

/// Simulated turn limit grows from start_turns to end_turns, one stage per value.
struct CurriculumSchedule {
  std::size_t start_turns = 2;
  std::size_t end_turns = 5;
  std::size_t candidates = 5;
  std::size_t iterations_per_stage = 40;
  std::size_t episodes_per_iteration = 16;

  void validate() const;
  std::vector<std::size_t> stages() const;
};

enum class CandidateSelection { kUniform, kBestReward };

struct SimulationConfig {
  std::size_t candidates = 5;
  double temperature = 1.0;
  std::size_t max_len = 16;
  CandidateSelection selection = CandidateSelection::kUniform;
  TerminationRule rule;  // max_turns is the current stage limit
  /// Rule behind the logged mean length; its max_turns is ignored.
  TerminationRule length_rule;
};

/// Exponential running mean of returns-to-go, one entry per turn position.
struct BaselineState {
  double decay = 0.95;
  std::vector<double> mean;
  std::vector<bool> seen;

  double value(std::size_t position) const;
  void update(std::size_t position, double observed);
};

/// Undiscounted suffix sums of the per-turn totals.
std::vector<double> returns_to_go(const Episode& e);
double episode_return(const Episode& e);

/// Self-play between two agents sharing `params`. Each turn samples
/// `candidates` replies, keeps one, scores it and checks termination.
Episode simulate_dialogue(const ModelParams& params, const Utterance& initial, const SimulationConfig& sim,
                          const RewardModels& rewards, RngStream rng);

/// Episodes for each initial message, episode k drawing from rng.derive(k).
std::vector<Episode> simulate_dialogues(const ModelParams& params, std::span<const Utterance> initials,
                                        const SimulationConfig& sim, const RewardModels& rewards,
                                        const RngStream& rng);

/// Surrogate-loss terms for a batch of episodes: one item per turn with
/// coef = (return-to-go - baseline) / n_episodes, so that the gradient of
/// sum coef * (-log p) is the negated policy gradient.
std::vector<WeightedSequence> reinforce_items(std::span<const Episode> episodes, const BaselineState& baseline,
                                              const Vocab& vocab);

struct RlHyper {
  double learning_rate = 0.03;
  double clip_norm = 5.0;
};

/// One REINFORCE step. Throws DomainError when an episode was produced by
/// different parameters. Baseline is updated after the advantages are taken.
void reinforce_update(std::span<const Episode> episodes, ModelParams& params, BaselineState& baseline,
                      const Vocab& vocab, const RlHyper& hyper);

struct TrainingLogRow {
  std::size_t stage = 0;  // turn limit
  std::size_t iteration = 0;
  double mean_return = 0.0;
  double mean_length = 0.0;
};

std::string training_log_tsv(std::span<const TrainingLogRow> rows);

struct CurriculumResult {
  ModelParams params;
  std::vector<std::size_t> stages;  // turn limit of every stage, in order
  std::vector<std::size_t> candidates_per_step;
  std::vector<TrainingLogRow> log;
};

CurriculumResult curriculum_train(const ModelParams& init, std::span<const Utterance> initial_pool,
                                  const CurriculumSchedule& sched, const SimulationConfig& sim,
                                  const RewardModels& rewards, const RlHyper& hyper, std::uint64_t seed);

struct MiConfig {
  double alpha_start = 0.5;
  double alpha_end = 0.25;
  std::size_t epochs = 3;
  std::size_t batch_size = 32;
  double learning_rate = 0.2;
  double clip_norm = 5.0;
  double temperature = 1.0;
  std::size_t max_len = 16;
  double baseline_decay = 0.95;

  void validate() const;
};

/// alpha for a given update: linear from alpha_start to alpha_end over the run.
double mi_alpha(const MiConfig& cfg, std::size_t update, std::size_t total_updates);

/// Mixed-objective terms for one batch. MLE terms carry alpha / (total target
/// tokens); sampled candidates carry (1 - alpha) * advantage / batch size.
std::vector<WeightedSequence> mi_items(std::span<const WeightedSequence> mle_batch,
                                       std::span<const WeightedSequence> sampled,
                                       std::span<const double> advantages, double alpha);

struct MiResult {
  ModelParams params;
  std::vector<double> mean_r3;  // per epoch, over the sampled candidates
};

/// Starts from `mle` and optimizes alpha * MLE + (1 - alpha) * (-r3 surrogate).
/// Throws ConfigError when `backward` is null.
MiResult mi_pretrain(const ModelParams& mle, const ModelParams* backward, std::span<const TrainingPair> pairs,
                     const Vocab& vocab, const ModelParams& reward_forward, const MiConfig& cfg,
                     std::uint64_t seed);

/// One JSON object per line: initial, turns (agent, utterance, r1, r2, r3, total), cause.
std::string episode_json(const Episode& e, const Vocab& vocab);

}  // namespace s2srl
