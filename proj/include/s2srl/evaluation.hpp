#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "s2srl/rewards.hpp"
#include "s2srl/vocab_corpus.hpp"

namespace s2srl {

enum class Agent { kA, kB };
enum class TerminationCause { kDull, kOverlap, kMaxTurns };

std::string to_string(Agent a);
std::string to_string(TerminationCause c);

struct Turn {
  Utterance utterance;  // content plus EOS when the decoder stopped there
  Agent agent = Agent::kA;
  DialogueState state;  // what the agent saw when it spoke
  RewardBreakdown reward;
};

/// One simulated conversation. The initial message is treated as agent B's
/// utterance, so agent A speaks first.
struct Episode {
  Utterance initial;
  std::vector<Turn> turns;
  std::optional<TerminationCause> cause;
  std::uint64_t params_hash = 0;
};

struct TerminationRule {
  const DullSet* dull = nullptr;  // null disables the dull check
  bool check_overlap = true;
  double overlap_threshold = 0.8;
  /// 2: latest vs the same agent's previous utterance. 3: additionally that
  /// previous utterance vs the one before it.
  std::size_t window = 2;
  std::size_t max_turns = 8;

  void validate() const;
};

/// Unigram Jaccard overlap between the contents of two utterances.
double unigram_jaccard(const Utterance& a, const Utterance& b);

/// The acting agent's utterances so far, oldest first, counting the initial
/// message as agent B's.
std::vector<const Utterance*> same_agent_history(const Episode& e, Agent agent);

/// Checks the latest turn: dull, then overlap, then the turn cap.
std::optional<TerminationCause> check_termination(const Episode& e, const TerminationRule& rule);

/// Turns before the terminating one; dull and overlap triggers are excluded,
/// a cap keeps every turn. `count_trigger` keeps the triggering turn too.
std::size_t dialogue_length(const Episode& e, bool count_trigger = false);

/// Length the episode would have had under `rule`: the first prefix on which
/// the rule fires decides the cause, counted as dialogue_length does.
std::size_t length_under_rule(const Episode& e, const TerminationRule& rule);

double mean_dialogue_length(std::span<const Episode> episodes, bool count_trigger = false);

/// Distinct n-grams over total n-grams, EOS excluded; 0 when there are none.
double distinct_n(std::span<const Utterance> responses, int n);

/// Deterministic evaluation self-play: both agents reply with the top beam
/// hypothesis until the rule fires.
Episode simulate_eval_episode(const ModelParams& params, const Vocab& vocab, const Utterance& initial,
                              const TerminationRule& rule, std::size_t beam_width, std::size_t max_len);

/// One episode per input, run in parallel and returned in input order.
std::vector<Episode> simulate_eval_episodes(const ModelParams& params, const Vocab& vocab,
                                            std::span<const Utterance> inputs, const TerminationRule& rule,
                                            std::size_t beam_width, std::size_t max_len);

double avg_dialogue_length(const ModelParams& params, const Vocab& vocab, std::span<const Utterance> inputs,
                           const TerminationRule& rule, std::size_t beam_width, std::size_t max_len);

/// Top beam reply to each input with no earlier context.
std::vector<Utterance> top_responses(const ModelParams& params, const Vocab& vocab,
                                     std::span<const Utterance> inputs, std::size_t beam_width,
                                     std::size_t max_len);

struct EvalReport {
  std::string model;
  double avg_len = 0.0;
  double distinct1 = 0.0;
  double distinct2 = 0.0;
  std::size_t n_episodes = 0;
};

EvalReport build_report(const std::string& model, std::span<const Episode> episodes,
                        std::span<const Utterance> responses);
std::string report_tsv(std::span<const EvalReport> rows);
/// Per-turn rewards; turn numbering restarts at 1 for each episode.
std::string reward_log_tsv(std::span<const Episode> episodes);

}  // namespace s2srl
