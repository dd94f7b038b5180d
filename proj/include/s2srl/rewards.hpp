#pragma once

#include <optional>
#include <span>
#include <vector>

#include "s2srl/seq2seq_model.hpp"
#include "s2srl/vocab_corpus.hpp"

namespace s2srl {

/// Mixing weights (lambda1, lambda2, lambda3) for simplicity, information flow
/// and coherence. Each in [0, 1], summing to 1.
struct RewardWeights {
  double simplicity = 0.25;
  double information_flow = 0.25;
  double coherence = 0.5;

  void validate() const;
};

struct RewardBreakdown {
  double r1 = 0.0;
  double r2 = 0.0;
  double r3 = 0.0;
  double total = 0.0;
};

/// How the outer normalizer of the simplicity reward is read. kCardinality
/// divides by |S|; kLiteral applies 1/N_s twice, as the formula is printed.
enum class SimplicityNormalizer { kCardinality, kLiteral };

/// Cosine floor before the log in the information-flow reward.
inline constexpr double kCosineFloor = 1e-8;

// Closed-form pieces, taking log-likelihoods that were already computed.
double simplicity_from_log_probs(std::span<const double> dull_log_probs, std::span<const std::size_t> dull_lengths,
                                 SimplicityNormalizer normalizer = SimplicityNormalizer::kCardinality);
double coherence_from_log_probs(double forward_log_prob, std::size_t action_length, double backward_log_prob,
                                std::size_t previous_length);

/// r1 = -(1/N_S) * sum_s (1/N_s) log p(s | a); the source for p(s | a) is the
/// state (no context, a).
double simplicity_reward(const Utterance& a, const DullSet& dull, const ModelParams& forward, const Vocab& vocab,
                         SimplicityNormalizer normalizer = SimplicityNormalizer::kCardinality);

/// r2 = -log(max(cos(h_prev, h_cur), 1e-8)).
double information_flow_reward(std::span<const double> h_prev, std::span<const double> h_cur);

/// r3 = (1/N_a) log p(a | state) + (1/N_q) log p_backward(q | a), q = state.last.
double coherence_reward(const Utterance& a, const DialogueState& state, const ModelParams& forward,
                        const ModelParams& backward, const Vocab& vocab);

RewardBreakdown combined_reward(double r1, double r2, double r3, const RewardWeights& w);

/// max over s of (1/N_s) log p(s | message): how likely the message is to draw a
/// dull reply. Used to filter initial inputs.
double dull_reply_score(const Utterance& message, const DullSet& dull, const ModelParams& forward,
                        const Vocab& vocab);

/// Everything needed to score a turn. Models are held by reference.
struct RewardModels {
  const ModelParams& forward;
  const ModelParams& backward;
  const Vocab& vocab;
  const DullSet& dull;
  RewardWeights weights;
  SimplicityNormalizer normalizer = SimplicityNormalizer::kCardinality;
};

/// Scores action `a` emitted in `state`. `same_agent_previous` is the acting
/// agent's previous utterance; without one, r2 is 0.
RewardBreakdown score_turn(const Utterance& a, const DialogueState& state,
                           const std::optional<Utterance>& same_agent_previous, const RewardModels& models);

}  // namespace s2srl
