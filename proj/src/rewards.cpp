#include "s2srl/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace s2srl {

void RewardWeights::validate() const {
  for (double l : {simplicity, information_flow, coherence}) {
    if (!(l >= 0.0 && l <= 1.0)) throw ConfigError("reward weights must each lie in [0, 1]");
  }
  const double sum = simplicity + information_flow + coherence;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("reward weights must sum to 1 (got " + std::to_string(sum) + ")");
  }
}

double simplicity_from_log_probs(std::span<const double> dull_log_probs, std::span<const std::size_t> dull_lengths,
                                 SimplicityNormalizer normalizer) {
  if (dull_log_probs.empty() || dull_log_probs.size() != dull_lengths.size()) {
    throw DimensionError("simplicity reward needs one log-probability and length per dull response");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < dull_log_probs.size(); ++k) {
    const double n = static_cast<double>(dull_lengths[k]);
    sum += normalizer == SimplicityNormalizer::kLiteral ? dull_log_probs[k] / (n * n) : dull_log_probs[k] / n;
  }
  if (normalizer == SimplicityNormalizer::kLiteral) return -sum;
  return -sum / static_cast<double>(dull_log_probs.size());
}

double coherence_from_log_probs(double forward_log_prob, std::size_t action_length, double backward_log_prob,
                                std::size_t previous_length) {
  if (action_length == 0 || previous_length == 0) throw DegenerateInputError("coherence reward: zero length");
  return forward_log_prob / static_cast<double>(action_length) +
         backward_log_prob / static_cast<double>(previous_length);
}

double simplicity_reward(const Utterance& a, const DullSet& dull, const ModelParams& forward, const Vocab& vocab,
                         SimplicityNormalizer normalizer) {
  if (dull.responses.empty()) throw ConfigError("dull set must be non-empty");
  const Seq2Seq model(forward);
  const auto enc = model.encode(source_ids(DialogueState{std::nullopt, a}, vocab));
  std::vector<double> lps;
  std::vector<std::size_t> lens;
  for (const auto& s : dull.responses) {
    const auto target = s.terminated();
    lps.push_back(model.log_prob(enc, target.ids));
    lens.push_back(target.ids.size());
  }
  return simplicity_from_log_probs(lps, lens, normalizer);
}

double information_flow_reward(std::span<const double> h_prev, std::span<const double> h_cur) {
  const double c = cosine_similarity(h_prev, h_cur);
  return -std::log(std::max(c, kCosineFloor));
}

double coherence_reward(const Utterance& a, const DialogueState& state, const ModelParams& forward,
                        const ModelParams& backward, const Vocab& vocab) {
  const auto action = a.terminated();
  const double fwd = log_prob(action, state, vocab, forward);
  const double bwd = backward_log_prob(state.last, a, backward);
  return coherence_from_log_probs(fwd, action.ids.size(), bwd, state.last.predicted_length());
}

RewardBreakdown combined_reward(double r1, double r2, double r3, const RewardWeights& w) {
  w.validate();
  return {r1, r2, r3, w.simplicity * r1 + w.information_flow * r2 + w.coherence * r3};
}

double dull_reply_score(const Utterance& message, const DullSet& dull, const ModelParams& forward,
                        const Vocab& vocab) {
  if (dull.responses.empty()) throw ConfigError("dull set must be non-empty");
  const Seq2Seq model(forward);
  const auto enc = model.encode(source_ids(DialogueState{std::nullopt, message}, vocab));
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& s : dull.responses) {
    const auto target = s.terminated();
    best = std::max(best, model.log_prob(enc, target.ids) / static_cast<double>(target.ids.size()));
  }
  return best;
}

RewardBreakdown score_turn(const Utterance& a, const DialogueState& state,
                           const std::optional<Utterance>& same_agent_previous, const RewardModels& models) {
  const double r1 = simplicity_reward(a, models.dull, models.forward, models.vocab, models.normalizer);
  double r2 = 0.0;
  if (same_agent_previous) {
    r2 = information_flow_reward(utterance_representation(*same_agent_previous, models.forward),
                                 utterance_representation(a, models.forward));
  }
  const double r3 = coherence_reward(a, state, models.forward, models.backward, models.vocab);
  return combined_reward(r1, r2, r3, models.weights);
}

}  // namespace s2srl
