#include "s2srl/evaluation.hpp"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>

#include "s2srl/seq2seq_model.hpp"

namespace s2srl {

std::string to_string(Agent a) { return a == Agent::kA ? "A" : "B"; }

std::string to_string(TerminationCause c) {
  switch (c) {
    case TerminationCause::kDull:
      return "dull";
    case TerminationCause::kOverlap:
      return "overlap";
    case TerminationCause::kMaxTurns:
      return "max_turns";
  }
  return "?";
}

void TerminationRule::validate() const {
  if (!(overlap_threshold > 0.0 && overlap_threshold <= 1.0)) {
    throw ConfigError("overlap threshold must be in (0, 1]");
  }
  if (window != 2 && window != 3) throw ConfigError("overlap window must be 2 or 3");
  if (max_turns < 2) throw ConfigError("max turns must be >= 2");
}

double unigram_jaccard(const Utterance& a, const Utterance& b) {
  const auto ca = a.content(), cb = b.content();
  const std::set<TokenId> sa(ca.begin(), ca.end()), sb(cb.begin(), cb.end());
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t inter = 0;
  for (TokenId t : sa) inter += sb.count(t);
  return static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size() - inter);
}

std::vector<const Utterance*> same_agent_history(const Episode& e, Agent agent) {
  std::vector<const Utterance*> out;
  if (agent == Agent::kB) out.push_back(&e.initial);
  for (const auto& t : e.turns) {
    if (t.agent == agent) out.push_back(&t.utterance);
  }
  return out;
}

std::optional<TerminationCause> check_termination(const Episode& e, const TerminationRule& rule) {
  if (e.turns.empty()) return std::nullopt;
  const Turn& latest = e.turns.back();
  if (rule.dull && rule.dull->contains(latest.utterance)) return TerminationCause::kDull;
  const auto hist = same_agent_history(e, latest.agent);
  const std::size_t n = hist.size();
  if (rule.check_overlap && n >= rule.window) {
    bool loop = true;
    for (std::size_t k = n - rule.window; k + 1 < n && loop; ++k) {
      loop = unigram_jaccard(*hist[k], *hist[k + 1]) >= rule.overlap_threshold;
    }
    if (loop) return TerminationCause::kOverlap;
  }
  if (e.turns.size() >= rule.max_turns) return TerminationCause::kMaxTurns;
  return std::nullopt;
}

std::size_t dialogue_length(const Episode& e, bool count_trigger) {
  if (!e.cause) throw DomainError("dialogue_length needs a terminated episode");
  if (*e.cause == TerminationCause::kMaxTurns || count_trigger) return e.turns.size();
  return e.turns.empty() ? 0 : e.turns.size() - 1;
}

std::size_t length_under_rule(const Episode& e, const TerminationRule& rule) {
  Episode prefix;
  prefix.initial = e.initial;
  for (const auto& t : e.turns) {
    prefix.turns.push_back(t);
    if (auto cause = check_termination(prefix, rule)) {
      prefix.cause = cause;
      return dialogue_length(prefix);
    }
  }
  return e.turns.size();
}

double mean_dialogue_length(std::span<const Episode> episodes, bool count_trigger) {
  if (episodes.empty()) throw DomainError("no episodes to average");
  double sum = 0.0;
  for (const auto& e : episodes) sum += static_cast<double>(dialogue_length(e, count_trigger));
  return sum / static_cast<double>(episodes.size());
}

double distinct_n(std::span<const Utterance> responses, int n) {
  if (n != 1 && n != 2) throw DomainError("distinct_n supports n = 1 or 2");
  std::set<std::pair<TokenId, TokenId>> seen;
  std::size_t total = 0;
  for (const auto& r : responses) {
    const auto c = r.content();
    if (c.size() < static_cast<std::size_t>(n)) continue;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= c.size(); ++i) {
      seen.emplace(c[i], n == 2 ? c[i + 1] : TokenId{-1});
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(seen.size()) / static_cast<double>(total);
}

Episode simulate_eval_episode(const ModelParams& params, const Vocab& vocab, const Utterance& initial,
                              const TerminationRule& rule, std::size_t beam_width, std::size_t max_len) {
  rule.validate();
  Episode e;
  e.initial = initial;
  e.params_hash = params.hash();
  DialogueState state{std::nullopt, initial};
  Agent agent = Agent::kA;
  while (!e.cause) {
    const auto hyps = beam_search(source_ids(state, vocab), params, beam_width, max_len);
    e.turns.push_back({hyps.front().utterance, agent, state, {}});
    e.cause = check_termination(e, rule);
    state = DialogueState{state.last, hyps.front().utterance};
    agent = agent == Agent::kA ? Agent::kB : Agent::kA;
  }
  return e;
}

std::vector<Episode> simulate_eval_episodes(const ModelParams& params, const Vocab& vocab,
                                            std::span<const Utterance> inputs, const TerminationRule& rule,
                                            std::size_t beam_width, std::size_t max_len) {
  std::vector<Episode> out(inputs.size());
  std::vector<std::string> errors(inputs.size());
  const auto n = static_cast<std::ptrdiff_t>(inputs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] =
          simulate_eval_episode(params, vocab, inputs[static_cast<std::size_t>(i)], rule, beam_width, max_len);
    } catch (const std::exception& ex) {
      errors[static_cast<std::size_t>(i)] = ex.what();
    }
  }
  for (const auto& err : errors) {
    if (!err.empty()) throw Error(err);
  }
  return out;
}

double avg_dialogue_length(const ModelParams& params, const Vocab& vocab, std::span<const Utterance> inputs,
                           const TerminationRule& rule, std::size_t beam_width, std::size_t max_len) {
  if (inputs.empty()) throw DomainError("empty test set");
  const auto episodes = simulate_eval_episodes(params, vocab, inputs, rule, beam_width, max_len);
  return mean_dialogue_length(episodes);
}

std::vector<Utterance> top_responses(const ModelParams& params, const Vocab& vocab,
                                     std::span<const Utterance> inputs, std::size_t beam_width,
                                     std::size_t max_len) {
  std::vector<Utterance> out(inputs.size());
  const auto n = static_cast<std::ptrdiff_t>(inputs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto src = source_ids(DialogueState{std::nullopt, inputs[static_cast<std::size_t>(i)]}, vocab);
    out[static_cast<std::size_t>(i)] = beam_search(src, params, beam_width, max_len).front().utterance;
  }
  return out;
}

EvalReport build_report(const std::string& model, std::span<const Episode> episodes,
                        std::span<const Utterance> responses) {
  if (episodes.empty()) throw DomainError("build_report needs at least one episode");
  return {model, mean_dialogue_length(episodes), distinct_n(responses, 1), distinct_n(responses, 2),
          episodes.size()};
}

std::string report_tsv(std::span<const EvalReport> rows) {
  std::ostringstream out;
  out << "model\tavg_len\tdistinct1\tdistinct2\tn_episodes\n";
  out << std::fixed << std::setprecision(6);
  for (const auto& r : rows) {
    out << r.model << '\t' << r.avg_len << '\t' << r.distinct1 << '\t' << r.distinct2 << '\t' << r.n_episodes
        << '\n';
  }
  return out.str();
}

std::string reward_log_tsv(std::span<const Episode> episodes) {
  std::ostringstream out;
  out << "turn\tr1\tr2\tr3\ttotal\n" << std::setprecision(10);
  for (const auto& e : episodes) {
    for (std::size_t i = 0; i < e.turns.size(); ++i) {
      const RewardBreakdown& r = e.turns[i].reward;
      out << i + 1 << '\t' << r.r1 << '\t' << r.r2 << '\t' << r.r3 << '\t' << r.total << '\n';
    }
  }
  return out.str();
}

}  // namespace s2srl
