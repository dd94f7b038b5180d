#include "s2srl/rl_policy.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace s2srl {

void CurriculumSchedule::validate() const {
  if (start_turns < 2 || end_turns > 5 || start_turns > end_turns) {
    throw ConfigError("curriculum turns must satisfy 2 <= start <= end <= 5");
  }
  if (candidates < 1) throw ConfigError("candidates per step must be >= 1");
  if (iterations_per_stage < 1 || episodes_per_iteration < 1) {
    throw ConfigError("iterations per stage and episodes per iteration must be >= 1");
  }
}

std::vector<std::size_t> CurriculumSchedule::stages() const {
  validate();
  std::vector<std::size_t> out;
  for (std::size_t t = start_turns; t <= end_turns; ++t) out.push_back(t);
  return out;
}

double BaselineState::value(std::size_t position) const {
  return position < mean.size() && seen[position] ? mean[position] : 0.0;
}

void BaselineState::update(std::size_t position, double observed) {
  if (position >= mean.size()) {
    mean.resize(position + 1, 0.0);
    seen.resize(position + 1, false);
  }
  mean[position] = seen[position] ? decay * mean[position] + (1.0 - decay) * observed : observed;
  seen[position] = true;
  if (!std::isfinite(mean[position])) throw NumericError("baseline became non-finite");
}

std::vector<double> returns_to_go(const Episode& e) {
  std::vector<double> g(e.turns.size());
  double acc = 0.0;
  for (std::size_t i = e.turns.size(); i-- > 0;) {
    acc += e.turns[i].reward.total;
    g[i] = acc;
  }
  return g;
}

double episode_return(const Episode& e) {
  double sum = 0.0;
  for (const auto& t : e.turns) sum += t.reward.total;
  return sum;
}

Episode simulate_dialogue(const ModelParams& params, const Utterance& initial, const SimulationConfig& sim,
                          const RewardModels& rewards, RngStream rng) {
  if (sim.candidates < 1) throw ConfigError("candidates per step must be >= 1");
  sim.rule.validate();
  Episode e;
  e.initial = initial;
  e.params_hash = params.hash();
  DialogueState state{std::nullopt, initial};
  Agent agent = Agent::kA;
  while (!e.cause) {
    const auto src = source_ids(state, rewards.vocab);
    std::vector<Utterance> cands;
    cands.reserve(sim.candidates);
    for (std::size_t k = 0; k < sim.candidates; ++k) {
      cands.push_back(sample_decode(src, params, rng, sim.temperature, sim.max_len));
    }
    const auto history = same_agent_history(e, agent);
    std::optional<Utterance> prev_same;
    if (!history.empty()) prev_same = *history.back();

    Utterance chosen;
    RewardBreakdown reward;
    if (sim.selection == CandidateSelection::kUniform) {
      chosen = cands[rng.uniform_index(cands.size())];
      reward = score_turn(chosen, state, prev_same, rewards);
    } else {
      for (std::size_t k = 0; k < cands.size(); ++k) {
        const auto r = score_turn(cands[k], state, prev_same, rewards);
        if (k == 0 || r.total > reward.total) {
          reward = r;
          chosen = cands[k];
        }
      }
    }
    e.turns.push_back({chosen, agent, state, reward});
    e.cause = check_termination(e, sim.rule);
    state = DialogueState{state.last, chosen};
    agent = agent == Agent::kA ? Agent::kB : Agent::kA;
  }
  return e;
}

std::vector<Episode> simulate_dialogues(const ModelParams& params, std::span<const Utterance> initials,
                                        const SimulationConfig& sim, const RewardModels& rewards,
                                        const RngStream& rng) {
  std::vector<Episode> out(initials.size());
  std::vector<std::string> errors(initials.size());
  const auto n = static_cast<std::ptrdiff_t>(initials.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      out[k] = simulate_dialogue(params, initials[k], sim, rewards, rng.derive(k));
    } catch (const std::exception& ex) {
      errors[k] = ex.what();
    }
  }
  for (const auto& err : errors) {
    if (!err.empty()) throw Error(err);
  }
  return out;
}

std::vector<WeightedSequence> reinforce_items(std::span<const Episode> episodes, const BaselineState& baseline,
                                              const Vocab& vocab) {
  std::vector<WeightedSequence> items;
  const double scale = episodes.empty() ? 0.0 : 1.0 / static_cast<double>(episodes.size());
  for (const auto& e : episodes) {
    const auto g = returns_to_go(e);
    for (std::size_t i = 0; i < e.turns.size(); ++i) {
      const auto& t = e.turns[i];
      items.push_back({source_ids(t.state, vocab), t.utterance.ids, (g[i] - baseline.value(i)) * scale});
    }
  }
  return items;
}

void reinforce_update(std::span<const Episode> episodes, ModelParams& params, BaselineState& baseline,
                      const Vocab& vocab, const RlHyper& hyper) {
  const std::uint64_t h = params.hash();
  for (const auto& e : episodes) {
    if (e.params_hash != h) throw DomainError("episode was generated by different parameters (off-policy)");
  }
  const auto items = reinforce_items(episodes, baseline, vocab);
  Gradient grad(params.dims());
  batch_gradient(params, items, grad);
  if (!grad.all_finite()) throw NumericError("non-finite policy gradient");
  clip_gradient(grad, hyper.clip_norm);
  sgd_step(params, grad, hyper.learning_rate);
  for (const auto& e : episodes) {
    const auto g = returns_to_go(e);
    for (std::size_t i = 0; i < g.size(); ++i) baseline.update(i, g[i]);
  }
}

std::string training_log_tsv(std::span<const TrainingLogRow> rows) {
  std::ostringstream out;
  out << "stage\titeration\tmean_return\tmean_length\n" << std::setprecision(10);
  for (const auto& r : rows) {
    out << r.stage << '\t' << r.iteration << '\t' << r.mean_return << '\t' << r.mean_length << '\n';
  }
  return out.str();
}

CurriculumResult curriculum_train(const ModelParams& init, std::span<const Utterance> initial_pool,
                                  const CurriculumSchedule& sched, const SimulationConfig& sim,
                                  const RewardModels& rewards, const RlHyper& hyper, std::uint64_t seed) {
  sched.validate();
  if (initial_pool.empty()) throw DomainError("empty initial-message pool");
  CurriculumResult res{init, {}, {}, {}};
  BaselineState baseline{};
  const RngStream root(seed);
  std::size_t global_iter = 0;
  for (std::size_t limit : sched.stages()) {
    res.stages.push_back(limit);
    SimulationConfig stage_sim = sim;
    stage_sim.candidates = sched.candidates;
    stage_sim.rule.max_turns = limit;
    TerminationRule length_rule = sim.length_rule;
    length_rule.max_turns = limit;
    res.candidates_per_step.push_back(stage_sim.candidates);
    for (std::size_t it = 0; it < sched.iterations_per_stage; ++it, ++global_iter) {
      const RngStream iter_rng = root.derive(global_iter);
      RngStream pick = iter_rng.derive(0);
      std::vector<Utterance> initials;
      for (std::size_t k = 0; k < sched.episodes_per_iteration; ++k) {
        initials.push_back(initial_pool[pick.uniform_index(initial_pool.size())]);
      }
      const auto episodes = simulate_dialogues(res.params, initials, stage_sim, rewards, iter_rng.derive(1));
      TrainingLogRow row{limit, it, 0.0, 0.0};
      for (const auto& e : episodes) {
        row.mean_return += episode_return(e);
        row.mean_length += static_cast<double>(length_under_rule(e, length_rule));
      }
      row.mean_return /= static_cast<double>(episodes.size());
      row.mean_length /= static_cast<double>(episodes.size());
      res.log.push_back(row);
      reinforce_update(episodes, res.params, baseline, rewards.vocab, hyper);
    }
  }
  return res;
}

void MiConfig::validate() const {
  for (double a : {alpha_start, alpha_end}) {
    if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("MI alpha must be in [0, 1]");
  }
  if (batch_size < 1) throw ConfigError("MI batch size must be >= 1");
  if (!(learning_rate > 0.0) || !(clip_norm > 0.0) || !(temperature > 0.0)) {
    throw ConfigError("MI learning rate, clip norm and temperature must be positive");
  }
  if (!(baseline_decay >= 0.0 && baseline_decay < 1.0)) throw ConfigError("baseline decay must be in [0, 1)");
}

double mi_alpha(const MiConfig& cfg, std::size_t update, std::size_t total_updates) {
  if (total_updates <= 1) return cfg.alpha_start;
  const double t = static_cast<double>(update) / static_cast<double>(total_updates - 1);
  return cfg.alpha_start + (cfg.alpha_end - cfg.alpha_start) * t;
}

std::vector<WeightedSequence> mi_items(std::span<const WeightedSequence> mle_batch,
                                       std::span<const WeightedSequence> sampled,
                                       std::span<const double> advantages, double alpha) {
  if (sampled.size() != advantages.size()) throw DimensionError("one advantage per sampled candidate");
  std::size_t tokens = 0;
  for (const auto& m : mle_batch) tokens += m.target.size();
  std::vector<WeightedSequence> items;
  items.reserve(mle_batch.size() + sampled.size());
  for (const auto& m : mle_batch) items.push_back({m.source, m.target, alpha / static_cast<double>(tokens)});
  const double pg_scale = sampled.empty() ? 0.0 : (1.0 - alpha) / static_cast<double>(sampled.size());
  for (std::size_t k = 0; k < sampled.size(); ++k) {
    items.push_back({sampled[k].source, sampled[k].target, pg_scale * advantages[k]});
  }
  return items;
}

MiResult mi_pretrain(const ModelParams& mle, const ModelParams* backward, std::span<const TrainingPair> pairs,
                     const Vocab& vocab, const ModelParams& reward_forward, const MiConfig& cfg,
                     std::uint64_t seed) {
  if (backward == nullptr) throw ConfigError("MI pretraining needs a backward model (run train-backward)");
  cfg.validate();
  if (pairs.empty()) throw DomainError("MI pretraining needs training pairs");
  MiResult res{mle, {}};
  const auto examples = forward_examples(pairs, vocab);
  const RngStream root(seed);
  std::vector<std::size_t> order(pairs.size());
  const std::size_t per_epoch = (pairs.size() + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t total = per_epoch * cfg.epochs;
  double baseline = 0.0;
  bool have_baseline = false;
  std::size_t update = 0;
  for (std::size_t ep = 0; ep < cfg.epochs; ++ep) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    RngStream shuffle = root.derive(2 * ep);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.uniform_index(i)]);
    const RngStream sample_root = root.derive(2 * ep + 1);
    double r3_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++update) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const std::size_t bsz = end - start;
      std::vector<WeightedSequence> mle_batch, sampled(bsz);
      std::vector<double> r3(bsz);
      for (std::size_t k = start; k < end; ++k) mle_batch.push_back(examples[order[k]]);
      const auto n = static_cast<std::ptrdiff_t>(bsz);
#pragma omp parallel for schedule(dynamic, 1)
      for (std::ptrdiff_t j = 0; j < n; ++j) {
        const auto k = static_cast<std::size_t>(j);
        const auto& pair = pairs[order[start + k]];
        RngStream rng = sample_root.derive(start + k);
        const auto& src = mle_batch[k].source;
        const Utterance cand = sample_decode(src, res.params, rng, cfg.temperature, cfg.max_len);
        r3[k] = coherence_reward(cand, pair.state, reward_forward, *backward, vocab);
        sampled[k] = {src, cand.ids, 0.0};
      }
      const double mean_r3 = std::accumulate(r3.begin(), r3.end(), 0.0) / static_cast<double>(bsz);
      r3_sum += mean_r3 * static_cast<double>(bsz);
      if (!have_baseline) {
        baseline = mean_r3;
        have_baseline = true;
      }
      std::vector<double> adv(bsz);
      for (std::size_t k = 0; k < bsz; ++k) adv[k] = r3[k] - baseline;
      const auto items = mi_items(mle_batch, sampled, adv, mi_alpha(cfg, update, total));
      Gradient grad(res.params.dims());
      const double loss = batch_gradient(res.params, items, grad);
      if (!std::isfinite(loss) || !grad.all_finite()) throw NumericError("non-finite MI objective");
      clip_gradient(grad, cfg.clip_norm);
      sgd_step(res.params, grad, cfg.learning_rate);
      baseline = cfg.baseline_decay * baseline + (1.0 - cfg.baseline_decay) * mean_r3;
    }
    res.mean_r3.push_back(r3_sum / static_cast<double>(pairs.size()));
  }
  return res;
}

std::string episode_json(const Episode& e, const Vocab& vocab) {
  nlohmann::ordered_json j;
  j["initial"] = decode(e.initial, vocab);
  auto turns = nlohmann::ordered_json::array();
  for (const auto& t : e.turns) {
    nlohmann::ordered_json tj;
    tj["agent"] = to_string(t.agent);
    tj["utterance"] = decode(t.utterance, vocab);
    tj["r1"] = t.reward.r1;
    tj["r2"] = t.reward.r2;
    tj["r3"] = t.reward.r3;
    tj["total"] = t.reward.total;
    turns.push_back(std::move(tj));
  }
  j["turns"] = std::move(turns);
  j["cause"] = e.cause ? to_string(*e.cause) : "none";
  return j.dump();
}

}  // namespace s2srl
