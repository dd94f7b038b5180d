#include "s2srl/pipeline.hpp"

#include <set>

namespace s2srl {

namespace {

// Stream ids for the seeds each stage derives from the run seed.
enum Stream : std::uint64_t {
  kInitStream = 1,
  kForwardStream = 2,
  kBackwardInitStream = 3,
  kBackwardStream = 4,
  kHeldoutStream = 5,
  kMiStream = 6,
  kRlStream = 7,
};

std::uint64_t stage_seed(const PipelineConfig& cfg, Stream s) { return RngStream(cfg.seed).derive(s).seed(); }

std::vector<Utterance> filtered(std::span<const Utterance> messages, const Workspace& ws, const ModelParams& fwd,
                                double keep_fraction) {
  return filter_initial_inputs(
      messages, [&](const Utterance& m) { return dull_reply_score(m, ws.dull, fwd, ws.vocab); }, keep_fraction);
}

}  // namespace

void PipelineConfig::validate() const {
  grammar.validate();
  if (vocab_max < 5) throw ConfigError("vocab_max must be >= 5");
  hyper.validate();
  mi.validate();
  curriculum.validate();
  weights.validate();
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (!(rl.learning_rate > 0.0) || !(rl.clip_norm > 0.0)) {
    throw ConfigError("RL learning rate and clip norm must be positive");
  }
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) throw ConfigError("keep_fraction must be in (0, 1]");
  if (n_test < 1) throw ConfigError("n_test must be >= 1");
  if (backward_epochs < 1) throw ConfigError("backward_epochs must be >= 1");
  TerminationRule{nullptr, true, overlap_threshold, overlap_window, max_turns}.validate();
}

std::vector<std::string> dull_texts(const PipelineConfig& cfg) {
  return cfg.dull_file.empty() ? default_dull_texts() : load_dull_texts(cfg.dull_file);
}

Workspace prepare_workspace(std::vector<Dialogue> corpus, const PipelineConfig& cfg) {
  Vocab vocab = build_vocab(corpus, cfg.vocab_max, 2);
  vocab.add_dialogue_markers();
  return prepare_workspace(std::move(corpus), std::move(vocab), cfg);
}

Workspace prepare_workspace(std::vector<Dialogue> corpus, Vocab vocab, const PipelineConfig& cfg) {
  Workspace ws{std::move(corpus), std::move(vocab), {}, {}};
  const auto texts = dull_texts(cfg);
  ws.dull = make_dull_set(texts, ws.vocab);
  for (const auto& d : ws.corpus) {
    const auto utts = encode_dialogue(d, ws.vocab);
    auto p = make_training_pairs(utts);
    ws.pairs.insert(ws.pairs.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
  }
  if (ws.pairs.empty()) throw DomainError("corpus yields no training pairs");
  return ws;
}

ModelDims model_dims(const Workspace& ws, const PipelineConfig& cfg) {
  return {ws.vocab.size(), cfg.hyper.embed_dim, cfg.hyper.hidden_dim, cfg.hyper.attention};
}

ModelParams train_forward(const Workspace& ws, const PipelineConfig& cfg) {
  const auto examples = forward_examples(ws.pairs, ws.vocab);
  auto init = ModelParams::random(model_dims(ws, cfg), cfg.hyper.init_scale, stage_seed(cfg, kInitStream));
  return train_mle(examples, std::move(init), cfg.hyper, stage_seed(cfg, kForwardStream)).params;
}

ModelParams train_backward(const Workspace& ws, const PipelineConfig& cfg) {
  const auto examples = backward_examples(ws.pairs);
  HyperConfig h = cfg.hyper;
  h.epochs = cfg.backward_epochs;
  auto init = ModelParams::random(model_dims(ws, cfg), cfg.hyper.init_scale, stage_seed(cfg, kBackwardInitStream));
  return train_mle(examples, std::move(init), h, stage_seed(cfg, kBackwardStream)).params;
}

std::vector<Utterance> distinct_turns(std::span<const Dialogue> dialogues, const Vocab& vocab) {
  std::set<std::vector<TokenId>> seen;
  std::vector<Utterance> out;
  for (const auto& d : dialogues) {
    for (const auto& t : d.turns) {
      auto u = encode(t, vocab);
      if (seen.insert(u.ids).second) out.push_back(std::move(u));
    }
  }
  return out;
}

std::vector<Utterance> training_pool(const Workspace& ws, const ModelParams& forward, const PipelineConfig& cfg) {
  const auto msgs = distinct_turns(ws.corpus, ws.vocab);
  return filtered(msgs, ws, forward, cfg.keep_fraction);
}

std::vector<Utterance> test_inputs(const Workspace& ws, const ModelParams& forward, const PipelineConfig& cfg) {
  GrammarConfig g = cfg.grammar;
  g.n_dialogues = cfg.heldout_dialogues;
  const auto heldout = generate_synthetic_corpus(g, stage_seed(cfg, kHeldoutStream));
  auto kept = filtered(distinct_turns(heldout, ws.vocab), ws, forward, cfg.keep_fraction);
  if (kept.size() > cfg.n_test) kept.resize(cfg.n_test);
  return kept;
}

MiResult run_mi(const Workspace& ws, const ModelParams& forward, const ModelParams& backward,
                const PipelineConfig& cfg) {
  return mi_pretrain(forward, &backward, ws.pairs, ws.vocab, forward, cfg.mi, stage_seed(cfg, kMiStream));
}

CurriculumResult run_rl(const Workspace& ws, const ModelParams& mi, const ModelParams& forward,
                        const ModelParams& backward, const PipelineConfig& cfg) {
  const RewardModels models{forward, backward, ws.vocab, ws.dull, cfg.weights, cfg.normalizer};
  SimulationConfig sim;
  sim.candidates = cfg.curriculum.candidates;
  sim.temperature = cfg.temperature;
  sim.max_len = cfg.hyper.max_decode_len;
  sim.selection = cfg.selection;
  sim.rule = eval_rule(ws, cfg);
  sim.length_rule = sim.rule;
  if (!cfg.train_early_stop) {
    sim.rule.dull = nullptr;
    sim.rule.check_overlap = false;
  }
  const auto pool = training_pool(ws, forward, cfg);
  return curriculum_train(mi, pool, cfg.curriculum, sim, models, cfg.rl, stage_seed(cfg, kRlStream));
}

TerminationRule eval_rule(const Workspace& ws, const PipelineConfig& cfg) {
  return {&ws.dull, true, cfg.overlap_threshold, cfg.overlap_window, cfg.max_turns};
}

ModelEval evaluate_model(const std::string& tag, const ModelParams& params, const Workspace& ws,
                         std::span<const Utterance> inputs, const PipelineConfig& cfg) {
  ModelEval out;
  out.episodes = simulate_eval_episodes(params, ws.vocab, inputs, eval_rule(ws, cfg), cfg.hyper.beam_width,
                                        cfg.hyper.max_decode_len);
  out.responses = top_responses(params, ws.vocab, inputs, cfg.hyper.beam_width, cfg.hyper.max_decode_len);
  out.report = build_report(tag, out.episodes, out.responses);
  return out;
}

}  // namespace s2srl
