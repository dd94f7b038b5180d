#include "s2srl/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "s2srl/rl_policy.hpp"

namespace s2srl {

namespace fs = std::filesystem;

const ManifestEntry& Manifest::at(const std::string& stage) const {
  for (const auto& e : stages) {
    if (e.stage == stage) return e;
  }
  throw DomainError("unknown stage " + stage);
}

Manifest pipeline_manifest(const fs::path& workdir) {
  const WorkdirLayout wd{workdir};
  Manifest m;
  if (fs::exists(wd.vocab())) m.vocab_hash = Vocab::load(wd.vocab()).hash();
  const std::pair<const char*, fs::path> files[] = {
      {"mle", wd.mle()}, {"backward", wd.backward()}, {"mi", wd.mi()}, {"rl", wd.rl()}};
  std::vector<std::string> mismatches;
  std::optional<std::uint64_t> reference = m.vocab_hash;
  std::string reference_name = "vocab.txt";
  for (const auto& [stage, path] : files) {
    ManifestEntry e{stage, path, fs::exists(path), 0};
    if (e.present) {
      e.vocab_hash = load_checkpoint(path).vocab_hash;
      if (!reference) {
        reference = e.vocab_hash;
        reference_name = path.filename().string();
      } else if (*reference != e.vocab_hash) {
        mismatches.push_back(path.filename().string() + " vs " + reference_name);
      }
    }
    m.stages.push_back(e);
  }
  if (!mismatches.empty()) {
    std::string msg = "vocab hash mismatch:";
    for (const auto& s : mismatches) msg += " " + s + ";";
    msg.pop_back();
    throw StageError(msg);
  }
  return m;
}

namespace {

std::string hex(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

std::string fixed(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(6) << v;
  return s.str();
}

class Runner {
 public:
  Runner(RunConfig cfg, std::istream& in, std::ostream& out)
      : cfg_(std::move(cfg)), wd_{cfg_.workdir}, in_(in), out_(out) {}

  void gen_corpus() {
    const auto corpus = generate_synthetic_corpus(cfg_.pipeline.grammar, cfg_.pipeline.seed);
    const fs::path path = cfg_.out.empty() ? wd_.corpus() : fs::path(cfg_.out);
    ensure_parent(path);
    save_corpus(corpus, path);
    out_ << "wrote " << corpus.size() << " dialogues to " << path.string() << "\n";
  }

  void pretrain() {
    auto corpus = load_stage_corpus();
    fs::create_directories(wd_.dir);
    const Workspace ws = prepare_workspace(std::move(corpus), cfg_.pipeline);
    ws.vocab.save(wd_.vocab());
    const ModelParams fwd = train_forward(ws, cfg_.pipeline);
    save_checkpoint({fwd, "forward", ws.vocab.hash(), "mle"}, wd_.mle());
    out_ << "vocab " << ws.vocab.size() << " tokens, " << ws.pairs.size() << " training pairs\n";
    out_ << "train loss " << fixed(mean_token_nll(fwd, forward_examples(ws.pairs, ws.vocab))) << "\n";
    out_ << "wrote " << wd_.mle().string() << "\n";
  }

  void train_backward_stage() {
    const Workspace ws = workspace("train-backward", "pretrain");
    const ModelParams bwd = train_backward(ws, cfg_.pipeline);
    save_checkpoint({bwd, "backward", ws.vocab.hash(), "backward"}, wd_.backward());
    out_ << "wrote " << wd_.backward().string() << "\n";
  }

  void mi_train() {
    const Workspace ws = workspace("mi-train", "pretrain");
    const ModelParams fwd = stage_checkpoint("mi-train", "pretrain", wd_.mle(), ws);
    const ModelParams bwd = stage_checkpoint("mi-train", "train-backward", wd_.backward(), ws);
    const MiResult mi = run_mi(ws, fwd, bwd, cfg_.pipeline);
    for (std::size_t e = 0; e < mi.mean_r3.size(); ++e) {
      out_ << "epoch " << e + 1 << " mean r3 " << fixed(mi.mean_r3[e]) << "\n";
    }
    save_checkpoint({mi.params, "forward", ws.vocab.hash(), "mi"}, wd_.mi());
    out_ << "wrote " << wd_.mi().string() << "\n";
  }

  void rl_train() {
    const Workspace ws = workspace("rl-train", "pretrain");
    const ModelParams mi = stage_checkpoint("rl-train", "mi-train", wd_.mi(), ws);
    const ModelParams fwd = stage_checkpoint("rl-train", "pretrain", wd_.mle(), ws);
    const ModelParams bwd = stage_checkpoint("rl-train", "train-backward", wd_.backward(), ws);
    const CurriculumResult rl = run_rl(ws, mi, fwd, bwd, cfg_.pipeline);
    for (std::size_t s = 0; s < rl.stages.size(); ++s) {
      out_ << "stage turns=" << rl.stages[s] << " candidates=" << rl.candidates_per_step[s] << "\n";
    }
    const fs::path log = cfg_.log.empty() ? wd_.dir / "rl_log.tsv" : fs::path(cfg_.log);
    write_file(log, training_log_tsv(rl.log));
    save_checkpoint({rl.params, "forward", ws.vocab.hash(), "rl"}, wd_.rl());
    out_ << "wrote " << wd_.rl().string() << " and " << log.string() << "\n";
  }

  void simulate() {
    const Workspace ws = workspace("simulate", "pretrain");
    const ModelParams fwd = stage_checkpoint("simulate", "pretrain", wd_.mle(), ws);
    const ModelParams bwd = stage_checkpoint("simulate", "train-backward", wd_.backward(), ws);
    const ModelParams policy = model_checkpoint(ws);
    auto inputs = test_inputs(ws, fwd, cfg_.pipeline);
    if (cfg_.n_episodes > 0 && cfg_.n_episodes < inputs.size()) inputs.resize(cfg_.n_episodes);
    const PipelineConfig& p = cfg_.pipeline;
    const RewardModels models{fwd, bwd, ws.vocab, ws.dull, p.weights, p.normalizer};
    SimulationConfig sim;
    sim.candidates = p.curriculum.candidates;
    sim.temperature = p.temperature;
    sim.max_len = p.hyper.max_decode_len;
    sim.selection = p.selection;
    sim.rule = eval_rule(ws, p);
    sim.length_rule = sim.rule;
    const auto episodes = simulate_dialogues(policy, inputs, sim, models, RngStream(p.seed));
    std::string dump;
    for (const auto& e : episodes) dump += episode_json(e, ws.vocab) + "\n";
    const fs::path path = cfg_.out.empty() ? wd_.dir / "episodes.jsonl" : fs::path(cfg_.out);
    write_file(path, dump);
    const fs::path rewards = path.parent_path() / "rewards.tsv";
    write_file(rewards, reward_log_tsv(episodes));
    out_ << "episodes " << episodes.size() << " mean length " << fixed(mean_dialogue_length(episodes)) << "\n";
    out_ << "wrote " << path.string() << " and " << rewards.string() << "\n";
  }

  void eval() {
    const Workspace ws = workspace("eval", "pretrain");
    const ModelParams fwd = stage_checkpoint("eval", "pretrain", wd_.mle(), ws);
    std::vector<fs::path> paths;
    for (const auto& m : cfg_.models) paths.emplace_back(m);
    if (paths.empty()) {
      for (const auto& p : {wd_.mle(), wd_.mi(), wd_.rl()}) {
        if (fs::exists(p)) paths.push_back(p);
      }
    }
    const auto inputs = test_inputs(ws, fwd, cfg_.pipeline);
    std::vector<EvalReport> rows;
    for (const auto& path : paths) {
      const Checkpoint ck = load_checkpoint(path);
      check_vocab(ck, path, ws);
      const std::string tag = ck.stage.empty() ? path.stem().string() : ck.stage;
      rows.push_back(evaluate_model(tag, ck.params, ws, inputs, cfg_.pipeline).report);
    }
    const std::string tsv = report_tsv(rows);
    if (!cfg_.out.empty()) write_file(cfg_.out, tsv);
    out_ << tsv;
  }

  void chat() {
    const Vocab vocab = load_vocab("chat", "pretrain");
    Workspace ws{{}, vocab, make_dull_set(dull_texts(cfg_.pipeline), vocab), {}};
    const ModelParams policy = model_checkpoint(ws);
    std::optional<ModelParams> fwd, bwd;
    if (cfg_.show_rewards) {
      fwd = stage_checkpoint("chat --show_rewards", "pretrain", wd_.mle(), ws);
      bwd = stage_checkpoint("chat --show_rewards", "train-backward", wd_.backward(), ws);
    }
    std::ifstream script;
    if (!cfg_.input.empty()) {
      script.open(cfg_.input);
      if (!script) throw ConfigError("cannot open chat input " + cfg_.input);
    }
    std::istream& src = cfg_.input.empty() ? in_ : script;
    const bool echo = !cfg_.input.empty();
    const TerminationRule rule = eval_rule(ws, cfg_.pipeline);
    const PipelineConfig& p = cfg_.pipeline;

    Episode episode;
    std::optional<Utterance> last_reply;
    std::string line;
    std::size_t turn = 0;
    while (true) {
      out_ << "> " << std::flush;
      if (!std::getline(src, line)) {
        out_ << "\n";
        break;
      }
      if (echo) out_ << line << "\n";
      if (line == "/quit") break;
      if (normalize_text(line).empty()) continue;
      const Utterance user = encode(line, vocab);
      if (episode.turns.empty() && !last_reply) {
        episode.initial = user;
      } else {
        episode.turns.push_back({user, Agent::kB, {}, {}});
      }
      const DialogueState state{last_reply, user};
      const auto hyps = beam_search(source_ids(state, vocab), policy, p.hyper.beam_width, p.hyper.max_decode_len);
      const Utterance reply = hyps.front().utterance;
      out_ << "< " << decode(reply, vocab) << "\n";
      if (cfg_.show_rewards) {
        const RewardModels models{*fwd, *bwd, vocab, ws.dull, p.weights, p.normalizer};
        const auto r = score_turn(reply, state, last_reply, models);
        out_ << "# turn " << ++turn << " r1 " << fixed(r.r1) << " r2 " << fixed(r.r2) << " r3 " << fixed(r.r3)
             << " total " << fixed(r.total) << "\n";
      }
      episode.turns.push_back({reply, Agent::kA, state, {}});
      if (const auto cause = check_termination(episode, rule)) {
        out_ << "# simulation would stop here: " << to_string(*cause) << "\n";
      }
      last_reply = reply;
    }
  }

  void manifest() {
    const Manifest m = pipeline_manifest(wd_.dir);
    out_ << "vocab\t" << (m.vocab_hash ? "present\t" + hex(*m.vocab_hash) : std::string("absent\t-")) << "\n";
    for (const auto& e : m.stages) {
      out_ << e.stage << '\t' << (e.present ? "present\t" + hex(e.vocab_hash) : std::string("absent\t-")) << "\n";
    }
    out_ << "consistent\tyes\n";
  }

 private:
  static void ensure_parent(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
  }

  static void write_file(const fs::path& path, const std::string& text) {
    ensure_parent(path);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f << text;
  }

  std::vector<Dialogue> load_stage_corpus() const {
    const fs::path path = cfg_.corpus.empty() ? wd_.corpus() : fs::path(cfg_.corpus);
    if (!fs::exists(path)) throw StageError("missing corpus " + path.string() + "; run gen-corpus first");
    return load_corpus(path);
  }

  Vocab load_vocab(const std::string& stage, const std::string& producer) const {
    if (!fs::exists(wd_.vocab())) {
      throw StageError(stage + " needs " + wd_.vocab().string() + "; run " + producer + " first");
    }
    return Vocab::load(wd_.vocab());
  }

  Workspace workspace(const std::string& stage, const std::string& producer) const {
    pipeline_manifest(wd_.dir);
    Vocab vocab = load_vocab(stage, producer);
    return prepare_workspace(load_stage_corpus(), std::move(vocab), cfg_.pipeline);
  }

  static void check_vocab(const Checkpoint& ck, const fs::path& path, const Workspace& ws) {
    if (ck.vocab_hash != ws.vocab.hash()) {
      throw StageError(path.string() + " was built on a different vocab than vocab.txt");
    }
  }

  ModelParams stage_checkpoint(const std::string& stage, const std::string& producer, const fs::path& path,
                               const Workspace& ws) const {
    if (!fs::exists(path)) {
      throw StageError(stage + " needs " + path.string() + " from " + producer + "; run " + producer + " first");
    }
    Checkpoint ck = load_checkpoint(path);
    check_vocab(ck, path, ws);
    return std::move(ck.params);
  }

  ModelParams model_checkpoint(const Workspace& ws) const {
    const fs::path path = cfg_.model.empty() ? wd_.rl() : fs::path(cfg_.model);
    if (!fs::exists(path)) throw StageError("missing model checkpoint " + path.string());
    Checkpoint ck = load_checkpoint(path);
    check_vocab(ck, path, ws);
    return std::move(ck.params);
  }

  RunConfig cfg_;
  WorkdirLayout wd_;
  std::istream& in_;
  std::ostream& out_;
};

struct Subcommand {
  const char* name;
  const char* help;
  void (Runner::*run)();
};

const Subcommand kSubcommands[] = {
    {"gen-corpus", "generate the synthetic dialogue corpus", &Runner::gen_corpus},
    {"pretrain", "build the vocab and train the forward MLE model", &Runner::pretrain},
    {"train-backward", "train the backward model used by the coherence reward", &Runner::train_backward_stage},
    {"mi-train", "mutual-information pretraining from the MLE model", &Runner::mi_train},
    {"rl-train", "curriculum policy-gradient training from the MI model", &Runner::rl_train},
    {"simulate", "sampled self-play with per-turn rewards, dumped as JSON lines", &Runner::simulate},
    {"eval", "dialogue length and distinct-n report", &Runner::eval},
    {"chat", "interactive chat with a checkpoint", &Runner::chat},
    {"manifest", "list stage checkpoints and check their vocab hashes", &Runner::manifest},
};

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"seq2seq dialogue agent trained with policy gradients", "s2srl"};
  register_run_options(app, cfg);
  app.require_subcommand(1, 1);
  for (const auto& s : kSubcommands) app.add_subcommand(s.name, s.help)->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ConfigError& e) {
    err << "error: config: " << one_line(e.what()) << "\n";
    return kExitConfig;
  } catch (const CLI::ConversionError& e) {
    err << "error: config: " << one_line(e.what()) << "\n";
    return kExitConfig;
  } catch (const CLI::ValidationError& e) {
    err << "error: config: " << one_line(e.what()) << "\n";
    return kExitConfig;
  } catch (const CLI::FileError& e) {
    err << "error: config: " << one_line(e.what()) << "\n";
    return kExitConfig;
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << one_line(e.what()) << "\n" << app.help();
    return kExitUsage;
  }

  const auto chosen = app.get_subcommands();
  const std::string name = chosen.front()->get_name();
  try {
    cfg.validate();
    err << "# effective config for " << name << "\n" << effective_config(cfg);
    Runner runner(cfg, in, out);
    for (const auto& s : kSubcommands) {
      if (name == s.name) (runner.*s.run)();
    }
  } catch (const ConfigError& e) {
    err << "error: " << (dynamic_cast<const StageError*>(&e) ? "stage" : "config") << ": " << one_line(e.what())
        << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << name << ": " << one_line(e.what()) << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace s2srl
