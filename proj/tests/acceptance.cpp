// Acceptance run: one PASS/FAIL line per criterion on stdout, details on stderr.
// Criteria 1, 2 and 9 share five full training pipelines (seeds 1..5).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <omp.h>

#include "s2srl/cli.hpp"
#include "s2srl/pipeline.hpp"
#include "test_util.hpp"

using namespace s2srl;
using namespace s2srl::testing;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
  std::cout << (pass ? "PASS" : "FAIL") << " criterion " << id << " " << what << ": " << detail << std::endl;
  failures += !pass;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << std::fixed << v;
  return s.str();
}

// 3. Gradient oracle --------------------------------------------------------

double nll_of(const ModelParams& p, const std::vector<WeightedSequence>& items) {
  double s = 0;
  for (const auto& it : items) s -= it.coef * Seq2Seq(p).log_prob(it.source, it.target);
  return s;
}

double fd_error(const ModelParams& p, const std::vector<WeightedSequence>& items) {
  Gradient g;
  batch_gradient(p, items, g);
  const ScalarField f = [&](const Vector& x) { return nll_of(with_flat(p, x), items); };
  return finite_difference_check(f, flat_vector(g), flat_vector(p), 1e-5);
}

void criterion_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  const Vocab v = small_vocab({"a", "b", "c", "d", "e", "f"});
  const std::size_t V = v.size();
  std::mt19937_64 gen(3);
  double worst_mle = 0, worst_mi = 0, worst_pg = 0;
  for (bool att : {false, true}) {
    const ModelParams p = random_model(V, 4, 8, att, att ? 31 : 32);
    const auto seq = [&](bool eos) {
      auto t = random_tokens(gen, 10, 1 + gen() % (eos ? 3 : 4));
      if (eos) t.push_back(kEos);
      return t;
    };

    // MLE: mean per-token NLL.
    std::vector<WeightedSequence> mle;
    for (int i = 0; i < 3; ++i) mle.push_back({seq(false), seq(true), 1.0});
    Gradient g;
    mle_gradient(p, mle, g);
    const ScalarField f = [&](const Vector& x) { return mean_token_nll(with_flat(p, x), mle); };
    worst_mle = std::max(worst_mle, finite_difference_check(f, flat_vector(g), flat_vector(p), 1e-5));

    // MI: alpha * MLE + (1 - alpha) * sampled-candidate surrogate.
    std::vector<WeightedSequence> sampled;
    for (int i = 0; i < 3; ++i) sampled.push_back({mle[static_cast<std::size_t>(i)].source, seq(true), 0.0});
    worst_mi = std::max(worst_mi, fd_error(p, mi_items(mle, sampled, std::vector<double>{0.8, -0.3, 1.1}, 0.35)));

    // REINFORCE: returns-to-go minus a per-position baseline.
    std::vector<Episode> eps(2);
    for (auto& e : eps) {
      e.initial = utt(seq(false));
      DialogueState st{std::nullopt, e.initial};
      for (int t = 0; t < 3; ++t) {
        Turn turn{utt(seq(true)), t % 2 ? Agent::kB : Agent::kA, st, {}};
        turn.reward.total = std::normal_distribution<double>()(gen);
        st = {st.last, turn.utterance};
        e.turns.push_back(turn);
      }
    }
    BaselineState b;
    b.update(0, 0.4);
    b.update(2, -0.1);
    worst_pg = std::max(worst_pg, fd_error(p, reinforce_items(eps, b, v)));
  }
  const double secs = seconds_since(t0);
  const bool pass = worst_mle < 1e-4 && worst_mi < 1e-4 && worst_pg < 1e-4 && secs < 60;
  report(3, pass, "gradient oracle",
         "max rel err mle " + std::to_string(worst_mle) + " mi " + std::to_string(worst_mi) + " reinforce " +
             std::to_string(worst_pg) + " (V=12 H=8 len<=4, " + fmt(secs, 1) + " s)");
}

// 4. Beam oracle -------------------------------------------------------------

void criterion_beam() {
  // Every sequence the decoder can return for V=3, max_len=3.
  std::vector<std::vector<TokenId>> seqs, frontier{{}};
  for (std::size_t len = 1; len <= 3; ++len) {
    std::vector<std::vector<TokenId>> next;
    for (const auto& prefix : frontier) {
      for (TokenId t = 0; t < 3; ++t) {
        auto s = prefix;
        s.push_back(t);
        (t == kEos || len == 3 ? seqs : next).push_back(s);
      }
    }
    frontier = std::move(next);
  }
  std::mt19937_64 gen(4);
  int matches = 0;
  for (std::uint64_t draw = 0; draw < 100; ++draw) {
    const ModelParams p = random_model(3, 2, 3, draw % 2, 7000 + draw, 2.0);
    const std::vector<TokenId> src{static_cast<TokenId>(gen() % 3), static_cast<TokenId>(gen() % 3)};
    const Seq2Seq m(p);
    double best = -INFINITY;
    std::vector<TokenId> arg;
    for (const auto& s : seqs) {
      const double lp = m.log_prob(src, s);
      if (lp > best) best = lp, arg = s;
    }
    matches += beam_search(src, p, 27, 3).front().utterance.ids == arg;
  }
  report(4, matches == 100, "beam-search oracle", std::to_string(matches) + "/100 top-1 equal exhaustive argmax");
}

// 5. Reward closed forms -----------------------------------------------------

void criterion_rewards() {
  const Vocab v = small_vocab({"i", "don't", "know", "yes", "tea", "?"});
  const double lnV = std::log(static_cast<double>(v.size()));
  const DullSet dull = make_dull_set(std::vector<std::string>{"i don't know", "yes"}, v);
  const ModelParams zero = zero_model(v.size(), 4, 8, true);
  const Utterance a = encode("yes tea ?", v);
  const double r1 = simplicity_reward(a, dull, zero, v);
  const double r3 = coherence_reward(a, {encode("i know", v), encode("tea ?", v)}, zero, zero, v);

  std::mt19937_64 gen(5);
  std::normal_distribution<double> d;
  bool r2_zero = true;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> h(64);
    for (auto& x : h) x = d(gen);
    r2_zero = r2_zero && information_flow_reward(h, h) == 0.0;
  }
  const double total = combined_reward(0.4, 0.8, 0.2, RewardWeights{0.25, 0.25, 0.5}).total;
  const bool pass = std::abs(r1 - lnV) <= 1e-9 && std::abs(r3 + 2 * lnV) <= 1e-9 && r2_zero &&
                    std::abs(total - 0.4) <= 1e-12;
  std::ostringstream s;
  s.precision(17);
  s << "r1 " << r1 << " (ln V " << lnV << "), r3 " << r3 << ", r2(h,h)=0 " << (r2_zero ? "yes" : "no")
    << ", combined " << total;
  report(5, pass, "reward closed forms", s.str());
}

// 6. Metric oracle -----------------------------------------------------------

double brute_distinct(const std::vector<Utterance>& rs, std::size_t n) {
  std::vector<std::vector<TokenId>> grams;
  for (const auto& r : rs) {
    const auto c = r.content();
    for (std::size_t i = 0; i + n <= c.size(); ++i) grams.emplace_back(c.begin() + i, c.begin() + i + n);
  }
  if (grams.empty()) return 0.0;
  std::size_t distinct = 0;
  for (std::size_t i = 0; i < grams.size(); ++i) {
    bool fresh = true;
    for (std::size_t j = 0; j < i && fresh; ++j) fresh = grams[j] != grams[i];
    distinct += fresh;
  }
  return static_cast<double>(distinct) / static_cast<double>(grams.size());
}

void criterion_metrics() {
  std::mt19937_64 gen(6);
  int exact = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t vocab = 5 + gen() % 30;
    std::vector<Utterance> rs(gen() % 15);
    for (auto& r : rs) {
      auto ids = random_tokens(gen, vocab, gen() % 8);
      if (ids.empty() || gen() % 2) ids.push_back(kEos);
      r = utt(ids);
    }
    exact += distinct_n(rs, 1) == brute_distinct(rs, 1) && distinct_n(rs, 2) == brute_distinct(rs, 2);
  }

  const Vocab v = small_vocab({"a", "b", "c", "d", "e", "f"});
  const DullSet dull = make_dull_set(std::vector<std::string>{"a"}, v);
  std::size_t over_cap = 0, longest = 0, capped = 0;
  for (std::uint64_t k = 0; k < 1000; ++k) {
    TerminationRule rule;
    rule.dull = gen() % 2 ? &dull : nullptr;
    rule.check_overlap = gen() % 4 != 0;
    rule.window = 2 + gen() % 2;
    const ModelParams p = random_model(v.size(), 3, 4, k % 2, 9000 + k, 1.5);
    const Episode e = simulate_eval_episode(p, v, utt(random_tokens(gen, v.size(), 1 + gen() % 3)), rule,
                                            1 + gen() % 3, 5);
    const std::size_t len = dialogue_length(e);
    over_cap += len > 8 || e.turns.size() > 8;
    longest = std::max(longest, len);
    capped += *e.cause == TerminationCause::kMaxTurns;
  }
  report(6, exact == 1000 && over_cap == 0, "metric oracle",
         "distinct_n exact on " + std::to_string(exact) + "/1000 sets; fuzz longest " + std::to_string(longest) +
             ", over cap " + std::to_string(over_cap) + ", capped " + std::to_string(capped) + "/1000");
}

// 7 and 8. Stage reruns through the command line ----------------------------

struct StageRun {
  bool ok = true;
  std::string rl_stdout;
  std::string failure;
};

StageRun run_all_stages(const fs::path& wd, const fs::path& config) {
  StageRun r;
  const std::vector<std::vector<std::string>> stages = {
      {"gen-corpus"},    {"pretrain"}, {"train-backward"}, {"mi-train"},
      {"rl-train"},      {"simulate"}, {"eval", "--out", (wd / "report.tsv").string()},
  };
  for (const auto& s : stages) {
    std::vector<std::string> args = s;
    args.insert(args.end(), {"--workdir", wd.string(), "--config", config.string()});
    std::istringstream in;
    std::ostringstream out, err;
    if (run_cli(args, in, out, err) != kExitOk) {
      r.ok = false;
      r.failure = s[0] + ": " + err.str();
      return r;
    }
    if (s[0] == "rl-train") r.rl_stdout = out.str();
  }
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void criteria_reproducibility_and_curriculum() {
  TempDir dir("accept_repro");
  {
    std::ofstream cfg(dir / "small.ini");
    cfg << "seed = 11\nn_dialogues = 300\nhidden_dim = 16\nembed_dim = 8\nepochs = 2\nbackward_epochs = 2\n"
           "mi_epochs = 1\niterations_per_stage = 2\nepisodes_per_iteration = 4\nn_test = 20\n"
           "heldout_dialogues = 300\n";
  }
  const int saved = omp_get_max_threads();
  const auto a = run_all_stages(dir / "a", dir / "small.ini");
  // The second run uses a different thread count; results must not depend on it.
  omp_set_num_threads(3);
  const auto b = run_all_stages(dir / "b", dir / "small.ini");
  omp_set_num_threads(saved);

  const char* files[] = {"corpus.txt", "vocab.txt", "mle.ckpt",       "backward.ckpt", "mi.ckpt",
                         "rl.ckpt",    "rl_log.tsv", "episodes.jsonl", "rewards.tsv",   "report.tsv"};
  int identical = 0;
  std::string differing;
  if (a.ok && b.ok) {
    for (const char* f : files) {
      const std::string x = slurp(dir / "a" / f);
      if (!x.empty() && x == slurp(dir / "b" / f)) {
        ++identical;
      } else {
        differing += std::string(" ") + f;
      }
    }
  }
  const int n_files = static_cast<int>(std::size(files));
  report(7, a.ok && b.ok && identical == n_files, "reproducibility",
         !(a.ok && b.ok) ? "stage failed: " + a.failure + b.failure
                         : std::to_string(identical) + "/" + std::to_string(n_files) +
                               " artifacts bit-identical across reruns (1 vs 3 threads)" +
                               (differing.empty() ? "" : "; differ:" + differing));

  // Curriculum: parse what rl-train printed and what it logged.
  std::vector<std::size_t> turns, cands;
  std::istringstream lines(a.rl_stdout);
  std::string line;
  while (std::getline(lines, line)) {
    std::size_t t = 0, c = 0;
    if (std::sscanf(line.c_str(), "stage turns=%zu candidates=%zu", &t, &c) == 2) {
      turns.push_back(t);
      cands.push_back(c);
    }
  }
  std::vector<std::size_t> logged;
  std::istringstream log(slurp(dir / "a" / "rl_log.tsv"));
  std::getline(log, line);
  while (std::getline(log, line)) {
    const std::size_t t = std::stoul(line.substr(0, line.find('\t')));
    if (logged.empty() || logged.back() != t) logged.push_back(t);
  }
  const std::vector<std::size_t> want{2, 3, 4, 5};
  std::string shown;
  for (auto t : turns) shown += (shown.empty() ? "" : ",") + std::to_string(t);
  const bool pass = turns == want && logged == want && cands == std::vector<std::size_t>(4, 5);
  report(8, pass, "curriculum contract",
         "stage turn limits [" + shown + "], candidates per step " +
             (cands == std::vector<std::size_t>(4, 5) ? "5 in every stage" : "not 5"));
}

// 1, 2 and 9. Full pipelines -------------------------------------------------

struct SeedResult {
  EvalReport mle, mi, rl;
  std::size_t n_inputs = 0;
  std::size_t vocab = 0;
  std::size_t mle_loops = 0;        // MLE transcripts ending in an overlap loop
  std::size_t mle_loops_late = 0;   // of those, loops past turn 8 (must be none)
  std::size_t rl_loops = 0;         // RL overlap endings on the same inputs
  double seconds = 0;
};

SeedResult run_seed(std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  PipelineConfig cfg;
  cfg.seed = seed;
  const Workspace ws = prepare_workspace(generate_synthetic_corpus(cfg.grammar, seed), cfg);
  const ModelParams fwd = train_forward(ws, cfg);
  const ModelParams bwd = train_backward(ws, cfg);
  const ModelParams mi = run_mi(ws, fwd, bwd, cfg).params;
  const ModelParams rl = run_rl(ws, mi, fwd, bwd, cfg).params;
  SeedResult r;
  r.seconds = seconds_since(t0);
  r.vocab = ws.vocab.size();

  const auto inputs = test_inputs(ws, fwd, cfg);
  r.n_inputs = inputs.size();
  r.mle = evaluate_model("mle", fwd, ws, inputs, cfg).report;
  r.mi = evaluate_model("mi", mi, ws, inputs, cfg).report;
  r.rl = evaluate_model("rl", rl, ws, inputs, cfg).report;

  // Loop transcripts: the dull check is off so that only repetition ends a chat.
  TerminationRule loop_rule = eval_rule(ws, cfg);
  loop_rule.dull = nullptr;
  const auto base = simulate_eval_episodes(fwd, ws.vocab, inputs, loop_rule, cfg.hyper.beam_width,
                                           cfg.hyper.max_decode_len);
  std::vector<Utterance> looping;
  for (const auto& e : base) {
    if (*e.cause == TerminationCause::kOverlap) {
      ++r.mle_loops;
      r.mle_loops_late += e.turns.size() > 8;
      looping.push_back(e.initial);
    }
  }
  const auto after = simulate_eval_episodes(rl, ws.vocab, looping, loop_rule, cfg.hyper.beam_width,
                                            cfg.hyper.max_decode_len);
  for (const auto& e : after) r.rl_loops += *e.cause == TerminationCause::kOverlap;

  std::cerr << "seed " << seed << " (" << fmt(r.seconds, 0) << " s, " << r.n_inputs << " inputs, vocab " << r.vocab
            << ")\n";
  for (const auto* row : {&r.mle, &r.mi, &r.rl}) {
    std::cerr << "  " << row->model << " len " << fmt(row->avg_len, 3) << " d1 " << fmt(row->distinct1)
              << " d2 " << fmt(row->distinct2) << "\n";
  }
  std::cerr << "  loops: mle " << r.mle_loops << ", rl on the same inputs " << r.rl_loops << "\n";
  return r;
}

void criteria_pipelines() {
  std::vector<SeedResult> results;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) results.push_back(run_seed(seed));

  const PipelineConfig defaults;
  const bool setup_ok = defaults.grammar.n_dialogues >= 2000 && defaults.hyper.hidden_dim <= 64;
  int len_ok = 0, dist_ok = 0, loop_ok = 0;
  double slowest = 0;
  bool inputs_ok = true, within_cap = true;
  std::string lens, dists, loops;
  for (const auto& r : results) {
    len_ok += r.rl.avg_len > r.mi.avg_len && r.mi.avg_len > r.mle.avg_len;
    dist_ok += r.rl.distinct1 >= r.mi.distinct1 && r.mi.distinct1 >= r.mle.distinct1 &&
               r.rl.distinct2 >= r.mi.distinct2 && r.mi.distinct2 >= r.mle.distinct2;
    loop_ok += r.mle_loops > 0 && r.rl_loops < r.mle_loops;
    within_cap = within_cap && r.mle_loops_late == 0;
    inputs_ok = inputs_ok && r.n_inputs == 200 && r.vocab <= 200;
    slowest = std::max(slowest, r.seconds);
    lens += " " + fmt(r.rl.avg_len, 2) + "/" + fmt(r.mi.avg_len, 2) + "/" + fmt(r.mle.avg_len, 2);
    dists += " " + fmt(r.rl.distinct1, 3) + "," + fmt(r.rl.distinct2, 3) + "/" + fmt(r.mi.distinct1, 3) + "," +
             fmt(r.mi.distinct2, 3) + "/" + fmt(r.mle.distinct1, 3) + "," + fmt(r.mle.distinct2, 3);
    loops += " " + std::to_string(r.rl_loops) + "<" + std::to_string(r.mle_loops);
  }
  const bool budget_ok = slowest < 30 * 60;
  report(1, setup_ok && inputs_ok && budget_ok && len_ok >= 3, "dialogue length RL > MI > MLE",
         std::to_string(len_ok) + "/5 seeds; rl/mi/mle:" + lens + "; slowest pipeline " + fmt(slowest / 60, 1) +
             " min" + (inputs_ok ? "" : "; test set or vocab out of spec"));
  report(2, dist_ok >= 3, "distinct-1/2 RL >= MI >= MLE",
         std::to_string(dist_ok) + "/5 seeds; d1,d2 rl/mi/mle:" + dists);
  report(9, within_cap && loop_ok >= 3, "fewer overlap loops after RL",
         std::to_string(loop_ok) + "/5 seeds; rl<mle loop counts:" + loops);
}

}  // namespace

int main() {
  criterion_gradients();
  criterion_beam();
  criterion_rewards();
  criterion_metrics();
  criteria_reproducibility_and_curriculum();
  criteria_pipelines();
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
