#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "doctest.h"
#include "s2srl/rewards.hpp"
#include "test_util.hpp"

using namespace s2srl;
using namespace s2srl::testing;

namespace {

std::vector<Dialogue> corpus_of(std::initializer_list<std::vector<std::string>> dialogues) {
  std::vector<Dialogue> out;
  for (const auto& d : dialogues) out.push_back({d});
  return out;
}

}  // namespace

TEST_CASE("build_vocab ranks by frequency then lexicographically") {
  const auto corpus = corpus_of({{"b a", "a"}});
  const Vocab v = build_vocab(corpus, 10);
  REQUIRE(v.size() == 6);
  CHECK(v.token(kPad) == "<pad>");
  CHECK(v.id("a") == 4);
  CHECK(v.id("b") == 5);

  const auto tie = corpus_of({{"z y x"}});
  const Vocab t = build_vocab(tie, 10);
  CHECK(t.id("x") == 4);
  CHECK(t.id("y") == 5);
  CHECK(t.id("z") == 6);

  CHECK(build_vocab({}, 10).size() == kNumReserved);
  CHECK_THROWS_AS(build_vocab(corpus, 3), ConfigError);
}

TEST_CASE("build_vocab respects max_size and the reserve for markers") {
  const auto corpus = corpus_of({{"a a a b b c", "d e"}});
  const Vocab v = build_vocab(corpus, 6);
  CHECK(v.size() == 6);
  CHECK(v.contains("a"));
  CHECK(v.contains("b"));
  CHECK_FALSE(v.contains("c"));

  Vocab r = build_vocab(corpus, 8, 2);
  CHECK(r.size() == 6);
  r.add_dialogue_markers();
  CHECK(r.size() == 8);
  CHECK_THROWS_AS(r.add("zzz"), ConfigError);
}

TEST_CASE("encode and decode") {
  const Vocab v = small_vocab({"a", "b"});
  const Utterance u = encode("a b", v);
  CHECK(u.ids == std::vector<TokenId>{4, 5});
  CHECK(decode(u, v) == "a b");
  CHECK(encode("zzz", v).ids == std::vector<TokenId>{kUnk});
  CHECK(encode("  A   B ", v).ids == std::vector<TokenId>{4, 5});
  CHECK_THROWS_AS(encode("", v), DegenerateInputError);
  CHECK_THROWS_AS(encode("   ", v), DegenerateInputError);
  // Reserved names never come back as their reserved ids.
  CHECK(encode("<pad>", v).ids == std::vector<TokenId>{kUnk});
}

TEST_CASE("decode(encode(x)) is the identity on in-vocab text") {
  const std::vector<std::string> words = {"i", "like", "tea", "?", ".", "do", "you"};
  const Vocab v = small_vocab(words);
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 200; ++trial) {
    std::string text;
    const std::size_t n = 1 + gen() % 8;
    for (std::size_t i = 0; i < n; ++i) text += (i ? " " : "") + words[gen() % words.size()];
    CHECK(decode(encode(text, v), v) == text);
  }
}

TEST_CASE("utterance invariants") {
  CHECK_THROWS(Utterance(std::vector<TokenId>{}));
  CHECK_THROWS(Utterance(std::vector<TokenId>{kEos, 4}));
  const Utterance u({4, 5});
  CHECK(u.terminated().ids == std::vector<TokenId>{4, 5, kEos});
  CHECK(u.terminated().content().size() == 2);
  CHECK(u.predicted_length() == 3);
}

TEST_CASE("make_training_pairs") {
  const std::vector<Utterance> d = {utt({4}), utt({5}), utt({6})};
  const auto pairs = make_training_pairs(d);
  REQUIRE(pairs.size() == 2);
  CHECK_FALSE(pairs[0].state.previous.has_value());
  CHECK(pairs[0].state.last == d[0]);
  CHECK(pairs[0].target == d[1]);
  CHECK(*pairs[1].state.previous == d[0]);
  CHECK(pairs[1].state.last == d[1]);
  CHECK(pairs[1].target == d[2]);

  CHECK(make_training_pairs(std::vector<Utterance>{d[0], d[1]}).size() == 1);
  CHECK(make_training_pairs(std::vector<Utterance>{d[0]}).empty());
  for (std::size_t n = 0; n < 8; ++n) {
    const std::vector<Utterance> many(n, d[0]);
    CHECK(make_training_pairs(many).size() == (n == 0 ? 0 : n - 1));
  }
}

TEST_CASE("source_ids uses the separator and the empty-context marker") {
  const Vocab v = small_vocab({"a", "b"});
  const auto first = source_ids({std::nullopt, utt({4, 5})}, v);
  CHECK(first == std::vector<TokenId>{v.no_context(), v.sep(), 4, 5});
  const auto later = source_ids({utt({5}), utt({4, kEos})}, v);
  CHECK(later == std::vector<TokenId>{5, v.sep(), 4});
}

TEST_CASE("synthetic corpus") {
  GrammarConfig g;
  g.n_dialogues = 300;
  const auto a = generate_synthetic_corpus(g, 1);
  const auto b = generate_synthetic_corpus(g, 1);
  CHECK(a == b);
  CHECK(a != generate_synthetic_corpus(g, 2));
  for (const auto& d : a) {
    CHECK(d.turns.size() >= 2);
    CHECK(d.turns.size() <= 6);
  }

  std::set<std::string> words;
  for (const auto& d : generate_synthetic_corpus(GrammarConfig{}, 3)) {
    for (const auto& t : d.turns) {
      for (const auto& w : tokenize(t)) words.insert(w);
    }
  }
  CHECK(words.size() <= 200);

  g.dull_fraction = 0.0;
  for (const auto& d : generate_synthetic_corpus(g, 4)) {
    for (const auto& t : d.turns) CHECK_FALSE(is_dull_text(t, g.dull_texts));
  }

  g.dull_fraction = 1.5;
  CHECK_THROWS_AS(generate_synthetic_corpus(g, 1), ConfigError);
}

TEST_CASE("dull fraction of the synthetic corpus") {
  GrammarConfig g;
  g.n_dialogues = 1000;
  g.dull_fraction = 0.3;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::size_t dull = 0, total = 0;
    for (const auto& d : generate_synthetic_corpus(g, seed)) {
      for (const auto& t : d.turns) {
        ++total;
        dull += is_dull_text(t, g.dull_texts);
      }
    }
    const double frac = static_cast<double>(dull) / static_cast<double>(total);
    INFO("seed " << seed << " fraction " << frac);
    CHECK(std::abs(frac - 0.3) <= 0.05);
  }
}

TEST_CASE("corpus and vocab files round trip") {
  TempDir dir("vocab");
  GrammarConfig g;
  g.n_dialogues = 50;
  const auto corpus = generate_synthetic_corpus(g, 9);
  save_corpus(corpus, dir / "c.txt");
  CHECK(load_corpus(dir / "c.txt") == corpus);

  Vocab v = build_vocab(corpus, 100, 2);
  v.add_dialogue_markers();
  v.save(dir / "v.txt");
  const Vocab w = Vocab::load(dir / "v.txt");
  CHECK(w.tokens() == v.tokens());
  CHECK(w.hash() == v.hash());

  std::ifstream f(dir / "v.txt");
  std::string first;
  std::getline(f, first);
  CHECK(first == v.token(kNumReserved));
}

TEST_CASE("dull set matching is exact after normalization") {
  const Vocab v = small_vocab({"i", "don't", "know", "what"});
  const std::vector<std::string> texts = {"i don't know"};
  const DullSet s = make_dull_set(texts, v);
  CHECK(s.cardinality() == 1);
  CHECK(s.contains(encode("I  don't know", v)));
  CHECK(s.contains(encode("i don't know", v).terminated()));
  CHECK_FALSE(s.contains(encode("i don't know what", v)));
  CHECK(is_dull_text(" I don't   know ", texts));
  CHECK_THROWS_AS(make_dull_set({}, v), ConfigError);
}

TEST_CASE("filter_initial_inputs") {
  const std::vector<Utterance> msgs = {utt({4}), utt({5}), utt({6}), utt({7})};
  const auto all = filter_initial_inputs(msgs, [](const Utterance&) { return 0.0; }, 1.0);
  CHECK(all.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(all[i] == msgs[i]);

  const std::vector<Utterance> two = {utt({4}), utt({5})};
  const auto score = [](const Utterance& m) { return std::log(m.ids[0] == 4 ? 0.9 : 0.1); };
  const auto kept = filter_initial_inputs(two, score, 0.5);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0] == two[1]);

  // Under a zero-weight model every message gets the same score: ties go to the first half.
  const Vocab v = small_vocab({"a", "b", "c", "d"});
  const DullSet dull = make_dull_set(std::vector<std::string>{"a b"}, v);
  const ModelParams zero = zero_model(v.size(), 3, 4);
  const auto tied = filter_initial_inputs(
      msgs, [&](const Utterance& m) { return dull_reply_score(m, dull, zero, v); }, 0.5);
  REQUIRE(tied.size() == 2);
  CHECK(tied[0] == msgs[0]);
  CHECK(tied[1] == msgs[1]);

  for (std::size_t n = 1; n <= 20; ++n) {
    const std::vector<Utterance> many(n, msgs[0]);
    for (double f : {0.08, 0.3, 0.5, 1.0}) {
      CHECK(filter_initial_inputs(many, [](const Utterance&) { return 0.0; }, f).size() ==
            static_cast<std::size_t>(std::ceil(f * static_cast<double>(n) - 1e-9)));
    }
  }
  CHECK_THROWS_AS(filter_initial_inputs({}, score, 0.5), DomainError);
  CHECK_THROWS_AS(filter_initial_inputs(two, score, 0.0), ConfigError);
}
