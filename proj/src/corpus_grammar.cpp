// Probabilistic template grammar for the desk-scale dialogue corpus.
//
// A dialogue is a walk over dialogue acts. Openers are questions about one of
// eight topics; replies answer the pending question and may hand the turn back
// ("what about you ?") or open a new topic. Replies to turns that ask nothing
// are short comments, half of them echoing the item just mentioned. Dull turns
// are least likely after questions, more likely after statements and most
// likely after another dull turn, and are usually followed by a recovery that
// opens a new topic. A single dull string still tends to be the most likely
// whole reply to a question, because specific answers are spread over many
// items and templates.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "s2srl/vocab_corpus.hpp"

namespace s2srl {

namespace {

struct Topic {
  const char* noun;
  std::array<const char*, 8> items;
  std::array<const char*, 2> open_questions;
  std::array<const char*, 2> yes_no_questions;  // "{x}" is replaced by an item
  std::array<const char*, 3> answers;           // "{x}" item
  const char* yes_answer;
  const char* no_answer;  // "{x}" asked item, "{y}" alternative
};

const std::array<Topic, 8> kTopics = {{
    {"food",
     {"pizza", "pasta", "sushi", "salad", "soup", "rice", "bread", "cake"},
     {"what is your favorite food ?", "what do you like to eat ?"},
     {"do you like {x} ?", "do you eat {x} ?"},
     {"i like {x} .", "i love {x} .", "my favorite food is {x} ."},
     "yes , i love {x} .",
     "no , i prefer {y} ."},
    {"sport",
     {"football", "tennis", "soccer", "chess", "golf", "hockey", "baseball", "boxing"},
     {"what is your favorite sport ?", "what sport do you play ?"},
     {"do you play {x} ?", "do you watch {x} ?"},
     {"i play {x} .", "i watch {x} .", "my favorite sport is {x} ."},
     "yes , i play {x} .",
     "no , i play {y} ."},
    {"music",
     {"jazz", "rock", "pop", "blues", "piano", "guitar", "violin", "drums"},
     {"what is your favorite music ?", "what music do you like ?"},
     {"do you like {x} ?", "do you listen to {x} ?"},
     {"i like {x} .", "i listen to {x} .", "my favorite music is {x} ."},
     "yes , i listen to {x} .",
     "no , i like {y} ."},
    {"movie",
     {"comedies", "dramas", "cartoons", "westerns", "thrillers", "musicals", "documentaries", "romances"},
     {"what is your favorite movie ?", "what movies do you watch ?"},
     {"do you watch {x} ?", "do you like {x} ?"},
     {"i watch {x} .", "i like {x} .", "my favorite movies are {x} ."},
     "yes , i watch {x} .",
     "no , i watch {y} ."},
    {"city",
     {"paris", "london", "rome", "tokyo", "berlin", "madrid", "cairo", "boston"},
     {"what is your favorite city ?", "where do you want to travel ?"},
     {"have you been to {x} ?", "do you like {x} ?"},
     {"i love {x} .", "i want to visit {x} .", "my favorite city is {x} ."},
     "yes , i have been to {x} .",
     "no , i have been to {y} ."},
    {"pet",
     {"dog", "cat", "bird", "fish", "horse", "rabbit", "snake", "turtle"},
     {"what pet do you have ?", "what is your favorite animal ?"},
     {"do you have a {x} ?", "do you like a {x} ?"},
     {"i have a {x} .", "i love my {x} .", "my favorite animal is a {x} ."},
     "yes , i have a {x} .",
     "no , i have a {y} ."},
    {"job",
     {"teacher", "doctor", "nurse", "farmer", "pilot", "chef", "lawyer", "driver"},
     {"what do you do for work ?", "what is your job ?"},
     {"are you a {x} ?", "do you work as a {x} ?"},
     {"i am a {x} .", "i work as a {x} .", "my job is {x} ."},
     "yes , i am a {x} .",
     "no , i am a {y} ."},
    {"drink",
     {"tea", "coffee", "juice", "milk", "water", "soda", "wine", "beer"},
     {"what is your favorite drink ?", "what do you like to drink ?"},
     {"do you drink {x} ?", "do you like {x} ?"},
     {"i drink {x} .", "i like {x} .", "my favorite drink is {x} ."},
     "yes , i drink {x} .",
     "no , i drink {y} ."},
}};

const std::array<const char*, 6> kComments = {"cool .", "nice .", "me too .", "that is great .",
                                              "sounds good .", "really ?"};
// Comments that pick up the item the other speaker just mentioned.
const std::array<const char*, 3> kEchoes = {"{x} is great .", "i like {x} too .", "oh , {x} ?"};
const std::array<const char*, 3> kRecoveries = {"ok .", "well .", "never mind ."};
const char* kHandBack = "what about you ?";

// Zipf-like preference over the dull list: the first entries dominate.
double dull_weight(std::size_t rank) { return 1.0 / static_cast<double>(rank + 1); }

enum class Pending { kNone, kOpen, kYesNo, kHandBack };

struct Act {
  std::string text;
  Pending pending = Pending::kNone;
  std::size_t topic = 0;
  std::size_t item = 0;
  bool mentions_item = false;
};

std::string fill(const char* tmpl, const char* x, const char* y = "") {
  std::string out;
  for (const char* p = tmpl; *p; ++p) {
    if (p[0] == '{' && p[1] && p[2] == '}') {
      out += (p[1] == 'x') ? x : y;
      p += 2;
    } else {
      out.push_back(*p);
    }
  }
  return out;
}

class Generator {
 public:
  Generator(const GrammarConfig& cfg, std::uint64_t seed) : cfg_(cfg), rng_(seed) {
    // Dull probability after a question, a statement and a dull turn. Each is 0
    // at fraction 0 and 1 at fraction 1; the mix lands near the requested fraction.
    const double f = cfg.dull_fraction;
    p_dull_after_question_ = std::pow(f, 1.3);
    p_dull_after_statement_ = std::pow(f, 0.9);
    p_dull_after_dull_ = std::pow(f, 0.6);
  }

  Dialogue dialogue() {
    const std::size_t span = cfg_.max_turns - cfg_.min_turns + 1;
    const std::size_t n_turns = cfg_.min_turns + rng_.uniform_index(span);
    Dialogue d;
    Act prev;
    bool prev_dull = false;
    for (std::size_t t = 0; t < n_turns; ++t) {
      double p_dull = p_dull_after_statement_;
      if (t == 0 || prev.pending != Pending::kNone) p_dull = p_dull_after_question_;
      if (prev_dull) p_dull = p_dull_after_dull_;
      Act next;
      const bool dull = rng_.uniform() < p_dull;
      if (dull) {
        next.text = pick_dull();
      } else if (t == 0) {
        next = question(rng_.uniform_index(kTopics.size()));
      } else {
        next = reply(prev, prev_dull);
      }
      d.turns.push_back(next.text);
      prev = std::move(next);
      prev_dull = dull;
    }
    return d;
  }

 private:
  std::string pick_dull() {
    double total = 0.0;
    for (std::size_t i = 0; i < cfg_.dull_texts.size(); ++i) total += dull_weight(i);
    double u = rng_.uniform() * total;
    for (std::size_t i = 0; i < cfg_.dull_texts.size(); ++i) {
      u -= dull_weight(i);
      if (u < 0) return cfg_.dull_texts[i];
    }
    return cfg_.dull_texts.back();
  }

  std::size_t other_topic(std::size_t topic) {
    return (topic + 1 + rng_.uniform_index(kTopics.size() - 1)) % kTopics.size();
  }

  Act question(std::size_t topic) {
    const Topic& tp = kTopics[topic];
    Act a;
    a.topic = topic;
    if (rng_.uniform() < 0.5) {
      a.text = tp.open_questions[rng_.uniform_index(tp.open_questions.size())];
      a.pending = Pending::kOpen;
    } else {
      a.item = rng_.uniform_index(tp.items.size());
      a.text = fill(tp.yes_no_questions[rng_.uniform_index(tp.yes_no_questions.size())], tp.items[a.item]);
      a.pending = Pending::kYesNo;
    }
    return a;
  }

  // Appends an optional hand-back or new-topic question to an answer.
  Act follow_up(Act answer) {
    const double u = rng_.uniform();
    if (u < 0.15) {
      answer.text += " ";
      answer.text += kHandBack;
      answer.pending = Pending::kHandBack;
    } else if (u < 0.35) {
      Act q = question(other_topic(answer.topic));
      answer.text += " " + q.text;
      answer.pending = q.pending;
      answer.topic = q.topic;
      answer.item = q.item;
    } else {
      answer.pending = Pending::kNone;
    }
    return answer;
  }

  Act answer_open(std::size_t topic) {
    const Topic& tp = kTopics[topic];
    Act a;
    a.topic = topic;
    a.item = rng_.uniform_index(tp.items.size());
    a.text = fill(tp.answers[rng_.uniform_index(tp.answers.size())], tp.items[a.item]);
    a.mentions_item = true;
    return a;
  }

  Act reply(const Act& prev, bool prev_dull) {
    switch (prev.pending) {
      case Pending::kOpen:
        return follow_up(answer_open(prev.topic));
      case Pending::kHandBack: {
        Act a = answer_open(prev.topic);
        return follow_up(std::move(a));
      }
      case Pending::kYesNo: {
        const Topic& tp = kTopics[prev.topic];
        Act a;
        a.topic = prev.topic;
        a.mentions_item = true;
        if (rng_.uniform() < 0.6) {
          a.item = prev.item;
          a.text = fill(tp.yes_answer, tp.items[prev.item]);
        } else {
          a.item = (prev.item + 1 + rng_.uniform_index(tp.items.size() - 1)) % tp.items.size();
          a.text = fill(tp.no_answer, tp.items[prev.item], tp.items[a.item]);
        }
        return follow_up(std::move(a));
      }
      case Pending::kNone:
        break;
    }
    // Nothing was asked: a recovery after a dull turn, otherwise a comment,
    // each optionally opening a new topic.
    Act a;
    if (prev_dull) {
      a.text = kRecoveries[rng_.uniform_index(kRecoveries.size())];
    } else if (prev.mentions_item && rng_.uniform() < 0.5) {
      a.text = fill(kEchoes[rng_.uniform_index(kEchoes.size())], kTopics[prev.topic].items[prev.item]);
    } else {
      a.text = kComments[rng_.uniform_index(kComments.size())];
    }
    if (rng_.uniform() < (prev_dull ? 0.7 : 0.15)) {
      Act q = question(rng_.uniform_index(kTopics.size()));
      a.text += " " + q.text;
      a.pending = q.pending;
      a.topic = q.topic;
      a.item = q.item;
    }
    return a;
  }

  const GrammarConfig& cfg_;
  RngStream rng_;
  double p_dull_after_question_ = 0.0;
  double p_dull_after_statement_ = 0.0;
  double p_dull_after_dull_ = 0.0;
};

}  // namespace

void GrammarConfig::validate() const {
  if (!(dull_fraction >= 0.0 && dull_fraction <= 1.0)) {
    throw ConfigError("dull_fraction must be in [0, 1]");
  }
  if (min_turns < 2 || max_turns < min_turns) throw ConfigError("corpus turns must satisfy 2 <= min <= max");
  if (dull_texts.empty()) throw ConfigError("dull set must be non-empty");
}

std::vector<Dialogue> generate_synthetic_corpus(const GrammarConfig& config, std::uint64_t seed) {
  config.validate();
  Generator gen(config, seed);
  std::vector<Dialogue> corpus;
  corpus.reserve(config.n_dialogues);
  for (std::size_t i = 0; i < config.n_dialogues; ++i) corpus.push_back(gen.dialogue());
  return corpus;
}

}  // namespace s2srl
