#include "s2srl/vocab_corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace s2srl {

namespace {

const std::string kReservedNames[kNumReserved] = {"<pad>", "<bos>", "<eos>", "<unk>"};

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Vocab::Vocab(std::size_t max_size) : max_size_(max_size) {
  if (max_size < static_cast<std::size_t>(kNumReserved) + 1) {
    throw ConfigError("vocab max_size must be >= 5, got " + std::to_string(max_size));
  }
  for (const auto& name : kReservedNames) {
    index_.emplace(name, static_cast<TokenId>(tokens_.size()));
    tokens_.push_back(name);
  }
}

TokenId Vocab::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const { return index_.count(std::string(token)) > 0; }

const std::string& Vocab::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw DomainError("vocab: id out of range " + std::to_string(id));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

TokenId Vocab::add(std::string_view token) {
  if (auto it = index_.find(std::string(token)); it != index_.end()) return it->second;
  if (token.empty() || token.find_first_of(" \t\r\n") != std::string_view::npos) {
    throw DomainError("vocab: invalid token '" + std::string(token) + "'");
  }
  if (tokens_.size() >= max_size_) throw ConfigError("vocab is full (max_size " + std::to_string(max_size_) + ")");
  const auto id = static_cast<TokenId>(tokens_.size());
  tokens_.emplace_back(token);
  index_.emplace(std::string(token), id);
  return id;
}

void Vocab::add_dialogue_markers() {
  add(kSepToken);
  add(kNoContextToken);
}

TokenId Vocab::sep() const {
  if (!contains(kSepToken)) throw ConfigError("vocab has no context separator; call add_dialogue_markers()");
  return id(kSepToken);
}

TokenId Vocab::no_context() const {
  if (!contains(kNoContextToken)) throw ConfigError("vocab has no empty-context marker; call add_dialogue_markers()");
  return id(kNoContextToken);
}

std::uint64_t Vocab::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& t : tokens_) {
    h = fnv1a64(t, h);
    h = fnv1a64("\n", h);
  }
  return h;
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write vocab file " + path.string());
  for (std::size_t i = kNumReserved; i < tokens_.size(); ++i) out << tokens_[i] << '\n';
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read vocab file " + path.string());
  Vocab v;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw Error("vocab file " + path.string() + ": empty line");
    if (v.contains(line)) throw Error("vocab file " + path.string() + ": duplicate token " + line);
    v.add(line);
  }
  return v;
}

Utterance::Utterance(std::vector<TokenId> tokens) : ids(std::move(tokens)) {
  if (ids.empty()) throw DegenerateInputError("utterance must be non-empty");
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == kEos && i + 1 != ids.size()) throw DomainError("utterance has EOS before the end");
  }
}

std::span<const TokenId> Utterance::content() const {
  std::span<const TokenId> all(ids);
  return ends_with_eos() ? all.first(all.size() - 1) : all;
}

Utterance Utterance::terminated() const {
  if (ends_with_eos()) return *this;
  auto copy = ids;
  copy.push_back(kEos);
  return Utterance(std::move(copy));
}

bool DullSet::contains(const Utterance& u) const {
  const auto c = u.content();
  return std::any_of(responses.begin(), responses.end(), [&](const Utterance& s) {
    const auto sc = s.content();
    return std::equal(sc.begin(), sc.end(), c.begin(), c.end());
  });
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string normalize_text(std::string_view text) {
  std::string out;
  for (const auto& t : tokenize(text)) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

Vocab build_vocab(std::span<const Dialogue> corpus, std::size_t max_size, std::size_t reserve) {
  Vocab vocab(max_size);
  const std::size_t limit = max_size - std::min(reserve, max_size - kNumReserved);
  std::map<std::string, std::size_t> counts;
  for (const auto& d : corpus) {
    for (const auto& turn : d.turns) {
      for (auto& t : tokenize(turn)) ++counts[t];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  // std::map already orders lexicographically; a stable sort on count keeps that as tie-break.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [tok, n] : ranked) {
    if (vocab.size() >= limit) break;
    if (vocab.contains(tok)) continue;
    vocab.add(tok);
  }
  return vocab;
}

Utterance encode(std::string_view text, const Vocab& vocab) {
  const auto toks = tokenize(text);
  if (toks.empty()) throw DegenerateInputError("cannot encode an empty utterance");
  std::vector<TokenId> ids;
  ids.reserve(toks.size());
  for (const auto& t : toks) {
    const TokenId id = vocab.id(t);
    ids.push_back(id == kPad || id == kEos ? kUnk : id);
  }
  return Utterance(std::move(ids));
}

std::string decode(std::span<const TokenId> ids, const Vocab& vocab) {
  std::string out;
  for (TokenId id : ids) {
    if (id == kEos) break;
    if (!out.empty()) out.push_back(' ');
    out += vocab.token(id);
  }
  return out;
}

std::string decode(const Utterance& u, const Vocab& vocab) { return decode(u.content(), vocab); }

std::vector<TokenId> source_ids(const DialogueState& state, const Vocab& vocab) {
  std::vector<TokenId> src;
  if (state.previous) {
    const auto c = state.previous->content();
    src.assign(c.begin(), c.end());
  } else {
    src.push_back(vocab.no_context());
  }
  src.push_back(vocab.sep());
  const auto last = state.last.content();
  src.insert(src.end(), last.begin(), last.end());
  return src;
}

std::vector<TrainingPair> make_training_pairs(std::span<const Utterance> dialogue) {
  std::vector<TrainingPair> pairs;
  for (std::size_t t = 1; t < dialogue.size(); ++t) {
    TrainingPair p;
    if (t >= 2) p.state.previous = dialogue[t - 2];
    p.state.last = dialogue[t - 1];
    p.target = dialogue[t];
    pairs.push_back(std::move(p));
  }
  return pairs;
}

std::vector<Utterance> encode_dialogue(const Dialogue& d, const Vocab& vocab) {
  std::vector<Utterance> out;
  out.reserve(d.turns.size());
  for (const auto& t : d.turns) out.push_back(encode(t, vocab));
  return out;
}

std::vector<std::string> default_dull_texts() {
  return {"i don't know",
          "i don't know what you are talking about",
          "i have no idea",
          "i'm not sure what you're talking about",
          "i'm sorry",
          "i'm ok",
          "see you later",
          "i have no idea what you're talking about"};
}

DullSet make_dull_set(std::span<const std::string> texts, const Vocab& vocab) {
  if (texts.empty()) throw ConfigError("dull set must be non-empty");
  DullSet s;
  for (const auto& t : texts) s.responses.push_back(encode(t, vocab));
  return s;
}

std::vector<std::string> load_dull_texts(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read dull set file " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto norm = normalize_text(line);
    if (!norm.empty()) out.push_back(std::move(norm));
  }
  if (out.empty()) throw ConfigError("dull set file " + path.string() + " is empty");
  return out;
}

bool is_dull_text(std::string_view turn, std::span<const std::string> dull_texts) {
  const auto norm = normalize_text(turn);
  return std::any_of(dull_texts.begin(), dull_texts.end(),
                     [&](const std::string& d) { return normalize_text(d) == norm; });
}

void save_corpus(std::span<const Dialogue> corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write corpus file " + path.string());
  for (const auto& d : corpus) {
    for (std::size_t i = 0; i < d.turns.size(); ++i) {
      if (i) out << '\t';
      out << d.turns[i];
    }
    out << '\n';
  }
}

std::vector<Dialogue> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read corpus file " + path.string());
  std::vector<Dialogue> corpus;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Dialogue d;
    std::stringstream ss(line);
    std::string turn;
    while (std::getline(ss, turn, '\t')) d.turns.push_back(turn);
    corpus.push_back(std::move(d));
  }
  return corpus;
}

std::vector<Utterance> filter_initial_inputs(std::span<const Utterance> messages,
                                             const DullReplyScorer& score, double keep_fraction) {
  if (messages.empty()) throw DomainError("filter_initial_inputs: empty message list");
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw ConfigError("keep_fraction must be in (0, 1]");
  }
  const std::size_t n = messages.size();
  const auto keep = static_cast<std::size_t>(std::ceil(keep_fraction * static_cast<double>(n) - 1e-9));
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) scores[i] = score(messages[i]);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  order.resize(std::min(keep, n));
  std::sort(order.begin(), order.end());
  std::vector<Utterance> out;
  out.reserve(order.size());
  for (std::size_t i : order) out.push_back(messages[i]);
  return out;
}

}  // namespace s2srl
