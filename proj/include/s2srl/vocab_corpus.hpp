#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "s2srl/core_math.hpp"

namespace s2srl {

using TokenId = std::int32_t;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kUnk = 3;
inline constexpr TokenId kNumReserved = 4;

inline constexpr std::string_view kSepToken = "<sep>";
inline constexpr std::string_view kNoContextToken = "<none>";

/// Token/id bijection. Ids 0..3 are PAD, BOS, EOS, UNK and are never written to
/// the vocab file; line k of the file holds id k + 4.
class Vocab {
 public:
  explicit Vocab(std::size_t max_size = 1u << 20);

  std::size_t size() const { return tokens_.size(); }
  std::size_t max_size() const { return max_size_; }
  /// Id of `token`, or UNK when absent.
  TokenId id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Appends a token; returns the existing id when already present.
  TokenId add(std::string_view token);
  /// Adds the context separator and empty-context marker used by dialogue states.
  void add_dialogue_markers();
  TokenId sep() const;
  TokenId no_context() const;

  /// FNV-1a over the token list; identifies the vocab inside checkpoints.
  std::uint64_t hash() const;

  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);

 private:
  std::size_t max_size_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Token ids of one turn. Non-empty, EOS only as the last element. Utterances
/// built from text never contain PAD (encode maps reserved names to UNK).
struct Utterance {
  std::vector<TokenId> ids;

  Utterance() = default;
  explicit Utterance(std::vector<TokenId> tokens);

  bool ends_with_eos() const { return !ids.empty() && ids.back() == kEos; }
  /// Tokens without the trailing EOS.
  std::span<const TokenId> content() const;
  /// Copy with EOS appended when missing.
  Utterance terminated() const;
  /// Token count including EOS (the sequence a decoder predicts).
  std::size_t predicted_length() const { return content().size() + 1; }

  bool operator==(const Utterance& other) const { return ids == other.ids; }
};

/// Text-level dialogue: one string per turn, alternating speakers.
struct Dialogue {
  std::vector<std::string> turns;
  bool operator==(const Dialogue&) const = default;
};

/// The two most recent turns. `previous` is absent for the opening turn.
struct DialogueState {
  std::optional<Utterance> previous;
  Utterance last;
};

struct TrainingPair {
  DialogueState state;
  Utterance target;
};

/// Dull responses S with cardinality N_S.
struct DullSet {
  std::vector<Utterance> responses;
  std::size_t cardinality() const { return responses.size(); }
  bool contains(const Utterance& u) const;
};

std::vector<std::string> tokenize(std::string_view text);
std::string normalize_text(std::string_view text);

/// Ranks corpus tokens by frequency (ties lexicographic). `reserve` slots are
/// left free for tokens added afterwards, such as the dialogue markers.
Vocab build_vocab(std::span<const Dialogue> corpus, std::size_t max_size, std::size_t reserve = 0);

Utterance encode(std::string_view text, const Vocab& vocab);
std::string decode(const Utterance& u, const Vocab& vocab);
std::string decode(std::span<const TokenId> ids, const Vocab& vocab);

/// Source sequence for a dialogue state: previous <sep> last, with the
/// empty-context marker standing in for an absent previous turn.
std::vector<TokenId> source_ids(const DialogueState& state, const Vocab& vocab);

std::vector<TrainingPair> make_training_pairs(std::span<const Utterance> dialogue);
std::vector<Utterance> encode_dialogue(const Dialogue& d, const Vocab& vocab);

std::vector<std::string> default_dull_texts();
DullSet make_dull_set(std::span<const std::string> texts, const Vocab& vocab);
std::vector<std::string> load_dull_texts(const std::filesystem::path& path);

struct GrammarConfig {
  std::size_t n_dialogues = 2000;
  std::size_t min_turns = 2;
  std::size_t max_turns = 6;
  double dull_fraction = 0.3;
  std::vector<std::string> dull_texts = default_dull_texts();

  void validate() const;
};

std::vector<Dialogue> generate_synthetic_corpus(const GrammarConfig& config, std::uint64_t seed);

/// True when `turn` is exactly one of the configured dull texts.
bool is_dull_text(std::string_view turn, std::span<const std::string> dull_texts);

void save_corpus(std::span<const Dialogue> corpus, const std::filesystem::path& path);
std::vector<Dialogue> load_corpus(const std::filesystem::path& path);

/// Keeps the ceil(keep_fraction * n) messages with the lowest dull-reply score,
/// preserving input order. Ties are broken by original index.
using DullReplyScorer = std::function<double(const Utterance&)>;
std::vector<Utterance> filter_initial_inputs(std::span<const Utterance> messages,
                                             const DullReplyScorer& score, double keep_fraction);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace s2srl
