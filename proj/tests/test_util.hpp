#pragma once

#include <algorithm>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "s2srl/seq2seq_model.hpp"
#include "s2srl/vocab_corpus.hpp"

namespace s2srl::testing {

/// Reserved ids, `words`, then the dialogue markers.
inline Vocab small_vocab(const std::vector<std::string>& words) {
  Vocab v;
  for (const auto& w : words) v.add(w);
  v.add_dialogue_markers();
  return v;
}

inline ModelParams random_model(std::size_t vocab, std::size_t embed, std::size_t hidden, bool attention,
                                std::uint64_t seed, double scale = 0.5) {
  return ModelParams::random({vocab, embed, hidden, attention}, scale, seed);
}

inline ModelParams zero_model(std::size_t vocab, std::size_t embed, std::size_t hidden, bool attention = false) {
  return ModelParams({vocab, embed, hidden, attention});
}

/// Random non-reserved token ids in [kNumReserved, vocab).
inline std::vector<TokenId> random_tokens(std::mt19937_64& gen, std::size_t vocab, std::size_t n) {
  std::uniform_int_distribution<TokenId> d(kNumReserved, static_cast<TokenId>(vocab) - 1);
  std::vector<TokenId> out(n);
  for (auto& t : out) t = d(gen);
  return out;
}

inline Vector flat_vector(const ModelParams& p) {
  return Vector(std::vector<double>(p.flat().begin(), p.flat().end()));
}

inline ModelParams with_flat(ModelParams p, const Vector& x) {
  std::copy(x.values().begin(), x.values().end(), p.flat().begin());
  return p;
}

inline Utterance utt(std::vector<TokenId> ids) { return Utterance(std::move(ids)); }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("s2srl_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace s2srl::testing
