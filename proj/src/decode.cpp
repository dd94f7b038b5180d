#include <algorithm>
#include <cmath>

#include "s2srl/seq2seq_model.hpp"

namespace s2srl {

namespace {

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

struct Beam {
  std::vector<TokenId> tokens;
  double score = 0.0;
  Seq2Seq::State state;
};

// Higher score first; equal scores fall back to the lexicographically smaller
// token sequence so the order is total and deterministic.
bool better(double sa, const std::vector<TokenId>& ta, double sb, const std::vector<TokenId>& tb) {
  if (sa != sb) return sa > sb;
  return std::lexicographical_compare(ta.begin(), ta.end(), tb.begin(), tb.end());
}

}  // namespace

std::vector<Hypothesis> beam_search(std::span<const TokenId> source, const ModelParams& params,
                                    std::size_t width, std::size_t max_len) {
  if (width == 0) throw ConfigError("beam width must be >= 1");
  if (max_len == 0) throw ConfigError("max_len must be >= 1");
  const Seq2Seq model(params);
  const std::size_t V = model.vocab_size();
  const auto enc = model.encode(source);

  struct Candidate {
    double score;
    std::size_t parent;
    TokenId token;
    std::vector<TokenId> tokens;
  };

  std::vector<Beam> live{Beam{{}, 0.0, model.initial_state(enc)}};
  std::vector<Hypothesis> finished;
  std::vector<double> lp(V);
  for (std::size_t step = 0; step < max_len && !live.empty(); ++step) {
    std::vector<Seq2Seq::State> next_states(live.size());
    std::vector<Candidate> cands;
    cands.reserve(live.size() * V);
    for (std::size_t b = 0; b < live.size(); ++b) {
      const TokenId input = live[b].tokens.empty() ? kBos : live[b].tokens.back();
      model.step(enc, live[b].state, input, next_states[b], lp);
      for (std::size_t v = 0; v < V; ++v) {
        cands.push_back({live[b].score + lp[v], b, static_cast<TokenId>(v), {}});
      }
    }
    const std::size_t keep = std::min(width, cands.size());
    // Prune on score first, then materialize sequences only for the survivors
    // and anything tied with the cut-off.
    std::vector<std::size_t> idx(cands.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep - 1), idx.end(),
                     [&](std::size_t a, std::size_t b) { return cands[a].score > cands[b].score; });
    const double cutoff = cands[idx[keep - 1]].score;
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (cands[i].score >= cutoff) pool.push_back(i);
    }
    for (std::size_t i : pool) {
      auto& c = cands[i];
      c.tokens = live[c.parent].tokens;
      c.tokens.push_back(c.token);
    }
    std::sort(pool.begin(), pool.end(), [&](std::size_t a, std::size_t b) {
      return better(cands[a].score, cands[a].tokens, cands[b].score, cands[b].tokens);
    });
    pool.resize(keep);

    std::vector<Beam> next_live;
    for (std::size_t i : pool) {
      auto& c = cands[i];
      if (c.token == kEos || step + 1 == max_len) {
        finished.push_back({Utterance(std::move(c.tokens)), c.score});
      } else {
        next_live.push_back({std::move(c.tokens), c.score, next_states[c.parent]});
      }
    }
    live = std::move(next_live);
  }
  std::sort(finished.begin(), finished.end(), [](const Hypothesis& a, const Hypothesis& b) {
    return better(a.score, a.utterance.ids, b.score, b.utterance.ids);
  });
  if (finished.size() > width) finished.resize(width);
  return finished;
}

Utterance greedy_decode(std::span<const TokenId> source, const ModelParams& params, std::size_t max_len) {
  if (max_len == 0) throw ConfigError("max_len must be >= 1");
  const Seq2Seq model(params);
  const auto enc = model.encode(source);
  Seq2Seq::State state = model.initial_state(enc), next;
  std::vector<double> lp(model.vocab_size());
  std::vector<TokenId> out;
  TokenId input = kBos;
  while (out.size() < max_len) {
    model.step(enc, state, input, next, lp);
    const auto tok = static_cast<TokenId>(argmax(lp));
    out.push_back(tok);
    if (tok == kEos) break;
    std::swap(state, next);
    input = tok;
  }
  return Utterance(std::move(out));
}

Utterance sample_decode(std::span<const TokenId> source, const ModelParams& params, RngStream& rng,
                        double temperature, std::size_t max_len) {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (temperature < kArgmaxTemperature) return greedy_decode(source, params, max_len);
  if (max_len == 0) throw ConfigError("max_len must be >= 1");
  const Seq2Seq model(params);
  const auto enc = model.encode(source);
  Seq2Seq::State state = model.initial_state(enc), next;
  std::vector<double> lp(model.vocab_size());
  std::vector<TokenId> out;
  TokenId input = kBos;
  while (out.size() < max_len) {
    model.step(enc, state, input, next, lp);
    for (double& v : lp) v /= temperature;
    softmax_inplace(lp);
    const auto tok = static_cast<TokenId>(sample_categorical(std::span<const double>(lp), rng));
    out.push_back(tok);
    if (tok == kEos) break;
    std::swap(state, next);
    input = tok;
  }
  return Utterance(std::move(out));
}

}  // namespace s2srl
