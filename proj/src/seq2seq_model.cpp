#include "s2srl/seq2seq_model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace s2srl {

void HyperConfig::validate() const {
  if (embed_dim == 0 || hidden_dim == 0) throw ConfigError("embed_dim and hidden_dim must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (beam_width == 0) throw ConfigError("beam_width must be >= 1");
  if (max_decode_len == 0) throw ConfigError("max_decode_len must be positive");
  if (!(init_scale > 0.0)) throw ConfigError("init_scale must be positive");
}

ModelParams::ModelParams(const ModelDims& d) : dims_(d) {
  if (d.vocab == 0 || d.embed == 0 || d.hidden == 0) throw ConfigError("model dims must be positive");
  const std::size_t V = d.vocab, D = d.embed, H = d.hidden;
  const std::size_t A = d.attention ? H : 0;
  const std::size_t out_in = d.attention ? 2 * H : H;
  auto set = [&](Block b, const char* name, std::size_t rows, std::size_t cols) {
    blocks_[static_cast<std::size_t>(b)] = BlockInfo{name, rows, cols, 0};
  };
  set(Block::kEmbedding, "embedding", V, D);
  set(Block::kEncWx, "enc_wx", 4 * H, D);
  set(Block::kEncWh, "enc_wh", 4 * H, H);
  set(Block::kEncB, "enc_b", 4 * H, 1);
  set(Block::kDecWx, "dec_wx", 4 * H, D);
  set(Block::kDecWh, "dec_wh", 4 * H, H);
  set(Block::kDecB, "dec_b", 4 * H, 1);
  set(Block::kAttWd, "att_wd", A, H);
  set(Block::kAttWe, "att_we", A, H);
  set(Block::kAttV, "att_v", A, 1);
  set(Block::kOutW, "out_w", V, out_in);
  set(Block::kOutB, "out_b", V, 1);
  std::size_t offset = 0;
  for (auto& b : blocks_) {
    b.offset = offset;
    offset += b.size();
  }
  data_.assign(offset, 0.0);
}

ModelParams ModelParams::random(const ModelDims& dims, double scale, std::uint64_t seed) {
  ModelParams p(dims);
  RngStream rng(seed);
  for (double& v : p.data_) v = (2.0 * rng.uniform() - 1.0) * scale;
  return p;
}

void ModelParams::set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

void ModelParams::add_scaled(const ModelParams& other, double scale) {
  if (!(dims_ == other.dims_)) throw DimensionError("ModelParams::add_scaled: dims differ");
  axpy(scale, other.data_, data_);
}

double ModelParams::norm() const { return std::sqrt(dot(data_, data_)); }

bool ModelParams::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::uint64_t ModelParams::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const std::uint64_t dims[4] = {dims_.vocab, dims_.embed, dims_.hidden, dims_.attention ? 1u : 0u};
  h = fnv1a64({reinterpret_cast<const char*>(dims), sizeof(dims)}, h);
  h = fnv1a64({reinterpret_cast<const char*>(data_.data()), data_.size() * sizeof(double)}, h);
  return h;
}

bool ModelParams::operator==(const ModelParams& other) const {
  if (!(dims_ == other.dims_) || data_.size() != other.data_.size()) return false;
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(data_[i]) != std::bit_cast<std::uint64_t>(other.data_[i])) return false;
  }
  return true;
}

namespace {

struct LstmWeights {
  std::span<const double> wx, wh, b;
};

LstmWeights encoder_weights(const ModelParams& p) {
  return {p.block(Block::kEncWx), p.block(Block::kEncWh), p.block(Block::kEncB)};
}
LstmWeights decoder_weights(const ModelParams& p) {
  return {p.block(Block::kDecWx), p.block(Block::kDecWh), p.block(Block::kDecB)};
}

std::span<const double> embedding_row(const ModelParams& p, TokenId id) {
  const std::size_t D = p.dims().embed;
  if (id < 0 || static_cast<std::size_t>(id) >= p.dims().vocab) {
    throw DomainError("token id " + std::to_string(id) + " outside model vocabulary");
  }
  return p.block(Block::kEmbedding).subspan(static_cast<std::size_t>(id) * D, D);
}

// Gates are stored activated, in [i, f, g, o] order.
void lstm_forward(const LstmWeights& w, std::span<const double> x, std::span<const double> h_prev,
                  std::span<const double> c_prev, std::span<double> gates, std::span<double> c,
                  std::span<double> tanh_c, std::span<double> h) {
  const std::size_t H = h.size();
  std::copy(w.b.begin(), w.b.end(), gates.begin());
  gemv_acc(w.wx, x, gates);
  gemv_acc(w.wh, h_prev, gates);
  for (std::size_t k = 0; k < H; ++k) {
    const double i = sigmoid(gates[k]);
    const double f = sigmoid(gates[H + k]);
    const double g = std::tanh(gates[2 * H + k]);
    const double o = sigmoid(gates[3 * H + k]);
    gates[k] = i;
    gates[H + k] = f;
    gates[2 * H + k] = g;
    gates[3 * H + k] = o;
    c[k] = f * c_prev[k] + i * g;
    tanh_c[k] = std::tanh(c[k]);
    h[k] = o * tanh_c[k];
  }
}

// Additive attention over encoder states for decoder hidden `s`. Writes scores
// u (L x A, tanh-activated), weights alpha (L) and context (H).
void attend(const ModelParams& p, const EncoderOutput& enc, std::span<const double> s, std::span<double> u,
            std::span<double> alpha, std::span<double> ctx) {
  const std::size_t H = p.dims().hidden;
  const std::size_t A = H;
  const std::size_t L = enc.length;
  std::vector<double> wd_s(A, 0.0);
  gemv_acc(p.block(Block::kAttWd), s, wd_s);
  const auto v = p.block(Block::kAttV);
  for (std::size_t j = 0; j < L; ++j) {
    auto uj = u.subspan(j * A, A);
    const double* key = enc.projected.data() + j * A;
    for (std::size_t a = 0; a < A; ++a) uj[a] = std::tanh(wd_s[a] + key[a]);
    alpha[j] = dot(v, uj);
  }
  softmax_inplace(alpha.first(L));
  std::fill(ctx.begin(), ctx.end(), 0.0);
  for (std::size_t j = 0; j < L; ++j) axpy(alpha[j], std::span<const double>(enc.hidden).subspan(j * H, H), ctx);
}

void output_logits(const ModelParams& p, std::span<const double> s, std::span<const double> ctx,
                   std::span<double> logits) {
  const std::size_t H = p.dims().hidden;
  const auto b = p.block(Block::kOutB);
  std::copy(b.begin(), b.end(), logits.begin());
  if (!p.dims().attention) {
    gemv_acc(p.block(Block::kOutW), s, logits);
    return;
  }
  const std::size_t cols = 2 * H;
  const auto w = p.block(Block::kOutW);
  for (std::size_t r = 0; r < logits.size(); ++r) {
    const double* row = w.data() + r * cols;
    double acc = 0.0;
    for (std::size_t k = 0; k < H; ++k) acc += row[k] * s[k];
    for (std::size_t k = 0; k < H; ++k) acc += row[H + k] * ctx[k];
    logits[r] += acc;
  }
}

}  // namespace

EncoderOutput Seq2Seq::encode(std::span<const TokenId> source) const {
  if (source.empty()) throw DegenerateInputError("encode: empty source sequence");
  const std::size_t H = params_.dims().hidden;
  const std::size_t L = source.size();
  EncoderOutput out;
  out.length = L;
  out.hidden.assign(L * H, 0.0);
  std::vector<double> h(H, 0.0), c(H, 0.0), gates(4 * H), c_new(H), tanh_c(H);
  const auto w = encoder_weights(params_);
  for (std::size_t t = 0; t < L; ++t) {
    auto h_new = std::span<double>(out.hidden).subspan(t * H, H);
    lstm_forward(w, embedding_row(params_, source[t]), h, c, gates, c_new, tanh_c, h_new);
    std::copy(h_new.begin(), h_new.end(), h.begin());
    c.swap(c_new);
  }
  out.final_h = h;
  out.final_c = c;
  if (params_.dims().attention) {
    out.projected.assign(L * H, 0.0);
    for (std::size_t j = 0; j < L; ++j) {
      gemv_acc(params_.block(Block::kAttWe), std::span<const double>(out.hidden).subspan(j * H, H),
               std::span<double>(out.projected).subspan(j * H, H));
    }
  }
  return out;
}

Seq2Seq::State Seq2Seq::initial_state(const EncoderOutput& enc) const { return {enc.final_h, enc.final_c}; }

void Seq2Seq::step(const EncoderOutput& enc, const State& in, TokenId input, State& out,
                   std::span<double> log_probs) const {
  const std::size_t H = params_.dims().hidden;
  const std::size_t V = params_.dims().vocab;
  if (log_probs.size() != V) throw DimensionError("Seq2Seq::step: log_probs must have vocab size");
  std::vector<double> gates(4 * H), tanh_c(H);
  out.h.resize(H);
  out.c.resize(H);
  lstm_forward(decoder_weights(params_), embedding_row(params_, input), in.h, in.c, gates, out.c, tanh_c, out.h);
  std::vector<double> ctx;
  if (params_.dims().attention) {
    std::vector<double> u(enc.length * H), alpha(enc.length);
    ctx.assign(H, 0.0);
    attend(params_, enc, out.h, u, alpha, ctx);
  }
  std::vector<double> logits(V);
  output_logits(params_, out.h, ctx, logits);
  log_softmax(logits, log_probs);
}

std::vector<double> Seq2Seq::step_log_probs(const EncoderOutput& enc, std::span<const TokenId> target) const {
  State state = initial_state(enc), next;
  std::vector<double> lp(vocab_size());
  std::vector<double> out;
  out.reserve(target.size());
  TokenId input = kBos;
  for (TokenId y : target) {
    if (y < 0 || static_cast<std::size_t>(y) >= vocab_size()) throw DomainError("target id outside vocabulary");
    step(enc, state, input, next, lp);
    out.push_back(std::max(lp[static_cast<std::size_t>(y)], std::log(kProbFloor)));
    std::swap(state, next);
    input = y;
  }
  return out;
}

std::vector<double> Seq2Seq::step_log_probs(std::span<const TokenId> source,
                                            std::span<const TokenId> target) const {
  return step_log_probs(encode(source), target);
}

double Seq2Seq::log_prob(const EncoderOutput& enc, std::span<const TokenId> target) const {
  const auto steps = step_log_probs(enc, target);
  return std::accumulate(steps.begin(), steps.end(), 0.0);
}

double Seq2Seq::log_prob(std::span<const TokenId> source, std::span<const TokenId> target) const {
  return log_prob(encode(source), target);
}

EncoderOutput encode_state(const DialogueState& state, const Vocab& vocab, const ModelParams& params) {
  return Seq2Seq(params).encode(source_ids(state, vocab));
}

std::vector<double> utterance_representation(const Utterance& u, const ModelParams& params) {
  const auto c = u.content();
  if (c.empty()) {
    // A bare EOS still has a representation: encode the EOS token itself.
    const TokenId eos[1] = {kEos};
    return Seq2Seq(params).encode(eos).final_h;
  }
  return Seq2Seq(params).encode(c).final_h;
}

double log_prob(const Utterance& target, std::span<const TokenId> source, const ModelParams& params) {
  return Seq2Seq(params).log_prob(source, target.ids);
}

double log_prob(const Utterance& target, const DialogueState& source, const Vocab& vocab,
                const ModelParams& params) {
  return log_prob(target, source_ids(source, vocab), params);
}

double backward_log_prob(const Utterance& previous, const Utterance& action, const ModelParams& backward_params) {
  auto src = action.content();
  const TokenId eos[1] = {kEos};
  if (src.empty()) src = eos;
  return Seq2Seq(backward_params).log_prob(src, previous.terminated().ids);
}

// ---------------------------------------------------------------------------
// Training gradient: teacher-forced forward pass with caches, then BPTT.

namespace {

struct StepCache {
  std::vector<double> h_prev, c_prev, gates, c, tanh_c, h;
  void resize(std::size_t H) {
    h_prev.resize(H);
    c_prev.resize(H);
    gates.resize(4 * H);
    c.resize(H);
    tanh_c.resize(H);
    h.resize(H);
  }
};

// Backprop through one LSTM step. `dh` and `dc` are the incoming gradients on
// the step's outputs; on return they hold the gradients for h_prev and c_prev.
void lstm_backward(const LstmWeights& w, std::span<double> g_wx, std::span<double> g_wh, std::span<double> g_b,
                   std::span<double> g_x, std::span<const double> x, const StepCache& s, std::vector<double>& dh,
                   std::vector<double>& dc, std::vector<double>& da) {
  const std::size_t H = dh.size();
  for (std::size_t k = 0; k < H; ++k) {
    const double i = s.gates[k], f = s.gates[H + k], g = s.gates[2 * H + k], o = s.gates[3 * H + k];
    const double d_o = dh[k] * s.tanh_c[k];
    const double d_c = dc[k] + dh[k] * o * (1.0 - s.tanh_c[k] * s.tanh_c[k]);
    da[k] = d_c * g * i * (1.0 - i);
    da[H + k] = d_c * s.c_prev[k] * f * (1.0 - f);
    da[2 * H + k] = d_c * i * (1.0 - g * g);
    da[3 * H + k] = d_o * o * (1.0 - o);
    dc[k] = d_c * f;
  }
  outer_acc(g_wx, da, x);
  outer_acc(g_wh, da, s.h_prev);
  axpy(1.0, da, g_b);
  gemv_t_acc(w.wx, da, g_x);
  std::fill(dh.begin(), dh.end(), 0.0);
  gemv_t_acc(w.wh, da, dh);
}

}  // namespace

double accumulate_sequence_gradient(const ModelParams& params, std::span<const TokenId> source,
                                    std::span<const TokenId> target, double coef, Gradient& grad) {
  if (!(grad.dims() == params.dims())) throw DimensionError("gradient dims differ from params");
  if (source.empty()) throw DegenerateInputError("empty source sequence");
  if (target.empty()) throw DegenerateInputError("empty target sequence");
  const auto& dims = params.dims();
  const std::size_t H = dims.hidden, V = dims.vocab, D = dims.embed;
  const bool att = dims.attention;
  const std::size_t L = source.size(), T = target.size();
  for (TokenId y : target) {
    if (y < 0 || static_cast<std::size_t>(y) >= V) throw DomainError("target id outside vocabulary");
  }

  // Encoder forward.
  EncoderOutput enc;
  enc.length = L;
  enc.hidden.assign(L * H, 0.0);
  std::vector<StepCache> ec(L);
  const auto ew = encoder_weights(params);
  for (std::size_t t = 0; t < L; ++t) {
    auto& s = ec[t];
    s.resize(H);
    if (t > 0) {
      s.h_prev = ec[t - 1].h;
      s.c_prev = ec[t - 1].c;
    }
    lstm_forward(ew, embedding_row(params, source[t]), s.h_prev, s.c_prev, s.gates, s.c, s.tanh_c, s.h);
    std::copy(s.h.begin(), s.h.end(), enc.hidden.begin() + static_cast<std::ptrdiff_t>(t * H));
  }
  if (att) {
    enc.projected.assign(L * H, 0.0);
    for (std::size_t j = 0; j < L; ++j) {
      gemv_acc(params.block(Block::kAttWe), std::span<const double>(enc.hidden).subspan(j * H, H),
               std::span<double>(enc.projected).subspan(j * H, H));
    }
  }

  // Decoder forward.
  std::vector<StepCache> dcache(T);
  std::vector<double> probs(T * V);
  std::vector<double> att_u(att ? T * L * H : 0), att_alpha(att ? T * L : 0), att_ctx(att ? T * H : 0);
  const auto dw = decoder_weights(params);
  double total_log_prob = 0.0;
  std::vector<double> logits(V);
  for (std::size_t t = 0; t < T; ++t) {
    auto& s = dcache[t];
    s.resize(H);
    s.h_prev = t == 0 ? ec[L - 1].h : dcache[t - 1].h;
    s.c_prev = t == 0 ? ec[L - 1].c : dcache[t - 1].c;
    const TokenId input = t == 0 ? kBos : target[t - 1];
    lstm_forward(dw, embedding_row(params, input), s.h_prev, s.c_prev, s.gates, s.c, s.tanh_c, s.h);
    std::span<double> ctx;
    if (att) {
      ctx = std::span<double>(att_ctx).subspan(t * H, H);
      attend(params, enc, s.h, std::span<double>(att_u).subspan(t * L * H, L * H),
             std::span<double>(att_alpha).subspan(t * L, L), ctx);
    }
    output_logits(params, s.h, ctx, logits);
    auto p = std::span<double>(probs).subspan(t * V, V);
    std::copy(logits.begin(), logits.end(), p.begin());
    softmax_inplace(p);
    total_log_prob += clamped_log(p[static_cast<std::size_t>(target[t])]);
  }

  // Backward.
  auto g_emb = grad.block(Block::kEmbedding);
  auto g_out_w = grad.block(Block::kOutW);
  auto g_out_b = grad.block(Block::kOutB);
  const auto out_w = params.block(Block::kOutW);
  const std::size_t out_cols = att ? 2 * H : H;
  std::vector<double> d_enc_h(L * H, 0.0);
  std::vector<double> dh(H, 0.0), dc(H, 0.0), da(4 * H), dlogits(V), d_out_in(out_cols), out_in(out_cols);
  std::vector<double> dalpha(L), du(H);
  for (std::size_t tt = T; tt-- > 0;) {
    const auto& s = dcache[tt];
    const auto p = std::span<const double>(probs).subspan(tt * V, V);
    for (std::size_t v = 0; v < V; ++v) dlogits[v] = coef * p[v];
    dlogits[static_cast<std::size_t>(target[tt])] -= coef;

    std::copy(s.h.begin(), s.h.end(), out_in.begin());
    if (att) std::copy_n(att_ctx.begin() + static_cast<std::ptrdiff_t>(tt * H), H, out_in.begin() + static_cast<std::ptrdiff_t>(H));
    outer_acc(g_out_w, dlogits, out_in);
    axpy(1.0, dlogits, g_out_b);
    std::fill(d_out_in.begin(), d_out_in.end(), 0.0);
    gemv_t_acc(out_w, dlogits, d_out_in);
    for (std::size_t k = 0; k < H; ++k) dh[k] += d_out_in[k];

    if (att) {
      const auto alpha = std::span<const double>(att_alpha).subspan(tt * L, L);
      const auto u = std::span<const double>(att_u).subspan(tt * L * H, L * H);
      const auto dctx = std::span<const double>(d_out_in).subspan(H, H);
      const auto v = params.block(Block::kAttV);
      double weighted = 0.0;
      for (std::size_t j = 0; j < L; ++j) {
        const auto hj = std::span<const double>(enc.hidden).subspan(j * H, H);
        dalpha[j] = dot(dctx, hj);
        weighted += alpha[j] * dalpha[j];
        axpy(alpha[j], dctx, std::span<double>(d_enc_h).subspan(j * H, H));
      }
      for (std::size_t j = 0; j < L; ++j) {
        const double de = alpha[j] * (dalpha[j] - weighted);
        const auto uj = u.subspan(j * H, H);
        axpy(de, uj, grad.block(Block::kAttV));
        for (std::size_t a = 0; a < H; ++a) du[a] = de * v[a] * (1.0 - uj[a] * uj[a]);
        outer_acc(grad.block(Block::kAttWd), du, s.h);
        gemv_t_acc(params.block(Block::kAttWd), du, dh);
        const auto hj = std::span<const double>(enc.hidden).subspan(j * H, H);
        outer_acc(grad.block(Block::kAttWe), du, hj);
        gemv_t_acc(params.block(Block::kAttWe), du, std::span<double>(d_enc_h).subspan(j * H, H));
      }
    }

    const TokenId input = tt == 0 ? kBos : target[tt - 1];
    lstm_backward(dw, grad.block(Block::kDecWx), grad.block(Block::kDecWh), grad.block(Block::kDecB),
                  g_emb.subspan(static_cast<std::size_t>(input) * D, D), embedding_row(params, input), s, dh, dc, da);
  }

  // dh, dc now hold gradients on the final encoder state.
  for (std::size_t tt = L; tt-- > 0;) {
    axpy(1.0, std::span<const double>(d_enc_h).subspan(tt * H, H), dh);
    lstm_backward(ew, grad.block(Block::kEncWx), grad.block(Block::kEncWh), grad.block(Block::kEncB),
                  g_emb.subspan(static_cast<std::size_t>(source[tt]) * D, D), embedding_row(params, source[tt]),
                  ec[tt], dh, dc, da);
  }
  return total_log_prob;
}

double clip_gradient(Gradient& grad, double max_norm) {
  const double n = grad.norm();
  if (n > max_norm && n > 0.0) {
    const double s = max_norm / n;
    for (double& v : grad.flat()) v *= s;
  }
  return n;
}

void sgd_step(ModelParams& params, const Gradient& grad, double learning_rate) {
  params.add_scaled(grad, -learning_rate);
}

std::vector<WeightedSequence> forward_examples(std::span<const TrainingPair> pairs, const Vocab& vocab) {
  std::vector<WeightedSequence> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back({source_ids(p.state, vocab), p.target.terminated().ids, 1.0});
  return out;
}

std::vector<WeightedSequence> backward_examples(std::span<const TrainingPair> pairs) {
  std::vector<WeightedSequence> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    const auto c = p.target.content();
    std::vector<TokenId> src(c.begin(), c.end());
    if (src.empty()) src.push_back(kEos);
    out.push_back({std::move(src), p.state.last.terminated().ids, 1.0});
  }
  return out;
}

double mean_token_nll(const ModelParams& params, std::span<const WeightedSequence> examples) {
  if (examples.empty()) throw DomainError("mean_token_nll: no examples");
  const auto lps = batch_log_probs(params, examples);
  double total = 0.0;
  std::size_t tokens = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    total -= lps[i];
    tokens += examples[i].target.size();
  }
  return total / static_cast<double>(tokens);
}

double mle_gradient(const ModelParams& params, std::span<const WeightedSequence> examples, Gradient& grad,
                    ExecPolicy policy) {
  if (examples.empty()) throw DomainError("mle_gradient: no examples");
  std::size_t tokens = 0;
  for (const auto& e : examples) tokens += e.target.size();
  std::vector<WeightedSequence> weighted(examples.begin(), examples.end());
  for (auto& e : weighted) e.coef = 1.0 / static_cast<double>(tokens);
  return batch_gradient(params, weighted, grad, policy);
}

MleResult train_mle(std::span<const WeightedSequence> examples, ModelParams params, const HyperConfig& hyper,
                    std::uint64_t seed) {
  hyper.validate();
  if (examples.empty()) throw DomainError("train_mle: empty training set");
  RngStream rng(seed);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  Gradient grad(params.dims());
  MleResult result;
  std::vector<WeightedSequence> batch;
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
    double epoch_nll = 0.0;
    std::size_t epoch_tokens = 0;
    for (std::size_t start = 0; start < order.size(); start += hyper.batch_size) {
      const std::size_t end = std::min(order.size(), start + hyper.batch_size);
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(examples[order[k]]);
      std::size_t tokens = 0;
      for (const auto& e : batch) tokens += e.target.size();
      const double loss = mle_gradient(params, batch, grad);
      if (!std::isfinite(loss) || !grad.all_finite()) {
        throw NumericError("train_mle: non-finite loss at epoch " + std::to_string(epoch) + ", batch starting " +
                           std::to_string(start) + " (loss=" + std::to_string(loss) +
                           ", grad norm=" + std::to_string(grad.norm()) + ")");
      }
      clip_gradient(grad, hyper.clip_norm);
      sgd_step(params, grad, hyper.learning_rate);
      epoch_nll += loss * static_cast<double>(tokens);
      epoch_tokens += tokens;
    }
    result.epoch_loss.push_back(epoch_nll / static_cast<double>(epoch_tokens));
  }
  result.params = std::move(params);
  return result;
}

}  // namespace s2srl
