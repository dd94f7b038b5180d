#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "s2srl/core_math.hpp"
#include "s2srl/vocab_corpus.hpp"

namespace s2srl {

struct HyperConfig {
  std::size_t embed_dim = 32;
  std::size_t hidden_dim = 64;
  double learning_rate = 2.0;
  double clip_norm = 5.0;
  std::size_t batch_size = 8;
  std::size_t epochs = 12;
  std::size_t beam_width = 10;
  std::size_t max_decode_len = 16;
  bool attention = true;
  double init_scale = 0.08;

  void validate() const;
};

struct ModelDims {
  std::size_t vocab = 0;
  std::size_t embed = 0;
  std::size_t hidden = 0;
  bool attention = false;

  bool operator==(const ModelDims&) const = default;
};

enum class Block : std::size_t {
  kEmbedding,
  kEncWx,
  kEncWh,
  kEncB,
  kDecWx,
  kDecWh,
  kDecB,
  kAttWd,
  kAttWe,
  kAttV,
  kOutW,
  kOutB,
  kCount
};

struct BlockInfo {
  const char* name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;
  std::size_t size() const { return rows * cols; }
};

/// All weights of one encoder-decoder network, stored in a single flat buffer.
/// Gradients use the same type and layout. Blocks appear in the buffer (and in
/// checkpoints) in `Block` order; attention blocks are empty when disabled.
class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(const ModelDims& dims);

  static ModelParams random(const ModelDims& dims, double scale, std::uint64_t seed);

  const ModelDims& dims() const { return dims_; }
  const BlockInfo& info(Block b) const { return blocks_[static_cast<std::size_t>(b)]; }
  const std::array<BlockInfo, static_cast<std::size_t>(Block::kCount)>& blocks() const { return blocks_; }

  std::span<double> block(Block b) {
    const auto& i = info(b);
    return {data_.data() + i.offset, i.size()};
  }
  std::span<const double> block(Block b) const {
    const auto& i = info(b);
    return {data_.data() + i.offset, i.size()};
  }
  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }
  std::size_t size() const { return data_.size(); }

  void set_zero();
  void add_scaled(const ModelParams& other, double scale);
  double norm() const;
  bool all_finite() const;
  /// FNV-1a over dims and raw bytes; ties episodes to the policy that produced them.
  std::uint64_t hash() const;

  bool operator==(const ModelParams& other) const;

 private:
  ModelDims dims_;
  std::array<BlockInfo, static_cast<std::size_t>(Block::kCount)> blocks_{};
  std::vector<double> data_;
};

using Gradient = ModelParams;

/// Encoder pass over a source sequence. Keeps every hidden state for attention.
struct EncoderOutput {
  std::size_t length = 0;
  std::vector<double> hidden;     // length x H
  std::vector<double> projected;  // length x H, attention keys W_e h_j (attention only)
  std::vector<double> final_h;
  std::vector<double> final_c;
};

/// Read-only view of a model for inference.
class Seq2Seq {
 public:
  struct State {
    std::vector<double> h;
    std::vector<double> c;
  };

  explicit Seq2Seq(const ModelParams& params) : params_(params) {}

  const ModelParams& params() const { return params_; }
  std::size_t vocab_size() const { return params_.dims().vocab; }

  EncoderOutput encode(std::span<const TokenId> source) const;
  State initial_state(const EncoderOutput& enc) const;
  /// Feeds `input` and writes log-probabilities of the next token into `log_probs`.
  void step(const EncoderOutput& enc, const State& in, TokenId input, State& out,
            std::span<double> log_probs) const;
  /// Teacher-forced sum of per-token log-probabilities of `target`.
  double log_prob(std::span<const TokenId> source, std::span<const TokenId> target) const;
  /// Per-step log-probabilities of each target token.
  std::vector<double> step_log_probs(std::span<const TokenId> source, std::span<const TokenId> target) const;
  std::vector<double> step_log_probs(const EncoderOutput& enc, std::span<const TokenId> target) const;
  /// Teacher-forced log-probability against an already encoded source.
  double log_prob(const EncoderOutput& enc, std::span<const TokenId> target) const;

 private:
  const ModelParams& params_;
};

// Public operations over the model.
EncoderOutput encode_state(const DialogueState& state, const Vocab& vocab, const ModelParams& params);
/// Final encoder hidden vector of a single utterance (the representation used
/// to compare turns of the same agent).
std::vector<double> utterance_representation(const Utterance& u, const ModelParams& params);

double log_prob(const Utterance& target, const DialogueState& source, const Vocab& vocab,
                const ModelParams& params);
double log_prob(const Utterance& target, std::span<const TokenId> source, const ModelParams& params);
double backward_log_prob(const Utterance& previous, const Utterance& action,
                         const ModelParams& backward_params);

/// Accumulates coef * d(-log p(target | source)) into `grad`; returns log p(target | source).
double accumulate_sequence_gradient(const ModelParams& params, std::span<const TokenId> source,
                                    std::span<const TokenId> target, double coef, Gradient& grad);

/// One weighted teacher-forced sequence: the loss term is coef * (-log p(target | source)).
struct WeightedSequence {
  std::vector<TokenId> source;
  std::vector<TokenId> target;
  double coef = 1.0;
};

enum class ExecPolicy { kSerial, kParallel };

/// Sums the gradients of every item into `grad` (which is zeroed first) and
/// returns sum_i coef_i * (-log p_i). The serial path accumulates in place; the
/// parallel path accumulates fixed-size chunks into separate buffers in an OpenMP
/// loop and reduces them in chunk order, so its result does not depend on the
/// thread count.
double batch_gradient(const ModelParams& params, std::span<const WeightedSequence> items, Gradient& grad,
                      ExecPolicy policy = ExecPolicy::kParallel);

/// Log-probabilities of each item's target, optionally in parallel.
std::vector<double> batch_log_probs(const ModelParams& params, std::span<const WeightedSequence> items,
                                    ExecPolicy policy = ExecPolicy::kParallel);

/// Rescales `grad` so its norm is at most `max_norm`; returns the pre-clip norm.
double clip_gradient(Gradient& grad, double max_norm);
void sgd_step(ModelParams& params, const Gradient& grad, double learning_rate);

struct MleResult {
  ModelParams params;
  std::vector<double> epoch_loss;  // mean per-token NLL per epoch
};

/// Teacher-forced examples for the forward model: source = state, target = reply + EOS.
std::vector<WeightedSequence> forward_examples(std::span<const TrainingPair> pairs, const Vocab& vocab);
/// Swapped examples for the backward model: source = reply tokens, target = last turn + EOS.
std::vector<WeightedSequence> backward_examples(std::span<const TrainingPair> pairs);

/// Mean per-token NLL of `examples` (coefs ignored).
double mean_token_nll(const ModelParams& params, std::span<const WeightedSequence> examples);
/// Gradient of the mean per-token NLL of `examples`; returns the loss.
double mle_gradient(const ModelParams& params, std::span<const WeightedSequence> examples, Gradient& grad,
                    ExecPolicy policy = ExecPolicy::kParallel);

/// Mini-batch SGD with gradient-norm clipping on mean per-token NLL. Batches are
/// drawn from a seeded shuffle each epoch. Throws NumericError on a non-finite loss.
MleResult train_mle(std::span<const WeightedSequence> examples, ModelParams params, const HyperConfig& hyper,
                    std::uint64_t seed);

struct Hypothesis {
  Utterance utterance;  // ends with EOS unless cut at max_len
  double score = 0.0;   // total log-probability
};

std::vector<Hypothesis> beam_search(std::span<const TokenId> source, const ModelParams& params,
                                    std::size_t width, std::size_t max_len);
Utterance greedy_decode(std::span<const TokenId> source, const ModelParams& params, std::size_t max_len);
/// Below this temperature sampling falls back to argmax.
inline constexpr double kArgmaxTemperature = 1e-6;
Utterance sample_decode(std::span<const TokenId> source, const ModelParams& params, RngStream& rng,
                        double temperature, std::size_t max_len);

// Checkpoints.
struct CheckpointError : Error {
  using Error::Error;
};
struct CheckpointFormatError : CheckpointError {
  using CheckpointError::CheckpointError;
};
struct UnsupportedVersionError : CheckpointError {
  using CheckpointError::CheckpointError;
};
struct TruncatedCheckpointError : CheckpointError {
  using CheckpointError::CheckpointError;
};

inline constexpr std::string_view kCheckpointMagic = "S2SRL1\n";
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams params;
  std::string direction = "forward";  // forward | backward
  std::uint64_t vocab_hash = 0;
  std::string stage;                  // mle | backward | mi | rl (informational)
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace s2srl
