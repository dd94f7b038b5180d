// Batch kernels. Each has a serial reference path and an OpenMP path; the
// parallel reduction runs in a fixed order so results are independent of the
// thread count.

#include <algorithm>

#include "s2srl/seq2seq_model.hpp"

namespace s2srl {

namespace {

double batch_gradient_serial(const ModelParams& params, std::span<const WeightedSequence> items, Gradient& grad) {
  double loss = 0.0;
  for (const auto& it : items) {
    const double lp = accumulate_sequence_gradient(params, it.source, it.target, it.coef, grad);
    loss -= it.coef * lp;
  }
  return loss;
}

// Items are grouped into fixed-size chunks; each chunk accumulates serially into
// its own buffer and the buffers are reduced in chunk order.
constexpr std::size_t kChunk = 4;

double batch_gradient_parallel(const ModelParams& params, std::span<const WeightedSequence> items,
                               Gradient& grad) {
  const std::size_t n = items.size();
  const std::size_t n_chunks = (n + kChunk - 1) / kChunk;
  std::vector<Gradient> partial(n_chunks, Gradient(params.dims()));
  std::vector<double> log_probs(n, 0.0);
  std::vector<std::string> errors(n_chunks);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t c = 0; c < n_chunks; ++c) {
    try {
      for (std::size_t i = c * kChunk; i < std::min(n, (c + 1) * kChunk); ++i) {
        log_probs[i] =
            accumulate_sequence_gradient(params, items[i].source, items[i].target, items[i].coef, partial[c]);
      }
    } catch (const std::exception& e) {
      errors[c] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw Error("batch_gradient: " + e);
  }
  for (const auto& g : partial) grad.add_scaled(g, 1.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) loss -= items[i].coef * log_probs[i];
  return loss;
}

}  // namespace

double batch_gradient(const ModelParams& params, std::span<const WeightedSequence> items, Gradient& grad,
                      ExecPolicy policy) {
  if (!(grad.dims() == params.dims())) grad = Gradient(params.dims());
  grad.set_zero();
  if (policy == ExecPolicy::kSerial || items.size() < 2) return batch_gradient_serial(params, items, grad);
  return batch_gradient_parallel(params, items, grad);
}

std::vector<double> batch_log_probs(const ModelParams& params, std::span<const WeightedSequence> items,
                                    ExecPolicy policy) {
  const std::size_t n = items.size();
  std::vector<double> out(n, 0.0);
  const Seq2Seq model(params);
  if (policy == ExecPolicy::kSerial) {
    for (std::size_t i = 0; i < n; ++i) out[i] = model.log_prob(items[i].source, items[i].target);
    return out;
  }
  std::vector<std::string> errors(n);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      out[i] = model.log_prob(items[i].source, items[i].target);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw Error("batch_log_probs: " + e);
  }
  return out;
}

}  // namespace s2srl
