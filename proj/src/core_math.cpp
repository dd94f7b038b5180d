#include "s2srl/core_math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace s2srl {

namespace {

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError(std::string(what) + ": non-finite value");
  }
}

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": size mismatch " + std::to_string(a) + " vs " +
                         std::to_string(b));
  }
}

}  // namespace

Vector::Vector(std::size_t n, double fill) : data_(n, fill) { require_finite(data_, "Vector"); }

Vector::Vector(std::initializer_list<double> values) : data_(values) {
  require_finite(data_, "Vector");
}

Vector::Vector(std::vector<double> values) : data_(std::move(values)) {
  require_finite(data_, "Vector");
}

double Vector::dot(const Vector& other) const {
  require_same_size(size(), other.size(), "Vector::dot");
  return s2srl::dot(data_, other.data_);
}

double Vector::norm() const { return std::sqrt(s2srl::dot(data_, data_)); }

Vector Vector::operator+(const Vector& other) const {
  require_same_size(size(), other.size(), "Vector::operator+");
  std::vector<double> out(data_);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += other.data_[i];
  return Vector(std::move(out));
}

Vector Vector::operator-(const Vector& other) const {
  require_same_size(size(), other.size(), "Vector::operator-");
  std::vector<double> out(data_);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= other.data_[i];
  return Vector(std::move(out));
}

Vector Vector::operator*(double s) const {
  std::vector<double> out(data_);
  for (double& v : out) v *= s;
  return Vector(std::move(out));
}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  require_finite(data_, "Matrix");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  require_same_size(rows * cols, data_.size(), "Matrix");
  require_finite(data_, "Matrix");
}

Vector Matrix::operator*(const Vector& x) const {
  require_same_size(cols_, x.size(), "Matrix::operator*");
  std::vector<double> y(rows_, 0.0);
  gemv_acc(data_, x.span(), y);
  return Vector(std::move(y));
}

Vector Matrix::transpose_times(const Vector& y) const {
  require_same_size(rows_, y.size(), "Matrix::transpose_times");
  std::vector<double> x(cols_, 0.0);
  gemv_t_acc(data_, y.span(), x);
  return Vector(std::move(x));
}

std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t RngStream::next_u64() {
  ++counter_;
  return splitmix64_mix(seed_ + counter_ * 0x9E3779B97F4A7C15ULL);
}

double RngStream::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::size_t RngStream::uniform_index(std::size_t n) {
  if (n == 0) throw DomainError("uniform_index: empty range");
  // Lemire-style rejection keeps the draw unbiased.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return static_cast<std::size_t>(x % bound);
}

RngStream RngStream::derive(std::uint64_t stream_id) const {
  return RngStream(splitmix64_mix(seed_ ^ splitmix64_mix(stream_id + 0x632BE59BD9B4E019ULL)));
}

void softmax_inplace(std::span<double> values) {
  if (values.empty()) throw DimensionError("softmax: empty input");
  const double mx = *std::max_element(values.begin(), values.end());
  double total = 0.0;
  for (double& v : values) {
    v = std::exp(v - mx);
    total += v;
  }
  for (double& v : values) v /= total;
}

Vector softmax(const Vector& logits) {
  if (logits.empty()) throw DimensionError("softmax: empty input");
  std::vector<double> out(logits.values());
  softmax_inplace(out);
  return Vector(std::move(out));
}

void log_softmax(std::span<const double> logits, std::span<double> out) {
  if (logits.empty()) throw DimensionError("log_softmax: empty input");
  require_same_size(logits.size(), out.size(), "log_softmax");
  const double mx = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double v : logits) total += std::exp(v - mx);
  const double lse = mx + std::log(total);
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  require_same_size(u.size(), v.size(), "cosine_similarity");
  const double uu = dot(u, u);
  const double vv = dot(v, v);
  if (uu == 0.0 || vv == 0.0) throw DegenerateInputError("cosine_similarity: zero-norm vector");
  // sqrt(x * x) == x in IEEE arithmetic, so cos(h, h) is exactly 1.
  const double c = dot(u, v) / std::sqrt(uu * vv);
  return std::clamp(c, -1.0, 1.0);
}

double cosine_similarity(const Vector& u, const Vector& v) {
  return cosine_similarity(u.span(), v.span());
}

double clamped_log(double p) { return std::log(std::clamp(p, kProbFloor, 1.0)); }

double nll(const Vector& probs, std::size_t target_index) {
  if (target_index >= probs.size()) throw DomainError("nll: target index out of range");
  return -clamped_log(probs[target_index]);
}

std::size_t sample_categorical(std::span<const double> probs, RngStream& rng) {
  if (probs.empty()) throw DimensionError("sample_categorical: empty distribution");
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw DomainError("sample_categorical: negative or NaN probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-6) throw DomainError("sample_categorical: probabilities do not sum to 1");
  const double u = rng.uniform() * total;
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) last_positive = i;
    cumulative += probs[i];
    if (u < cumulative) return i;
  }
  return last_positive;
}

std::size_t sample_categorical(const Vector& probs, RngStream& rng) {
  return sample_categorical(probs.span(), rng);
}

double finite_difference_check(const ScalarField& f, const Vector& analytic, const Vector& x,
                               double eps) {
  if (!(eps > 0.0 && eps <= 1e-2)) throw DomainError("finite_difference_check: eps must be in (0, 1e-2]");
  require_same_size(analytic.size(), x.size(), "finite_difference_check");
  std::vector<double> probe(x.values());
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + eps;
    const double plus = f(Vector(probe));
    probe[i] = saved - eps;
    const double minus = f(Vector(probe));
    probe[i] = saved;
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw NumericError("finite_difference_check: non-finite f at probe point " + std::to_string(i));
    }
    const double central = (plus - minus) / (2.0 * eps);
    const double err = std::abs(analytic[i] - central) / std::max(1.0, std::abs(central));
    worst = std::max(worst, err);
  }
  return worst;
}

double finite_difference_check(const ScalarField& f, const GradientField& grad_f, const Vector& x,
                               double eps) {
  return finite_difference_check(f, grad_f(x), x, eps);
}

void gemv_acc(std::span<const double> w, std::span<const double> x, std::span<double> y) {
  const std::size_t cols = x.size();
  const double* row = w.data();
  for (std::size_t r = 0; r < y.size(); ++r, row += cols) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] += acc;
  }
}

void gemv_t_acc(std::span<const double> w, std::span<const double> y, std::span<double> x) {
  const std::size_t cols = x.size();
  const double* row = w.data();
  double* xp = x.data();
  for (std::size_t r = 0; r < y.size(); ++r, row += cols) {
    const double a = y[r];
    if (a == 0.0) continue;
    for (std::size_t c = 0; c < cols; ++c) xp[c] += a * row[c];
  }
}

void outer_acc(std::span<double> w, std::span<const double> y, std::span<const double> x) {
  const std::size_t cols = x.size();
  double* row = w.data();
  for (std::size_t r = 0; r < y.size(); ++r, row += cols) {
    const double a = y[r];
    if (a == 0.0) continue;
    for (std::size_t c = 0; c < cols; ++c) row[c] += a * x[c];
  }
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace s2srl
