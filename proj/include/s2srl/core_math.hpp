#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace s2srl {

// Error hierarchy shared by every module.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimensionError : Error {
  using Error::Error;
};
struct DegenerateInputError : Error {
  using Error::Error;
};
struct DomainError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct NumericError : Error {
  using Error::Error;
};

/// Probabilities are clamped to this floor before any logarithm.
inline constexpr double kProbFloor = 1e-12;

/// Dense vector of doubles. Size is fixed at construction and every value is
/// checked to be finite when the vector is built from external data.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t n, double fill = 0.0);
  Vector(std::initializer_list<double> values);
  explicit Vector(std::vector<double> values);

  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> span() { return data_; }
  std::span<const double> span() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  double dot(const Vector& other) const;
  double norm() const;
  Vector operator+(const Vector& other) const;
  Vector operator-(const Vector& other) const;
  Vector operator*(double s) const;

  bool operator==(const Vector&) const = default;

 private:
  std::vector<double> data_;
};

/// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> span() const { return data_; }

  Vector operator*(const Vector& x) const;
  Vector transpose_times(const Vector& y) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Counter-based generator. Draw k (0-based) of a stream with seed s is
/// splitmix64_mix(s + (k + 1) * 0x9E3779B97F4A7C15), so the whole sequence is a
/// pure function of (seed, counter) with no platform-dependent state.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  /// Uniform integer in [0, n).
  std::size_t uniform_index(std::size_t n);
  /// Independent child stream keyed by `stream_id`.
  RngStream derive(std::uint64_t stream_id) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64_mix(std::uint64_t z);

Vector softmax(const Vector& logits);
/// In-place max-shifted softmax over a raw span.
void softmax_inplace(std::span<double> values);
/// log-softmax written into `out` (same size as `logits`).
void log_softmax(std::span<const double> logits, std::span<double> out);

double cosine_similarity(const Vector& u, const Vector& v);
double cosine_similarity(std::span<const double> u, std::span<const double> v);

double nll(const Vector& probs, std::size_t target_index);
double clamped_log(double p);

std::size_t sample_categorical(const Vector& probs, RngStream& rng);
std::size_t sample_categorical(std::span<const double> probs, RngStream& rng);

using ScalarField = std::function<double(const Vector&)>;
using GradientField = std::function<Vector(const Vector&)>;

/// Max over coordinates of |analytic - central difference| / max(1, |central difference|).
double finite_difference_check(const ScalarField& f, const GradientField& grad_f, const Vector& x,
                               double eps);
/// Same check when the analytic gradient is already computed.
double finite_difference_check(const ScalarField& f, const Vector& analytic, const Vector& x,
                               double eps);

// Raw kernels used by the model code. All spans are row-major.
// y += W x, W is (y.size() x x.size())
void gemv_acc(std::span<const double> w, std::span<const double> x, std::span<double> y);
// x += W^T y
void gemv_t_acc(std::span<const double> w, std::span<const double> y, std::span<double> x);
// W += y x^T
void outer_acc(std::span<double> w, std::span<const double> y, std::span<const double> x);
void axpy(double a, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> a, std::span<const double> b);

inline double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace s2srl
