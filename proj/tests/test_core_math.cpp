#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "s2srl/core_math.hpp"

using namespace s2srl;

TEST_CASE("softmax examples") {
  const Vector a = softmax(Vector{0, 0, 0});
  for (std::size_t i = 0; i < 3; ++i) CHECK(a[i] == doctest::Approx(1.0 / 3).epsilon(1e-12));

  const Vector b = softmax(Vector{std::log(2.0), 0});
  CHECK(std::abs(b[0] - 2.0 / 3) < 1e-12);
  CHECK(std::abs(b[1] - 1.0 / 3) < 1e-12);

  const Vector c = softmax(Vector{1000, 0});
  CHECK(c[0] == 1.0);
  CHECK(c[1] < 1e-300);
  CHECK(std::isfinite(c[1]));

  CHECK_THROWS_AS(softmax(Vector{}), DimensionError);
}

TEST_CASE("softmax sums to one and is shift invariant") {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> d(0.0, 20.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + gen() % 30;
    Vector x(n), shifted(n);
    const double c = d(gen);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = d(gen);
      shifted[i] = x[i] + c;
    }
    const Vector p = softmax(x), q = softmax(shifted);
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sum += p[i];
      CHECK(std::abs(p[i] - q[i]) < 1e-12);
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("cosine similarity examples and errors") {
  CHECK(cosine_similarity(Vector{1, 0}, Vector{1, 0}) == doctest::Approx(1.0));
  CHECK(cosine_similarity(Vector{1, 0}, Vector{0, 1}) == 0.0);
  CHECK(std::abs(cosine_similarity(Vector{1, 0}, Vector{1, 1}) - 0.7071067812) < 1e-10);
  CHECK_THROWS_AS(cosine_similarity(Vector{0, 0}, Vector{1, 1}), DegenerateInputError);
  CHECK_THROWS_AS(cosine_similarity(Vector{1, 0, 0}, Vector{1, 1}), DimensionError);
}

TEST_CASE("cosine similarity is symmetric and scale invariant") {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> d;
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + gen() % 16;
    Vector u(n), v(n);
    for (std::size_t i = 0; i < n; ++i) {
      u[i] = d(gen);
      v[i] = d(gen);
    }
    const double c = cosine_similarity(u, v);
    CHECK(c >= -1.0);
    CHECK(c <= 1.0);
    CHECK(std::abs(c - cosine_similarity(v, u)) < 1e-12);
    CHECK(std::abs(c - cosine_similarity(u * scale(gen), v * scale(gen))) < 1e-12);
  }
}

TEST_CASE("nll examples") {
  CHECK(std::abs(nll(Vector{0.25, 0.75}, 1) - 0.2876820724) < 1e-10);
  CHECK(nll(Vector{0, 1, 0}, 1) == 0.0);
  CHECK(std::abs(nll(Vector{0.25, 0.25, 0.25, 0.25}, 2) - 1.3862943611) < 1e-10);
  // Zero probability is clamped, never infinite.
  CHECK(std::abs(nll(Vector{1, 0}, 1) + std::log(kProbFloor)) < 1e-9);
  CHECK_THROWS_AS(nll(Vector{0.5, 0.5}, 2), DomainError);
}

TEST_CASE("sample_categorical") {
  RngStream rng(3);
  for (int i = 0; i < 100; ++i) CHECK(sample_categorical(Vector{1.0}, rng) == 0);

  RngStream a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(sample_categorical(Vector{0.5, 0.5}, a) == sample_categorical(Vector{0.5, 0.5}, b));

  RngStream r(5);
  int zeros = 0;
  for (int i = 0; i < 10000; ++i) zeros += sample_categorical(Vector{0.5, 0.5}, r) == 0;
  CHECK(std::abs(zeros / 10000.0 - 0.5) < 0.02);

  CHECK_THROWS_AS(sample_categorical(Vector{0.5, 0.4}, r), DomainError);
}

TEST_CASE("rng streams are pure functions of seed and counter") {
  RngStream a(9);
  std::vector<std::uint64_t> first;
  for (int i = 0; i < 5; ++i) first.push_back(a.next_u64());
  // Documented formula: draw k is splitmix64_mix(seed + (k + 1) * golden gamma).
  for (std::uint64_t k = 0; k < 5; ++k) CHECK(first[k] == splitmix64_mix(9 + (k + 1) * 0x9E3779B97F4A7C15ULL));

  const RngStream parent(9);
  RngStream c1 = parent.derive(1), c1b = parent.derive(1), c2 = parent.derive(2);
  const auto x = c1.next_u64();
  CHECK(x == c1b.next_u64());
  CHECK(x != c2.next_u64());

  RngStream u(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
    CHECK(u.uniform_index(7) < 7);
  }
}

TEST_CASE("finite difference check examples") {
  const ScalarField square = [](const Vector& x) { return x[0] * x[0]; };
  CHECK(finite_difference_check(square, Vector{6.0}, Vector{3.0}, 1e-5) < 1e-6);

  const ScalarField sines = [](const Vector& x) {
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::sin(x[i]);
    return s;
  };
  CHECK(finite_difference_check(sines, Vector(4, 1.0), Vector(4, 0.0), 1e-5) < 1e-6);

  const double wrong = finite_difference_check(square, Vector{5.0}, Vector{3.0}, 1e-5);
  CHECK(std::abs(wrong - 1.0 / 6.0) < 1e-6);

  const GradientField grad = [](const Vector& x) { return Vector{2 * x[0]}; };
  CHECK(finite_difference_check(square, grad, Vector{-1.5}, 1e-5) < 1e-6);

  CHECK_THROWS_AS(finite_difference_check(square, Vector{6.0}, Vector{3.0}, 0.1), DomainError);
  const ScalarField blows_up = [](const Vector& x) { return x[0] > 0 ? INFINITY : 0.0; };
  CHECK_THROWS_AS(finite_difference_check(blows_up, Vector{0.0}, Vector{0.0}, 1e-5), NumericError);
}

TEST_CASE("vector ops check dimensions and finiteness") {
  CHECK_THROWS_AS(Vector({1, 2}) + Vector({1}), DimensionError);
  CHECK_THROWS_AS(Vector(std::vector<double>{1, NAN}), NumericError);
  const Matrix m(2, 3, std::vector<double>{1, 2, 3, 4, 5, 6});
  const Vector y = m * Vector{1, 0, -1};
  CHECK(y[0] == -2);
  CHECK(y[1] == -2);
  const Vector z = m.transpose_times(Vector{1, 1});
  CHECK(z == Vector{5, 7, 9});
}
