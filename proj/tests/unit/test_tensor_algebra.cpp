#include "doctest.h"

#include <random>
#include <vector>

#include "lncde/errors.hpp"
#include "lncde/tensor_algebra.hpp"

using namespace lncde;

namespace {

TruncatedTensor random_tensor(std::mt19937_64& rng, std::size_t v, std::size_t n, double scalar) {
  std::normal_distribution<double> d(0.0, 0.5);
  TruncatedTensor t(v, n);
  for (double& x : t.coefficients()) x = d(rng);
  t.scalar() = scalar;
  return t;
}

}  // namespace

TEST_CASE("word indexing is row-major by letter") {
  TruncatedTensor t(3, 2);
  const std::size_t w[] = {1, 2};
  t.at(w) = 7.0;
  CHECK(t.level(2)[1 * 3 + 2] == 7.0);
  CHECK(t.level_size(2) == 9);
  const std::size_t bad[] = {3};
  CHECK_THROWS_AS(t.at(bad), DimensionError);
}

TEST_CASE("unit is the multiplicative identity") {
  std::mt19937_64 rng(1);
  const auto a = random_tensor(rng, 3, 3, 0.7);
  const auto one = TruncatedTensor::unit(3, 3);
  CHECK(max_abs_diff(tensor_mul(a, one), a) == 0.0);
  CHECK(max_abs_diff(tensor_mul(one, a), a) == 0.0);
}

TEST_CASE("product of level-1 elements is the outer product") {
  const std::vector<double> a{1.0, 2.0};
  const std::vector<double> b{3.0, -1.0};
  TruncatedTensor x = TruncatedTensor::from_level1(a, 2);
  TruncatedTensor y = TruncatedTensor::from_level1(b, 2);
  x.scalar() = 1.0;
  y.scalar() = 1.0;
  const auto p = tensor_mul(x, y);
  CHECK(p.level(1)[0] == doctest::Approx(4.0));
  CHECK(p.level(1)[1] == doctest::Approx(1.0));
  CHECK(p.level(2)[0 * 2 + 0] == doctest::Approx(3.0));
  CHECK(p.level(2)[0 * 2 + 1] == doctest::Approx(-1.0));
  CHECK(p.level(2)[1 * 2 + 0] == doctest::Approx(6.0));
  CHECK(p.level(2)[1 * 2 + 1] == doctest::Approx(-2.0));
}

TEST_CASE("multiplication is associative") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_tensor(rng, 2, 4, 1.0);
    const auto b = random_tensor(rng, 2, 4, -0.3);
    const auto c = random_tensor(rng, 2, 4, 0.5);
    CHECK(max_abs_diff(tensor_mul(tensor_mul(a, b), c), tensor_mul(a, tensor_mul(b, c))) < 1e-12);
  }
}

TEST_CASE("exp of a level-1 element has levels x^k / k!") {
  const std::vector<double> x{0.3, -1.2, 2.0};
  const auto e = tensor_exp(TruncatedTensor::from_level1(x, 3));
  CHECK(e.scalar() == 1.0);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < 3; ++k) {
        const std::size_t w[] = {i, j, k};
        CHECK(e.at(w) == doctest::Approx(x[i] * x[j] * x[k] / 6.0).epsilon(1e-14));
      }
  CHECK(max_abs_diff(e, segment_exp(x, 3)) < 1e-15);
}

TEST_CASE("log inverts exp and exp inverts log") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto lie = random_tensor(rng, 3, 4, 0.0);
    CHECK(max_abs_diff(tensor_log(tensor_exp(lie)), lie) < 1e-12);
    const auto group = random_tensor(rng, 3, 4, 1.0);
    CHECK(max_abs_diff(tensor_exp(tensor_log(group)), group) < 1e-12);
  }
}

TEST_CASE("log of 1 + x at depth 2 uses the alternating series") {
  // log(1 + x) = x - x^2/2 for a single letter: level 2 of log(exp(a)) must vanish.
  TruncatedTensor g = TruncatedTensor::unit(1, 2);
  g.level(1)[0] = 1.0;
  g.level(2)[0] = 0.0;
  const auto l = tensor_log(g);
  CHECK(l.level(1)[0] == doctest::Approx(1.0));
  CHECK(l.level(2)[0] == doctest::Approx(-0.5));
}

TEST_CASE("exp and log check their scalar preconditions") {
  TruncatedTensor t = TruncatedTensor::unit(2, 2);
  CHECK_THROWS_AS(tensor_exp(t), PreconditionError);
  t.scalar() = 2.0;
  CHECK_THROWS_AS(tensor_log(t), PreconditionError);
}

TEST_CASE("mul_segment_exp matches multiplying by the segment exponential") {
  std::mt19937_64 rng(4);
  const auto a = random_tensor(rng, 3, 4, 1.0);
  const std::vector<double> d{0.4, -0.1, 0.9};
  TruncatedTensor in_place = a;
  mul_segment_exp(in_place, d);
  CHECK(max_abs_diff(in_place, tensor_mul(a, segment_exp(d, 4))) < 1e-14);
}

TEST_CASE("commutator is antisymmetric and vanishes on parallel vectors") {
  const std::vector<double> a{1.0, 0.0};
  const std::vector<double> b{0.0, 1.0};
  const auto ta = TruncatedTensor::from_level1(a, 2);
  const auto tb = TruncatedTensor::from_level1(b, 2);
  const auto ab = tensor_bracket(ta, tb);
  const std::size_t w12[] = {0, 1};
  const std::size_t w21[] = {1, 0};
  CHECK(ab.at(w12) == 1.0);
  CHECK(ab.at(w21) == -1.0);
  CHECK(max_abs_diff(ab + tensor_bracket(tb, ta), TruncatedTensor(2, 2)) == 0.0);
  CHECK(norm(tensor_bracket(ta, ta * 3.0)) == 0.0);
}

TEST_CASE("shape mismatches are rejected") {
  CHECK_THROWS_AS(tensor_mul(TruncatedTensor(2, 2), TruncatedTensor(3, 2)), DimensionError);
  CHECK_THROWS_AS(tensor_mul(TruncatedTensor(2, 2), TruncatedTensor(2, 3)), DimensionError);
  TruncatedTensor t(2, 2);
  const std::vector<double> d{1.0, 2.0, 3.0};
  CHECK_THROWS_AS(mul_segment_exp(t, d), DimensionError);
}
