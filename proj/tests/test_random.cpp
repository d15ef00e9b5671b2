#include <doctest.h>

#include <cmath>

#include "lowrank/random.hpp"

using namespace lowrank;

TEST_CASE("gaussian_matrix: sample mean within the law-of-large-numbers band") {
  const Index d = 10;
  RandomSource rng(42);
  Matrix M = gaussian_matrix(1000, 1000, 1.0 / d, rng);
  const double mean = M.sum() / static_cast<double>(M.size());
  // 4 sigma / sqrt(N) with sigma = sqrt(1/10), N = 1e6
  CHECK(std::abs(mean) <= 4.0 * std::sqrt(0.1) / 1000.0);
}

TEST_CASE("gaussian_matrix: sample variance within 2% of 1/d") {
  const Index d = 10;
  RandomSource rng(43);
  Matrix M = gaussian_matrix(1000, 1000, 1.0 / d, rng);
  const double mean = M.sum() / static_cast<double>(M.size());
  const double var = (M.array() - mean).square().sum() / (M.size() - 1.0);
  CHECK(std::abs(var - 0.1) <= 0.02 * 0.1);
}

TEST_CASE("RandomSource: identical seed, identical draws") {
  RandomSource a(123456), b(123456);
  Matrix Ma = gaussian_matrix(17, 9, 2.5, a);
  Matrix Mb = gaussian_matrix(17, 9, 2.5, b);
  CHECK((Ma.array() == Mb.array()).all());

  RandomSource c(123457);
  Matrix Mc = gaussian_matrix(17, 9, 2.5, c);
  CHECK((Ma - Mc).norm() > 0.0);
}

TEST_CASE("gaussian_matrix: nonpositive variance rejected") {
  RandomSource rng(1);
  CHECK_THROWS_AS(gaussian_matrix(2, 2, 0.0, rng), std::invalid_argument);
}
