#include <doctest.h>

#include <cmath>

#include "lowrank/matrix.hpp"
#include "lowrank/problem.hpp"
#include "lowrank/random.hpp"

using namespace lowrank;

namespace {

// Independent oracle: classical Gram-Schmidt.
Matrix gram_schmidt(const Matrix& M) {
  Matrix Q = M;
  for (Index j = 0; j < M.cols(); ++j) {
    for (Index k = 0; k < j; ++k) Q.col(j) -= Q.col(k).dot(Q.col(j)) * Q.col(k);
    Q.col(j) /= Q.col(j).norm();
  }
  return Q;
}

// Independent oracle: H = (Y Y^T) (x) I_m + I_n (x) (X X^T) entry by entry.
Matrix explicit_h(const Matrix& X, const Matrix& Y) {
  const Index m = X.rows(), n = Y.rows();
  Matrix YYt = Y * Y.transpose();
  Matrix XXt = X * X.transpose();
  Matrix H = Matrix::Zero(m * n, m * n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < m; ++i)
      for (Index l = 0; l < n; ++l)
        for (Index k = 0; k < m; ++k) {
          double v = 0.0;
          if (i == k) v += YYt(j, l);
          if (j == l) v += XXt(i, k);
          H(j * m + i, l * m + k) = v;
        }
  return H;
}

}  // namespace

TEST_CASE("svd: identity") {
  SvdResult dec = svd(Matrix::Identity(3, 3));
  for (int i = 0; i < 3; ++i) CHECK(dec.spectrum.singular_values(i) == doctest::Approx(1.0));
  CHECK(dec.spectrum.rank == 3);
  CHECK(dec.spectrum.cond == doctest::Approx(1.0));
}

TEST_CASE("svd: desk-scale construction has the pinned extremes") {
  FactorizationProblem p = make_mf_problem(5, 5, 5, 1.0, 0.2, SpectrumProfile::Geometric, 3);
  SvdResult dec = svd(p.A);
  CHECK(dec.spectrum.singular_values(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(dec.spectrum.singular_values(4) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(dec.spectrum.cond == doctest::Approx(5.0).epsilon(1e-11));
}

TEST_CASE("svd: reconstruction of a random 6x4") {
  RandomSource rng(7);
  Matrix M = gaussian_matrix(6, 4, 1.0, rng);
  SvdResult dec = svd(M);
  Matrix rec = dec.U * dec.spectrum.singular_values.asDiagonal() * dec.V.transpose();
  CHECK((rec - M).norm() <= 1e-10 * dec.spectrum.singular_values(0));
  CHECK((dec.U.transpose() * dec.U - Matrix::Identity(4, 4)).norm() <= 1e-10);
  CHECK((dec.V.transpose() * dec.V - Matrix::Identity(4, 4)).norm() <= 1e-10);
}

TEST_CASE("svd: non-finite input rejected") {
  Matrix M = Matrix::Zero(2, 2);
  M(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(svd(M), std::invalid_argument);
}

TEST_CASE("orthonormalize: orthonormal input unchanged up to column sign") {
  RandomSource rng(11);
  Matrix Q0 = orthonormalize(gaussian_matrix(6, 3, 1.0, rng));
  Matrix Q = orthonormalize(Q0);
  for (Index j = 0; j < 3; ++j) {
    const double same = (Q.col(j) - Q0.col(j)).norm();
    const double flipped = (Q.col(j) + Q0.col(j)).norm();
    CHECK(std::min(same, flipped) <= 1e-12);
  }
}

TEST_CASE("orthonormalize: scaling removed") {
  Matrix Q = orthonormalize(2.0 * Matrix::Identity(4, 4));
  CHECK((Q - Matrix::Identity(4, 4)).norm() <= 1e-14);
}

TEST_CASE("orthonormalize: random 8x3 against Gram-Schmidt") {
  RandomSource rng(13);
  Matrix M = gaussian_matrix(8, 3, 1.0, rng);
  Matrix Q = orthonormalize(M);
  CHECK((Q.transpose() * Q - Matrix::Identity(3, 3)).norm() <= 1e-12);
  CHECK((M - Q * (Q.transpose() * M)).norm() <= 1e-12 * M.norm());
  Matrix G = gram_schmidt(M);
  CHECK((Q * Q.transpose() - G * G.transpose()).norm() <= 1e-12);
}

TEST_CASE("orthonormalize: rank-deficient input rejected") {
  Matrix M(4, 2);
  M.col(0) = Vector::Ones(4);
  M.col(1) = 2.0 * Vector::Ones(4);
  CHECK_THROWS_AS(orthonormalize(M), std::invalid_argument);
}

TEST_CASE("apply_H: one Kronecker term vanishes at Y = 0") {
  RandomSource rng(17);
  Matrix X = gaussian_matrix(4, 2, 1.0, rng);
  Matrix Y = Matrix::Zero(3, 2);
  Matrix R = gaussian_matrix(4, 3, 1.0, rng);
  CHECK((apply_H(X, Y, R) - X * X.transpose() * R).norm() <= 1e-14);
}

TEST_CASE("apply_H: X = Y = I gives 2R") {
  RandomSource rng(19);
  Matrix R = gaussian_matrix(3, 3, 1.0, rng);
  CHECK((apply_H(Matrix::Identity(3, 3), Matrix::Identity(3, 3), R) - 2.0 * R).norm() == 0.0);
}

TEST_CASE("apply_H: matches the explicit operator") {
  RandomSource rng(23);
  for (auto [m, n, d] : {std::tuple<Index, Index, Index>{3, 2, 2},
                         {5, 4, 3},
                         {8, 8, 2}}) {
    Matrix X = gaussian_matrix(m, d, 1.0, rng);
    Matrix Y = gaussian_matrix(n, d, 1.0, rng);
    Matrix H = explicit_h(X, Y);
    for (int trial = 0; trial < 20; ++trial) {
      Matrix R = gaussian_matrix(m, n, 1.0, rng);
      Vector diff = H * vec(R) - vec(apply_H(X, Y, R));
      CHECK(diff.cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("apply_H: shape mismatch rejected") {
  Matrix X = Matrix::Zero(3, 2), Y = Matrix::Zero(2, 2), R = Matrix::Zero(3, 3);
  CHECK_THROWS_AS(apply_H(X, Y, R), std::invalid_argument);
}

TEST_CASE("norms and vec conventions") {
  Matrix D = Matrix::Zero(2, 2);
  D(0, 0) = 3.0;
  D(1, 1) = 4.0;
  CHECK(frobenius_norm(D) == doctest::Approx(5.0));
  CHECK(spectral_norm(D) == doctest::Approx(4.0));

  Matrix M(2, 2);
  M << 1, 3, 2, 4;
  Vector v = vec(M);
  CHECK(v(0) == 1.0);
  CHECK(v(1) == 2.0);
  CHECK(v(2) == 3.0);
  CHECK(v(3) == 4.0);

  RandomSource rng(29);
  Matrix A = gaussian_matrix(5, 5, 1.0, rng);
  const double fro = frobenius_norm(A), spec = spectral_norm(A);
  CHECK(spec <= fro * (1 + 1e-12));
  CHECK(fro <= std::sqrt(5.0) * spec * (1 + 1e-12));
}
