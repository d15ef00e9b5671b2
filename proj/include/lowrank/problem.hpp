#pragma once

#include <cstdint>

#include "lowrank/matrix.hpp"

namespace lowrank {

enum class SpectrumProfile { Geometric, Linear };

/// Rank-r target A = U Sigma V^T with known extreme singular values.
struct FactorizationProblem {
  Matrix A;
  Index r = 0;
  SpectralSummary spectrum;  // of A
  double kappa = 1.0;        // sigma_1(A) / sigma_r(A)
  Matrix left_frame;         // m x r, leading left singular vectors of A
  double norm_fro = 0.0;     // ||A||_F

  Index rows() const { return A.rows(); }
  Index cols() const { return A.cols(); }
  double sigma1() const { return spectrum.singular_values(0); }
  double sigma_r() const { return spectrum.singular_values(r - 1); }
};

/// Builds A = U Sigma V^T with random orthonormal U (m x r), V (n x r) and a
/// diagonal running from sigma1 down to sigma_r along the given profile.
FactorizationProblem make_mf_problem(Index m, Index n, Index r, double sigma1,
                                     double sigma_r, SpectrumProfile profile,
                                     std::uint64_t seed);

/// Wraps an existing matrix whose numerical rank must equal r.
FactorizationProblem problem_from_matrix(Matrix A, Index r);

}  // namespace lowrank
