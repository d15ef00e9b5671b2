#pragma once

#include <Eigen/Dense>

namespace lowrank {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Singular values of a matrix together with its numerical rank and
/// condition number sigma_1 / sigma_rank.
struct SpectralSummary {
  Vector singular_values;  // descending
  Index rank = 0;          // number of singular values above the rank tolerance
  double cond = 1.0;       // sigma_1 / sigma_rank (1 for the zero matrix)

  double sigma_max() const { return singular_values.size() ? singular_values(0) : 0.0; }
  double sigma(Index i) const { return singular_values(i); }  // 0-based
};

struct SvdResult {
  Matrix U;  // thin left factor
  Matrix V;  // thin right factor
  SpectralSummary spectrum;
};

/// sigma_i is counted toward the rank when sigma_i > max(rows, cols) * eps * sigma_1.
double rank_tolerance(Index rows, Index cols, double sigma1);

SpectralSummary summarize_spectrum(const Vector& singular_values, Index rows, Index cols);

/// Thin SVD, M = U diag(sigma) V^T. Rejects non-finite input.
SvdResult svd(const Matrix& M);

/// Singular values only (no factors).
SpectralSummary singular_values(const Matrix& M);

/// Orthonormal basis Q of colspan(M), Q^T Q = I. Requires full column rank.
Matrix orthonormalize(const Matrix& M);

/// Matrix-form application of H = (Y Y^T) (x) I_m + I_n (x) (X X^T) to vec(R):
/// returns R Y Y^T + X X^T R without materializing the mn x mn operator.
Matrix apply_H(const Matrix& X, const Matrix& Y, const Matrix& R);

double frobenius_norm(const Matrix& M);
double spectral_norm(const Matrix& M);

/// Column-first vectorization.
Vector vec(const Matrix& M);

bool all_finite(const Matrix& M);

}  // namespace lowrank
