#include "lowrank/matrix.hpp"

#include <limits>
#include <stdexcept>

namespace lowrank {

double rank_tolerance(Index rows, Index cols, double sigma1) {
  return static_cast<double>(std::max(rows, cols)) *
         std::numeric_limits<double>::epsilon() * sigma1;
}

SpectralSummary summarize_spectrum(const Vector& singular_values, Index rows, Index cols) {
  SpectralSummary s;
  s.singular_values = singular_values;
  if (singular_values.size() == 0 || singular_values(0) == 0.0) {
    s.rank = 0;
    s.cond = 1.0;
    return s;
  }
  const double tol = rank_tolerance(rows, cols, singular_values(0));
  Index rank = 0;
  while (rank < singular_values.size() && singular_values(rank) > tol) ++rank;
  s.rank = rank;
  s.cond = rank > 0 ? singular_values(0) / singular_values(rank - 1) : 1.0;
  return s;
}

SvdResult svd(const Matrix& M) {
  if (!all_finite(M)) throw std::invalid_argument("svd: input has non-finite entries");
  Eigen::BDCSVD<Matrix> dec(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdResult out;
  out.U = dec.matrixU();
  out.V = dec.matrixV();
  out.spectrum = summarize_spectrum(dec.singularValues(), M.rows(), M.cols());
  return out;
}

SpectralSummary singular_values(const Matrix& M) {
  if (!all_finite(M)) throw std::invalid_argument("singular_values: input has non-finite entries");
  Eigen::BDCSVD<Matrix> dec(M);
  return summarize_spectrum(dec.singularValues(), M.rows(), M.cols());
}

Matrix orthonormalize(const Matrix& M) {
  if (!all_finite(M)) throw std::invalid_argument("orthonormalize: input has non-finite entries");
  SpectralSummary s = singular_values(M);
  if (s.rank < M.cols())
    throw std::invalid_argument("orthonormalize: input is rank-deficient");
  Eigen::HouseholderQR<Matrix> qr(M);
  Matrix Q = qr.householderQ() * Matrix::Identity(M.rows(), M.cols());
  // Householder leaves the column signs arbitrary; pin them to the sign of
  // the R diagonal so the result is deterministic.
  Matrix R = qr.matrixQR().topRows(M.cols()).template triangularView<Eigen::Upper>();
  for (Index j = 0; j < M.cols(); ++j)
    if (R(j, j) < 0) Q.col(j) = -Q.col(j);
  return Q;
}

Matrix apply_H(const Matrix& X, const Matrix& Y, const Matrix& R) {
  const Index m = X.rows(), n = Y.rows();
  if (R.rows() != m || R.cols() != n || X.cols() != Y.cols())
    throw std::invalid_argument("apply_H: shape mismatch");
  return (R * Y) * Y.transpose() + X * (X.transpose() * R);
}

double frobenius_norm(const Matrix& M) { return M.norm(); }

double spectral_norm(const Matrix& M) {
  SpectralSummary s = singular_values(M);
  return s.singular_values.size() ? s.singular_values(0) : 0.0;
}

Vector vec(const Matrix& M) {
  return Eigen::Map<const Vector>(M.data(), M.size());
}

bool all_finite(const Matrix& M) { return M.allFinite(); }

}  // namespace lowrank
