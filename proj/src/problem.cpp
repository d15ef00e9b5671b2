#include "lowrank/problem.hpp"

#include <cmath>
#include <stdexcept>

#include "lowrank/random.hpp"

namespace lowrank {

namespace {

Vector interpolate_spectrum(Index r, double sigma1, double sigma_r, SpectrumProfile profile) {
  Vector sig(r);
  if (r == 1) {
    sig(0) = sigma1;
    return sig;
  }
  for (Index i = 0; i < r; ++i) {
    const double w = static_cast<double>(i) / static_cast<double>(r - 1);
    sig(i) = profile == SpectrumProfile::Geometric
                 ? sigma1 * std::pow(sigma_r / sigma1, w)
                 : sigma1 + w * (sigma_r - sigma1);
  }
  sig(0) = sigma1;
  sig(r - 1) = sigma_r;
  return sig;
}

FactorizationProblem finalize(Matrix A, Index r) {
  FactorizationProblem p;
  p.A = std::move(A);
  p.r = r;
  SvdResult dec = svd(p.A);
  p.spectrum = dec.spectrum;
  p.left_frame = dec.U.leftCols(r);
  p.kappa = dec.spectrum.singular_values(0) / dec.spectrum.singular_values(r - 1);
  p.norm_fro = p.A.norm();
  return p;
}

}  // namespace

FactorizationProblem make_mf_problem(Index m, Index n, Index r, double sigma1,
                                     double sigma_r, SpectrumProfile profile,
                                     std::uint64_t seed) {
  if (r < 1 || r > std::min(m, n))
    throw std::invalid_argument("make_mf_problem: need 1 <= r <= min(m, n)");
  if (!(sigma1 >= sigma_r) || !(sigma_r > 0.0))
    throw std::invalid_argument("make_mf_problem: need sigma1 >= sigma_r > 0");
  RandomSource rng(seed);
  Matrix U = orthonormalize(gaussian_matrix(m, r, 1.0, rng));
  Matrix V = orthonormalize(gaussian_matrix(n, r, 1.0, rng));
  Vector sig = interpolate_spectrum(r, sigma1, sigma_r, profile);
  Matrix A = U * sig.asDiagonal() * V.transpose();
  return finalize(std::move(A), r);
}

FactorizationProblem problem_from_matrix(Matrix A, Index r) {
  if (A.rows() < 1 || A.cols() < 1 || r < 1 || r > std::min(A.rows(), A.cols()))
    throw std::invalid_argument("problem_from_matrix: bad dimensions");
  FactorizationProblem p = finalize(std::move(A), r);
  if (p.spectrum.rank != r)
    throw std::invalid_argument("problem_from_matrix: numerical rank differs from r");
  return p;
}

}  // namespace lowrank
