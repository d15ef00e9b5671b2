#include "lowrank/lnn.hpp"

#include <cmath>
#include <stdexcept>

#include "lowrank/init.hpp"
#include "lowrank/random.hpp"

namespace lowrank {

LinearNetworkProblem make_lnn_problem(Index m, Index n, Index N, Index rank_d,
                                      double sigma1_d, double sigmar_d,
                                      std::uint64_t seed) {
  if (rank_d < 1 || rank_d > std::min(n, N))
    throw std::invalid_argument("make_lnn_problem: need 1 <= rank_d <= min(n, N)");
  if (!(sigma1_d >= sigmar_d) || !(sigmar_d > 0.0))
    throw std::invalid_argument("make_lnn_problem: need sigma1_d >= sigmar_d > 0");
  RandomSource rng(seed);
  Matrix U = orthonormalize(gaussian_matrix(n, rank_d, 1.0, rng));
  Matrix V = orthonormalize(gaussian_matrix(N, rank_d, 1.0, rng));
  Vector sig(rank_d);
  for (Index i = 0; i < rank_d; ++i) {
    const double w = rank_d == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(rank_d - 1);
    sig(i) = sigma1_d * std::pow(sigmar_d / sigma1_d, w);
  }
  LinearNetworkProblem p;
  p.D = U * sig.asDiagonal() * V.transpose();
  p.A_gen = gaussian_matrix(m, n, 1.0, rng);
  p.labels = p.A_gen * p.D;

  SvdResult d_dec = svd(p.D);
  p.D_spectrum = d_dec.spectrum;
  p.data_frame = d_dec.U.leftCols(p.D_spectrum.rank);
  p.sigma_min_D = d_dec.spectrum.singular_values(p.D_spectrum.rank - 1);
  p.lambda_max = d_dec.spectrum.singular_values(0) * d_dec.spectrum.singular_values(0);
  p.lambda_min = p.sigma_min_D * p.sigma_min_D;
  p.DDt = p.D * p.D.transpose();

  SvdResult l_dec = svd(p.labels);
  p.r = l_dec.spectrum.rank;
  p.label_frame = l_dec.U.leftCols(p.r);
  p.labels_norm_fro = p.labels.norm();
  p.ldt_norm_fro = (p.labels * p.D.transpose()).norm();
  p.cond_A_gen = singular_values(p.A_gen).cond;
  return p;
}

NagRatePremise check_nag_premise(const InitOutcome& init, const LinearNetworkProblem& problem) {
  NagRatePremise rep;
  // (a) colspan(X0) must contain colspan(labels).
  Matrix basis = svd(init.X0).U.leftCols(init.X0_spectrum.rank);
  rep.containment_leakage =
      (problem.labels - basis * (basis.transpose() * problem.labels)).norm();

  // (b) mu~ p >= 4 sqrt(2) ||L D^T||_F (1 + p), p scale-invariant.
  const double L_t = init.L * problem.lambda_max;
  const double mu_t = init.mu * problem.lambda_min;
  rep.p = std::sqrt(mu_t) / (144.0 * std::sqrt(L_t));
  rep.lhs = mu_t * rep.p;
  rep.rhs = 4.0 * std::sqrt(2.0) * problem.ldt_norm_fro * (1.0 + rep.p);
  rep.satisfied = rep.lhs >= rep.rhs;

  // (c) minimal scaling: mu~ grows quadratically with the scale of X0 while p
  // stays fixed, so equality is at scale sqrt(rhs / lhs).
  rep.min_scale = std::sqrt(rep.rhs / rep.lhs);
  rep.min_c = init.c_used * rep.min_scale;
  return rep;
}

CorollaryRate corollary_rate(InitScheme scheme, const LinearNetworkProblem& problem,
                             Index d, double tau, double cond_X0) {
  const double sqrt_kappa = std::sqrt(problem.lambda_max / problem.lambda_min);
  CorollaryRate out;
  switch (scheme) {
    case InitScheme::Lnn1: {
      if (d < problem.r) throw std::invalid_argument("corollary_rate: width below rank(labels)");
      const double cond_L = singular_values(problem.labels).cond;
      out.t_factor = static_cast<double>(d) * cond_L /
                     (tau * static_cast<double>(d - problem.r + 1)) * sqrt_kappa;
      break;
    }
    case InitScheme::Lnn2: {
      if (d < problem.r) throw std::invalid_argument("corollary_rate: width below rank(labels)");
      cond_X0 = 1.0;  // orthonormalized
      out.t_factor = sqrt_kappa;
      break;
    }
    case InitScheme::Lnn3: {
      const Index m = problem.out_dim();
      if (d < m) throw std::invalid_argument("corollary_rate: width below output dimension");
      out.t_factor = static_cast<double>(d) / (tau * static_cast<double>(d - m + 1)) * sqrt_kappa;
      break;
    }
    default:
      throw std::invalid_argument("corollary_rate: not a network scheme");
  }
  // Rate from the accelerated network rate with the scheme's cond(X0).
  out.rate_per_iter = 1.0 - 1.0 / (2.0 * cond_X0 * sqrt_kappa);
  return out;
}

}  // namespace lowrank
