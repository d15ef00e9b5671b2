#pragma once

#include <cstdint>

#include "lowrank/matrix.hpp"

namespace lowrank {

struct InitOutcome;  // init.hpp

/// Two-layer linear-network training data: inputs D (n x N), labels
/// LBL = A_gen * D (m x N). Interpolation holds by construction.
struct LinearNetworkProblem {
  Matrix D;           // n x N
  Matrix labels;      // m x N
  Matrix A_gen;       // m x n Gaussian generator
  Index r = 0;        // rank(labels)
  SpectralSummary D_spectrum;
  double lambda_max = 0.0;   // largest eigenvalue of D D^T
  double lambda_min = 0.0;   // smallest nonzero eigenvalue of D D^T
  double sigma_min_D = 0.0;  // smallest nonzero singular value of D
  double cond_A_gen = 1.0;   // measured; Assumption 1 wants cond(A) = O(1)
  Matrix DDt;                // n x n, cached
  Matrix label_frame;        // m x r, leading left singular vectors of labels
  Matrix data_frame;         // n x rank(D), leading left singular vectors of D
  double labels_norm_fro = 0.0;
  double ldt_norm_fro = 0.0;  // ||labels * D^T||_F

  Index out_dim() const { return labels.rows(); }
  Index in_dim() const { return D.rows(); }
  Index samples() const { return D.cols(); }
};

/// D = U Sigma V^T with orthonormal U (n x rank_d), V (N x rank_d) and the
/// diagonal running geometrically from sigma1_d to sigmar_d; labels from a
/// unit Gaussian generator.
LinearNetworkProblem make_lnn_problem(Index m, Index n, Index N, Index rank_d,
                                      double sigma1_d, double sigmar_d,
                                      std::uint64_t seed);

/// Outcome of testing the premise mu~ p >= 4 sqrt(2) ||L D^T||_F (1 + p) with
/// p = sqrt(mu~) / (144 sqrt(L~)), which does not depend on the scale of X0.
struct NagRatePremise {
  double containment_leakage = 0.0;  // ||(I - P_X0) labels||_F
  double lhs = 0.0;                  // mu~ p
  double rhs = 0.0;                  // 4 sqrt(2) ||L D^T||_F (1 + p)
  double p = 0.0;
  bool satisfied = false;
  double min_scale = 0.0;  // multiply X0 by this to reach equality
  double min_c = 0.0;      // c_used * min_scale
};

NagRatePremise check_nag_premise(const InitOutcome& init, const LinearNetworkProblem& problem);

/// Per-iteration rate and iteration-count expression (unit constant) from the
/// width-dependent corollaries.
struct CorollaryRate {
  double rate_per_iter = 0.0;  // 1 - sqrt(mu~/L~)/2 with scheme-specific cond(X0)
  double t_factor = 0.0;       // multiplies log(1/eps)
};

enum class InitScheme;  // init.hpp

CorollaryRate corollary_rate(InitScheme scheme, const LinearNetworkProblem& problem,
                             Index d, double tau, double cond_X0);

}  // namespace lowrank
