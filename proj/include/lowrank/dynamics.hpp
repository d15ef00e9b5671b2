#pragma once

#include <vector>

#include "lowrank/init.hpp"
#include "lowrank/lnn.hpp"
#include "lowrank/optimize.hpp"
#include "lowrank/problem.hpp"

namespace lowrank {

/// Numerical certificate for one step of the residual dynamics
/// r_{t+1} = (linear part) r_t + xi_t.
struct DynamicsCheck {
  double decomposition_residual = 0.0;  // || r_{t+1} - linear part - xi_t ||
  double xi_norm = 0.0;
  double zeta_norm = 0.0;  // momentum higher-order part (NAG only)
  double iota_norm = 0.0;  // dynamics-shift part (NAG only)
  double leakage = 0.0;    // mass of r_{t+1} outside the contraction subspace
  double contraction_measured = 0.0;  // ||linear part applied to r_t|| / ||r_t||
};

/// Verifies r_{t+1} = (I - eta H_0) r_t + xi_t with
/// xi_t = eta (H_0 - H_t) r_t + vec(P_t Q_t^T).
DynamicsCheck gd_decomposition_check(const IterateState& before, const IterateState& after,
                                     const Matrix& X0, const Matrix& Y0,
                                     const HyperParams& hp, const Objective& obj);

/// Verifies the block recursion
///   (r_{t+1}; r_t) = T_NAG (r_t; r_{t-1}) + (xi_t; 0),  xi_t = zeta_t + iota_t,
/// reporting the zeta and iota norms separately.
DynamicsCheck nag_decomposition_check(const IterateState& before, const IterateState& after,
                                      const Matrix& X0, const Matrix& Y0,
                                      const HyperParams& hp, const Objective& obj);

/// ||(I - U_A U_A^T) R||_F: mass of the residual's columns outside colspan(A).
double subspace_leakage(const Matrix& R, const FactorizationProblem& problem);

/// Network variant against colspan(D (x) L): mass of the projected residual
/// outside {L C D^T}.
double subspace_leakage(const Matrix& R_proj, const LinearNetworkProblem& problem);

struct ContractionBound {
  double factor = 0.0;
  bool guaranteed = false;  // false when eta is outside (0, 2/L) for GD
};

/// Guaranteed shrink rate of the linearized dynamics on the contraction
/// subspace: max{|1-eta L|, |1-eta mu|} for GD/AltGD, 1 - sqrt(mu/L) for NAG
/// at theory settings.
ContractionBound contraction_factor(Method method, double L, double mu, double eta,
                                    double beta);

enum class BoundKind { GdResidual, NagResidual, LnnResidual, LossCurveGd, LossCurveNag };

struct TheoryBound {
  BoundKind kind = BoundKind::GdResidual;
  double prefactor = 0.0;
  double rate_per_iter = 0.0;  // theta in (0, 1)

  /// prefactor * theta^t for the residual bounds, prefactor * theta^{2t} for
  /// the loss-prediction curves.
  double value_at(long t) const;
};

TheoryBound theory_bound(BoundKind kind, const InitOutcome& init,
                         const FactorizationProblem& problem, double initial_loss = 0.0);
TheoryBound theory_bound_lnn(const InitOutcome& init, const LinearNetworkProblem& problem);

std::vector<double> theory_bound_curve(const TheoryBound& bound, long t_max);

/// Iteration-count estimate with unit constant; an order-of-magnitude
/// prediction, not a guarantee.
double iteration_complexity(BoundKind kind, double kappa, double cond_X0, double tau,
                            Index d, Index r, double eps);

// --- explicit operators (oracle support; gated to m*n <= 400) ---

/// Materializes H = (Y Y^T) (x) I_m + I_n (x) (X X^T).
Matrix build_h_matrix(const Matrix& X, const Matrix& Y, Index m, Index n);

/// Network form (D D^T Y Y^T) (x) I_m + (D D^T) (x) (X X^T).
Matrix build_h_matrix_lnn(const Matrix& X, const Matrix& Y, const Matrix& DDt, Index m);

/// 2mn x 2mn block matrix [[(1+beta)(I - eta H0), -beta (I - eta H0)], [I, 0]].
Matrix build_t_nag(const Matrix& H0, double eta, double beta);

/// mn x (n r) orthonormal basis I_n (x) U of the contraction subspace, where U
/// spans the top-r left singular subspace of X0.
Matrix h_subspace_basis(const Matrix& X0, Index r, Index n);

/// Largest |eigenvalue| of (I - eta H0) restricted to the contraction
/// subspace, via a dense symmetric eigensolve of the restriction.
double restricted_gd_extreme(const Matrix& X0, Index r, Index n, double eta);

struct NagRadiusReport {
  double radius = 0.0;  // spectral radius of T_NAG restricted to H x H
  double bound = 0.0;   // 1 - sqrt(mu/L)
  double margin = 0.0;  // bound - radius
};

/// Spectral radius of the explicit T_NAG block matrix restricted to the
/// contraction subspace, with theory eta and beta. The whole computation runs
/// in quad precision: the radius-attaining eigenvalue is defective at theory
/// settings, so double-level rounding anywhere in the pipeline perturbs it by
/// ~sqrt(eps) ~ 1e-8, far above the tolerances this feeds.
NagRadiusReport nag_restricted_radius(const Matrix& X0, Index r, Index n);

}  // namespace lowrank
