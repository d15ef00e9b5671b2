#pragma once

#include <cstdint>
#include <optional>

#include "lowrank/lnn.hpp"
#include "lowrank/problem.hpp"

namespace lowrank {

enum class InitScheme {
  MfSketch,            // X0 = c A Phi, Y0 = 0
  MfGeneralUnbalanced, // X0 = c A Phi1, Y0 = c2 Phi2
  Lnn1,                // X0 = c L Phi
  Lnn2,                // X0 = c Orth(L Phi)
  Lnn3,                // X0 = c Phi
};

/// Which method's c-threshold resolves an "auto" scale.
enum class CThresholdKind { Gd, Nag };

struct InitConfig {
  InitScheme scheme = InitScheme::MfSketch;
  Index d = 20;
  std::optional<double> c;  // empty = auto-threshold
  double c2 = 0.0;          // general-unbalanced only
  double tau = 0.1;
  std::uint64_t seed = 1;
};

struct InitOutcome {
  Matrix X0;
  Matrix Y0;
  SpectralSummary X0_spectrum;
  double L = 0.0;       // sigma_1^2(X0)
  double mu = 0.0;      // sigma_r^2(X0) (sigma_m^2 for the width >= m scheme)
  double cond_X0 = 1.0; // sqrt(L / mu)
  double c_used = 0.0;
};

/// c >= sqrt(d) sigma_r(A) / (12 tau (sqrt(d) - sqrt(r-1)))
///        * sqrt(cond^4(X0) ||A||_F / (cond^2(X0) - 1)).
/// Rejects cond_X0 <= 1 (the formula is singular there).
double c_threshold_gd(const FactorizationProblem& problem, Index d, double tau,
                      double cond_X0);

/// c >= 29 sqrt(d (2 sqrt(d) + sqrt(r)) ||A||_F kappa
///             / (tau^3 (sqrt(d) - sqrt(r-1))^3 sigma_r^2(A))).
double c_threshold_nag(const FactorizationProblem& problem, Index d, double tau);

/// Sketch initialization X0 = c A Phi, Y0 = 0 with [Phi]_ij ~ N(0, 1/d).
/// An absent cfg.c resolves to the theory threshold for `auto_kind` by the
/// two-pass rule: draw Phi once, measure cond(X0) at c = 1 (scale-invariant),
/// evaluate the threshold, rescale.
InitOutcome init_mf(const FactorizationProblem& problem, const InitConfig& cfg,
                    CThresholdKind auto_kind = CThresholdKind::Gd);

/// X0 = c A Phi1, Y0 = c2 Phi2 with [Phi1]_ij ~ N(0, 1/d), [Phi2]_ij ~ N(0, 1/n).
InitOutcome init_mf_general(const FactorizationProblem& problem, const InitConfig& cfg,
                            CThresholdKind auto_kind = CThresholdKind::Gd);

/// Width-d network initializations; an absent cfg.c resolves to twice the
/// minimal premise-satisfying scale from check_nag_premise.
InitOutcome init_lnn(const LinearNetworkProblem& problem, const InitConfig& cfg);

struct SketchBoundReport {
  double sigma1_X0 = 0.0;
  double sigmar_X0 = 0.0;
  double lower_bound = 0.0;  // tau (sqrt(d) - sqrt(r-1)) / sqrt(d) * c sigma_r(A)
  double upper_bound = 0.0;  // (2 sqrt(d) + sqrt(r)) / sqrt(d) * c sigma_1(A)
  double cond_X0 = 1.0;
  double cond_bound = 0.0;   // (2 sqrt(d) + sqrt(r)) / (tau (sqrt(d) - sqrt(r-1))) * kappa
  bool lower_ok = false;
  bool upper_ok = false;
  bool cond_ok = false;

  bool pass() const { return lower_ok && upper_ok && cond_ok; }
};

/// Draws X0 = c A Phi for one seed and tests the singular-value sandwich and
/// the condition-number bound.
SketchBoundReport check_sketch_bounds(const FactorizationProblem& problem, Index d,
                               double tau, double c, std::uint64_t seed);

}  // namespace lowrank
