#include "lowrank/init.hpp"

#include <cmath>
#include <stdexcept>

#include "lowrank/random.hpp"

namespace lowrank {

namespace {

// Spectrum of X0 with mu taken at index mu_rank-1 (r for the sketch schemes,
// m for the full-width network scheme).
InitOutcome finish_outcome(Matrix X0, Matrix Y0, Index mu_rank, double c_used) {
  InitOutcome out;
  out.X0 = std::move(X0);
  out.Y0 = std::move(Y0);
  out.X0_spectrum = singular_values(out.X0);
  out.c_used = c_used;
  const Vector& sv = out.X0_spectrum.singular_values;
  out.L = sv(0) * sv(0);
  const double smu = mu_rank <= sv.size() ? sv(mu_rank - 1) : 0.0;
  out.mu = smu * smu;
  out.cond_X0 = out.mu > 0.0 ? std::sqrt(out.L / out.mu) : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace

double c_threshold_gd(const FactorizationProblem& problem, Index d, double tau,
                      double cond_X0) {
  if (tau <= 0.0) throw std::invalid_argument("c_threshold_gd: tau must be > 0");
  if (d < problem.r) throw std::invalid_argument("c_threshold_gd: need d >= r");
  if (!(cond_X0 > 1.0))
    throw std::domain_error("c_threshold_gd: formula is singular at cond(X0) <= 1");
  const double sd = std::sqrt(static_cast<double>(d));
  const double gap = sd - std::sqrt(static_cast<double>(problem.r - 1));
  const double c2 = cond_X0 * cond_X0;
  return sd * problem.sigma_r() / (12.0 * tau * gap) *
         std::sqrt(c2 * c2 * problem.norm_fro / (c2 - 1.0));
}

double c_threshold_nag(const FactorizationProblem& problem, Index d, double tau) {
  if (tau <= 0.0) throw std::invalid_argument("c_threshold_nag: tau must be > 0");
  if (d < problem.r) throw std::invalid_argument("c_threshold_nag: need d >= r");
  const double sd = std::sqrt(static_cast<double>(d));
  const double sr = std::sqrt(static_cast<double>(problem.r));
  const double gap = sd - std::sqrt(static_cast<double>(problem.r - 1));
  const double sr_a = problem.sigma_r();
  return 29.0 * std::sqrt(static_cast<double>(d) * (2.0 * sd + sr) * problem.norm_fro *
                          problem.kappa / (tau * tau * tau * gap * gap * gap * sr_a * sr_a));
}

InitOutcome init_mf(const FactorizationProblem& problem, const InitConfig& cfg,
                    CThresholdKind auto_kind) {
  if (cfg.scheme != InitScheme::MfSketch)
    throw std::invalid_argument("init_mf: scheme must be the sketch scheme");
  if (cfg.d < problem.r)
    throw std::invalid_argument("init_mf: need d >= r (lower bound degenerates)");
  RandomSource rng(cfg.seed);
  Matrix Phi = gaussian_matrix(problem.cols(), cfg.d, 1.0 / static_cast<double>(cfg.d), rng);
  Matrix X0 = problem.A * Phi;  // unit scale; cond(X0) does not depend on c
  double c;
  if (cfg.c) {
    c = *cfg.c;
    if (c <= 0.0) throw std::invalid_argument("init_mf: c must be > 0");
  } else {
    const double cond_unit = singular_values(X0).cond;
    c = auto_kind == CThresholdKind::Gd
            ? c_threshold_gd(problem, cfg.d, cfg.tau, cond_unit)
            : c_threshold_nag(problem, cfg.d, cfg.tau);
  }
  X0 *= c;
  return finish_outcome(std::move(X0), Matrix::Zero(problem.cols(), cfg.d), problem.r, c);
}

InitOutcome init_mf_general(const FactorizationProblem& problem, const InitConfig& cfg,
                            CThresholdKind auto_kind) {
  if (cfg.scheme != InitScheme::MfGeneralUnbalanced)
    throw std::invalid_argument("init_mf_general: wrong scheme");
  if (cfg.d < problem.r) throw std::invalid_argument("init_mf_general: need d >= r");
  if (cfg.c2 < 0.0) throw std::invalid_argument("init_mf_general: c2 must be >= 0");
  RandomSource rng(cfg.seed);
  Matrix Phi1 = gaussian_matrix(problem.cols(), cfg.d, 1.0 / static_cast<double>(cfg.d), rng);
  Matrix Phi2 = gaussian_matrix(problem.cols(), cfg.d, 1.0 / static_cast<double>(problem.cols()), rng);
  Matrix X0 = problem.A * Phi1;
  double c;
  if (cfg.c) {
    c = *cfg.c;
    if (c <= 0.0) throw std::invalid_argument("init_mf_general: c must be > 0");
  } else {
    const double cond_unit = singular_values(X0).cond;
    c = auto_kind == CThresholdKind::Gd
            ? c_threshold_gd(problem, cfg.d, cfg.tau, cond_unit)
            : c_threshold_nag(problem, cfg.d, cfg.tau);
  }
  X0 *= c;
  Matrix Y0 = cfg.c2 == 0.0 ? Matrix::Zero(problem.cols(), cfg.d).eval()
                            : (cfg.c2 * Phi2).eval();
  return finish_outcome(std::move(X0), std::move(Y0), problem.r, c);
}

InitOutcome init_lnn(const LinearNetworkProblem& problem, const InitConfig& cfg) {
  const Index m = problem.out_dim();
  const Index N = problem.samples();
  RandomSource rng(cfg.seed);
  Matrix X0;
  Index mu_rank = problem.r;
  switch (cfg.scheme) {
    case InitScheme::Lnn1: {
      if (cfg.d < problem.r) throw std::invalid_argument("init_lnn: need width d >= rank(labels)");
      X0 = problem.labels * gaussian_matrix(N, cfg.d, 1.0 / static_cast<double>(cfg.d), rng);
      break;
    }
    case InitScheme::Lnn2: {
      if (cfg.d < problem.r) throw std::invalid_argument("init_lnn: need width d >= rank(labels)");
      // L Phi has rank(labels) <= d, so orthonormalize its range; columns
      // beyond the rank stay zero (and remain zero under training with Y0 = 0).
      Matrix B = problem.labels * gaussian_matrix(N, cfg.d, 1.0 / static_cast<double>(cfg.d), rng);
      SvdResult dec = svd(B);
      X0 = Matrix::Zero(m, cfg.d);
      X0.leftCols(dec.spectrum.rank) = dec.U.leftCols(dec.spectrum.rank);
      break;
    }
    case InitScheme::Lnn3: {
      if (cfg.d < m) throw std::invalid_argument("init_lnn: need width d >= output dimension");
      X0 = gaussian_matrix(m, cfg.d, 1.0 / static_cast<double>(cfg.d), rng);
      mu_rank = m;
      break;
    }
    default:
      throw std::invalid_argument("init_lnn: not a network scheme");
  }
  double c;
  if (cfg.c) {
    c = *cfg.c;
    if (c <= 0.0) throw std::invalid_argument("init_lnn: c must be > 0");
  } else {
    // Minimal premise-satisfying scale, times a safety factor of 2.
    InitOutcome unit = finish_outcome(X0, Matrix::Zero(problem.in_dim(), cfg.d), mu_rank, 1.0);
    NagRatePremise premise = check_nag_premise(unit, problem);
    c = 2.0 * premise.min_c;
  }
  X0 *= c;
  return finish_outcome(std::move(X0), Matrix::Zero(problem.in_dim(), cfg.d), mu_rank, c);
}

SketchBoundReport check_sketch_bounds(const FactorizationProblem& problem, Index d, double tau,
                               double c, std::uint64_t seed) {
  InitConfig cfg;
  cfg.scheme = InitScheme::MfSketch;
  cfg.d = d;
  cfg.c = c;
  cfg.tau = tau;
  cfg.seed = seed;
  InitOutcome init = init_mf(problem, cfg);

  SketchBoundReport rep;
  const Vector& sv = init.X0_spectrum.singular_values;
  rep.sigma1_X0 = sv(0);
  rep.sigmar_X0 = sv(problem.r - 1);
  const double sd = std::sqrt(static_cast<double>(d));
  const double sr = std::sqrt(static_cast<double>(problem.r));
  const double gap = sd - std::sqrt(static_cast<double>(problem.r - 1));
  rep.lower_bound = tau * gap / sd * c * problem.sigma_r();
  rep.upper_bound = (2.0 * sd + sr) / sd * c * problem.sigma1();
  rep.cond_X0 = rep.sigma1_X0 / rep.sigmar_X0;
  rep.cond_bound = (2.0 * sd + sr) / (tau * gap) * problem.kappa;
  rep.lower_ok = rep.sigmar_X0 >= rep.lower_bound;
  rep.upper_ok = rep.sigma1_X0 <= rep.upper_bound;
  rep.cond_ok = rep.cond_X0 <= rep.cond_bound;
  return rep;
}

}  // namespace lowrank
