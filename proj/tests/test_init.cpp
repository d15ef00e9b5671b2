#include <doctest.h>

#include <cmath>

#include "lowrank/init.hpp"
#include "lowrank/optimize.hpp"
#include "lowrank/random.hpp"

using namespace lowrank;

namespace {

const FactorizationProblem& desk_problem() {
  static FactorizationProblem p =
      make_mf_problem(100, 80, 5, 1.0, 0.2, SpectrumProfile::Geometric, 0);
  return p;
}

InitConfig sketch_cfg(Index d, double c, std::uint64_t seed, double tau = 0.1) {
  InitConfig cfg;
  cfg.scheme = InitScheme::MfSketch;
  cfg.d = d;
  cfg.c = c;
  cfg.tau = tau;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("make_mf_problem: desk-scale instance") {
  const auto& p = desk_problem();
  CHECK(p.kappa == doctest::Approx(5.0).epsilon(1e-11));
  CHECK(p.spectrum.singular_values(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.spectrum.singular_values(4) == doctest::Approx(0.2).epsilon(1e-12));
  // exact numerical rank r
  SpectralSummary s = singular_values(p.A);
  CHECK(s.rank == 5);
  CHECK(s.singular_values(5) <= 1e-12);
  CHECK(spectral_norm(p.A) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("make_mf_problem: rank-1 outer product") {
  FactorizationProblem p = make_mf_problem(7, 4, 1, 2.5, 2.5, SpectrumProfile::Geometric, 1);
  CHECK(p.kappa == doctest::Approx(1.0));
  CHECK(singular_values(p.A).rank == 1);
}

TEST_CASE("make_mf_problem: bad dimensions rejected") {
  CHECK_THROWS_AS(make_mf_problem(4, 4, 5, 1.0, 0.5, SpectrumProfile::Geometric, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_mf_problem(4, 4, 2, 0.5, 1.0, SpectrumProfile::Geometric, 0),
                  std::invalid_argument);
}

TEST_CASE("init_mf: zero target propagates and is rejected downstream") {
  FactorizationProblem p;
  p.A = Matrix::Zero(4, 3);
  p.r = 1;
  p.norm_fro = 0.0;
  InitOutcome init = init_mf(p, sketch_cfg(2, 1.0, 3));
  CHECK(init.X0.norm() == 0.0);
  CHECK(init.mu == 0.0);
  CHECK_THROWS_AS(derive_hyperparams(init, Method::Gd), std::invalid_argument);
}

TEST_CASE("init_mf: sketch stays in the target column space") {
  FactorizationProblem p = make_mf_problem(9, 6, 1, 1.0, 1.0, SpectrumProfile::Geometric, 2);
  InitOutcome init = init_mf(p, sketch_cfg(3, 2.0, 5));
  CHECK(init.X0_spectrum.rank == 1);
  const Matrix& U = p.left_frame;
  const double leak = (init.X0 - U * (U.transpose() * init.X0)).norm();
  CHECK(leak <= 1e-10 * init.X0.norm());
}

TEST_CASE("init_mf: doubling c doubles the spectrum, cond unchanged") {
  const auto& p = desk_problem();
  InitOutcome a = init_mf(p, sketch_cfg(10, 30.0, 7));
  InitOutcome b = init_mf(p, sketch_cfg(10, 60.0, 7));
  SpectralSummary sa = singular_values(a.X0);
  SpectralSummary sb = singular_values(b.X0);
  CHECK(sb.singular_values(0) == doctest::Approx(2.0 * sa.singular_values(0)).epsilon(1e-12));
  CHECK(sb.singular_values(4) == doctest::Approx(2.0 * sa.singular_values(4)).epsilon(1e-12));
  CHECK(std::abs(b.cond_X0 / a.cond_X0 - 1.0) <= 1e-12);
}

TEST_CASE("init_mf: d < r rejected") {
  CHECK_THROWS_AS(init_mf(desk_problem(), sketch_cfg(4, 1.0, 1)), std::invalid_argument);
}

TEST_CASE("init_mf: auto c resolves to the theory threshold") {
  const auto& p = desk_problem();
  InitConfig cfg = sketch_cfg(20, 1.0, 11, 0.05);
  cfg.c.reset();
  InitOutcome init = init_mf(p, cfg, CThresholdKind::Gd);
  // two-pass oracle: same Phi at unit scale, measured cond, threshold
  InitOutcome unit = init_mf(p, sketch_cfg(20, 1.0, 11, 0.05));
  const double expected = c_threshold_gd(p, 20, 0.05, unit.cond_X0);
  CHECK(init.c_used == doctest::Approx(expected).epsilon(1e-15));
  CHECK(std::abs(init.cond_X0 / unit.cond_X0 - 1.0) <= 1e-12);

  InitOutcome init_nag = init_mf(p, cfg, CThresholdKind::Nag);
  CHECK(init_nag.c_used == doctest::Approx(c_threshold_nag(p, 20, 0.05)).epsilon(1e-15));
}

TEST_CASE("init_mf_general: c2 = 0 degenerates to the sketch scheme") {
  const auto& p = desk_problem();
  InitConfig cfg = sketch_cfg(10, 50.0, 13);
  cfg.scheme = InitScheme::MfGeneralUnbalanced;
  cfg.c2 = 0.0;
  InitOutcome gen = init_mf_general(p, cfg);
  InitOutcome base = init_mf(p, sketch_cfg(10, 50.0, 13));
  CHECK((gen.X0.array() == base.X0.array()).all());
  CHECK(gen.Y0.norm() == 0.0);
}

TEST_CASE("init_mf_general: initial loss identity and monotonicity in c2") {
  const auto& p = desk_problem();
  double prev_mean = -1.0;
  for (double c2 : {0.0, 0.1, 1.0}) {
    double mean = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      InitConfig cfg = sketch_cfg(20, 50.0, seed);
      cfg.scheme = InitScheme::MfGeneralUnbalanced;
      cfg.c2 = c2;
      InitOutcome init = init_mf_general(p, cfg);
      const double f0 = 0.5 * (init.X0 * init.Y0.transpose() - p.A).squaredNorm();
      mean += f0 / 10.0;
    }
    CHECK(mean >= prev_mean);
    prev_mean = mean;
  }
}

TEST_CASE("c_threshold_gd: closed form and monotonicity") {
  const auto& p = desk_problem();
  const double cond = 6.0;
  // frozen evaluation of the closed form at d = r = 5, tau = 0.1
  const double sd = std::sqrt(5.0);
  const double denom = 12.0 * 0.1 * (sd - 2.0);
  const double expected =
      sd * p.sigma_r() / denom * std::sqrt(std::pow(cond, 4) * p.norm_fro / (cond * cond - 1.0));
  CHECK(c_threshold_gd(p, 5, 0.1, cond) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(0.1 * (sd - 2.0) == doctest::Approx(0.0236067977).epsilon(1e-8));

  CHECK(c_threshold_gd(p, 5, 0.2, cond) < c_threshold_gd(p, 5, 0.1, cond));
  CHECK_THROWS_AS(c_threshold_gd(p, 5, 0.1, 1.0), std::domain_error);
}

TEST_CASE("c_threshold_gd: homogeneous in the target scale") {
  const auto& p = desk_problem();
  FactorizationProblem ps = problem_from_matrix(4.0 * p.A, p.r);
  const double cond = 6.0;
  // sigma_r scales by s and ||A||_F by s: total s * sqrt(s)
  const double ratio = c_threshold_gd(ps, 10, 0.1, cond) / c_threshold_gd(p, 10, 0.1, cond);
  CHECK(ratio == doctest::Approx(4.0 * 2.0).epsilon(1e-10));
}

TEST_CASE("c_threshold_nag: frozen 1x1 evaluation and monotonicity") {
  FactorizationProblem unit = problem_from_matrix(Matrix::Ones(1, 1), 1);
  CHECK(c_threshold_nag(unit, 1, 0.1) ==
        doctest::Approx(29.0 * std::sqrt(3000.0)).epsilon(1e-12));
  const auto& p = desk_problem();
  CHECK(c_threshold_nag(p, 5, 0.2) < c_threshold_nag(p, 5, 0.1));
  CHECK(std::isfinite(c_threshold_nag(p, 5, 0.1)));  // d = r stays finite
}

TEST_CASE("check_sketch_bounds: exact factor at d = r = 5") {
  const auto& p = desk_problem();
  SketchBoundReport rep = check_sketch_bounds(p, 5, 0.1, 10.0, 3);
  // (2 sqrt(5) + sqrt(5)) / sqrt(5) = 3
  CHECK(rep.upper_bound == doctest::Approx(3.0 * 10.0 * p.sigma1()).epsilon(1e-12));
}

TEST_CASE("check_sketch_bounds: vacuous lower bound as tau -> 0") {
  const auto& p = desk_problem();
  SketchBoundReport rep = check_sketch_bounds(p, 10, 1e-12, 1.0, 4);
  CHECK(rep.lower_ok);
}

TEST_CASE("check_sketch_bounds: Monte Carlo violation rate") {
  FactorizationProblem p = make_mf_problem(100, 80, 3, 1.0, 0.2, SpectrumProfile::Geometric, 0);
  int fails = 0;
  const int trials = 1000;
  for (int s = 1; s <= trials; ++s)
    if (!check_sketch_bounds(p, 10, 0.05, 1.0, s).pass()) ++fails;
  CHECK(static_cast<double>(fails) / trials <= 0.01);
}

TEST_CASE("init_lnn: orthonormalized scheme has cond exactly 1") {
  LinearNetworkProblem p = make_lnn_problem(20, 12, 30, 4, 1.0, 0.5, 0);
  InitConfig cfg;
  cfg.scheme = InitScheme::Lnn2;
  cfg.d = 6;
  cfg.c = 3.0;
  cfg.seed = 2;
  InitOutcome init = init_lnn(p, cfg);
  CHECK(std::abs(init.cond_X0 - 1.0) <= 1e-12);
  CHECK(init.L == doctest::Approx(9.0).epsilon(1e-12));
}

TEST_CASE("init_lnn: sketch scheme spans the label space") {
  LinearNetworkProblem p = make_lnn_problem(20, 12, 30, 4, 1.0, 0.5, 0);
  InitConfig cfg;
  cfg.scheme = InitScheme::Lnn1;
  cfg.d = 6;
  cfg.c = 2.0;
  cfg.seed = 3;
  InitOutcome init = init_lnn(p, cfg);
  Matrix basis = svd(init.X0).U.leftCols(init.X0_spectrum.rank);
  const double leak = (p.labels - basis * (basis.transpose() * p.labels)).norm();
  CHECK(leak <= 1e-10 * p.labels.norm());
}

TEST_CASE("init_lnn: full-width Gaussian is generically nondegenerate") {
  LinearNetworkProblem p = make_lnn_problem(10, 8, 15, 3, 1.0, 0.5, 0);
  InitConfig cfg;
  cfg.scheme = InitScheme::Lnn3;
  cfg.d = 10;  // = m
  cfg.c = 1.0;
  int ok = 0;
  const int trials = 1000;
  for (int s = 1; s <= trials; ++s) {
    cfg.seed = s;
    InitOutcome init = init_lnn(p, cfg);
    if (init.mu > 0.0) ++ok;
  }
  CHECK(ok >= 990);
}

TEST_CASE("init_lnn: width below the scheme minimum rejected") {
  LinearNetworkProblem p = make_lnn_problem(10, 8, 15, 3, 1.0, 0.5, 0);
  InitConfig cfg;
  cfg.scheme = InitScheme::Lnn1;
  cfg.d = 2;  // < rank(labels) = 3
  cfg.c = 1.0;
  CHECK_THROWS_AS(init_lnn(p, cfg), std::invalid_argument);
  cfg.scheme = InitScheme::Lnn3;
  cfg.d = 9;  // < m
  CHECK_THROWS_AS(init_lnn(p, cfg), std::invalid_argument);
}
