#include "lowrank/dynamics.hpp"

#include <cmath>
#include <stdexcept>

#include "lowrank/detail/quadscalar.hpp"

namespace lowrank {

namespace {

constexpr Index kExplicitGate = 400;  // largest m*n for materialized operators

// Dynamics residual: the problem residual for MF, the projected residual for
// the network objective (both m x n).
const Matrix& dyn_residual(const IterateState& s, const Objective& obj) {
  return obj.is_lnn() ? s.R_step : s.R;
}

// Applies the step-t operator H_t to a dynamics residual in matrix form.
Matrix apply_h_eff(const Matrix& X, const Matrix& Y, const Matrix& R, const Objective& obj) {
  Matrix out = apply_H(X, Y, R);
  if (obj.is_lnn()) out = out * obj.lnn->DDt;
  return out;
}

Matrix cross_term(const Matrix& P, const Matrix& Q, const Objective& obj) {
  Matrix out = P * Q.transpose();
  if (obj.is_lnn()) out = out * obj.lnn->DDt;
  return out;
}

}  // namespace

DynamicsCheck gd_decomposition_check(const IterateState& before, const IterateState& after,
                                     const Matrix& X0, const Matrix& Y0,
                                     const HyperParams& hp, const Objective& obj) {
  const Matrix& r_t = dyn_residual(before, obj);
  const Matrix& r_next = dyn_residual(after, obj);
  const Matrix P = after.X - before.X;
  const Matrix Q = after.Y - before.Y;

  const Matrix h0_r = apply_h_eff(X0, Y0, r_t, obj);
  const Matrix ht_r = apply_h_eff(before.X, before.Y, r_t, obj);
  const Matrix linear = r_t - hp.eta * h0_r;
  const Matrix xi = hp.eta * (h0_r - ht_r) + cross_term(P, Q, obj);

  DynamicsCheck chk;
  chk.decomposition_residual = (r_next - linear - xi).norm();
  chk.xi_norm = xi.norm();
  const double rt_norm = r_t.norm();
  chk.contraction_measured = rt_norm > 0.0 ? linear.norm() / rt_norm : 0.0;
  chk.leakage = obj.is_lnn() ? subspace_leakage(r_next, *obj.lnn)
                             : subspace_leakage(r_next, *obj.mf);
  return chk;
}

DynamicsCheck nag_decomposition_check(const IterateState& before, const IterateState& after,
                                      const Matrix& X0, const Matrix& Y0,
                                      const HyperParams& hp, const Objective& obj) {
  const Matrix& r_t = dyn_residual(before, obj);
  const Matrix& r_next = dyn_residual(after, obj);
  // before carries the t-1 iterates; at t = 0 they equal the current ones.
  const Matrix& r_prev = before.R_step_prev;
  const Matrix P_t = after.X - before.X;
  const Matrix Q_t = after.Y - before.Y;
  const Matrix P_prev = before.X - before.X_prev;
  const Matrix Q_prev = before.Y - before.Y_prev;
  const double eta = hp.eta, beta = hp.beta;

  const Matrix h0_rt = apply_h_eff(X0, Y0, r_t, obj);
  const Matrix ht_rt = apply_h_eff(before.X, before.Y, r_t, obj);
  const Matrix h0_rp = apply_h_eff(X0, Y0, r_prev, obj);
  const Matrix hp_rp = apply_h_eff(before.X_prev, before.Y_prev, r_prev, obj);

  Matrix zeta = cross_term(P_t, Q_t, obj) + beta * cross_term(P_prev, Q_prev, obj);
  {
    Matrix inner = r_prev * before.Y_prev * Q_prev.transpose() +
                   P_prev * before.X_prev.transpose() * r_prev;
    if (obj.is_lnn()) inner = inner * obj.lnn->DDt;
    zeta += beta * eta * inner;
  }
  const Matrix iota = (1.0 + beta) * eta * (h0_rt - ht_rt) - beta * eta * (h0_rp - hp_rp);
  const Matrix linear = (1.0 + beta) * (r_t - eta * h0_rt) - beta * (r_prev - eta * h0_rp);

  DynamicsCheck chk;
  chk.decomposition_residual = (r_next - linear - zeta - iota).norm();
  chk.zeta_norm = zeta.norm();
  chk.iota_norm = iota.norm();
  chk.xi_norm = (zeta + iota).norm();
  const double block_before = std::hypot(r_t.norm(), r_prev.norm());
  const double block_applied = std::hypot(linear.norm(), r_t.norm());
  chk.contraction_measured = block_before > 0.0 ? block_applied / block_before : 0.0;
  chk.leakage = obj.is_lnn() ? subspace_leakage(r_next, *obj.lnn)
                             : subspace_leakage(r_next, *obj.mf);
  return chk;
}

double subspace_leakage(const Matrix& R, const FactorizationProblem& problem) {
  const Matrix& U = problem.left_frame;
  return (R - U * (U.transpose() * R)).norm();
}

double subspace_leakage(const Matrix& R_proj, const LinearNetworkProblem& problem) {
  const Matrix& UL = problem.label_frame;
  const Matrix& UD = problem.data_frame;
  return (R_proj - UL * (UL.transpose() * R_proj * UD) * UD.transpose()).norm();
}

ContractionBound contraction_factor(Method method, double L, double mu, double eta,
                                    double beta) {
  if (!(L >= mu) || !(mu > 0.0) || !(eta > 0.0))
    throw std::invalid_argument("contraction_factor: bad parameters");
  ContractionBound out;
  if (method == Method::Nag) {
    out.factor = 1.0 - std::sqrt(mu / L);
    const double beta_theory = (std::sqrt(L) - std::sqrt(mu)) / (std::sqrt(L) + std::sqrt(mu));
    out.guaranteed = std::abs(eta * L - 1.0) <= 1e-12 &&
                     std::abs(beta - beta_theory) <= 1e-12 * std::max(1.0, beta_theory);
  } else {
    out.factor = std::max(std::abs(1.0 - eta * L), std::abs(1.0 - eta * mu));
    out.guaranteed = eta > 0.0 && eta < 2.0 / L;
  }
  return out;
}

double TheoryBound::value_at(long t) const {
  const bool loss_curve = kind == BoundKind::LossCurveGd || kind == BoundKind::LossCurveNag;
  return prefactor * std::pow(rate_per_iter, loss_curve ? 2.0 * t : 1.0 * t);
}

TheoryBound theory_bound(BoundKind kind, const InitOutcome& init,
                         const FactorizationProblem& problem, double initial_loss) {
  TheoryBound b;
  b.kind = kind;
  const double s1 = problem.sigma1();
  const double c = init.c_used;
  switch (kind) {
    case BoundKind::GdResidual:
      b.prefactor = 3.0 * c * c * s1 * s1 / 64.0;
      b.rate_per_iter = 1.0 - init.mu / init.L;
      break;
    case BoundKind::NagResidual:
      b.prefactor = c * c * s1 * s1 / (64.0 * init.cond_X0);
      b.rate_per_iter = 1.0 - 0.5 * std::sqrt(init.mu / init.L);
      break;
    case BoundKind::LossCurveGd:
      b.prefactor = initial_loss;
      b.rate_per_iter = 1.0 - init.mu / init.L;
      break;
    case BoundKind::LossCurveNag:
      b.prefactor = initial_loss;
      b.rate_per_iter = 1.0 - 0.5 * std::sqrt(init.mu / init.L);
      break;
    default:
      throw std::invalid_argument("theory_bound: network bound needs theory_bound_lnn");
  }
  return b;
}

TheoryBound theory_bound_lnn(const InitOutcome& init, const LinearNetworkProblem& problem) {
  TheoryBound b;
  b.kind = BoundKind::LnnResidual;
  b.prefactor = init.mu * problem.sigma_min_D / 576.0;  // sigma_r^2(X0) sigma_min(D) / 576
  const double L_t = init.L * problem.lambda_max;
  const double mu_t = init.mu * problem.lambda_min;
  b.rate_per_iter = 1.0 - 0.5 * std::sqrt(mu_t / L_t);
  return b;
}

std::vector<double> theory_bound_curve(const TheoryBound& bound, long t_max) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(t_max) + 1);
  for (long t = 0; t <= t_max; ++t) out.push_back(bound.value_at(t));
  return out;
}

double iteration_complexity(BoundKind kind, double kappa, double cond_X0, double tau,
                            Index d, Index r, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("iteration_complexity: need eps in (0,1)");
  const double dd = static_cast<double>(d);
  const double gap = dd - static_cast<double>(r) + 1.0;
  const double sd = std::sqrt(dd), sr = std::sqrt(static_cast<double>(r));
  const double sgap = sd - std::sqrt(static_cast<double>(r - 1));
  switch (kind) {
    case BoundKind::GdResidual: {
      const double c2 = cond_X0 * cond_X0;
      const double C = 27.0 * tau * tau * gap * gap / (16.0 * dd * dd) * c2 * c2 * kappa * kappa /
                       (c2 - 1.0);
      return dd * dd * kappa * kappa / (tau * tau * gap * gap) * std::log(C / eps);
    }
    case BoundKind::NagResidual: {
      const double C = 841.0 * dd * (2.0 * sd + sr) / (64.0 * tau * tau * tau * sgap * sgap * sgap) *
                       kappa * kappa * kappa / cond_X0;
      return dd * kappa / (tau * gap) * std::log(C / eps);
    }
    case BoundKind::LnnResidual:
      // kappa here is cond^2(D); unit constant folded in.
      return cond_X0 * std::sqrt(kappa) * std::log(1.0 / eps);
    default:
      throw std::invalid_argument("iteration_complexity: unsupported kind");
  }
}

Matrix build_h_matrix(const Matrix& X, const Matrix& Y, Index m, Index n) {
  if (m * n > kExplicitGate) throw std::invalid_argument("build_h_matrix: m*n above explicit gate");
  if (X.rows() != m || Y.rows() != n) throw std::invalid_argument("build_h_matrix: shape mismatch");
  const Matrix YYt = Y * Y.transpose();
  const Matrix XXt = X * X.transpose();
  Matrix H = Matrix::Zero(m * n, m * n);
  for (Index j = 0; j < n; ++j)
    for (Index l = 0; l < n; ++l)
      for (Index i = 0; i < m; ++i) {
        H(j * m + i, l * m + i) += YYt(j, l);
        if (j == l)
          for (Index k = 0; k < m; ++k) H(j * m + i, l * m + k) += XXt(i, k);
      }
  return H;
}

Matrix build_h_matrix_lnn(const Matrix& X, const Matrix& Y, const Matrix& DDt, Index m) {
  const Index n = DDt.rows();
  if (m * n > kExplicitGate) throw std::invalid_argument("build_h_matrix_lnn: m*n above explicit gate");
  const Matrix B1 = DDt * (Y * Y.transpose());
  const Matrix XXt = X * X.transpose();
  Matrix H = Matrix::Zero(m * n, m * n);
  for (Index j = 0; j < n; ++j)
    for (Index l = 0; l < n; ++l)
      for (Index i = 0; i < m; ++i) {
        H(j * m + i, l * m + i) += B1(j, l);
        for (Index k = 0; k < m; ++k) H(j * m + i, l * m + k) += DDt(j, l) * XXt(i, k);
      }
  return H;
}

Matrix build_t_nag(const Matrix& H0, double eta, double beta) {
  const Index mn = H0.rows();
  Matrix T = Matrix::Zero(2 * mn, 2 * mn);
  const Matrix lin = Matrix::Identity(mn, mn) - eta * H0;
  T.topLeftCorner(mn, mn) = (1.0 + beta) * lin;
  T.topRightCorner(mn, mn) = -beta * lin;
  T.bottomLeftCorner(mn, mn) = Matrix::Identity(mn, mn);
  return T;
}

Matrix h_subspace_basis(const Matrix& X0, Index r, Index n) {
  const Index m = X0.rows();
  Matrix U = svd(X0).U.leftCols(r);
  Matrix B = Matrix::Zero(m * n, r * n);
  for (Index j = 0; j < n; ++j) B.block(j * m, j * r, m, r) = U;
  return B;
}

double restricted_gd_extreme(const Matrix& X0, Index r, Index n, double eta) {
  const Index m = X0.rows();
  const Matrix H0 = build_h_matrix(X0, Matrix::Zero(n, X0.cols()), m, n);
  const Matrix B = h_subspace_basis(X0, r, n);
  const Matrix T = Matrix::Identity(m * n, m * n) - eta * H0;
  const Matrix M = B.transpose() * T * B;
  Eigen::SelfAdjointEigenSolver<Matrix> es(M);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

NagRadiusReport nag_restricted_radius(const Matrix& X0, Index r, Index n) {
  using qp::MatrixQ;
  using qp::Quad;
  const Index m = X0.rows();
  if (m * n > kExplicitGate)
    throw std::invalid_argument("nag_restricted_radius: m*n above explicit gate");

  MatrixQ X0q(m, X0.cols());
  for (Index j = 0; j < X0.cols(); ++j)
    for (Index i = 0; i < m; ++i) X0q(i, j) = Quad(X0(i, j));

  // One quad SVD supplies the basis of H (the positive eigenspace of H0) and
  // the L, mu that the theory hyperparameters are tuned to; deriving them from
  // anything less consistent re-breaks the defective eigenvalue.
  Eigen::JacobiSVD<MatrixQ> dec(X0q, Eigen::ComputeThinU);
  const Quad s1 = dec.singularValues()(0);
  const Quad sr = dec.singularValues()(r - 1);
  const Quad L = s1 * s1, mu = sr * sr;
  const Quad eta = Quad(1) / L;
  const Quad beta = (sqrt(L) - sqrt(mu)) / (sqrt(L) + sqrt(mu));

  const Index mn = m * n, k = r * n;
  MatrixQ H0 = MatrixQ::Zero(mn, mn);
  const MatrixQ XXt = X0q * X0q.transpose();
  for (Index j = 0; j < n; ++j) H0.block(j * m, j * m, m, m) = XXt;

  MatrixQ lin = -eta * H0;
  for (Index i = 0; i < mn; ++i) lin(i, i) += Quad(1);
  MatrixQ T = MatrixQ::Zero(2 * mn, 2 * mn);
  T.topLeftCorner(mn, mn) = (Quad(1) + beta) * lin;
  T.topRightCorner(mn, mn) = -beta * lin;
  for (Index i = 0; i < mn; ++i) T(mn + i, i) = Quad(1);

  MatrixQ U = dec.matrixU().leftCols(r);
  MatrixQ B = MatrixQ::Zero(2 * mn, 2 * k);
  for (Index j = 0; j < n; ++j) {
    B.block(j * m, j * r, m, r) = U;
    B.block(mn + j * m, k + j * r, m, r) = U;
  }
  const MatrixQ M = B.transpose() * T * B;

  Eigen::EigenSolver<MatrixQ> es(M);
  Quad radius = Quad(0);
  for (Index i = 0; i < M.rows(); ++i) {
    const auto z = es.eigenvalues()(i);
    const Quad mod = sqrt(z.real() * z.real() + z.imag() * z.imag());
    if (mod > radius) radius = mod;
  }
  NagRadiusReport rep;
  rep.radius = static_cast<double>(radius);
  rep.bound = static_cast<double>(Quad(1) - sqrt(mu / L));
  rep.margin = rep.bound - rep.radius;
  return rep;
}

}  // namespace lowrank
