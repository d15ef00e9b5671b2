#include "lowrank/optimize.hpp"

#include <cmath>
#include <stdexcept>

namespace lowrank {

const char* method_name(Method m) {
  switch (m) {
    case Method::Gd: return "gd";
    case Method::AltGd: return "altgd";
    case Method::Nag: return "nag";
  }
  return "?";
}

const char* termination_name(Termination t) {
  switch (t) {
    case Termination::Converged: return "converged";
    case Termination::MaxIters: return "max-iters";
    case Termination::Diverged: return "diverged";
  }
  return "?";
}

static HyperParams theory_values(double L, double mu, Method method, EtaRule rule) {
  if (!(mu > 0.0)) throw std::invalid_argument("derive_hyperparams: mu must be > 0");
  HyperParams hp;
  hp.L = L;
  hp.mu = mu;
  if (method == Method::Nag) {
    hp.eta = 1.0 / L;
    const double sl = std::sqrt(L), sm = std::sqrt(mu);
    hp.beta = (sl - sm) / (sl + sm);
    hp.source = HyperSource::TheoryNag;
  } else if (rule == EtaRule::OneOverL) {
    hp.eta = 1.0 / L;
    hp.beta = 0.0;
    hp.source = HyperSource::Manual;
  } else {
    hp.eta = 2.0 / (L + mu);
    hp.beta = 0.0;
    hp.source = HyperSource::TheoryGd;
  }
  return hp;
}

HyperParams derive_hyperparams(const InitOutcome& init, Method method, EtaRule rule) {
  return theory_values(init.L, init.mu, method, rule);
}

HyperParams derive_hyperparams(const InitOutcome& init, Method method,
                               const LinearNetworkProblem& problem, EtaRule rule) {
  return theory_values(init.L * problem.lambda_max, init.mu * problem.lambda_min, method, rule);
}

Matrix Objective::residual(const Matrix& X, const Matrix& Y) const {
  if (lnn) return X * Y.transpose() * lnn->D - lnn->labels;
  return X * Y.transpose() - mf->A;
}

Matrix Objective::step_residual(const Matrix& R) const {
  if (lnn) return R * lnn->D.transpose();
  return R;
}

double Objective::target_norm() const {
  return lnn ? lnn->labels_norm_fro : mf->norm_fro;
}

Objective objective_of(const FactorizationProblem& p) {
  Objective o;
  o.mf = &p;
  return o;
}

Objective objective_of(const LinearNetworkProblem& p) {
  Objective o;
  o.lnn = &p;
  return o;
}

IterateState make_state(const Objective& obj, const Matrix& X0, const Matrix& Y0) {
  IterateState s;
  s.X = X0;
  s.Y = Y0;
  s.X_prev = X0;
  s.Y_prev = Y0;
  s.R = obj.residual(s.X, s.Y);
  s.R_step = obj.step_residual(s.R);
  s.R_step_prev = s.R_step;
  s.t = 0;
  return s;
}

static void refresh_residual(IterateState& s, const Objective& obj) {
  s.R = obj.residual(s.X, s.Y);
  s.R_step = obj.step_residual(s.R);
}

void gd_step(IterateState& s, const HyperParams& hp, const Objective& obj) {
  if (hp.beta != 0.0) throw std::invalid_argument("gd_step: beta must be 0");
  Matrix Xn = s.X - hp.eta * (s.R_step * s.Y);
  Matrix Yn = s.Y - hp.eta * (s.R_step.transpose() * s.X);
  s.X_prev = std::move(s.X);
  s.Y_prev = std::move(s.Y);
  s.R_step_prev = std::move(s.R_step);
  s.X = std::move(Xn);
  s.Y = std::move(Yn);
  refresh_residual(s, obj);
  ++s.t;
}

void altgd_step(IterateState& s, const HyperParams& hp, const Objective& obj, AltOrder order) {
  if (hp.beta != 0.0) throw std::invalid_argument("altgd_step: beta must be 0");
  Matrix Xn, Yn;
  if (order == AltOrder::XFirst) {
    Xn = s.X - hp.eta * (s.R_step * s.Y);
    Matrix R_mid = obj.step_residual(obj.residual(Xn, s.Y));
    Yn = s.Y - hp.eta * (R_mid.transpose() * Xn);
  } else {
    Yn = s.Y - hp.eta * (s.R_step.transpose() * s.X);
    Matrix R_mid = obj.step_residual(obj.residual(s.X, Yn));
    Xn = s.X - hp.eta * (R_mid * Yn);
  }
  s.X_prev = std::move(s.X);
  s.Y_prev = std::move(s.Y);
  s.R_step_prev = std::move(s.R_step);
  s.X = std::move(Xn);
  s.Y = std::move(Yn);
  refresh_residual(s, obj);
  ++s.t;
}

void nag_step(IterateState& s, const HyperParams& hp, const Objective& obj) {
  // X_{t+1} = (1+beta) G_t - beta G_{t-1} computed as G_t + beta (G_t - G_{t-1})
  // with G the plain gradient points; exact at t = 0 where both coincide.
  Matrix Gx = s.X - hp.eta * (s.R_step * s.Y);
  Matrix Gy = s.Y - hp.eta * (s.R_step.transpose() * s.X);
  Matrix Xn, Yn;
  if (hp.beta == 0.0) {
    Xn = std::move(Gx);
    Yn = std::move(Gy);
  } else {
    Matrix Gx_prev = s.X_prev - hp.eta * (s.R_step_prev * s.Y_prev);
    Matrix Gy_prev = s.Y_prev - hp.eta * (s.R_step_prev.transpose() * s.X_prev);
    Xn = Gx + hp.beta * (Gx - Gx_prev);
    Yn = Gy + hp.beta * (Gy - Gy_prev);
  }
  s.X_prev = std::move(s.X);
  s.Y_prev = std::move(s.Y);
  s.R_step_prev = std::move(s.R_step);
  s.X = std::move(Xn);
  s.Y = std::move(Yn);
  refresh_residual(s, obj);
  ++s.t;
}

void nag_lnn_step(IterateState& s, const HyperParams& hp, const LinearNetworkProblem& problem) {
  nag_step(s, hp, objective_of(problem));
}

RunResult run(const Objective& obj, IterateState& state, Method method,
              const HyperParams& hp, const StopRule& stop, const RunHooks& hooks) {
  if (stop.eps_rel <= 0.0 || stop.max_iters < 1)
    throw std::invalid_argument("run: bad stop rule");
  const Matrix X0 = state.X;
  const Matrix Y0 = state.Y;
  const double target = obj.target_norm();

  RunResult result;
  result.initial_loss = 0.5 * state.R.squaredNorm();

  auto emit = [&](const IterateState* before) {
    if (!hooks.row && !hooks.observe && !hooks.inspect) return;
    TraceRow row;
    row.iter = state.t;
    row.resid_fro = state.R.norm();
    row.resid_rel = target > 0.0 ? row.resid_fro / target : row.resid_fro;
    row.loss = 0.5 * state.R.squaredNorm();
    row.dist_x = (state.X - X0).norm();
    row.dist_y = (state.Y - Y0).norm();
    if (hooks.inspect) hooks.inspect(state, row);
    if (before && hooks.observe) hooks.observe(*before, state, row);
    if (hooks.row) hooks.row(row);
  };

  emit(nullptr);
  while (true) {
    const double resid = state.R.norm();
    const double loss = 0.5 * resid * resid;
    if (!std::isfinite(loss) || loss > stop.divergence_factor * std::max(result.initial_loss, 1e-300)) {
      result.termination = Termination::Diverged;
      break;
    }
    if (resid <= stop.eps_rel * target) {
      result.termination = Termination::Converged;
      break;
    }
    if (state.t >= stop.max_iters) {
      result.termination = Termination::MaxIters;
      break;
    }
    const bool observed = hooks.observe && hooks.observe_every > 0 &&
                          state.t % hooks.observe_every == 0;
    IterateState before;
    if (observed) before = state;
    switch (method) {
      case Method::Gd: gd_step(state, hp, obj); break;
      case Method::AltGd: altgd_step(state, hp, obj); break;
      case Method::Nag: nag_step(state, hp, obj); break;
    }
    emit(observed ? &before : nullptr);
  }
  result.iters = state.t;
  const double final_resid = state.R.norm();
  result.final_resid_rel = target > 0.0 ? final_resid / target : final_resid;
  return result;
}

}  // namespace lowrank
