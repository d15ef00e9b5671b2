#pragma once

#include <functional>

#include "lowrank/init.hpp"
#include "lowrank/lnn.hpp"
#include "lowrank/problem.hpp"
#include "lowrank/trace.hpp"

namespace lowrank {

enum class Method { Gd, AltGd, Nag };

/// Step-size rule for gradient-descent arms: the theory value 2/(L+mu) or
/// the plain 1/L used for the step-size comparison runs.
enum class EtaRule { Theory, OneOverL };

enum class HyperSource { TheoryGd, TheoryNag, Manual };

struct HyperParams {
  double eta = 0.0;
  double beta = 0.0;
  double L = 0.0;
  double mu = 0.0;
  HyperSource source = HyperSource::Manual;
};

const char* method_name(Method m);

/// Theory hyperparameters from the initialization spectrum. Rejects mu = 0.
HyperParams derive_hyperparams(const InitOutcome& init, Method method,
                               EtaRule rule = EtaRule::Theory);

/// Network variant: L~ = sigma_1^2(X0) lambda_max(D D^T),
/// mu~ = sigma_r^2(X0) lambda_min(D D^T).
HyperParams derive_hyperparams(const InitOutcome& init, Method method,
                               const LinearNetworkProblem& problem,
                               EtaRule rule = EtaRule::Theory);

/// Either factorization objective 1/2 ||X Y^T - A||_F^2 or the network
/// objective 1/2 ||X Y^T D - L||_F^2. Gradient steps for the latter are
/// driven by the projected residual R D^T.
struct Objective {
  const FactorizationProblem* mf = nullptr;
  const LinearNetworkProblem* lnn = nullptr;

  bool is_lnn() const { return lnn != nullptr; }
  Matrix residual(const Matrix& X, const Matrix& Y) const;
  Matrix step_residual(const Matrix& R) const;  // identity for MF, R D^T for LNN
  double target_norm() const;                   // ||A||_F or ||labels||_F
};

Objective objective_of(const FactorizationProblem& p);
Objective objective_of(const LinearNetworkProblem& p);

struct IterateState {
  Matrix X, Y;
  Matrix X_prev, Y_prev;  // equal to X, Y at t = 0
  Matrix R;               // problem residual, consistent with (X, Y)
  Matrix R_step;          // residual driving updates (projected for LNN)
  Matrix R_step_prev;
  long t = 0;
};

IterateState make_state(const Objective& obj, const Matrix& X0, const Matrix& Y0);

/// Simultaneous update of both factors from the same residual.
void gd_step(IterateState& state, const HyperParams& hp, const Objective& obj);

enum class AltOrder { XFirst, YFirst };

/// One factor updated first, the other with the refreshed residual.
void altgd_step(IterateState& state, const HyperParams& hp, const Objective& obj,
                AltOrder order = AltOrder::XFirst);

/// Momentum update on both factors; previous iterates rotate through the state.
void nag_step(IterateState& state, const HyperParams& hp, const Objective& obj);

/// Network form of the momentum update (identical shape, projected residual).
void nag_lnn_step(IterateState& state, const HyperParams& hp,
                  const LinearNetworkProblem& problem);

struct StopRule {
  double eps_rel = 1e-8;           // stop when ||R_t||_F <= eps_rel * target
  long max_iters = 100000;
  double divergence_factor = 1e6;  // abort when loss exceeds this times f0
};

enum class Termination { Converged, MaxIters, Diverged };

const char* termination_name(Termination t);

struct RunResult {
  Termination termination = Termination::MaxIters;
  long iters = 0;
  double final_resid_rel = 0.0;
  double initial_loss = 0.0;
};

/// Per-iteration hooks. `row` fills base fields. `inspect` sees every emitted
/// state without any copying; `observe` additionally gets the pre-step state
/// (snapshotted, so gate it with observe_every).
struct RunHooks {
  std::function<void(const TraceRow&)> row;
  std::function<void(const IterateState& state, TraceRow& row)> inspect;
  std::function<void(const IterateState& before, const IterateState& after, TraceRow& row)> observe;
  long observe_every = 0;  // 0 = never snapshot/observe
};

/// Emits one row per iterate (t = 0 first), steps until the stop rule fires.
RunResult run(const Objective& obj, IterateState& state, Method method,
              const HyperParams& hp, const StopRule& stop, const RunHooks& hooks);

}  // namespace lowrank
