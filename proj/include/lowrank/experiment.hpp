#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lowrank/dynamics.hpp"
#include "lowrank/init.hpp"
#include "lowrank/lnn.hpp"
#include "lowrank/optimize.hpp"
#include "lowrank/problem.hpp"
#include "lowrank/trace.hpp"

namespace lowrank {

enum class ProblemKind { Mf, Lnn };

struct ProblemBlock {
  ProblemKind kind = ProblemKind::Mf;
  Index m = 100, n = 80, r = 5;
  double sigma1 = 1.0, sigma_r = 0.2;
  SpectrumProfile profile = SpectrumProfile::Geometric;
  std::uint64_t seed = 0;
  // network extras
  Index samples = 120, rank_d = 5;
  double sigma1_d = 1.0, sigmar_d = 0.5;
};

struct InitBlock {
  InitScheme scheme = InitScheme::MfSketch;
  Index d = 20;
  // c: absent key = 50 sqrt(d); "auto" = theory threshold (MF) or twice the
  // minimal premise scale (LNN).
  std::optional<double> c;
  bool c_auto = false;
  double c2 = 0.0;
  double tau = 0.1;
};

struct MethodArm {
  Method method = Method::Gd;
  EtaRule eta_rule = EtaRule::Theory;

  std::string label() const;  // "gd", "altgd", "nag", "gd@1/L"
  std::string file_tag() const;  // filesystem-safe
};

enum class DiagnosticsMode { Off, Sampled, Full };

struct RunBlock {
  std::vector<MethodArm> methods;
  double eps_rel = 1e-8;
  long max_iters = 100000;
  std::vector<std::uint64_t> seeds;
  DiagnosticsMode diagnostics = DiagnosticsMode::Sampled;
};

struct SweepBlock {
  std::string axis;  // d | c | c2 | sigma_r
  std::vector<double> values;
};

struct ExperimentConfig {
  std::string name = "experiment";
  ProblemBlock problem;
  InitBlock init;
  RunBlock run;
  std::optional<SweepBlock> sweep;
  int prop1_seeds = 0;  // verify-mode Monte Carlo, 0 = off
  std::string out_dir = "out";
};

/// Parses the flat key-value/section config format. Throws
/// ConfigError with a line-anchored message on any problem.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

ExperimentConfig parse_config(const std::string& text, const std::string& name);
ExperimentConfig parse_config_file(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);

std::vector<std::string> preset_names();
ExperimentConfig preset(const std::string& name);

/// One (sweep cell, method arm, seed) trajectory.
struct RunRecord {
  std::string run_id;
  MethodArm arm;
  std::uint64_t seed = 0;
  std::string sweep_axis;
  double sweep_value = 0.0;
  RunResult result;
  double c_used = 0.0;
  double cond_X0 = 0.0, L = 0.0, mu = 0.0, eta = 0.0, beta = 0.0;
  std::vector<double> losses;  // per iteration, t = 0 first
  double max_leak_over_resid = 0.0;   // max_t leakage / ||R_t||
  double max_leak_over_initial = 0.0; // max_t leakage / ||R_0||
  double max_x_leak_rel = 0.0;        // max_t ||(I-P_A) X_t|| / ||X_t||
  double final_contraction = 0.0;     // last measured contraction ratio
};

struct CellSummary {
  std::string run_id;  // without the seed suffix
  MethodArm arm;
  std::string sweep_axis;
  double sweep_value = 0.0;
  std::vector<double> mean_loss;  // truncated at the shortest run
  double mean_iters = 0.0;
  std::vector<const RunRecord*> runs;
};

struct ExperimentResult {
  std::vector<RunRecord> runs;
  std::vector<CellSummary> cells;
  int exit_code = 0;  // 0 ok, 3 if any run diverged
};

/// Runs the whole experiment: one trace CSV per (arm, sweep value) plus a
/// companion seed-mean CSV and a summary CSV. Deterministic given the config;
/// LOWRANK_THREADS caps run-level parallelism. Pass write_files = false to
/// keep everything in memory.
ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write_files = true);

/// Emits the theory bound curves only (per arm and sweep cell).
void emit_theory_curves(const ExperimentConfig& cfg);

struct CheckResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool all_pass() const;
};

/// Batches the dynamics-module oracle checks (explicit-operator agreement,
/// decomposition identities, restricted spectra, warm-start fixed point,
/// subspace leakage) and the singular-value-bound Monte Carlo when configured.
VerifyReport verify(const ExperimentConfig& cfg);

}  // namespace lowrank
