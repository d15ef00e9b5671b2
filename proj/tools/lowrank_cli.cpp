// Experiment runner: reproduces the desk-scale factorization and linear-
// network experiments from config files or built-in presets and emits CSV
// traces. See README for the config format.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "lowrank/experiment.hpp"

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitVerifyFailure = 4;

struct CommonFlags {
  int seeds = 0;
  long max_iters = 0;
  double eps = 0.0;
  std::string out;
  std::string diagnostics;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--seeds", f.seeds, "Override the seed count (seeds become 1..N)");
  cmd->add_option("--max-iters", f.max_iters, "Override max iterations");
  cmd->add_option("--eps", f.eps, "Override the relative-residual stop tolerance");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--diagnostics", f.diagnostics, "off, sampled or full");
}

lowrank::ExperimentConfig load_config(const std::string& path, const CommonFlags& f) {
  lowrank::ExperimentConfig cfg = lowrank::parse_config_file(path);
  if (f.seeds > 0) {
    cfg.run.seeds.clear();
    for (int i = 1; i <= f.seeds; ++i) cfg.run.seeds.push_back(i);
  }
  if (f.max_iters > 0) cfg.run.max_iters = f.max_iters;
  if (f.eps > 0.0) cfg.run.eps_rel = f.eps;
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (!f.diagnostics.empty()) {
    if (f.diagnostics == "off") cfg.run.diagnostics = lowrank::DiagnosticsMode::Off;
    else if (f.diagnostics == "sampled") cfg.run.diagnostics = lowrank::DiagnosticsMode::Sampled;
    else if (f.diagnostics == "full") cfg.run.diagnostics = lowrank::DiagnosticsMode::Full;
    else throw lowrank::ConfigError("--diagnostics must be off, sampled or full");
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"First-order low-rank factorization and linear-network experiments"};
  app.require_subcommand(1);

  std::string config_path, preset_name, preset_out;
  CommonFlags run_flags, verify_flags, theory_flags;

  auto* run_cmd = app.add_subcommand("run", "Run an experiment config, emit CSV traces");
  run_cmd->add_option("config", config_path, "Config file")->required();
  add_common(run_cmd, run_flags);

  auto* verify_cmd = app.add_subcommand("verify", "Run the diagnostics/oracle checks");
  verify_cmd->add_option("config", config_path, "Config file")->required();
  add_common(verify_cmd, verify_flags);

  auto* theory_cmd = app.add_subcommand("theory", "Emit theory bound curves only");
  theory_cmd->add_option("config", config_path, "Config file")->required();
  add_common(theory_cmd, theory_flags);

  auto* preset_cmd = app.add_subcommand("preset", "Materialize a built-in config");
  preset_cmd->add_option("name", preset_name, "Preset name")->required();
  preset_cmd->add_option("--out", preset_out, "Directory for the config file")->default_val(".");
  auto* list_flag = preset_cmd->add_flag("--list", "List available presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      auto cfg = load_config(config_path, run_flags);
      auto result = lowrank::run_experiment(cfg);
      long diverged = 0;
      for (const auto& rec : result.runs)
        if (rec.result.termination == lowrank::Termination::Diverged) ++diverged;
      std::cout << result.runs.size() << " runs -> " << cfg.out_dir << "/";
      if (diverged > 0) std::cout << "  (" << diverged << " diverged)";
      std::cout << "\n";
      return result.exit_code == 0 ? 0 : kExitDivergence;
    }
    if (verify_cmd->parsed()) {
      auto cfg = load_config(config_path, verify_flags);
      auto report = lowrank::verify(cfg);
      for (const auto& chk : report.checks) {
        std::printf("%-28s %s  measured=%.3e threshold=%.3e%s%s\n", chk.name.c_str(),
                    chk.pass ? "PASS" : "FAIL", chk.measured, chk.threshold,
                    chk.detail.empty() ? "" : "  ", chk.detail.c_str());
      }
      return report.all_pass() ? 0 : kExitVerifyFailure;
    }
    if (theory_cmd->parsed()) {
      auto cfg = load_config(config_path, theory_flags);
      lowrank::emit_theory_curves(cfg);
      std::cout << "theory curves -> " << cfg.out_dir << "/\n";
      return 0;
    }
    if (preset_cmd->parsed()) {
      if (list_flag->count() > 0) {
        for (const auto& name : lowrank::preset_names()) std::cout << name << "\n";
        return 0;
      }
      auto cfg = lowrank::preset(preset_name);
      std::filesystem::create_directories(preset_out);
      auto path = std::filesystem::path(preset_out) / (cfg.name + ".cfg");
      std::ofstream out(path, std::ios::binary);
      out << lowrank::serialize_config(cfg);
      std::cout << path.string() << "\n";
      return 0;
    }
  } catch (const lowrank::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
