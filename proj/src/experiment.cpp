#include "lowrank/experiment.hpp"

#include "lowrank/random.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace lowrank {

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt_opt(const std::optional<double>& x) {
  return x ? fmt17(*x) : std::string();
}

std::string fmt_short(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_number(const std::string& s, int line) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == nullptr || *end != '\0')
    throw ConfigError("line " + std::to_string(line) + ": expected a number, got '" + s + "'");
  return v;
}

long parse_int(const std::string& s, int line) {
  double v = parse_number(s, line);
  if (v != std::floor(v))
    throw ConfigError("line " + std::to_string(line) + ": expected an integer, got '" + s + "'");
  return static_cast<long>(v);
}

}  // namespace

std::string MethodArm::label() const {
  std::string base = method_name(method);
  if (eta_rule == EtaRule::OneOverL) base += "@1/L";
  return base;
}

std::string MethodArm::file_tag() const {
  std::string base = method_name(method);
  if (eta_rule == EtaRule::OneOverL) base += "1L";
  return base;
}

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

namespace {

MethodArm parse_method_token(const std::string& tok, int line) {
  MethodArm arm;
  std::string base = tok;
  std::string suffix;
  if (auto at = tok.find('@'); at != std::string::npos) {
    base = tok.substr(0, at);
    suffix = tok.substr(at + 1);
  }
  if (base == "gd") arm.method = Method::Gd;
  else if (base == "altgd") arm.method = Method::AltGd;
  else if (base == "nag") arm.method = Method::Nag;
  else throw ConfigError("line " + std::to_string(line) + ": unknown method '" + tok + "'");
  if (!suffix.empty()) {
    if (suffix == "1/L" && arm.method != Method::Nag) arm.eta_rule = EtaRule::OneOverL;
    else if (suffix == "2/(L+mu)" && arm.method != Method::Nag) arm.eta_rule = EtaRule::Theory;
    else throw ConfigError("line " + std::to_string(line) + ": unsupported step-size suffix in '" + tok + "'");
  }
  return arm;
}

InitScheme parse_scheme(const std::string& s, int line) {
  if (s == "mf-sketch") return InitScheme::MfSketch;
  if (s == "mf-general") return InitScheme::MfGeneralUnbalanced;
  if (s == "lnn-1") return InitScheme::Lnn1;
  if (s == "lnn-2") return InitScheme::Lnn2;
  if (s == "lnn-3") return InitScheme::Lnn3;
  throw ConfigError("line " + std::to_string(line) + ": unknown init scheme '" + s + "'");
}

const char* scheme_name(InitScheme s) {
  switch (s) {
    case InitScheme::MfSketch: return "mf-sketch";
    case InitScheme::MfGeneralUnbalanced: return "mf-general";
    case InitScheme::Lnn1: return "lnn-1";
    case InitScheme::Lnn2: return "lnn-2";
    case InitScheme::Lnn3: return "lnn-3";
  }
  return "?";
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& name) {
  ExperimentConfig cfg;
  cfg.name = name;
  cfg.run.methods.clear();
  cfg.run.seeds.clear();

  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  bool saw_c = false;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    if (auto hash = s.find('#'); hash != std::string::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw ConfigError("line " + std::to_string(line) + ": malformed section header");
      section = trim(s.substr(1, s.size() - 2));
      if (section != "problem" && section != "init" && section != "run" &&
          section != "sweep" && section != "verify" && section != "output")
        throw ConfigError("line " + std::to_string(line) + ": unknown section [" + section + "]");
      if (section == "sweep" && !cfg.sweep) cfg.sweep = SweepBlock{};
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line) + ": expected 'key = value'");
    std::string key = trim(s.substr(0, eq));
    std::string val = trim(s.substr(eq + 1));
    if (val.empty())
      throw ConfigError("line " + std::to_string(line) + ": empty value for '" + key + "'");

    if (section.empty()) {
      if (key == "name") cfg.name = val;
      else throw ConfigError("line " + std::to_string(line) + ": key '" + key + "' outside any section");
    } else if (section == "problem") {
      auto& p = cfg.problem;
      if (key == "kind") {
        if (val == "mf") p.kind = ProblemKind::Mf;
        else if (val == "lnn") p.kind = ProblemKind::Lnn;
        else throw ConfigError("line " + std::to_string(line) + ": problem kind must be mf or lnn");
      } else if (key == "m") p.m = parse_int(val, line);
      else if (key == "n") p.n = parse_int(val, line);
      else if (key == "r") p.r = parse_int(val, line);
      else if (key == "sigma1") p.sigma1 = parse_number(val, line);
      else if (key == "sigma_r") p.sigma_r = parse_number(val, line);
      else if (key == "profile") {
        if (val == "geometric") p.profile = SpectrumProfile::Geometric;
        else if (val == "linear") p.profile = SpectrumProfile::Linear;
        else throw ConfigError("line " + std::to_string(line) + ": profile must be geometric or linear");
      } else if (key == "seed") p.seed = static_cast<std::uint64_t>(parse_int(val, line));
      else if (key == "samples") p.samples = parse_int(val, line);
      else if (key == "rank_d") p.rank_d = parse_int(val, line);
      else if (key == "sigma1_d") p.sigma1_d = parse_number(val, line);
      else if (key == "sigmar_d") p.sigmar_d = parse_number(val, line);
      else throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "' in [problem]");
    } else if (section == "init") {
      auto& i = cfg.init;
      if (key == "scheme") i.scheme = parse_scheme(val, line);
      else if (key == "d") i.d = parse_int(val, line);
      else if (key == "c") {
        saw_c = true;
        if (val == "auto") { i.c_auto = true; i.c.reset(); }
        else { i.c = parse_number(val, line); i.c_auto = false; }
      } else if (key == "c2") i.c2 = parse_number(val, line);
      else if (key == "tau") i.tau = parse_number(val, line);
      else throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "' in [init]");
    } else if (section == "run") {
      auto& r = cfg.run;
      if (key == "methods") {
        for (const auto& tok : split_list(val)) r.methods.push_back(parse_method_token(tok, line));
      } else if (key == "eps_rel") r.eps_rel = parse_number(val, line);
      else if (key == "max_iters") r.max_iters = parse_int(val, line);
      else if (key == "seeds") {
        for (const auto& tok : split_list(val))
          r.seeds.push_back(static_cast<std::uint64_t>(parse_int(tok, line)));
      } else if (key == "diagnostics") {
        if (val == "off") r.diagnostics = DiagnosticsMode::Off;
        else if (val == "sampled") r.diagnostics = DiagnosticsMode::Sampled;
        else if (val == "full") r.diagnostics = DiagnosticsMode::Full;
        else throw ConfigError("line " + std::to_string(line) + ": diagnostics must be off, sampled or full");
      } else throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "' in [run]");
    } else if (section == "sweep") {
      auto& sw = *cfg.sweep;
      if (key == "axis") sw.axis = val;
      else if (key == "values") {
        for (const auto& tok : split_list(val)) sw.values.push_back(parse_number(tok, line));
      } else throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "' in [sweep]");
    } else if (section == "verify") {
      if (key == "prop1_seeds") cfg.prop1_seeds = static_cast<int>(parse_int(val, line));
      else throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "' in [verify]");
    } else if (section == "output") {
      if (key == "dir") cfg.out_dir = val;
      else throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "' in [output]");
    }
  }
  (void)saw_c;

  // Validation beyond per-line syntax.
  if (cfg.run.methods.empty()) throw ConfigError("config: methods list is empty");
  if (cfg.run.seeds.empty()) throw ConfigError("config: seeds list is empty");
  if (cfg.run.eps_rel <= 0.0) throw ConfigError("config: eps_rel must be > 0");
  if (cfg.run.max_iters < 1) throw ConfigError("config: max_iters must be >= 1");
  const bool lnn = cfg.problem.kind == ProblemKind::Lnn;
  const bool lnn_scheme = cfg.init.scheme == InitScheme::Lnn1 ||
                          cfg.init.scheme == InitScheme::Lnn2 ||
                          cfg.init.scheme == InitScheme::Lnn3;
  if (lnn != lnn_scheme)
    throw ConfigError("config: init scheme does not match problem kind");
  if (cfg.init.c && *cfg.init.c <= 0.0) throw ConfigError("config: c must be > 0");
  if (cfg.init.c2 < 0.0) throw ConfigError("config: c2 must be >= 0");
  if (cfg.init.tau <= 0.0) throw ConfigError("config: tau must be > 0");
  const Index min_width = cfg.init.scheme == InitScheme::Lnn3 ? cfg.problem.m
                          : lnn ? cfg.problem.rank_d
                                : cfg.problem.r;
  if (cfg.init.d < min_width)
    throw ConfigError("config: width d below the scheme minimum");
  if (cfg.sweep) {
    const auto& axis = cfg.sweep->axis;
    if (axis != "d" && axis != "c" && axis != "c2" && axis != "sigma_r")
      throw ConfigError("config: sweep axis must be one of d, c, c2, sigma_r");
    if (cfg.sweep->values.empty()) throw ConfigError("config: sweep values list is empty");
    if (axis == "sigma_r" && lnn)
      throw ConfigError("config: sigma_r sweep applies to the mf problem");
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::string stem = std::filesystem::path(path).stem().string();
  return parse_config(ss.str(), stem);
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream o;
  o << "name = " << cfg.name << "\n\n[problem]\n";
  const auto& p = cfg.problem;
  o << "kind = " << (p.kind == ProblemKind::Mf ? "mf" : "lnn") << "\n";
  o << "m = " << p.m << "\nn = " << p.n << "\n";
  if (p.kind == ProblemKind::Mf) {
    o << "r = " << p.r << "\nsigma1 = " << fmt17(p.sigma1)
      << "\nsigma_r = " << fmt17(p.sigma_r) << "\nprofile = "
      << (p.profile == SpectrumProfile::Geometric ? "geometric" : "linear") << "\n";
  } else {
    o << "samples = " << p.samples << "\nrank_d = " << p.rank_d
      << "\nsigma1_d = " << fmt17(p.sigma1_d) << "\nsigmar_d = " << fmt17(p.sigmar_d) << "\n";
  }
  o << "seed = " << p.seed << "\n\n[init]\n";
  o << "scheme = " << scheme_name(cfg.init.scheme) << "\nd = " << cfg.init.d << "\n";
  if (cfg.init.c_auto) o << "c = auto\n";
  else if (cfg.init.c) o << "c = " << fmt17(*cfg.init.c) << "\n";
  // omitted c means the 50*sqrt(d) default
  if (cfg.init.c2 != 0.0) o << "c2 = " << fmt17(cfg.init.c2) << "\n";
  o << "tau = " << fmt17(cfg.init.tau) << "\n\n[run]\nmethods = ";
  for (std::size_t i = 0; i < cfg.run.methods.size(); ++i)
    o << (i ? ", " : "") << cfg.run.methods[i].label();
  o << "\neps_rel = " << fmt17(cfg.run.eps_rel) << "\nmax_iters = " << cfg.run.max_iters
    << "\nseeds = ";
  for (std::size_t i = 0; i < cfg.run.seeds.size(); ++i)
    o << (i ? ", " : "") << cfg.run.seeds[i];
  o << "\ndiagnostics = "
    << (cfg.run.diagnostics == DiagnosticsMode::Off
            ? "off"
            : cfg.run.diagnostics == DiagnosticsMode::Full ? "full" : "sampled")
    << "\n";
  if (cfg.sweep) {
    o << "\n[sweep]\naxis = " << cfg.sweep->axis << "\nvalues = ";
    for (std::size_t i = 0; i < cfg.sweep->values.size(); ++i)
      o << (i ? ", " : "") << fmt17(cfg.sweep->values[i]);
    o << "\n";
  }
  if (cfg.prop1_seeds > 0) o << "\n[verify]\nprop1_seeds = " << cfg.prop1_seeds << "\n";
  o << "\n[output]\ndir = " << cfg.out_dir << "\n";
  return o.str();
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

namespace {

std::vector<std::uint64_t> seq_seeds(int n) {
  std::vector<std::uint64_t> s(n);
  for (int i = 0; i < n; ++i) s[i] = static_cast<std::uint64_t>(i + 1);
  return s;
}

ExperimentConfig mf_base(const std::string& name) {
  ExperimentConfig cfg;
  cfg.name = name;
  cfg.problem = ProblemBlock{};
  cfg.init = InitBlock{};
  cfg.run.methods = {{Method::Gd, EtaRule::Theory}, {Method::Nag, EtaRule::Theory}};
  cfg.run.seeds = seq_seeds(10);
  return cfg;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"fig1-mf", "fig1-lnn", "fig2-mf", "fig2-lnn", "fig3",
          "fig4-mf", "fig4-lnn", "fig5",    "fig6",     "prop1", "tiny"};
}

ExperimentConfig preset(const std::string& name) {
  // "fig1" and "fig4-large" resolve to the -mf variants; each figure has an
  // mf and an lnn panel but a config holds one problem.
  std::string key = name;
  if (key == "fig1") key = "fig1-mf";
  if (key == "fig4-large") key = "fig4-mf";

  if (key == "fig1-mf") {
    ExperimentConfig cfg = mf_base("fig1-mf");
    cfg.run.methods = {{Method::Gd, EtaRule::Theory},
                       {Method::AltGd, EtaRule::Theory},
                       {Method::Gd, EtaRule::OneOverL}};
    return cfg;
  }
  if (key == "fig1-lnn") {
    ExperimentConfig cfg = mf_base("fig1-lnn");
    cfg.problem.kind = ProblemKind::Lnn;
    cfg.init.scheme = InitScheme::Lnn1;
    cfg.run.methods = {{Method::Gd, EtaRule::Theory},
                       {Method::AltGd, EtaRule::Theory},
                       {Method::Gd, EtaRule::OneOverL}};
    return cfg;
  }
  if (key == "fig2-mf") {
    ExperimentConfig cfg = mf_base("fig2-mf");
    cfg.sweep = SweepBlock{"d", {5, 10, 20}};
    return cfg;
  }
  if (key == "fig2-lnn") {
    ExperimentConfig cfg = mf_base("fig2-lnn");
    cfg.problem.kind = ProblemKind::Lnn;
    cfg.init.scheme = InitScheme::Lnn1;
    cfg.sweep = SweepBlock{"d", {5, 10, 20}};
    return cfg;
  }
  if (key == "fig3") {
    ExperimentConfig cfg = mf_base("fig3");
    cfg.problem.sigma_r = 0.1;
    // GD at eta = 1/L: its exact slowest-mode rate is 1 - mu/L, the rate the
    // prediction curve uses.
    cfg.run.methods = {{Method::Gd, EtaRule::OneOverL}, {Method::Nag, EtaRule::Theory}};
    cfg.init.c = 200.0 * std::sqrt(20.0);
    cfg.run.eps_rel = 1e-12;
    cfg.run.max_iters = 200000;  // the kappa = 100 cell needs ~160k GD steps
    cfg.sweep = SweepBlock{"sigma_r", {0.1, 0.01}};
    return cfg;
  }
  if (key == "fig4-mf") {
    ExperimentConfig cfg = mf_base("fig4-mf");
    cfg.problem.m = 1200;
    cfg.problem.n = 1000;
    // sigma_r and the c rule inherited from the desk-scale instance.
    cfg.sweep = SweepBlock{"d", {5, 10, 20}};
    return cfg;
  }
  if (key == "fig4-lnn") {
    ExperimentConfig cfg = mf_base("fig4-lnn");
    cfg.problem.kind = ProblemKind::Lnn;
    cfg.problem.m = 500;
    cfg.problem.n = 400;
    cfg.problem.samples = 600;
    cfg.init.scheme = InitScheme::Lnn1;
    cfg.sweep = SweepBlock{"d", {5, 10, 20}};
    return cfg;
  }
  if (key == "fig5") {
    ExperimentConfig cfg = mf_base("fig5");
    cfg.sweep = SweepBlock{"c", {10, 50, 50.0 * std::sqrt(20.0), 1000, 4000}};
    return cfg;
  }
  if (key == "fig6") {
    ExperimentConfig cfg = mf_base("fig6");
    cfg.init.scheme = InitScheme::MfGeneralUnbalanced;
    cfg.init.c = 50.0;
    cfg.sweep = SweepBlock{"c2", {0, 0.1, 1}};
    return cfg;
  }
  if (key == "prop1") {
    ExperimentConfig cfg = mf_base("prop1");
    cfg.problem.r = 3;
    cfg.init.d = 10;
    cfg.init.tau = 0.05;
    // c defaults to 50 sqrt(d); the singular-value bounds are scale-invariant
    cfg.run.seeds = {1};
    cfg.prop1_seeds = 1000;
    return cfg;
  }
  if (key == "tiny") {
    ExperimentConfig cfg = mf_base("tiny");
    cfg.problem.m = 3;
    cfg.problem.n = 2;
    cfg.problem.r = 1;
    cfg.problem.sigma1 = 1.0;
    cfg.problem.sigma_r = 1.0;
    cfg.init.d = 2;
    cfg.run.seeds = {1};
    cfg.run.max_iters = 100;
    cfg.run.eps_rel = 1e-306;
    cfg.run.diagnostics = DiagnosticsMode::Full;
    return cfg;
  }
  throw ConfigError("unknown preset: " + name);
}

// ---------------------------------------------------------------------------
// Experiment driver
// ---------------------------------------------------------------------------

namespace {

struct Cell {
  std::string run_id;
  MethodArm arm;
  std::string sweep_axis;
  double sweep_value = 0.0;
  ProblemBlock problem;
  InitBlock init;
};

std::string cell_run_id(const ExperimentConfig& cfg, const MethodArm& arm,
                        const std::optional<SweepBlock>& sweep, double value) {
  std::string id = cfg.name + "-" + arm.file_tag();
  if (sweep) {
    std::string v = fmt_short(value);
    id += "-" + sweep->axis + v;
  }
  return id;
}

std::vector<Cell> expand_cells(const ExperimentConfig& cfg) {
  std::vector<Cell> cells;
  auto apply = [&](double value) {
    for (const auto& arm : cfg.run.methods) {
      Cell cell;
      cell.arm = arm;
      cell.problem = cfg.problem;
      cell.init = cfg.init;
      if (cfg.sweep) {
        cell.sweep_axis = cfg.sweep->axis;
        cell.sweep_value = value;
        if (cfg.sweep->axis == "d") cell.init.d = static_cast<Index>(value);
        else if (cfg.sweep->axis == "c") { cell.init.c = value; cell.init.c_auto = false; }
        else if (cfg.sweep->axis == "c2") cell.init.c2 = value;
        else if (cfg.sweep->axis == "sigma_r") cell.problem.sigma_r = value;
      }
      cell.run_id = cell_run_id(cfg, arm, cfg.sweep, value);
      cells.push_back(std::move(cell));
    }
  };
  if (cfg.sweep)
    for (double v : cfg.sweep->values) apply(v);
  else
    apply(0.0);
  return cells;
}

struct BuiltProblem {
  std::optional<FactorizationProblem> mf;
  std::optional<LinearNetworkProblem> lnn;

  Objective objective() const {
    return mf ? objective_of(*mf) : objective_of(*lnn);
  }
};

BuiltProblem build_problem(const ProblemBlock& p) {
  BuiltProblem out;
  if (p.kind == ProblemKind::Mf)
    out.mf = make_mf_problem(p.m, p.n, p.r, p.sigma1, p.sigma_r, p.profile, p.seed);
  else
    out.lnn = make_lnn_problem(p.m, p.n, p.samples, p.rank_d, p.sigma1_d, p.sigmar_d, p.seed);
  return out;
}

InitOutcome build_init(const BuiltProblem& prob, const InitBlock& ib, std::uint64_t seed,
                       Method method) {
  InitConfig cfg;
  cfg.scheme = ib.scheme;
  cfg.d = ib.d;
  cfg.c2 = ib.c2;
  cfg.tau = ib.tau;
  cfg.seed = seed;
  if (ib.c_auto) cfg.c.reset();
  else if (ib.c) cfg.c = *ib.c;
  else cfg.c = 50.0 * std::sqrt(static_cast<double>(ib.d));  // default rule
  const CThresholdKind kind = method == Method::Nag ? CThresholdKind::Nag : CThresholdKind::Gd;
  switch (ib.scheme) {
    case InitScheme::MfSketch: return init_mf(*prob.mf, cfg, kind);
    case InitScheme::MfGeneralUnbalanced: return init_mf_general(*prob.mf, cfg, kind);
    default: return init_lnn(*prob.lnn, cfg);
  }
}

int env_threads() {
  const char* v = std::getenv("LOWRANK_THREADS");
  if (!v) return 1;
  int n = std::atoi(v);
  return n >= 1 ? n : 1;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write_files) {
  const std::vector<Cell> cells = expand_cells(cfg);

  struct Task {
    std::size_t cell = 0;
    std::uint64_t seed = 0;
  };
  std::vector<Task> tasks;
  for (std::size_t c = 0; c < cells.size(); ++c)
    for (auto seed : cfg.run.seeds) tasks.push_back({c, seed});

  // One problem per cell; cells sharing the problem parameters share the
  // instance (the target stays fixed across initialization seeds).
  std::vector<BuiltProblem> problems(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) problems[c] = build_problem(cells[c].problem);

  std::vector<RunRecord> records(tasks.size());
  std::vector<std::vector<TraceRow>> traces(tasks.size());

  auto execute = [&](std::size_t ti) {
    const Task& task = tasks[ti];
    const Cell& cell = cells[task.cell];
    const BuiltProblem& prob = problems[task.cell];
    const Objective obj = prob.objective();

    RunRecord& rec = records[ti];
    rec.run_id = cell.run_id;
    rec.arm = cell.arm;
    rec.seed = task.seed;
    rec.sweep_axis = cell.sweep_axis;
    rec.sweep_value = cell.sweep_value;

    InitOutcome init = build_init(prob, cell.init, task.seed, cell.arm.method);
    HyperParams hp = prob.lnn
                         ? derive_hyperparams(init, cell.arm.method, *prob.lnn, cell.arm.eta_rule)
                         : derive_hyperparams(init, cell.arm.method, cell.arm.eta_rule);
    rec.c_used = init.c_used;
    rec.cond_X0 = init.cond_X0;
    rec.L = hp.L;
    rec.mu = hp.mu;
    rec.eta = hp.eta;
    rec.beta = hp.beta;

    // Theory bound attached to rows for the zero-Y0 schemes.
    std::optional<TheoryBound> bound;
    if (cell.init.scheme == InitScheme::MfSketch)
      bound = theory_bound(cell.arm.method == Method::Nag ? BoundKind::NagResidual : BoundKind::GdResidual,
                           init, *prob.mf);
    else if (prob.lnn && cell.arm.method == Method::Nag)
      bound = theory_bound_lnn(init, *prob.lnn);

    const long cadence =
        cfg.run.diagnostics == DiagnosticsMode::Off ? 0
        : cfg.run.diagnostics == DiagnosticsMode::Full ? 1
        : (cell.problem.m * cell.problem.n <= 400 ? 1 : 10);

    IterateState state = make_state(obj, init.X0, init.Y0);
    const double r0_dyn = obj.is_lnn() ? state.R_step.norm() : state.R.norm();

    std::vector<TraceRow>& rows = traces[ti];
    RunHooks hooks;
    hooks.observe_every = cadence;
    if (cadence > 0) {
      hooks.observe = [&](const IterateState& before, const IterateState& after, TraceRow& row) {
        DynamicsCheck chk;
        switch (cell.arm.method) {
          case Method::Nag:
            chk = nag_decomposition_check(before, after, init.X0, init.Y0, hp, obj);
            break;
          case Method::Gd:
            chk = gd_decomposition_check(before, after, init.X0, init.Y0, hp, obj);
            break;
          case Method::AltGd: {
            // Residual-dynamics decomposition applies to the simultaneous
            // update only; report leakage alone.
            chk.leakage = obj.is_lnn() ? subspace_leakage(after.R_step, *prob.lnn)
                                       : subspace_leakage(after.R, *prob.mf);
            chk.contraction_measured = -1.0;
            chk.decomposition_residual = -1.0;
            break;
          }
        }
        row.leakage = chk.leakage;
        if (chk.contraction_measured >= 0.0) row.contraction_measured = chk.contraction_measured;
        if (chk.decomposition_residual >= 0.0)
          row.decomposition_residual = chk.decomposition_residual;

        const double r_norm = obj.is_lnn() ? after.R_step.norm() : after.R.norm();
        if (r_norm > 0.0)
          rec.max_leak_over_resid = std::max(rec.max_leak_over_resid, chk.leakage / r_norm);
        if (r0_dyn > 0.0)
          rec.max_leak_over_initial = std::max(rec.max_leak_over_initial, chk.leakage / r0_dyn);
        if (chk.contraction_measured >= 0.0) rec.final_contraction = chk.contraction_measured;
        if (cell.init.scheme == InitScheme::MfSketch) {
          const double xn = after.X.norm();
          if (xn > 0.0)
            rec.max_x_leak_rel = std::max(
                rec.max_x_leak_rel, subspace_leakage(after.X, *prob.mf) / xn);
        }
      };
    }
    hooks.row = [&](const TraceRow& base) {
      TraceRow row = base;
      row.run_id = cell.run_id;
      row.method = cell.arm.label();
      row.seed = task.seed;
      if (bound) row.theory_bound = bound->value_at(row.iter);
      rec.losses.push_back(row.loss);
      rows.push_back(std::move(row));
    };

    StopRule stop;
    stop.eps_rel = cfg.run.eps_rel;
    stop.max_iters = cfg.run.max_iters;
    rec.result = run(obj, state, cell.arm.method, hp, stop, hooks);

    // Leakage of the t = 0 residual (the observer only sees steps).
    if (cadence > 0 && !rows.empty()) {
      IterateState s0 = make_state(obj, init.X0, init.Y0);
      const double leak0 = obj.is_lnn() ? subspace_leakage(s0.R_step, *prob.lnn)
                                        : subspace_leakage(s0.R, *prob.mf);
      rows.front().leakage = leak0;
      if (r0_dyn > 0.0) {
        rec.max_leak_over_resid = std::max(rec.max_leak_over_resid, leak0 / r0_dyn);
        rec.max_leak_over_initial = std::max(rec.max_leak_over_initial, leak0 / r0_dyn);
      }
    }
  };

  const int threads = std::min<int>(env_threads(), static_cast<int>(tasks.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) execute(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1))
          execute(i);
      });
    for (auto& th : pool) th.join();
  }

  ExperimentResult result;
  result.runs = std::move(records);

  // Seed means, accumulated in ascending seed order so the curve does not
  // depend on how the seed list was written.
  for (std::size_t c = 0; c < cells.size(); ++c) {
    CellSummary cell_sum;
    cell_sum.run_id = cells[c].run_id;
    cell_sum.arm = cells[c].arm;
    cell_sum.sweep_axis = cells[c].sweep_axis;
    cell_sum.sweep_value = cells[c].sweep_value;
    std::vector<const RunRecord*> members;
    for (std::size_t ti = 0; ti < tasks.size(); ++ti)
      if (tasks[ti].cell == c) members.push_back(&result.runs[ti]);
    std::sort(members.begin(), members.end(),
              [](const RunRecord* a, const RunRecord* b) { return a->seed < b->seed; });
    std::size_t min_len = SIZE_MAX;
    double iter_sum = 0.0;
    for (auto* m : members) {
      min_len = std::min(min_len, m->losses.size());
      iter_sum += static_cast<double>(m->result.iters);
    }
    if (min_len == SIZE_MAX) min_len = 0;
    cell_sum.mean_loss.assign(min_len, 0.0);
    for (auto* m : members)
      for (std::size_t t = 0; t < min_len; ++t) cell_sum.mean_loss[t] += m->losses[t];
    for (auto& v : cell_sum.mean_loss) v /= static_cast<double>(members.size());
    cell_sum.mean_iters = iter_sum / static_cast<double>(members.size());
    cell_sum.runs = members;
    result.cells.push_back(std::move(cell_sum));
  }

  for (const auto& rec : result.runs)
    if (rec.result.termination == Termination::Diverged) result.exit_code = 3;

  if (write_files) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      std::ofstream out(fs::path(cfg.out_dir) / (cells[c].run_id + ".csv"), std::ios::binary);
      out << kTraceHeader << "\n";
      std::vector<std::size_t> order;
      for (std::size_t ti = 0; ti < tasks.size(); ++ti)
        if (tasks[ti].cell == c) order.push_back(ti);
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) { return tasks[a].seed < tasks[b].seed; });
      for (auto ti : order)
        for (const auto& row : traces[ti]) {
          out << row.run_id << ',' << row.method << ',' << row.seed << ',' << row.iter << ','
              << fmt17(row.loss) << ',' << fmt17(row.resid_fro) << ',' << fmt17(row.resid_rel)
              << ',' << fmt_opt(row.theory_bound) << ',' << fmt17(row.dist_x) << ','
              << fmt17(row.dist_y) << ',' << fmt_opt(row.leakage) << ','
              << fmt_opt(row.contraction_measured) << ','
              << fmt_opt(row.decomposition_residual) << '\n';
        }
    }
    for (const auto& cell_sum : result.cells) {
      std::ofstream out(fs::path(cfg.out_dir) / (cell_sum.run_id + "-mean.csv"), std::ios::binary);
      out << "iter,mean_loss\n";
      for (std::size_t t = 0; t < cell_sum.mean_loss.size(); ++t)
        out << t << ',' << fmt17(cell_sum.mean_loss[t]) << '\n';
    }
    std::ofstream sum(fs::path(cfg.out_dir) / "summary.csv", std::ios::binary);
    sum << "run_id,method,seed,sweep_axis,sweep_value,c_used,cond_x0,L,mu,eta,beta,"
           "termination,iters,final_resid_rel,initial_loss\n";
    for (const auto& rec : result.runs) {
      sum << rec.run_id << ',' << rec.arm.label() << ',' << rec.seed << ',' << rec.sweep_axis
          << ',' << (rec.sweep_axis.empty() ? "" : fmt_short(rec.sweep_value)) << ','
          << fmt17(rec.c_used) << ',' << fmt17(rec.cond_X0) << ',' << fmt17(rec.L) << ','
          << fmt17(rec.mu) << ',' << fmt17(rec.eta) << ',' << fmt17(rec.beta) << ','
          << termination_name(rec.result.termination) << ',' << rec.result.iters << ','
          << fmt17(rec.result.final_resid_rel) << ',' << fmt17(rec.result.initial_loss) << '\n';
    }
  }
  return result;
}

void emit_theory_curves(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  const std::vector<Cell> cells = expand_cells(cfg);
  for (const auto& cell : cells) {
    BuiltProblem prob = build_problem(cell.problem);
    InitOutcome init = build_init(prob, cell.init, cfg.run.seeds.front(), cell.arm.method);
    std::optional<TheoryBound> resid_bound;
    std::optional<TheoryBound> loss_pred;
    const double f0 = prob.mf ? 0.5 * (init.X0 * init.Y0.transpose() - prob.mf->A).squaredNorm()
                              : 0.5 * prob.lnn->labels.squaredNorm();
    if (cell.init.scheme == InitScheme::MfSketch) {
      resid_bound = theory_bound(
          cell.arm.method == Method::Nag ? BoundKind::NagResidual : BoundKind::GdResidual, init, *prob.mf);
      loss_pred = theory_bound(
          cell.arm.method == Method::Nag ? BoundKind::LossCurveNag : BoundKind::LossCurveGd, init,
          *prob.mf, f0);
    } else if (prob.lnn && cell.arm.method == Method::Nag) {
      resid_bound = theory_bound_lnn(init, *prob.lnn);
    }
    if (!resid_bound && !loss_pred) continue;
    std::ofstream out(fs::path(cfg.out_dir) / (cell.run_id + "-theory.csv"), std::ios::binary);
    out << "iter,resid_bound,loss_pred\n";
    for (long t = 0; t <= cfg.run.max_iters; ++t) {
      out << t << ',' << (resid_bound ? fmt17(resid_bound->value_at(t)) : std::string()) << ','
          << (loss_pred ? fmt17(loss_pred->value_at(t)) : std::string()) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

bool VerifyReport::all_pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

namespace {

void add_check(VerifyReport& rep, const std::string& name, bool pass, double measured,
               double threshold, const std::string& detail = "") {
  rep.checks.push_back({name, pass, measured, threshold, detail});
}

}  // namespace

VerifyReport verify(const ExperimentConfig& cfg) {
  VerifyReport rep;
  const BuiltProblem prob = build_problem(cfg.problem);
  const Objective obj = prob.objective();
  const bool tiny = cfg.problem.m * cfg.problem.n <= 400;

  // apply_H against the materialized operator on a small instance.
  {
    const Index m = tiny ? cfg.problem.m : 3;
    const Index n = tiny ? cfg.problem.n : 2;
    const Index d = std::min<Index>(cfg.init.d, std::min(m, n));
    RandomSource rng(99);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      Matrix X = gaussian_matrix(m, d, 1.0, rng);
      Matrix Y = gaussian_matrix(n, d, 1.0, rng);
      Matrix R = gaussian_matrix(m, n, 1.0, rng);
      Matrix H = build_h_matrix(X, Y, m, n);
      Vector direct = H * vec(R);
      Vector applied = vec(apply_H(X, Y, R));
      worst = std::max(worst, (direct - applied).cwiseAbs().maxCoeff());
    }
    add_check(rep, "apply-h-vs-explicit", worst <= 1e-12, worst, 1e-12);
  }

  // Per-method trajectory checks on the configured problem.
  for (const auto& arm : cfg.run.methods) {
    InitOutcome init = build_init(prob, cfg.init, cfg.run.seeds.front(), arm.method);
    HyperParams hp = prob.lnn ? derive_hyperparams(init, arm.method, *prob.lnn, arm.eta_rule)
                              : derive_hyperparams(init, arm.method, arm.eta_rule);
    IterateState state = make_state(obj, init.X0, init.Y0);
    const double r0 = (obj.is_lnn() ? state.R_step : state.R).norm();

    double max_decomp = 0.0, max_leak_rel = 0.0, max_leak0 = 0.0, max_xleak = 0.0;
    RunHooks hooks;
    // Decomposition identities are asserted on tiny instances (per-step
    // snapshots and the 1e-10 * ||r0|| tolerance are calibrated there).
    if (tiny && arm.method != Method::AltGd) {
      hooks.observe_every = 1;
      hooks.observe = [&](const IterateState& before, const IterateState& after, TraceRow&) {
        DynamicsCheck chk = arm.method == Method::Nag
                                ? nag_decomposition_check(before, after, init.X0, init.Y0, hp, obj)
                                : gd_decomposition_check(before, after, init.X0, init.Y0, hp, obj);
        max_decomp = std::max(max_decomp, chk.decomposition_residual);
      };
    }
    hooks.inspect = [&](const IterateState& state_now, TraceRow&) {
      const Matrix& r_dyn = obj.is_lnn() ? state_now.R_step : state_now.R;
      const double leak = obj.is_lnn() ? subspace_leakage(r_dyn, *prob.lnn)
                                       : subspace_leakage(r_dyn, *prob.mf);
      const double rn = r_dyn.norm();
      // The per-residual ratio is only meaningful while the run is above the
      // desk-scale stopping threshold; past it the residual is measurement
      // noise and any ratio is junk.
      if (rn > 0.0 && state_now.R.norm() >= 1e-8 * obj.target_norm())
        max_leak_rel = std::max(max_leak_rel, leak / rn);
      if (r0 > 0.0) max_leak0 = std::max(max_leak0, leak / r0);
      if (!obj.is_lnn() && cfg.init.scheme == InitScheme::MfSketch && state_now.X.norm() > 0.0)
        max_xleak = std::max(max_xleak, subspace_leakage(state_now.X, *prob.mf) / state_now.X.norm());
    };
    StopRule stop;
    stop.eps_rel = cfg.run.eps_rel;
    stop.max_iters = std::min<long>(cfg.run.max_iters, tiny ? 100 : 20000);
    run(obj, state, arm.method, hp, stop, hooks);

    const std::string tag = arm.file_tag();
    if (tiny && arm.method != Method::AltGd)
      add_check(rep, tag + "-decomposition", max_decomp <= 1e-10 * r0, max_decomp, 1e-10 * r0);
    add_check(rep, tag + "-leakage-vs-resid", max_leak_rel <= 1e-9, max_leak_rel, 1e-9,
              "noise floor ~eps*||A||/||R_t||; see ledger");
    add_check(rep, tag + "-leakage-vs-initial", max_leak0 <= 1e-9, max_leak0, 1e-9);
    if (!obj.is_lnn() && cfg.init.scheme == InitScheme::MfSketch)
      add_check(rep, tag + "-x-leakage", max_xleak <= 1e-9, max_xleak, 1e-9);
  }

  // Restricted spectra of the explicit operators (tiny instances only).
  if (tiny && !obj.is_lnn() && cfg.init.scheme == InitScheme::MfSketch) {
    InitOutcome init = build_init(prob, cfg.init, cfg.run.seeds.front(), Method::Gd);
    HyperParams hp = derive_hyperparams(init, Method::Gd);
    const double measured = restricted_gd_extreme(init.X0, prob.mf->r, prob.mf->cols(), hp.eta);
    const double expected =
        std::max(std::abs(1.0 - hp.eta * hp.L), std::abs(1.0 - hp.eta * hp.mu));
    add_check(rep, "gd-restricted-spectrum", std::abs(measured - expected) <= 1e-12,
              std::abs(measured - expected), 1e-12);

    NagRadiusReport rad = nag_restricted_radius(init.X0, prob.mf->r, prob.mf->cols());
    add_check(rep, "nag-restricted-radius", rad.radius <= rad.bound + 1e-10,
              rad.radius - rad.bound, 1e-10);
  }

  // Warm start at an exact solution is a fixed point with zero diagnostics.
  {
    const Index m = std::min<Index>(cfg.problem.m, 8);
    const Index n = std::min<Index>(cfg.problem.n, 6);
    const Index d = std::min<Index>({cfg.init.d, m, n});
    RandomSource rng(5);
    Matrix Xs = gaussian_matrix(m, d, 1.0, rng);
    Matrix Ys = gaussian_matrix(n, d, 1.0, rng);
    FactorizationProblem exact = problem_from_matrix(Xs * Ys.transpose(), d);
    Objective eobj = objective_of(exact);
    double worst = 0.0;
    for (Method method : {Method::Gd, Method::AltGd, Method::Nag}) {
      IterateState s = make_state(eobj, Xs, Ys);
      HyperParams hp;
      hp.L = 1.0;
      hp.mu = 1.0;
      hp.eta = 0.1;
      hp.beta = method == Method::Nag ? 0.5 : 0.0;
      for (int step = 0; step < 5; ++step) {
        IterateState before = s;
        switch (method) {
          case Method::Gd: gd_step(s, hp, eobj); break;
          case Method::AltGd: altgd_step(s, hp, eobj); break;
          case Method::Nag: nag_step(s, hp, eobj); break;
        }
        worst = std::max({worst, s.R.norm(), (s.X - before.X).norm(), (s.Y - before.Y).norm()});
      }
    }
    add_check(rep, "warm-start-fixed-point", worst == 0.0, worst, 0.0);
  }

  // Singular-value bound Monte Carlo. The pass/fail outcome is invariant to
  // the scale c (both sides of every bound are proportional to it).
  if (cfg.prop1_seeds > 0 && prob.mf) {
    int fail_lower = 0, fail_upper = 0, fail_cond = 0, fail_any = 0;
    const double c =
        cfg.init.c ? *cfg.init.c : 50.0 * std::sqrt(static_cast<double>(cfg.init.d));
    for (int s = 1; s <= cfg.prop1_seeds; ++s) {
      SketchBoundReport r = check_sketch_bounds(*prob.mf, cfg.init.d, cfg.init.tau, c,
                                         static_cast<std::uint64_t>(s));
      if (!r.lower_ok) ++fail_lower;
      if (!r.upper_ok) ++fail_upper;
      if (!r.cond_ok) ++fail_cond;
      if (!r.pass()) ++fail_any;
    }
    const double frac = static_cast<double>(fail_any) / cfg.prop1_seeds;
    add_check(rep, "prop1-monte-carlo", frac <= 0.01, frac, 0.01,
              "lower/upper/cond failures: " + std::to_string(fail_lower) + "/" +
                  std::to_string(fail_upper) + "/" + std::to_string(fail_cond));
  }

  return rep;
}

}  // namespace lowrank
