#include "mpfem/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mpfem {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != value.size()) {
    throw std::invalid_argument("config key '" + key + "' expects a number, got '" + value + "'");
  }
  return v;
}

long long parse_int(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (pos != value.size()) {
    throw std::invalid_argument("config key '" + key + "' expects an integer, got '" + value +
                                "'");
  }
  return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_double(key, item));
  }
  if (out.empty()) {
    throw std::invalid_argument("config key '" + key + "' expects a comma-separated list");
  }
  return out;
}

void assign(ExperimentConfig& cfg, const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string value = trim(raw_value);
  if (key.empty()) throw std::invalid_argument("config line has an empty key");
  if (value.empty()) throw std::invalid_argument("config key '" + key + "' has an empty value");

  if (key == "problem") {
    cfg.problem = value;
  } else if (key == "dim") {
    const long long v = parse_int(key, value);
    if (v < 1) throw std::invalid_argument("dim must be at least 1");
    cfg.dim = static_cast<std::size_t>(v);
  } else if (key == "T") {
    cfg.T = parse_double(key, value);
  } else if (key == "delta") {
    cfg.delta = parse_double(key, value);
  } else if (key == "dx") {
    cfg.dx = parse_double(key, value);
  } else if (key == "c") {
    cfg.c = parse_double(key, value);
  } else if (key == "A") {
    cfg.A = parse_double(key, value);
  } else if (key == "L") {
    cfg.L = parse_double(key, value);
  } else if (key == "basis") {
    cfg.basis_choice = value;
  } else if (key == "x_half") {
    cfg.x_half = parse_double(key, value);
  } else if (key == "u_half") {
    cfg.u_half = parse_double(key, value);
  } else if (key == "starts_per_axis") {
    cfg.starts_per_axis = static_cast<int>(parse_int(key, value));
  } else if (key == "opt_tolerance") {
    cfg.opt_tolerance = parse_double(key, value);
  } else if (key == "max_iterations") {
    cfg.max_iterations = static_cast<int>(parse_int(key, value));
  } else if (key == "pruning_threshold") {
    cfg.pruning_threshold = parse_double(key, value);
  } else if (key == "eval_refine") {
    cfg.eval_refine = static_cast<int>(parse_int(key, value));
  } else if (key == "out_dir") {
    cfg.out_dir = value;
  } else if (key == "seed") {
    const long long v = parse_int(key, value);
    if (v < 0) throw std::invalid_argument("seed must be non-negative");
    cfg.seed = static_cast<std::uint64_t>(v);
  } else if (key == "threads") {
    cfg.threads = static_cast<int>(parse_int(key, value));
  } else if (key == "sweep_deltas") {
    cfg.sweep_deltas = parse_list(key, value);
  } else if (key == "sweep_dx") {
    cfg.sweep_dx = parse_list(key, value);
  } else if (key == "sweep_dx_coeff") {
    cfg.sweep_dx_coeff = parse_double(key, value);
  } else {
    throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

bool integral_ratio(double total, double step) {
  if (!(step > 0.0)) return false;
  const double ratio = total / step;
  return std::abs(ratio - std::round(ratio)) <= 1e-9 * std::max(1.0, std::abs(ratio));
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

Box inner_box(const Box& X, double scale) {
  std::vector<double> lo = X.lower;
  std::vector<double> hi = X.upper;
  const std::vector<double> c = X.center();
  for (std::size_t k = 0; k < X.dim(); ++k) {
    lo[k] = c[k] + scale * (X.lower[k] - c[k]);
    hi[k] = c[k] + scale * (X.upper[k] - c[k]);
  }
  return Box(std::move(lo), std::move(hi));
}

class PhaseTimer {
 public:
  explicit PhaseTimer(std::vector<PhaseTiming>& out) : out_(out) {}

  template <class F>
  void run(const std::string& name, F&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    out_.push_back({name, dt.count()});
  }

 private:
  std::vector<PhaseTiming>& out_;
};

void write_report(const std::string& path, const ExperimentConfig& cfg,
                  const ExperimentSetup& setup, const RegularGrid& eval_grid,
                  const ErrorReport& report) {
  auto out = open_out(path);
  out << "problem: " << cfg.problem << " (dim " << cfg.dim << ", basis " << cfg.basis_choice
      << ")\n";
  out << "T = " << fmt6(cfg.T) << ", delta = " << fmt6(cfg.delta) << ", dx = " << fmt6(cfg.dx)
      << ", c = " << fmt6(cfg.c) << ", A = " << fmt6(cfg.A) << ", L = " << fmt6(cfg.L) << "\n";
  out << "seed = " << cfg.seed << ", threads = " << cfg.threads
      << ", starts_per_axis = " << cfg.starts_per_axis << "\n";
  out << "primal elements: " << setup.families.primal.size()
      << ", test elements: " << setup.families.test.size() << "\n";
  out << "evaluation grid: step " << fmt6(eval_grid.step()) << ", " << eval_grid.node_count()
      << " nodes\n";
  const auto& d = report.diagnostics;
  out << "assembly: total optimizer iterations " << d.total_iterations << ", max spread "
      << fmt6(d.max_spread) << ", pruned entries " << d.pruned_entries << "\n";
  if (std::isnan(d.certified_threshold)) {
    out << "concavity certification: not available for this problem\n";
  } else {
    out << "concavity certification: " << (d.certified ? "certified" : "NOT certified")
        << " (delta " << fmt6(cfg.delta) << " vs threshold " << fmt6(d.certified_threshold)
        << ")\n";
  }
  for (const auto& note : report.notes) out << "note: " << note << "\n";
  out << "phases:\n";
  for (const auto& ph : report.phases) {
    out << "  " << ph.name << ": " << fmt6(ph.seconds) << " s\n";
  }
  out << "errors per time-to-go (sup, restricted sup):\n";
  for (const auto& se : report.per_step) {
    out << "  t=" << fmt6(se.t) << ": " << fmt6(se.sup_error) << ", "
        << fmt6(se.restricted_sup_error) << "\n";
  }
  out << "final: sup " << fmt17(report.sup_error) << ", restricted sup "
      << fmt17(report.restricted_sup_error) << "\n";
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  " is not 'key = value': '" + stripped + "'");
    }
    try {
      assign(cfg, stripped.substr(0, eq), stripped.substr(eq + 1));
    } catch (const std::exception& e) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw std::invalid_argument("override is not key=value: '" + assignment + "'");
  }
  assign(cfg, assignment.substr(0, eq), assignment.substr(eq + 1));
}

std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
  if (cfg.problem != "lq" && cfg.problem != "distance" && cfg.problem != "trivial") {
    throw std::invalid_argument("unknown problem '" + cfg.problem +
                                "' (expected lq, distance or trivial)");
  }
  if (cfg.basis_choice != "per-theorem" && cfg.basis_choice != "both-quadratic") {
    throw std::invalid_argument("unknown basis choice '" + cfg.basis_choice +
                                "' (expected per-theorem or both-quadratic)");
  }
  if (cfg.dim < 1) throw std::invalid_argument("dim must be at least 1");
  if (!(cfg.T > 0.0)) throw std::invalid_argument("T must be positive");
  if (!(cfg.delta > 0.0)) throw std::invalid_argument("delta must be positive");
  if (!(cfg.dx > 0.0)) throw std::invalid_argument("dx must be positive");
  if (!(cfg.c > 0.0)) throw std::invalid_argument("c must be positive");
  if (!(cfg.L >= 0.0)) throw std::invalid_argument("L must be non-negative");
  if (!(cfg.A >= cfg.L) || !(cfg.A > 0.0)) {
    throw std::invalid_argument("test constant A must be positive and dominate L");
  }
  if (!(cfg.x_half > 0.0) || !(cfg.u_half > 0.0)) {
    throw std::invalid_argument("box half-widths must be positive");
  }
  if (cfg.starts_per_axis < 1) throw std::invalid_argument("starts_per_axis must be >= 1");
  if (!(cfg.opt_tolerance > 0.0)) throw std::invalid_argument("opt_tolerance must be positive");
  if (cfg.max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (!(cfg.pruning_threshold >= 0.0)) {
    throw std::invalid_argument("pruning_threshold must be >= 0 (or inf to disable)");
  }
  if (cfg.eval_refine < 1) throw std::invalid_argument("eval_refine must be >= 1");
  if (cfg.threads < 1) throw std::invalid_argument("threads must be >= 1");
  if (!integral_ratio(cfg.T, cfg.delta)) {
    throw std::invalid_argument("T must be an integer multiple of delta");
  }
  if (!cfg.sweep_dx.empty() && cfg.sweep_dx.size() != cfg.sweep_deltas.size()) {
    throw std::invalid_argument("sweep_dx must match sweep_deltas in length");
  }
  for (double d : cfg.sweep_deltas) {
    if (!(d > 0.0)) throw std::invalid_argument("sweep deltas must be positive");
    if (!integral_ratio(cfg.T, d)) {
      throw std::invalid_argument("every sweep delta must divide T");
    }
  }
  for (double d : cfg.sweep_dx) {
    if (!(d > 0.0)) throw std::invalid_argument("sweep dx values must be positive");
  }
  if (!(cfg.sweep_dx_coeff > 0.0)) throw std::invalid_argument("sweep_dx_coeff must be positive");

  std::vector<std::string> warnings;
  if (cfg.problem == "distance" && cfg.x_half != 1.0) {
    warnings.push_back("distance problem always uses X = U = [-1,1]^dim; x_half is ignored");
  }
  return warnings;
}

ExperimentSetup build_setup(const ExperimentConfig& cfg) {
  ExperimentSetup s;
  if (cfg.problem == "lq") {
    s.problem = lq_problem(cfg.dim, cfg.x_half, cfg.u_half, cfg.T);
    s.oracle = lq_oracle();
    s.smoothness = lq_smoothness(cfg.dim, cfg.c);
    s.has_smoothness = true;
  } else if (cfg.problem == "distance") {
    s.problem = distance_problem(cfg.dim);
    s.problem.T = cfg.T;
    s.oracle = distance_oracle();
  } else {
    // Frozen instance: nothing moves, nothing accrues, so the value at any
    // horizon is the terminal itself (chosen below as a primal element).
    ControlProblem p;
    p.name = "trivial";
    p.n = cfg.dim;
    p.m = cfg.dim;
    p.X = Box::cube(cfg.dim, -cfg.x_half, cfg.x_half);
    p.U = Box::cube(cfg.dim, 0.0, 0.0);
    p.T = cfg.T;
    p.lipschitz = 0.0;
    auto zero_dynamics = [](std::span<const double>, std::span<const double>,
                            std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); };
    p.dynamics = zero_dynamics;
    p.lagrangian = [](std::span<const double>, std::span<const double>) { return 0.0; };
    p.terminal_is_zero = false;
    ConcavePiece piece;
    piece.state_region = p.X;
    piece.controls = p.U;
    piece.dynamics = zero_dynamics;
    piece.lagrangian = p.lagrangian;
    piece.dynamics_jtx = [](std::span<const double>, std::span<const double>,
                            std::span<const double>, std::span<double> out) {
      std::fill(out.begin(), out.end(), 0.0);
    };
    piece.dynamics_jtu = piece.dynamics_jtx;
    piece.lagrangian_gradient = [](std::span<const double>, std::span<const double>,
                                   std::span<double> gx, std::span<double> gu) {
      std::fill(gx.begin(), gx.end(), 0.0);
      std::fill(gu.begin(), gu.end(), 0.0);
    };
    p.pieces.push_back(std::move(piece));
    s.problem = std::move(p);
  }

  s.families = build_families(s.problem.X, cfg.dx, cfg.c, cfg.A, cfg.L);
  if (cfg.basis_choice == "both-quadratic") {
    s.families.test = make_family(RegularGrid(s.problem.X, cfg.dx), BasisKind::Quadratic, cfg.c);
  }

  if (cfg.problem == "trivial") {
    const std::vector<double> center = s.problem.X.center();
    std::size_t best = 0;
    double best_dist = pos_inf;
    for (std::size_t i = 0; i < s.families.primal.size(); ++i) {
      const auto& ctr = s.families.primal.functions[i].center;
      double d2 = 0.0;
      for (std::size_t k = 0; k < ctr.size(); ++k) {
        d2 += (ctr[k] - center[k]) * (ctr[k] - center[k]);
      }
      if (d2 < best_dist) {
        best_dist = d2;
        best = i;
      }
    }
    const BasisFunction element = s.families.primal.functions[best];
    s.phi = [element](std::span<const double> x) { return element.evaluate(x); };
    s.phi_gradient = [element](std::span<const double> x, std::span<double> g) {
      element.gradient(x, g);
    };
    s.problem.terminal = s.phi;
    s.oracle.kind = OracleValue::Kind::Custom;
    s.oracle.evaluator = [element](std::span<const double> x, double) {
      return element.evaluate(x);
    };
  }
  return s;
}

ErrorReport run_experiment(const ExperimentConfig& cfg) {
  ErrorReport report;
  report.notes = validate_config(cfg);
  PhaseTimer timer(report.phases);

  ExperimentSetup setup;
  timer.run("setup", [&] { setup = build_setup(cfg); });

  if (setup.has_smoothness) {
    const double threshold = delta0(setup.smoothness);
    if (cfg.delta > threshold) {
      report.notes.push_back("time step " + fmt6(cfg.delta) +
                             " exceeds the concavity threshold " + fmt6(threshold) +
                             "; entry maximizations are not certified concave");
    }
  }

  AssemblyOptions aopts;
  aopts.optimizer.starts_per_axis = cfg.starts_per_axis;
  aopts.optimizer.max_iterations = cfg.max_iterations;
  aopts.optimizer.tolerance = cfg.opt_tolerance;
  aopts.pruning_threshold = cfg.pruning_threshold;
  aopts.threads = cfg.threads;
  aopts.smoothness = setup.has_smoothness ? &setup.smoothness : nullptr;

  AssembledSystem system;
  system.delta = cfg.delta;
  timer.run("assemble_mass", [&] {
    system.mass = assemble_mass(setup.families.test, setup.families.primal, setup.problem.X);
  });
  timer.run("assemble_stiffness", [&] {
    system.stiffness = assemble_stiffness_direct(setup.problem, setup.families.test,
                                                 setup.families.primal, cfg.delta, aopts,
                                                 &report.diagnostics);
  });

  CoordinateVector lambda0;
  timer.run("terminal_projection", [&] {
    lambda0 = initial_coordinates(setup.families.primal, setup.phi, setup.phi_gradient,
                                  setup.problem.X, aopts.optimizer);
  });

  std::vector<CoordinateVector> trajectory;
  timer.run("propagate", [&] { trajectory = run(system, lambda0, cfg.T); });

  const RegularGrid eval_grid(setup.problem.X, cfg.dx / cfg.eval_refine);
  const Box inner = inner_box(setup.problem.X, 0.5);

  const bool emit = !cfg.out_dir.empty();
  if (emit) std::filesystem::create_directories(cfg.out_dir);

  timer.run("evaluate", [&] {
    std::vector<double> node(eval_grid.dim());
    std::vector<std::uint8_t> in_inner(eval_grid.node_count());
    bool any_inner = false;
    for (std::size_t g = 0; g < eval_grid.node_count(); ++g) {
      eval_grid.node_into(g, node);
      in_inner[g] = inner.contains(node, 1e-12) ? 1 : 0;
      any_inner = any_inner || in_inner[g];
    }
    for (const auto& lam : trajectory) {
      const ValueGrid vg = reconstruct(setup.families.primal, lam, eval_grid);
      StepError se;
      se.t = lam.t;
      for (std::size_t g = 0; g < eval_grid.node_count(); ++g) {
        eval_grid.node_into(g, node);
        const double err = std::abs(vg.values[g] - setup.oracle.evaluator(node, lam.t));
        se.sup_error = std::max(se.sup_error, err);
        if (in_inner[g]) se.restricted_sup_error = std::max(se.restricted_sup_error, err);
      }
      if (!any_inner) se.restricted_sup_error = se.sup_error;
      report.per_step.push_back(se);
      if (emit) {
        emit_value_grid(vg, cfg.out_dir + "/values_t" + fmt6(lam.t) + ".csv");
      }
    }
  });

  report.sup_error = report.per_step.back().sup_error;
  report.restricted_sup_error = report.per_step.back().restricted_sup_error;

  if (emit) {
    auto errors = open_out(cfg.out_dir + "/errors.csv");
    errors << "t,sup_error,restricted_sup_error\n";
    for (const auto& se : report.per_step) {
      errors << fmt17(se.t) << ',' << fmt17(se.sup_error) << ','
             << fmt17(se.restricted_sup_error) << '\n';
    }
    if (!errors) throw std::runtime_error("write failed for errors.csv");
    write_report(cfg.out_dir + "/report.txt", cfg, setup, eval_grid, report);
  }
  return report;
}

std::vector<std::pair<double, double>> sweep_schedule(const ExperimentConfig& cfg) {
  if (cfg.sweep_deltas.empty()) {
    throw std::invalid_argument("config has no sweep_deltas");
  }
  std::vector<std::pair<double, double>> schedule;
  schedule.reserve(cfg.sweep_deltas.size());
  for (std::size_t k = 0; k < cfg.sweep_deltas.size(); ++k) {
    const double d = cfg.sweep_deltas[k];
    const double dx = cfg.sweep_dx.empty() ? cfg.sweep_dx_coeff * d * d : cfg.sweep_dx[k];
    schedule.emplace_back(d, dx);
  }
  return schedule;
}

SweepResult convergence_sweep(const ExperimentConfig& base,
                              const std::vector<std::pair<double, double>>& schedule) {
  if (schedule.empty()) throw std::invalid_argument("sweep schedule is empty");
  SweepResult result;
  for (const auto& [d, dx] : schedule) {
    ExperimentConfig cfg = base;
    cfg.delta = d;
    cfg.dx = dx;
    cfg.sweep_deltas.clear();
    cfg.sweep_dx.clear();
    if (!base.out_dir.empty()) cfg.out_dir = base.out_dir + "/delta_" + fmt6(d);
    const ErrorReport rep = run_experiment(cfg);
    result.rows.push_back({d, dx, rep.sup_error, rep.restricted_sup_error});
  }

  // log-log least squares; the bound K(delta + dx/delta) with dx ~ delta^2
  // predicts slope about 1.
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const auto count = static_cast<double>(result.rows.size());
  for (const auto& row : result.rows) {
    const double x = std::log(row.delta);
    const double y = std::log(std::max(row.restricted_sup_error, 1e-16));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = count * sxx - sx * sx;
  result.fitted_slope = denom != 0.0 ? (count * sxy - sx * sy) / denom : 0.0;

  if (!base.out_dir.empty()) {
    std::filesystem::create_directories(base.out_dir);
    auto out = open_out(base.out_dir + "/sweep.csv");
    out << "delta,dx,sup_error,restricted_sup_error\n";
    for (const auto& row : result.rows) {
      out << fmt17(row.delta) << ',' << fmt17(row.dx) << ',' << fmt17(row.sup_error) << ','
          << fmt17(row.restricted_sup_error) << '\n';
    }
    if (!out) throw std::runtime_error("write failed for sweep.csv");
  }
  return result;
}

void emit_value_grid(const ValueGrid& vg, const std::string& path) {
  if (vg.values.size() != vg.grid.node_count()) {
    throw std::invalid_argument("value grid is inconsistent with its grid");
  }
  auto out = open_out(path);
  for (std::size_t k = 0; k < vg.grid.dim(); ++k) {
    out << 'x' << (k + 1) << ',';
  }
  out << "t,value\n";
  std::vector<double> node(vg.grid.dim());
  for (std::size_t g = 0; g < vg.grid.node_count(); ++g) {
    vg.grid.node_into(g, node);
    for (double coord : node) out << fmt17(coord) << ',';
    out << fmt17(vg.t) << ',' << fmt17(vg.values[g]) << '\n';
  }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

void emit_matrix(const MaxPlusMatrix& M, const std::string& path) {
  auto out = open_out(path);
  out << "row,col,value\n";
  for (std::size_t j = 0; j < M.rows(); ++j) {
    for (std::size_t i = 0; i < M.cols(); ++i) {
      out << j << ',' << i << ',' << fmt17(M(j, i)) << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

OracleCertification certify_oracle(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const ExperimentSetup setup = build_setup(cfg);
  const Box& X = setup.problem.X;
  const Box& U = setup.problem.U;
  const double xspan = X.upper[0] - X.lower[0];
  const double uspan = std::max(U.upper[0] - U.lower[0], 1e-12);

  // Two resolutions, a factor 2 apart in every direction; the gap between
  // them estimates the fine solver's own discretization error.
  DpParams fine{xspan / 160.0, cfg.T / 40.0, uspan / 40.0};
  DpParams coarse{xspan / 80.0, cfg.T / 20.0, uspan / 20.0};
  if (cfg.problem == "distance") {
    // The kinked value needs a finer state grid but tolerates a coarser
    // control grid (bang-bang optimal controls sit on the box corners).
    fine = DpParams{xspan / 80.0, cfg.T / 40.0, uspan / 20.0};
    coarse = DpParams{xspan / 40.0, cfg.T / 20.0, uspan / 10.0};
  }

  const DpResult dp_fine = dp_solve(setup.problem, cfg.T, fine);
  const DpResult dp_coarse = dp_solve(setup.problem, cfg.T, coarse);

  const RegularGrid sample(X, xspan / 20.0);
  std::vector<double> node(X.dim());
  OracleCertification cert;
  for (const double t : {cfg.T, cfg.T / 2.0}) {
    for (std::size_t g = 0; g < sample.node_count(); ++g) {
      sample.node_into(g, node);
      const double vf = dp_fine.value(node, t);
      const double vc = dp_coarse.value(node, t);
      const double vo = setup.oracle.evaluator(node, t);
      cert.max_deviation = std::max(cert.max_deviation, std::abs(vo - vf));
      cert.richardson = std::max(cert.richardson, std::abs(vf - vc));
    }
  }
  cert.budget = 3.0 * cert.richardson + 1e-3;
  cert.pass = cert.max_deviation <= cert.budget;
  cert.detail = "problem " + cfg.problem + ": deviation " + fmt6(cert.max_deviation) +
                " vs budget " + fmt6(cert.budget) + " (fine dx " + fmt6(fine.state_step) +
                ", dt " + fmt6(fine.time_step) + ", du " + fmt6(fine.control_step) +
                "; sampled at t = T and T/2 on " + std::to_string(sample.node_count()) +
                " nodes)";
  return cert;
}

}  // namespace mpfem
