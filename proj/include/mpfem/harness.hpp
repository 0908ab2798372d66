#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mpfem/assembly.hpp"
#include "mpfem/dp.hpp"
#include "mpfem/problem.hpp"
#include "mpfem/propagation.hpp"

namespace mpfem {

/// One experiment, fully determined by these knobs.  The config file is
/// flat `key = value` text with `#` comments; apply_override accepts the
/// same `key=value` pairs.
struct ExperimentConfig {
  std::string problem = "lq";  // lq | distance | trivial
  std::size_t dim = 2;
  double T = 5.0;
  double delta = 0.5;
  double dx = 0.05;
  double c = 0.1;   // primal quadratic shape (inverse Hessian)
  double A = 1.0;   // test Lipschitz constant, >= L
  double L = 1.0;   // value Lipschitz bound used to enlarge the primal grid
  std::string basis_choice = "per-theorem";  // per-theorem | both-quadratic
  double x_half = 1.0;  // state box half-width (lq, trivial)
  double u_half = 2.0;  // control box half-width (lq)
  int starts_per_axis = 1;
  double opt_tolerance = 1e-8;
  int max_iterations = 500;
  double pruning_threshold = pos_inf;
  int eval_refine = 2;  // evaluation grid step = dx / eval_refine
  std::string out_dir;  // empty: no artifacts
  std::uint64_t seed = 0;
  int threads = 1;
  std::vector<double> sweep_deltas;    // sweep schedule, largest-to-smallest
  std::vector<double> sweep_dx;        // explicit dx per delta; empty: coeff * delta^2
  double sweep_dx_coeff = 0.2;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

/// key=value override, same keys as the file format.
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

/// Throws on invalid configs; returns non-fatal warnings (e.g. a time step
/// above the certified concavity threshold, which the method tolerates but
/// the report should flag).
std::vector<std::string> validate_config(const ExperimentConfig& cfg);

/// Problem instance and element families realized from a config.
struct ExperimentSetup {
  ControlProblem problem;
  FamilyPair families;
  OracleValue oracle;
  TerminalFn phi;  // null: terminal is zero
  std::function<void(std::span<const double>, std::span<double>)> phi_gradient;
  SmoothnessData smoothness;
  bool has_smoothness = false;
};
ExperimentSetup build_setup(const ExperimentConfig& cfg);

struct PhaseTiming {
  std::string name;
  double seconds = 0.0;
};

struct StepError {
  double t = 0.0;
  double sup_error = 0.0;
  double restricted_sup_error = 0.0;
};

struct ErrorReport {
  double sup_error = 0.0;             // at time-to-go T, over the evaluation grid
  double restricted_sup_error = 0.0;  // same, on X shrunk by half about its center
  std::vector<StepError> per_step;
  std::vector<PhaseTiming> phases;
  std::vector<std::string> notes;
  AssemblyDiagnostics diagnostics;
};

/// Full pipeline: families, kernels, terminal projection, propagation,
/// reconstruction, oracle comparison.  Writes values_t<t>.csv, errors.csv
/// and report.txt into cfg.out_dir when set.  The CSV artifacts are
/// byte-deterministic for identical configs; report.txt embeds wall-clock
/// timings and is not.
ErrorReport run_experiment(const ExperimentConfig& cfg);

struct SweepRow {
  double delta = 0.0;
  double dx = 0.0;
  double sup_error = 0.0;
  double restricted_sup_error = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  /// Least-squares slope of log(restricted error) against log(delta).
  double fitted_slope = 0.0;
};

/// Runs the base experiment once per (delta, dx) pair and fits the error
/// order; writes sweep.csv under base.out_dir when set.
SweepResult convergence_sweep(const ExperimentConfig& base,
                              const std::vector<std::pair<double, double>>& schedule);

/// Schedule from the config's sweep fields: explicit sweep_dx entries when
/// given, else dx = sweep_dx_coeff * delta^2.
std::vector<std::pair<double, double>> sweep_schedule(const ExperimentConfig& cfg);

/// Grid CSV: header x1,...,xn,t,value; one row per node in lexicographic
/// index order; 17 significant digits.  Deterministic.
void emit_value_grid(const ValueGrid& vg, const std::string& path);

/// Kernel CSV: header row,col,value; -inf entries rendered as "-inf".
void emit_matrix(const MaxPlusMatrix& M, const std::string& path);

struct OracleCertification {
  double max_deviation = 0.0;  // closed form vs fine DP on the sample grid
  double richardson = 0.0;     // fine DP vs coarse DP
  double budget = 0.0;         // 3 * richardson + 1e-3
  bool pass = false;
  std::string detail;
};

/// Certifies the configured problem's closed-form oracle against the dense
/// dynamic-programming solver at two resolutions on a 21-per-axis sample of
/// X at time-to-go T.  The acceptance of the benchmark criteria is
/// conditioned on this passing.
OracleCertification certify_oracle(const ExperimentConfig& cfg);

}  // namespace mpfem
