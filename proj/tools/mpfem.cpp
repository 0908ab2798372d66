#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mpfem/harness.hpp"

namespace {

struct CliArgs {
  std::string config;
  std::string out;
  long long seed = -1;
  int threads = 0;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CliArgs& args) {
  cmd->add_option("--config", args.config, "experiment config file (key = value lines)");
  cmd->add_option("--out", args.out, "output directory for artifacts");
  cmd->add_option("--seed", args.seed, "seed recorded in reports");
  cmd->add_option("--threads", args.threads, "worker threads for assembly");
  cmd->add_option("--override", args.overrides,
                  "config override key=value, may be repeated")
      ->take_all();
}

mpfem::ExperimentConfig load_config(const CliArgs& args) {
  mpfem::ExperimentConfig cfg;
  if (!args.config.empty()) cfg = mpfem::parse_config_file(args.config);
  for (const auto& o : args.overrides) mpfem::apply_override(cfg, o);
  if (!args.out.empty()) cfg.out_dir = args.out;
  if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
  if (args.threads > 0) cfg.threads = args.threads;
  return cfg;
}

int cmd_run(const CliArgs& args) {
  const auto cfg = load_config(args);
  const mpfem::ErrorReport report = mpfem::run_experiment(cfg);
  for (const auto& note : report.notes) std::printf("note: %s\n", note.c_str());
  for (const auto& ph : report.phases) {
    std::printf("%-20s %.3f s\n", ph.name.c_str(), ph.seconds);
  }
  std::printf("sup error at T:            %.6g\n", report.sup_error);
  std::printf("restricted sup error at T: %.6g\n", report.restricted_sup_error);
  if (!cfg.out_dir.empty()) std::printf("artifacts in %s\n", cfg.out_dir.c_str());
  return 0;
}

int cmd_sweep(const CliArgs& args) {
  const auto cfg = load_config(args);
  const auto schedule = mpfem::sweep_schedule(cfg);
  const mpfem::SweepResult result = mpfem::convergence_sweep(cfg, schedule);
  std::printf("%12s %12s %14s %14s\n", "delta", "dx", "sup_error", "restricted");
  for (const auto& row : result.rows) {
    std::printf("%12.6g %12.6g %14.6g %14.6g\n", row.delta, row.dx, row.sup_error,
                row.restricted_sup_error);
  }
  std::printf("fitted log-log slope: %.4f\n", result.fitted_slope);
  return 0;
}

int cmd_oracle_check(const CliArgs& args) {
  const auto cfg = load_config(args);
  const mpfem::OracleCertification cert = mpfem::certify_oracle(cfg);
  std::printf("%s\n", cert.detail.c_str());
  std::printf("oracle certification: %s\n", cert.pass ? "PASS" : "FAIL");
  return cert.pass ? 0 : 1;
}

int cmd_assemble_only(const CliArgs& args) {
  const auto cfg = load_config(args);
  if (cfg.out_dir.empty()) {
    throw std::runtime_error("assemble-only needs an output directory (--out or out_dir)");
  }
  mpfem::validate_config(cfg);
  const mpfem::ExperimentSetup setup = mpfem::build_setup(cfg);

  mpfem::AssemblyOptions aopts;
  aopts.optimizer.starts_per_axis = cfg.starts_per_axis;
  aopts.optimizer.max_iterations = cfg.max_iterations;
  aopts.optimizer.tolerance = cfg.opt_tolerance;
  aopts.pruning_threshold = cfg.pruning_threshold;
  aopts.threads = cfg.threads;
  aopts.smoothness = setup.has_smoothness ? &setup.smoothness : nullptr;

  std::filesystem::create_directories(cfg.out_dir);
  const auto mass = mpfem::assemble_mass(setup.families.test, setup.families.primal,
                                         setup.problem.X);
  mpfem::emit_matrix(mass, cfg.out_dir + "/mass.csv");
  mpfem::AssemblyDiagnostics diag;
  const auto stiffness = mpfem::assemble_stiffness_direct(
      setup.problem, setup.families.test, setup.families.primal, cfg.delta, aopts, &diag);
  mpfem::emit_matrix(stiffness, cfg.out_dir + "/stiffness.csv");

  std::printf("mass %zux%zu, stiffness %zux%zu written to %s\n", mass.rows(), mass.cols(),
              stiffness.rows(), stiffness.cols(), cfg.out_dir.c_str());
  std::printf("optimizer iterations: %zu, max spread: %.3g, pruned: %zu\n",
              diag.total_iterations, diag.max_spread, diag.pruned_entries);
  if (!std::isnan(diag.certified_threshold)) {
    std::printf("concavity: delta %.6g vs threshold %.6g -> %s\n", cfg.delta,
                diag.certified_threshold, diag.certified ? "certified" : "NOT certified");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Max-plus finite element solver for finite-horizon optimal control"};
  app.require_subcommand(1);

  CliArgs args;
  auto* run = app.add_subcommand("run", "run one experiment and report errors");
  auto* sweep = app.add_subcommand("sweep", "run the config's (delta, dx) schedule");
  auto* oracle = app.add_subcommand("oracle-check",
                                    "certify the closed-form oracle against dense DP");
  auto* assemble = app.add_subcommand("assemble-only", "emit mass and stiffness kernels");
  for (auto* cmd : {run, sweep, oracle, assemble}) add_common(cmd, args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(args);
    if (sweep->parsed()) return cmd_sweep(args);
    if (oracle->parsed()) return cmd_oracle_check(args);
    if (assemble->parsed()) return cmd_assemble_only(args);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
