#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mpfem/basis.hpp"
#include "mpfem/geometry.hpp"
#include "mpfem/optimizer.hpp"
#include "mpfem/problem.hpp"
#include "mpfem/tropical.hpp"

namespace mpfem {

/// Numeric Hamiltonian H(x, p) for the Hamiltonian assembly path.
using HamiltonianFn =
    std::function<double(std::span<const double> x, std::span<const double> p)>;

/// Per-entry and aggregate records of the stiffness maximizations.  The
/// per-entry vectors are indexed like the matrix entries, row-major.
struct AssemblyDiagnostics {
  std::vector<std::uint32_t> iterations;  // optimizer iterations spent on the entry
  std::vector<float> spread;              // worst per-piece multistart spread
  std::vector<std::uint8_t> converged;    // 1 when every start passed its stationarity test
  std::size_t pruned_entries = 0;
  std::size_t total_iterations = 0;
  double max_spread = 0.0;
  /// delta <= certified_threshold, where the threshold is the concavity
  /// bound computed from the smoothness data supplied in the options.
  /// False (with NaN threshold) when no smoothness data was given.
  bool certified = false;
  double certified_threshold = 0.0;
};

struct AssemblyOptions {
  OptimizerOptions optimizer;
  /// Drop stiffness entry (j,i) when the mass entry falls more than this
  /// below its row maximum; +inf disables pruning.  Dropped entries are
  /// -inf in the kernel.
  double pruning_threshold = pos_inf;
  int threads = 1;
  /// Additionally start each entry maximization from the test element
  /// center with centered controls, the analytic argmax in the small-step
  /// limit.  For Lipschitz test elements this also runs a control-only
  /// maximization with the state pinned there, which is exact when the
  /// entry's sup sits on the cone tip.
  bool warm_start_test_center = true;
  /// When set, delta is checked against the concavity threshold and the
  /// result recorded in the diagnostics.
  const SmoothnessData* smoothness = nullptr;
};

/// Mass kernel (A_h)_{ji} = <z_j, w_i> over X, via the per-coordinate
/// closed forms of scalar_product.
MaxPlusMatrix assemble_mass(const BasisFamily& test, const BasisFamily& primal, const Box& X);

/// Stiffness kernel of time step delta,
///   (B_h)_{ji} = sup_{x in X, u in U} z_j(x) + w_i(x + delta f(x,u)) + delta l(x,u),
/// computed per concave piece of the problem by projected-gradient ascent
/// and maxed across pieces.  The primal element is evaluated at the
/// advanced point without clamping, so excursions outside X count.
MaxPlusMatrix assemble_stiffness_direct(const ControlProblem& problem, const BasisFamily& test,
                                        const BasisFamily& primal, double delta,
                                        const AssemblyOptions& options = {},
                                        AssemblyDiagnostics* diagnostics = nullptr);

/// Stiffness kernel from a Hamiltonian instead of (f, l):
///   (B_h)_{ji} = sup_{x in X} z_j(x) + w_i(x) + delta H(x, grad w_i(x)).
/// Requires differentiable (quadratic) primal elements.
MaxPlusMatrix assemble_stiffness_hamiltonian(const ControlProblem& problem, const HamiltonianFn& H,
                                             const BasisFamily& test, const BasisFamily& primal,
                                             double delta, const AssemblyOptions& options = {},
                                             AssemblyDiagnostics* diagnostics = nullptr);

struct AssembledSystem {
  MaxPlusMatrix mass;       // q x p
  MaxPlusMatrix stiffness;  // q x p
  double delta = 0.0;
  AssemblyDiagnostics diagnostics;
};

/// Mass plus direct stiffness in one call.
AssembledSystem assemble_system(const ControlProblem& problem, const FamilyPair& pair,
                                double delta, const AssemblyOptions& options = {});

/// One exact small step applied to an arbitrary terminal function,
///   max_{u in U} w(x + delta f(x,u)) + delta l(x,u),
/// using the true (branch-switching) problem data.  Reference for
/// single-step consistency checks.
double one_step_value(const ControlProblem& problem, const TerminalFn& w,
                      std::span<const double> x, double delta,
                      const OptimizerOptions& options = {});

}  // namespace mpfem
