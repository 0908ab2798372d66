#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "mpfem/geometry.hpp"

namespace mpfem {

/// Objective for box-constrained concave maximization.  `gradient` is
/// optional; when absent a central finite difference with step
/// 1e-6*(1+|y|_inf) is used.  At a kink, supply any supergradient (the
/// zero element per coordinate is the conventional choice).
struct ObjectiveSpec {
  std::size_t dim = 0;
  Box box;
  std::function<double(std::span<const double>)> value;
  std::function<void(std::span<const double>, std::span<double>)> gradient;
};

struct OptimizerOptions {
  /// Start lattice: this many points per axis, endpoints included, plus
  /// the box center.  1 collapses to the center alone.
  int starts_per_axis = 3;
  int max_iterations = 500;
  double armijo_slope = 1e-4;
  double backtrack = 0.5;
  /// Convergence: projected gradient norm <= tolerance * (1 + |value|).
  double tolerance = 1e-8;
};

struct OptimizerResult {
  std::vector<double> argmax;
  double value = 0.0;
  std::size_t iterations = 0;   // summed over starts
  std::size_t starts = 0;       // starts that produced a finite result
  double multistart_spread = 0.0;  // max - min of per-start final values
  bool converged = false;          // every start terminated at a stationarity test
};

/// Projected-gradient ascent (Barzilai-Borwein steps, Armijo backtracking)
/// from a lattice of starts plus any caller-supplied extra starts.  Exact
/// for smooth concave objectives; for piecewise-concave ones a failed line
/// search triggers a retry that classifies each coordinate by the gradients
/// on both sides of the offending kink (axis-aligned for the l1 kinks
/// arising here): coordinates whose one-sided slopes straddle zero are
/// pinned, the rest move along the mean slope, which restores ascent along
/// the kink itself.  The
/// spread across starts is reported as an empirical concavity certificate.
/// A start hitting a non-finite value is abandoned; all starts failing is
/// an error.
OptimizerResult maximize_concave_box(const ObjectiveSpec& objective,
                                     const OptimizerOptions& options = {},
                                     std::span<const std::vector<double>> extra_starts = {});

/// Exhaustive evaluation on a lattice of the given step over the objective
/// box.  Slow; intended as a certification cross-check.
OptimizerResult maximize_on_grid(const ObjectiveSpec& objective, double step);

}  // namespace mpfem
