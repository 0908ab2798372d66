#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mpfem/geometry.hpp"
#include "mpfem/problem.hpp"

namespace mpfem {

/// Resolutions of the dense validation solver.  Certification runs pick
/// state_step <= dx/4 and time_step <= delta/4 of the experiment being
/// validated, with controls on a grid over U of step control_step.
struct DpParams {
  double state_step = 0.1;
  double time_step = 0.1;
  double control_step = 0.1;
};

/// Semi-Lagrangian value iteration on a dense grid: slice s holds the value
/// with time-to-go s*time_step, v^{s}(x) = max_u { dt l(x,u) + v^{s-1}(x +
/// dt f(x,u)) } with multilinear interpolation; advected points are clamped
/// to X (equivalent to restricting to the controls that keep the state in
/// X, which is exact for problems whose optimum never leaves X).
struct DpResult {
  RegularGrid grid;
  std::vector<std::vector<double>> slices;
  double time_step = 0.0;
  double horizon = 0.0;

  /// Multilinear interpolation in x at time-to-go t (t must sit on a slice
  /// within 1e-6 relative).
  double value(std::span<const double> x, double t) const;
};

DpResult dp_solve(const ControlProblem& p, double horizon, const DpParams& params);

/// Multilinear interpolation of nodal values on a grid; x is clamped to the
/// grid box.
double grid_interpolate(const RegularGrid& grid, std::span<const double> values,
                        std::span<const double> x);

}  // namespace mpfem
