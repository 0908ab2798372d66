#pragma once

#include <functional>
#include <span>
#include <vector>

#include "mpfem/assembly.hpp"
#include "mpfem/basis.hpp"
#include "mpfem/geometry.hpp"
#include "mpfem/problem.hpp"
#include "mpfem/tropical.hpp"

namespace mpfem {

/// Coordinate vector of the approximate value at time-to-go t; the value
/// itself is the max-plus combination max_i (w_i + lambda_i).
struct CoordinateVector {
  MaxPlusVector lambda;
  double t = 0.0;
};

/// A function sampled on a regular grid at time-to-go t.
struct ValueGrid {
  RegularGrid grid;
  std::vector<double> values;
  double t = 0.0;
};

/// Best coordinates below the terminal function,
///   lambda_i = inf_{x in X} (phi(x) - w_i(x)),
/// the residuated projection of phi onto the primal semimodule.  A null phi
/// means phi = 0 and uses the closed form (the distance from the element
/// center to X, squared over 2c for quadratic elements, times A in l1 for
/// Lipschitz ones).  Otherwise phi - w_i is minimized numerically, which is
/// exact when phi is convex or an element of the family itself; supply
/// phi_gradient to skip finite differences.  A phi identically -inf (no
/// finite coordinate at all) is rejected.
CoordinateVector initial_coordinates(const BasisFamily& primal, const TerminalFn& phi,
                                     const std::function<void(std::span<const double>,
                                                              std::span<double>)>& phi_gradient,
                                     const Box& X, const OptimizerOptions& options = {});

/// One discrete step lambda -> A \ (B lambda), advancing t by delta.  This
/// is the coordinate form of the projected propagation: apply the stiffness
/// kernel, then the residuated mass kernel.
CoordinateVector step(const MaxPlusMatrix& A, const MaxPlusMatrix& B,
                      const CoordinateVector& lambda, double delta);

/// Iterates step until time-to-go T, which must be lambda0.t plus an
/// integer number of deltas.  Returns all intermediate vectors, lambda0
/// first.
std::vector<CoordinateVector> run(const AssembledSystem& system, const CoordinateVector& lambda0,
                                  double T);

/// max_i (w_i(x) + lambda_i) at one point.
double reconstruct_value(const BasisFamily& primal, const MaxPlusVector& lambda,
                         std::span<const double> x);

/// The combined function sampled on a grid.
ValueGrid reconstruct(const BasisFamily& primal, const CoordinateVector& lambda,
                      const RegularGrid& grid);

}  // namespace mpfem
