#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mpfem/basis.hpp"
#include "mpfem/geometry.hpp"

namespace mpfem {

using DynamicsFn = std::function<void(std::span<const double> x, std::span<const double> u,
                                      std::span<double> out)>;
using LagrangianFn = std::function<double(std::span<const double> x, std::span<const double> u)>;
using TerminalFn = std::function<double(std::span<const double> x)>;
/// (df/dx)^T p or (df/du)^T p for the piece's dynamics.
using JacobianApplyFn = std::function<void(std::span<const double> x, std::span<const double> u,
                                           std::span<const double> p, std::span<double> out)>;
using LagrangianGradFn = std::function<void(std::span<const double> x, std::span<const double> u,
                                            std::span<double> gx, std::span<double> gu)>;

/// One concave branch of the problem data.  On state_region x controls the
/// stiffness objective z(x) + w(x + dt f(x,u)) + dt l(x,u) is concave, so
/// assembly can maximize per piece and take the max across pieces.  Regions
/// may have degenerate (point) axes, e.g. a boundary face with frozen
/// controls.  A branch continuous up to the region boundary may use the
/// closed region even when the true data switches branch there: the sup
/// over the open region equals the max over its closure.
struct ConcavePiece {
  Box state_region;
  Box controls;
  DynamicsFn dynamics;
  LagrangianFn lagrangian;
  // optional analytic derivatives; leave unset to get finite differences
  JacobianApplyFn dynamics_jtx;
  JacobianApplyFn dynamics_jtu;
  LagrangianGradFn lagrangian_gradient;

  bool has_gradients() const { return dynamics_jtx && dynamics_jtu && lagrangian_gradient; }
};

struct ControlProblem {
  std::string name;
  std::size_t n = 0;  // state dimension
  std::size_t m = 0;  // control dimension
  Box X;
  Box U;
  double T = 1.0;
  /// Lipschitz bound L of the value function w.r.t. the l1 norm; the test
  /// family constant A must dominate it.
  double lipschitz = 1.0;

  // True problem data, branch switches included; simulation and DP use these.
  DynamicsFn dynamics;
  LagrangianFn lagrangian;
  TerminalFn terminal;
  bool terminal_is_zero = true;

  /// Trajectories may not leave X: every discrete step clamps the advected
  /// point x + delta f(x, u) back to X, in the assembled operator, the
  /// reference step and the concavity sampler alike.  Required for
  /// stop-at-the-boundary problems; with an expanded primal family an
  /// unconstrained step would read elements outside X where the
  /// coordinate representation of the value is meaningless.
  bool state_constrained = false;

  std::vector<ConcavePiece> pieces;
};

/// Linear-quadratic instance: f(x,u) = u, l(x,u) = -(|x|^2+|u|^2)/2, phi = 0.
/// The unbounded domains are truncated to boxes; the defaults keep the
/// optimal feedback u = -tanh(t)x feasible, so the truncation is inactive
/// and the closed-form value still applies.
ControlProblem lq_problem(std::size_t dim = 2, double x_half = 1.0, double u_half = 2.0,
                          double horizon = 5.0);

/// Distance-to-boundary instance on X = U = [-1,1]^dim: l = -1 and f = u
/// strictly inside, both 0 on the boundary (absorption).
ControlProblem distance_problem(std::size_t dim = 2);

struct OracleValue {
  enum class Kind { LQ, Distance, Custom };
  Kind kind = Kind::LQ;
  std::function<double(std::span<const double> x, double t)> evaluator;
};

/// v(x,t) = -tanh(t) |x|^2 / 2, from the Riccati equation p' = 1 - p^2,
/// p(0) = 0 induced by v_t = -|x|^2/2 + |grad v|^2/2.
OracleValue lq_oracle();

/// v(x,t) = -min(t, 1 - |x|_inf): negated time to reach the boundary,
/// capped at the horizon.
OracleValue distance_oracle();

/// Constants of the concavity threshold: F = df/dx, G = df/du, and
/// -C I <= d2w/dx2 <= -beta I, d2l/du2 <= -alpha I, |d2l/dx2| <= C,
/// |d2l/dxdu| <= C.
struct SmoothnessData {
  Eigen::MatrixXd F;
  Eigen::MatrixXd G;
  double alpha = 0.0;
  double beta = 0.0;
  double C = 0.0;
};

/// Largest certified time step: below it every stiffness entry objective is
/// jointly concave in (x,u).  Spectral norms; terms with zero denominators
/// (|F| = 0 or |G| = 0) count as +inf.
double delta0(const SmoothnessData& s);

/// SmoothnessData of the LQ instance with quadratic elements of Hessian 1/c.
SmoothnessData lq_smoothness(std::size_t dim, double c);

struct ConcavityReport {
  bool pass = false;
  double worst_violation = 0.0;  // max over samples of mean(endpoints) - midpoint
  double tolerance = 0.0;
  std::size_t samples = 0;
};

/// Midpoint-concavity sampling of b(x,u) = z(x) + w(x + delta f(x,u)) +
/// delta l(x,u) on random segments in X x U, using the true problem data.
ConcavityReport verify_concavity(const ControlProblem& p, const BasisFunction& w,
                                 const BasisFunction& z, double delta, std::size_t samples,
                                 std::uint64_t seed = 20240901);

}  // namespace mpfem
