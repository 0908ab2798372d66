#include "mpfem/propagation.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mpfem {

CoordinateVector initial_coordinates(const BasisFamily& primal, const TerminalFn& phi,
                                     const std::function<void(std::span<const double>,
                                                              std::span<double>)>& phi_gradient,
                                     const Box& X, const OptimizerOptions& options) {
  if (primal.size() == 0) throw std::invalid_argument("primal family is empty");
  if (primal.dim() != X.dim()) {
    throw std::invalid_argument("primal family dimension does not match the domain");
  }

  CoordinateVector out;
  out.lambda.resize(primal.size());
  out.t = 0.0;

  if (!phi) {
    // phi = 0: lambda_i = -sup_X w_i, and the sup over the box of a
    // radially decreasing element is attained at the point closest to the
    // center.
    for (std::size_t i = 0; i < primal.size(); ++i) {
      const BasisFunction& w = primal.functions[i];
      if (w.kind == BasisKind::Quadratic) {
        const double d = X.distance2(w.center);
        out.lambda[i] = d * d / (2.0 * w.shape);
      } else {
        out.lambda[i] = w.shape * X.distance1(w.center);
      }
    }
    return out;
  }

  std::vector<double> gw(X.dim());
  for (std::size_t i = 0; i < primal.size(); ++i) {
    const BasisFunction& w = primal.functions[i];
    ObjectiveSpec obj;
    obj.dim = X.dim();
    obj.box = X;
    obj.value = [&](std::span<const double> x) { return w.evaluate(x) - phi(x); };
    if (phi_gradient) {
      obj.gradient = [&](std::span<const double> x, std::span<double> g) {
        w.gradient(x, gw);
        phi_gradient(x, g);
        for (std::size_t k = 0; k < g.size(); ++k) g[k] = gw[k] - g[k];
      };
    }
    try {
      out.lambda[i] = -maximize_concave_box(obj, options).value;
    } catch (const std::runtime_error&) {
      // Every start aborted on a non-finite objective; w - phi = +inf,
      // i.e. a -inf terminal, is the nameable culprit.
      std::vector<double> probe = X.center();
      if (phi(probe) == neg_inf) {
        throw std::invalid_argument(
            "terminal function has no finite coordinate; identically -inf terminals "
            "cannot be represented");
      }
      throw;
    }
  }

  bool any_finite = false;
  for (double v : out.lambda) {
    if (std::isnan(v)) throw std::runtime_error("terminal projection produced NaN");
    if (v > neg_inf) any_finite = true;
  }
  if (!any_finite) {
    throw std::invalid_argument(
        "terminal function has no finite coordinate; identically -inf terminals "
        "cannot be represented");
  }
  return out;
}

CoordinateVector step(const MaxPlusMatrix& A, const MaxPlusMatrix& B,
                      const CoordinateVector& lambda, double delta) {
  if (A.rows() != B.rows() || A.cols() != B.cols()) {
    throw std::invalid_argument("mass and stiffness kernels have different shapes");
  }
  if (lambda.lambda.size() != B.cols()) {
    throw std::invalid_argument("coordinate vector has size " +
                                std::to_string(lambda.lambda.size()) + ", kernels expect " +
                                std::to_string(B.cols()));
  }
  if (!(delta > 0.0)) throw std::invalid_argument("time step must be positive");
  CoordinateVector next;
  next.lambda = kernel_residuate(A, kernel_apply(B, lambda.lambda));
  next.t = lambda.t + delta;
  return next;
}

std::vector<CoordinateVector> run(const AssembledSystem& system, const CoordinateVector& lambda0,
                                  double T) {
  if (!(system.delta > 0.0)) throw std::invalid_argument("system has no positive time step");
  const double span = T - lambda0.t;
  if (span < -1e-12) throw std::invalid_argument("horizon lies before the initial time");
  const double steps_real = span / system.delta;
  const double rounded = std::round(steps_real);
  if (std::abs(steps_real - rounded) > 1e-9 * std::max(1.0, std::abs(steps_real))) {
    throw std::invalid_argument("horizon " + std::to_string(T) +
                                " is not an integer number of steps of " +
                                std::to_string(system.delta));
  }
  const auto steps = static_cast<std::size_t>(rounded);

  std::vector<CoordinateVector> trajectory;
  trajectory.reserve(steps + 1);
  trajectory.push_back(lambda0);
  for (std::size_t s = 0; s < steps; ++s) {
    trajectory.push_back(step(system.mass, system.stiffness, trajectory.back(), system.delta));
  }
  return trajectory;
}

double reconstruct_value(const BasisFamily& primal, const MaxPlusVector& lambda,
                         std::span<const double> x) {
  if (lambda.size() != primal.size()) {
    throw std::invalid_argument("coordinate vector does not match the family size");
  }
  double best = neg_inf;
  for (std::size_t i = 0; i < primal.size(); ++i) {
    if (lambda[i] == neg_inf) continue;
    best = std::max(best, primal.functions[i].evaluate(x) + lambda[i]);
  }
  return best;
}

ValueGrid reconstruct(const BasisFamily& primal, const CoordinateVector& lambda,
                      const RegularGrid& grid) {
  if (grid.dim() != primal.dim()) {
    throw std::invalid_argument("evaluation grid dimension does not match the family");
  }
  ValueGrid out;
  out.grid = grid;
  out.t = lambda.t;
  out.values.resize(grid.node_count());
  std::vector<double> node(grid.dim());
  for (std::size_t g = 0; g < grid.node_count(); ++g) {
    grid.node_into(g, node);
    out.values[g] = reconstruct_value(primal, lambda.lambda, node);
  }
  return out;
}

}  // namespace mpfem
