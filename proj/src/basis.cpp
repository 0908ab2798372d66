#include "mpfem/basis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mpfem {

double BasisFunction::evaluate(std::span<const double> x) const {
  if (x.size() != center.size())
    throw std::invalid_argument("basis evaluate: point has dimension " +
                                std::to_string(x.size()) + ", element has " +
                                std::to_string(center.size()));
  if (kind == BasisKind::Quadratic) {
    double s = 0.0;
    for (std::size_t k = 0; k < center.size(); ++k) {
      const double d = x[k] - center[k];
      s += d * d;
    }
    return -s / (2.0 * shape);
  }
  double s = 0.0;
  for (std::size_t k = 0; k < center.size(); ++k) s += std::abs(x[k] - center[k]);
  return -shape * s;
}

void BasisFunction::gradient(std::span<const double> x, std::span<double> out) const {
  if (x.size() != center.size() || out.size() != center.size())
    throw std::invalid_argument("basis gradient: dimension mismatch");
  if (kind == BasisKind::Quadratic) {
    for (std::size_t k = 0; k < center.size(); ++k) out[k] = -(x[k] - center[k]) / shape;
    return;
  }
  for (std::size_t k = 0; k < center.size(); ++k) {
    const double d = x[k] - center[k];
    out[k] = d > 0.0 ? -shape : (d < 0.0 ? shape : 0.0);
  }
}

BasisFamily make_family(const RegularGrid& grid, BasisKind kind, double shape) {
  if (!(shape > 0.0)) throw std::invalid_argument("basis shape must be positive");
  BasisFamily family;
  family.grid = grid;
  family.functions.reserve(grid.node_count());
  for (std::size_t i = 0; i < grid.node_count(); ++i) {
    BasisFunction f;
    f.kind = kind;
    f.shape = shape;
    f.center = grid.node(i);
    family.functions.push_back(std::move(f));
  }
  return family;
}

FamilyPair build_families(const Box& X, double dx, double c, double A, double L) {
  if (!(dx > 0.0)) throw std::invalid_argument("grid step must be positive");
  if (!(c > 0.0)) throw std::invalid_argument("quadratic shape c must be positive");
  if (!(L >= 0.0)) throw std::invalid_argument("Lipschitz bound L must be nonnegative");
  if (!(A >= L))
    throw std::invalid_argument("test constant A=" + std::to_string(A) +
                                " must dominate the value Lipschitz bound L=" +
                                std::to_string(L));
  FamilyPair pair;
  pair.primal = make_family(RegularGrid(X.expanded(c * L), dx), BasisKind::Quadratic, c);
  pair.test = make_family(RegularGrid(X, dx), BasisKind::Lipschitz, A);
  return pair;
}

namespace {

// Unconstrained argmax of the 1-d slice -|t-a|^2/(2c1) - |t-b|^2/(2c2).
double argmax_qq(double a, double c1, double b, double c2) {
  return (a * c2 + b * c1) / (c1 + c2);
}

// Unconstrained argmax of -A|t-a| - (t-b)^2/(2c): the kink a pulled into
// the band [b - Ac, b + Ac] where the quadratic's pull dominates.
double argmax_lq(double a, double A, double b, double c) {
  return std::clamp(a, b - A * c, b + A * c);
}

double slice_value(const BasisFunction& f, std::size_t k, double t) {
  const double d = t - f.center[k];
  return f.kind == BasisKind::Quadratic ? -d * d / (2.0 * f.shape) : -f.shape * std::abs(d);
}

// Golden-section search on a concave 1-d function.
double golden_max(double lo, double hi, const auto& g) {
  constexpr double phi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double g1 = g(x1), g2 = g(x2);
  for (int it = 0; it < 160 && b - a > 0.0; ++it) {
    if (g1 < g2) {
      a = x1;
      x1 = x2;
      g1 = g2;
      x2 = a + phi * (b - a);
      g2 = g(x2);
    } else {
      b = x2;
      x2 = x1;
      g2 = g1;
      x1 = b - phi * (b - a);
      g1 = g(x1);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

ScalarProduct scalar_product(const BasisFunction& z, const BasisFunction& w, const Box& X) {
  const std::size_t n = X.dim();
  if (z.center.size() != n || w.center.size() != n)
    throw std::invalid_argument("scalar_product: element/box dimension mismatch");

  // The objective z(x)+w(x) is a sum of concave per-coordinate slices, so
  // the sup over the box splits into n independent 1-d maximizations.
  ScalarProduct result;
  for (std::size_t k = 0; k < n; ++k) {
    double t;
    if (z.kind == BasisKind::Quadratic && w.kind == BasisKind::Quadratic) {
      t = argmax_qq(z.center[k], z.shape, w.center[k], w.shape);
    } else if (z.kind == BasisKind::Lipschitz && w.kind == BasisKind::Quadratic) {
      t = argmax_lq(z.center[k], z.shape, w.center[k], w.shape);
    } else if (z.kind == BasisKind::Quadratic && w.kind == BasisKind::Lipschitz) {
      t = argmax_lq(w.center[k], w.shape, z.center[k], z.shape);
    } else {
      t = golden_max(X.lower[k], X.upper[k],
                     [&](double s) { return slice_value(z, k, s) + slice_value(w, k, s); });
      result.closed_form = false;
    }
    t = std::clamp(t, X.lower[k], X.upper[k]);
    result.value += slice_value(z, k, t) + slice_value(w, k, t);
  }
  return result;
}

}  // namespace mpfem
