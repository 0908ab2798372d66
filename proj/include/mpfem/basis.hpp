#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mpfem/geometry.hpp"

namespace mpfem {

enum class BasisKind { Quadratic, Lipschitz };

// A single finite element.  Quadratic elements are the concave paraboloids
//   w(x) = -|x - center|_2^2 / (2c)        (shape = c, Hessian 1/c)
// and Lipschitz elements the l1 cones
//   w(x) = -A |x - center|_1               (shape = A).
// Both vanish at their center and are <= 0 elsewhere.
struct BasisFunction {
  BasisKind kind = BasisKind::Quadratic;
  std::vector<double> center;
  double shape = 1.0;

  double evaluate(std::span<const double> x) const;

  /// Gradient at x; at a Lipschitz kink the zero element of the
  /// subdifferential interval is chosen per coordinate.
  void gradient(std::span<const double> x, std::span<double> out) const;
};

/// Ordered family of same-kind, same-shape elements centered at the nodes
/// of a regular grid.
struct BasisFamily {
  std::vector<BasisFunction> functions;
  RegularGrid grid;

  std::size_t size() const { return functions.size(); }
  std::size_t dim() const { return grid.dim(); }
};

BasisFamily make_family(const RegularGrid& grid, BasisKind kind, double shape);

/// The method's element pair: quadratic primal elements of Hessian 1/c on
/// a grid over X enlarged by c*L in every coordinate, and Lipschitz test
/// elements of constant A on a grid over X.  Requires A >= L.
struct FamilyPair {
  BasisFamily primal;
  BasisFamily test;
};
FamilyPair build_families(const Box& X, double dx, double c, double A, double L);

struct ScalarProduct {
  double value = 0.0;
  bool closed_form = true;  // false when the numeric fallback produced it
};

// Max-plus scalar product <z,w> = sup_{x in X} z(x) + w(x).  Closed forms
// cover the (Quadratic,Quadratic) and (Lipschitz,Quadratic) pairs, where
// the maximization separates per coordinate; any other pair falls back to
// numeric concave maximization.
ScalarProduct scalar_product(const BasisFunction& z, const BasisFunction& w, const Box& X);

}  // namespace mpfem
