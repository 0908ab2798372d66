#pragma once

#include <cstddef>
#include <limits>
#include <vector>

namespace mpfem {

// Scalars of the completed max-plus semiring: reals extended by both
// infinities, with oplus = max and otimes = +.  IEEE doubles encode the
// extended values directly; the mixed-infinity cases that IEEE leaves as
// NaN are fixed by explicit rules below.
inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();
inline constexpr double pos_inf = std::numeric_limits<double>::infinity();

/// Max-plus sum: max(a, b).  -inf is the neutral element.
inline double mp_add(double a, double b) { return a < b ? b : a; }

/// Max-plus product: a + b, with -inf absorbing even against +inf.
inline double mp_mul(double a, double b) {
  if (a == neg_inf || b == neg_inf) return neg_inf;
  return a + b;
}

// Residuation a\b = max{ lambda : a + lambda <= b }.  Total on the
// extended reals:
//   a = -inf or b = +inf  ->  +inf   (every lambda is feasible)
//   a = +inf, b < +inf    ->  -inf   (only lambda = -inf survives)
//   otherwise             ->  b - a  (finite a; b - a is -inf when b is)
// This is the min-plus dual convention in which +inf absorbs addition.
inline double mp_residuate(double a, double b) {
  if (a == neg_inf || b == pos_inf) return pos_inf;
  if (a == pos_inf) return neg_inf;
  return b - a;
}

using MaxPlusVector = std::vector<double>;

/// Dense row-major kernel over the completed max-plus semiring.
class MaxPlusMatrix {
 public:
  MaxPlusMatrix() = default;
  MaxPlusMatrix(std::size_t rows, std::size_t cols, double fill = neg_inf);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return entries_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }

  const std::vector<double>& entries() const { return entries_; }
  std::vector<double>& entries() { return entries_; }

  /// Max-plus identity kernel: 0 on the diagonal, -inf elsewhere.
  static MaxPlusMatrix identity(std::size_t n);

  bool operator==(const MaxPlusMatrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> entries_;
};

/// (Au)_j = max_i (A_ji + u_i), the action of the kernel operator.
MaxPlusVector kernel_apply(const MaxPlusMatrix& A, const MaxPlusVector& u);

/// Residuated action (A\v)_i = min_j (-A_ji + v_j) under the min-plus
/// conventions of mp_residuate.  Adjoint of kernel_apply: Au <= v holds
/// componentwise iff u <= A\v.
MaxPlusVector kernel_residuate(const MaxPlusMatrix& A, const MaxPlusVector& v);

/// Max-plus matrix product (AB)_ik = max_j (A_ij + B_jk).
MaxPlusMatrix mp_multiply(const MaxPlusMatrix& A, const MaxPlusMatrix& B);

/// Canonical projector onto im B: x -> B(B\x).  Result <= x, idempotent.
MaxPlusVector projector_image(const MaxPlusMatrix& B, const MaxPlusVector& x);

/// Projection onto im B parallel to ker C: x -> B((CB)\(Cx)), the largest
/// y in im B with Cy <= Cx.
MaxPlusVector projector_image_kernel(const MaxPlusMatrix& B, const MaxPlusMatrix& C,
                                     const MaxPlusVector& x);

}  // namespace mpfem
