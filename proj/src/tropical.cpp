#include "mpfem/tropical.hpp"

#include <stdexcept>
#include <string>

namespace mpfem {

MaxPlusMatrix::MaxPlusMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), entries_(rows * cols, fill) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("MaxPlusMatrix: empty shape");
}

MaxPlusMatrix MaxPlusMatrix::identity(std::size_t n) {
  MaxPlusMatrix I(n, n, neg_inf);
  for (std::size_t i = 0; i < n; ++i) I(i, i) = 0.0;
  return I;
}

namespace {
void check_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want)
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(got) + " vs " + std::to_string(want) + ")");
}
}  // namespace

MaxPlusVector kernel_apply(const MaxPlusMatrix& A, const MaxPlusVector& u) {
  check_dim(u.size(), A.cols(), "kernel_apply");
  MaxPlusVector out(A.rows(), neg_inf);
  const double* row = A.entries().data();
  for (std::size_t j = 0; j < A.rows(); ++j, row += A.cols()) {
    double acc = neg_inf;
    for (std::size_t i = 0; i < A.cols(); ++i) acc = mp_add(acc, mp_mul(row[i], u[i]));
    out[j] = acc;
  }
  return out;
}

MaxPlusVector kernel_residuate(const MaxPlusMatrix& A, const MaxPlusVector& v) {
  check_dim(v.size(), A.rows(), "kernel_residuate");
  MaxPlusVector out(A.cols(), pos_inf);
  const double* row = A.entries().data();
  for (std::size_t j = 0; j < A.rows(); ++j, row += A.cols()) {
    const double vj = v[j];
    for (std::size_t i = 0; i < A.cols(); ++i) {
      const double q = mp_residuate(row[i], vj);
      if (q < out[i]) out[i] = q;
    }
  }
  return out;
}

MaxPlusMatrix mp_multiply(const MaxPlusMatrix& A, const MaxPlusMatrix& B) {
  check_dim(B.rows(), A.cols(), "mp_multiply");
  MaxPlusMatrix C(A.rows(), B.cols(), neg_inf);
  for (std::size_t i = 0; i < A.rows(); ++i) {
    for (std::size_t j = 0; j < A.cols(); ++j) {
      const double a = A(i, j);
      if (a == neg_inf) continue;
      for (std::size_t k = 0; k < B.cols(); ++k)
        C(i, k) = mp_add(C(i, k), mp_mul(a, B(j, k)));
    }
  }
  return C;
}

MaxPlusVector projector_image(const MaxPlusMatrix& B, const MaxPlusVector& x) {
  return kernel_apply(B, kernel_residuate(B, x));
}

MaxPlusVector projector_image_kernel(const MaxPlusMatrix& B, const MaxPlusMatrix& C,
                                     const MaxPlusVector& x) {
  const MaxPlusMatrix CB = mp_multiply(C, B);
  return kernel_apply(B, kernel_residuate(CB, kernel_apply(C, x)));
}

}  // namespace mpfem
