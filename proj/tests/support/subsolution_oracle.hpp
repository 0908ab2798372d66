#pragma once

#include "mpfem/tropical.hpp"

// Independent oracle for the largest mu with M mu <= w (componentwise).
// The constraints M_kj + mu_j <= w_k decouple per coordinate, so each
// coordinate scans the dyadic lattice {-bound, ..., bound} step 1/8 from
// above and keeps the first feasible value.  Exact whenever the true
// maximizer is a lattice point, which holds for dyadic inputs within the
// bound.  Deliberately avoids the residuation formula.
namespace testsupport {

inline mpfem::MaxPlusVector max_subsolution_lattice(const mpfem::MaxPlusMatrix& M,
                                                    const mpfem::MaxPlusVector& w,
                                                    double bound = 24.0) {
  const std::size_t rows = M.rows();
  const std::size_t cols = M.cols();
  mpfem::MaxPlusVector mu(cols);

  const auto satisfied = [&](std::size_t k, std::size_t j, double v) {
    if (M(k, j) == mpfem::neg_inf) return true;   // no arc: vacuous
    if (w[k] == mpfem::pos_inf) return true;      // unbounded row
    if (w[k] == mpfem::neg_inf) return false;     // finite arc into -inf
    return M(k, j) + v <= w[k];
  };

  for (std::size_t j = 0; j < cols; ++j) {
    bool unconstrained = true;
    for (std::size_t k = 0; k < rows; ++k) {
      if (M(k, j) != mpfem::neg_inf && w[k] != mpfem::pos_inf) {
        unconstrained = false;
        break;
      }
    }
    if (unconstrained) {
      mu[j] = mpfem::pos_inf;
      continue;
    }
    mu[j] = mpfem::neg_inf;
    const auto steps = static_cast<long>(bound * 8.0);
    for (long s = steps; s >= -steps; --s) {
      const double v = static_cast<double>(s) / 8.0;
      bool ok = true;
      for (std::size_t k = 0; k < rows && ok; ++k) ok = satisfied(k, j, v);
      if (ok) {
        mu[j] = v;
        break;
      }
    }
  }
  return mu;
}

}  // namespace testsupport
