#include "mpfem/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mpfem {

Box::Box(std::vector<double> lo, std::vector<double> hi)
    : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size() || lower.empty())
    throw std::invalid_argument("Box: lower/upper size mismatch");
  // degenerate (point) axes are allowed; faces and frozen controls use them
  for (std::size_t k = 0; k < lower.size(); ++k)
    if (!(lower[k] <= upper[k])) throw std::invalid_argument("Box: lower must be <= upper");
}

Box Box::cube(std::size_t n, double lo, double hi) {
  return Box(std::vector<double>(n, lo), std::vector<double>(n, hi));
}

bool Box::contains(const std::vector<double>& x, double tol) const {
  for (std::size_t k = 0; k < dim(); ++k)
    if (x[k] < lower[k] - tol || x[k] > upper[k] + tol) return false;
  return true;
}

std::vector<double> Box::center() const {
  std::vector<double> c(dim());
  for (std::size_t k = 0; k < dim(); ++k) c[k] = 0.5 * (lower[k] + upper[k]);
  return c;
}

std::vector<double> Box::clamp(std::vector<double> x) const {
  for (std::size_t k = 0; k < dim(); ++k) x[k] = std::clamp(x[k], lower[k], upper[k]);
  return x;
}

Box Box::expanded(double margin) const {
  Box out = *this;
  for (std::size_t k = 0; k < dim(); ++k) {
    out.lower[k] -= margin;
    out.upper[k] += margin;
  }
  return out;
}

Box Box::product(const Box& a, const Box& b) {
  Box out = a;
  out.lower.insert(out.lower.end(), b.lower.begin(), b.lower.end());
  out.upper.insert(out.upper.end(), b.upper.begin(), b.upper.end());
  return out;
}

double Box::distance2(const std::vector<double>& x) const {
  double d2 = 0.0;
  for (std::size_t k = 0; k < dim(); ++k) {
    const double d = std::max({lower[k] - x[k], 0.0, x[k] - upper[k]});
    d2 += d * d;
  }
  return std::sqrt(d2);
}

double Box::distance1(const std::vector<double>& x) const {
  double d1 = 0.0;
  for (std::size_t k = 0; k < dim(); ++k)
    d1 += std::max({lower[k] - x[k], 0.0, x[k] - upper[k]});
  return d1;
}

RegularGrid::RegularGrid(Box box, double step) : box_(std::move(box)), step_(step) {
  if (!(step > 0.0)) throw std::invalid_argument("RegularGrid: step must be > 0");
  axes_.resize(box_.dim());
  total_ = 1;
  for (std::size_t k = 0; k < box_.dim(); ++k) {
    const double lo = box_.lower[k], hi = box_.upper[k];
    const double span = hi - lo;
    auto& ax = axes_[k];
    if (span == 0.0) {
      ax.push_back(lo);  // degenerate axis: a single node
    } else {
      if (step > span * (1.0 + 1e-9))
        throw std::invalid_argument("RegularGrid: step larger than box span");
      const auto m = static_cast<std::size_t>(std::floor(span / step + 1e-9));
      ax.reserve(m + 2);
      for (std::size_t i = 0; i < m; ++i) ax.push_back(lo + static_cast<double>(i) * step);
      // snap the last regular node onto the corner when the step divides the
      // span; otherwise keep it and append the corner as a shortened step
      if (std::abs(lo + static_cast<double>(m) * step - hi) > 1e-9 * std::max(1.0, span))
        ax.push_back(lo + static_cast<double>(m) * step);
      ax.push_back(hi);
    }
    total_ *= ax.size();
  }
}

std::vector<double> RegularGrid::node(std::size_t flat) const {
  std::vector<double> out(dim());
  node_into(flat, out);
  return out;
}

void RegularGrid::node_into(std::size_t flat, std::vector<double>& out) const {
  out.resize(dim());
  for (std::size_t k = dim(); k-- > 0;) {
    const std::size_t s = axes_[k].size();
    out[k] = axes_[k][flat % s];
    flat /= s;
  }
}

std::vector<std::size_t> RegularGrid::multi_index(std::size_t flat) const {
  std::vector<std::size_t> idx(dim());
  for (std::size_t k = dim(); k-- > 0;) {
    const std::size_t s = axes_[k].size();
    idx[k] = flat % s;
    flat /= s;
  }
  return idx;
}

}  // namespace mpfem
