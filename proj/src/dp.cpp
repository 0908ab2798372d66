#include "mpfem/dp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mpfem {

namespace {

// Reusable multilinear interpolator: strides and per-axis scratch are
// computed once, the inner loop is allocation-free.
class Interpolator {
 public:
  explicit Interpolator(const RegularGrid& grid)
      : grid_(grid), n_(grid.dim()), stride_(n_), idx_(n_), frac_(n_) {
    std::size_t s = 1;
    for (std::size_t k = n_; k-- > 0;) {
      stride_[k] = s;
      s *= grid.axis_size(k);
    }
    // Corners are enumerated over non-degenerate axes only; including a
    // one-node axis in the mask would count every corner twice.
    for (std::size_t k = 0; k < n_; ++k) {
      if (grid.axis_size(k) > 1) active_.push_back(k);
    }
  }

  double operator()(std::span<const double> values, std::span<const double> x) {
    std::size_t base = 0;
    for (std::size_t k = 0; k < n_; ++k) {
      const auto& ax = grid_.axis_nodes(k);
      if (ax.size() == 1) {
        idx_[k] = 0;
        frac_[k] = 0.0;
        continue;
      }
      const double xi = std::clamp(x[k], ax.front(), ax.back());
      auto i = static_cast<std::size_t>(
          std::max(0.0, (xi - ax.front()) / grid_.step()));
      i = std::min(i, ax.size() - 2);
      while (i > 0 && xi < ax[i]) --i;
      while (i + 2 < ax.size() && xi >= ax[i + 1]) ++i;
      idx_[k] = i;
      frac_[k] = (xi - ax[i]) / (ax[i + 1] - ax[i]);
      base += i * stride_[k];
    }
    double acc = 0.0;
    const auto corners = std::size_t{1} << active_.size();
    for (std::size_t mask = 0; mask < corners; ++mask) {
      double weight = 1.0;
      std::size_t flat = base;
      for (std::size_t j = 0; j < active_.size(); ++j) {
        const std::size_t k = active_[j];
        if (mask >> j & 1) {
          weight *= frac_[k];
          flat += stride_[k];
        } else {
          weight *= 1.0 - frac_[k];
        }
      }
      if (weight != 0.0) acc += weight * values[flat];
    }
    return acc;
  }

 private:
  const RegularGrid& grid_;
  std::size_t n_;
  std::vector<std::size_t> stride_;
  std::vector<std::size_t> idx_;
  std::vector<double> frac_;
  std::vector<std::size_t> active_;
};

}  // namespace

double grid_interpolate(const RegularGrid& grid, std::span<const double> values,
                        std::span<const double> x) {
  if (values.size() != grid.node_count())
    throw std::invalid_argument("grid_interpolate: value array size mismatch");
  Interpolator interp(grid);
  return interp(values, x);
}

DpResult dp_solve(const ControlProblem& p, double horizon, const DpParams& params) {
  if (!(params.state_step > 0.0) || !(params.time_step > 0.0) || !(params.control_step > 0.0))
    throw std::invalid_argument("dp_solve: steps must be positive");
  if (!(horizon >= 0.0)) throw std::invalid_argument("dp_solve: horizon must be >= 0");

  const double steps_real = horizon / params.time_step;
  const auto steps = static_cast<std::size_t>(std::llround(steps_real));
  if (std::abs(static_cast<double>(steps) - steps_real) > 1e-9 * std::max(1.0, steps_real))
    throw std::invalid_argument("dp_solve: horizon must be an integer number of time steps");

  DpResult result;
  result.grid = RegularGrid(p.X, params.state_step);
  result.time_step = params.time_step;
  result.horizon = horizon;

  const std::size_t nodes = result.grid.node_count();
  const std::size_t n = p.n, m = p.m;

  RegularGrid ugrid(p.U, params.control_step);
  const std::size_t K = ugrid.node_count();
  std::vector<double> controls(K * m);
  {
    std::vector<double> u;
    for (std::size_t kc = 0; kc < K; ++kc) {
      ugrid.node_into(kc, u);
      std::copy(u.begin(), u.end(), controls.begin() + static_cast<std::ptrdiff_t>(kc * m));
    }
  }

  result.slices.assign(steps + 1, std::vector<double>(nodes));
  {
    std::vector<double> x;
    for (std::size_t i = 0; i < nodes; ++i) {
      result.grid.node_into(i, x);
      result.slices[0][i] = p.terminal(x);
    }
  }

  Interpolator interp(result.grid);
  const double dt = params.time_step;
  std::vector<double> x, f(n), adv(n);
  for (std::size_t s = 1; s <= steps; ++s) {
    const auto& prev = result.slices[s - 1];
    auto& cur = result.slices[s];
    for (std::size_t i = 0; i < nodes; ++i) {
      result.grid.node_into(i, x);
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t kc = 0; kc < K; ++kc) {
        const std::span<const double> u(controls.data() + kc * m, m);
        p.dynamics(x, u, f);
        for (std::size_t k = 0; k < n; ++k)
          adv[k] = std::clamp(x[k] + dt * f[k], p.X.lower[k], p.X.upper[k]);
        const double v = dt * p.lagrangian(x, u) + interp(prev, adv);
        best = std::max(best, v);
      }
      cur[i] = best;
    }
  }
  return result;
}

double DpResult::value(std::span<const double> x, double t) const {
  const double s_real = t / time_step;
  const auto s = static_cast<std::size_t>(std::llround(s_real));
  if (s >= slices.size() || std::abs(static_cast<double>(s) - s_real) > 1e-6 * (1.0 + std::abs(s_real)))
    throw std::invalid_argument("DpResult::value: t does not sit on a stored slice");
  return grid_interpolate(grid, slices[s], x);
}

}  // namespace mpfem
