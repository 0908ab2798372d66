#include "mpfem/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mpfem {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// One projected-gradient ascent run; scratch buffers are reused across
// starts of the same objective.
class Ascent {
 public:
  Ascent(const ObjectiveSpec& obj, const OptimizerOptions& opt)
      : obj_(obj), opt_(opt), n_(obj.dim) {
    grad_.resize(n_);
    prev_y_.resize(n_);
    prev_grad_.resize(n_);
    dir_.resize(n_);
    trial_.resize(n_);
    trial_grad_.resize(n_);
    fd_.resize(n_);
  }

  // Ascends from y (clamped into the box in place).  Returns false and
  // fills `failure` when the objective or its gradient turns non-finite at
  // an iterate, which abandons this start.
  bool run(std::vector<double>& y, double& value, std::size_t& iterations,
           bool& converged, std::string& failure) {
    y = obj_.box.clamp(std::move(y));
    value = obj_.value(y);
    if (!std::isfinite(value)) {
      failure = "objective is " + std::to_string(value) + " at a start point";
      return false;
    }
    if (!evaluate_gradient(y, grad_)) {
      failure = "gradient is non-finite at a start point";
      return false;
    }

    double alpha = 1.0;
    converged = false;
    for (int it = 0; it < opt_.max_iterations; ++it) {
      ++iterations;
      if (projected_gradient_norm(y, grad_) <=
          opt_.tolerance * (1.0 + std::abs(value))) {
        converged = true;
        return true;
      }

      prev_y_ = y;
      prev_grad_ = grad_;
      alpha = std::min(alpha * 2.0, 1e12);

      dir_ = grad_;
      double trial_value = 0.0;
      if (!line_search(y, value, alpha, trial_value)) {
        // The failed trial straddles a kink of a piecewise-concave
        // objective.  The l1-type kinks arising here are axis-aligned, so
        // the two one-sided slopes classify each coordinate: when they
        // straddle zero the supergradient interval contains 0 and the kink
        // pins that coordinate; otherwise their mean is the tangential
        // slope.  A unit-step retry along the pinned direction restores
        // ascent along the kink itself.
        if (!evaluate_gradient(trial_, trial_grad_)) {
          converged = true;
          return true;
        }
        for (std::size_t k = 0; k < n_; ++k) {
          const bool pinned = (grad_[k] > 0.0 && trial_grad_[k] < 0.0) ||
                              (grad_[k] < 0.0 && trial_grad_[k] > 0.0);
          dir_[k] = pinned ? 0.0 : 0.5 * (grad_[k] + trial_grad_[k]);
        }
        double kink_alpha = 1.0;
        if (!line_search(y, value, kink_alpha, trial_value)) {
          converged = true;  // no ascent direction left at this resolution
          return true;
        }
      }
      value = trial_value;
      if (!std::isfinite(value)) {
        failure = "objective is non-finite at iterate " + std::to_string(it);
        return false;
      }
      if (!evaluate_gradient(y, grad_)) {
        failure = "gradient is non-finite at iterate " + std::to_string(it);
        return false;
      }

      double moved = 0.0;
      double ss = 0.0;
      double sg = 0.0;
      for (std::size_t k = 0; k < n_; ++k) {
        const double s = y[k] - prev_y_[k];
        moved = std::max(moved, std::abs(s));
        ss += s * s;
        sg += s * (grad_[k] - prev_grad_[k]);
      }
      if (moved <= 1e-15 * (1.0 + inf_norm(y))) {
        converged = true;
        return true;
      }
      // Barzilai-Borwein step; for a concave objective sg <= 0 along the
      // secant, otherwise keep the doubled step.
      if (sg < 0.0) alpha = std::clamp(-ss / sg, 1e-12, 1e12);
    }
    return true;  // iteration cap, converged stays false
  }

 private:
  // Gradient with active box faces projected out; its norm is the
  // first-order stationarity measure on the box.
  double projected_gradient_norm(const std::vector<double>& y,
                                 const std::vector<double>& g) const {
    double m = 0.0;
    for (std::size_t k = 0; k < n_; ++k) {
      double gk = g[k];
      if (y[k] <= obj_.box.lower[k] && gk < 0.0) gk = 0.0;
      if (y[k] >= obj_.box.upper[k] && gk > 0.0) gk = 0.0;
      m = std::max(m, std::abs(gk));
    }
    return m;
  }

  bool evaluate_gradient(const std::vector<double>& y, std::vector<double>& g) {
    if (obj_.gradient) {
      obj_.gradient(y, g);
      return all_finite(g);
    }
    const double h = 1e-6 * (1.0 + inf_norm(y));
    fd_ = y;
    for (std::size_t k = 0; k < n_; ++k) {
      fd_[k] = y[k] + h;
      const double up = obj_.value(fd_);
      fd_[k] = y[k] - h;
      const double down = obj_.value(fd_);
      fd_[k] = y[k];
      g[k] = (up - down) / (2.0 * h);
    }
    return all_finite(g);
  }

  // Backtracking Armijo search along dir_ from y.  On success y holds the
  // accepted point and alpha the accepted step.  On failure trial_ holds
  // the last (smallest) rejected trial, which the caller probes for a kink.
  bool line_search(std::vector<double>& y, double value, double& alpha,
                   double& trial_value) {
    for (int h = 0; h < 48; ++h) {
      double dot = 0.0;
      double moved = 0.0;
      for (std::size_t k = 0; k < n_; ++k) {
        trial_[k] = std::clamp(y[k] + alpha * dir_[k], obj_.box.lower[k],
                               obj_.box.upper[k]);
        dot += dir_[k] * (trial_[k] - y[k]);
        moved = std::max(moved, std::abs(trial_[k] - y[k]));
      }
      if (moved == 0.0) return false;
      const double tv = obj_.value(trial_);
      if (std::isfinite(tv) && tv >= value + opt_.armijo_slope * dot) {
        y.swap(trial_);
        trial_value = tv;
        return true;
      }
      alpha *= opt_.backtrack;
    }
    return false;
  }

  const ObjectiveSpec& obj_;
  const OptimizerOptions& opt_;
  std::size_t n_;
  std::vector<double> grad_, prev_y_, prev_grad_, dir_, trial_, trial_grad_, fd_;
};

std::vector<std::vector<double>> start_lattice(const Box& box, int per_axis) {
  const std::size_t n = box.dim();
  std::vector<std::vector<double>> starts;
  const std::vector<double> center = box.center();
  if (per_axis <= 1) {
    starts.push_back(center);
    return starts;
  }
  std::vector<std::vector<double>> axis_values(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double lo = box.lower[k];
    const double hi = box.upper[k];
    if (hi == lo) {
      axis_values[k] = {lo};
      continue;
    }
    for (int i = 0; i < per_axis; ++i) {
      axis_values[k].push_back(lo + (hi - lo) * static_cast<double>(i) /
                                        static_cast<double>(per_axis - 1));
    }
  }
  std::vector<std::size_t> idx(n, 0);
  while (true) {
    std::vector<double> point(n);
    for (std::size_t k = 0; k < n; ++k) point[k] = axis_values[k][idx[k]];
    starts.push_back(std::move(point));
    std::size_t k = n;
    while (k > 0) {
      --k;
      if (++idx[k] < axis_values[k].size()) break;
      idx[k] = 0;
      if (k == 0) {
        if (std::find(starts.begin(), starts.end(), center) == starts.end()) {
          starts.push_back(center);
        }
        return starts;
      }
    }
  }
}

void validate_objective(const ObjectiveSpec& obj) {
  if (obj.dim == 0) throw std::invalid_argument("objective dimension must be positive");
  if (obj.box.dim() != obj.dim) {
    throw std::invalid_argument("objective box dimension " +
                                std::to_string(obj.box.dim()) +
                                " does not match objective dimension " +
                                std::to_string(obj.dim));
  }
  if (!obj.value) throw std::invalid_argument("objective has no value callback");
}

}  // namespace

OptimizerResult maximize_concave_box(const ObjectiveSpec& objective,
                                     const OptimizerOptions& options,
                                     std::span<const std::vector<double>> extra_starts) {
  validate_objective(objective);

  std::vector<std::vector<double>> starts;
  starts.reserve(extra_starts.size() + 8);
  for (const auto& s : extra_starts) {
    if (s.size() != objective.dim) {
      throw std::invalid_argument("extra start has dimension " +
                                  std::to_string(s.size()) + ", expected " +
                                  std::to_string(objective.dim));
    }
    starts.push_back(s);
  }
  auto lattice = start_lattice(objective.box, options.starts_per_axis);
  starts.insert(starts.end(), std::make_move_iterator(lattice.begin()),
                std::make_move_iterator(lattice.end()));

  Ascent ascent(objective, options);
  OptimizerResult result;
  result.value = -kInf;
  double lo_final = kInf;
  double hi_final = -kInf;
  bool all_converged = true;
  std::string last_failure;

  for (auto& start : starts) {
    double value = 0.0;
    bool converged = false;
    if (!ascent.run(start, value, result.iterations, converged, last_failure)) {
      continue;  // start aborted on a non-finite iterate
    }
    ++result.starts;
    all_converged = all_converged && converged;
    lo_final = std::min(lo_final, value);
    hi_final = std::max(hi_final, value);
    if (value > result.value || result.argmax.empty()) {
      result.value = value;
      result.argmax = start;
    }
  }

  if (result.starts == 0) {
    throw std::runtime_error("concave maximization failed: all " +
                             std::to_string(starts.size()) +
                             " starts aborted (" + last_failure + ")");
  }
  result.multistart_spread = hi_final - lo_final;
  result.converged = all_converged;
  return result;
}

OptimizerResult maximize_on_grid(const ObjectiveSpec& objective, double step) {
  validate_objective(objective);
  if (!(step > 0.0)) throw std::invalid_argument("grid step must be positive");

  const RegularGrid grid(objective.box, step);
  OptimizerResult result;
  result.value = -kInf;
  std::vector<double> node(objective.dim);
  for (std::size_t i = 0; i < grid.node_count(); ++i) {
    grid.node_into(i, node);
    const double v = objective.value(node);
    if (std::isnan(v)) {
      throw std::runtime_error("grid search hit NaN at node " + std::to_string(i));
    }
    if (v > result.value || result.argmax.empty()) {
      result.value = v;
      result.argmax = node;
    }
  }
  result.iterations = grid.node_count();
  result.starts = grid.node_count();
  result.converged = true;
  return result;
}

}  // namespace mpfem
