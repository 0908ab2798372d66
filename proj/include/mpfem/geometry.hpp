#pragma once

#include <cstddef>
#include <vector>

namespace mpfem {

/// Axis-aligned box [lower_1,upper_1] x ... x [lower_n,upper_n].
struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  Box() = default;
  Box(std::vector<double> lo, std::vector<double> hi);

  /// Cube [lo, hi]^n.
  static Box cube(std::size_t n, double lo, double hi);

  std::size_t dim() const { return lower.size(); }
  bool contains(const std::vector<double>& x, double tol = 0.0) const;
  std::vector<double> center() const;
  std::vector<double> clamp(std::vector<double> x) const;

  /// Box enlarged by margin in every coordinate (sup-norm ball sum).
  Box expanded(double margin) const;

  /// Product box X x U for joint state-control variables.
  static Box product(const Box& a, const Box& b);

  /// Euclidean distance from x to the box (0 if inside).
  double distance2(const std::vector<double>& x) const;
  /// l1 distance from x to the box.
  double distance1(const std::vector<double>& x) const;
};

// Regular grid of step `step` anchored at the box lower corner.  When the
// span is not an integer multiple of the step, the last step is shortened
// so the upper corner is still a node.
class RegularGrid {
 public:
  RegularGrid() = default;
  RegularGrid(Box box, double step);

  const Box& box() const { return box_; }
  double step() const { return step_; }
  std::size_t dim() const { return box_.dim(); }

  std::size_t axis_size(std::size_t k) const { return axes_[k].size(); }
  const std::vector<double>& axis_nodes(std::size_t k) const { return axes_[k]; }

  std::size_t node_count() const { return total_; }

  /// Node coordinates for a flat index; axis 0 varies slowest
  /// (lexicographic order of the index tuple).
  std::vector<double> node(std::size_t flat) const;
  void node_into(std::size_t flat, std::vector<double>& out) const;

  std::vector<std::size_t> multi_index(std::size_t flat) const;

 private:
  Box box_;
  double step_ = 0.0;
  std::vector<std::vector<double>> axes_;
  std::size_t total_ = 0;
};

}  // namespace mpfem
