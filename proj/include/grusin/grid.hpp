#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace grusin {

/// One axis of a cell-centered tensor grid on [-L, L], symmetric about 0.
///
/// The cell count is even, so x = 0 is always a face and never a cell center.
class Axis {
 public:
  /// N equal cells of width 2L/N.
  static Axis uniform(double half_width, int cells);
  /// N cells whose widths grow geometrically away from 0, the innermost width
  /// being `min_width`. Used where the problem is scale invariant around the
  /// degeneracy (Hardy pencils, small-time kernels).
  static Axis graded(double half_width, int cells, double min_width);

  int size() const { return static_cast<int>(faces_.size()) - 1; }
  double half_width() const { return faces_.back(); }
  double face(int i) const { return faces_[static_cast<std::size_t>(i)]; }
  double center(int i) const { return 0.5 * (face(i) + face(i + 1)); }
  double width(int i) const { return face(i + 1) - face(i); }
  bool is_uniform() const { return uniform_; }
  /// Index of the first cell with positive center (= size()/2).
  int origin_face() const { return size() / 2; }
  /// Cell whose interval contains x (clamped to the axis).
  int locate(double x) const;

 private:
  explicit Axis(std::vector<double> faces, bool uniform);
  std::vector<double> faces_;
  bool uniform_;
};

/// Tensor grid over R^n x R^m; the first n axes carry x1, the remaining m carry x2.
class Grid {
 public:
  Grid(int n, std::vector<Axis> axes);

  /// Same uniform axis (half width L, N cells) in every direction.
  static Grid uniform(int n, int m, double half_width, int cells);
  static Grid uniform(int n, int m, std::span<const double> half_widths,
                      std::span<const int> cells);

  int n() const { return n_; }
  int m() const { return dim() - n_; }
  int dim() const { return static_cast<int>(axes_.size()); }
  const Axis& axis(int k) const { return axes_[static_cast<std::size_t>(k)]; }
  std::size_t size() const { return size_; }

  std::size_t index(std::span<const int> multi) const;
  void multi_index(std::size_t idx, std::span<int> out) const;
  std::size_t stride(int k) const { return strides_[static_cast<std::size_t>(k)]; }
  int coord(std::size_t idx, int k) const;

  double center(std::size_t idx, int k) const;
  void center(std::size_t idx, std::span<double> out) const;
  std::vector<double> center(std::size_t idx) const;
  /// |x1| at the center of the cell.
  double x1_norm(std::size_t idx) const;
  double volume(std::size_t idx) const;
  Eigen::VectorXd volumes() const;
  double total_volume() const;

  /// Cell containing the point (clamped to the box).
  std::size_t locate(std::span<const double> point) const;
  /// True when the cell lies within `layers` cells of the box boundary.
  bool near_boundary(std::size_t idx, int layers) const;
  /// Cells whose centers lie in the closed box [lo, hi] (one bound per axis).
  std::vector<std::size_t> cells_in_box(std::span<const double> lo, std::span<const double> hi) const;

 private:
  int n_;
  std::vector<Axis> axes_;
  std::vector<std::size_t> strides_;
  std::size_t size_;
};

}  // namespace grusin
