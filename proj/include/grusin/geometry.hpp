#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "grusin/grid.hpp"
#include "grusin/operator.hpp"
#include "grusin/params.hpp"

namespace grusin {

struct Point {
  std::vector<double> x1;
  std::vector<double> x2;

  /// Splits a full coordinate vector (x1 first) at n.
  static Point split(std::span<const double> x, int n);
};

/// Explicit quasi-distance D_delta: |x1-y1|/(|x1|+|y1|)^{(d1,d1')} + Delta_delta.
double delta_distance(const GrusinParams& p, const Point& a, const Point& b);

enum class VolumeRegime { small_r, large_r };

/// small_r iff r < |x1|^{(1-d1, 1-d1')}.
VolumeRegime volume_regime(const GrusinParams& p, const Point& x, double r);
/// r^{(D,D')} in the large-r regime, r^{n+m} |x1|^{(beta,beta')} in the small-r regime.
double volume_formula(const GrusinParams& p, const Point& x, double r);

struct BallEstimate {
  Point center;
  double radius = 0.0;
  double volume_formula = 0.0;
  double volume_numeric = 0.0;  ///< 0 when not computed
  bool truncated = false;
  VolumeRegime regime = VolumeRegime::large_r;
};

/// Shortest paths on the grid with edge length sqrt(sum_k dx_k^2 / c_k), where c_k is the
/// arithmetic mean of the endpoint values of the block coefficient for axis k.
/// The stencil joins every cell to all 3^d - 1 neighbours (axis and diagonal).
///
/// Immutable after construction; queries may run concurrently.
class DistanceOracle {
 public:
  DistanceOracle(Grid grid, const CoefficientFunction& c);
  DistanceOracle(Grid grid, const CoefficientField& c);

  const Grid& grid() const { return grid_; }

  /// Multi-source Dijkstra. Cells farther than `cutoff` are left at +infinity.
  std::vector<double> distances_from(std::span<const std::size_t> sources,
                                     double cutoff = std::numeric_limits<double>::infinity()) const;
  std::vector<double> distances_from(std::size_t source,
                                     double cutoff = std::numeric_limits<double>::infinity()) const;
  double graph_distance(std::size_t a, std::size_t b) const;
  /// min over a in A, b in B of the graph distance.
  double set_distance(std::span<const std::size_t> A, std::span<const std::size_t> B) const;

  /// Sum of cell volumes with graph distance < r from x; flags balls touching the box boundary.
  BallEstimate ball_volume_numeric(std::size_t x, double r) const;

 private:
  Grid grid_;
  std::vector<double> c1_;  // x1-block coefficient per cell
  std::vector<double> c2_;  // x2-block coefficient per cell (empty when m = 0)
  std::vector<std::vector<int>> offsets_;
};

struct DoublingSample {
  Point x;
  double r = 1.0;
  double s = 2.0;
};

struct DoublingRow {
  double ratio = 0.0;     ///< V(x, s r) / V(x, r)
  double constant = 0.0;  ///< ratio / s^{D v D'}
  double exponent = 0.0;  ///< log(ratio) / log(s), NaN for s = 1
};

struct DoublingReport {
  std::vector<DoublingRow> rows;
  double doubling_dimension = 0.0;
  double max_constant = 0.0;
  double max_exponent = 0.0;
};

/// Evaluates the doubling ratios of volume_formula. Requires s >= 1 for every sample.
DoublingReport doubling_report(const GrusinParams& p, std::span<const DoublingSample> samples);

}  // namespace grusin
