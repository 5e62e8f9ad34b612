#include "grusin/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace grusin {

Axis::Axis(std::vector<double> faces, bool uniform) : faces_(std::move(faces)), uniform_(uniform) {}

Axis Axis::uniform(double half_width, int cells) {
  if (cells < 2 || cells % 2 != 0) throw std::invalid_argument("Axis: cell count must be even and >= 2");
  if (!(half_width > 0.0)) throw std::invalid_argument("Axis: half width must be positive");
  std::vector<double> f(static_cast<std::size_t>(cells) + 1);
  const double h = 2.0 * half_width / cells;
  for (int i = 0; i <= cells; ++i) f[static_cast<std::size_t>(i)] = i * h - half_width;
  f[static_cast<std::size_t>(cells / 2)] = 0.0;
  f.back() = half_width;
  return Axis(std::move(f), true);
}

Axis Axis::graded(double half_width, int cells, double min_width) {
  if (cells < 2 || cells % 2 != 0) throw std::invalid_argument("Axis: cell count must be even and >= 2");
  const int half = cells / 2;
  if (!(min_width > 0.0) || min_width * half > half_width) {
    throw std::invalid_argument("Axis::graded: need 0 < min_width <= L/(N/2)");
  }
  // growth ratio q solving min_width * (q^half - 1)/(q - 1) = L
  auto total = [&](double q) {
    return q == 1.0 ? min_width * half : min_width * std::expm1(half * std::log(q)) / (q - 1.0);
  };
  double lo = 1.0, hi = 2.0;
  while (total(hi) < half_width) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (total(mid) < half_width ? lo : hi) = mid;
  }
  const double q = 0.5 * (lo + hi);
  std::vector<double> pos(static_cast<std::size_t>(half) + 1, 0.0);
  double w = min_width;
  for (int k = 1; k <= half; ++k) {
    pos[static_cast<std::size_t>(k)] = pos[static_cast<std::size_t>(k - 1)] + w;
    w *= q;
  }
  pos.back() = half_width;
  std::vector<double> f(static_cast<std::size_t>(cells) + 1);
  for (int k = 0; k <= half; ++k) {
    f[static_cast<std::size_t>(half + k)] = pos[static_cast<std::size_t>(k)];
    f[static_cast<std::size_t>(half - k)] = -pos[static_cast<std::size_t>(k)];
  }
  return Axis(std::move(f), false);
}

int Axis::locate(double x) const {
  auto it = std::upper_bound(faces_.begin(), faces_.end(), x);
  int i = static_cast<int>(it - faces_.begin()) - 1;
  return std::clamp(i, 0, size() - 1);
}

Grid::Grid(int n, std::vector<Axis> axes) : n_(n), axes_(std::move(axes)) {
  if (n_ < 1 || n_ > dim()) throw std::invalid_argument("Grid: need 1 <= n <= number of axes");
  strides_.assign(axes_.size(), 1);
  size_ = 1;
  for (int k = dim() - 1; k >= 0; --k) {
    strides_[static_cast<std::size_t>(k)] = size_;
    size_ *= static_cast<std::size_t>(axes_[static_cast<std::size_t>(k)].size());
  }
}

Grid Grid::uniform(int n, int m, double half_width, int cells) {
  std::vector<Axis> axes(static_cast<std::size_t>(n + m), Axis::uniform(half_width, cells));
  return Grid(n, std::move(axes));
}

Grid Grid::uniform(int n, int m, std::span<const double> half_widths, std::span<const int> cells) {
  if (half_widths.size() != static_cast<std::size_t>(n + m) || cells.size() != half_widths.size()) {
    throw std::invalid_argument("Grid::uniform: need one half width and cell count per axis");
  }
  std::vector<Axis> axes;
  for (std::size_t k = 0; k < half_widths.size(); ++k) axes.push_back(Axis::uniform(half_widths[k], cells[k]));
  return Grid(n, std::move(axes));
}

std::size_t Grid::index(std::span<const int> multi) const {
  std::size_t idx = 0;
  for (int k = 0; k < dim(); ++k) idx += strides_[static_cast<std::size_t>(k)] * static_cast<std::size_t>(multi[static_cast<std::size_t>(k)]);
  return idx;
}

void Grid::multi_index(std::size_t idx, std::span<int> out) const {
  for (int k = 0; k < dim(); ++k) {
    out[static_cast<std::size_t>(k)] = static_cast<int>(idx / strides_[static_cast<std::size_t>(k)]);
    idx %= strides_[static_cast<std::size_t>(k)];
  }
}

int Grid::coord(std::size_t idx, int k) const {
  return static_cast<int>((idx / strides_[static_cast<std::size_t>(k)]) %
                          static_cast<std::size_t>(axis(k).size()));
}

double Grid::center(std::size_t idx, int k) const { return axis(k).center(coord(idx, k)); }

void Grid::center(std::size_t idx, std::span<double> out) const {
  for (int k = 0; k < dim(); ++k) out[static_cast<std::size_t>(k)] = center(idx, k);
}

std::vector<double> Grid::center(std::size_t idx) const {
  std::vector<double> x(static_cast<std::size_t>(dim()));
  center(idx, x);
  return x;
}

double Grid::x1_norm(std::size_t idx) const {
  double r2 = 0.0;
  for (int k = 0; k < n_; ++k) {
    const double c = center(idx, k);
    r2 += c * c;
  }
  return std::sqrt(r2);
}

double Grid::volume(std::size_t idx) const {
  double v = 1.0;
  for (int k = 0; k < dim(); ++k) v *= axis(k).width(coord(idx, k));
  return v;
}

Eigen::VectorXd Grid::volumes() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(size_));
  for (std::size_t i = 0; i < size_; ++i) v[static_cast<Eigen::Index>(i)] = volume(i);
  return v;
}

double Grid::total_volume() const {
  double v = 1.0;
  for (const auto& a : axes_) v *= 2.0 * a.half_width();
  return v;
}

std::size_t Grid::locate(std::span<const double> point) const {
  std::size_t idx = 0;
  for (int k = 0; k < dim(); ++k) {
    idx += strides_[static_cast<std::size_t>(k)] *
           static_cast<std::size_t>(axis(k).locate(point[static_cast<std::size_t>(k)]));
  }
  return idx;
}

bool Grid::near_boundary(std::size_t idx, int layers) const {
  for (int k = 0; k < dim(); ++k) {
    const int c = coord(idx, k);
    if (c < layers || c >= axis(k).size() - layers) return true;
  }
  return false;
}

std::vector<std::size_t> Grid::cells_in_box(std::span<const double> lo, std::span<const double> hi) const {
  if (lo.size() != static_cast<std::size_t>(dim()) || hi.size() != lo.size()) {
    throw std::invalid_argument("cells_in_box: need one bound per axis");
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < size_; ++i) {
    bool inside = true;
    for (int k = 0; k < dim() && inside; ++k) {
      const double x = center(i, k);
      inside = x >= lo[static_cast<std::size_t>(k)] && x <= hi[static_cast<std::size_t>(k)];
    }
    if (inside) out.push_back(i);
  }
  return out;
}

}  // namespace grusin
