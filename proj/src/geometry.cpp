#include "grusin/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <stdexcept>

namespace grusin {

Point Point::split(std::span<const double> x, int n) {
  Point p;
  p.x1.assign(x.begin(), x.begin() + n);
  p.x2.assign(x.begin() + n, x.end());
  return p;
}

namespace {

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double diff_norm(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

void check_point(const GrusinParams& p, const Point& a) {
  if (a.x1.size() != static_cast<std::size_t>(p.n) || a.x2.size() != static_cast<std::size_t>(p.m)) {
    throw std::invalid_argument("point dimensions do not match the parameters");
  }
}

}  // namespace

double delta_distance(const GrusinParams& p, const Point& a, const Point& b) {
  check_point(p, a);
  check_point(p, b);
  const DerivedExponents e = derive_exponents(p);
  const double s = norm(a.x1) + norm(b.x1);
  const double dx1 = diff_norm(a.x1, b.x1);
  const double dx2 = diff_norm(a.x2, b.x2);

  double first = 0.0;
  if (dx1 > 0.0) first = dx1 / eval_piecewise_power(s, {p.d1, p.d1p});

  double second = 0.0;
  if (dx2 > 0.0) {
    const double threshold = eval_piecewise_power_or_zero(s, {e.rho, e.rhop});
    if (dx2 <= threshold) {
      second = dx2 / eval_piecewise_power(s, {p.d2, p.d2p});
    } else {
      second = eval_piecewise_power(dx2, {1.0 - e.gamma, 1.0 - e.gammap});
    }
  }
  return first + second;
}

VolumeRegime volume_regime(const GrusinParams& p, const Point& x, double r) {
  check_point(p, x);
  const double boundary = eval_piecewise_power_or_zero(norm(x.x1), {1.0 - p.d1, 1.0 - p.d1p});
  return r >= boundary ? VolumeRegime::large_r : VolumeRegime::small_r;
}

double volume_formula(const GrusinParams& p, const Point& x, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("volume_formula: radius must be positive");
  const DerivedExponents e = derive_exponents(p);
  if (volume_regime(p, x, r) == VolumeRegime::large_r) {
    return eval_piecewise_power(r, {e.D, e.Dp});
  }
  return std::pow(r, p.n + p.m) * eval_piecewise_power(norm(x.x1), {e.beta, e.betap});
}

DistanceOracle::DistanceOracle(Grid grid, const CoefficientField& c)
    : DistanceOracle(std::move(grid), as_function(c)) {}

DistanceOracle::DistanceOracle(Grid grid, const CoefficientFunction& c) : grid_(std::move(grid)) {
  const std::size_t N = grid_.size();
  c1_.resize(N);
  if (grid_.m() > 0) c2_.resize(N);
  std::vector<double> x1(static_cast<std::size_t>(grid_.n()));
  for (std::size_t i = 0; i < N; ++i) {
    for (int k = 0; k < grid_.n(); ++k) x1[static_cast<std::size_t>(k)] = grid_.center(i, k);
    c1_[i] = c(Block::x1, x1);
    if (grid_.m() > 0) c2_[i] = c(Block::x2, x1);
    if (!(c1_[i] > 0.0) || (grid_.m() > 0 && !(c2_[i] > 0.0))) {
      throw std::invalid_argument("DistanceOracle: coefficients must be positive at cell centers");
    }
  }
  const int d = grid_.dim();
  std::vector<int> o(static_cast<std::size_t>(d), -1);
  while (true) {
    if (std::any_of(o.begin(), o.end(), [](int v) { return v != 0; })) offsets_.push_back(o);
    int k = d - 1;
    while (k >= 0 && o[static_cast<std::size_t>(k)] == 1) {
      o[static_cast<std::size_t>(k)] = -1;
      --k;
    }
    if (k < 0) break;
    ++o[static_cast<std::size_t>(k)];
  }
}

std::vector<double> DistanceOracle::distances_from(std::span<const std::size_t> sources, double cutoff) const {
  const std::size_t N = grid_.size();
  const int d = grid_.dim();
  const int n = grid_.n();
  std::vector<double> dist(N, std::numeric_limits<double>::infinity());
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  for (std::size_t s : sources) {
    if (s >= N) throw std::out_of_range("DistanceOracle: source outside the grid");
    dist[s] = 0.0;
    queue.emplace(0.0, s);
  }
  std::vector<int> ci(static_cast<std::size_t>(d));
  while (!queue.empty()) {
    const auto [du, u] = queue.top();
    queue.pop();
    if (du > dist[u]) continue;
    grid_.multi_index(u, ci);
    for (const auto& o : offsets_) {
      bool inside = true;
      std::ptrdiff_t shift = 0;
      for (int k = 0; k < d; ++k) {
        const int c = ci[static_cast<std::size_t>(k)] + o[static_cast<std::size_t>(k)];
        if (c < 0 || c >= grid_.axis(k).size()) {
          inside = false;
          break;
        }
        shift += o[static_cast<std::size_t>(k)] * static_cast<std::ptrdiff_t>(grid_.stride(k));
      }
      if (!inside) continue;
      const std::size_t v = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(u) + shift);
      double len2 = 0.0;
      for (int k = 0; k < d; ++k) {
        const int ok = o[static_cast<std::size_t>(k)];
        if (ok == 0) continue;
        const Axis& ax = grid_.axis(k);
        const int c = ci[static_cast<std::size_t>(k)];
        const double dx = ax.center(c + ok) - ax.center(c);
        const double coef = k < n ? 0.5 * (c1_[u] + c1_[v]) : 0.5 * (c2_[u] + c2_[v]);
        len2 += dx * dx / coef;
      }
      const double nd = du + std::sqrt(len2);
      if (nd < dist[v] && nd <= cutoff) {
        dist[v] = nd;
        queue.emplace(nd, v);
      }
    }
  }
  return dist;
}

std::vector<double> DistanceOracle::distances_from(std::size_t source, double cutoff) const {
  const std::size_t s[1] = {source};
  return distances_from(s, cutoff);
}

double DistanceOracle::graph_distance(std::size_t a, std::size_t b) const {
  const auto dist = distances_from(a);
  const double r = dist.at(b);
  if (!std::isfinite(r)) throw std::logic_error("graph_distance: cells are disconnected");
  return r;
}

double DistanceOracle::set_distance(std::span<const std::size_t> A, std::span<const std::size_t> B) const {
  const auto dist = distances_from(A);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t b : B) best = std::min(best, dist.at(b));
  return best;
}

BallEstimate DistanceOracle::ball_volume_numeric(std::size_t x, double r) const {
  if (!(r > 0.0)) throw std::invalid_argument("ball_volume_numeric: radius must be positive");
  const auto dist = distances_from(x, r);
  BallEstimate b;
  b.center = Point::split(grid_.center(x), grid_.n());
  b.radius = r;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] < r) {
      b.volume_numeric += grid_.volume(i);
      if (grid_.near_boundary(i, 1)) b.truncated = true;
    }
  }
  return b;
}

DoublingReport doubling_report(const GrusinParams& p, std::span<const DoublingSample> samples) {
  const DerivedExponents e = derive_exponents(p);
  DoublingReport rep;
  rep.doubling_dimension = e.doubling_dimension();
  for (const auto& smp : samples) {
    if (!(smp.s >= 1.0)) throw std::invalid_argument("doubling_report: s must be >= 1");
    DoublingRow row;
    row.ratio = volume_formula(p, smp.x, smp.s * smp.r) / volume_formula(p, smp.x, smp.r);
    row.constant = row.ratio / std::pow(smp.s, rep.doubling_dimension);
    row.exponent = smp.s > 1.0 ? std::log(row.ratio) / std::log(smp.s) : std::nan("");
    rep.max_constant = std::max(rep.max_constant, row.constant);
    if (smp.s > 1.0) rep.max_exponent = std::max(rep.max_exponent, row.exponent);
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace grusin
