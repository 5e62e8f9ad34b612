#include "grusin/heat.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>

#include "grusin/linalg.hpp"

namespace grusin {

namespace {

Eigen::SparseMatrix<double> diagonal(const Eigen::VectorXd& d) {
  Eigen::SparseMatrix<double> D(d.size(), d.size());
  D.reserve(Eigen::VectorXi::Ones(d.size()));
  for (Eigen::Index i = 0; i < d.size(); ++i) D.insert(i, i) = d[i];
  return D;
}

void check_times(std::span<const double> times) {
  double prev = 0.0;
  for (double t : times) {
    if (!(t > prev)) throw std::invalid_argument("times must be positive and strictly increasing");
    prev = t;
  }
}

Eigen::VectorXd point_source(const Grid& g, std::size_t y) {
  if (y >= g.size()) throw std::out_of_range("source cell outside the grid");
  Eigen::VectorXd u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.size()));
  u[static_cast<Eigen::Index>(y)] = 1.0 / g.volume(y);
  return u;
}

Eigen::VectorXd indicator(Eigen::Index size, std::span<const std::size_t> cells) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(size);
  for (std::size_t c : cells) u[static_cast<Eigen::Index>(c)] = 1.0;
  return u;
}

double measure_of(const DivergenceOperator& H, std::span<const std::size_t> cells) {
  double s = 0.0;
  for (std::size_t c : cells) s += H.mass[static_cast<Eigen::Index>(c)];
  return s;
}

double sum_over(const DivergenceOperator& H, const Eigen::VectorXd& u, std::span<const std::size_t> cells) {
  double s = 0.0;
  for (std::size_t c : cells) s += u[static_cast<Eigen::Index>(c)] * H.mass[static_cast<Eigen::Index>(c)];
  return s;
}

KernelSlice make_slice(const Grid& g, const DivergenceOperator& H, std::size_t y, double t, Eigen::VectorXd values) {
  KernelSlice s;
  s.source = y;
  s.t = t;
  s.values = std::move(values);
  s.measure = H.mass;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.near_boundary(i, 2)) s.boundary_mass += std::abs(s.values[static_cast<Eigen::Index>(i)]) * s.measure[static_cast<Eigen::Index>(i)];
  }
  s.truncated = s.boundary_mass > kBoundaryMassLimit;
  return s;
}

}  // namespace

CrankNicolson::CrankNicolson(const DivergenceOperator& H, double tau) : H_(&H), tau_(tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("CrankNicolson: step must be positive");
  const Eigen::SparseMatrix<double> M = diagonal(H.mass);
  factor_.compute(M + 0.5 * tau * H.stiffness);
  if (factor_.info() != Eigen::Success) throw std::runtime_error("CrankNicolson: factorization failed");
  explicit_ = M - 0.5 * tau * H.stiffness;
}

void CrankNicolson::step(Eigen::VectorXd& u) const {
  const Eigen::VectorXd rhs = explicit_ * u;
  u = factor_.solve(rhs);
  if (factor_.info() != Eigen::Success) throw std::runtime_error("CrankNicolson: solve failed");
}

void CrankNicolson::implicit_half_step(Eigen::VectorXd& u) const {
  const Eigen::VectorXd rhs = H_->mass.cwiseProduct(u);
  u = factor_.solve(rhs);
  if (factor_.info() != Eigen::Success) throw std::runtime_error("CrankNicolson: solve failed");
}

Eigen::VectorXd evolve(const DivergenceOperator& H, const Eigen::VectorXd& phi, double t, EvolveOptions opt) {
  const double times[1] = {t};
  return evolve_schedule(H, phi, times, opt).front();
}

std::vector<Eigen::VectorXd> evolve_schedule(const DivergenceOperator& H, const Eigen::VectorXd& phi,
                                             std::span<const double> times, EvolveOptions opt) {
  if (opt.steps < 1) throw std::invalid_argument("evolve: steps must be >= 1");
  if (opt.smoothing < 0 || opt.smoothing > opt.steps) throw std::invalid_argument("evolve: smoothing out of range");
  if (phi.size() != H.size()) throw std::invalid_argument("evolve: size mismatch");
  check_times(times);
  std::vector<Eigen::VectorXd> out;
  Eigen::VectorXd u = phi;
  double prev = 0.0;
  std::unique_ptr<CrankNicolson> cn;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double tau = (times[k] - prev) / opt.steps;
    if (!cn || std::abs(cn->tau() - tau) > 1e-13 * tau) cn = std::make_unique<CrankNicolson>(H, tau);
    int first = 0;
    if (k == 0) {
      for (int i = 0; i < 2 * opt.smoothing; ++i) cn->implicit_half_step(u);
      first = opt.smoothing;
    }
    for (int i = first; i < opt.steps; ++i) cn->step(u);
    out.push_back(u);
    prev = times[k];
  }
  return out;
}

Eigen::VectorXd evolve_krylov(const DivergenceOperator& H, const Eigen::VectorXd& phi, double t) {
  const Eigen::VectorXd s = H.mass.cwiseSqrt();
  const LinearMap S = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return (H.stiffness * x.cwiseQuotient(s)).cwiseQuotient(s);
  };
  return krylov_expm(S, s.cwiseProduct(phi), t).cwiseQuotient(s);
}

EvolveOptions kernel_defaults() { return {40, 2}; }
EvolveOptions separation_defaults() { return {200, 4}; }

KernelSlice kernel_column(const DivergenceOperator& H, const Grid& g, std::size_t y, double t, EvolveOptions opt) {
  const double times[1] = {t};
  return kernel_columns(H, g, y, times, opt).front();
}

std::vector<KernelSlice> kernel_columns(const DivergenceOperator& H, const Grid& g, std::size_t y,
                                        std::span<const double> times, EvolveOptions opt) {
  if (H.size() != static_cast<Eigen::Index>(g.size())) throw std::invalid_argument("kernel_column: grid mismatch");
  auto states = evolve_schedule(H, point_source(g, y), times, opt);
  std::vector<KernelSlice> out;
  for (std::size_t k = 0; k < states.size(); ++k) out.push_back(make_slice(g, H, y, times[k], std::move(states[k])));
  return out;
}

double linear_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("slope fit needs at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("slope fit needs distinct abscissae");
  return sxy / sxx;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("loglog_slope: values must be positive");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return linear_slope(lx, ly);
}

double CrossnormScan::slope(double t_lo, double t_hi) const {
  std::vector<double> t, s;
  for (const auto& r : rows) {
    if (r.t >= t_lo * (1 - 1e-12) && r.t <= t_hi * (1 + 1e-12) && r.sup > 0.0) {
      t.push_back(r.t);
      s.push_back(r.sup);
    }
  }
  return loglog_slope(t, s);
}

std::vector<std::size_t> degeneracy_sources(const Grid& g, int stride) {
  std::vector<int> mid(static_cast<std::size_t>(g.dim()));
  for (int k = 0; k < g.dim(); ++k) mid[static_cast<std::size_t>(k)] = g.axis(k).origin_face();
  std::vector<std::size_t> out{g.index(mid)};
  auto below = mid;
  below[0] -= 1;
  out.push_back(g.index(below));
  if (stride > 0) {
    auto cur = mid;
    for (int i = mid[0] + stride; i < g.axis(0).size(); i += stride) {
      cur[0] = i;
      out.push_back(g.index(cur));
    }
  }
  return out;
}

CrossnormScan crossnorm_scan(const DivergenceOperator& H, const Grid& g, std::span<const std::size_t> sources,
                             std::span<const double> times, EvolveOptions opt) {
  CrossnormScan scan;
  scan.rows.resize(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) scan.rows[k].t = times[k];
  for (std::size_t y : sources) {
    const auto slices = kernel_columns(H, g, y, times, opt);
    for (std::size_t k = 0; k < slices.size(); ++k) {
      if (slices[k].truncated) {
        ++scan.rows[k].excluded;
        continue;
      }
      const double mx = slices[k].values.maxCoeff();
      if (mx > scan.rows[k].sup) {
        scan.rows[k].sup = mx;
        scan.rows[k].argmax_source = y;
      }
    }
  }
  return scan;
}

double gaussian_ratio(const KernelSlice& slice, const Grid& g, const GrusinParams& p, double eps) {
  if (slice.truncated) throw std::invalid_argument("gaussian_ratio: slice is truncated");
  if (!(eps > 0.0)) throw std::invalid_argument("gaussian_ratio: eps must be positive");
  const double st = std::sqrt(slice.t);
  const Point y = Point::split(g.center(slice.source), g.n());
  const double log_vy = std::log(volume_formula(p, y, st));
  const double floor = kRelativeFloor * slice.values.maxCoeff();
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double k = slice.at(i);
    if (k <= floor) continue;
    const Point x = Point::split(g.center(i), g.n());
    const double d = delta_distance(p, x, y);
    const double lr = std::log(k) + 0.5 * (std::log(volume_formula(p, x, st)) + log_vy) + d * d / (4.0 * (1.0 + eps) * slice.t);
    best = std::max(best, lr);
  }
  return std::exp(best);
}

OndiagResult ondiag_lower_ratio(const DivergenceOperator& H, const Grid& g, const GrusinParams& p,
                                std::span<const DiagonalSample> samples, EvolveOptions opt) {
  OndiagResult res;
  res.min_ratio = std::numeric_limits<double>::infinity();
  res.ratios.assign(samples.size(), 0.0);
  std::map<std::size_t, std::vector<std::size_t>> by_source;
  for (std::size_t i = 0; i < samples.size(); ++i) by_source[samples[i].y].push_back(i);
  for (auto& [y, idx] : by_source) {
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return samples[a].t < samples[b].t; });
    std::vector<double> times;
    for (std::size_t i : idx) {
      if (times.empty() || samples[i].t > times.back()) times.push_back(samples[i].t);
    }
    const auto slices = kernel_columns(H, g, y, times, opt);
    const Point py = Point::split(g.center(y), g.n());
    for (std::size_t i : idx) {
      const auto it = std::find_if(slices.begin(), slices.end(), [&](const KernelSlice& s) { return s.t == samples[i].t; });
      if (it->truncated) ++res.truncated;
      const double r = it->at(y) * volume_formula(p, py, std::sqrt(samples[i].t));
      res.ratios[i] = r;
      res.min_ratio = std::min(res.min_ratio, r);
    }
  }
  return res;
}

namespace {

DivergenceOperator separation_operator(double delta, const Grid& g, Boundary bc) {
  if (g.n() != 1 || g.m() != 0) throw std::invalid_argument("separation: needs a 1D grid");
  const CoefficientField c({1, 0, delta, delta, 0.0, 0.0}, Representative::pure_power);
  return assemble(g, c, bc);
}

}  // namespace

SeparationResult separation_flux(double delta, double t, const Grid& g, EvolveOptions opt) {
  const DivergenceOperator H = separation_operator(delta, g, Boundary::neumann_box());
  const double start[1] = {-0.5};
  const std::size_t j = g.locate(start);
  const Eigen::VectorXd u = evolve(H, point_source(g, j), t, opt);
  SeparationResult r;
  Eigen::Index imax = 0;
  r.min_value = u.minCoeff();
  u.maxCoeff(&imax);
  r.argmax = g.center(static_cast<std::size_t>(imax), 0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.center(i, 0) > 0.0) r.transmitted += u[static_cast<Eigen::Index>(i)] * H.mass[static_cast<Eigen::Index>(i)];
  }
  r.mass_defect = std::abs(u.dot(H.mass) - 1.0);
  return r;
}

GapResult dirichlet_neumann_gap(double delta, double t, const Grid& g, EvolveOptions opt) {
  const DivergenceOperator Hn = separation_operator(delta, g, Boundary::neumann_box());
  const DivergenceOperator Hd = separation_operator(delta, g, Boundary::dirichlet_origin());
  const double start[1] = {-0.5};
  const Eigen::VectorXd u0 = point_source(g, g.locate(start));
  const Eigen::VectorXd diff = evolve(Hn, u0, t, opt) - evolve(Hd, u0, t, opt);
  return {diff.cwiseAbs().maxCoeff(), diff.minCoeff()};
}

std::vector<ApproximantRow> approximant_convergence(const Grid& g, const CoefficientField& c,
                                                    std::span<const std::pair<double, double>> caps_eps,
                                                    const Eigen::VectorXd& phi, double t, EvolveOptions opt) {
  const DivergenceOperator H = assemble(g, c, Boundary::neumann_box());
  const Eigen::VectorXd ref = evolve(H, phi, t, opt);
  std::vector<ApproximantRow> rows;
  for (const auto& [cap, eps] : caps_eps) {
    const DivergenceOperator Ha = assemble(g, approximant_coefficients(c, cap, eps), Boundary::neumann_box());
    const Eigen::VectorXd diff = evolve(Ha, phi, t, opt) - ref;
    ApproximantRow r{cap, eps, diff.cwiseAbs().dot(H.mass), std::sqrt(diff.cwiseAbs2().dot(H.mass))};
    rows.push_back(r);
  }
  return rows;
}

ComparisonSetup make_comparison(Grid g, CoefficientField field, double r, double center, double half_width,
                                int max_sources) {
  if (g.n() != 1) throw std::invalid_argument("make_comparison: needs n = 1");
  if (!(r > 0.0) || !(half_width > 0.0)) throw std::invalid_argument("make_comparison: r and width must be positive");
  std::vector<std::size_t> patch, modified;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x1 = g.center(i, 0);
    if (std::abs(x1 - center) < half_width) patch.push_back(i);
    if (std::abs(x1) <= 0.5 * r) modified.push_back(i);
  }
  if (patch.empty() || modified.empty()) throw std::invalid_argument("make_comparison: empty patch or region");
  const DistanceOracle oracle(g, frozen_coefficients(field, r));
  const double rho = oracle.set_distance(patch, modified);
  if (!(rho > 0.0)) throw std::invalid_argument("make_comparison: patch meets the modified region (rho = 0)");

  // sources on the middle x2 line of the patch, evenly spaced in x1
  std::vector<std::size_t> line;
  for (std::size_t i : patch) {
    bool mid = true;
    for (int k = 1; k < g.dim(); ++k) mid = mid && g.coord(i, k) == g.axis(k).origin_face();
    if (mid) line.push_back(i);
  }
  std::vector<std::size_t> sources;
  const int count = std::min<int>(max_sources, static_cast<int>(line.size()));
  for (int k = 0; k < count; ++k) {
    const std::size_t pos = count == 1 ? line.size() / 2 : static_cast<std::size_t>(k) * (line.size() - 1) / static_cast<std::size_t>(count - 1);
    sources.push_back(line[pos]);
  }
  return ComparisonSetup{std::move(g), std::move(field), r, std::move(patch), std::move(sources), rho};
}

ComparisonResult compare_kernels(const ComparisonSetup& s, std::span<const double> times, EvolveOptions opt) {
  if (!(s.rho > 0.0)) throw std::invalid_argument("compare_kernels: rho must be positive");
  const DivergenceOperator H2 = assemble(s.grid, s.field, Boundary::neumann_box());
  const DivergenceOperator H1 = assemble(s.grid, frozen_coefficients(s.field, s.r), Boundary::neumann_box());
  ComparisonResult res;
  res.rho = s.rho;
  res.rows.resize(times.size());
  for (std::size_t y : s.sources) {
    const auto k1 = kernel_columns(H1, s.grid, y, times, opt);
    const auto k2 = kernel_columns(H2, s.grid, y, times, opt);
    for (std::size_t k = 0; k < times.size(); ++k) {
      double m = 0.0;
      for (std::size_t x : s.patch) m = std::max(m, std::abs(k1[k].at(x) - k2[k].at(x)));
      res.rows[k].measured = std::max(res.rows[k].measured, m);
    }
  }
  const DerivedExponents e = derive_exponents(s.field.params());
  const double r2 = s.rho * s.rho;
  std::vector<double> inv_t, log_m;
  for (std::size_t k = 0; k < times.size(); ++k) {
    auto& row = res.rows[k];
    const double t = times[k];
    row.t = t;
    const double V = eval_piecewise_power(t * t / r2, {0.5 * e.D, 0.5 * e.Dp});
    row.shape = std::pow(r2 / t, -0.5) * std::exp(-r2 / (4.0 * t)) / V;
    res.fitted_constant = std::max(res.fitted_constant, row.measured / row.shape);
    if (row.measured > 0.0) {
      inv_t.push_back(1.0 / t);
      log_m.push_back(std::log(row.measured));
    }
    if (k > 0 && !(row.measured > res.rows[k - 1].measured)) res.monotone = false;
  }
  res.expected_slope = -r2 / 4.0;
  if (inv_t.size() >= 2) res.slope = linear_slope(inv_t, log_m);
  return res;
}

DaviesGaffneyResult davies_gaffney_check(const DivergenceOperator& H, const DistanceOracle& oracle,
                                         std::span<const std::size_t> A, std::span<const std::size_t> B, double t,
                                         double eta, EvolveOptions opt) {
  DaviesGaffneyResult r;
  r.distance = oracle.set_distance(A, B);
  const Eigen::VectorXd u = evolve(H, indicator(H.size(), B), t, opt);
  r.lhs = sum_over(H, u, A);
  const double d = (1.0 - eta) * r.distance;
  const double norms = std::sqrt(measure_of(H, A) * measure_of(H, B));
  r.bound = std::exp(-d * d / (4.0 * t)) * norms;
  r.strict = r.lhs <= r.bound * (1.0 + 1e-9);
  r.holds = r.lhs <= r.bound * (1.0 + 1e-9) + kRelativeFloor * norms;
  return r;
}

CauchySchwarzResult kernel_cauchy_schwarz(const DivergenceOperator& H, const Grid& g,
                                          std::span<const std::size_t> X, std::span<const std::size_t> Y, double t,
                                          EvolveOptions opt) {
  if (H.size() != static_cast<Eigen::Index>(g.size())) throw std::invalid_argument("kernel_cauchy_schwarz: grid mismatch");
  const double mx = measure_of(H, X), my = measure_of(H, Y);
  const Eigen::VectorXd ux = evolve(H, indicator(H.size(), X), t, opt);
  const Eigen::VectorXd uy = evolve(H, indicator(H.size(), Y), t, opt);
  CauchySchwarzResult r;
  r.kxy = sum_over(H, uy, X) / (mx * my);
  r.kxx = sum_over(H, ux, X) / (mx * mx);
  r.kyy = sum_over(H, uy, Y) / (my * my);
  r.holds = r.kxy * r.kxy <= r.kxx * r.kyy * (1.0 + 1e-9);
  return r;
}

}  // namespace grusin
