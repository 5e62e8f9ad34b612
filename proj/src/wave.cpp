#include "grusin/wave.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "grusin/linalg.hpp"

namespace grusin {

namespace {

LinearMap symmetrized(const DivergenceOperator& H, const Eigen::VectorXd& s) {
  return [&H, &s](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return (H.stiffness * x.cwiseQuotient(s)).cwiseQuotient(s);
  };
}

double mnorm2(const DivergenceOperator& H, const Eigen::VectorXd& u) { return H.inner(u, u); }

Eigen::VectorXd indicator(Eigen::Index size, std::span<const std::size_t> cells) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(size);
  for (std::size_t c : cells) u[static_cast<Eigen::Index>(c)] = 1.0;
  return u;
}

}  // namespace

double lambda_max(const DivergenceOperator& H) {
  const Eigen::VectorXd s = H.mass.cwiseSqrt();
  const LinearMap S = symmetrized(H, s);
  const EigenEstimate power = power_largest(S, H.size(), 1e-3, 500);
  const EigenEstimate lz = lanczos_largest(S, H.size(), 60, 1e-8, 7);
  return 1.05 * std::max(power.value, lz.value);
}

double minimal_chebyshev_degree(double t, double lmax) {
  return std::numbers::e * std::abs(t) * std::sqrt(lmax) / 2.0;
}

Eigen::VectorXd cosine_evolve(const DivergenceOperator& H, const Eigen::VectorXd& phi, double t,
                              ChebyshevOptions opt) {
  if (phi.size() != H.size()) throw std::invalid_argument("cosine_evolve: size mismatch");
  if (t == 0.0) return phi;
  const double lmax = opt.lambda_max > 0.0 ? opt.lambda_max : lambda_max(H);
  const double w = std::abs(t) * std::sqrt(lmax);
  const double need = minimal_chebyshev_degree(t, lmax);
  int degree = opt.degree;
  if (degree == 0) {
    degree = static_cast<int>(std::ceil(need)) + 40;
  } else if (degree < need) {
    throw std::invalid_argument("cosine_evolve: Chebyshev degree below e|t|sqrt(lambda_max)/2");
  }
  const int terms = degree / 2;

  // Y = 2H/lmax - I; T_0 = phi, T_1 = Y phi, T_{k+1} = 2 Y T_k - T_{k-1}
  auto Y = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return (2.0 / lmax) * H.apply(v) - v; };
  Eigen::VectorXd out = std::cyl_bessel_j(0.0, w) * phi;
  Eigen::VectorXd prev = phi;
  Eigen::VectorXd cur = Y(phi);
  for (int k = 1; k <= terms; ++k) {
    const double c = 2.0 * (k % 2 == 0 ? 1.0 : -1.0) * std::cyl_bessel_j(2.0 * k, w);
    out += c * cur;
    if (k == terms) break;
    Eigen::VectorXd next = 2.0 * Y(cur) - prev;
    prev = std::move(cur);
    cur = std::move(next);
  }
  return out;
}

LeapfrogResult leapfrog_evolve(const DivergenceOperator& H, const Eigen::VectorXd& phi, double t, double tau,
                               double lmax) {
  if (!(tau > 0.0) || !(t >= 0.0)) throw std::invalid_argument("leapfrog: need tau > 0 and t >= 0");
  if (lmax <= 0.0) lmax = lambda_max(H);
  if (tau > 2.0 / std::sqrt(lmax)) throw std::invalid_argument("leapfrog: tau exceeds the stability bound 2/sqrt(lambda_max)");
  const int steps = static_cast<int>(std::llround(t / tau));
  if (std::abs(steps * tau - t) > 1e-9 * std::max(t, tau)) {
    throw std::invalid_argument("leapfrog: t must be a multiple of tau");
  }
  WaveState st;
  st.tau = tau;
  st.previous = phi - 0.5 * tau * tau * H.apply(phi);  // u^{-1}
  st.current = phi;
  auto energy = [&](const Eigen::VectorXd& next, const Eigen::VectorXd& now) {
    const Eigen::VectorXd v = (next - now) / tau;
    return mnorm2(H, v) + next.dot(H.stiffness * now);
  };
  LeapfrogResult res;
  double e0 = 0.0;
  for (int k = 0; k < steps; ++k) {
    Eigen::VectorXd next = 2.0 * st.current - st.previous - tau * tau * H.apply(st.current);
    st.energy = energy(next, st.current);
    if (k == 0) e0 = st.energy;
    st.elapsed += tau;
    if (e0 != 0.0 && st.elapsed > 0.0) {
      res.energy_drift = std::max(res.energy_drift, std::abs(st.energy - e0) / std::abs(e0) / std::max(st.elapsed, 1.0));
    }
    st.previous = std::move(st.current);
    st.current = std::move(next);
  }
  res.u = st.current;
  res.steps = steps;
  return res;
}

LeakageResult propagation_leakage(const DivergenceOperator& H, const DistanceOracle& oracle,
                                  std::span<const std::size_t> A, double t, double eta, ChebyshevOptions opt) {
  if (A.empty()) throw std::invalid_argument("propagation_leakage: empty set");
  const Grid& g = oracle.grid();
  const double reach = (1.0 + eta) * std::abs(t);
  const auto dist = oracle.distances_from(A);
  LeakageResult r;
  std::vector<char> inside(g.size(), 0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (dist[i] <= reach) {
      inside[i] = 1;
      ++r.inflated_cells;
      if (g.near_boundary(i, 1)) throw std::invalid_argument("propagation_leakage: inflated set reaches the box boundary");
    }
  }
  const Eigen::VectorXd phi = indicator(H.size(), A);
  const Eigen::VectorXd u = cosine_evolve(H, phi, t, opt);
  double out = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!inside[i]) out += u[static_cast<Eigen::Index>(i)] * u[static_cast<Eigen::Index>(i)] * H.mass[static_cast<Eigen::Index>(i)];
  }
  r.leakage = out / mnorm2(H, phi);
  return r;
}

LocalEqualityResult local_equality_check(const DivergenceOperator& H1, const DivergenceOperator& H2,
                                         std::span<const std::size_t> A, double rho, double t, double eta,
                                         bool contrast) {
  if (!(rho > 0.0)) throw std::invalid_argument("local_equality_check: rho must be positive");
  if (H1.size() != H2.size()) throw std::invalid_argument("local_equality_check: size mismatch");
  if (!contrast && std::abs(t) > (1.0 - eta) * rho) {
    throw std::invalid_argument("local_equality_check: |t| exceeds (1-eta) rho");
  }
  const Eigen::VectorXd phi = indicator(H1.size(), A);
  ChebyshevOptions opt;
  opt.lambda_max = std::max(lambda_max(H1), lambda_max(H2));
  const Eigen::VectorXd diff = cosine_evolve(H1, phi, t, opt) - cosine_evolve(H2, phi, t, opt);
  return {diff.cwiseAbs().maxCoeff(), std::abs(t) / rho};
}

double double_angle_defect(const DivergenceOperator& H, const Eigen::VectorXd& phi, double t) {
  ChebyshevOptions opt;
  opt.lambda_max = lambda_max(H);
  const Eigen::VectorXd c1 = cosine_evolve(H, phi, t, opt);
  const Eigen::VectorXd cc = cosine_evolve(H, c1, t, opt);
  const Eigen::VectorXd c2 = cosine_evolve(H, phi, 2.0 * t, opt);
  const Eigen::VectorXd defect = 2.0 * cc - phi - c2;
  return std::sqrt(mnorm2(H, defect) / mnorm2(H, phi));
}

}  // namespace grusin
