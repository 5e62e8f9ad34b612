#include <doctest.h>

#include <cmath>
#include <numbers>

#include "grusin/wave.hpp"

using namespace grusin;

namespace {

Eigen::VectorXd pulse(const Grid& g, double c, double w) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.center(i, 0) - c;
    v[static_cast<Eigen::Index>(i)] = std::exp(-x * x / (w * w));
  }
  return v;
}

}  // namespace

TEST_CASE("zero time is the identity") {
  const Grid g(1, {Axis::uniform(2.0, 64)});
  const DivergenceOperator H = assemble_laplacian(g, Boundary::neumann_box());
  const Eigen::VectorXd phi = pulse(g, 0.3, 0.4);
  CHECK((cosine_evolve(H, phi, 0.0) - phi).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("d'Alembert on the line") {
  const Grid g(1, {Axis::uniform(4.0, 1600)});
  const DivergenceOperator H = assemble_laplacian(g, Boundary::neumann_box());
  const double lmax = lambda_max(H);
  CHECK(lmax >= 4.0 / std::pow(g.axis(0).width(0), 2));
  const Eigen::VectorXd phi = pulse(g, 0.0, 0.2);
  ChebyshevOptions opt{lmax, static_cast<int>(std::ceil(1.5 * std::sqrt(lmax)))};
  const Eigen::VectorXd u = cosine_evolve(H, phi, 1.0, opt);
  const Eigen::VectorXd exact = 0.5 * (pulse(g, 1.0, 0.2) + pulse(g, -1.0, 0.2));
  CHECK((u - exact).cwiseAbs().maxCoeff() < 0.01);

  ChebyshevOptions low{lmax, static_cast<int>(minimal_chebyshev_degree(1.0, lmax)) - 5};
  CHECK_THROWS(cosine_evolve(H, phi, 1.0, low));
}

TEST_CASE("eigenvector of the periodic Laplacian") {
  const Grid g(1, {Axis::uniform(std::numbers::pi, 64)});
  const DivergenceOperator H = assemble_laplacian(g, Boundary::periodic());
  const double h = g.axis(0).width(0);
  Eigen::VectorXd v(64);
  for (int i = 0; i < 64; ++i) v[i] = std::cos(3.0 * g.axis(0).center(i));
  const double lambda = (2.0 - 2.0 * std::cos(3.0 * h)) / (h * h);
  const Eigen::VectorXd u = cosine_evolve(H, v, 0.8);
  CHECK((u - std::cos(0.8 * std::sqrt(lambda)) * v).cwiseAbs().maxCoeff() < 1e-10);
  // cosine is even in t
  CHECK((cosine_evolve(H, v, -0.8) - u).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(double_angle_defect(H, pulse(g, 0.5, 0.5), 0.6) < 1e-10);
}

TEST_CASE("leapfrog tracks the cosine and rejects unstable steps") {
  const Grid g(1, {Axis::uniform(4.0, 400)});
  const DivergenceOperator H = assemble_laplacian(g, Boundary::neumann_box());
  const double lmax = lambda_max(H);
  const Eigen::VectorXd phi = pulse(g, 0.0, 0.5);
  const double tau = 1.0 / std::ceil(5.0 * std::sqrt(lmax));
  const LeapfrogResult lf = leapfrog_evolve(H, phi, 1.0, tau, lmax);
  CHECK((lf.u - cosine_evolve(H, phi, 1.0)).cwiseAbs().maxCoeff() < 1e-3);
  CHECK(lf.energy_drift < 1e-8);
  CHECK_THROWS(leapfrog_evolve(H, phi, 1.0, 1.0 / std::floor(0.4 * std::sqrt(lmax)), lmax));
}

TEST_CASE("leakage decreases with the slack") {
  const Grid g = Grid::uniform(1, 1, 2.0, 64);
  const CoefficientField c(GrusinParams::classical(), Representative::smooth);
  const DivergenceOperator H = assemble(g, c, Boundary::neumann_box());
  const DistanceOracle o(g, c);
  const double lo[] = {-0.25, -0.25}, hi[] = {0.25, 0.25};
  const auto A = g.cells_in_box(lo, hi);
  const double tight = propagation_leakage(H, o, A, 0.5, 0.0).leakage;
  const LeakageResult loose = propagation_leakage(H, o, A, 0.5, 0.3);
  CHECK(loose.leakage <= tight);
  CHECK(loose.leakage < 1e-3);
  CHECK(loose.inflated_cells > A.size());
  CHECK_THROWS(propagation_leakage(H, o, A, 3.0, 0.1));
}

TEST_CASE("identical operators give identical waves") {
  const Grid g(1, {Axis::uniform(2.0, 128)});
  const DivergenceOperator H = assemble_laplacian(g, Boundary::neumann_box());
  const double lo[] = {1.0}, hi[] = {1.5};
  const auto A = g.cells_in_box(lo, hi);
  CHECK(local_equality_check(H, H, A, 0.5, 0.3).difference == doctest::Approx(0.0));
  CHECK_THROWS(local_equality_check(H, H, A, 0.5, 0.6));
  CHECK_NOTHROW(local_equality_check(H, H, A, 0.5, 0.6, 0.1, true));
}
