#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "grusin/heat.hpp"

using namespace grusin;

namespace {

double gaussian(double x, double t) { return std::exp(-x * x / (4.0 * t)) / std::sqrt(4.0 * std::numbers::pi * t); }

const GrusinParams kFree{1, 0, 0, 0, 0, 0};

}  // namespace

TEST_CASE("constants are stationary") {
  const Grid g = Grid::uniform(1, 1, 2.0, 24);
  const DivergenceOperator H = assemble(g, CoefficientField(GrusinParams::classical(), Representative::smooth), Boundary::neumann_box());
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(H.size());
  CHECK((evolve(H, one, 0.7, {20, 2}) - one).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((evolve_krylov(H, one, 0.7) - one).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("free Gaussian") {
  const Grid g(1, {Axis::uniform(4.0, 800)});
  const DivergenceOperator H = assemble_laplacian(g, Boundary::neumann_box());
  const std::size_t y = g.axis(0).origin_face();
  const KernelSlice s = kernel_column(H, g, y, 0.1);
  const double y0 = g.axis(0).center(static_cast<int>(y));
  double err = 0.0;
  for (int i = 0; i < 800; ++i) err = std::max(err, std::abs(s.values[i] - gaussian(g.axis(0).center(i) - y0, 0.1)));
  CHECK(err / gaussian(0.0, 0.1) < 0.02);
  CHECK(s.at(y) == doctest::Approx(0.8921).epsilon(0.01));
  CHECK(s.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(s.truncated);
}

TEST_CASE("CN composes and agrees with the Krylov exponential") {
  const Grid g = Grid::uniform(1, 1, 2.0, 32);
  const DivergenceOperator H = assemble(g, CoefficientField(GrusinParams::classical(), Representative::pure_power), Boundary::neumann_box());
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(H.size());
  for (std::size_t i = 0; i < g.size(); ++i) phi[static_cast<Eigen::Index>(i)] = std::exp(-4.0 * (g.center(i, 0) * g.center(i, 0) + g.center(i, 1) * g.center(i, 1)));
  const Eigen::VectorXd one = evolve(H, phi, 0.2, {20, 0});
  const Eigen::VectorXd two = evolve(H, evolve(H, phi, 0.1, {10, 0}), 0.1, {10, 0});
  CHECK((one - two).cwiseAbs().maxCoeff() < 1e-12);

  const CrankNicolson cn(H, 0.01);
  Eigen::VectorXd a = phi, b = phi;
  cn.implicit_half_step(a);
  cn.implicit_half_step(a);
  cn.step(b);
  const Eigen::VectorXd exact = evolve_krylov(H, phi, 0.01);
  CHECK((a - exact).cwiseAbs().maxCoeff() < 5e-3);
  CHECK((b - exact).cwiseAbs().maxCoeff() < (a - exact).cwiseAbs().maxCoeff());

  const Eigen::VectorXd fine = evolve(H, phi, 0.2, {400, 2});
  const Eigen::VectorXd kry = evolve_krylov(H, phi, 0.2);
  CHECK((fine - kry).cwiseAbs().maxCoeff() < 1e-6);

  const std::vector<double> times{0.05, 0.1, 0.2};
  const auto states = evolve_schedule(H, phi, times, {40, 2});
  CHECK(states.size() == 3);
  CHECK((states[2] - kry).cwiseAbs().maxCoeff() < 1e-4);
  const std::vector<double> bad{0.1, 0.05};
  CHECK_THROWS(evolve_schedule(H, phi, bad));
}

TEST_CASE("kernel conservation, positivity and symmetry") {
  const Grid g = Grid::uniform(1, 1, 3.0, 48);
  const DivergenceOperator H = assemble(g, CoefficientField(GrusinParams::classical(), Representative::pure_power), Boundary::neumann_box());
  const double px[] = {0.5, 0.25}, py[] = {-0.3, 0.1};
  const std::size_t x = g.locate(px), y = g.locate(py);
  const KernelSlice kx = kernel_column(H, g, x, 0.2);
  const KernelSlice ky = kernel_column(H, g, y, 0.2);
  CHECK(kx.total_mass() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(kx.values.minCoeff() >= -1e-12 * kx.values.maxCoeff());
  CHECK(kx.at(y) == doctest::Approx(ky.at(x)).epsilon(1e-8));
}

TEST_CASE("crossnorm of the free kernel") {
  const Grid g(1, {Axis::uniform(8.0, 1600)});
  const DivergenceOperator H = assemble_laplacian(g, Boundary::neumann_box());
  const std::vector<double> times{0.05, 0.1, 0.2, 0.4};
  const auto scan = crossnorm_scan(H, g, degeneracy_sources(g), times);
  CHECK(scan.slope(0.05, 0.4) == doctest::Approx(-0.5).epsilon(0.02));
  CHECK(scan.rows[1].sup == doctest::Approx(gaussian(0.0, 0.1)).epsilon(0.01));
}

TEST_CASE("gaussian and on-diagonal ratios") {
  const Grid g(1, {Axis::uniform(4.0, 800)});
  const DivergenceOperator H = assemble_laplacian(g, Boundary::neumann_box());
  const KernelSlice s = kernel_column(H, g, 400, 0.1);
  const double r1 = gaussian_ratio(s, g, kFree, 1.0);
  const double r01 = gaussian_ratio(s, g, kFree, 0.1);
  CHECK(std::isfinite(r1));
  CHECK(r01 >= r1);

  // volume_formula is r^{n+m} without the unit-ball factor, so the free value is (4 pi)^{-1/2}
  std::vector<DiagonalSample> samples{{200, 0.05}, {400, 0.1}, {450, 0.2}};
  const OndiagResult od = ondiag_lower_ratio(H, g, kFree, samples);
  for (double r : od.ratios) CHECK(r == doctest::Approx(1.0 / std::sqrt(4.0 * std::numbers::pi)).epsilon(0.01));
  CHECK(od.truncated == 0);
}

TEST_CASE("gaussian ratio refuses truncated slices") {
  const Grid g(1, {Axis::uniform(1.0, 100)});
  const DivergenceOperator H = assemble_laplacian(g, Boundary::neumann_box());
  const KernelSlice s = kernel_column(H, g, 50, 1.0);
  CHECK(s.truncated);
  CHECK_THROWS(gaussian_ratio(s, g, kFree, 1.0));
}

TEST_CASE("separation across the degeneracy") {
  const Grid g(1, {Axis::uniform(4.0, 800)});
  CHECK(separation_flux(0.0, 1.0, g).transmitted > 0.1);
  const Grid g2(1, {Axis::uniform(2.0, 512)});
  const SeparationResult s = separation_flux(0.75, 0.1, g2);
  CHECK(s.mass_defect < 1e-10);
  CHECK(s.transmitted < 1e-7);
}

TEST_CASE("Dirichlet-Neumann gap against the method of images") {
  const Grid g(1, {Axis::uniform(4.0, 2000)});
  const GapResult r = dirichlet_neumann_gap(0.0, 0.1, g);
  // source at -1/2: the gap peaks next to x = 0 at the image value
  CHECK(r.gap == doctest::Approx(gaussian(0.5, 0.1)).epsilon(0.02));
  CHECK(r.min_difference >= -1e-12);
}

TEST_CASE("approximant convergence") {
  const Grid g = Grid::uniform(1, 1, 2.0, 24);
  const CoefficientField c(GrusinParams::classical(), Representative::pure_power);
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.size()));
  const double lo[] = {-0.5, -0.5}, hi[] = {0.5, 0.5};
  for (std::size_t i : g.cells_in_box(lo, hi)) phi[static_cast<Eigen::Index>(i)] = 1.0;
  const std::vector<std::pair<double, double>> list{{1e6, 1.0}, {1e6, 0.1}, {1e6, 0.01}, {1e6, 0.0}};
  const auto rows = approximant_convergence(g, c, list, phi, 0.1);
  CHECK(rows[0].l1_gap > rows[1].l1_gap);
  CHECK(rows[1].l1_gap > rows[2].l1_gap);
  CHECK(rows[3].l1_gap == doctest::Approx(0.0));
  for (const auto& r : rows) CHECK(r.l1_gap <= std::sqrt(g.total_volume()) * r.l2_gap + 1e-14);
}

TEST_CASE("comparison with unchanged coefficients") {
  const Grid g = Grid::uniform(1, 1, 3.0, 48);
  const CoefficientField flat({1, 1, 0, 0, 0, 0}, Representative::smooth);
  const ComparisonSetup s = make_comparison(g, flat, 1.0, 1.5, 0.25);
  CHECK(s.rho > 0.5);
  const std::vector<double> times{0.05, 0.1};
  const ComparisonResult r = compare_kernels(s, times);
  for (const auto& row : r.rows) CHECK(row.measured == doctest::Approx(0.0));
  CHECK(r.expected_slope == doctest::Approx(-s.rho * s.rho / 4));
  CHECK_THROWS(make_comparison(g, flat, 2.0, 0.5, 0.25));
}

TEST_CASE("Davies-Gaffney and kernel Cauchy-Schwarz on a small grid") {
  const Grid g = Grid::uniform(1, 1, 3.0, 48);
  const CoefficientField c(GrusinParams::classical(), Representative::pure_power);
  const DivergenceOperator H = assemble(g, c, Boundary::neumann_box());
  const DistanceOracle o(g, c);
  const double alo[] = {-1.0, -0.5}, ahi[] = {-0.5, 0.0}, blo[] = {0.25, 0.0}, bhi[] = {0.75, 0.5};
  const auto A = g.cells_in_box(alo, ahi);
  const auto B = g.cells_in_box(blo, bhi);
  for (double t : {0.05, 0.2, 1.0}) {
    const auto dg = davies_gaffney_check(H, o, A, B, t);
    CHECK(dg.holds);
    CHECK(dg.strict);
    CHECK(dg.lhs > 0.0);
    CHECK(kernel_cauchy_schwarz(H, g, A, B, t).holds);
  }
}
