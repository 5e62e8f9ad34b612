#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "grusin/ineq.hpp"

using namespace grusin;

TEST_CASE("Hardy constants") {
  const Grid g(1, {Axis::uniform(1.0, 200)});
  CHECK(hardy_constant(HardySpace::full_space, 0.0, g).constant == doctest::Approx(1.0).epsilon(1e-10));
  const Grid fine(1, {Axis::graded(1.0, 2000, 1e-9)});
  const HardyResult half = hardy_constant(HardySpace::half_line_dirichlet, 1.0, fine);
  CHECK(half.converged);
  CHECK(half.constant > 0.24);
  CHECK(half.constant < 0.30);
  CHECK_THROWS(hardy_constant(HardySpace::full_space, 0.6, g));
}

TEST_CASE("scalar matrix checks") {
  MatrixPair p{Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::MatrixXd::Constant(1, 1, 1.0)};
  CHECK(operator_monotone_check(p, 1.0).min_eigenvalue == doctest::Approx(1.0 / 6.0));
  MatrixPair same{Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Identity(3, 3)};
  CHECK(std::abs(operator_monotone_check(same, 0.5).min_eigenvalue) < 1e-14);
  CHECK(std::abs(sqrt_subadditivity_check(same.A, same.B, 1).min_eigenvalue) < 1e-14);
  const Eigen::MatrixXd four = Eigen::MatrixXd::Constant(1, 1, 4.0), zero = Eigen::MatrixXd::Zero(1, 1);
  CHECK(sqrt_subadditivity_check(four, zero, 1).min_eigenvalue == doctest::Approx(2.0 - std::sqrt(2.0)));
}

TEST_CASE("random matrix suites") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const MatrixPair p = random_pair(2 + trial % 8, rng);
    REQUIRE(pair_is_valid(p));
    for (double gamma : {0.25, 0.5, 1.0}) CHECK(operator_monotone_check(p, gamma).passes());
    CHECK(sqrt_subadditivity_check(p.A, p.B, 1).passes());
    CHECK(sqrt_subadditivity_check(p.A, p.B, 2).passes());
  }
}

TEST_CASE("sublevel volumes") {
  const VfResult line = vf_volume(MultiplierSpec::elliptic(1), 1.0, {{1.5}, {3000}});
  CHECK(line.volume == doctest::Approx(2.0).epsilon(1e-3));

  const MultiplierSpec F = MultiplierSpec::grusin(GrusinParams::classical());
  const VfResult a = vf_volume(F, 1.0, {{1.5, 1.5}, {600, 600}});
  CHECK(a.volume == doctest::Approx(8.0 / 3.0).epsilon(0.01));
  const VfResult b = vf_volume(F, 0.5, {{0.75, 0.375}, {600, 600}});
  CHECK(std::log(a.volume / b.volume) / std::log(2.0) == doctest::Approx(3.0).epsilon(0.02));
  CHECK_THROWS(vf_volume(F, 1.0, {{0.5, 0.5}, {100, 100}}));
}

TEST_CASE("Nash inequality on the free torus") {
  const Grid g = Grid::uniform(1, 0, std::numbers::pi, 128);
  const DivergenceOperator H = assemble_laplacian(g, Boundary::periodic());
  MultiplierSpec F = MultiplierSpec::elliptic(1);
  const SubellipticResult a = subelliptic_constant(H, F, g);
  CHECK(a.converged);
  CHECK(a.constant >= 4.0 / (std::numbers::pi * std::numbers::pi) - 1e-6);
  CHECK(a.constant <= 1.0 + 1e-12);

  MultiplierSpec doubled = F;
  doubled.scale = 2.0;
  CHECK(subelliptic_constant(H, doubled, g).constant == doctest::Approx(a.constant / 2.0).epsilon(1e-6));

  F.scale = a.constant;
  const PeriodicSpectrum spectrum(g);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(128);
  CHECK(nash_check(H, F, spectrum, zero, 1.0).slack() == doctest::Approx(0.0));
  Eigen::VectorXd phi(128);
  for (int i = 0; i < 128; ++i) phi[i] = std::exp(-2.0 * g.center(static_cast<std::size_t>(i), 0) * g.center(static_cast<std::size_t>(i), 0));
  for (double r : {0.5, 1.0, 2.0, 4.0}) CHECK(nash_check(H, F, spectrum, phi, r).slack() >= 0.0);
}

TEST_CASE("Neumann splitting") {
  const Grid g(1, {Axis::uniform(4.0, 256)});
  const NeumannSubellipticResult r = neumann_subelliptic_check(0.75, 0.0, g);
  CHECK(r.decoupling_defect < 1e-12);
  CHECK(r.neumann_constant > 0.0);
  CHECK_THROWS(neumann_subelliptic_check(0.25, 0.0, g));
}
