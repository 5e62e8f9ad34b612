#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "grusin/grid.hpp"
#include "grusin/operator.hpp"

using namespace grusin;

namespace {

Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

}  // namespace

TEST_CASE("axes and grids") {
  const Axis u = Axis::uniform(1.0, 10);
  CHECK(u.size() == 10);
  CHECK(u.width(3) == doctest::Approx(0.2));
  CHECK(u.origin_face() == 5);
  CHECK(u.face(5) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(u.locate(0.05) == 5);
  CHECK(u.locate(-0.05) == 4);
  CHECK(u.locate(7.0) == 9);
  CHECK_THROWS(Axis::uniform(1.0, 7));

  const Axis gr = Axis::graded(1.0, 40, 1e-4);
  CHECK(gr.width(gr.origin_face()) == doctest::Approx(1e-4));
  CHECK(gr.face(gr.size()) == doctest::Approx(1.0));
  CHECK(gr.width(gr.size() - 1) > gr.width(gr.origin_face()));

  const Grid g = Grid::uniform(1, 1, 1.0, 4);
  CHECK(g.size() == 16);
  CHECK(g.total_volume() == doctest::Approx(4.0));
  const double p[] = {0.3, -0.6};
  const std::size_t c = g.locate(p);
  CHECK(g.center(c, 0) == doctest::Approx(0.25));
  CHECK(g.center(c, 1) == doctest::Approx(-0.75));
  CHECK(g.near_boundary(c, 1));
  const double lo[] = {0.0, 0.0}, hi[] = {1.0, 1.0};
  CHECK(g.cells_in_box(lo, hi).size() == 4);
}

TEST_CASE("unit coefficient stencil") {
  const Grid g = Grid::uniform(1, 0, 1.0, 20);
  const DivergenceOperator H = assemble_laplacian(g, Boundary::neumann_box());
  const double h = 0.1;
  Eigen::VectorXd e = Eigen::VectorXd::Zero(20);
  e[10] = 1.0;
  const Eigen::VectorXd He = H.apply(e);
  CHECK(He[9] == doctest::Approx(-1.0 / (h * h)));
  CHECK(He[10] == doctest::Approx(2.0 / (h * h)));
  CHECK(He[11] == doctest::Approx(-1.0 / (h * h)));
  CHECK(He[12] == 0.0);
}

TEST_CASE("structure of assembled operators") {
  std::mt19937_64 rng(3);
  for (const auto& p : {GrusinParams::classical(), GrusinParams{1, 1, 0.5, 0.25, 1, 2}, GrusinParams{2, 1, 0.25, 0.5, 0.5, 2}}) {
    for (auto rep : {Representative::smooth, Representative::pure_power}) {
      const Grid g = Grid::uniform(p.n, p.m, 2.0, p.dimension() == 3 ? 8 : 16);
      const DivergenceOperator H = assemble(g, CoefficientField(p, rep), Boundary::neumann_box());
      const OperatorDiagnostics d = diagnose(H);
      CHECK(d.symmetry_defect < 1e-14);
      CHECK(d.max_row_sum < 1e-12);
      CHECK(d.diagonally_dominant);
      const Eigen::VectorXd ones = Eigen::VectorXd::Ones(H.size());
      CHECK(H.form(ones) == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(smallest_stiffness_eigenvalue(H) > -1e-10 * d.norm);
      const Eigen::VectorXd phi = random_vector(H.size(), rng);
      CHECK(quadratic_form(H, 2.0 * phi) == doctest::Approx(4.0 * quadratic_form(H, phi)));
    }
  }
}

TEST_CASE("form monotonicity in the coefficients") {
  const Grid g = Grid::uniform(1, 1, 2.0, 16);
  const CoefficientField weak({1, 1, 0.5, 0.5, 1, 1}, Representative::pure_power);
  const CoefficientFunction c2 = as_function(weak);
  const CoefficientFunction c1 = [&](Block b, std::span<const double> x) { return 1.5 * c2(b, x) + 0.1; };
  const DivergenceOperator H1 = assemble(g, c1, Boundary::neumann_box());
  const DivergenceOperator H2 = assemble(g, c2, Boundary::neumann_box());
  std::mt19937_64 rng(11);
  for (int k = 0; k < 100; ++k) {
    const Eigen::VectorXd phi = random_vector(H1.size(), rng);
    CHECK(H1.form(phi) >= H2.form(phi));
  }
}

TEST_CASE("one dimensional example") {
  const Grid g = Grid::uniform(1, 0, 2.0, 40);
  const DivergenceOperator H0 = assemble_1d_example(g, 0.0, Boundary::neumann_box());
  const DivergenceOperator L = assemble_laplacian(g, Boundary::neumann_box());
  CHECK((Eigen::MatrixXd(H0.stiffness) - Eigen::MatrixXd(L.stiffness)).cwiseAbs().maxCoeff() < 1e-14);
  for (double d : {0.25, 0.5, 0.75}) {
    const DivergenceOperator H = assemble_1d_example(g, d, Boundary::neumann_box());
    CHECK(smallest_stiffness_eigenvalue(H) > -1e-10 * diagnose(H).norm);
  }
  CHECK_THROWS(assemble_1d_example(g, 1.0, Boundary::neumann_box()));
}

TEST_CASE("approximants") {
  const Grid g = Grid::uniform(1, 1, 1.0, 12);
  const CoefficientField flat({1, 1, 0, 0, 0, 0}, Representative::smooth);
  const DivergenceOperator L = assemble_laplacian(g, Boundary::neumann_box());
  const DivergenceOperator A = assemble_approximant(g, flat, 1e9, 1.0);
  CHECK((Eigen::MatrixXd(A.stiffness) - 2.0 * Eigen::MatrixXd(L.stiffness)).cwiseAbs().maxCoeff() < 1e-9);

  const CoefficientField c = CoefficientField(GrusinParams::classical(), Representative::pure_power);
  const DivergenceOperator H = assemble(g, c, Boundary::neumann_box());
  const DivergenceOperator Hc = assemble_approximant(g, c, 100.0, 0.25);
  const Eigen::MatrixXd expect = Eigen::MatrixXd(H.stiffness) + 0.25 * Eigen::MatrixXd(L.stiffness);
  CHECK((Eigen::MatrixXd(Hc.stiffness) - expect).cwiseAbs().maxCoeff() < 1e-10);

  std::mt19937_64 rng(5);
  for (int k = 0; k < 20; ++k) {
    const Eigen::VectorXd phi = random_vector(H.size(), rng);
    CHECK(Hc.form(phi) >= H.form(phi));
    CHECK(H.form(phi) >= 0.0);
  }
  CHECK_THROWS(assemble_approximant(g, c, 0.1, 0.2));
}

TEST_CASE("quadratic form of a linear function") {
  const Grid g = Grid::uniform(1, 0, 1.0, 400);
  const DivergenceOperator H = assemble_laplacian(g, Boundary::neumann_box());
  Eigen::VectorXd phi(400);
  for (int i = 0; i < 400; ++i) phi[i] = g.axis(0).center(i);
  CHECK(quadratic_form(H, phi) == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("boundary variants are ordered") {
  const Grid g = Grid::uniform(1, 0, 1.0, 40);
  const CoefficientField c(GrusinParams::one_dimensional(0.25), Representative::pure_power);
  const DivergenceOperator N = assemble(g, c, Boundary::neumann_box());
  const DivergenceOperator D = assemble(g, c, Boundary::dirichlet_origin());
  const DivergenceOperator S = assemble(g, c, Boundary::neumann_origin());
  std::mt19937_64 rng(9);
  for (int k = 0; k < 50; ++k) {
    const Eigen::VectorXd phi = random_vector(40, rng);
    CHECK(D.form(phi) >= S.form(phi));
    CHECK(N.form(phi) >= S.form(phi));
  }
  // no flux through 0: indicator of the right half is harmonic
  Eigen::VectorXd right = Eigen::VectorXd::Zero(40);
  right.tail(20).setOnes();
  CHECK(S.form(right) == doctest::Approx(0.0));
  CHECK(parse_boundary(Boundary::periodic().to_string()).box == BoxCondition::periodic);
}

TEST_CASE("periodic wrap") {
  const Grid g = Grid::uniform(1, 1, 1.0, 8);
  const DivergenceOperator H = assemble(g, CoefficientField(GrusinParams::classical(), Representative::smooth), Boundary::periodic());
  const OperatorDiagnostics d = diagnose(H);
  CHECK(d.symmetry_defect < 1e-14);
  CHECK(d.max_row_sum < 1e-12);
  CHECK(H.stiffness.coeff(0, 7) != 0.0);
}

TEST_CASE("matrix market dump") {
  const Grid g = Grid::uniform(1, 0, 1.0, 6);
  const DivergenceOperator H = assemble_laplacian(g, Boundary::neumann_box());
  const auto path = (std::filesystem::temp_directory_path() / "grusin_op_test.mtx").string();
  write_matrix_market(H, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("%%MatrixMarket matrix coordinate real", 0) == 0);
  std::filesystem::remove(path);
}

TEST_CASE("cutoff energies") {
  CHECK(cutoff_energy_closed_form(0.25, 100) == doctest::Approx(0.849).epsilon(0.002));
  CHECK(cutoff_energy_closed_form(0.75, 100) == doctest::Approx(0.0849).epsilon(0.002));
  for (int k : {3, 5, 8}) CHECK(cutoff_energy_closed_form(0.5, std::exp(k)) == doctest::Approx(1.0 / k));

  for (double d : {0.25, 0.5, 0.75}) {
    for (double n : {1e2, 1e3}) {
      const Grid g(1, {Axis::uniform(1.0, 2 * static_cast<int>(16 * n))});
      const CutoffEnergy e = cutoff_energy(d, n, g);
      CHECK(e.one_sided == doctest::Approx(e.closed_form).epsilon(0.05));
      CHECK(e.two_sided == doctest::Approx(2.0 * e.one_sided));
    }
  }
  const Grid coarse(1, {Axis::uniform(1.0, 100)});
  CHECK_THROWS(cutoff_energy(0.5, 1000, coarse));

  // decreasing to 0 when delta >= 1/2, growing when delta < 1/2
  double prev_strong = 1e9, prev_weak = 0.0;
  for (double n : {1e2, 1e3, 1e4, 1e5}) {
    CHECK(cutoff_energy_closed_form(0.75, n) < prev_strong);
    CHECK(cutoff_energy_closed_form(0.25, n) > prev_weak);
    prev_strong = cutoff_energy_closed_form(0.75, n);
    prev_weak = cutoff_energy_closed_form(0.25, n);
  }
  const CutoffFamily f{10};
  CHECK(f.chi(-2.0) == 0.0);
  CHECK(f.chi(-0.05) == 1.0);
  CHECK(f.chi(-0.5) == doctest::Approx(std::log(2.0) / std::log(10.0)));
  CHECK(f.xi(0.0) == 1.0);
}
