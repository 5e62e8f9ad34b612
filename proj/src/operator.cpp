#include "grusin/operator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

namespace grusin {

std::string Boundary::to_string() const {
  std::string s;
  switch (box) {
    case BoxCondition::neumann: s = "neumann_box"; break;
    case BoxCondition::dirichlet: s = "dirichlet_box"; break;
    case BoxCondition::periodic: s = "periodic"; break;
  }
  if (origin == OriginCondition::dirichlet) s += "+dirichlet_origin";
  if (origin == OriginCondition::neumann) s += "+neumann_origin";
  return s;
}

Boundary parse_boundary(const std::string& name) {
  if (name == "neumann_box") return Boundary::neumann_box();
  if (name == "dirichlet_origin") return Boundary::dirichlet_origin();
  if (name == "neumann_origin") return Boundary::neumann_origin();
  if (name == "dirichlet_box") return Boundary::dirichlet_box();
  if (name == "periodic") return Boundary::periodic();
  throw std::invalid_argument("unknown boundary condition '" + name + "'");
}

CoefficientFunction as_function(const CoefficientField& field) {
  return [field](Block b, std::span<const double> x1) { return field(b, x1); };
}

CoefficientFunction approximant_coefficients(const CoefficientField& field, double cap, double eps) {
  if (!(cap > eps) || !(eps >= 0.0)) {
    throw std::invalid_argument("approximant: need cap > eps >= 0");
  }
  return [field, cap, eps](Block b, std::span<const double> x1) {
    return std::min(field(b, x1), cap) + eps;
  };
}

CoefficientFunction frozen_coefficients(const CoefficientField& field, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("frozen_coefficients: r must be positive");
  return [field, r](Block b, std::span<const double> x1) {
    double r2 = 0.0;
    for (double v : x1) r2 += v * v;
    const double norm = std::sqrt(r2);
    return field.radial(b, norm > 0.5 * r ? norm : 0.5 * r);
  };
}

Eigen::VectorXd DivergenceOperator::apply(const Eigen::VectorXd& phi) const {
  return (stiffness * phi).cwiseQuotient(mass);
}

double DivergenceOperator::form(const Eigen::VectorXd& phi) const { return phi.dot(stiffness * phi); }

double DivergenceOperator::inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
  return (u.array() * v.array() * mass.array()).sum();
}

namespace {

using Triplet = Eigen::Triplet<double>;

struct Assembler {
  const Grid& g;
  const CoefficientFunction& c;
  Boundary bc;
  std::vector<Triplet> trip;
  std::vector<double> x1a, x1b;

  Assembler(const Grid& grid, const CoefficientFunction& coeff, Boundary b)
      : g(grid), c(coeff), bc(b), x1a(static_cast<std::size_t>(grid.n())), x1b(x1a) {}

  void x1_of(std::size_t idx, std::vector<double>& out) const {
    for (int k = 0; k < g.n(); ++k) out[static_cast<std::size_t>(k)] = g.center(idx, k);
  }

  void link(std::size_t i, std::size_t j, double cond) {
    const auto a = static_cast<Eigen::Index>(i);
    const auto b = static_cast<Eigen::Index>(j);
    trip.emplace_back(a, a, cond);
    trip.emplace_back(b, b, cond);
    trip.emplace_back(a, b, -cond);
    trip.emplace_back(b, a, -cond);
  }

  void sink(std::size_t i, double cond) {
    const auto a = static_cast<Eigen::Index>(i);
    trip.emplace_back(a, a, cond);
  }

  // face area orthogonal to axis k for cell idx
  double area(std::size_t idx, int k) const {
    double s = 1.0;
    for (int l = 0; l < g.dim(); ++l) {
      if (l != k) s *= g.axis(l).width(g.coord(idx, l));
    }
    return s;
  }

  double block_coefficient(int k, const std::vector<double>& x1) const {
    return c(k < g.n() ? Block::x1 : Block::x2, x1);
  }

  void run() {
    const int d = g.dim();
    for (std::size_t i = 0; i < g.size(); ++i) {
      x1_of(i, x1a);
      for (int k = 0; k < d; ++k) {
        const Axis& ax = g.axis(k);
        const int ci = g.coord(i, k);
        const int nk = ax.size();
        const double ai = area(i, k);
        const double ci_coef = block_coefficient(k, x1a);

        // box faces
        if (ci == 0 || ci == nk - 1) {
          if (bc.box == BoxCondition::dirichlet) {
            sink(i, ci_coef * ai / (0.5 * ax.width(ci)));
          }
        }
        if (ci == nk - 1) {
          if (bc.box == BoxCondition::periodic) {
            const std::size_t j = i - static_cast<std::size_t>(nk - 1) * g.stride(k);
            x1_of(j, x1b);
            const double coef = 0.5 * (ci_coef + block_coefficient(k, x1b));
            const double dist = 0.5 * (ax.width(ci) + ax.width(0));
            link(i, j, coef * ai / dist);
          }
          continue;
        }
        const std::size_t j = i + g.stride(k);
        x1_of(j, x1b);
        const double coef = 0.5 * (ci_coef + block_coefficient(k, x1b));
        const double dist = ax.center(ci + 1) - ax.center(ci);
        const bool origin_face = (k == 0 && ci + 1 == ax.origin_face());
        if (origin_face && bc.origin != OriginCondition::coupled) {
          if (bc.origin == OriginCondition::dirichlet) {
            // ghost value zero on the face x1 = 0; face coefficient averaged with the face value
            std::vector<double> face(static_cast<std::size_t>(g.n()), 0.0);
            for (int l = 1; l < g.n(); ++l) face[static_cast<std::size_t>(l)] = x1a[static_cast<std::size_t>(l)];
            const double cface = block_coefficient(k, face);
            sink(i, 0.5 * (ci_coef + cface) * ai / (0.5 * ax.width(ci)));
            sink(j, 0.5 * (block_coefficient(k, x1b) + cface) * ai / (0.5 * ax.width(ci + 1)));
          }
          continue;
        }
        link(i, j, coef * ai / dist);
      }
    }
  }
};

}  // namespace

DivergenceOperator assemble(const Grid& g, const CoefficientFunction& c, Boundary bc) {
  if (bc.origin != OriginCondition::coupled && g.n() != 1) {
    throw std::invalid_argument("assemble: origin conditions are only supported for n = 1");
  }
  if (bc.box == BoxCondition::periodic) {
    for (int k = 0; k < g.dim(); ++k) {
      if (!g.axis(k).is_uniform()) throw std::invalid_argument("assemble: periodic wrap needs uniform axes");
    }
  }
  Assembler a(g, c, bc);
  a.run();
  DivergenceOperator op;
  const auto n = static_cast<Eigen::Index>(g.size());
  op.stiffness.resize(n, n);
  op.stiffness.setFromTriplets(a.trip.begin(), a.trip.end());
  op.stiffness.makeCompressed();
  op.mass = g.volumes();
  op.boundary = bc;
  op.m = g.m();
  return op;
}

DivergenceOperator assemble(const Grid& g, const CoefficientField& c, Boundary bc) {
  if (c.params().n != g.n() || c.params().m != g.m()) {
    throw std::invalid_argument("assemble: grid dimensions do not match the parameters");
  }
  return assemble(g, as_function(c), bc);
}

DivergenceOperator assemble_1d_example(const Grid& g, double delta, Boundary bc) {
  if (!(delta >= 0.0 && delta < 1.0)) {
    throw std::invalid_argument("assemble_1d_example: delta must lie in [0,1)");
  }
  if (g.n() != 1 || g.m() != 0) throw std::invalid_argument("assemble_1d_example: needs a 1D grid");
  return assemble(g, CoefficientField(GrusinParams::one_dimensional(delta), Representative::example_1d), bc);
}

DivergenceOperator assemble_approximant(const Grid& g, const CoefficientField& c, double cap, double eps,
                                        Boundary bc) {
  if (c.params().n != g.n() || c.params().m != g.m()) {
    throw std::invalid_argument("assemble_approximant: grid dimensions do not match the parameters");
  }
  return assemble(g, approximant_coefficients(c, cap, eps), bc);
}

DivergenceOperator assemble_laplacian(const Grid& g, Boundary bc) {
  return assemble(g, [](Block, std::span<const double>) { return 1.0; }, bc);
}

double quadratic_form(const DivergenceOperator& H, const Eigen::VectorXd& phi) {
  if (phi.size() != H.size()) throw std::invalid_argument("quadratic_form: size mismatch");
  return H.form(phi);
}

OperatorDiagnostics diagnose(const DivergenceOperator& H) {
  OperatorDiagnostics d;
  const auto& A = H.stiffness;
  Eigen::SparseMatrix<double> At = A.transpose();
  for (int k = 0; k < A.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) d.norm = std::max(d.norm, std::abs(it.value()));
  }
  if (d.norm == 0.0) return d;
  const Eigen::SparseMatrix<double> diff = A - At;
  for (int k = 0; k < diff.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(diff, k); it; ++it) {
      d.symmetry_defect = std::max(d.symmetry_defect, std::abs(it.value()) / d.norm);
    }
  }
  Eigen::VectorXd rows = A * Eigen::VectorXd::Ones(A.cols());
  d.max_row_sum = rows.cwiseAbs().maxCoeff() / d.norm;
  for (int k = 0; k < A.outerSize(); ++k) {
    double diag = 0.0, off = 0.0;
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) {
      if (it.row() == it.col()) {
        diag += it.value();
      } else {
        off += std::abs(it.value());
      }
    }
    if (diag < off * (1.0 - 1e-12)) d.diagonally_dominant = false;
  }
  return d;
}

double smallest_stiffness_eigenvalue(const DivergenceOperator& H) {
  if (H.size() > 4000) throw std::invalid_argument("smallest_stiffness_eigenvalue: operator too large");
  Eigen::MatrixXd dense = Eigen::MatrixXd(H.stiffness);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void write_matrix_market(const DivergenceOperator& H, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "%%MatrixMarket matrix coordinate real symmetric\n";
  out << "% boundary " << H.boundary.to_string() << "\n";
  const auto& A = H.stiffness;
  std::size_t nnz = 0;
  for (int k = 0; k < A.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) nnz += it.row() >= it.col();
  }
  out << A.rows() << " " << A.cols() << " " << nnz << "\n";
  out << std::setprecision(17);
  for (int k = 0; k < A.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) {
      if (it.row() >= it.col()) out << it.row() + 1 << " " << it.col() + 1 << " " << it.value() << "\n";
    }
  }
  out << "% mass\n";
  for (Eigen::Index i = 0; i < H.mass.size(); ++i) out << "% " << H.mass[i] << "\n";
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

double CutoffFamily::chi(double x) const {
  if (x <= -1.0) return 0.0;
  if (x >= -1.0 / n_cut) return 1.0;
  return -std::log(std::abs(x)) / std::log(n_cut);
}

double CutoffFamily::xi(double x) const { return std::min(chi(x), chi(-x)); }

double cutoff_energy_closed_form(double delta, double n_cut) {
  const double ln = std::log(n_cut);
  if (std::abs(1.0 - 2.0 * delta) < 1e-12) return 1.0 / ln;
  return (std::pow(n_cut, 1.0 - 2.0 * delta) - 1.0) / ((1.0 - 2.0 * delta) * ln * ln);
}

CutoffEnergy cutoff_energy(double delta, double n_cut, const Grid& g) {
  if (!(n_cut >= 2.0)) throw std::invalid_argument("cutoff_energy: n_cut must be >= 2");
  if (g.n() != 1 || g.m() != 0) throw std::invalid_argument("cutoff_energy: needs a 1D grid");
  const Axis& ax = g.axis(0);
  if (ax.half_width() < 1.0) throw std::invalid_argument("cutoff_energy: grid must cover [-1,1]");
  const double need = 1.0 / (4.0 * n_cut);
  for (int i = 0; i < ax.size(); ++i) {
    const bool near = ax.face(i) <= 4.0 / n_cut && ax.face(i + 1) >= -4.0 / n_cut;
    if (near && ax.width(i) > need * (1.0 + 1e-12)) {
      throw std::invalid_argument("cutoff_energy: grid under-resolved; need cell width <= " +
                                  std::to_string(need) + " near |x| = 1/n_cut");
    }
  }
  const CoefficientField c({1, 0, delta, delta, 0.0, 0.0}, Representative::pure_power);
  const DivergenceOperator H = assemble(g, c, Boundary::neumann_box());
  const CutoffFamily family{n_cut};
  Eigen::VectorXd phi(ax.size());
  for (int i = 0; i < ax.size(); ++i) phi[i] = family.xi(ax.center(i));
  CutoffEnergy e;
  e.two_sided = H.form(phi);
  e.one_sided = 0.5 * e.two_sided;
  e.closed_form = cutoff_energy_closed_form(delta, n_cut);
  return e;
}

}  // namespace grusin
