#pragma once

#include <functional>
#include <span>
#include <string>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "grusin/grid.hpp"
#include "grusin/params.hpp"

namespace grusin {

enum class BoxCondition { neumann, dirichlet, periodic };
enum class OriginCondition { coupled, dirichlet, neumann };

/// Boundary treatment: one condition on the box faces, one on the hyperplane x1 = 0
/// (the latter only for n = 1).
struct Boundary {
  BoxCondition box = BoxCondition::neumann;
  OriginCondition origin = OriginCondition::coupled;

  static Boundary neumann_box() { return {}; }
  /// Absorbing (zero value) condition on x1 = 0, Neumann on the box.
  static Boundary dirichlet_origin() { return {BoxCondition::neumann, OriginCondition::dirichlet}; }
  /// No flux through x1 = 0: the two half spaces decouple.
  static Boundary neumann_origin() { return {BoxCondition::neumann, OriginCondition::neumann}; }
  static Boundary dirichlet_box() { return {BoxCondition::dirichlet, OriginCondition::coupled}; }
  static Boundary periodic() { return {BoxCondition::periodic, OriginCondition::coupled}; }

  std::string to_string() const;
};

Boundary parse_boundary(const std::string& name);

/// Block coefficient as a function of the x1 coordinates.
using CoefficientFunction = std::function<double(Block, std::span<const double>)>;

CoefficientFunction as_function(const CoefficientField& field);
/// (C wedge cap) + eps, blockwise.
CoefficientFunction approximant_coefficients(const CoefficientField& field, double cap, double eps);
/// C_r: equal to C where |x1| > r/2 and frozen at the value of level |x1| = r/2 inside.
CoefficientFunction frozen_coefficients(const CoefficientField& field, double r);

/// Two-point-flux discretization of -div(C grad) on a cell-centered tensor grid.
///
/// The quadratic form is h(phi) = phi^T A phi with A = `stiffness`, and the
/// operator acting on grid functions is H = M^{-1} A with M = diag(`mass`).
/// On uniform grids M = h^d I, so H itself is symmetric.
struct DivergenceOperator {
  Eigen::SparseMatrix<double> stiffness;
  Eigen::VectorXd mass;
  Boundary boundary;
  int m = 0;

  Eigen::Index size() const { return mass.size(); }
  /// H phi = M^{-1} A phi.
  Eigen::VectorXd apply(const Eigen::VectorXd& phi) const;
  /// phi^T A phi.
  double form(const Eigen::VectorXd& phi) const;
  /// M-weighted inner product sum_i mass_i u_i v_i.
  double inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
};

DivergenceOperator assemble(const Grid& g, const CoefficientFunction& c, Boundary bc);
DivergenceOperator assemble(const Grid& g, const CoefficientField& c, Boundary bc);
/// The one-dimensional example c(x) = (x^2/(1+x^2))^delta, delta in [0,1).
DivergenceOperator assemble_1d_example(const Grid& g, double delta, Boundary bc);
/// Strongly elliptic approximant with coefficients (C wedge cap) + eps; requires cap > eps >= 0.
DivergenceOperator assemble_approximant(const Grid& g, const CoefficientField& c, double cap,
                                        double eps, Boundary bc = Boundary::neumann_box());
/// Unit-coefficient Laplacian on the grid.
DivergenceOperator assemble_laplacian(const Grid& g, Boundary bc);

/// h(phi) = phi^T H phi * (cell measure) = phi^T A phi.
double quadratic_form(const DivergenceOperator& H, const Eigen::VectorXd& phi);

/// Structural diagnostics of an assembled operator.
struct OperatorDiagnostics {
  double symmetry_defect = 0.0;   ///< max |A_ij - A_ji| / max |A_ij|
  double max_row_sum = 0.0;       ///< max |sum_j A_ij| / max |A_ij|
  bool diagonally_dominant = true;
  double norm = 0.0;              ///< max |A_ij|
};
OperatorDiagnostics diagnose(const DivergenceOperator& H);
/// Smallest eigenvalue of the stiffness matrix by dense decomposition (small operators only).
double smallest_stiffness_eigenvalue(const DivergenceOperator& H);

/// Writes the stiffness matrix in Matrix Market coordinate format, followed by
/// the cell masses as a comment block.
void write_matrix_market(const DivergenceOperator& H, const std::string& path);

/// chi_n from the separation argument: 0 for x <= -1, -log|x|/log n on (-1,-1/n), 1 for x >= -1/n.
struct CutoffFamily {
  double n_cut = 2.0;

  double chi(double x) const;
  /// Even cutoff min(chi(x), chi(-x)); equals 1 on [-1/n, 1/n].
  double xi(double x) const;
};

struct CutoffEnergy {
  double two_sided = 0.0;    ///< h(xi_n) on the grid
  double one_sided = 0.0;    ///< contribution of one half line
  double closed_form = 0.0;  ///< one-sided closed form
};

/// Closed-form one-sided energy of xi_n for c = |x|^{2 delta}.
double cutoff_energy_closed_form(double delta, double n_cut);
/// h(xi_n) for the pure power coefficient |x|^{2 delta} on a 1D grid covering [-1,1].
/// Throws std::invalid_argument when the grid does not resolve 1/n_cut.
CutoffEnergy cutoff_energy(double delta, double n_cut, const Grid& g);

}  // namespace grusin
