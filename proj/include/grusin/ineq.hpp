#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "grusin/grid.hpp"
#include "grusin/linalg.hpp"
#include "grusin/operator.hpp"
#include "grusin/params.hpp"

namespace grusin {

enum class HardySpace { full_space, half_line_dirichlet };

struct HardyResult {
  double constant = 0.0;
  std::size_t cells = 0;
  bool converged = false;
};

/// Smallest eigenvalue of the pencil (L^gamma, |x|^{-2 gamma}) on an m = 0 grid with
/// Dirichlet box. full_space: gamma in [0, 1] with gamma < n/2; gamma = 1 runs a sparse
/// shift-invert Lanczos, gamma < 1 a dense eigendecomposition (at most 4000 cells).
/// half_line_dirichlet: n = 1, gamma = 1, with an absorbing condition at x = 0 as well.
HardyResult hardy_constant(HardySpace space, double gamma, const Grid& g);

/// Dense symmetric A >= B >= 0.
struct MatrixPair {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
};

/// B = G G^T and A = B + K K^T with Gaussian factors of random rank, scaled by 10^{U(-2,2)}.
MatrixPair random_pair(int order, std::mt19937_64& rng);
/// Re-checks the pair invariants by eigenvalues.
bool pair_is_valid(const MatrixPair& pair, double tol = 1e-10);

struct MatrixCheck {
  double min_eigenvalue = 0.0;
  double scale = 1.0;  ///< norm used for the relative tolerance
  bool passes(double tol = 1e-10) const { return min_eigenvalue >= -tol * scale; }
};

/// min eig of A(I+A)^{-gamma} - B(I+B)^{-gamma}.
MatrixCheck operator_monotone_check(const MatrixPair& pair, double gamma);
/// min eig of (A+B)^{1/2^k} - 2^{-1+2^{-k}} (A^{1/2^k} + B^{1/2^k}).
MatrixCheck sqrt_subadditivity_check(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int k = 1);

/// Fourier multiplier F(p) on R^n x R^m.
///
/// elliptic: mu |p|^2.
/// grusin:   F1(|p1|^2) + F2(|p2|^2) with
///           F1(L) = L^{1-d1'} (1+L)^{-(d1-d1')} if d1 >= d1', L^{1-d1} + L^{1-d1'} otherwise,
///           F2(L) = L^{alpha'} (1+L)^{alpha-alpha'}.
/// With `discrete_symbol` each p_k^2 is replaced by (2 - 2 cos(h_k p_k))/h_k^2.
struct MultiplierSpec {
  enum class Kind { elliptic, grusin };
  Kind kind = Kind::elliptic;
  GrusinParams params;
  double mu = 1.0;
  double scale = 1.0;
  bool discrete_symbol = false;

  static MultiplierSpec elliptic(int dim, double mu = 1.0);
  static MultiplierSpec grusin(const GrusinParams& p);

  int dimension() const { return params.dimension(); }
  /// F(p); `h` gives the grid spacing per axis (used only with discrete_symbol).
  double operator()(std::span<const double> p, std::span<const double> h = {}) const;
  /// F1 as a function of the x1 symbol L.
  double x1_part(double L) const;
  double x2_part(double L) const;
};

struct FrequencyBox {
  std::vector<double> half_width;  ///< per axis
  std::vector<int> cells;          ///< per axis
};

struct VfResult {
  double volume = 0.0;       ///< measure of {F < r^2} by cell counting
  double closed_form = 0.0;  ///< exact value when known, NaN otherwise
  double shape = 0.0;        ///< r^{(D', D)} for the Grusin multiplier, r^d for elliptic
};

/// Counts midpoints of the frequency box with F < r^2. Throws when the sublevel set reaches
/// the outermost cells of the box.
VfResult vf_volume(const MultiplierSpec& F, double r, const FrequencyBox& box);

/// Frequencies of a uniform periodic grid, in FFT order along each axis.
class PeriodicSpectrum {
 public:
  explicit PeriodicSpectrum(const Grid& g);
  const Grid& grid() const { return grid_; }
  std::size_t size() const { return grid_.size(); }
  /// Multiplier values at every lattice frequency.
  Eigen::VectorXd evaluate(const MultiplierSpec& F) const;
  /// Number of lattice frequencies with F < r^2; equals |Omega| (2 pi)^{-d} V_F(r) on the lattice.
  std::size_t count_below(const MultiplierSpec& F, double r) const;
  /// x -> IDFT(diag(mult) DFT(x)) for real even multipliers.
  Eigen::VectorXd apply(const Eigen::VectorXd& mult, const Eigen::VectorXd& x) const;
  /// f(phi) = sum_x phi(x) (F(D) phi)(x) h^d.
  double form(const Eigen::VectorXd& F_values, const Eigen::VectorXd& phi) const;

 private:
  Grid grid_;
  std::vector<std::vector<double>> freq_;  // per axis, FFT order
};

struct SubellipticResult {
  double constant = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Largest a with h(phi) >= a f(phi) on a uniform periodic grid: smallest eigenvalue of the
/// pencil (A, F(D)) on mean-zero functions. H must be assembled with periodic wrap.
SubellipticResult subelliptic_constant(const DivergenceOperator& H, const MultiplierSpec& F, const Grid& g);

struct NashResult {
  double lhs = 0.0;  ///< |phi|_2^2
  double rhs = 0.0;  ///< r^{-2} h(phi) + |Omega|^{-1} N_F(r) |phi|_1^2
  double slack() const { return rhs - lhs; }
};

/// Nash inequality on the periodic lattice, with the lattice count standing in for (2 pi)^{-d} V_F(r) |Omega|.
NashResult nash_check(const DivergenceOperator& H, const MultiplierSpec& F, const PeriodicSpectrum& spectrum,
                      const Eigen::VectorXd& phi, double r);

struct NeumannSubellipticResult {
  double neumann_constant = 0.0;    ///< pencil (h_1, f_N)
  double full_line_constant = 0.0;  ///< pencil (h_1, f) with the coupled Laplacian
  double decoupling_defect = 0.0;   ///< |f_N(phi) - f_N^+(phi_+) - f_N^-(phi_-)| / f_N(phi) on a test vector
};

/// h_1 from the smooth x1 coefficient c_{d1,d1'} on a uniform 1D grid with Neumann box.
/// f_N uses F1 of the Laplacian with no flux through 0, f uses F1 of the coupled Laplacian.
/// Dense; at most 2000 cells. Requires d1 in [1/2, 1).
NeumannSubellipticResult neumann_subelliptic_check(double d1, double d1p, const Grid& g);

/// min phi^T A phi / phi^T G phi over phi outside ker G, where the columns of K span ker G.
double dense_pencil_min(const Eigen::MatrixXd& A, const Eigen::MatrixXd& G, const Eigen::MatrixXd& K);

}  // namespace grusin
