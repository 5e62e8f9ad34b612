#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>

#include "grusin/geometry.hpp"
#include "grusin/grid.hpp"
#include "grusin/operator.hpp"
#include "grusin/params.hpp"

namespace grusin {

/// Crank-Nicolson stepper (M + tau/2 A) u' = (M - tau/2 A) u for a fixed step tau.
///
/// The same factorization also gives backward Euler with step tau/2, used for
/// Rannacher start-up: two such half steps replace one CN step.
class CrankNicolson {
 public:
  CrankNicolson(const DivergenceOperator& H, double tau);

  double tau() const { return tau_; }
  void step(Eigen::VectorXd& u) const;
  void implicit_half_step(Eigen::VectorXd& u) const;

 private:
  const DivergenceOperator* H_;
  double tau_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> factor_;
  Eigen::SparseMatrix<double> explicit_;
};

struct EvolveOptions {
  int steps = 100;
  /// Number of leading CN steps replaced by pairs of implicit half steps.
  int smoothing = 0;
};

/// e^{-tH} phi by Crank-Nicolson with `steps` uniform steps.
Eigen::VectorXd evolve(const DivergenceOperator& H, const Eigen::VectorXd& phi, double t, EvolveOptions opt = {});
/// States at each of the increasing times; `opt.steps` steps per interval, smoothing on the first one.
std::vector<Eigen::VectorXd> evolve_schedule(const DivergenceOperator& H, const Eigen::VectorXd& phi,
                                             std::span<const double> times, EvolveOptions opt = {});
/// e^{-tH} phi through the Krylov exponential of the symmetrized operator M^{-1/2} A M^{-1/2}.
Eigen::VectorXd evolve_krylov(const DivergenceOperator& H, const Eigen::VectorXd& phi, double t);

/// One column K_t(.; y) of the heat kernel, per unit volume.
struct KernelSlice {
  std::size_t source = 0;
  double t = 0.0;
  Eigen::VectorXd values;
  Eigen::VectorXd measure;
  double boundary_mass = 0.0;  ///< mass within two cells of the box boundary
  bool truncated = false;      ///< boundary_mass > 1e-6

  double total_mass() const { return values.dot(measure); }
  double at(std::size_t x) const { return values[static_cast<Eigen::Index>(x)]; }
};

inline constexpr double kBoundaryMassLimit = 1e-6;

EvolveOptions kernel_defaults();
KernelSlice kernel_column(const DivergenceOperator& H, const Grid& g, std::size_t y, double t,
                          EvolveOptions opt = kernel_defaults());
std::vector<KernelSlice> kernel_columns(const DivergenceOperator& H, const Grid& g, std::size_t y,
                                        std::span<const double> times, EvolveOptions opt = kernel_defaults());

/// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);
/// Least-squares slope of y against x.
double linear_slope(std::span<const double> x, std::span<const double> y);

struct CrossnormRow {
  double t = 0.0;
  double sup = 0.0;
  std::size_t argmax_source = 0;
  int excluded = 0;  ///< truncated columns left out
};

struct CrossnormScan {
  std::vector<CrossnormRow> rows;
  /// log-log slope of sup against t over rows with t in [t_lo, t_hi].
  double slope(double t_lo, double t_hi) const;
};

/// Cells adjacent to x1 = 0 at the middle of the x2 range, plus every `stride`-th x1 cell on the same line.
std::vector<std::size_t> degeneracy_sources(const Grid& g, int stride = 0);
CrossnormScan crossnorm_scan(const DivergenceOperator& H, const Grid& g, std::span<const std::size_t> sources,
                             std::span<const double> times, EvolveOptions opt = kernel_defaults());

/// Cells below this fraction of the slice maximum are treated as roundoff in ratio sups.
inline constexpr double kRelativeFloor = 1e-10;

/// sup_x K_t(x;y) (V(x,sqrt t) V(y,sqrt t))^{1/2} exp(D(x;y)^2 / (4(1+eps)t)).
double gaussian_ratio(const KernelSlice& slice, const Grid& g, const GrusinParams& p, double eps);

struct DiagonalSample {
  std::size_t y = 0;
  double t = 0.0;
};
struct OndiagResult {
  double min_ratio = 0.0;
  std::vector<double> ratios;
  int truncated = 0;
};
/// K_t(y;y) V(y, sqrt t) over the samples.
OndiagResult ondiag_lower_ratio(const DivergenceOperator& H, const Grid& g, const GrusinParams& p,
                                std::span<const DiagonalSample> samples, EvolveOptions opt = kernel_defaults());

/// Pure power coefficient |x|^{2 delta} on a 1D grid, unit mass started at the cell nearest -1/2.
struct SeparationResult {
  double transmitted = 0.0;   ///< mass in x > 0 at time t
  double mass_defect = 0.0;   ///< |total mass - 1|
  double argmax = 0.0;        ///< location of the kernel maximum
  double min_value = 0.0;
};
EvolveOptions separation_defaults();
SeparationResult separation_flux(double delta, double t, const Grid& g, EvolveOptions opt = separation_defaults());

struct GapResult {
  double gap = 0.0;             ///< sup |K_neumann - K_dirichlet_origin|
  double min_difference = 0.0;  ///< min (K_neumann - K_dirichlet_origin), >= 0 up to roundoff
};
GapResult dirichlet_neumann_gap(double delta, double t, const Grid& g, EvolveOptions opt = separation_defaults());

struct ApproximantRow {
  double cap = 0.0;
  double eps = 0.0;
  double l1_gap = 0.0;
  double l2_gap = 0.0;
};
/// ||(S^{(N,eps)}_t - S_t) phi|| for every (cap, eps) in the list.
std::vector<ApproximantRow> approximant_convergence(const Grid& g, const CoefficientField& c,
                                                    std::span<const std::pair<double, double>> caps_eps,
                                                    const Eigen::VectorXd& phi, double t,
                                                    EvolveOptions opt = kernel_defaults());

/// Degenerate operator versus its copy with coefficients frozen inside |x1| <= r/2.
struct ComparisonSetup {
  Grid grid;
  CoefficientField field;
  double r = 2.0;
  std::vector<std::size_t> patch;    ///< the set A
  std::vector<std::size_t> sources;  ///< kernel columns taken, a subset of A
  double rho = 0.0;                  ///< distance from A to the modification region
};

/// Builds the setup for A = cells with |x1 - center| < half_width; rho is the graph distance
/// (frozen metric) from A to {|x1| <= r/2}. Throws when rho = 0.
ComparisonSetup make_comparison(Grid g, CoefficientField field, double r, double center, double half_width,
                                int max_sources = 3);

struct ComparisonRow {
  double t = 0.0;
  double measured = 0.0;  ///< sup_{x,y in A} |K1 - K2|
  double shape = 0.0;     ///< V(t^2/rho^2)^{-1} (rho^2/t)^{-1/2} e^{-rho^2/(4t)}
};
struct ComparisonResult {
  std::vector<ComparisonRow> rows;
  double rho = 0.0;
  double slope = 0.0;           ///< fitted slope of log(measured) against 1/t
  double expected_slope = 0.0;  ///< -rho^2/4
  double fitted_constant = 0.0; ///< max measured/shape
  bool monotone = true;         ///< measured increasing in t
};
ComparisonResult compare_kernels(const ComparisonSetup& s, std::span<const double> times,
                                 EvolveOptions opt = kernel_defaults());

struct DaviesGaffneyResult {
  double distance = 0.0;
  double lhs = 0.0;    ///< (1_A, S_t 1_B)
  double bound = 0.0;  ///< exp(-((1-eta) d)^2/(4t)) ||1_A|| ||1_B||
  /// lhs <= bound + kRelativeFloor ||1_A|| ||1_B||. Below the floor the lattice semigroup has
  /// Poisson-type tails (d h / t large) and the Gaussian comparison is not resolved.
  bool holds = false;
  bool strict = false;  ///< lhs <= bound with no floor
};
DaviesGaffneyResult davies_gaffney_check(const DivergenceOperator& H, const DistanceOracle& oracle,
                                         std::span<const std::size_t> A, std::span<const std::size_t> B, double t,
                                         double eta = 0.1, EvolveOptions opt = kernel_defaults());

struct CauchySchwarzResult {
  double kxy = 0.0;
  double kxx = 0.0;
  double kyy = 0.0;
  bool holds = false;
};
/// Set-averaged kernel values K_t(X;Y) = |X|^{-1}|Y|^{-1} (1_X, S_t 1_Y).
CauchySchwarzResult kernel_cauchy_schwarz(const DivergenceOperator& H, const Grid& g,
                                          std::span<const std::size_t> X, std::span<const std::size_t> Y, double t,
                                          EvolveOptions opt = kernel_defaults());

}  // namespace grusin
