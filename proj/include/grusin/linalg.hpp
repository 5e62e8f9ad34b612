#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace grusin {

using LinearMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct EigenEstimate {
  double value = 0.0;
  int iterations = 0;
  double residual = 0.0;  ///< relative residual of the returned Ritz pair
  bool converged = false;
};

/// Largest eigenvalue of a symmetric map by Lanczos with full reorthogonalization.
EigenEstimate lanczos_largest(const LinearMap& op, Eigen::Index n, int max_iter = 300, double tol = 1e-10,
                              std::uint64_t seed = 1);

/// Largest eigenvalue of a symmetric positive semidefinite map by power iteration;
/// stops when the Rayleigh quotient changes by less than `tol` relative.
EigenEstimate power_largest(const LinearMap& op, Eigen::Index n, double tol = 1e-3, int max_iter = 10000,
                            std::uint64_t seed = 1);

/// Smallest eigenvalue of A phi = lambda W phi with A sparse symmetric positive definite and
/// W = diag(w), w > 0. Runs Lanczos on W^{1/2} A^{-1} W^{1/2}.
EigenEstimate smallest_generalized_eigenvalue(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& w,
                                              int max_iter = 300, double tol = 1e-10);

/// f(S) for a dense symmetric S through its eigendecomposition.
Eigen::MatrixXd symmetric_function(const Eigen::MatrixXd& S, const std::function<double(double)>& f);
double min_eigenvalue(const Eigen::MatrixXd& S);
/// Smallest lambda with A v = lambda B v; A symmetric, B symmetric positive definite.
double min_generalized_eigenvalue(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

/// exp(-t S) v for a symmetric positive semidefinite map S, by Lanczos with adaptive
/// sub-stepping. `krylov_dim` is the basis size per sub-step.
Eigen::VectorXd krylov_expm(const LinearMap& S, const Eigen::VectorXd& v, double t, int krylov_dim = 40,
                            double tol = 1e-11);

}  // namespace grusin
