#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "grusin/geometry.hpp"
#include "grusin/operator.hpp"

namespace grusin {

/// Upper spectral estimate for H = M^{-1} A: power iteration to 1e-3 relative change,
/// raised to the Lanczos top Ritz value when that is larger, then inflated by 5%.
double lambda_max(const DivergenceOperator& H);

struct ChebyshevOptions {
  double lambda_max = 0.0;  ///< 0: estimate with lambda_max(H)
  int degree = 0;           ///< polynomial degree in sqrt(H); 0: ceil(e w / 2) + 40 with w = |t| sqrt(lambda_max)
};

/// Smallest admissible Chebyshev degree e |t| sqrt(lambda_max) / 2.
double minimal_chebyshev_degree(double t, double lambda_max);

/// cos(t sqrt(H)) phi through cos(w x) = J_0(w) + 2 sum_k (-1)^k J_{2k}(w) T_k(2x^2 - 1).
Eigen::VectorXd cosine_evolve(const DivergenceOperator& H, const Eigen::VectorXd& phi, double t,
                              ChebyshevOptions opt = {});

/// Leapfrog state for u'' = -H u.
struct WaveState {
  Eigen::VectorXd current;
  Eigen::VectorXd previous;
  double tau = 0.0;
  double elapsed = 0.0;
  double energy = 0.0;  ///< |(u^{k+1}-u^k)/tau|_M^2 + (u^{k+1})^T A u^k, conserved exactly by the scheme
};

struct LeapfrogResult {
  Eigen::VectorXd u;
  double energy_drift = 0.0;  ///< max relative energy change per unit time
  int steps = 0;
};

/// Leapfrog u^{k+1} = 2u^k - u^{k-1} - tau^2 H u^k with the symmetric start
/// u^1 = u^{-1} = phi - tau^2/2 H phi. Rejects tau > 2/sqrt(lambda_max).
LeapfrogResult leapfrog_evolve(const DivergenceOperator& H, const Eigen::VectorXd& phi, double t, double tau,
                               double lambda_max_estimate = 0.0);

struct LeakageResult {
  double leakage = 0.0;  ///< |cos(t sqrt H) 1_A|^2 outside the inflated set / |1_A|^2
  std::size_t inflated_cells = 0;
};

/// Inflated set {x : d(x;A) <= (1+eta) t}; throws when it reaches the box boundary.
LeakageResult propagation_leakage(const DivergenceOperator& H, const DistanceOracle& oracle,
                                  std::span<const std::size_t> A, double t, double eta = 0.1,
                                  ChebyshevOptions opt = {});

struct LocalEqualityResult {
  double difference = 0.0;  ///< sup |cos(t sqrt H1) 1_A - cos(t sqrt H2) 1_A|
  double ratio_to_rho = 0.0;
};

/// Compares the two wave evolutions of 1_A. Requires |t| <= (1-eta) rho unless `contrast`
/// is set, in which case any t is accepted (used to show the difference switching on).
LocalEqualityResult local_equality_check(const DivergenceOperator& H1, const DivergenceOperator& H2,
                                         std::span<const std::size_t> A, double rho, double t, double eta = 0.1,
                                         bool contrast = false);

/// |2 cos(t)(cos(t) phi) - phi - cos(2t) phi| / |phi| in the M-norm.
double double_angle_defect(const DivergenceOperator& H, const Eigen::VectorXd& phi, double t);

}  // namespace grusin
