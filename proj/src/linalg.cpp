#include "grusin/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

namespace grusin {

namespace {

Eigen::VectorXd random_unit(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v.normalized();
}

// Krylov basis of a symmetric map, fully reorthogonalized.
struct LanczosBasis {
  std::vector<Eigen::VectorXd> q;
  std::vector<double> alpha, beta;  // beta[k] couples q[k] and q[k+1]
  bool breakdown = false;

  void extend(const LinearMap& op) {
    const Eigen::VectorXd& v = q.back();
    Eigen::VectorXd w = op(v);
    const double a = v.dot(w);
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& u : q) w -= u.dot(w) * u;
    }
    const double b = w.norm();
    alpha.push_back(a);
    beta.push_back(b);
    if (b <= 1e-14 * std::max(1.0, std::abs(a))) {
      breakdown = true;
      return;
    }
    q.push_back(w / b);
  }

  Eigen::MatrixXd tridiagonal() const {
    const auto k = static_cast<Eigen::Index>(alpha.size());
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      T(i, i) = alpha[static_cast<std::size_t>(i)];
      if (i + 1 < k) T(i, i + 1) = T(i + 1, i) = beta[static_cast<std::size_t>(i)];
    }
    return T;
  }
};

}  // namespace

EigenEstimate lanczos_largest(const LinearMap& op, Eigen::Index n, int max_iter, double tol, std::uint64_t seed) {
  if (n <= 0) throw std::invalid_argument("lanczos_largest: empty operator");
  LanczosBasis basis;
  basis.q.push_back(random_unit(n, seed));
  EigenEstimate est;
  const int limit = static_cast<int>(std::min<Eigen::Index>(max_iter, n));
  for (int it = 1; it <= limit; ++it) {
    basis.extend(op);
    if (it % 5 != 0 && it != limit && !basis.breakdown) continue;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(basis.tridiagonal());
    const Eigen::Index top = es.eigenvalues().size() - 1;
    est.value = es.eigenvalues()[top];
    est.iterations = it;
    est.residual = std::abs(basis.beta.back() * es.eigenvectors()(top, top)) / std::max(std::abs(est.value), 1e-300);
    if (basis.breakdown || est.residual < tol) {
      est.converged = true;
      break;
    }
  }
  return est;
}

EigenEstimate power_largest(const LinearMap& op, Eigen::Index n, double tol, int max_iter, std::uint64_t seed) {
  Eigen::VectorXd v = random_unit(n, seed);
  EigenEstimate est;
  double prev = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    Eigen::VectorXd w = op(v);
    const double rq = v.dot(w);
    const double nw = w.norm();
    est.iterations = it;
    est.value = rq;
    if (nw == 0.0) {
      est.converged = true;
      break;
    }
    v = w / nw;
    if (it > 1 && std::abs(rq - prev) <= tol * std::abs(rq)) {
      est.converged = true;
      est.residual = std::abs(rq - prev) / std::abs(rq);
      break;
    }
    prev = rq;
  }
  return est;
}

EigenEstimate smallest_generalized_eigenvalue(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& w,
                                              int max_iter, double tol) {
  if (A.rows() != w.size()) throw std::invalid_argument("generalized eigenvalue: size mismatch");
  if (w.minCoeff() <= 0.0) throw std::invalid_argument("generalized eigenvalue: weights must be positive");
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
  if (ldlt.info() != Eigen::Success) throw std::runtime_error("generalized eigenvalue: factorization failed");
  if (ldlt.vectorD().minCoeff() <= 0.0) throw std::runtime_error("generalized eigenvalue: matrix not positive definite");
  const Eigen::VectorXd sw = w.cwiseSqrt();
  const LinearMap op = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::VectorXd y = ldlt.solve(sw.cwiseProduct(x));
    return sw.cwiseProduct(y);
  };
  EigenEstimate est = lanczos_largest(op, A.rows(), max_iter, tol);
  est.value = 1.0 / est.value;
  return est;
}

Eigen::MatrixXd symmetric_function(const Eigen::MatrixXd& S, const std::function<double(double)>& f) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success) throw std::runtime_error("symmetric_function: eigensolver failed");
  Eigen::VectorXd fv = es.eigenvalues().unaryExpr(f);
  return es.eigenvectors() * fv.asDiagonal() * es.eigenvectors().transpose();
}

double min_eigenvalue(const Eigen::MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double min_generalized_eigenvalue(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(A, B, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("min_generalized_eigenvalue: solver failed");
  return es.eigenvalues().minCoeff();
}

Eigen::VectorXd krylov_expm(const LinearMap& S, const Eigen::VectorXd& v, double t, int krylov_dim, double tol) {
  if (t < 0.0) throw std::invalid_argument("krylov_expm: t must be non-negative");
  Eigen::VectorXd w = v;
  double remaining = t;
  double tau = t;
  while (remaining > 0.0) {
    const double nw = w.norm();
    if (nw == 0.0) break;
    LanczosBasis basis;
    basis.q.push_back(w / nw);
    for (int k = 0; k < krylov_dim && !basis.breakdown; ++k) basis.extend(S);
    const Eigen::MatrixXd T = basis.tridiagonal();
    const auto k = T.rows();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    tau = std::min(tau, remaining);
    Eigen::VectorXd coef;
    while (true) {
      const Eigen::VectorXd ex = (-tau * es.eigenvalues()).array().exp();
      coef = es.eigenvectors() * ex.cwiseProduct(es.eigenvectors().row(0).transpose());
      const double err = basis.breakdown ? 0.0 : basis.beta.back() * std::abs(coef[k - 1]);
      if (err <= tol) break;
      tau *= 0.5;
      if (tau < 1e-14 * t) throw std::runtime_error("krylov_expm: step size underflow");
    }
    Eigen::VectorXd next = Eigen::VectorXd::Zero(w.size());
    for (Eigen::Index i = 0; i < k; ++i) next += coef[i] * basis.q[static_cast<std::size_t>(i)];
    w = nw * next;
    remaining -= tau;
    if (remaining < 1e-15 * t) break;
    tau *= 2.0;
  }
  return w;
}

}  // namespace grusin
