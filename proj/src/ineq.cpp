#include "grusin/ineq.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <unsupported/Eigen/FFT>

namespace grusin {

namespace {

double clamp0(double x) { return x > 0.0 ? x : 0.0; }

Eigen::MatrixXd symmetrized_dense(const DivergenceOperator& H) {
  const Eigen::VectorXd is = H.mass.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd S = Eigen::MatrixXd(H.stiffness);
  S = is.asDiagonal() * S * is.asDiagonal();
  return 0.5 * (S + S.transpose());
}

Eigen::MatrixXd gaussian(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd G(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) G(i, j) = normal(rng);
  }
  return G;
}

}  // namespace

HardyResult hardy_constant(HardySpace space, double gamma, const Grid& g) {
  if (g.m() != 0) throw std::invalid_argument("hardy_constant: needs a grid with m = 0");
  const int n = g.n();
  Boundary bc = Boundary::dirichlet_box();
  if (space == HardySpace::half_line_dirichlet) {
    if (n != 1 || gamma != 1.0) throw std::invalid_argument("hardy_constant: half line variant needs n = 1, gamma = 1");
    bc.origin = OriginCondition::dirichlet;
  } else if (!(gamma >= 0.0 && gamma <= 1.0 && gamma < 0.5 * n)) {
    throw std::invalid_argument("hardy_constant: need 0 <= gamma <= 1 and gamma < n/2");
  }
  HardyResult res;
  res.cells = g.size();
  if (gamma == 0.0) {
    res.constant = 1.0;
    res.converged = true;
    return res;
  }
  const DivergenceOperator L = assemble_laplacian(g, bc);
  Eigen::VectorXd radius(static_cast<Eigen::Index>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) radius[static_cast<Eigen::Index>(i)] = g.x1_norm(i);
  if (gamma == 1.0) {
    const Eigen::VectorXd w = L.mass.cwiseQuotient(radius.cwiseAbs2());
    const EigenEstimate e = smallest_generalized_eigenvalue(L.stiffness, w, 400, 1e-10);
    res.constant = e.value;
    res.converged = e.converged;
    return res;
  }
  if (g.size() > 4000) throw std::invalid_argument("hardy_constant: fractional case limited to 4000 cells");
  const Eigen::MatrixXd Sg = symmetric_function(symmetrized_dense(L), [gamma](double x) { return std::pow(clamp0(x), gamma); });
  const Eigen::VectorXd X = radius.array().pow(gamma);
  res.constant = min_eigenvalue(X.asDiagonal() * Sg * X.asDiagonal());
  res.converged = true;
  return res;
}

MatrixPair random_pair(int order, std::mt19937_64& rng) {
  if (order < 1) throw std::invalid_argument("random_pair: order must be positive");
  std::uniform_real_distribution<double> expo(-2.0, 2.0);
  const Eigen::MatrixXd G = gaussian(order, order, rng);
  const Eigen::MatrixXd K = gaussian(order, order, rng);
  const double sb = std::pow(10.0, expo(rng)) / order;
  const double sk = std::pow(10.0, expo(rng)) / order;
  MatrixPair p;
  p.B = sb * G * G.transpose();
  p.A = p.B + sk * K * K.transpose();
  return p;
}

bool pair_is_valid(const MatrixPair& pair, double tol) {
  const double scale = std::max(1.0, pair.A.norm());
  return min_eigenvalue(pair.B) >= -tol * scale && min_eigenvalue(pair.A - pair.B) >= -tol * scale;
}

MatrixCheck operator_monotone_check(const MatrixPair& pair, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("operator_monotone_check: gamma in [0,1]");
  auto f = [gamma](double x) { return clamp0(x) * std::pow(1.0 + clamp0(x), -gamma); };
  const Eigen::MatrixXd fa = symmetric_function(pair.A, f);
  const Eigen::MatrixXd fb = symmetric_function(pair.B, f);
  return {min_eigenvalue(fa - fb), std::max(1.0, fa.norm())};
}

MatrixCheck sqrt_subadditivity_check(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int k) {
  if (k < 1) throw std::invalid_argument("sqrt_subadditivity_check: k must be >= 1");
  const double p = std::ldexp(1.0, -k);
  auto f = [p](double x) { return std::pow(clamp0(x), p); };
  const Eigen::MatrixXd fab = symmetric_function(A + B, f);
  const Eigen::MatrixXd rhs = std::pow(2.0, p - 1.0) * (symmetric_function(A, f) + symmetric_function(B, f));
  return {min_eigenvalue(fab - rhs), std::max(1.0, fab.norm())};
}

MultiplierSpec MultiplierSpec::elliptic(int dim, double mu) {
  if (dim < 1 || !(mu > 0.0)) throw std::invalid_argument("elliptic multiplier: need dim >= 1, mu > 0");
  MultiplierSpec s;
  s.kind = Kind::elliptic;
  s.params = {dim, 0, 0.0, 0.0, 0.0, 0.0};
  s.mu = mu;
  return s;
}

MultiplierSpec MultiplierSpec::grusin(const GrusinParams& p) {
  p.validate();
  MultiplierSpec s;
  s.kind = Kind::grusin;
  s.params = p;
  return s;
}

double MultiplierSpec::x1_part(double L) const {
  const double d1 = params.d1, d1p = params.d1p;
  if (d1 >= d1p) return std::pow(L, 1.0 - d1p) * std::pow(1.0 + L, -(d1 - d1p));
  return std::pow(L, 1.0 - d1) + std::pow(L, 1.0 - d1p);
}

double MultiplierSpec::x2_part(double L) const {
  const DerivedExponents e = derive_exponents(params);
  return std::pow(L, e.alphap) * std::pow(1.0 + L, e.alpha - e.alphap);
}

double MultiplierSpec::operator()(std::span<const double> p, std::span<const double> h) const {
  const int d = dimension();
  if (p.size() != static_cast<std::size_t>(d)) throw std::invalid_argument("multiplier: frequency dimension mismatch");
  if (discrete_symbol && h.size() != p.size()) throw std::invalid_argument("multiplier: discrete symbol needs spacings");
  auto sym = [&](int k) {
    const double pk = p[static_cast<std::size_t>(k)];
    if (!discrete_symbol) return pk * pk;
    const double hk = h[static_cast<std::size_t>(k)];
    return (2.0 - 2.0 * std::cos(hk * pk)) / (hk * hk);
  };
  double L1 = 0.0, L2 = 0.0;
  for (int k = 0; k < params.n; ++k) L1 += sym(k);
  for (int k = params.n; k < d; ++k) L2 += sym(k);
  double value = 0.0;
  if (kind == Kind::elliptic) {
    value = mu * (L1 + L2);
  } else {
    value = x1_part(L1) + (params.m > 0 ? x2_part(L2) : 0.0);
  }
  return scale * value;
}

VfResult vf_volume(const MultiplierSpec& F, double r, const FrequencyBox& box) {
  const int d = F.dimension();
  if (box.half_width.size() != static_cast<std::size_t>(d) || box.cells.size() != box.half_width.size()) {
    throw std::invalid_argument("vf_volume: frequency box dimension mismatch");
  }
  if (!(r > 0.0)) throw std::invalid_argument("vf_volume: r must be positive");
  std::vector<double> width(static_cast<std::size_t>(d));
  std::size_t total = 1;
  double cell = 1.0;
  for (int k = 0; k < d; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    width[ku] = 2.0 * box.half_width[ku] / box.cells[ku];
    cell *= width[ku];
    total *= static_cast<std::size_t>(box.cells[ku]);
  }
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  std::vector<double> p(static_cast<std::size_t>(d));
  std::vector<double> h(static_cast<std::size_t>(d), 1.0);
  std::size_t count = 0;
  const double r2 = r * r;
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    bool edge = false;
    for (int k = d - 1; k >= 0; --k) {
      const auto ku = static_cast<std::size_t>(k);
      idx[ku] = static_cast<int>(rem % static_cast<std::size_t>(box.cells[ku]));
      rem /= static_cast<std::size_t>(box.cells[ku]);
      p[ku] = -box.half_width[ku] + (idx[ku] + 0.5) * width[ku];
      edge = edge || idx[ku] == 0 || idx[ku] == box.cells[ku] - 1;
    }
    if (F(p, h) < r2) {
      if (edge) throw std::invalid_argument("vf_volume: sublevel set exceeds the frequency box");
      ++count;
    }
  }
  VfResult res;
  res.volume = static_cast<double>(count) * cell;
  res.closed_form = std::numeric_limits<double>::quiet_NaN();
  const DerivedExponents e = derive_exponents(F.params);
  if (F.kind == MultiplierSpec::Kind::elliptic) {
    res.shape = std::pow(r, d);
    if (!F.discrete_symbol) {
      const double radius = r / std::sqrt(F.mu * F.scale);
      res.closed_form = std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0) * std::pow(radius, d);
    }
  } else {
    res.shape = eval_piecewise_power(r, {e.Dp, e.D});
    const GrusinParams c = GrusinParams::classical();
    const GrusinParams& q = F.params;
    const bool classical = q.n == c.n && q.m == c.m && q.d1 == c.d1 && q.d1p == c.d1p && q.d2 == c.d2 && q.d2p == c.d2p;
    if (classical && !F.discrete_symbol) {
      const double R = r / std::sqrt(F.scale);
      res.closed_form = 8.0 * R * R * R / 3.0;
    }
  }
  return res;
}

PeriodicSpectrum::PeriodicSpectrum(const Grid& g) : grid_(g) {
  for (int k = 0; k < g.dim(); ++k) {
    const Axis& ax = g.axis(k);
    if (!ax.is_uniform()) throw std::invalid_argument("PeriodicSpectrum: axes must be uniform");
    const int N = ax.size();
    std::vector<double> f(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) {
      const int ki = i < N / 2 ? i : i - N;
      f[static_cast<std::size_t>(i)] = 2.0 * std::numbers::pi * ki / (2.0 * ax.half_width());
    }
    freq_.push_back(std::move(f));
  }
}

Eigen::VectorXd PeriodicSpectrum::evaluate(const MultiplierSpec& F) const {
  const int d = grid_.dim();
  if (F.dimension() != d) throw std::invalid_argument("PeriodicSpectrum: multiplier dimension mismatch");
  std::vector<double> h(static_cast<std::size_t>(d)), p(static_cast<std::size_t>(d));
  for (int k = 0; k < d; ++k) h[static_cast<std::size_t>(k)] = grid_.axis(k).width(0);
  Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
  for (std::size_t i = 0; i < size(); ++i) {
    for (int k = 0; k < d; ++k) p[static_cast<std::size_t>(k)] = freq_[static_cast<std::size_t>(k)][static_cast<std::size_t>(grid_.coord(i, k))];
    out[static_cast<Eigen::Index>(i)] = F(p, h);
  }
  return out;
}

std::size_t PeriodicSpectrum::count_below(const MultiplierSpec& F, double r) const {
  const Eigen::VectorXd v = evaluate(F);
  return static_cast<std::size_t>((v.array() < r * r).count());
}

Eigen::VectorXd PeriodicSpectrum::apply(const Eigen::VectorXd& mult, const Eigen::VectorXd& x) const {
  using cplx = std::complex<double>;
  const std::size_t N = size();
  std::vector<cplx> data(N);
  for (std::size_t i = 0; i < N; ++i) data[i] = x[static_cast<Eigen::Index>(i)];
  Eigen::FFT<double> fft;
  auto transform = [&](bool forward) {
    for (int k = 0; k < grid_.dim(); ++k) {
      const int len = grid_.axis(k).size();
      const std::size_t stride = grid_.stride(k);
      std::vector<cplx> line(static_cast<std::size_t>(len)), out;
      for (std::size_t start = 0; start < N; ++start) {
        if (grid_.coord(start, k) != 0) continue;
        for (int j = 0; j < len; ++j) line[static_cast<std::size_t>(j)] = data[start + static_cast<std::size_t>(j) * stride];
        if (forward) {
          fft.fwd(out, line);
        } else {
          fft.inv(out, line);
        }
        for (int j = 0; j < len; ++j) data[start + static_cast<std::size_t>(j) * stride] = out[static_cast<std::size_t>(j)];
      }
    }
  };
  transform(true);
  for (std::size_t i = 0; i < N; ++i) data[i] *= mult[static_cast<Eigen::Index>(i)];
  transform(false);
  Eigen::VectorXd y(static_cast<Eigen::Index>(N));
  for (std::size_t i = 0; i < N; ++i) y[static_cast<Eigen::Index>(i)] = data[i].real();
  return y;
}

double PeriodicSpectrum::form(const Eigen::VectorXd& F_values, const Eigen::VectorXd& phi) const {
  return phi.dot(apply(F_values, phi)) * grid_.volume(0);
}

SubellipticResult subelliptic_constant(const DivergenceOperator& H, const MultiplierSpec& F, const Grid& g) {
  if (H.boundary.box != BoxCondition::periodic) throw std::invalid_argument("subelliptic_constant: operator must be periodic");
  if (H.size() != static_cast<Eigen::Index>(g.size())) throw std::invalid_argument("subelliptic_constant: grid mismatch");
  const PeriodicSpectrum spec(g);
  const Eigen::VectorXd Fv = spec.evaluate(F);
  if (Fv.maxCoeff() <= 0.0) throw std::invalid_argument("subelliptic_constant: multiplier vanishes identically");
  const Eigen::VectorXd root = Fv.cwiseMax(0.0).cwiseSqrt();
  const double sh = std::sqrt(g.volume(0));

  // pin cell 0 so the factorization inverts A on mean-zero vectors
  Eigen::SparseMatrix<double> Ap = H.stiffness;
  Ap.prune([](Eigen::Index i, Eigen::Index j, double) { return i != 0 && j != 0; });
  Ap.coeffRef(0, 0) = 1.0;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(Ap);
  if (ldlt.info() != Eigen::Success) throw std::runtime_error("subelliptic_constant: factorization failed");

  const LinearMap op = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::VectorXd y = sh * spec.apply(root, x);
    y[0] = 0.0;
    Eigen::VectorXd z = ldlt.solve(y);
    z.array() -= z.mean();
    return sh * spec.apply(root, z);
  };
  const EigenEstimate e = lanczos_largest(op, H.size(), 300, 1e-9, 11);
  return {1.0 / e.value, e.iterations, e.converged};
}

NashResult nash_check(const DivergenceOperator& H, const MultiplierSpec& F, const PeriodicSpectrum& spectrum,
                      const Eigen::VectorXd& phi, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("nash_check: r must be positive");
  if (phi.size() != H.size()) throw std::invalid_argument("nash_check: size mismatch");
  const double l1 = phi.cwiseAbs().dot(H.mass);
  NashResult res;
  res.lhs = phi.cwiseAbs2().dot(H.mass);
  const double count = static_cast<double>(spectrum.count_below(F, r));
  res.rhs = H.form(phi) / (r * r) + count / spectrum.grid().total_volume() * l1 * l1;
  return res;
}

double dense_pencil_min(const Eigen::MatrixXd& A, const Eigen::MatrixXd& G, const Eigen::MatrixXd& K) {
  const Eigen::Index N = A.rows();
  const Eigen::Index r = K.cols();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(K);
  const Eigen::MatrixXd Q = qr.householderQ();
  const Eigen::MatrixXd Qc = Q.rightCols(N - r);
  const Eigen::MatrixXd cross = Qc.transpose() * A * K;
  const Eigen::MatrixXd Akk = K.transpose() * A * K;
  const Eigen::MatrixXd pinv = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(Akk).pseudoInverse();
  Eigen::MatrixXd S = Qc.transpose() * A * Qc - cross * pinv * cross.transpose();
  Eigen::MatrixXd Gy = Qc.transpose() * G * Qc;
  S = 0.5 * (S + S.transpose()).eval();
  Gy = 0.5 * (Gy + Gy.transpose()).eval();
  return min_generalized_eigenvalue(S, Gy);
}

namespace {

// M^{1/2} F1(M^{-1/2} L M^{-1/2}) M^{1/2}
Eigen::MatrixXd multiplier_form(const Eigen::MatrixXd& L, const Eigen::VectorXd& mass, const MultiplierSpec& F) {
  const Eigen::VectorXd s = mass.cwiseSqrt();
  const Eigen::VectorXd is = s.cwiseInverse();
  Eigen::MatrixXd S = is.asDiagonal() * L * is.asDiagonal();
  S = 0.5 * (S + S.transpose()).eval();
  const Eigen::MatrixXd f = symmetric_function(S, [&F](double x) { return F.x1_part(clamp0(x)); });
  return s.asDiagonal() * f * s.asDiagonal();
}

}  // namespace

NeumannSubellipticResult neumann_subelliptic_check(double d1, double d1p, const Grid& g) {
  if (!(d1 >= 0.5 && d1 < 1.0)) throw std::invalid_argument("neumann_subelliptic_check: needs d1 in [1/2,1); use subelliptic_constant");
  if (g.n() != 1 || g.m() != 0) throw std::invalid_argument("neumann_subelliptic_check: needs a 1D grid");
  if (g.size() > 2000) throw std::invalid_argument("neumann_subelliptic_check: limited to 2000 cells");
  const GrusinParams p{1, 0, d1, d1p, 0.0, 0.0};
  const CoefficientField field(p, Representative::smooth);
  const MultiplierSpec F = MultiplierSpec::grusin(p);
  const Eigen::MatrixXd A = Eigen::MatrixXd(assemble(g, field, Boundary::neumann_box()).stiffness);
  const DivergenceOperator Ln = assemble_laplacian(g, Boundary::neumann_origin());
  const DivergenceOperator Lf = assemble_laplacian(g, Boundary::neumann_box());
  const Eigen::MatrixXd Gn = multiplier_form(Eigen::MatrixXd(Ln.stiffness), Ln.mass, F);
  const Eigen::MatrixXd Gf = multiplier_form(Eigen::MatrixXd(Lf.stiffness), Lf.mass, F);

  const Eigen::Index N = A.rows();
  const Eigen::Index half = g.axis(0).origin_face();
  Eigen::MatrixXd Kn = Eigen::MatrixXd::Zero(N, 2);
  Kn.col(0).head(half).setOnes();
  Kn.col(1).tail(N - half).setOnes();
  const Eigen::MatrixXd Kf = Eigen::MatrixXd::Ones(N, 1);

  NeumannSubellipticResult res;
  res.neumann_constant = dense_pencil_min(A, Gn, Kn);
  res.full_line_constant = dense_pencil_min(A, Gf, Kf);

  // independent half-line forms on a fixed test vector
  const Eigen::MatrixXd Lnd = Eigen::MatrixXd(Ln.stiffness);
  const Eigen::MatrixXd Gm = multiplier_form(Lnd.topLeftCorner(half, half), Ln.mass.head(half), F);
  const Eigen::MatrixXd Gp = multiplier_form(Lnd.bottomRightCorner(N - half, N - half), Ln.mass.tail(N - half), F);
  Eigen::VectorXd phi(N);
  for (Eigen::Index i = 0; i < N; ++i) phi[i] = std::sin(0.37 * static_cast<double>(i) + 0.2) + 0.1 * static_cast<double>(i % 7);
  const double whole = phi.dot(Gn * phi);
  const double split = phi.head(half).dot(Gm * phi.head(half)) + phi.tail(N - half).dot(Gp * phi.tail(N - half));
  res.decoupling_defect = std::abs(whole - split) / std::abs(whole);
  return res;
}

}  // namespace grusin
