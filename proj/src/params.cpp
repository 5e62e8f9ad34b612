#include "grusin/params.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace grusin {

double eval_piecewise_power(double a, ExponentPair e) {
  if (!(a > 0.0)) {
    throw std::domain_error("eval_piecewise_power: argument must be positive");
  }
  // log-space so that tiny |x| with large exponents underflows to 0 instead of NaN
  const double la = std::log(a);
  return std::exp((a <= 1.0 ? e.small : e.large) * la);
}

double eval_piecewise_power_or_zero(double a, ExponentPair e) {
  if (a == 0.0) {
    if (e.small < 0.0) {
      throw std::domain_error("eval_piecewise_power_or_zero: 0 to a negative power");
    }
    return e.small == 0.0 ? 1.0 : 0.0;
  }
  return eval_piecewise_power(a, e);
}

void GrusinParams::validate() const {
  if (n < 1) throw std::invalid_argument("GrusinParams: n must be >= 1");
  if (m < 0) throw std::invalid_argument("GrusinParams: m must be >= 0");
  if (!(d1 >= 0.0 && d1 < 1.0) || !(d1p >= 0.0 && d1p < 1.0)) {
    throw std::invalid_argument("GrusinParams: delta_1, delta_1' must lie in [0,1)");
  }
  if (!(d2 >= 0.0) || !(d2p >= 0.0)) {
    throw std::invalid_argument("GrusinParams: delta_2, delta_2' must be non-negative");
  }
}

std::string GrusinParams::to_string() const {
  std::ostringstream os;
  os << "(n=" << n << ",m=" << m << ",d1=" << d1 << ",d1p=" << d1p << ",d2=" << d2
     << ",d2p=" << d2p << ")";
  return os.str();
}

GrusinParams GrusinParams::classical() { return {1, 1, 0.0, 0.0, 1.0, 1.0}; }

GrusinParams GrusinParams::one_dimensional(double delta) {
  return {1, 0, delta, 0.0, 0.0, 0.0};
}

double DerivedExponents::doubling_dimension() const { return std::max(D, Dp); }

DerivedExponents derive_exponents(const GrusinParams& p) {
  p.validate();
  DerivedExponents e;
  e.rho = 1.0 + p.d2 - p.d1;
  e.rhop = 1.0 + p.d2p - p.d1p;
  e.D = (p.n + p.m * e.rho) / (1.0 - p.d1);
  e.Dp = (p.n + p.m * e.rhop) / (1.0 - p.d1p);
  e.beta = p.n * p.d1 + p.m * p.d2;
  e.betap = p.n * p.d1p + p.m * p.d2p;
  e.gamma = p.d2 / e.rho;
  e.gammap = p.d2p / e.rhop;
  e.alpha = (1.0 - p.d1) / e.rho;
  e.alphap = (1.0 - p.d1p) / e.rhop;
  e.sigma = 1.0 / (1.0 - p.d1);
  e.sigmap = 1.0 / (1.0 - p.d1p);
  return e;
}

Representative parse_representative(const std::string& name) {
  if (name == "smooth") return Representative::smooth;
  if (name == "pure_power") return Representative::pure_power;
  if (name == "example_1d") return Representative::example_1d;
  throw std::invalid_argument("unknown coefficient representative '" + name + "'");
}

std::string to_string(Representative r) {
  switch (r) {
    case Representative::smooth: return "smooth";
    case Representative::pure_power: return "pure_power";
    case Representative::example_1d: return "example_1d";
  }
  return "?";
}

CoefficientField::CoefficientField(GrusinParams params, Representative rep)
    : params_(params), rep_(rep) {
  params_.validate();
  if (rep_ == Representative::example_1d &&
      (params_.n != 1 || params_.m != 0 || params_.d1p != 0.0)) {
    throw std::invalid_argument("example_1d representative requires n=1, m=0, delta_1'=0");
  }
}

namespace {

double smooth_coefficient(double r, double d, double dp) {
  if (r == 0.0) return d > 0.0 ? 0.0 : 1.0;
  const double lr = std::log(r);
  return std::exp(2.0 * d * lr + (dp - d) * std::log1p(r * r));
}

}  // namespace

double CoefficientField::radial(Block block, double r) const {
  if (block == Block::x2 && params_.m == 0) {
    throw std::logic_error("coefficient: x2 block requested but m = 0");
  }
  const double d = block == Block::x1 ? params_.d1 : params_.d2;
  const double dp = block == Block::x1 ? params_.d1p : params_.d2p;
  switch (rep_) {
    case Representative::smooth:
      return smooth_coefficient(r, d, dp);
    case Representative::pure_power:
      return eval_piecewise_power_or_zero(r, {2.0 * d, 2.0 * dp});
    case Representative::example_1d: {
      if (r == 0.0) return d > 0.0 ? 0.0 : 1.0;
      const double r2 = r * r;
      return std::pow(r2 / (1.0 + r2), d);
    }
  }
  return 0.0;
}

double CoefficientField::operator()(Block block, std::span<const double> x1) const {
  double r2 = 0.0;
  for (double v : x1) r2 += v * v;
  return radial(block, std::sqrt(r2));
}

}  // namespace grusin
