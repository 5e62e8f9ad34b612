#pragma once

#include <span>
#include <string>

namespace grusin {

/// Exponent pair for the piecewise power a^(small, large): a^small on (0,1], a^large on [1,inf).
struct ExponentPair {
  double small = 0.0;
  double large = 0.0;

  ExponentPair operator-() const { return {-small, -large}; }
  ExponentPair operator*(double s) const { return {small * s, large * s}; }
};

/// Evaluates a^(e.small, e.large). Throws std::domain_error for a <= 0.
double eval_piecewise_power(double a, ExponentPair e);

/// Same as eval_piecewise_power but extended to a = 0 by continuity for
/// non-negative small exponents (0^0 = 1).
double eval_piecewise_power_or_zero(double a, ExponentPair e);

/// Exponent tuple of a Grusin-type operator on R^n x R^m.
///
/// The x1 block carries the coefficient c_{d1,d1p}(x1), the x2 block the
/// coefficient c_{d2,d2p}(x1); both depend only on |x1|.
struct GrusinParams {
  int n = 1;
  int m = 0;
  double d1 = 0.0;
  double d1p = 0.0;
  double d2 = 0.0;
  double d2p = 0.0;

  /// Throws std::invalid_argument when the tuple is out of range.
  void validate() const;
  int dimension() const { return n + m; }
  std::string to_string() const;

  /// n = m = 1, delta = (0, 0, 1, 1): -d_1^2 - x_1^2 d_2^2.
  static GrusinParams classical();
  /// n = 1, m = 0, delta_1 = delta, delta_1' = 0.
  static GrusinParams one_dimensional(double delta);
};

struct DerivedExponents {
  double D = 0.0;
  double Dp = 0.0;
  double beta = 0.0;
  double betap = 0.0;
  double rho = 1.0;
  double rhop = 1.0;
  double gamma = 0.0;
  double gammap = 0.0;
  double alpha = 1.0;
  double alphap = 1.0;
  double sigma = 1.0;
  double sigmap = 1.0;

  double doubling_dimension() const;
};

DerivedExponents derive_exponents(const GrusinParams& p);

enum class Representative { smooth, pure_power, example_1d };
enum class Block { x1, x2 };

Representative parse_representative(const std::string& name);
std::string to_string(Representative r);

/// Block-diagonal coefficient family c_{d,d'} depending only on |x1|.
///
/// smooth:     |x|^{2d} (1+|x|^2)^{d'-d}
/// pure_power: |x|^{(2d, 2d')}
/// example_1d: (x^2/(1+x^2))^{d1}; requires n = 1, m = 0, d1' = 0.
class CoefficientField {
 public:
  CoefficientField(GrusinParams params, Representative rep);

  const GrusinParams& params() const { return params_; }
  Representative representative() const { return rep_; }

  /// Coefficient of the given block at radius |x1| = r >= 0.
  double radial(Block block, double r) const;
  /// Coefficient at the point x1 in R^n. x2_block with m = 0 throws std::logic_error.
  double operator()(Block block, std::span<const double> x1) const;

 private:
  GrusinParams params_;
  Representative rep_;
};

}  // namespace grusin
