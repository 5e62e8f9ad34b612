#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "grusin/geometry.hpp"
#include "grusin/heat.hpp"

using namespace grusin;

namespace {

Point pt(std::vector<double> x1, std::vector<double> x2 = {}) { return {std::move(x1), std::move(x2)}; }

CoefficientFunction unit() {
  return [](Block, std::span<const double>) { return 1.0; };
}

}  // namespace

TEST_CASE("explicit quasi-distance") {
  const GrusinParams e{1, 0, 0, 0, 0, 0};
  CHECK(delta_distance(e, pt({1.0}), pt({0.0})) == doctest::Approx(1.0));
  const GrusinParams c = GrusinParams::classical();
  CHECK(delta_distance(c, pt({0.0}, {0.0}), pt({0.0}, {1.0})) == doctest::Approx(1.0));

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2, 2);
  const GrusinParams q{2, 1, 0.25, 0.5, 0.5, 2};
  for (int k = 0; k < 100; ++k) {
    const Point a = pt({u(rng), u(rng)}, {u(rng)});
    const Point b = pt({u(rng), u(rng)}, {u(rng)});
    CHECK(delta_distance(q, a, b) == doctest::Approx(delta_distance(q, b, a)));
    CHECK(delta_distance(q, a, a) == doctest::Approx(0.0));
  }
}

TEST_CASE("quasi-distance is continuous across the branch boundary") {
  const GrusinParams c{1, 1, 0.25, 0.25, 0.5, 1.5};
  const auto e = derive_exponents(c);
  for (double x : {0.2, 0.7, 1.4}) {
    const double s = 2.0 * x;
    const double edge = eval_piecewise_power(s, {e.rho, e.rhop});
    const double below = delta_distance(c, pt({x}, {0.0}), pt({x}, {edge * (1 - 1e-9)}));
    const double above = delta_distance(c, pt({x}, {0.0}), pt({x}, {edge * (1 + 1e-9)}));
    CHECK(below == doctest::Approx(above).epsilon(1e-6));
  }
}

TEST_CASE("volume law") {
  const GrusinParams c = GrusinParams::classical();
  CHECK(volume_formula(c, pt({0.0}, {0.0}), 0.1) == doctest::Approx(1e-3));
  CHECK(volume_formula(c, pt({2.0}, {0.0}), 0.5) == doctest::Approx(0.5));
  CHECK(volume_regime(c, pt({2.0}, {0.0}), 0.5) == VolumeRegime::small_r);
  CHECK(volume_regime(c, pt({0.0}, {0.0}), 0.5) == VolumeRegime::large_r);
  const GrusinParams e{2, 1, 0, 0, 0, 0};
  for (double r : {0.01, 0.3, 5.0}) {
    CHECK(volume_formula(e, pt({0.7, -0.2}, {1.0}), r) == doctest::Approx(r * r * r));
  }
}

TEST_CASE("graph distance oracles") {
  const Grid g1(1, {Axis::uniform(2.0, 200)});
  const DistanceOracle o1(g1, unit());
  const double zero[] = {0.005}, one[] = {1.005};
  CHECK(o1.graph_distance(g1.locate(zero), g1.locate(one)) == doctest::Approx(1.0).epsilon(0.02));

  const Grid g2 = Grid::uniform(1, 1, 2.0, 200);
  const DistanceOracle o2(g2, unit());
  const double a[] = {0.01, 0.01}, b[] = {1.01, 1.01};
  CHECK(o2.graph_distance(g2.locate(a), g2.locate(b)) == doctest::Approx(std::sqrt(2.0)).epsilon(0.01));

  // pure power delta = 1/2: int_0^1 x^{-1/2} dx = 2
  const Grid g3(1, {Axis::uniform(1.5, 6000)});
  const DistanceOracle o3(g3, CoefficientField(GrusinParams::one_dimensional(0.5), Representative::pure_power));
  const double z[] = {1e-6}, x1[] = {1.0};
  CHECK(o3.graph_distance(g3.locate(z), g3.locate(x1)) == doctest::Approx(2.0).epsilon(0.05));

  const auto dist = o1.distances_from(g1.locate(zero), 0.5);
  CHECK(std::isinf(dist[0]));
  CHECK(dist[g1.locate(zero)] == 0.0);
}

TEST_CASE("numeric ball volumes") {
  const Grid g1(1, {Axis::uniform(2.0, 400)});
  const DistanceOracle o1(g1, unit());
  const double zero[] = {0.0};
  for (double r : {0.25, 0.5, 1.0}) {
    const BallEstimate b = o1.ball_volume_numeric(g1.locate(zero), r);
    CHECK(std::abs(b.volume_numeric - 2.0 * r) <= 0.01 + 1e-12);
    CHECK_FALSE(b.truncated);
  }
  CHECK(o1.ball_volume_numeric(g1.locate(zero), 3.0).truncated);

  const Grid ge(1, {Axis::uniform(2.0, 2000)});
  const DistanceOracle oe(ge, CoefficientField(GrusinParams::one_dimensional(0.25), Representative::example_1d));
  const double v = oe.ball_volume_numeric(ge.locate(zero), 0.5).volume_numeric;
  CHECK(v / std::pow(0.5, 4.0 / 3.0) > 0.5);
  CHECK(v / std::pow(0.5, 4.0 / 3.0) < 2.0);

  const Grid gc = Grid::uniform(1, 1, 1.5, 300);
  const DistanceOracle oc(gc, CoefficientField(GrusinParams::classical(), Representative::pure_power));
  const double origin[] = {0.0, 0.0};
  std::vector<double> rs, vs;
  for (double r = 0.3; r <= 1.0001; r *= 1.2) {
    rs.push_back(r);
    vs.push_back(oc.ball_volume_numeric(gc.locate(origin), r).volume_numeric);
  }
  CHECK(loglog_slope(rs, vs) == doctest::Approx(3.0).epsilon(0.1));
}

TEST_CASE("doubling report") {
  const GrusinParams e{1, 1, 0, 0, 0, 0};
  std::vector<DoublingSample> s{{pt({0.3}, {0.0}), 0.2, 3.0}, {pt({2.0}, {1.0}), 1.5, 1.0}};
  const auto r = doubling_report(e, s);
  CHECK(r.rows[0].ratio == doctest::Approx(9.0));
  CHECK(r.rows[1].ratio == doctest::Approx(1.0));
  CHECK(std::isnan(r.rows[1].exponent));

  const std::vector<DoublingSample> c{{pt({0.0}, {0.0}), 0.1, 2.0}};
  CHECK(doubling_report(GrusinParams::classical(), c).rows[0].ratio == doctest::Approx(8.0));

  // mixed regime: r small relative to |x1|, s r large
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ux(-2, 2), lr(-3, 0), ls(0, 3);
  std::vector<DoublingSample> mixed;
  for (int k = 0; k < 100; ++k) mixed.push_back({pt({ux(rng)}, {ux(rng)}), std::pow(10.0, lr(rng)), std::pow(10.0, ls(rng))});
  const auto m = doubling_report(GrusinParams::classical(), mixed);
  CHECK(m.max_constant <= 1.0 + 1e-12);
  std::vector<DoublingSample> bad{{pt({0.0}, {0.0}), 1.0, 0.5}};
  CHECK_THROWS(doubling_report(GrusinParams::classical(), bad));
}
