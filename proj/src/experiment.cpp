#include "grusin/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <yaml-cpp/yaml.h>

#include "grusin/geometry.hpp"
#include "grusin/heat.hpp"
#include "grusin/ineq.hpp"
#include "grusin/operator.hpp"
#include "grusin/wave.hpp"

namespace grusin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------- helpers

std::vector<double> logspace(double lo, double hi, int count) {
  std::vector<double> out;
  for (int k = 0; k < count; ++k) {
    const double s = count == 1 ? 0.0 : static_cast<double>(k) / (count - 1);
    out.push_back(std::pow(10.0, lo + s * (hi - lo)));
  }
  return out;
}

double rel_change(double a, double b) { return std::abs(b - a) / std::abs(a); }

int as_int(double v, const std::string& what) {
  if (!std::isfinite(v) || v != std::floor(v)) throw std::invalid_argument(what + ": expected an integer");
  return static_cast<int>(v);
}

class Recorder {
 public:
  explicit Recorder(VerificationReport& r) : r_(r) {}
  void measure(const std::string& name, double v) { r_.measured[name] = v; }
  void check(const std::string& name, double v, double lo, double hi) {
    r_.measured[name] = v;
    r_.checks.push_back({name, v, lo, hi});
  }
  void at_most(const std::string& name, double v, double hi) { check(name, v, -kInf, hi); }
  void at_least(const std::string& name, double v, double lo) { check(name, v, lo, kInf); }
  void note(std::string s) { r_.notes.push_back(std::move(s)); }
  Table& table(const std::string& name, std::vector<std::string> columns) {
    r_.tables.push_back({name, std::move(columns), {}});
    return r_.tables.back();
  }

 private:
  VerificationReport& r_;
};

Grid grid_with_cells(const ExperimentConfig& cfg, int cells) {
  GridSpec spec = cfg.grid;
  spec.cells.assign(1, cells);
  return spec.build(cfg.params.n, cfg.params.m);
}

Grid config_grid(const ExperimentConfig& cfg) { return cfg.grid.build(cfg.params.n, cfg.params.m); }

CoefficientField config_field(const ExperimentConfig& cfg) { return {cfg.params, cfg.representative}; }

EvolveOptions evolve_options(const ExperimentConfig& cfg) { return {cfg.solver.steps, cfg.solver.smoothing}; }

std::size_t locate_point(const Grid& g, const std::vector<double>& p) {
  if (static_cast<int>(p.size()) != g.dim()) throw std::invalid_argument("point option has the wrong dimension");
  return g.locate(p);
}

std::vector<int> cells_list(const ExperimentConfig& cfg, const std::string& key) {
  std::vector<int> out;
  for (double v : cfg.option_list(key)) out.push_back(as_int(v, key));
  if (out.empty()) throw std::invalid_argument(key + ": empty refinement list");
  return out;
}

std::vector<std::size_t> box_cells(const Grid& g, const ExperimentConfig& cfg) {
  const auto& lo = cfg.option_list("set_lo");
  const auto& hi = cfg.option_list("set_hi");
  auto cells = g.cells_in_box(lo, hi);
  if (cells.empty()) throw std::invalid_argument("set_lo/set_hi select no cells");
  return cells;
}

// ---------------------------------------------------------------- heat

void run_conserve(const ExperimentConfig& cfg, Recorder& rec) {
  const Grid g = config_grid(cfg);
  const DivergenceOperator H = assemble(g, config_field(cfg), Boundary::neumann_box());
  const std::size_t y = degeneracy_sources(g)[0];
  const auto slices = kernel_columns(H, g, y, cfg.times, evolve_options(cfg));
  auto& tab = rec.table("mass", {"t", "mass", "min_value", "boundary_mass"});
  double worst = 0.0, negative = 0.0;
  for (const auto& s : slices) {
    const double defect = std::abs(s.total_mass() - 1.0);
    worst = std::max(worst, defect);
    negative = std::max(negative, -s.values.minCoeff() / s.values.maxCoeff());
    tab.rows.push_back({s.t, s.total_mass(), s.values.minCoeff(), s.boundary_mass});
    if (s.truncated) rec.note("slice at t=" + std::to_string(s.t) + " reaches the box boundary (mass is still conserved)");
  }
  rec.at_most("mass_defect", worst, cfg.option("mass_tol"));
  rec.at_most("relative_negative_part", negative, cfg.option("positivity_tol"));
}

void run_crossnorm(const ExperimentConfig& cfg, Recorder& rec) {
  const Grid g = config_grid(cfg);
  const DivergenceOperator H = assemble(g, config_field(cfg), Boundary::neumann_box());
  const auto sources = degeneracy_sources(g, as_int(cfg.option("source_stride"), "source_stride"));
  const CrossnormScan scan = crossnorm_scan(H, g, sources, cfg.times, evolve_options(cfg));
  auto& tab = rec.table("crossnorm", {"t", "sup", "argmax_source", "excluded"});
  int excluded = 0;
  for (const auto& row : scan.rows) {
    tab.rows.push_back({row.t, row.sup, row.argmax_source, row.excluded});
    excluded += row.excluded;
  }
  const double target = cfg.option("target_slope");
  const double tol = cfg.option("slope_tol");
  const double slope = scan.slope(cfg.times.front(), cfg.times.back());
  rec.check("slope", slope, target - tol * std::abs(target), target + tol * std::abs(target));
  rec.measure("target_slope", target);
  rec.at_most("excluded_columns", excluded, 0);
}

std::vector<double> gauss_levels(const ExperimentConfig& cfg, Recorder& rec, bool lower) {
  const auto levels = cells_list(cfg, "refine");
  const double t = cfg.option("t");
  const auto& point = cfg.option_list("source");
  std::vector<double> values;
  auto& tab = rec.table(lower ? "ondiag" : "gaussian", {"cells", "value", "truncated"});
  for (int cells : levels) {
    const Grid g = grid_with_cells(cfg, cells);
    const DivergenceOperator H = assemble(g, config_field(cfg), Boundary::neumann_box());
    std::vector<DiagonalSample> samples{{locate_point(g, point), t}};
    if (lower) {
      std::mt19937_64 rng(derive_seed(cfg.seed, 1));
      std::uniform_real_distribution<double> ux(-cfg.option("sample_box"), cfg.option("sample_box"));
      std::uniform_real_distribution<double> ut(std::log(cfg.option("t_min")), std::log(cfg.option("t_max")));
      const int count = as_int(cfg.option("random_samples"), "random_samples");
      for (int k = 0; k < count; ++k) {
        std::vector<double> x(static_cast<std::size_t>(g.dim()));
        for (auto& v : x) v = ux(rng);
        samples.push_back({g.locate(x), std::exp(ut(rng))});
      }
      const OndiagResult r = ondiag_lower_ratio(H, g, cfg.params, samples, evolve_options(cfg));
      values.push_back(r.min_ratio);
      tab.rows.push_back({cells, r.min_ratio, r.truncated});
      rec.at_most("truncated_samples_" + std::to_string(cells), r.truncated, 0);
    } else {
      const KernelSlice s = kernel_column(H, g, samples[0].y, t, evolve_options(cfg));
      const double v = gaussian_ratio(s, g, cfg.params, cfg.option("eps"));
      values.push_back(v);
      tab.rows.push_back({cells, v, s.truncated});
    }
  }
  for (std::size_t k = 0; k < values.size(); ++k) {
    rec.check((lower ? "lower_ratio_" : "upper_ratio_") + std::to_string(levels[k]), values[k], 1e-300, 1e300);
  }
  if (values.size() >= 2) {
    rec.at_most("refinement_change", rel_change(values[values.size() - 2], values.back()), cfg.option("stability"));
  }
  return values;
}

void run_gauss(const ExperimentConfig& cfg, Recorder& rec) { gauss_levels(cfg, rec, false); }
void run_lower(const ExperimentConfig& cfg, Recorder& rec) { gauss_levels(cfg, rec, true); }

void run_compare(const ExperimentConfig& cfg, Recorder& rec) {
  const ComparisonSetup s = make_comparison(config_grid(cfg), config_field(cfg), cfg.option("r"), cfg.option("center"),
                                            cfg.option("half_width"));
  const ComparisonResult res = compare_kernels(s, cfg.times, evolve_options(cfg));
  auto& tab = rec.table("comparison", {"t", "measured", "shape"});
  for (const auto& row : res.rows) tab.rows.push_back({row.t, row.measured, row.shape});
  rec.measure("rho", res.rho);
  rec.measure("expected_slope", res.expected_slope);
  rec.measure("fitted_constant", res.fitted_constant);
  const double tol = cfg.option("slope_tol");
  rec.check("slope_ratio", res.slope / res.expected_slope, 1.0 - tol, 1.0 + tol);
  rec.measure("slope", res.slope);
  rec.check("monotone", res.monotone ? 1.0 : 0.0, 1.0, 1.0);
}

void run_approx(const ExperimentConfig& cfg, Recorder& rec) {
  const Grid g = config_grid(cfg);
  const CoefficientField c = config_field(cfg);
  const auto& lo = cfg.option_list("set_lo");
  const auto& hi = cfg.option_list("set_hi");
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.size()));
  for (std::size_t i : g.cells_in_box(lo, hi)) phi[static_cast<Eigen::Index>(i)] = 1.0;
  const double cap = cfg.option("cap");
  std::vector<std::pair<double, double>> list;
  for (double e : cfg.option_list("eps")) list.emplace_back(cap, e);
  list.emplace_back(cap, 0.0);
  const auto rows = approximant_convergence(g, c, list, phi, cfg.option("t"), evolve_options(cfg));
  auto& tab = rec.table("approximant", {"cap", "eps", "l1_gap", "l2_gap"});
  bool monotone = true;
  double cs = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    tab.rows.push_back({rows[k].cap, rows[k].eps, rows[k].l1_gap, rows[k].l2_gap});
    if (k > 0 && k + 1 < rows.size() && !(rows[k].l1_gap < rows[k - 1].l1_gap)) monotone = false;
    cs = std::max(cs, rows[k].l1_gap - std::sqrt(g.total_volume()) * rows[k].l2_gap);
  }
  rec.check("monotone_in_eps", monotone ? 1.0 : 0.0, 1.0, 1.0);
  rec.at_most("unregularized_gap", rows.back().l1_gap, 1e-12);
  rec.at_most("l1_minus_l2_bound", cs, 1e-12);
}

void run_gaffney(const ExperimentConfig& cfg, Recorder& rec) {
  const Grid g = config_grid(cfg);
  const CoefficientField c = config_field(cfg);
  const DivergenceOperator H = assemble(g, c, Boundary::neumann_box());
  const DistanceOracle oracle(g, c);
  std::mt19937_64 rng(derive_seed(cfg.seed, 2));
  const double box = cfg.option("sample_box");
  std::uniform_real_distribution<double> uc(-box, box);
  std::uniform_real_distribution<double> uw(cfg.option("min_half_width"), cfg.option("max_half_width"));
  std::uniform_real_distribution<double> ut(std::log(cfg.option("t_min")), std::log(cfg.option("t_max")));
  auto random_box = [&] {
    std::vector<double> lo(static_cast<std::size_t>(g.dim())), hi(lo.size());
    for (std::size_t k = 0; k < lo.size(); ++k) {
      const double c0 = uc(rng), w = uw(rng);
      lo[k] = c0 - w;
      hi[k] = c0 + w;
    }
    return g.cells_in_box(lo, hi);
  };
  const int pairs = as_int(cfg.option("pairs"), "pairs");
  const double eta = cfg.option("eta");
  auto& tab = rec.table("pairs", {"t", "distance", "lhs", "bound", "kxy", "kxx", "kyy"});
  int dg_fail = 0, cs_fail = 0, strict_fail = 0, done = 0;
  while (done < pairs) {
    auto A = random_box();
    auto B = random_box();
    if (A.empty() || B.empty()) continue;
    std::vector<std::size_t> common;
    std::set_intersection(A.begin(), A.end(), B.begin(), B.end(), std::back_inserter(common));
    if (!common.empty()) continue;
    const double t = std::exp(ut(rng));
    const auto dg = davies_gaffney_check(H, oracle, A, B, t, eta, evolve_options(cfg));
    const auto cs = kernel_cauchy_schwarz(H, g, A, B, t, evolve_options(cfg));
    dg_fail += dg.holds ? 0 : 1;
    strict_fail += dg.strict ? 0 : 1;
    cs_fail += cs.holds ? 0 : 1;
    tab.rows.push_back({t, dg.distance, dg.lhs, dg.bound, cs.kxy, cs.kxx, cs.kyy});
    ++done;
  }
  rec.at_most("davies_gaffney_violations", dg_fail, 0);
  rec.measure("below_floor_only_violations", strict_fail - dg_fail);
  rec.at_most("cauchy_schwarz_violations", cs_fail, 0);
}

// ---------------------------------------------------------------- sep

void run_separation(const ExperimentConfig& cfg, Recorder& rec) {
  if (cfg.params.n != 1 || cfg.params.m != 0) throw std::invalid_argument("separation: needs n = 1, m = 0");
  const double delta = cfg.params.d1;
  const double t = cfg.option("t");
  const auto levels = cells_list(cfg, "refine");
  std::vector<double> flux, gap;
  auto& tab = rec.table("separation", {"cells", "transmitted", "gap", "mass_defect", "min_difference"});
  double defect = 0.0, min_diff = 0.0;
  for (int cells : levels) {
    const Grid g = grid_with_cells(cfg, cells);
    const SeparationResult s = separation_flux(delta, t, g, evolve_options(cfg));
    const GapResult gr = dirichlet_neumann_gap(delta, t, g, evolve_options(cfg));
    flux.push_back(s.transmitted);
    gap.push_back(gr.gap);
    defect = std::max(defect, s.mass_defect);
    min_diff = std::min(min_diff, gr.min_difference);
    tab.rows.push_back({cells, s.transmitted, gr.gap, s.mass_defect, gr.min_difference});
  }
  rec.measure("transmitted_final", flux.back());
  rec.measure("gap_final", gap.back());
  rec.at_most("mass_defect", defect, cfg.option("mass_tol"));
  rec.at_least("min_kernel_difference", min_diff, -cfg.option("mass_tol"));
  if (delta >= 0.5) {
    const double factor = cfg.option("decay_factor");
    double worst_flux = kInf, worst_gap = kInf;
    for (std::size_t k = 1; k < levels.size(); ++k) {
      worst_flux = std::min(worst_flux, flux[k - 1] / flux[k]);
      worst_gap = std::min(worst_gap, gap[k - 1] / gap[k]);
    }
    rec.at_least("transmitted_decay_factor", worst_flux, factor);
    rec.at_least("gap_decay_factor", worst_gap, factor);
  } else {
    const double tol = cfg.option("stable_change");
    const std::size_t k = levels.size() - 1;
    rec.at_most("transmitted_final_change", rel_change(flux[k - 1], flux[k]), tol);
    rec.at_most("gap_final_change", rel_change(gap[k - 1], gap[k]), tol);
    rec.at_least("transmitted_limit", flux[k], cfg.option("positive_floor"));
    rec.at_least("gap_limit", gap[k], cfg.option("positive_floor"));
  }
}

void run_cutoff(const ExperimentConfig& cfg, Recorder& rec) {
  auto& tab = rec.table("cutoff", {"delta", "n_cut", "one_sided", "closed_form", "relative_error"});
  double worst = 0.0;
  const double per_unit = cfg.option("cells_per_cut");
  for (double delta : cfg.option_list("deltas")) {
    for (double n : cfg.option_list("n_cuts")) {
      const int cells = 2 * static_cast<int>(std::ceil(per_unit * n));
      const Grid g(1, {Axis::uniform(1.0, cells)});
      const CutoffEnergy e = cutoff_energy(delta, n, g);
      const double err = rel_change(e.closed_form, e.one_sided);
      worst = std::max(worst, err);
      tab.rows.push_back({delta, n, e.one_sided, e.closed_form, err});
    }
  }
  rec.at_most("max_relative_error", worst, cfg.option("tol"));
}

// ---------------------------------------------------------------- wave

void run_propagation(const ExperimentConfig& cfg, Recorder& rec) {
  const auto levels = cells_list(cfg, "refine");
  const double t = cfg.option("t");
  const double eta = cfg.option("eta");
  auto& tab = rec.table("leakage", {"cells", "t", "leakage", "inflated_cells"});
  std::vector<double> leak;
  for (int cells : levels) {
    const Grid g = grid_with_cells(cfg, cells);
    const CoefficientField c = config_field(cfg);
    const DivergenceOperator H = assemble(g, c, Boundary::neumann_box());
    const DistanceOracle oracle(g, c);
    const auto A = box_cells(g, cfg);
    const LeakageResult r = propagation_leakage(H, oracle, A, t, eta);
    leak.push_back(r.leakage);
    tab.rows.push_back({cells, t, r.leakage, r.inflated_cells});
  }
  rec.at_most("leakage", leak.back(), cfg.option("leak_tol"));
  // below roundoff the sequence is flat, so only require a decrease above the floor
  const double floor = cfg.option("roundoff_floor");
  double worst = 0.0;
  for (std::size_t k = 1; k < leak.size(); ++k) {
    if (leak[k - 1] > floor) worst = std::max(worst, leak[k] / leak[k - 1]);
  }
  rec.check("refinement_ratio", worst, 0.0, 1.0 - 1e-12);
}

void run_local_equality(const ExperimentConfig& cfg, Recorder& rec) {
  const Grid g = config_grid(cfg);
  const CoefficientField c = config_field(cfg);
  const double r = cfg.option("r");
  const DivergenceOperator H1 = assemble(g, c, Boundary::neumann_box());
  const DivergenceOperator H2 = assemble(g, frozen_coefficients(c, r), Boundary::neumann_box());
  const auto A = box_cells(g, cfg);
  std::vector<std::size_t> U;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.x1_norm(i) <= 0.5 * r) U.push_back(i);
  }
  const DistanceOracle oracle(g, frozen_coefficients(c, r));
  const double rho = oracle.set_distance(A, U);
  rec.measure("rho", rho);
  const double eta = cfg.option("eta");
  auto& tab = rec.table("local_equality", {"t_over_rho", "t", "difference"});
  double inside = 0.0;
  for (double f : cfg.option_list("t_factors")) {
    const auto res = local_equality_check(H1, H2, A, rho, f * rho, eta);
    inside = std::max(inside, res.difference);
    tab.rows.push_back({f, f * rho, res.difference});
  }
  const double fc = cfg.option("contrast_factor");
  const auto contrast = local_equality_check(H1, H2, A, rho, fc * rho, eta, true);
  tab.rows.push_back({fc, fc * rho, contrast.difference});
  rec.at_most("difference_inside", inside, cfg.option("diff_tol"));
  rec.measure("difference_contrast", contrast.difference);
  rec.at_least("contrast_ratio", contrast.difference / std::max(inside, 1e-300), cfg.option("contrast_ratio"));
}

// ---------------------------------------------------------------- geometry

void run_distance(const ExperimentConfig& cfg, Recorder& rec) {
  const auto levels = cells_list(cfg, "refine");
  const int pairs = as_int(cfg.option("pairs"), "pairs");
  const double box = cfg.option("sample_box");
  const int d = cfg.params.dimension();
  std::mt19937_64 rng(derive_seed(cfg.seed, 3));
  std::uniform_real_distribution<double> u(-box, box);
  std::vector<std::pair<std::vector<double>, std::vector<double>>> points;
  while (static_cast<int>(points.size()) < pairs) {
    std::vector<double> a(static_cast<std::size_t>(d)), b(a.size());
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = u(rng);
    points.emplace_back(a, b);
  }
  auto& tab = rec.table("distance", {"cells", "x", "y", "D_delta", "d_graph", "ratio"});
  auto fmt = [](const std::vector<double>& x) {
    std::ostringstream os;
    for (std::size_t k = 0; k < x.size(); ++k) os << (k ? ";" : "") << x[k];
    return os.str();
  };
  std::vector<double> spreads;
  for (int cells : levels) {
    const Grid g = grid_with_cells(cfg, cells);
    const DistanceOracle oracle(g, config_field(cfg));
    double lo = kInf, hi = 0.0;
    for (const auto& [a, b] : points) {
      const std::size_t ia = g.locate(a), ib = g.locate(b);
      if (ia == ib) continue;
      const auto xa = g.center(ia), xb = g.center(ib);
      const double D = delta_distance(cfg.params, Point::split(xa, cfg.params.n), Point::split(xb, cfg.params.n));
      const double dg = oracle.graph_distance(ia, ib);
      const double ratio = D / dg;
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
      tab.rows.push_back({cells, fmt(xa), fmt(xb), D, dg, ratio});
    }
    spreads.push_back(hi / lo);
    rec.at_most("spread_" + std::to_string(cells), hi / lo, cfg.option("max_spread"));
    rec.measure("min_ratio_" + std::to_string(cells), lo);
    rec.measure("max_ratio_" + std::to_string(cells), hi);
  }
  if (spreads.size() >= 2) {
    rec.at_most("refinement_change", rel_change(spreads[spreads.size() - 2], spreads.back()), cfg.option("stability"));
  }
}

void run_volume(const ExperimentConfig& cfg, Recorder& rec) {
  const GrusinParams& p = cfg.params;
  const int d = p.dimension();
  const Grid g = config_grid(cfg);
  const DistanceOracle oracle(g, config_field(cfg));
  std::mt19937_64 rng(derive_seed(cfg.seed, 4));
  const double box = cfg.option("sample_box");
  std::uniform_real_distribution<double> ux(-box, box);
  std::uniform_real_distribution<double> ur(std::log(cfg.option("r_min")), std::log(cfg.option("r_max")));
  auto& tab = rec.table("volume", {"x", "r", "vol_formula", "vol_numeric", "ratio", "regime"});
  double lo = kInf, hi = 0.0;
  int small = 0, large = 0, skipped = 0;
  const int samples = as_int(cfg.option("samples"), "samples");
  for (int k = 0; k < samples; ++k) {
    std::vector<double> x(static_cast<std::size_t>(d));
    for (auto& v : x) v = ux(rng);
    const double r = std::exp(ur(rng));
    const std::size_t cell = g.locate(x);
    const auto xc = g.center(cell);
    const BallEstimate b = oracle.ball_volume_numeric(cell, r);
    if (b.truncated) {
      ++skipped;
      continue;
    }
    const Point pt = Point::split(xc, p.n);
    const double vf = volume_formula(p, pt, r);
    const bool is_small = volume_regime(p, pt, r) == VolumeRegime::small_r;
    (is_small ? small : large) += 1;
    const double ratio = b.volume_numeric / vf;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
    std::ostringstream os;
    for (std::size_t i = 0; i < xc.size(); ++i) os << (i ? ";" : "") << xc[i];
    tab.rows.push_back({os.str(), r, vf, b.volume_numeric, ratio, is_small ? "small_r" : "large_r"});
  }
  rec.measure("truncated_skipped", skipped);
  rec.at_least("small_regime_samples", small, 1);
  rec.at_least("large_regime_samples", large, 1);
  rec.at_least("min_volume_ratio", lo, cfg.option("ratio_lo"));
  rec.at_most("max_volume_ratio", hi, cfg.option("ratio_hi"));

  // doubling: per (x, r), the log-log slope of V(x, s r) over s = 2^k
  const int doubling = as_int(cfg.option("doubling_samples"), "doubling_samples");
  const int octaves = as_int(cfg.option("octaves"), "octaves");
  std::uniform_real_distribution<double> uwide(std::log(cfg.option("doubling_r_min")), std::log(cfg.option("doubling_r_max")));
  std::vector<DoublingSample> ds;
  double fitted = 0.0;
  auto& dtab = rec.table("doubling", {"x_norm", "r", "fitted_exponent"});
  for (int k = 0; k < doubling; ++k) {
    std::vector<double> x(static_cast<std::size_t>(d));
    for (auto& v : x) v = ux(rng);
    const Point pt = Point::split(x, p.n);
    const double r = std::exp(uwide(rng));
    std::vector<double> s, v;
    for (int j = 0; j <= octaves; ++j) {
      const double sj = std::ldexp(1.0, j);
      s.push_back(sj);
      v.push_back(volume_formula(p, pt, sj * r));
      ds.push_back({pt, r, sj});
    }
    const double e = loglog_slope(s, v);
    fitted = std::max(fitted, e);
    double xn = 0.0;
    for (double c : pt.x1) xn += c * c;
    dtab.rows.push_back({std::sqrt(xn), r, e});
  }
  const DoublingReport report = doubling_report(p, ds);
  rec.measure("doubling_dimension", report.doubling_dimension);
  rec.measure("max_doubling_constant", report.max_constant);
  rec.at_most("fitted_doubling_exponent", fitted, report.doubling_dimension + cfg.option("exponent_slack"));
}

// ---------------------------------------------------------------- ineq

void run_hardy(const ExperimentConfig& cfg, Recorder& rec) {
  const Grid g = config_grid(cfg);
  const HardySpace space = cfg.params.n == 1 ? HardySpace::half_line_dirichlet : HardySpace::full_space;
  const HardyResult r = hardy_constant(space, cfg.option("gamma"), g);
  rec.measure("cells", static_cast<double>(r.cells));
  rec.check("constant", r.constant, cfg.option("lo"), cfg.option("hi"));
  rec.check("converged", r.converged ? 1.0 : 0.0, 1.0, 1.0);
}

void run_matrix(const ExperimentConfig& cfg, Recorder& rec, bool sqrt_suite) {
  const int trials = as_int(cfg.option("trials"), "trials");
  const int max_order = as_int(cfg.option("max_order"), "max_order");
  const double tol = cfg.option("tol");
  const auto& levels = cfg.option_list(sqrt_suite ? "k" : "gammas");
  auto& tab = rec.table(sqrt_suite ? "sqrt" : "monotone", {"trial", sqrt_suite ? "k" : "gamma", "order", "min_eigenvalue", "scale"});
  int violations = 0, invalid = 0;
  double worst = kInf;
  for (int trial = 0; trial < trials; ++trial) {
    std::mt19937_64 rng(derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(trial)));
    const int order = std::uniform_int_distribution<int>(1, max_order)(rng);
    const MatrixPair pair = random_pair(order, rng);
    if (!pair_is_valid(pair)) ++invalid;
    for (double lv : levels) {
      const MatrixCheck c = sqrt_suite ? sqrt_subadditivity_check(pair.A, pair.B, as_int(lv, "k"))
                                       : operator_monotone_check(pair, lv);
      if (!c.passes(tol)) ++violations;
      worst = std::min(worst, c.min_eigenvalue / c.scale);
      tab.rows.push_back({trial, lv, order, c.min_eigenvalue, c.scale});
    }
  }
  rec.measure("min_relative_eigenvalue", worst);
  rec.at_most("invalid_pairs", invalid, 0);
  rec.at_most("violations", violations, 0);
}

void run_monotone(const ExperimentConfig& cfg, Recorder& rec) { run_matrix(cfg, rec, false); }
void run_sqrt(const ExperimentConfig& cfg, Recorder& rec) { run_matrix(cfg, rec, true); }

bool is_euclidean(const GrusinParams& p) { return p.d1 == 0 && p.d1p == 0 && p.d2 == 0 && p.d2p == 0; }

MultiplierSpec config_multiplier(const ExperimentConfig& cfg) {
  return is_euclidean(cfg.params) ? MultiplierSpec::elliptic(cfg.params.dimension()) : MultiplierSpec::grusin(cfg.params);
}

void run_nash(const ExperimentConfig& cfg, Recorder& rec) {
  const Grid g = config_grid(cfg);
  const DivergenceOperator H = assemble(g, config_field(cfg), Boundary::periodic());
  MultiplierSpec F = config_multiplier(cfg);
  const SubellipticResult a = subelliptic_constant(H, F, g);
  rec.at_least("pencil_constant", a.constant, 1e-12);
  F.scale = a.constant;
  const PeriodicSpectrum spectrum(g);
  std::mt19937_64 rng(derive_seed(cfg.seed, 5));
  const auto& radii = cfg.option_list("radii");
  const int trials = as_int(cfg.option("trials"), "trials");
  std::uniform_real_distribution<double> uc(-g.axis(0).half_width(), g.axis(0).half_width());
  std::uniform_real_distribution<double> ua(-1.0, 1.0);
  std::uniform_real_distribution<double> us(cfg.option("min_bump"), cfg.option("max_bump"));
  auto& tab = rec.table("nash", {"trial", "r", "lhs", "rhs", "slack"});
  double worst = kInf;
  for (int trial = 0; trial < trials; ++trial) {
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.size()));
    for (int b = 0; b < 3; ++b) {
      std::vector<double> c(static_cast<std::size_t>(g.dim()));
      for (auto& v : c) v = uc(rng);
      const double amp = ua(rng), width = us(rng);
      for (std::size_t i = 0; i < g.size(); ++i) {
        double r2 = 0.0;
        for (int k = 0; k < g.dim(); ++k) {
          const double dx = g.center(i, k) - c[static_cast<std::size_t>(k)];
          r2 += dx * dx;
        }
        phi[static_cast<Eigen::Index>(i)] += amp * std::exp(-0.5 * r2 / (width * width));
      }
    }
    const double r = radii[static_cast<std::size_t>(trial) % radii.size()];
    const NashResult res = nash_check(H, F, spectrum, phi, r);
    worst = std::min(worst, res.slack() / res.rhs);
    tab.rows.push_back({trial, r, res.lhs, res.rhs, res.slack()});
  }
  rec.at_least("min_relative_slack", worst, -cfg.option("tol"));
}

void run_subelliptic(const ExperimentConfig& cfg, Recorder& rec) {
  const auto levels = cells_list(cfg, "refine");
  std::vector<double> values;
  auto& tab = rec.table("subelliptic", {"cells", "constant", "iterations"});
  for (int cells : levels) {
    const Grid g = grid_with_cells(cfg, cells);
    const DivergenceOperator H = assemble(g, config_field(cfg), Boundary::periodic());
    const SubellipticResult a = subelliptic_constant(H, config_multiplier(cfg), g);
    values.push_back(a.constant);
    tab.rows.push_back({cells, a.constant, a.iterations});
    rec.at_least("constant_" + std::to_string(cells), a.constant, 1e-12);
  }
  if (values.size() >= 2) {
    rec.at_most("refinement_change", rel_change(values[values.size() - 2], values.back()), cfg.option("stability"));
  }
}

void run_neumann(const ExperimentConfig& cfg, Recorder& rec) {
  const auto levels = cells_list(cfg, "refine");
  std::vector<double> nc, fc;
  double defect = 0.0;
  auto& tab = rec.table("neumann", {"cells", "neumann_constant", "full_line_constant", "decoupling_defect"});
  for (int cells : levels) {
    const Grid g = grid_with_cells(cfg, cells);
    const auto r = neumann_subelliptic_check(cfg.params.d1, cfg.params.d1p, g);
    nc.push_back(r.neumann_constant);
    fc.push_back(r.full_line_constant);
    defect = std::max(defect, r.decoupling_defect);
    tab.rows.push_back({cells, r.neumann_constant, r.full_line_constant, r.decoupling_defect});
  }
  double change = 0.0, decay = kInf;
  for (std::size_t k = 1; k < levels.size(); ++k) {
    change = std::max(change, rel_change(nc[k - 1], nc[k]));
    decay = std::min(decay, fc[k - 1] / fc[k]);
  }
  rec.at_least("neumann_constant", *std::min_element(nc.begin(), nc.end()), 1e-12);
  rec.at_most("neumann_refinement_change", change, cfg.option("stability"));
  rec.at_least("full_line_decay_factor", decay, cfg.option("decay_factor"));
  rec.at_most("decoupling_defect", defect, 1e-10);
}

// ---------------------------------------------------------------- registry

struct Entry {
  std::string group;
  std::function<void(const ExperimentConfig&, Recorder&)> runner;
  std::function<ExperimentConfig()> defaults;
};

ExperimentConfig base(const std::string& name, GrusinParams p, Representative rep, GridSpec grid, SolverSpec solver,
                      OptionMap options, std::vector<double> times = {}) {
  ExperimentConfig c;
  c.experiment = name;
  c.params = p;
  c.representative = rep;
  c.grid = std::move(grid);
  c.solver = solver;
  c.options = std::move(options);
  c.times = std::move(times);
  return c;
}

GridSpec uniform(double L, int N) { return {{L}, {N}, {}}; }

const std::map<std::string, Entry>& registry() {
  static const std::map<std::string, Entry> reg = [] {
    const GrusinParams classical = GrusinParams::classical();
    const GrusinParams free1{1, 0, 0, 0, 0, 0};
    const GrusinParams example = GrusinParams::one_dimensional(0.25);
    const Representative pp = Representative::pure_power;
    const Representative ex = Representative::example_1d;
    const Representative sm = Representative::smooth;
    const SolverSpec kernel{40, 2, 1e-8};
    const SolverSpec sep{200, 4, 1e-8};
    std::map<std::string, Entry> r;

    r["conserve"] = {"heat", run_conserve, [=] {
                       return base("conserve", classical, pp, uniform(6, 256), kernel,
                                   {{"mass_tol", {1e-8}}, {"positivity_tol", {1e-12}}}, {0.01, 0.1, 1.0});
                     }};
    r["crossnorm"] = {"heat", run_crossnorm, [=] {
                        return base("crossnorm", example, ex, {{3.0}, {2000}, {1.5e-4}}, kernel,
                                    {{"target_slope", {-2.0 / 3.0}}, {"slope_tol", {0.1}}, {"source_stride", {0}}},
                                    logspace(-3, -1, 9));
                      }};
    r["crossnorm_large"] = {"heat", run_crossnorm, [=] {
                              return base("crossnorm_large", example, ex, uniform(300, 2000), kernel,
                                          {{"target_slope", {-0.5}}, {"slope_tol", {0.1}}, {"source_stride", {0}}},
                                          logspace(1, 3, 9));
                            }};
    r["crossnorm_grusin"] = {"heat", run_crossnorm, [=] {
                               return base("crossnorm_grusin", classical, pp, {{4.0, 3.0}, {160}, {2e-3, 1e-4}}, kernel,
                                           {{"target_slope", {-1.5}}, {"slope_tol", {0.1}}, {"source_stride", {0}}},
                                           logspace(-3, -1, 7));
                             }};
    r["gauss"] = {"heat", run_gauss, [=] {
                    return base("gauss", classical, pp, uniform(3, 128), kernel,
                                {{"refine", {128, 256}}, {"t", {0.05}}, {"eps", {1.0}}, {"source", {0.0, 0.0}},
                                 {"stability", {0.3}}});
                  }};
    r["gauss_1d"] = {"heat", run_gauss, [=] {
                       return base("gauss_1d", example, ex, uniform(4, 1000), kernel,
                                   {{"refine", {1000, 2000}}, {"t", {0.1}}, {"eps", {1.0}}, {"source", {0.0}},
                                    {"stability", {0.3}}});
                     }};
    const OptionMap lower_opts{{"t", {0.05}},          {"source", {0.0, 0.0}}, {"stability", {0.3}},
                               {"random_samples", {20}}, {"sample_box", {1.0}},   {"t_min", {0.01}},
                               {"t_max", {0.1}}};
    r["lower"] = {"heat", run_lower, [=] {
                    auto o = lower_opts;
                    o["refine"] = {160, 320};
                    return base("lower", classical, pp, uniform(4, 160), kernel, o);
                  }};
    r["lower_1d"] = {"heat", run_lower, [=] {
                       auto o = lower_opts;
                       o["refine"] = {1000, 2000};
                       o["source"] = {0.0};
                       o["t"] = {0.1};
                       return base("lower_1d", example, ex, uniform(4, 1000), kernel, o);
                     }};
    r["compare"] = {"heat", run_compare, [=] {
                      return base("compare", classical, pp, uniform(4, 160), kernel,
                                  {{"r", {2.0}}, {"center", {2.0}}, {"half_width", {0.25}}, {"slope_tol", {0.2}}},
                                  {0.03, 0.04, 0.05, 0.07, 0.1, 0.15, 0.2, 0.3});
                    }};
    r["approx"] = {"heat", run_approx, [=] {
                     return base("approx", classical, pp, uniform(3, 48), kernel,
                                 {{"cap", {1e6}}, {"eps", {1.0, 0.1, 0.01}}, {"t", {0.1}},
                                  {"set_lo", {-0.5, -0.5}}, {"set_hi", {0.5, 0.5}}});
                   }};
    r["gaffney"] = {"heat", run_gaffney, [=] {
                      return base("gaffney", classical, pp, uniform(3, 64), kernel,
                                  {{"pairs", {50}}, {"eta", {0.1}}, {"sample_box", {1.5}}, {"min_half_width", {0.05}},
                                   {"max_half_width", {0.3}}, {"t_min", {0.01}}, {"t_max", {0.3}}});
                    }};
    const OptionMap sep_opts{{"t", {0.1}},          {"refine", {512, 1024, 2048}}, {"mass_tol", {1e-8}},
                             {"decay_factor", {1.3}}, {"stable_change", {0.05}},     {"positive_floor", {1e-3}}};
    r["separation"] = {"sep", run_separation, [=] {
                         return base("separation", GrusinParams::one_dimensional(0.75), pp, uniform(2, 512), sep, sep_opts);
                       }};
    r["separation_weak"] = {"sep", run_separation, [=] {
                              return base("separation_weak", GrusinParams::one_dimensional(0.25), pp, uniform(2, 512), sep,
                                          sep_opts);
                            }};
    r["cutoff"] = {"sep", run_cutoff, [=] {
                     return base("cutoff", free1, pp, uniform(1, 2), kernel,
                                 {{"deltas", {0.25, 0.5, 0.75}}, {"n_cuts", {1e2, 1e3, 1e4}}, {"cells_per_cut", {16}},
                                  {"tol", {0.15}}});
                   }};
    const OptionMap prop_opts{{"t", {0.5}}, {"eta", {0.1}}, {"leak_tol", {1e-4}}, {"roundoff_floor", {1e-13}}};
    r["propagation_free"] = {"wave", run_propagation, [=] {
                               auto o = prop_opts;
                               o["refine"] = {400, 800};
                               o["set_lo"] = {-0.25};
                               o["set_hi"] = {0.25};
                               return base("propagation_free", free1, pp, uniform(2, 400), kernel, o);
                             }};
    r["propagation"] = {"wave", run_propagation, [=] {
                          auto o = prop_opts;
                          o["refine"] = {200, 400};
                          o["set_lo"] = {-0.25, -0.25};
                          o["set_hi"] = {0.25, 0.25};
                          return base("propagation", classical, pp, uniform(2, 200), kernel, o);
                        }};
    r["local_equality"] = {"wave", run_local_equality, [=] {
                             return base("local_equality", classical, pp, uniform(4, 320), kernel,
                                         {{"r", {2.0}}, {"set_lo", {2.0, -0.25}}, {"set_hi", {2.5, 0.25}},
                                          {"t_factors", {0.5, 0.9}}, {"contrast_factor", {1.5}}, {"eta", {0.1}},
                                          {"diff_tol", {1e-3}}, {"contrast_ratio", {100}}});
                           }};
    const OptionMap dist_opts{{"pairs", {100}}, {"sample_box", {1.5}}, {"max_spread", {10}}, {"stability", {0.2}}};
    r["distance"] = {"geometry", run_distance, [=] {
                       auto o = dist_opts;
                       o["refine"] = {64, 128};
                       return base("distance", classical, sm, uniform(2, 64), kernel, o);
                     }};
    r["distance_mixed"] = {"geometry", run_distance, [=] {
                             auto o = dist_opts;
                             o["refine"] = {64, 128};
                             return base("distance_mixed", {1, 1, 0.5, 0.5, 1, 1}, sm, uniform(2, 64), kernel, o);
                           }};
    r["distance_3d"] = {"geometry", run_distance, [=] {
                          auto o = dist_opts;
                          o["refine"] = {32, 64};
                          return base("distance_3d", {2, 1, 0.25, 0.5, 0.5, 2}, sm, uniform(2, 32), kernel, o);
                        }};
    const OptionMap vol_opts{{"samples", {40}},         {"sample_box", {1.0}},      {"r_min", {0.1}},
                             {"r_max", {1.0}},          {"ratio_lo", {0.1}},        {"ratio_hi", {10}},
                             {"doubling_samples", {100}}, {"octaves", {8}},         {"doubling_r_min", {1e-3}},
                             {"doubling_r_max", {10}},  {"exponent_slack", {0.2}}};
    r["volume"] = {"geometry", run_volume,
                   [=] { return base("volume", classical, sm, uniform(3, 128), kernel, vol_opts); }};
    r["volume_mixed"] = {"geometry", run_volume, [=] {
                           return base("volume_mixed", {1, 1, 0.5, 0.5, 1, 1}, sm, uniform(3, 128), kernel, vol_opts);
                         }};
    r["volume_3d"] = {"geometry", run_volume, [=] {
                        auto o = vol_opts;
                        o["r_min"] = {0.3};
                        return base("volume_3d", {2, 1, 0.25, 0.5, 0.5, 2}, sm, uniform(2.5, 48), kernel, o);
                      }};
    r["hardy"] = {"ineq", run_hardy, [=] {
                    return base("hardy", free1, sm, {{1.0}, {4000}, {1e-11}}, kernel,
                                {{"gamma", {1.0}}, {"lo", {0.225}}, {"hi", {0.275}}});
                  }};
    r["hardy_3d"] = {"ineq", run_hardy, [=] {
                       return base("hardy_3d", {3, 0, 0, 0, 0, 0}, sm, {{1.0}, {48}, {std::ldexp(1.0, -24)}}, kernel,
                                   {{"gamma", {1.0}}, {"lo", {0.25}}, {"hi", {0.31}}});
                     }};
    r["monotone"] = {"ineq", run_monotone, [=] {
                       return base("monotone", free1, sm, uniform(1, 2), kernel,
                                   {{"trials", {200}}, {"max_order", {12}}, {"gammas", {0.25, 0.5, 0.75, 1.0}},
                                    {"tol", {1e-10}}});
                     }};
    r["sqrt"] = {"ineq", run_sqrt, [=] {
                   return base("sqrt", free1, sm, uniform(1, 2), kernel,
                               {{"trials", {200}}, {"max_order", {12}}, {"k", {1, 2}}, {"tol", {1e-10}}});
                 }};
    const OptionMap nash_opts{{"trials", {50}}, {"radii", {0.5, 1.0, 2.0}}, {"min_bump", {0.2}}, {"max_bump", {1.0}},
                              {"tol", {1e-12}}};
    r["nash_free"] = {"ineq", run_nash, [=] {
                        return base("nash_free", free1, sm, uniform(std::numbers::pi, 256), kernel, nash_opts);
                      }};
    r["nash"] = {"ineq", run_nash, [=] {
                   return base("nash", classical, sm, uniform(std::numbers::pi, 64), kernel, nash_opts);
                 }};
    r["subelliptic"] = {"ineq", run_subelliptic, [=] {
                          return base("subelliptic", classical, sm, uniform(std::numbers::pi, 32), kernel,
                                      {{"refine", {32, 64}}, {"stability", {0.2}}});
                        }};
    r["neumann"] = {"ineq", run_neumann, [=] {
                      return base("neumann", {1, 0, 0.75, 0.0, 0, 0}, sm, uniform(4, 256), kernel,
                                  {{"refine", {256, 512, 1024}}, {"stability", {0.2}}, {"decay_factor", {1.0 + 1e-9}}});
                    }};
    return r;
  }();
  return reg;
}

const Entry& entry(const std::string& name) {
  const auto& reg = registry();
  const auto it = reg.find(name);
  if (it == reg.end()) throw std::invalid_argument("unknown experiment '" + name + "'");
  return it->second;
}

// ---------------------------------------------------------------- yaml

std::vector<double> yaml_numbers(const YAML::Node& node, const std::string& key) {
  std::vector<double> out;
  if (node.IsSequence()) {
    for (const auto& v : node) out.push_back(v.as<double>());
  } else if (node.IsScalar()) {
    out.push_back(node.as<double>());
  } else {
    throw std::invalid_argument("config: '" + key + "' must be a number or a list of numbers");
  }
  return out;
}

void reject_unknown(const YAML::Node& node, const std::set<std::string>& allowed, const std::string& where) {
  if (!node.IsMap()) throw std::invalid_argument("config: '" + where + "' must be a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw std::invalid_argument("config: unknown key '" + key + "' in " + where);
  }
}

// json keeps no infinities; null stands for them (and for NaN in measured values)
nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }
double num_or(const nlohmann::json& j, double fallback) { return j.is_null() ? fallback : j.get<double>(); }

std::string csv_cell(const nlohmann::json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }
  if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
  if (v.is_null()) return "nan";
  return v.dump();
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

}  // namespace

// ---------------------------------------------------------------- GridSpec / config

Grid GridSpec::build(int n, int m) const {
  const int d = n + m;
  auto pick = [d](const auto& v, int k, const char* what) {
    if (v.size() == 1) return v[0];
    if (static_cast<int>(v.size()) == d) return v[static_cast<std::size_t>(k)];
    throw std::invalid_argument(std::string("grid: '") + what + "' needs 1 or " + std::to_string(d) + " entries");
  };
  std::vector<Axis> axes;
  for (int k = 0; k < d; ++k) {
    const double L = pick(half_width, k, "L");
    const int N = pick(cells, k, "N");
    if (min_width.empty() || pick(min_width, k, "min_width") <= 0.0) {
      axes.push_back(Axis::uniform(L, N));
    } else {
      axes.push_back(Axis::graded(L, N, pick(min_width, k, "min_width")));
    }
  }
  return Grid(n, std::move(axes));
}

double ExperimentConfig::option(const std::string& key) const {
  const auto& v = option_list(key);
  if (v.size() != 1) throw std::invalid_argument("option '" + key + "' must be a single number");
  return v[0];
}

const std::vector<double>& ExperimentConfig::option_list(const std::string& key) const {
  const auto it = options.find(key);
  if (it == options.end()) throw std::invalid_argument("missing option '" + key + "' for " + experiment);
  return it->second;
}

void ExperimentConfig::validate() const {
  const ExperimentConfig ref = default_config(experiment);
  for (const auto& [key, value] : options) {
    if (!ref.options.count(key)) throw std::invalid_argument("unknown option '" + key + "' for " + experiment);
    for (double v : value) {
      if (!std::isfinite(v)) throw std::invalid_argument("option '" + key + "' is not finite");
    }
  }
  params.validate();
  if (representative == Representative::example_1d && (params.n != 1 || params.m != 0 || params.d1p != 0.0)) {
    throw std::invalid_argument("example_1d needs n = 1, m = 0, d1p = 0");
  }
  for (double L : grid.half_width) {
    if (!(L > 0.0)) throw std::invalid_argument("grid: L must be positive");
  }
  for (int N : grid.cells) {
    if (N < 2 || N % 2 != 0) throw std::invalid_argument("grid: N must be even and >= 2");
  }
  (void)grid.build(params.n, params.m);
  if (solver.steps < 1 || solver.smoothing < 0 || solver.smoothing > solver.steps) {
    throw std::invalid_argument("solver: need steps >= 1 and 0 <= smoothing <= steps");
  }
  if (!(solver.tolerance > 0.0)) throw std::invalid_argument("solver: tolerance must be positive");
  double prev = 0.0;
  for (double t : times) {
    if (!(t > prev)) throw std::invalid_argument("times must be positive and increasing");
    prev = t;
  }
  if (output_dir.empty()) throw std::invalid_argument("out must not be empty");
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["experiment"] = experiment;
  j["seed"] = seed;
  j["out"] = output_dir;
  j["params"] = {{"n", params.n},     {"m", params.m},     {"d1", params.d1},
                 {"d1p", params.d1p}, {"d2", params.d2},   {"d2p", params.d2p},
                 {"representative", grusin::to_string(representative)}};
  j["grid"] = {{"L", grid.half_width}, {"N", grid.cells}, {"min_width", grid.min_width}};
  j["solver"] = {{"steps", solver.steps}, {"smoothing", solver.smoothing}, {"tolerance", solver.tolerance}};
  j["times"] = times;
  j["options"] = nlohmann::json::object();
  for (const auto& [k, v] : options) j["options"][k] = v;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.experiment = j.at("experiment").get<std::string>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.output_dir = j.at("out").get<std::string>();
  const auto& p = j.at("params");
  c.params = {p.at("n").get<int>(), p.at("m").get<int>(),  p.at("d1").get<double>(),
              p.at("d1p").get<double>(), p.at("d2").get<double>(), p.at("d2p").get<double>()};
  c.representative = parse_representative(p.at("representative").get<std::string>());
  c.grid.half_width = j.at("grid").at("L").get<std::vector<double>>();
  c.grid.cells = j.at("grid").at("N").get<std::vector<int>>();
  c.grid.min_width = j.at("grid").at("min_width").get<std::vector<double>>();
  c.solver.steps = j.at("solver").at("steps").get<int>();
  c.solver.smoothing = j.at("solver").at("smoothing").get<int>();
  c.solver.tolerance = j.at("solver").at("tolerance").get<double>();
  c.times = j.at("times").get<std::vector<double>>();
  for (const auto& [k, v] : j.at("options").items()) c.options[k] = v.get<std::vector<double>>();
  return c;
}

ExperimentConfig parse_config(const std::string& yaml_text) {
  const YAML::Node root = YAML::Load(yaml_text);
  reject_unknown(root, {"experiment", "seed", "out", "params", "grid", "solver", "times", "options"}, "top level");
  if (!root["experiment"]) throw std::invalid_argument("config: 'experiment' is required");
  ExperimentConfig c = default_config(root["experiment"].as<std::string>());
  if (root["seed"]) c.seed = root["seed"].as<std::uint64_t>();
  if (root["out"]) c.output_dir = root["out"].as<std::string>();
  if (const auto p = root["params"]) {
    reject_unknown(p, {"n", "m", "d1", "d1p", "d2", "d2p", "representative"}, "params");
    if (p["n"]) c.params.n = p["n"].as<int>();
    if (p["m"]) c.params.m = p["m"].as<int>();
    if (p["d1"]) c.params.d1 = p["d1"].as<double>();
    if (p["d1p"]) c.params.d1p = p["d1p"].as<double>();
    if (p["d2"]) c.params.d2 = p["d2"].as<double>();
    if (p["d2p"]) c.params.d2p = p["d2p"].as<double>();
    if (p["representative"]) c.representative = parse_representative(p["representative"].as<std::string>());
  }
  if (const auto g = root["grid"]) {
    reject_unknown(g, {"L", "N", "min_width"}, "grid");
    if (g["L"]) c.grid.half_width = yaml_numbers(g["L"], "grid.L");
    if (g["N"]) {
      c.grid.cells.clear();
      for (double v : yaml_numbers(g["N"], "grid.N")) c.grid.cells.push_back(as_int(v, "grid.N"));
    }
    if (g["min_width"]) c.grid.min_width = yaml_numbers(g["min_width"], "grid.min_width");
  }
  if (const auto s = root["solver"]) {
    reject_unknown(s, {"steps", "smoothing", "tolerance"}, "solver");
    if (s["steps"]) c.solver.steps = s["steps"].as<int>();
    if (s["smoothing"]) c.solver.smoothing = s["smoothing"].as<int>();
    if (s["tolerance"]) c.solver.tolerance = s["tolerance"].as<double>();
  }
  if (root["times"]) c.times = yaml_numbers(root["times"], "times");
  if (const auto o = root["options"]) {
    if (!o.IsMap()) throw std::invalid_argument("config: 'options' must be a mapping");
    for (const auto& kv : o) {
      const auto key = kv.first.as<std::string>();
      if (!c.options.count(key)) throw std::invalid_argument("config: unknown option '" + key + "' for " + c.experiment);
      c.options[key] = yaml_numbers(kv.second, "options." + key);
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

ExperimentConfig default_config(const std::string& experiment) { return entry(experiment).defaults(); }

std::vector<std::string> experiment_names() {
  std::vector<std::string> out;
  for (const auto& [k, v] : registry()) out.push_back(k);
  return out;
}

std::string experiment_group(const std::string& experiment) { return entry(experiment).group; }

void set_config_value(ExperimentConfig& cfg, const std::string& key, double value) {
  if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(value);
  } else if (key == "params.n") {
    cfg.params.n = as_int(value, key);
  } else if (key == "params.m") {
    cfg.params.m = as_int(value, key);
  } else if (key == "params.d1") {
    cfg.params.d1 = value;
  } else if (key == "params.d1p") {
    cfg.params.d1p = value;
  } else if (key == "params.d2") {
    cfg.params.d2 = value;
  } else if (key == "params.d2p") {
    cfg.params.d2p = value;
  } else if (key == "grid.L") {
    cfg.grid.half_width.assign(1, value);
  } else if (key == "grid.N") {
    cfg.grid.cells.assign(1, as_int(value, key));
  } else if (key == "solver.steps") {
    cfg.solver.steps = as_int(value, key);
  } else if (key == "solver.smoothing") {
    cfg.solver.smoothing = as_int(value, key);
  } else if (key == "solver.tolerance") {
    cfg.solver.tolerance = value;
  } else if (key.rfind("options.", 0) == 0) {
    const auto name = key.substr(8);
    if (!cfg.options.count(name)) throw std::invalid_argument("unknown option '" + name + "' for " + cfg.experiment);
    cfg.options[name] = {value};
  } else {
    throw std::invalid_argument("cannot sweep over '" + key + "'");
  }
}

// ---------------------------------------------------------------- report

bool VerificationReport::recompute_pass() const {
  if (!error.empty()) return false;
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass(); });
}

nlohmann::json VerificationReport::body() const {
  nlohmann::json j;
  j["id"] = id;
  j["experiment"] = experiment;
  j["config"] = config;
  j["measured"] = nlohmann::json::object();
  for (const auto& [k, v] : measured) j["measured"][k] = num(v);
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) {
    j["checks"].push_back({{"name", c.name}, {"value", num(c.value)}, {"lo", num(c.lo)}, {"hi", num(c.hi)}, {"pass", c.pass()}});
  }
  j["tables"] = nlohmann::json::array();
  for (const auto& t : tables) j["tables"].push_back({{"name", t.name}, {"columns", t.columns}, {"rows", t.rows}});
  j["notes"] = notes;
  j["error"] = error;
  j["passed"] = passed;
  return j;
}

nlohmann::json VerificationReport::to_json() const {
  nlohmann::json j = body();
  j["wall_seconds"] = wall_seconds;
  return j;
}

VerificationReport VerificationReport::from_json(const nlohmann::json& j) {
  VerificationReport r;
  r.id = j.at("id").get<std::string>();
  r.experiment = j.at("experiment").get<std::string>();
  r.config = j.at("config");
  for (const auto& [k, v] : j.at("measured").items()) r.measured[k] = num_or(v, kNaN);
  for (const auto& c : j.at("checks")) {
    r.checks.push_back({c.at("name").get<std::string>(), num_or(c.at("value"), kNaN), num_or(c.at("lo"), -kInf),
                        num_or(c.at("hi"), kInf)});
  }
  for (const auto& t : j.at("tables")) {
    Table tab{t.at("name").get<std::string>(), t.at("columns").get<std::vector<std::string>>(), {}};
    for (const auto& row : t.at("rows")) tab.rows.push_back(row.get<std::vector<nlohmann::json>>());
    r.tables.push_back(std::move(tab));
  }
  r.notes = j.at("notes").get<std::vector<std::string>>();
  r.error = j.at("error").get<std::string>();
  r.passed = j.at("passed").get<bool>();
  r.wall_seconds = j.value("wall_seconds", 0.0);
  return r;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
  std::uint64_t s = root;
  const std::uint64_t a = splitmix64(s);
  std::uint64_t t = a ^ (index * 0xd1342543de82ef95ull);
  return splitmix64(t);
}

VerificationReport run(const ExperimentConfig& cfg) {
  cfg.validate();
  VerificationReport rep;
  rep.experiment = cfg.experiment;
  rep.config = cfg.to_json();
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a(rep.config.dump())));
  rep.id = cfg.experiment + "-" + std::string(hex).substr(0, 10);
  const auto start = std::chrono::steady_clock::now();
  Recorder rec(rep);
  try {
    entry(cfg.experiment).runner(cfg, rec);
  } catch (const std::exception& e) {
    throw std::runtime_error(cfg.experiment + ": " + e.what());
  }
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  rep.passed = rep.recompute_pass();
  return rep;
}

void write_json_atomic(const std::string& path, const nlohmann::json& j) { write_atomic(path, j.dump(2) + "\n"); }

void write_csv_atomic(const std::string& path, const Table& t) {
  std::ostringstream os;
  for (std::size_t k = 0; k < t.columns.size(); ++k) os << (k ? "," : "") << t.columns[k];
  os << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << csv_cell(row[k]);
    os << "\n";
  }
  write_atomic(path, os.str());
}

VerificationReport run_and_write(const ExperimentConfig& cfg) {
  VerificationReport rep = run(cfg);
  for (const auto& t : rep.tables) write_csv_atomic(cfg.output_dir + "/" + rep.id + "." + t.name + ".csv", t);
  write_json_atomic(cfg.output_dir + "/" + rep.id + ".json", rep.to_json());
  return rep;
}

VerificationReport load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open report " + path);
  return VerificationReport::from_json(nlohmann::json::parse(in));
}

// ---------------------------------------------------------------- sweep

bool SweepResult::all_passed() const {
  return std::all_of(reports.begin(), reports.end(), [](const VerificationReport& r) { return r.passed; });
}

Table summarize(const std::vector<VerificationReport>& reports, const std::string& axis_key,
                const std::vector<double>& axis_values) {
  std::set<std::string> keys;
  for (const auto& r : reports) {
    for (const auto& [k, v] : r.measured) keys.insert(k);
  }
  const bool refinement = axis_key == "grid.N";
  Table t{"summary", {}, {}};
  if (!axis_key.empty()) t.columns.push_back(axis_key);
  for (const char* c : {"id", "experiment", "passed", "error"}) t.columns.push_back(c);
  for (const auto& k : keys) {
    t.columns.push_back(k);
    if (refinement) t.columns.push_back(k + "_rel_change");
  }
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    std::vector<nlohmann::json> row;
    if (!axis_key.empty()) row.push_back(i < axis_values.size() ? num(axis_values[i]) : nlohmann::json(nullptr));
    row.push_back(r.id);
    row.push_back(r.experiment);
    row.push_back(r.passed);
    row.push_back(r.error);
    for (const auto& k : keys) {
      const auto it = r.measured.find(k);
      const double v = it == r.measured.end() ? kNaN : it->second;
      row.push_back(num(v));
      if (refinement) {
        double change = kNaN;
        if (i > 0) {
          const auto prev = reports[i - 1].measured.find(k);
          if (prev != reports[i - 1].measured.end() && prev->second != 0.0) change = rel_change(prev->second, v);
        }
        row.push_back(num(change));
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

SweepResult sweep(const ExperimentConfig& base_cfg, const SweepAxis& axis, int workers, bool write) {
  SweepResult result;
  result.reports.resize(axis.values.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < axis.values.size(); i = next++) {
      ExperimentConfig cfg = base_cfg;
      VerificationReport& rep = result.reports[i];
      try {
        set_config_value(cfg, axis.key, axis.values[i]);
        if (axis.key != "seed") cfg.seed = derive_seed(base_cfg.seed, i);
        rep = write ? run_and_write(cfg) : run(cfg);
      } catch (const std::exception& e) {
        rep = VerificationReport{};
        rep.experiment = cfg.experiment;
        rep.id = cfg.experiment + "-failed-" + std::to_string(i);
        rep.config = cfg.to_json();
        rep.error = e.what();
        rep.passed = false;
      }
    }
  };
  const int count = std::max(1, std::min<int>(workers, static_cast<int>(axis.values.size())));
  std::vector<std::thread> pool;
  for (int k = 1; k < count; ++k) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  result.summary = summarize(result.reports, axis.key, axis.values);
  if (write) write_csv_atomic(base_cfg.output_dir + "/summary.csv", result.summary);
  return result;
}

}  // namespace grusin
