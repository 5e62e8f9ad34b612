#include <doctest.h>

#include <filesystem>
#include <set>

#include "grusin/experiment.hpp"

using namespace grusin;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("grusin_test_" + name);
  fs::remove_all(p);
  return p;
}

int column(const Table& t, const std::string& name) {
  for (std::size_t k = 0; k < t.columns.size(); ++k) {
    if (t.columns[k] == name) return static_cast<int>(k);
  }
  return -1;
}

}  // namespace

TEST_CASE("config parsing") {
  const ExperimentConfig c = parse_config(
      "experiment: conserve\nseed: 3\nparams: {n: 1, m: 1, d1: 0, d1p: 0, d2: 1, d2p: 1}\n"
      "grid: {L: 6, N: 64}\ntimes: [0.1]\noptions: {mass_tol: 1e-8}\n");
  CHECK(c.seed == 3);
  CHECK(c.grid.cells.front() == 64);
  CHECK(c.option("mass_tol") == 1e-8);
  CHECK(c.option("positivity_tol") == default_config("conserve").option("positivity_tol"));
  CHECK_THROWS(parse_config("experiment: conserve\nbogus: 1\n"));
  CHECK_THROWS(parse_config("experiment: conserve\ngrid: {L: 6, cells: 64}\n"));
  CHECK_THROWS(parse_config("experiment: conserve\noptions: {nope: 1}\n"));
  CHECK_THROWS(parse_config("experiment: nonexistent\n"));
}

TEST_CASE("all defaults validate and survive a JSON round trip") {
  const auto names = experiment_names();
  CHECK(names.size() > 30);
  std::set<std::string> groups;
  for (const auto& n : names) {
    const ExperimentConfig c = default_config(n);
    CHECK_NOTHROW(c.validate());
    CHECK(ExperimentConfig::from_json(c.to_json()).to_json() == c.to_json());
    groups.insert(experiment_group(n));
  }
  CHECK(groups == std::set<std::string>{"geometry", "heat", "ineq", "sep", "wave"});
}

TEST_CASE("set_config_value") {
  ExperimentConfig c = default_config("separation");
  set_config_value(c, "params.d1", 0.5);
  set_config_value(c, "grid.N", 128);
  set_config_value(c, "options.t", 0.2);
  CHECK(c.params.d1 == 0.5);
  CHECK(c.grid.cells == std::vector<int>{128});
  CHECK(c.option("t") == 0.2);
  CHECK_THROWS(set_config_value(c, "options.bogus", 1.0));
  CHECK_THROWS(set_config_value(c, "params.q", 1.0));
}

TEST_CASE("seeds") {
  std::uint64_t s = 0;
  CHECK(splitmix64(s) == 0xe220a8397b1dcdafULL);
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(5, 9) == derive_seed(5, 9));
}

TEST_CASE("a run is deterministic and its report round-trips") {
  ExperimentConfig c = default_config("conserve");
  c.grid.cells = {48};
  const VerificationReport a = run(c);
  const VerificationReport b = run(c);
  CHECK(a.passed);
  CHECK(a.body() == b.body());
  CHECK(a.id.rfind("conserve-", 0) == 0);

  const VerificationReport back = VerificationReport::from_json(a.to_json());
  CHECK(back.body() == a.body());
  CHECK(back.recompute_pass() == a.passed);

  ExperimentConfig other = c;
  other.seed = 11;
  CHECK(run(other).id != a.id);
}

TEST_CASE("random experiments depend on the seed only") {
  ExperimentConfig c = default_config("monotone");
  set_config_value(c, "options.trials", 10);
  const VerificationReport a = run(c);
  CHECK(a.passed);
  CHECK(run(c).body() == a.body());
  c.seed = 99;
  CHECK(run(c).body()["tables"] != a.body()["tables"]);
}

TEST_CASE("non-finite measurements survive JSON") {
  VerificationReport r;
  r.id = "x";
  r.experiment = "conserve";
  r.measured["nan"] = std::numeric_limits<double>::quiet_NaN();
  r.checks.push_back({"open", 1.0, -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()});
  const VerificationReport back = VerificationReport::from_json(nlohmann::json::parse(r.to_json().dump()));
  CHECK(std::isnan(back.measured.at("nan")));
  CHECK(back.checks[0].pass());
  CHECK(std::isinf(back.checks[0].lo));
}

TEST_CASE("run_and_write writes atomically") {
  const fs::path dir = scratch("write");
  ExperimentConfig c = default_config("crossnorm");
  c.output_dir = dir.string();
  const VerificationReport r = run_and_write(c);
  CHECK(r.passed);
  CHECK(fs::exists(dir / (r.id + ".json")));
  bool has_csv = false;
  for (const auto& e : fs::directory_iterator(dir)) {
    CHECK(e.path().extension() != ".tmp");
    if (e.path().extension() == ".csv") has_csv = true;
  }
  CHECK(has_csv);
  CHECK(load_report((dir / (r.id + ".json")).string()).body() == r.body());
  fs::remove_all(dir);
}

TEST_CASE("empty sweep") {
  const SweepResult s = sweep(default_config("conserve"), {"params.d1", {}});
  CHECK(s.reports.empty());
  CHECK(s.summary.rows.empty());
  CHECK(s.all_passed());
}

TEST_CASE("a failing sweep entry does not stop the sweep") {
  ExperimentConfig c = default_config("approx");
  const SweepResult s = sweep(c, {"grid.N", {24, 3}}, 2);
  REQUIRE(s.reports.size() == 2);
  CHECK(s.reports[0].error.empty());
  CHECK_FALSE(s.reports[1].error.empty());
  CHECK_FALSE(s.reports[1].passed);
  CHECK_FALSE(s.all_passed());
  CHECK(column(s.summary, "unregularized_gap_rel_change") >= 0);
}

TEST_CASE("refinement sweep writes a summary with relative changes") {
  const fs::path dir = scratch("sweep");
  ExperimentConfig c = default_config("conserve");
  c.output_dir = dir.string();
  const SweepResult s = sweep(c, {"grid.N", {32, 64}}, 2, true);
  CHECK(s.all_passed());
  CHECK(fs::exists(dir / "summary.csv"));
  const int k = column(s.summary, "mass_defect_rel_change");
  REQUIRE(k >= 0);
  CHECK(s.summary.rows[0][static_cast<std::size_t>(k)].is_null());
  CHECK(s.summary.rows[1][static_cast<std::size_t>(k)].is_number());
  fs::remove_all(dir);
}

TEST_CASE("separation weakens with the degeneracy") {
  ExperimentConfig c = default_config("separation");
  c.options["refine"] = {256, 512};
  const SweepResult s = sweep(c, {"params.d1", {0.25, 0.5, 0.75}}, 3);
  REQUIRE(s.reports.size() == 3);
  double prev = 2.0;
  for (const auto& r : s.reports) {
    REQUIRE(r.error.empty());
    const double v = r.measured.at("transmitted_final");
    CHECK(v < prev);
    prev = v;
  }
}
