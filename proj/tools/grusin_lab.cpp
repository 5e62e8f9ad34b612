#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "grusin/experiment.hpp"
#include "grusin/operator.hpp"

namespace {

using grusin::ExperimentConfig;
using grusin::VerificationReport;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> numbers(const std::string& s, char sep = ',') {
  std::vector<double> out;
  for (const auto& v : split(s, sep)) out.push_back(std::stod(v));
  return out;
}

std::map<std::string, std::string> key_values(const std::string& s) {
  std::map<std::string, std::string> out;
  for (const auto& kv : split(s, ',')) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("expected key=value, got '" + kv + "'");
    out[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return out;
}

// n=1,m=1,d1=0,d1p=0,d2=1,d2p=1,rep=pure_power
void apply_params(ExperimentConfig& c, const std::string& spec) {
  for (const auto& [k, v] : key_values(spec)) {
    if (k == "rep" || k == "representative") {
      c.representative = grusin::parse_representative(v);
    } else {
      grusin::set_config_value(c, "params." + k, std::stod(v));
    }
  }
}

// L=4/3,N=160,min_width=2e-3/1e-4 ; '/' separates per-axis values
void apply_grid(ExperimentConfig& c, const std::string& spec) {
  for (const auto& [k, v] : key_values(spec)) {
    const auto vals = numbers(v, '/');
    if (k == "L") {
      c.grid.half_width = vals;
    } else if (k == "N") {
      c.grid.cells.clear();
      for (double x : vals) c.grid.cells.push_back(static_cast<int>(x));
    } else if (k == "min_width") {
      c.grid.min_width = vals;
    } else {
      throw std::invalid_argument("unknown grid key '" + k + "'");
    }
  }
}

// x1lo,x2lo:x1hi,x2hi
void apply_set(ExperimentConfig& c, const std::string& spec) {
  const auto parts = split(spec, ':');
  if (parts.size() != 2) throw std::invalid_argument("--set expects lo:hi");
  if (!c.options.count("set_lo")) throw std::invalid_argument(c.experiment + " takes no set");
  c.options["set_lo"] = numbers(parts[0]);
  c.options["set_hi"] = numbers(parts[1]);
}

void set_option(ExperimentConfig& c, const std::string& name, double v) { grusin::set_config_value(c, "options." + name, v); }

void print_report(const VerificationReport& r) {
  std::cout << r.id << " (" << r.experiment << ")  " << (r.passed ? "PASS" : "FAIL") << "  " << r.wall_seconds << " s\n";
  for (const auto& c : r.checks) {
    std::cout << "  [" << (c.pass() ? "pass" : "FAIL") << "] " << c.name << " = " << c.value << "  in [" << c.lo << ", "
              << c.hi << "]\n";
  }
  for (const auto& n : r.notes) std::cout << "  note: " << n << "\n";
  if (!r.error.empty()) std::cout << "  error: " << r.error << "\n";
}

struct Globals {
  std::string config_path;
  std::string out_dir;
  int workers = 1;
  std::optional<std::uint64_t> seed;
  std::string dump_operator;
};

struct Overrides {
  std::string experiment;
  std::string params;
  std::string grid;
  std::string times;
  std::string set;
  std::string sweep;
  std::optional<double> time;
  std::optional<double> slack;
  std::optional<int> trials;
  bool list = false;
};

int execute(const std::string& group, const Globals& g, const Overrides& o) {
  if (o.list) {
    for (const auto& name : grusin::experiment_names()) {
      if (grusin::experiment_group(name) == group) std::cout << name << "\n";
    }
    return 0;
  }
  ExperimentConfig cfg;
  if (!g.config_path.empty()) {
    cfg = grusin::load_config(g.config_path);
    if (!o.experiment.empty() && o.experiment != cfg.experiment) {
      cfg = grusin::default_config(o.experiment);
      std::cerr << "warning: --experiment overrides the experiment named in the config; config values dropped\n";
    }
  } else {
    if (o.experiment.empty()) throw std::invalid_argument("give --config or --experiment (see --list)");
    cfg = grusin::default_config(o.experiment);
  }
  const std::string owner = grusin::experiment_group(cfg.experiment);
  if (owner != group && !(group == "heat" && owner == "sep")) {
    throw std::invalid_argument(cfg.experiment + " belongs to the '" + owner + "' subcommand");
  }
  if (!g.out_dir.empty()) cfg.output_dir = g.out_dir;
  if (g.seed) cfg.seed = *g.seed;
  if (!o.params.empty()) apply_params(cfg, o.params);
  if (!o.grid.empty()) apply_grid(cfg, o.grid);
  if (!o.times.empty()) cfg.times = numbers(o.times);
  if (!o.set.empty()) apply_set(cfg, o.set);
  if (o.time) set_option(cfg, "t", *o.time);
  if (o.slack) set_option(cfg, "eta", *o.slack);
  if (o.trials) set_option(cfg, cfg.options.count("trials") ? "trials" : "pairs", *o.trials);
  cfg.validate();

  if (!g.dump_operator.empty()) {
    const grusin::Grid grid = cfg.grid.build(cfg.params.n, cfg.params.m);
    const grusin::CoefficientField field(cfg.params, cfg.representative);
    grusin::write_matrix_market(grusin::assemble(grid, field, grusin::Boundary::neumann_box()), g.dump_operator);
    std::cout << "operator written to " << g.dump_operator << "\n";
  }

  if (!o.sweep.empty()) {
    const auto eq = o.sweep.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--sweep expects key=v1,v2,...");
    const grusin::SweepAxis axis{o.sweep.substr(0, eq), numbers(o.sweep.substr(eq + 1))};
    const auto res = grusin::sweep(cfg, axis, g.workers, true);
    for (const auto& r : res.reports) print_report(r);
    std::cout << "summary: " << cfg.output_dir << "/summary.csv (" << res.reports.size() << " runs)\n";
    return res.all_passed() ? 0 : 1;
  }
  const VerificationReport r = grusin::run_and_write(cfg);
  print_report(r);
  std::cout << "report: " << cfg.output_dir << "/" << r.id << ".json\n";
  return r.passed ? 0 : 1;
}

int report(const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<VerificationReport> reports;
  std::vector<fs::path> paths;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".json") paths.push_back(e.path());
  }
  std::sort(paths.begin(), paths.end());
  bool ok = true;
  for (const auto& p : paths) {
    VerificationReport r = grusin::load_report(p.string());
    const bool recomputed = r.recompute_pass();
    if (recomputed != r.passed) std::cout << "  inconsistent pass flag in " << p << "\n";
    ok = ok && recomputed;
    std::cout << (recomputed ? "PASS " : "FAIL ") << r.id << "\n";
    reports.push_back(std::move(r));
  }
  const auto summary = grusin::summarize(reports);
  grusin::write_csv_atomic(dir + "/summary.csv", summary);
  std::cout << reports.size() << " reports, summary in " << dir << "/summary.csv\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical experiments for degenerate Grusin-type operators"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "YAML experiment config")->check(CLI::ExistingFile);
  app.add_option("--out", g.out_dir, "output directory");
  app.add_option("--workers", g.workers, "concurrent sweep entries")->check(CLI::PositiveNumber);
  app.add_option("--seed", g.seed, "root seed");
  app.add_option("--dump-operator", g.dump_operator, "write the assembled operator (Matrix Market)");

  std::map<std::string, Overrides> over;
  std::map<std::string, CLI::App*> subs;
  const std::map<std::string, std::string> help{{"geometry", "distance and ball-volume experiments"},
                                                {"heat", "heat kernel experiments"},
                                                {"wave", "finite propagation speed"},
                                                {"ineq", "Hardy, matrix, Nash and subelliptic suites"},
                                                {"sep", "separation and cutoff energies"}};
  for (const auto& [name, text] : help) {
    auto* sub = app.add_subcommand(name, text);
    auto& o = over[name];
    sub->add_option(name == "ineq" ? "--suite" : "--experiment", o.experiment, "named experiment");
    sub->add_flag("--list", o.list, "list experiments of this subcommand");
    sub->add_option("--sweep", o.sweep, "key=v1,v2,... e.g. params.d1=0.25,0.5,0.75 or grid.N=256,512");
    sub->add_option("--params", o.params, "n=1,m=1,d1=0,d1p=0,d2=1,d2p=1,rep=pure_power");
    sub->add_option("--grid", o.grid, "L=6,N=256[,min_width=...]; '/' separates per-axis values");
    if (name == "heat") sub->add_option("--times", o.times, "comma separated times");
    if (name == "wave") {
      sub->add_option("--set", o.set, "box lo:hi, e.g. -0.25,-0.25:0.25,0.25");
      sub->add_option("--time", o.time, "wave time");
      sub->add_option("--slack", o.slack, "eta");
    }
    if (name == "ineq" || name == "heat") sub->add_option("--trials", o.trials, "random trials");
    subs[name] = sub;
  }
  std::string report_dir = "out";
  auto* rep = app.add_subcommand("report", "aggregate the JSON reports of a directory");
  rep->add_option("--dir", report_dir, "directory with reports");

  CLI11_PARSE(app, argc, argv);
  try {
    if (rep->parsed()) return report(g.out_dir.empty() ? report_dir : g.out_dir);
    for (const auto& [name, sub] : subs) {
      if (sub->parsed()) return execute(name, g, over[name]);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
