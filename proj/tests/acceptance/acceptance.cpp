// Runs the acceptance criteria as named experiments with their default configs.
// Prints one line per criterion; exit status is 0 only when every selected criterion passes.

#include <cstdlib>
#include <iomanip>
#include <sstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "grusin/experiment.hpp"

namespace {

struct Criterion {
  int id;
  std::string title;
  std::vector<std::string> experiments;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> list{
      {1, "heat semigroup conserves mass and positivity", {"conserve"}},
      {2, "fractional Hardy constant", {"hardy", "hardy_3d"}},
      {3, "on-diagonal crossnorm exponents", {"crossnorm", "crossnorm_large", "crossnorm_grusin"}},
      {4, "graph distance matches the quasi-distance", {"distance", "distance_mixed", "distance_3d"}},
      {5, "ball volume law and doubling", {"volume", "volume_mixed", "volume_3d"}},
      {6, "separation for strong degeneracy, transmission for weak", {"separation", "separation_weak"}},
      {7, "cutoff energy scaling", {"cutoff"}},
      {8, "finite propagation speed and local equality", {"propagation_free", "propagation", "local_equality"}},
      {9, "Davies-Gaffney estimate", {"gaffney"}},
      {10, "Gaussian upper and on-diagonal lower bounds", {"gauss", "gauss_1d", "lower", "lower_1d"}},
      {11, "matrix monotonicity and square-root subadditivity", {"monotone", "sqrt"}},
      {12, "Nash and subelliptic inequalities", {"nash_free", "nash", "neumann"}},
      {13, "kernel comparison decay rate", {"compare"}},
  };
  return list;
}

bool run_criterion(const Criterion& c, bool verbose) {
  bool ok = true;
  std::string detail;
  for (const auto& name : c.experiments) {
    grusin::VerificationReport r;
    try {
      r = grusin::run(grusin::default_config(name));
    } catch (const std::exception& e) {
      r.experiment = name;
      r.error = e.what();
      r.passed = false;
    }
    ok = ok && r.passed;
    if (!r.passed) {
      detail += " " + name + ":";
      if (!r.error.empty()) detail += " error(" + r.error + ")";
      for (const auto& ch : r.checks) {
        if (!ch.pass()) {
          std::ostringstream os;
          os << std::setprecision(4) << " " << ch.name << "=" << ch.value << " not in [" << ch.lo << "," << ch.hi << "]";
          detail += os.str();
        }
      }
    }
    if (verbose) {
      for (const auto& ch : r.checks) {
        std::cout << "    " << name << " " << (ch.pass() ? "pass" : "FAIL") << " " << ch.name << " = " << ch.value
                  << " in [" << ch.lo << ", " << ch.hi << "]\n";
      }
    }
  }
  std::cout << "criterion " << std::setw(2) << c.id << ": " << (ok ? "PASS" : "FAIL") << "  " << c.title;
  if (!ok) std::cout << "  --" << detail;
  std::cout << std::endl;
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int only = 0;
  bool verbose = false;
  app.add_option("--criterion", only, "run a single criterion (1-13)")->check(CLI::Range(1, 13));
  app.add_flag("--verbose", verbose, "print every check");
  CLI11_PARSE(app, argc, argv);

  bool all = true;
  for (const auto& c : criteria()) {
    if (only != 0 && c.id != only) continue;
    all = run_criterion(c, verbose) && all;
  }
  return all ? EXIT_SUCCESS : EXIT_FAILURE;
}
