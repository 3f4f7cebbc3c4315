// Runs the acceptance criteria at their default parameters and prints one
// PASS/FAIL line per criterion. Exit status 0 only when every criterion passes.
#include <chrono>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "hetspde/parallel.hpp"
#include "hetspde/verify.hpp"

int main(int argc, char** argv) {
  std::vector<int> ids;
  for (int k = 1; k < argc; ++k) ids.push_back(std::atoi(argv[k]));
  if (ids.empty())
    for (const hetspde::CriterionInfo& c : hetspde::criteria()) ids.push_back(c.id);

  hetspde::CheckOptions options;
  options.threads = hetspde::default_threads();
  int failed = 0;
  for (int id : ids) {
    const auto start = std::chrono::steady_clock::now();
    const std::vector<hetspde::Check> checks = hetspde::run_criterion(id, options);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool pass = !checks.empty();
    for (const hetspde::Check& c : checks) pass = pass && c.pass;
    failed += !pass;

    std::string name = "unknown";
    for (const hetspde::CriterionInfo& c : hetspde::criteria())
      if (c.id == id) name = c.name;
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << id << " " << name << " (" << std::fixed
              << std::setprecision(1) << seconds << " s)\n";
    std::cout << std::defaultfloat << std::setprecision(6);
    for (const hetspde::Check& c : checks) {
      const char* sense = c.compare == hetspde::Compare::kAtMost ? "<=" : c.compare == hetspde::Compare::kAtLeast ? ">=" : "==";
      std::cout << "    " << (c.pass ? "ok  " : "FAIL") << ' ' << c.name << ": " << c.measured << ' ' << sense << ' '
                << c.tolerance;
      if (!c.detail.empty()) std::cout << "  [" << c.detail << ']';
      std::cout << '\n';
    }
    std::cout << std::flush;
  }
  std::cout << (failed == 0 ? "acceptance: all criteria passed" : "acceptance: " + std::to_string(failed) + " failed")
            << '\n';
  return failed == 0 ? 0 : 1;
}
