// Runs every acceptance criterion and prints one PASS/FAIL line each.
// Optional argument: output directory for the artifacts.

#include <iostream>

#include "berkson/acceptance.hpp"

int main(int argc, char** argv) {
  berkson::AcceptanceOptions options;
  if (argc > 1) options.out_dir = argv[1];
  const berkson::AcceptanceRun run = berkson::run_acceptance(options, std::cout);
  std::size_t passed = 0;
  for (const auto& r : run.results) passed += r.pass ? 1 : 0;
  std::cout << passed << "/" << run.results.size() << " criteria pass\n";
  return run.all_pass() ? 0 : 1;
}
