// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one line per criterion, nonzero exit on any failure.
#include <iostream>
#include <string>

#include "fmip/selfcheck.hpp"

int main() {
  std::cout << "fmip acceptance suite\n";
  const auto results = fmip::run_acceptance_suite(std::cout);
  int failures = 0;
  for (const fmip::CheckResult& r : results) failures += r.pass ? 0 : 1;
  std::cout << (failures == 0 ? std::string("ALL CRITERIA PASSED")
                              : "FAILURES: " + std::to_string(failures))
            << " (" << results.size() << " checks)\n";
  return failures == 0 ? 0 : 1;
}
