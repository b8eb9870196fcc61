// Acceptance run: one line per criterion. With no arguments every criterion
// runs; otherwise only the listed ids. Exit status 1 if any listed
// criterion fails.
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "verify/criteria.hpp"

int main(int argc, char** argv) {
  using namespace isctrack::verify;
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) {
    try {
      ids.push_back(std::stoi(argv[i]));
    } catch (const std::exception&) {
      std::cerr << "usage: acceptance [criterion id ...]\n";
      return 2;
    }
  }
  if (ids.empty()) ids = suite_criteria("all");
  try {
    const auto results = run_criteria(ids, &std::cout);
    int failed = 0;
    for (const auto& r : results) failed += !r.passed;
    std::cout << results.size() - failed << "/" << results.size()
              << " criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
  } catch (const std::exception& ex) {
    std::cerr << "acceptance: " << ex.what() << "\n";
    return 2;
  }
}
