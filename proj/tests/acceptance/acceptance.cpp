// Runs the built-in configuration of every experiment and prints one
// PASS/FAIL line per check, plus the wall-clock limits.
// Usage: acceptance [--out DIR] [--workers W] [E1 E5 ...]

#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "bschain/errors.hpp"
#include "bschain/harness.hpp"

namespace {

// Seconds; experiments without an entry have no runtime criterion.
const std::map<std::string, double> kRuntimeLimit{
    {"E1", 60.0}, {"E2", 3600.0}, {"E4", 1800.0}, {"E6", 60.0}, {"E7", 10.0}, {"E9", 60.0},
};

}  // namespace

int main(int argc, char** argv) {
  std::string out = "acceptance_out";
  int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::string> ids;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--out" && i + 1 < argc) {
      out = argv[++i];
    } else if (a == "--workers" && i + 1 < argc) {
      workers = std::atoi(argv[++i]);
    } else {
      ids.push_back(a);
    }
  }
  if (ids.empty())
    for (const auto& e : bschain::list_experiments()) ids.push_back(e.id);

  int failed = 0;
  for (const auto& id : ids) {
    bschain::RunOptions opts;
    opts.out_dir = out + "/" + id;
    opts.workers = workers;
    bschain::RunReport rep;
    try {
      rep = bschain::run(bschain::default_spec(id), opts);
    } catch (const bschain::Error& e) {
      std::cout << "FAIL " << id << " run: " << e.what() << std::endl;
      ++failed;
      continue;
    }
    for (const auto& c : rep.checks) {
      std::cout << (c.passed ? "PASS " : "FAIL ") << id << ' ' << c.name << ": " << c.measured << ' ' << c.comparator
                << ' ' << c.threshold << '\n';
      failed += c.passed ? 0 : 1;
    }
    for (const auto& w : rep.warnings) std::cout << "WARN " << id << ' ' << w << '\n';
    if (const auto it = kRuntimeLimit.find(id); it != kRuntimeLimit.end()) {
      const bool ok = rep.wall_seconds < it->second;
      std::cout << (ok ? "PASS " : "FAIL ") << id << " runtime_seconds: " << rep.wall_seconds << " < " << it->second
                << '\n';
      failed += ok ? 0 : 1;
    }
    std::cout << std::flush;
  }
  std::cout << (failed ? "acceptance: " + std::to_string(failed) + " check(s) failed" : std::string("acceptance: all checks passed"))
            << std::endl;
  return failed ? 1 : 0;
}
