#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "bschain/errors.hpp"
#include "bschain/harness.hpp"

namespace {

// Exit codes: 0 ok, 1 a check failed under --check, 2 usage or budget error, 3 runtime error.
int run_command(const std::string& path, const std::string& out, std::optional<std::uint64_t> seed, int workers,
                bool check) {
  bschain::ExperimentSpec spec = bschain::load_spec(path);
  if (seed) spec.seed = *seed;
  bschain::RunOptions opts;
  opts.out_dir = out;
  opts.workers = workers;
  const bschain::RunReport rep = bschain::run(spec, opts);
  for (const auto& c : rep.checks)
    std::cout << (c.passed ? "PASS " : "FAIL ") << rep.experiment << ' ' << c.name << ": " << c.measured << ' '
              << c.comparator << ' ' << c.threshold << '\n';
  for (const auto& w : rep.warnings) std::cout << "WARN " << w << '\n';
  std::cout << "wrote " << rep.out_dir << " (" << rep.wall_seconds << " s)\n";
  return check && !rep.passed() ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical experiments for a harmonic chain with exchange noise"};
  app.set_version_flag("--version", bschain::version_string());
  app.require_subcommand(1);

  std::string spec_path, out_dir;
  std::optional<std::uint64_t> seed;
  int workers = 1;
  bool check = false;

  auto* run = app.add_subcommand("run", "run an experiment spec");
  run->add_option("spec", spec_path, "YAML experiment spec")->required();
  run->add_option("--out", out_dir, "output directory (default: spec output, then $BSCHAIN_OUT/<id>, then out/<id>)");
  run->add_option("--seed", seed, "override the master seed");
  run->add_option("--workers", workers, "replica worker threads")->check(CLI::PositiveNumber);
  run->add_flag("--check", check, "exit with status 1 if any acceptance check fails");

  auto* list = app.add_subcommand("list-experiments", "list experiment ids");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "check a spec without running it");
  validate->add_option("spec", validate_path, "YAML experiment spec")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return run_command(spec_path, out_dir, seed, workers, check);
    if (*list) {
      for (const auto& e : bschain::list_experiments()) std::cout << e.id << '\t' << e.title << '\n';
      return 0;
    }
    if (*validate) {
      const auto spec = bschain::load_spec(validate_path);
      bschain::validate_spec(spec);
      const double events = bschain::projected_events(spec);
      if (events > spec.budget) throw bschain::BudgetError("projected events exceed the budget");
      std::cout << "ok " << spec.id << " (projected events " << events << ")\n";
      return 0;
    }
  } catch (const bschain::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const bschain::BudgetError& e) {
    std::cerr << "budget error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
