#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bschain/errors.hpp"
#include "bschain/harness.hpp"

using namespace bschain;

namespace {

std::string field_of(const std::string& yaml) {
  try {
    validate_spec(parse_spec(yaml));
  } catch (const UsageError& e) {
    return e.field();
  }
  return "";
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("shipped configurations") {
  const auto list = list_experiments();
  REQUIRE(list.size() == 11);
  for (const auto& info : list) {
    CAPTURE(info.id);
    const auto spec = default_spec(info.id);
    CHECK(spec.id == info.id);
    CHECK_NOTHROW(validate_spec(spec));
    CHECK(projected_events(spec) <= spec.budget);
    std::string lower = info.id;
    lower[0] = 'e';
    const auto file = load_spec(std::string(BSCHAIN_CONFIG_DIR) + "/" + lower + ".yaml");
    CHECK(spec_to_yaml(file) == spec_to_yaml(spec));
    CHECK(spec_to_yaml(parse_spec(spec_to_yaml(spec))) == spec_to_yaml(spec));
  }
  CHECK_THROWS_AS(default_spec("E12"), UsageError);
}

TEST_CASE("schema errors name the field") {
  CHECK(field_of("experiment: E1\nparams: {N: [16], alpha: 0.5, kappa: [1]}\nT: 1\nbogus: 1\n") == "bogus");
  CHECK(field_of("experiment: E1\nparams: {N: [16], gamma: 2}\nT: 1\n") == "params.gamma");
  CHECK(field_of("experiment: E1\nparams: {N: [16, 3]}\nT: 1\n") == "params.N[1]");
  CHECK(field_of("experiment: E1\nparams: {N: [16], beta: -1}\nT: 1\n") == "params.beta");
  CHECK(field_of("experiment: E1\nparams: {N: [16]}\nT: 0\n") == "T");
  CHECK(field_of("experiment: E1\nparams: {N: [16], alpha: abc}\nT: 1\n") == "params.alpha");
  CHECK(field_of("experiment: E99\nparams: {N: [16]}\nT: 1\n") == "experiment");
  CHECK(field_of("params: {N: [16]}\n") == "experiment");
  CHECK(field_of("experiment: E1\nparams: {N: [16]}\nT: 1\nschedule: [0.5, 0.2]\n") == "schedule[1]");
  CHECK(field_of("experiment: E1\nparams: {N: [16]}\nT: 1\nschedule: {points: 0}\n") == "schedule.points");
  CHECK(field_of("experiment: E1\nparams: {N: [16]}\nT: 1\ntolerances: 3\n") == "tolerances");
  CHECK(field_of("experiment: E2\nparams: {N: [16]}\nT: 1\nreplicas: 1\n") == "replicas");
  CHECK(field_of("experiment: E2\nparams: {N: [16]}\nT: 1\nreplicas: 10\nprofiles: {v0: {cos: [0, 1]}}\n") ==
        "profiles");
  CHECK(field_of("experiment: E2\nparams: {N: [16]}\nT: 1\nreplicas: 10\n"
                 "profiles: {v0: {cos: [0, 1]}, e0: {cos: [1]}}\n") == "profiles.e0");
  CHECK(field_of("experiment: E1\nparams: {N: [16]\nT: 1\n") == "<root>");
  CHECK(field_of("experiment: E1\nparams: {N: [16], alpha: 20, kappa: [1]}\nT: 1\n") == "params");
  CHECK(field_of("experiment: E1\nparams: {N: [16], alpha: 0.5, kappa: [1]}\nT: 1\n").empty());
}

TEST_CASE("schedule and ranges") {
  const auto s = parse_spec("experiment: E7\nparams: {N: {from: 2, to: 5}}\nT: 2\nschedule: {points: 4}\n");
  CHECK(s.n_list == std::vector<int>{2, 3, 4, 5});
  CHECK(s.schedule == std::vector<double>{0.5, 1.0, 1.5, 2.0});
  const auto one = parse_spec("experiment: E1\nparams: {N: 32, kappa: 1.5}\nT: 1\ntolerances: {drift: 1.0e-6}\n");
  CHECK(one.n_list == std::vector<int>{32});
  CHECK(one.kappa_list == std::vector<double>{1.5});
  CHECK(one.tolerance("drift", 0.0) == 1e-6);
  CHECK(one.tolerance("missing", 7.0) == 7.0);
}

TEST_CASE("budget is enforced before running") {
  auto s = default_spec("E2");
  s.budget = 10.0;
  RunOptions o;
  o.write_files = false;
  CHECK_THROWS_AS(run(s, o), BudgetError);
}

TEST_CASE("runs are reproducible across worker counts") {
  auto s = default_spec("E2");
  s.n_list = {8};
  s.replicas = 400;
  s.horizon = 0.01;
  RunOptions o;
  o.write_files = false;
  o.workers = 1;
  const auto a = run(s, o);
  o.workers = 4;
  const auto b = run(s, o);
  CHECK_FALSE(a.checks.empty());
  CHECK(a.summary_json() == b.summary_json());
  CHECK(a.tables == b.tables);
}

TEST_CASE("E7 end to end") {
  auto s = default_spec("E7");
  s.n_list = {2, 3, 4, 8, 16};
  const auto dir = std::filesystem::temp_directory_path() / "bschain_test_e7";
  std::filesystem::remove_all(dir);
  RunOptions o;
  o.out_dir = dir.string();
  const auto rep = run(s, o);
  CHECK(rep.passed());
  CHECK(rep.out_dir == dir.string());
  CHECK(std::filesystem::exists(dir / "manifest.json"));
  CHECK(std::filesystem::exists(dir / "kernel.csv"));
  const auto summary = slurp(dir / "summary.json");
  CHECK(summary == rep.summary_json());
  CHECK(summary.find("\"experiment\": \"E7\"") != std::string::npos);
  CHECK(summary.find("wall") == std::string::npos);
  CHECK(slurp(dir / "manifest.json").find("wall_seconds") != std::string::npos);
  std::filesystem::remove_all(dir);
}
