#include "bschain/harness.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "bschain/chain.hpp"
#include "bschain/errors.hpp"
#include "experiments.hpp"

namespace bschain {

namespace {

struct DefaultConfig {
  const char* stem;
  const char* yaml;
};

const DefaultConfig kDefaults[] = {
#include "default_configs.inc"
};

const std::vector<ExperimentInfo> kExperiments = {
    {"E1", "conservation of volume and energy (event-driven scheme)"},
    {"E2", "Monte Carlo moments vs closed moment ODE"},
    {"E3", "two independent moment formulations and dense exponential"},
    {"E4", "two-point correlation decay O(1/N)"},
    {"E5", "energy profile convergence rate"},
    {"E6", "local time of the reflected walk O(1/N)"},
    {"E7", "H^{-1,N} kernel identities"},
    {"E8", "fourth-moment integral vs (1 + alpha_N N)"},
    {"E9", "random-walk derivative bounds"},
    {"E10", "quadratic variation of the volume martingale"},
    {"E11", "hydrodynamic limits, kappa = 1 and kappa > 1"},
};

template <typename T>
T as(const YAML::Node& node, const std::string& path) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw UsageError(path, "has the wrong type");
  }
}

void check_keys(const YAML::Node& node, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!node.IsMap()) throw UsageError(path.empty() ? "<root>" : path, "must be a mapping");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (!ok.count(key)) throw UsageError(path.empty() ? key : path + "." + key, "unknown key");
  }
}

std::vector<double> number_list(const YAML::Node& node, const std::string& path) {
  if (node.IsScalar()) return {as<double>(node, path)};
  if (!node.IsSequence()) throw UsageError(path, "must be a number or a list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < node.size(); ++i) out.push_back(as<double>(node[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<int> size_list(const YAML::Node& node, const std::string& path) {
  if (node.IsMap()) {
    check_keys(node, path, {"from", "to"});
    if (!node["from"] || !node["to"]) throw UsageError(path, "range needs from and to");
    const int lo = as<int>(node["from"], path + ".from"), hi = as<int>(node["to"], path + ".to");
    if (hi < lo) throw UsageError(path, "empty range");
    std::vector<int> out;
    for (int n = lo; n <= hi; ++n) out.push_back(n);
    return out;
  }
  if (node.IsScalar()) return {as<int>(node, path)};
  if (!node.IsSequence()) throw UsageError(path, "must be an integer, a list, or {from, to}");
  std::vector<int> out;
  for (std::size_t i = 0; i < node.size(); ++i) out.push_back(as<int>(node[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

TrigProfile trig_profile(const YAML::Node& node, const std::string& path) {
  check_keys(node, path, {"cos", "sin"});
  TrigProfile p;
  if (node["cos"]) p.cos = number_list(node["cos"], path + ".cos");
  if (node["sin"]) p.sin = number_list(node["sin"], path + ".sin");
  return p;
}

YAML::Node trig_node(const TrigProfile& p) {
  YAML::Node n;
  n.SetStyle(YAML::EmitterStyle::Flow);
  if (!p.cos.empty()) n["cos"] = p.cos;
  if (!p.sin.empty()) n["sin"] = p.sin;
  return n;
}

std::string resolve_out_dir(const ExperimentSpec& spec, const RunOptions& opts) {
  if (!opts.out_dir.empty()) return opts.out_dir;
  if (!spec.output.empty()) return spec.output;
  if (const char* env = std::getenv("BSCHAIN_OUT"); env && *env) return std::string(env) + "/" + spec.id;
  return "out/" + spec.id;
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ResourceError("cannot write " + path.string());
  f << body;
}

}  // namespace

SpectralProfile TrigProfile::spectral(int modes) const { return SpectralProfile::from_trig(cos, sin, modes); }

double TrigProfile::operator()(double u) const {
  double s = 0.0;
  for (std::size_t k = 0; k < cos.size(); ++k) s += cos[k] * std::cos(2.0 * M_PI * static_cast<double>(k) * u);
  for (std::size_t k = 0; k < sin.size(); ++k) s += sin[k] * std::sin(2.0 * M_PI * static_cast<double>(k + 1) * u);
  return s;
}

double ExperimentSpec::tolerance(const std::string& key, double fallback) const {
  const auto it = tolerances.find(key);
  return it == tolerances.end() ? fallback : it->second;
}

ExperimentSpec parse_spec(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw UsageError("<root>", std::string("YAML parse error: ") + e.what());
  }
  check_keys(root, "", {"experiment", "params", "profiles", "T", "schedule", "replicas", "seed", "output", "budget",
                        "tolerances"});
  ExperimentSpec s;
  if (!root["experiment"]) throw UsageError("experiment", "is required");
  s.id = as<std::string>(root["experiment"], "experiment");
  if (root["params"]) {
    const auto p = root["params"];
    check_keys(p, "params", {"N", "alpha", "kappa", "beta", "rho"});
    if (p["N"]) s.n_list = size_list(p["N"], "params.N");
    if (p["alpha"]) s.alpha = as<double>(p["alpha"], "params.alpha");
    if (p["kappa"]) s.kappa_list = number_list(p["kappa"], "params.kappa");
    if (p["beta"]) s.beta = as<double>(p["beta"], "params.beta");
    if (p["rho"]) s.rho = as<double>(p["rho"], "params.rho");
  }
  if (root["profiles"]) {
    const auto p = root["profiles"];
    check_keys(p, "profiles", {"v0", "e0", "G"});
    if (p["v0"]) s.v0 = trig_profile(p["v0"], "profiles.v0");
    if (p["e0"]) s.e0 = trig_profile(p["e0"], "profiles.e0");
    if (p["G"]) s.test_function = trig_profile(p["G"], "profiles.G");
  }
  if (root["T"]) s.horizon = as<double>(root["T"], "T");
  if (root["schedule"]) {
    const auto n = root["schedule"];
    if (n.IsMap()) {
      check_keys(n, "schedule", {"points"});
      const int pts = as<int>(n["points"], "schedule.points");
      if (pts < 1) throw UsageError("schedule.points", "must be >= 1");
      for (int i = 1; i <= pts; ++i) s.schedule.push_back(s.horizon * i / pts);
    } else {
      s.schedule = number_list(n, "schedule");
    }
  }
  if (root["replicas"]) s.replicas = as<std::uint64_t>(root["replicas"], "replicas");
  if (root["seed"]) s.seed = as<std::uint64_t>(root["seed"], "seed");
  if (root["output"]) s.output = as<std::string>(root["output"], "output");
  if (root["budget"]) s.budget = as<double>(root["budget"], "budget");
  if (root["tolerances"]) {
    const auto t = root["tolerances"];
    if (!t.IsMap()) throw UsageError("tolerances", "must be a mapping");
    for (const auto& kv : t) {
      const std::string key = kv.first.as<std::string>();
      s.tolerances[key] = as<double>(kv.second, "tolerances." + key);
    }
  }
  return s;
}

ExperimentSpec load_spec(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("<file>", "cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_spec(ss.str());
}

std::string spec_to_yaml(const ExperimentSpec& s) {
  YAML::Node root;
  root["experiment"] = s.id;
  YAML::Node p;
  p["N"] = s.n_list;
  p["N"].SetStyle(YAML::EmitterStyle::Flow);
  p["alpha"] = s.alpha;
  p["kappa"] = s.kappa_list;
  p["kappa"].SetStyle(YAML::EmitterStyle::Flow);
  p["beta"] = s.beta;
  p["rho"] = s.rho;
  root["params"] = p;
  if (s.v0 || s.e0 || s.test_function) {
    YAML::Node pr;
    if (s.v0) pr["v0"] = trig_node(*s.v0);
    if (s.e0) pr["e0"] = trig_node(*s.e0);
    if (s.test_function) pr["G"] = trig_node(*s.test_function);
    root["profiles"] = pr;
  }
  root["T"] = s.horizon;
  if (!s.schedule.empty()) {
    root["schedule"] = s.schedule;
    root["schedule"].SetStyle(YAML::EmitterStyle::Flow);
  }
  root["replicas"] = s.replicas;
  root["seed"] = s.seed;
  if (!s.output.empty()) root["output"] = s.output;
  root["budget"] = s.budget;
  for (const auto& [k, v] : s.tolerances) root["tolerances"][k] = v;
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << root;
  return std::string(out.c_str()) + "\n";
}

std::vector<ExperimentInfo> list_experiments() { return kExperiments; }

void validate_spec(const ExperimentSpec& s) {
  const bool known = std::any_of(kExperiments.begin(), kExperiments.end(), [&](const auto& e) { return e.id == s.id; });
  if (!known) throw UsageError("experiment", "unknown experiment id '" + s.id + "'");
  if (s.n_list.empty()) throw UsageError("params.N", "at least one N is required");
  const int n_floor = s.id == "E7" ? 2 : (s.id == "E6" || s.id == "E9") ? 3 : 5;
  for (std::size_t i = 0; i < s.n_list.size(); ++i)
    if (s.n_list[i] < n_floor)
      throw UsageError("params.N[" + std::to_string(i) + "]", "must be >= " + std::to_string(n_floor));
  if (s.kappa_list.empty()) throw UsageError("params.kappa", "at least one kappa is required");
  if (!(s.beta > 0.0)) throw UsageError("params.beta", "must be > 0");
  if (s.id != "E7" && !(s.horizon > 0.0)) throw UsageError("T", "must be > 0");
  double last = 0.0;
  for (std::size_t i = 0; i < s.schedule.size(); ++i) {
    if (s.schedule[i] < last || s.schedule[i] > s.horizon * (1 + 1e-12))
      throw UsageError("schedule[" + std::to_string(i) + "]", "times must be sorted within [0, T]");
    last = s.schedule[i];
  }
  if (detail::uses_chain(s.id)) {
    for (int n : s.n_list)
      for (double k : s.kappa_list) {
        try {
          make_params(n, s.alpha, k);
        } catch (const InvalidParameter& e) {
          throw UsageError("params", e.what());
        }
      }
  }
  if (s.v0.has_value() != s.e0.has_value()) throw UsageError("profiles", "v0 and e0 must be given together");
  if (s.v0) {
    std::vector<int> grids = s.n_list;
    grids.push_back(1024);
    for (int n : grids)
      for (int x = 0; x < n; ++x) {
        const double u = static_cast<double>(x) / n;
        const double v = (*s.v0)(u);
        if (!((*s.e0)(u) - v * v > 0.0))
          throw UsageError("profiles.e0", "e0 - v0^2 must be > 0 (fails at u = " + std::to_string(u) + ")");
      }
  }
  const bool needs_replicas = s.id == "E2" || s.id == "E8" || s.id == "E10" || s.id == "E11";
  if (needs_replicas && s.replicas < 2) throw UsageError("replicas", "must be >= 2");
  if (!(s.budget > 0.0)) throw UsageError("budget", "must be > 0");
}

double projected_events(const ExperimentSpec& spec) { return detail::projected_events_for(spec); }

ExperimentSpec default_spec(const std::string& id) {
  std::string stem = id;
  std::transform(stem.begin(), stem.end(), stem.begin(), [](unsigned char c) { return std::tolower(c); });
  for (const auto& d : kDefaults)
    if (stem == d.stem) return parse_spec(d.yaml);
  throw UsageError("experiment", "no built-in configuration for '" + id + "'");
}

bool RunReport::passed() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

std::string RunReport::summary_json() const {
  nlohmann::ordered_json j;
  j["experiment"] = experiment;
  j["passed"] = passed();
  j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : checks)
    j["checks"].push_back({{"name", c.name},
                           {"measured", c.measured},
                           {"comparator", c.comparator},
                           {"threshold", c.threshold},
                           {"passed", c.passed}});
  j["values"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : values) j["values"][k] = v;
  j["warnings"] = warnings;
  std::vector<std::string> files;
  for (const auto& [k, v] : tables) files.push_back(k);
  j["tables"] = files;
  return j.dump(2) + "\n";
}

std::string version_string() { return BSCHAIN_VERSION; }

RunReport run(const ExperimentSpec& spec, const RunOptions& opts) {
  validate_spec(spec);
  const double events = projected_events(spec);
  if (events > spec.budget)
    throw BudgetError("projected " + std::to_string(events) + " chain events exceed the budget of " +
                      std::to_string(spec.budget));

  using Runner = RunReport (*)(const ExperimentSpec&, const RunOptions&);
  static const std::map<std::string, Runner> runners = {
      {"E1", detail::run_e1}, {"E2", detail::run_e2},   {"E3", detail::run_e3},  {"E4", detail::run_e4},
      {"E5", detail::run_e5}, {"E6", detail::run_e6},   {"E7", detail::run_e7},  {"E8", detail::run_e8},
      {"E9", detail::run_e9}, {"E10", detail::run_e10}, {"E11", detail::run_e11}};

  const auto start = std::chrono::steady_clock::now();
  RunReport report = runners.at(spec.id)(spec, opts);
  report.experiment = spec.id;
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (opts.write_files) {
    report.out_dir = resolve_out_dir(spec, opts);
    const std::filesystem::path dir(report.out_dir);
    std::filesystem::create_directories(dir);
    for (const auto& [name, body] : report.tables) write_file(dir / name, body);
    write_file(dir / "summary.json", report.summary_json());
    nlohmann::ordered_json m;
    m["experiment"] = spec.id;
    m["version"] = version_string();
    m["seed"] = spec.seed;
    m["workers"] = opts.workers;
    m["wall_seconds"] = report.wall_seconds;
    m["projected_events"] = events;
    m["spec"] = spec_to_yaml(spec);
    write_file(dir / "manifest.json", m.dump(2) + "\n");
  }
  return report;
}

}  // namespace bschain
