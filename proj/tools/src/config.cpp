#include "isingforage/cli/config.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "isingforage/cli/io.hpp"

namespace isingforage::cli {

namespace {

using Setter = std::function<void(const YAML::Node&, const std::string&)>;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

double as_real(const YAML::Node& node, const std::string& path) {
  double v = 0.0;
  if (!node.IsScalar() || !YAML::convert<double>::decode(node, v)) fail(path, "expected a number");
  if (!std::isfinite(v)) fail(path, "must be finite");
  return v;
}

std::uint64_t as_unsigned(const YAML::Node& node, const std::string& path) {
  long long signed_value = 0;
  if (node.IsScalar() && YAML::convert<long long>::decode(node, signed_value)) {
    if (signed_value < 0) fail(path, "must be a non-negative integer");
    return static_cast<std::uint64_t>(signed_value);
  }
  unsigned long long v = 0;
  if (!node.IsScalar() || !YAML::convert<unsigned long long>::decode(node, v)) {
    fail(path, "expected a non-negative integer");
  }
  return v;
}

int as_int(const YAML::Node& node, const std::string& path) {
  long long v = 0;
  if (!node.IsScalar() || !YAML::convert<long long>::decode(node, v)) fail(path, "expected an integer");
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) fail(path, "out of range");
  return static_cast<int>(v);
}

bool as_bool(const YAML::Node& node, const std::string& path) {
  bool v = false;
  if (!node.IsScalar() || !YAML::convert<bool>::decode(node, v)) fail(path, "expected true or false");
  return v;
}

std::vector<double> as_real_list(const YAML::Node& node, const std::string& path) {
  std::vector<double> out;
  if (node.IsScalar()) {
    out.push_back(as_real(node, path));
    return out;
  }
  if (!node.IsSequence()) fail(path, "expected a list of numbers");
  for (std::size_t k = 0; k < node.size(); ++k) out.push_back(as_real(node[k], path + "[" + std::to_string(k) + "]"));
  return out;
}

template <typename T>
Setter real_field(T& target) {
  return [&target](const YAML::Node& n, const std::string& p) { target = as_real(n, p); };
}

Setter count_field(std::size_t& target) {
  return [&target](const YAML::Node& n, const std::string& p) { target = static_cast<std::size_t>(as_unsigned(n, p)); };
}

Setter int_field(int& target) {
  return [&target](const YAML::Node& n, const std::string& p) { target = as_int(n, p); };
}

std::map<std::string, std::map<std::string, Setter>> field_table(ExperimentConfig& c) {
  WorldConfig& w = c.world;
  EvolutionConfig& e = c.evolution;
  CriticalityConfig& k = c.criticality;
  RunConfig& r = c.run;
  return {
      {"world",
       {{"arena_side", real_field(w.arena_side)},
        {"n_food", count_field(w.n_food)},
        {"n_organisms", count_field(w.n_organisms)},
        {"dt", real_field(w.dt)},
        {"food_energy", real_field(w.food_energy)},
        {"move_cost", real_field(w.move_cost)},
        {"max_speed", real_field(w.max_speed)},
        {"lin_accel_gain", real_field(w.lin_accel_gain)},
        {"rot_accel_gain", real_field(w.rot_accel_gain)},
        {"eat_radius", real_field(w.eat_radius)},
        {"hard_task", [&w](const YAML::Node& n, const std::string& p) { w.hard_task = as_bool(n, p); }},
        {"v_threshold", real_field(w.v_threshold)},
        {"lifetime", count_field(w.lifetime)},
        {"initial_energy", real_field(w.initial_energy)},
        {"network_iterations", int_field(w.network_iterations)}}},
      {"evolution",
       {{"generations", count_field(e.generations)},
        {"population_size", count_field(e.population_size)},
        {"n_selected", count_field(e.n_selected)},
        {"n_copy", count_field(e.n_copy)},
        {"n_mutants", count_field(e.n_mutants)},
        {"n_mated", count_field(e.n_mated)},
        {"p_edge_add", real_field(e.p_edge_add)},
        {"p_edge_del", real_field(e.p_edge_del)},
        {"beta_noise_sd", real_field(e.beta_noise_sd)},
        {"beta_init", real_field(e.beta_init)},
        {"initial_density", real_field(e.initial_density)},
        {"n_hidden", count_field(e.n_hidden)}}},
      {"criticality",
       {{"grid_min", real_field(k.grid_min)},
        {"grid_max", real_field(k.grid_max)},
        {"grid_points", count_field(k.grid_points)},
        {"n_therm", int_field(k.sampling.n_therm)},
        {"n_sample", int_field(k.sampling.n_sample)},
        {"stride", int_field(k.sampling.stride)},
        {"estimator",
         [&k](const YAML::Node& n, const std::string& p) {
           try {
             k.sampling.estimator = curve_estimator_from_string(n.as<std::string>());
           } catch (const std::exception&) {
             fail(p, "expected pointwise or replica_exchange");
           }
         }}}},
      {"run",
       {{"n_replicates", count_field(r.n_replicates)},
        {"beta_init", [&r](const YAML::Node& n, const std::string& p) { r.beta_init = as_real_list(n, p); }},
        {"delta_init", [&r](const YAML::Node& n, const std::string& p) { r.delta_init = as_real_list(n, p); }},
        {"output_dir",
         [&r](const YAML::Node& n, const std::string& p) {
           if (!n.IsScalar()) fail(p, "expected a path");
           r.output_dir = n.as<std::string>();
         }},
        {"seed", [&r](const YAML::Node& n, const std::string& p) { r.seed = as_unsigned(n, p); }},
        {"delta_stride", count_field(r.delta_stride)},
        {"snapshot_stride", count_field(r.snapshot_stride)}}},
  };
}

void apply_override(YAML::Node& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq || dot == 0 || dot + 1 == eq) {
    throw ConfigError("--set expects section.key=value, got '" + assignment + "'");
  }
  const std::string section = assignment.substr(0, dot);
  const std::string key = assignment.substr(dot + 1, eq - dot - 1);
  const std::string value = assignment.substr(eq + 1);
  YAML::Node parsed;
  try {
    parsed = YAML::Load(value);
  } catch (const YAML::Exception&) {
    parsed = YAML::Node(value);
  }
  if (!root[section]) root[section] = YAML::Node(YAML::NodeType::Map);
  root[section][key] = parsed;
}

}  // namespace

std::vector<double> ExperimentConfig::conditions() const {
  if (!run.delta_init.empty()) {
    std::vector<double> out;
    for (double d : run.delta_init) out.push_back(std::pow(10.0, -d));
    return out;
  }
  if (!run.beta_init.empty()) return run.beta_init;
  return {evolution.beta_init};
}

void ExperimentConfig::validate() const {
  try {
    world.validate();
    evolution.validate();
    criticality.sampling.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (world.n_organisms != evolution.population_size) {
    throw ConfigError("world.n_organisms: must equal evolution.population_size");
  }
  if (!(criticality.grid_min > 0.0) || !(criticality.grid_max > criticality.grid_min)) {
    throw ConfigError("criticality.grid_min: need 0 < grid_min < grid_max");
  }
  if (criticality.grid_points < 2) throw ConfigError("criticality.grid_points: must be >= 2");
  if (run.n_replicates < 1) throw ConfigError("run.n_replicates: must be >= 1");
  if (!run.beta_init.empty() && !run.delta_init.empty()) {
    throw ConfigError("run.delta_init: give either run.beta_init or run.delta_init, not both");
  }
  for (double b : run.beta_init) {
    if (!(b > 0.0)) throw ConfigError("run.beta_init: values must be positive");
  }
}

ExperimentConfig parse_config(const std::string& yaml_text, const std::vector<std::string>& overrides) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!root || root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  if (!root.IsMap()) throw ConfigError("config: top level must be a mapping of sections");
  for (const std::string& o : overrides) apply_override(root, o);

  ExperimentConfig config;
  config.world.n_organisms = config.evolution.population_size;
  auto table = field_table(config);
  for (const auto& section : root) {
    const std::string name = section.first.as<std::string>();
    const auto fields = table.find(name);
    if (fields == table.end()) throw ConfigError(name + ": unknown section");
    if (section.second.IsNull()) continue;
    if (!section.second.IsMap()) throw ConfigError(name + ": expected a mapping");
    for (const auto& entry : section.second) {
      const std::string key = entry.first.as<std::string>();
      const std::string path = name + "." + key;
      const auto setter = fields->second.find(key);
      if (setter == fields->second.end()) throw ConfigError(path + ": unknown key");
      setter->second(entry.second, path);
    }
  }
  // A population size given without n_organisms sizes the world too.
  if (root["evolution"] && root["evolution"]["population_size"] &&
      !(root["world"] && root["world"]["n_organisms"])) {
    config.world.n_organisms = config.evolution.population_size;
  }
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  if (path.empty()) return parse_config("", overrides);
  return parse_config(read_file(path), overrides);
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  const WorldConfig& w = c.world;
  const EvolutionConfig& e = c.evolution;
  const CriticalityConfig& k = c.criticality;
  const RunConfig& r = c.run;
  nlohmann::json j;
  j["world"] = {{"arena_side", w.arena_side},         {"n_food", w.n_food},
                {"n_organisms", w.n_organisms},       {"dt", w.dt},
                {"food_energy", w.food_energy},       {"move_cost", w.move_cost},
                {"max_speed", w.max_speed},           {"lin_accel_gain", w.lin_accel_gain},
                {"rot_accel_gain", w.rot_accel_gain}, {"eat_radius", w.eat_radius},
                {"hard_task", w.hard_task},           {"v_threshold", w.v_threshold},
                {"lifetime", w.lifetime},             {"initial_energy", w.initial_energy},
                {"network_iterations", w.network_iterations}};
  j["evolution"] = {{"generations", e.generations},   {"population_size", e.population_size},
                    {"n_selected", e.n_selected},     {"n_copy", e.n_copy},
                    {"n_mutants", e.n_mutants},       {"n_mated", e.n_mated},
                    {"p_edge_add", e.p_edge_add},     {"p_edge_del", e.p_edge_del},
                    {"beta_noise_sd", e.beta_noise_sd}, {"beta_init", e.beta_init},
                    {"initial_density", e.initial_density}, {"n_hidden", e.n_hidden}};
  j["criticality"] = {{"grid_min", k.grid_min},
                      {"grid_max", k.grid_max},
                      {"grid_points", k.grid_points},
                      {"n_therm", k.sampling.n_therm},
                      {"n_sample", k.sampling.n_sample},
                      {"stride", k.sampling.stride},
                      {"estimator", std::string(to_string(k.sampling.estimator))}};
  j["run"] = {{"n_replicates", r.n_replicates}, {"beta_init", r.beta_init},
              {"delta_init", r.delta_init},     {"output_dir", r.output_dir},
              {"seed", r.seed},                 {"delta_stride", r.delta_stride},
              {"snapshot_stride", r.snapshot_stride}};
  return j;
}

std::string config_hash(const ExperimentConfig& config) {
  nlohmann::json j = config_to_json(config);
  // Where results land does not change what they are.
  j["run"].erase("output_dir");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace isingforage::cli
