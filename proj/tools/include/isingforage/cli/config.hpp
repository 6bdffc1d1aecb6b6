#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "isingforage/criticality.hpp"
#include "isingforage/environment.hpp"
#include "isingforage/evolution.hpp"

namespace isingforage::cli {

/// Invalid configuration or inputs; maps to exit status 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct CriticalityConfig {
  double grid_min = 1e-2;
  double grid_max = 1e2;
  std::size_t grid_points = 64;
  SamplingParams sampling;

  std::vector<double> grid() const { return log_spaced_grid(grid_min, grid_max, grid_points); }
};

struct RunConfig {
  std::size_t n_replicates = 1;
  /// One condition per entry; empty means evolution.beta_init.
  std::vector<double> beta_init;
  /// Alternative to beta_init: beta = 10^-delta.
  std::vector<double> delta_init;
  std::string output_dir;
  std::uint64_t seed = 1;
  /// Measure the population regime every n generations (0 disables).
  std::size_t delta_stride = 0;
  /// Population snapshots every n generations in addition to the first and
  /// last (0 keeps only those two).
  std::size_t snapshot_stride = 0;
};

struct ExperimentConfig {
  WorldConfig world;
  EvolutionConfig evolution;
  CriticalityConfig criticality;
  RunConfig run;

  /// beta_init per condition after resolving delta_init.
  std::vector<double> conditions() const;
  void validate() const;
};

/// Parses YAML text, applies `section.key=value` overrides and validates.
/// Errors name the offending field path.
ExperimentConfig parse_config(const std::string& yaml_text, const std::vector<std::string>& overrides = {});

/// Reads and parses a config file; an empty path gives the defaults.
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Canonical resolved form, used for hashing and echoing.
nlohmann::json config_to_json(const ExperimentConfig& config);

/// FNV-1a over the canonical JSON dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

}  // namespace isingforage::cli
