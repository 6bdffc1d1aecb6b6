#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "isingforage/criticality.hpp"
#include "isingforage/environment.hpp"
#include "isingforage/genome.hpp"
#include "isingforage/rng.hpp"

namespace isingforage {

struct EvolutionConfig {
  std::size_t generations = 4000;
  std::size_t population_size = 50;
  std::size_t n_selected = 20;
  std::size_t n_copy = 10;
  std::size_t n_mutants = 20;
  std::size_t n_mated = 20;
  double p_edge_add = 0.1;
  double p_edge_del = 0.1;
  double beta_noise_sd = 0.02;
  double beta_init = 1.0;
  double initial_density = 0.5;
  std::size_t n_hidden = 4;
  std::uint64_t seed = 1;

  Architecture architecture() const { return {kSensorCount, n_hidden, kMotorCount}; }
  void validate() const;
};

struct GenerationRecord {
  std::size_t generation = 0;
  std::vector<double> fitness;
  std::vector<OperatorTag> tags;
  std::optional<std::vector<double>> deltas;
  double mean_fitness = 0.0;
  double max_fitness = 0.0;
  std::optional<double> mean_delta;
  std::optional<double> median_delta;
};

/// Indices of the n highest fitness values, best first; ties go to the lower
/// index.
std::vector<std::size_t> select(std::span<const double> fitness, std::size_t n_selected);

/// Optional edge insertion and deletion, one weight re-sample and
/// multiplicative beta noise.
Genome op_mutate(const Genome& genome, const EvolutionConfig& config, Rng& rng);

/// Weighted average of two parents with one share w ~ U(0, 1) per child.
/// Edges present in a single parent are inherited with that parent's share.
/// `forced_weight` pins w (used by tests).
Genome op_mate(const Genome& parent_a, const Genome& parent_b, Rng& rng,
               std::optional<double> forced_weight = std::nullopt);

/// Builds the next population from `selected` (ranked best first):
/// copies of the top n_copy, then mutants, then mated offspring.
std::vector<std::pair<Genome, OperatorTag>> next_generation(std::span<const Genome> selected,
                                                            const EvolutionConfig& config, Rng& rng);

struct DeltaTracking {
  /// Measure the population regime every `stride` generations (0 disables).
  std::size_t stride = 0;
  std::vector<double> grid = log_spaced_grid();
  SamplingParams params;
};

struct EvolveOptions {
  DeltaTracking delta;
  std::size_t workers = 1;
  /// Called after each generation's lifetime with its record and evaluated
  /// population (sensor snapshots and fitness filled in).
  std::function<void(const GenerationRecord&, std::span<const Organism>)> on_generation;
};

/// Runs generation 0 .. generations; returns one record per generation.
std::vector<GenerationRecord> evolve(const WorldConfig& world_config,
                                     const EvolutionConfig& evolution_config,
                                     const EvolveOptions& options = {});

/// Random initial genomes as used by evolve().
std::vector<Genome> initial_genomes(const EvolutionConfig& config);

/// Evaluates `genomes` for one lifetime in a fresh world seeded by `seed`.
std::vector<Organism> evaluate_population(std::span<const Genome> genomes, const WorldConfig& world,
                                          std::uint64_t seed, const LifetimeOptions& options = {});

std::vector<std::vector<double>> sensor_snapshots(std::span<const Organism> population);

}  // namespace isingforage
