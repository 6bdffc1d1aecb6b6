#include "isingforage/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace isingforage {

void EvolutionConfig::validate() const {
  if (n_copy + n_mutants + n_mated != population_size) {
    throw std::invalid_argument(
        "evolution: n_copy + n_mutants + n_mated must equal population_size");
  }
  if (n_selected == 0 || n_selected > population_size) {
    throw std::invalid_argument("evolution.n_selected must be in [1, population_size]");
  }
  if (n_copy > n_selected) throw std::invalid_argument("evolution.n_copy must not exceed n_selected");
  if (n_mated > 0 && n_selected < 2) {
    throw std::invalid_argument("evolution.n_selected must be >= 2 when mating");
  }
  auto probability = [](double p, const char* field) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string("evolution.") + field + " must be in [0, 1]");
  };
  probability(p_edge_add, "p_edge_add");
  probability(p_edge_del, "p_edge_del");
  probability(initial_density, "initial_density");
  if (!(beta_noise_sd >= 0.0)) throw std::invalid_argument("evolution.beta_noise_sd must be non-negative");
  if (!(beta_init > 0.0) || !std::isfinite(beta_init)) {
    throw std::invalid_argument("evolution.beta_init must be positive");
  }
}

std::vector<std::size_t> select(std::span<const double> fitness, std::size_t n_selected) {
  if (n_selected > fitness.size()) throw std::invalid_argument("select: n_selected exceeds population");
  std::vector<std::size_t> order(fitness.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return fitness[a] > fitness[b]; });
  order.resize(n_selected);
  return order;
}

Genome op_mutate(const Genome& genome, const EvolutionConfig& config, Rng& rng) {
  Genome child = genome;
  if (rng.uniform() < config.p_edge_add) {
    const auto candidates = child.absent_allowed_pairs();
    if (!candidates.empty()) {
      const auto [i, j] = candidates[rng.below(candidates.size())];
      child.set_edge(i, j, rng.uniform(-kMaxWeight, kMaxWeight));
    }
  }
  if (rng.uniform() < config.p_edge_del && child.edge_count() > 0) {
    const auto present = child.edges();
    const Edge& e = present[rng.below(present.size())];
    child.remove_edge(e.i, e.j);
  }
  if (child.edge_count() > 0) {
    const auto present = child.edges();
    const Edge& e = present[rng.below(present.size())];
    child.set_edge(e.i, e.j, rng.uniform(-kMaxWeight, kMaxWeight));
  }
  double factor;
  do {
    factor = rng.normal(1.0, config.beta_noise_sd);
  } while (!(factor > 0.0));
  child.set_beta(genome.beta() * factor);
  return child;
}

Genome op_mate(const Genome& parent_a, const Genome& parent_b, Rng& rng,
               std::optional<double> forced_weight) {
  if (parent_a.architecture() != parent_b.architecture()) {
    throw std::invalid_argument("op_mate: parents have different architectures");
  }
  const double w = forced_weight ? *forced_weight : rng.uniform();
  if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("op_mate: weight share outside [0, 1]");

  // std::lerp is exact at both endpoints and for equal arguments.
  Genome child(parent_a.architecture(), std::lerp(parent_b.beta(), parent_a.beta(), w));
  const std::size_t n = parent_a.size();
  const Architecture& arch = parent_a.architecture();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!arch.edge_allowed(i, j)) continue;
      const bool in_a = parent_a.has_edge(i, j);
      const bool in_b = parent_b.has_edge(i, j);
      if (in_a && in_b) {
        const double v = std::lerp(parent_b.weight(i, j), parent_a.weight(i, j), w);
        child.set_edge(i, j, std::clamp(v, -kMaxWeight, kMaxWeight));
      } else if (in_a) {
        if (rng.uniform() < w) child.set_edge(i, j, parent_a.weight(i, j));
      } else if (in_b) {
        if (rng.uniform() < 1.0 - w) child.set_edge(i, j, parent_b.weight(i, j));
      }
    }
  }
  return child;
}

std::vector<std::pair<Genome, OperatorTag>> next_generation(std::span<const Genome> selected,
                                                            const EvolutionConfig& config,
                                                            Rng& rng) {
  if (selected.size() != config.n_selected) {
    throw std::invalid_argument("next_generation: expected " + std::to_string(config.n_selected) +
                                " selected genomes");
  }
  std::vector<std::pair<Genome, OperatorTag>> out;
  out.reserve(config.population_size);
  for (std::size_t k = 0; k < config.n_copy; ++k) out.emplace_back(selected[k], OperatorTag::kCopy);
  for (std::size_t k = 0; k < config.n_mutants; ++k) {
    const Genome& parent = selected[rng.below(selected.size())];
    out.emplace_back(op_mutate(parent, config, rng), OperatorTag::kMutate);
  }
  for (std::size_t k = 0; k < config.n_mated; ++k) {
    const std::size_t a = rng.below(selected.size());
    std::size_t b = rng.below(selected.size() - 1);
    if (b >= a) ++b;
    out.emplace_back(op_mate(selected[a], selected[b], rng), OperatorTag::kMate);
  }
  return out;
}

std::vector<Genome> initial_genomes(const EvolutionConfig& config) {
  Rng rng(derive_seed(config.seed, StreamPurpose::kInitialPopulation));
  std::vector<Genome> out;
  out.reserve(config.population_size);
  for (std::size_t k = 0; k < config.population_size; ++k) {
    out.push_back(Genome::random(config.architecture(), config.beta_init, config.initial_density, rng));
  }
  return out;
}

std::vector<Organism> evaluate_population(std::span<const Genome> genomes, const WorldConfig& world_config,
                                          std::uint64_t seed, const LifetimeOptions& options) {
  std::vector<Organism> population = make_population(genomes);
  World world(world_config);
  Rng rng(seed);
  world.reset(population, rng);
  run_lifetime(population, world, rng, options);
  return population;
}

std::vector<std::vector<double>> sensor_snapshots(std::span<const Organism> population) {
  std::vector<std::vector<double>> out;
  out.reserve(population.size());
  for (const Organism& o : population) out.emplace_back(o.last_sensors.begin(), o.last_sensors.end());
  return out;
}

namespace {

GenerationRecord summarize(std::size_t generation, std::span<const Organism> population) {
  GenerationRecord rec;
  rec.generation = generation;
  for (const Organism& o : population) {
    rec.fitness.push_back(o.fitness());
    rec.tags.push_back(o.tag);
  }
  rec.mean_fitness =
      std::accumulate(rec.fitness.begin(), rec.fitness.end(), 0.0) / static_cast<double>(rec.fitness.size());
  rec.max_fitness = *std::max_element(rec.fitness.begin(), rec.fitness.end());
  return rec;
}

}  // namespace

std::vector<GenerationRecord> evolve(const WorldConfig& world_config,
                                     const EvolutionConfig& config, const EvolveOptions& options) {
  world_config.validate();
  config.validate();
  if (world_config.n_organisms != config.population_size) {
    throw std::invalid_argument("world.n_organisms must equal evolution.population_size");
  }

  std::vector<Genome> genomes = initial_genomes(config);
  std::vector<OperatorTag> tags(genomes.size(), OperatorTag::kInitial);
  std::vector<GenerationRecord> records;
  records.reserve(config.generations + 1);

  for (std::size_t gen = 0;; ++gen) {
    std::vector<Organism> population =
        evaluate_population(genomes, world_config,
                            derive_seed(config.seed, StreamPurpose::kLifetime, {gen}));
    for (std::size_t k = 0; k < population.size(); ++k) population[k].tag = tags[k];

    GenerationRecord rec = summarize(gen, population);
    if (options.delta.stride > 0 && gen % options.delta.stride == 0) {
      const auto snapshots = sensor_snapshots(population);
      const PopulationRegime regime =
          population_delta(genomes, snapshots, options.delta.grid, options.delta.params,
                           derive_seed(config.seed, StreamPurpose::kCriticality, {gen}), options.workers);
      rec.deltas = regime.deltas;
      if (regime.n_valid > 0) {
        rec.mean_delta = regime.mean;
        rec.median_delta = regime.median;
      }
    }
    if (options.on_generation) options.on_generation(rec, population);
    records.push_back(std::move(rec));
    if (gen == config.generations) break;

    const std::vector<std::size_t> chosen = select(records.back().fitness, config.n_selected);
    std::vector<Genome> selected;
    selected.reserve(chosen.size());
    for (std::size_t idx : chosen) selected.push_back(genomes[idx]);
    Rng rng(derive_seed(config.seed, StreamPurpose::kReproduction, {gen}));
    auto offspring = next_generation(selected, config, rng);
    genomes.clear();
    tags.clear();
    for (auto& [g, t] : offspring) {
      genomes.push_back(std::move(g));
      tags.push_back(t);
    }
  }
  return records;
}

}  // namespace isingforage
