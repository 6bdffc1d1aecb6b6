#include "isingforage/cli/app.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>

#include "isingforage/analysis.hpp"
#include "isingforage/cli/config.hpp"
#include "isingforage/cli/io.hpp"
#include "isingforage/parallel.hpp"
#include "isingforage/records.hpp"

namespace isingforage::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::size_t workers = 0;
  bool quiet = false;
};

void add_common(CLI::App* sub, CommonOptions& o, bool with_output = true) {
  sub->add_option("-c,--config", o.config_path, "YAML config file");
  sub->add_option("--set", o.overrides, "Override a config value: section.key=value")->take_all();
  if (with_output) {
    sub->add_option("-o,--out", o.out_dir, "Output directory");
    sub->add_option("-j,--workers", o.workers, "Worker threads (0: all cores)");
    sub->add_flag("-q,--quiet", o.quiet, "No progress messages");
  }
}

fs::path output_dir(const CommonOptions& o, const ExperimentConfig& config, const std::string& command) {
  if (!o.out_dir.empty()) return o.out_dir;
  if (!config.run.output_dir.empty()) return config.run.output_dir;
  return default_output_root() / (command + "-" + config_hash(config));
}

class Progress {
 public:
  Progress(std::ostream& err, bool quiet) : err_(err), quiet_(quiet) {}
  void operator()(const std::string& line) {
    if (quiet_) return;
    std::lock_guard lock(mutex_);
    err_ << line << '\n' << std::flush;
  }

 private:
  std::ostream& err_;
  bool quiet_;
  std::mutex mutex_;
};

std::string fmt(double v) { return format_double(v); }

std::string short_fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string replicate_dir(std::size_t condition, std::size_t replicate) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "cond%02zu_rep%03zu", condition, replicate);
  return buf;
}

std::string snapshot_name(std::size_t generation) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "gen%06zu.json", generation);
  return std::string("genomes/") + buf;
}

json population_to_json(std::span<const Organism> population, std::size_t generation) {
  json organisms = json::array();
  for (std::size_t k = 0; k < population.size(); ++k) {
    const Organism& o = population[k];
    organisms.push_back({{"id", k},
                         {"tag", std::string(to_string(o.tag))},
                         {"fitness", o.fitness()},
                         {"sensors", std::vector<double>(o.last_sensors.begin(), o.last_sensors.end())},
                         {"genome", genome_to_json(o.genome)}});
  }
  return {{"schema_version", kSchemaVersion}, {"generation", generation}, {"organisms", organisms}};
}

struct LoadedPopulation {
  std::vector<Genome> genomes;
  std::vector<std::vector<double>> sensors;  // empty when the file has none
  std::size_t generation = 0;
};

LoadedPopulation load_population(const fs::path& path) {
  const json doc = read_json_file(path);
  LoadedPopulation pop;
  try {
    const json* list = &doc;
    if (doc.is_object()) {
      if (doc.contains("schema_version") && doc.at("schema_version").get<int>() != kSchemaVersion) {
        throw std::invalid_argument("schema_version mismatch");
      }
      pop.generation = doc.value("generation", std::size_t{0});
      list = &doc.at("organisms");
    }
    if (!list->is_array()) throw std::invalid_argument("expected a list of organisms");
    bool all_sensors = true;
    for (const json& entry : *list) {
      const bool wrapped = entry.contains("genome");
      pop.genomes.push_back(genome_from_json(wrapped ? entry.at("genome") : entry));
      if (wrapped && entry.contains("sensors")) {
        pop.sensors.push_back(entry.at("sensors").get<std::vector<double>>());
      } else {
        all_sensors = false;
      }
    }
    if (!all_sensors) pop.sensors.clear();
  } catch (const json::exception& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
  return pop;
}

std::vector<std::vector<double>> load_snapshots(const fs::path& path) {
  const json doc = read_json_file(path);
  try {
    if (doc.is_object()) {
      std::vector<std::vector<double>> out;
      for (const json& entry : doc.at("organisms")) out.push_back(entry.at("sensors").get<std::vector<double>>());
      return out;
    }
    return doc.get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// evolve
// ---------------------------------------------------------------------------

struct ReplicateOutput {
  std::string dir;
  std::size_t condition = 0;
  std::size_t replicate = 0;
  double beta_init = 0.0;
  std::uint64_t seed = 0;
  std::string generations;
  std::vector<std::pair<std::string, std::string>> snapshots;
  double final_mean_fitness = 0.0;
};

int cmd_evolve(const CommonOptions& opts, std::ostream& out, std::ostream& err) {
  const ExperimentConfig config = load_config(opts.config_path, opts.overrides);
  const fs::path root = output_dir(opts, config, "evolve");
  const std::vector<double> betas = config.conditions();
  const std::size_t n_tasks = betas.size() * config.run.n_replicates;
  const std::size_t workers = resolve_workers(opts.workers);
  const std::size_t outer = std::min(workers, n_tasks);
  const std::size_t inner = std::max<std::size_t>(1, workers / outer);
  const std::size_t last_gen = config.evolution.generations;
  const std::size_t report_every = std::max<std::size_t>(1, last_gen / 10);
  Progress progress(err, opts.quiet);

  std::vector<ReplicateOutput> results(n_tasks);
  parallel_for(n_tasks, outer, [&](std::size_t task) {
    ReplicateOutput& res = results[task];
    res.condition = task / config.run.n_replicates;
    res.replicate = task % config.run.n_replicates;
    res.dir = replicate_dir(res.condition, res.replicate);
    res.beta_init = betas[res.condition];
    res.seed = derive_seed(config.run.seed, StreamPurpose::kReplicate, {res.condition, res.replicate});

    EvolutionConfig ec = config.evolution;
    ec.beta_init = res.beta_init;
    ec.seed = res.seed;
    EvolveOptions eo;
    eo.workers = inner;
    eo.delta.stride = config.run.delta_stride;
    eo.delta.grid = config.criticality.grid();
    eo.delta.params = config.criticality.sampling;
    eo.on_generation = [&](const GenerationRecord& rec, std::span<const Organism> population) {
      res.generations += to_json(rec).dump();
      res.generations += '\n';
      const std::size_t g = rec.generation;
      const std::size_t stride = config.run.snapshot_stride;
      if (g == 0 || g == last_gen || (stride > 0 && g % stride == 0)) {
        res.snapshots.emplace_back(snapshot_name(g), population_to_json(population, g).dump() + "\n");
      }
      if (g == last_gen) res.final_mean_fitness = rec.mean_fitness;
      if (g % report_every == 0) {
        progress("[evolve] " + res.dir + " generation " + std::to_string(g) + "/" + std::to_string(last_gen) +
                 " mean fitness " + short_fmt(rec.mean_fitness) +
                 (rec.mean_delta ? " mean delta " + short_fmt(*rec.mean_delta) : std::string()));
      }
    };
    evolve(config.world, ec, eo);
  });

  const std::string hash = config_hash(config);
  Manifest manifest(root, "evolve", hash);
  manifest.add_file("config.json", "config", config_to_json(config).dump(2) + "\n");
  json reps = json::array();
  for (const ReplicateOutput& res : results) {
    const std::string gen_path = res.dir + "/generations.jsonl";
    manifest.add_file(gen_path, "generations", res.generations);
    json snaps = json::array();
    for (const auto& [name, content] : res.snapshots) {
      manifest.add_file(res.dir + "/" + name, "genomes", content);
      snaps.push_back(res.dir + "/" + name);
    }
    reps.push_back({{"condition", res.condition},
                    {"replicate", res.replicate},
                    {"beta_init", res.beta_init},
                    {"seed", res.seed},
                    {"dir", res.dir},
                    {"generations", gen_path},
                    {"snapshots", snaps},
                    {"final_snapshot", snaps.back()}});
  }
  manifest.extra()["seed"] = config.run.seed;
  manifest.extra()["replicates"] = reps;
  manifest.write();
  out << root.string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// criticality
// ---------------------------------------------------------------------------

struct CriticalityOptions {
  std::string genomes;
  std::string snapshots;
  std::size_t unevolved = 0;
};

int cmd_criticality(const CommonOptions& opts, const CriticalityOptions& copts, std::ostream& out,
                    std::ostream& err) {
  const ExperimentConfig config = load_config(opts.config_path, opts.overrides);
  if (copts.genomes.empty() == (copts.unevolved == 0)) {
    throw ConfigError("criticality: give exactly one of --genomes or --unevolved");
  }
  const std::uint64_t seed = config.run.seed;
  LoadedPopulation pop;
  if (!copts.genomes.empty()) {
    pop = load_population(copts.genomes);
    if (!copts.snapshots.empty()) pop.sensors = load_snapshots(copts.snapshots);
    if (pop.sensors.empty()) throw ConfigError("criticality: no sensor snapshots (use --snapshots)");
  } else {
    // Fresh genomes at the configured beta_init, with sensors observed at
    // the end of one lifetime.
    EvolutionConfig ec = config.evolution;
    ec.beta_init = config.conditions().front();
    ec.population_size = copts.unevolved;
    ec.n_selected = std::min(ec.n_selected, copts.unevolved);
    ec.n_copy = std::min(ec.n_copy, ec.n_selected);
    ec.seed = derive_seed(seed, StreamPurpose::kInitialPopulation, {});
    pop.genomes = initial_genomes(ec);
    WorldConfig wc = config.world;
    wc.n_organisms = copts.unevolved;
    pop.sensors = sensor_snapshots(evaluate_population(pop.genomes, wc, derive_seed(seed, StreamPurpose::kLifetime, {})));
  }
  if (pop.genomes.empty()) throw ConfigError("criticality: genome list is empty");
  if (pop.sensors.size() != pop.genomes.size()) {
    throw ConfigError("criticality: snapshot count does not match genome count");
  }

  Progress progress(err, opts.quiet);
  progress("[criticality] " + std::to_string(pop.genomes.size()) + " organisms");
  const std::vector<double> grid = config.criticality.grid();
  const PopulationRegime regime =
      population_delta(pop.genomes, pop.sensors, grid, config.criticality.sampling,
                       derive_seed(seed, StreamPurpose::kCriticality, {}), resolve_workers(opts.workers));

  CsvTable curves({"organism_id", "c_beta", "heat_capacity"});
  CsvTable table({"organism_id", "generation", "delta", "c_beta_crit", "boundary_flag"});
  for (std::size_t k = 0; k < regime.estimates.size(); ++k) {
    const RegimeEstimate& e = regime.estimates[k];
    for (std::size_t g = 0; g < e.curve.grid.size(); ++g) {
      curves.add_row({std::to_string(k), fmt(e.curve.grid[g]), fmt(e.curve.values[g])});
    }
    table.add_row({std::to_string(k), std::to_string(pop.generation), fmt(e.delta), fmt(e.c_beta_crit),
                   e.boundary_peak ? "1" : "0"});
  }
  const auto nan_to_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  const json summary = {{"schema_version", kSchemaVersion},
                        {"n_organisms", regime.estimates.size()},
                        {"n_valid", regime.n_valid},
                        {"mean_delta", nan_to_null(regime.mean)},
                        {"median_delta", nan_to_null(regime.median)},
                        {"sd_delta", nan_to_null(regime.sd)}};

  const fs::path root = output_dir(opts, config, "criticality");
  Manifest manifest(root, "criticality", config_hash(config));
  manifest.add_file("config.json", "config", config_to_json(config).dump(2) + "\n");
  manifest.add_file("curves.csv", "heat_capacity_curves", curves.str());
  manifest.add_file("regime.csv", "regime", table.str());
  manifest.add_file("summary.json", "regime_summary", summary.dump(2) + "\n");
  manifest.extra()["seed"] = seed;
  manifest.write();
  out << root.string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

struct AnalyzeOptions {
  std::string run_dir;
  std::string genomes;
  std::string trace;
  std::size_t t_train = 0;
  std::size_t t_extend = 0;
  double threshold = kDefaultOverfitThreshold;
  std::vector<double> f_grid{0.0, 0.25, 0.5, 0.75, 1.0};
  std::size_t n_seeds = 5;
  std::size_t gen_lo = 0;
  std::size_t gen_hi = 0;
  std::size_t bins = 20;
  std::string sample_a;
  std::string sample_b;
};

struct RunPopulation {
  std::size_t condition = 0;
  std::size_t replicate = 0;
  double beta_init = 0.0;
  fs::path generations;
  fs::path final_snapshot;
};

struct RunDirectory {
  ExperimentConfig config;
  std::vector<RunPopulation> populations;
};

RunDirectory load_run_dir(const CommonOptions& opts, const std::string& dir) {
  if (dir.empty()) throw ConfigError("analyze: --run-dir is required");
  const fs::path root(dir);
  if (!fs::exists(root / "manifest.json")) throw ConfigError("analyze: no manifest.json in " + dir);
  const json manifest = read_json_file(root / "manifest.json");
  RunDirectory run;
  const std::string config_path = opts.config_path.empty() ? (root / "config.json").string() : opts.config_path;
  run.config = load_config(config_path, opts.overrides);
  try {
    for (const json& r : manifest.at("replicates")) {
      run.populations.push_back({r.at("condition").get<std::size_t>(), r.at("replicate").get<std::size_t>(),
                                 r.at("beta_init").get<double>(), root / r.at("generations").get<std::string>(),
                                 root / r.at("final_snapshot").get<std::string>()});
    }
  } catch (const json::exception& e) {
    throw ConfigError("analyze: malformed manifest: " + std::string(e.what()));
  }
  if (run.populations.empty()) throw ConfigError("analyze: run directory has no replicates");
  return run;
}

std::vector<double> trace_mean_energy(const fs::path& path) {
  std::vector<double> sum;
  std::vector<std::size_t> count;
  for (const json& line : read_jsonl(path.string())) {
    const TraceRecord rec = trace_record_from_json(line);
    if (rec.t == 0) throw std::invalid_argument("trace: steps are numbered from 1");
    if (sum.size() < rec.t) {
      sum.resize(rec.t, 0.0);
      count.resize(rec.t, 0);
    }
    sum[rec.t - 1] += rec.energy;
    ++count[rec.t - 1];
  }
  for (std::size_t t = 0; t < sum.size(); ++t) {
    if (count[t] == 0) throw std::invalid_argument("trace: missing step " + std::to_string(t + 1));
    sum[t] /= static_cast<double>(count[t]);
  }
  return sum;
}

json gamma_json(const GeneralizabilityResult& g) {
  return {{"gamma", std::isfinite(g.gamma) ? json(g.gamma) : json(nullptr)},
          {"t_train", g.t_train},
          {"t_extend", g.t_extend},
          {"fitness_train", g.fitness_train},
          {"fitness_extend", g.fitness_extend},
          {"cluster", g.cluster},
          {"flagged", g.flagged}};
}

int analyze_generalize(const CommonOptions& opts, const AnalyzeOptions& a, std::ostream& out, Progress& progress) {
  CsvTable table({"condition", "beta_init", "replicate", "t_train", "t_extend", "fitness_train", "fitness_extend",
                  "gamma", "cluster", "flagged"});
  json results = json::array();
  ExperimentConfig config;
  if (!a.trace.empty()) {
    config = load_config(opts.config_path, opts.overrides);
    if (a.t_train == 0) throw ConfigError("generalize: --t-train is required with --trace");
    const std::vector<double> energy = trace_mean_energy(a.trace);
    const std::size_t t_extend = a.t_extend == 0 ? energy.size() : a.t_extend;
    const GeneralizabilityResult g = generalizability_from_trace(energy, a.t_train, t_extend, a.threshold);
    table.add_row({"0", "", "0", std::to_string(g.t_train), std::to_string(g.t_extend), fmt(g.fitness_train),
                   fmt(g.fitness_extend), fmt(g.gamma), g.cluster, g.flagged ? "1" : "0"});
    results.push_back(gamma_json(g));
  } else {
    const RunDirectory run = load_run_dir(opts, a.run_dir);
    config = run.config;
    const std::size_t t_train = a.t_train == 0 ? config.world.lifetime : a.t_train;
    const std::size_t t_extend = a.t_extend == 0 ? 25 * t_train : a.t_extend;
    std::vector<GeneralizabilityResult> res(run.populations.size());
    parallel_for(run.populations.size(), resolve_workers(opts.workers), [&](std::size_t k) {
      const RunPopulation& p = run.populations[k];
      const LoadedPopulation pop = load_population(p.final_snapshot);
      Rng rng(derive_seed(config.run.seed, StreamPurpose::kGeneralization, {p.condition, p.replicate}));
      res[k] = generalizability(pop.genomes, config.world, t_train, t_extend, rng, a.threshold);
      progress("[generalize] " + replicate_dir(p.condition, p.replicate) + " gamma " + short_fmt(res[k].gamma));
    });
    for (std::size_t k = 0; k < res.size(); ++k) {
      const RunPopulation& p = run.populations[k];
      const GeneralizabilityResult& g = res[k];
      table.add_row({std::to_string(p.condition), fmt(p.beta_init), std::to_string(p.replicate),
                     std::to_string(g.t_train), std::to_string(g.t_extend), fmt(g.fitness_train),
                     fmt(g.fitness_extend), fmt(g.gamma), g.cluster, g.flagged ? "1" : "0"});
      json j = gamma_json(g);
      j["condition"] = p.condition;
      j["replicate"] = p.replicate;
      j["beta_init"] = p.beta_init;
      results.push_back(j);
    }
  }
  const fs::path root = output_dir(opts, config, "generalize");
  Manifest manifest(root, "analyze generalize", config_hash(config));
  manifest.add_file("generalizability.csv", "generalizability", table.str());
  manifest.add_file("generalizability.json", "generalizability_summary",
                    json({{"schema_version", kSchemaVersion}, {"threshold", a.threshold}, {"results", results}})
                            .dump(2) + "\n");
  manifest.write();
  out << root.string() << '\n';
  return kExitOk;
}

int analyze_perturb(const CommonOptions& opts, const AnalyzeOptions& a, std::ostream& out, Progress& progress) {
  std::vector<RunPopulation> populations;
  ExperimentConfig config;
  if (!a.genomes.empty()) {
    config = load_config(opts.config_path, opts.overrides);
    populations.push_back({0, 0, config.conditions().front(), {}, a.genomes});
  } else {
    RunDirectory run = load_run_dir(opts, a.run_dir);
    config = run.config;
    populations = run.populations;
  }
  const std::size_t workers = resolve_workers(opts.workers);
  CsvTable table({"condition", "beta_init", "replicate", "f_pert", "seed", "mean_fitness"});
  json summary = json::array();
  for (const RunPopulation& p : populations) {
    const LoadedPopulation pop = load_population(p.final_snapshot);
    if (pop.genomes.empty()) throw ConfigError("perturb: population is empty");
    Rng rng(derive_seed(config.run.seed, StreamPurpose::kPerturbation, {p.condition, p.replicate}));
    const PerturbationCurve curve = perturbation_sweep(pop.genomes, config.world, a.f_grid, a.n_seeds, rng, workers);
    for (std::size_t g = 0; g < curve.f_grid.size(); ++g) {
      for (std::size_t s = 0; s < a.n_seeds; ++s) {
        table.add_row({std::to_string(p.condition), fmt(p.beta_init), std::to_string(p.replicate),
                       fmt(curve.f_grid[g]), std::to_string(s), fmt(curve.per_seed[g][s])});
      }
    }
    summary.push_back({{"condition", p.condition},
                       {"replicate", p.replicate},
                       {"beta_init", p.beta_init},
                       {"f_grid", curve.f_grid},
                       {"mean_fitness", curve.mean},
                       {"sd_fitness", curve.sd},
                       {"fit_ok", curve.fit.ok},
                       {"alpha", curve.fit.ok ? json(curve.fit.alpha) : json(nullptr)},
                       {"amplitude", curve.fit.ok ? json(curve.fit.amplitude) : json(nullptr)},
                       {"n_excluded", curve.fit.n_excluded}});
    progress("[perturb] " + replicate_dir(p.condition, p.replicate) +
             (curve.fit.ok ? " alpha " + short_fmt(curve.fit.alpha) : std::string(" fit refused")));
  }
  const fs::path root = output_dir(opts, config, "perturb");
  Manifest manifest(root, "analyze perturb", config_hash(config));
  manifest.add_file("perturbation.csv", "perturbation", table.str());
  manifest.add_file("perturbation.json", "perturbation_fit",
                    json({{"schema_version", kSchemaVersion}, {"results", summary}}).dump(2) + "\n");
  manifest.write();
  out << root.string() << '\n';
  return kExitOk;
}

int analyze_operators(const CommonOptions& opts, const AnalyzeOptions& a, std::ostream& out, Progress& progress) {
  const RunDirectory run = load_run_dir(opts, a.run_dir);
  const std::size_t gen_hi = a.gen_hi == 0 ? run.config.evolution.generations + 1 : a.gen_hi;
  CsvTable table({"condition", "beta_init", "replicate", "tag", "bin_lo", "bin_hi", "count"});
  json summary = json::array();
  for (const RunPopulation& p : run.populations) {
    std::vector<GenerationRecord> records;
    for (const json& line : read_jsonl(p.generations.string())) records.push_back(generation_record_from_json(line));
    const OperatorHistograms h = operator_fitness_histograms(records, a.gen_lo, gen_hi, a.bins);
    json totals = json::object();
    for (const auto& [tag, counts] : h.counts) {
      for (std::size_t b = 0; b < counts.size(); ++b) {
        table.add_row({std::to_string(p.condition), fmt(p.beta_init), std::to_string(p.replicate),
                       std::string(to_string(tag)), fmt(h.edges[b]), fmt(h.edges[b + 1]), std::to_string(counts[b])});
      }
      totals[std::string(to_string(tag))] = h.totals.at(tag);
    }
    summary.push_back({{"condition", p.condition}, {"replicate", p.replicate}, {"totals", totals}});
    progress("[operators] " + replicate_dir(p.condition, p.replicate));
  }
  const fs::path root = output_dir(opts, run.config, "operators");
  Manifest manifest(root, "analyze operators", config_hash(run.config));
  manifest.add_file("operators.csv", "operator_histograms", table.str());
  manifest.add_file("operators.json", "operator_totals",
                    json({{"schema_version", kSchemaVersion},
                          {"gen_lo", a.gen_lo},
                          {"gen_hi", gen_hi},
                          {"results", summary}})
                            .dump(2) + "\n");
  manifest.write();
  out << root.string() << '\n';
  return kExitOk;
}

std::vector<double> read_regime_deltas(const fs::path& path) {
  const std::string text = read_file(path);
  std::vector<double> out;
  std::size_t pos = 0;
  std::size_t delta_col = std::string::npos;
  bool header = true;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (header) {
      const auto it = std::find(fields.begin(), fields.end(), "delta");
      if (it == fields.end()) throw ConfigError(path.string() + ": no delta column");
      delta_col = static_cast<std::size_t>(it - fields.begin());
      header = false;
      continue;
    }
    if (delta_col >= fields.size()) throw ConfigError(path.string() + ": short row");
    try {
      const double v = std::stod(fields[delta_col]);
      if (std::isfinite(v)) out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError(path.string() + ": bad delta value '" + fields[delta_col] + "'");
    }
  }
  return out;
}

int analyze_regime_test(const CommonOptions& opts, const AnalyzeOptions& a, std::ostream& out) {
  if (a.sample_a.empty() || a.sample_b.empty()) throw ConfigError("regime-test: --a and --b are required");
  const ExperimentConfig config = load_config(opts.config_path, opts.overrides);
  const std::vector<double> da = read_regime_deltas(a.sample_a);
  const std::vector<double> db = read_regime_deltas(a.sample_b);
  const RankTestResult r = regime_distribution_test(da, db);
  const json summary = {{"schema_version", kSchemaVersion},
                        {"test", "mann_whitney_u"},
                        {"p_value", r.p_value},
                        {"u_statistic", r.u_statistic},
                        {"n_a", da.size()},
                        {"n_b", db.size()},
                        {"mean_a", r.mean_a},
                        {"mean_b", r.mean_b},
                        {"exact", r.exact},
                        {"degenerate", r.degenerate}};
  const fs::path root = output_dir(opts, config, "regime-test");
  Manifest manifest(root, "analyze regime-test", config_hash(config));
  manifest.add_file("regime_test.json", "regime_test", summary.dump(2) + "\n");
  manifest.write();
  out << root.string() << '\n';
  return kExitOk;
}

int cmd_validate(const CommonOptions& opts, std::ostream& out) {
  const ExperimentConfig config = load_config(opts.config_path, opts.overrides);
  json j = config_to_json(config);
  j["config_hash"] = config_hash(config);
  out << j.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Evolution of Ising-network foraging agents"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "isingforage 0.1.0");

  CommonOptions common;
  CriticalityOptions copts;
  AnalyzeOptions aopts;

  auto* evolve_cmd = app.add_subcommand("evolve", "Run independent evolutions");
  add_common(evolve_cmd, common);

  auto* crit_cmd = app.add_subcommand("criticality", "Heat-capacity curves and regimes of a population");
  add_common(crit_cmd, common);
  crit_cmd->add_option("--genomes", copts.genomes, "Population JSON (genome snapshot file)");
  crit_cmd->add_option("--snapshots", copts.snapshots, "Sensor snapshots JSON");
  crit_cmd->add_option("--unevolved", copts.unevolved, "Use N fresh genomes instead of a file");

  auto* analyze_cmd = app.add_subcommand("analyze", "Post-hoc analyses of evolved runs");
  analyze_cmd->require_subcommand(1);
  auto* gen_cmd = analyze_cmd->add_subcommand("generalize", "Energy-accumulation rate over an extended lifetime");
  add_common(gen_cmd, common);
  gen_cmd->add_option("--run-dir", aopts.run_dir, "Directory written by evolve");
  gen_cmd->add_option("--trace", aopts.trace, "Lifetime trace JSONL instead of a run directory");
  gen_cmd->add_option("--t-train", aopts.t_train, "Training lifetime (default: world.lifetime)");
  gen_cmd->add_option("--t-extend", aopts.t_extend, "Extended lifetime (default: 25 x t_train)");
  gen_cmd->add_option("--threshold", aopts.threshold, "gamma below this is labelled overfit");
  auto* pert_cmd = analyze_cmd->add_subcommand("perturb", "Fitness under random weight perturbations");
  add_common(pert_cmd, common);
  pert_cmd->add_option("--run-dir", aopts.run_dir, "Directory written by evolve");
  pert_cmd->add_option("--genomes", aopts.genomes, "Population JSON instead of a run directory");
  pert_cmd->add_option("--f-grid", aopts.f_grid, "Perturbation strengths, starting at 0")->delimiter(',');
  pert_cmd->add_option("--n-seeds", aopts.n_seeds, "Evaluations per strength");
  auto* ops_cmd = analyze_cmd->add_subcommand("operators", "Fitness histograms per evolutionary operator");
  add_common(ops_cmd, common);
  ops_cmd->add_option("--run-dir", aopts.run_dir, "Directory written by evolve");
  ops_cmd->add_option("--gen-lo", aopts.gen_lo, "First generation of the window");
  ops_cmd->add_option("--gen-hi", aopts.gen_hi, "One past the last generation (default: all)");
  ops_cmd->add_option("--bins", aopts.bins, "Histogram bins");
  auto* test_cmd = analyze_cmd->add_subcommand("regime-test", "Compare two delta distributions");
  add_common(test_cmd, common);
  test_cmd->add_option("--a", aopts.sample_a, "regime.csv of the first population");
  test_cmd->add_option("--b", aopts.sample_b, "regime.csv of the second population");

  auto* validate_cmd = app.add_subcommand("validate-config", "Check a config and print its resolved form");
  add_common(validate_cmd, common, false);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << "isingforage 0.1.0\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }

  try {
    Progress progress(err, common.quiet);
    if (*evolve_cmd) return cmd_evolve(common, out, err);
    if (*crit_cmd) return cmd_criticality(common, copts, out, err);
    if (*gen_cmd) return analyze_generalize(common, aopts, out, progress);
    if (*pert_cmd) return analyze_perturb(common, aopts, out, progress);
    if (*ops_cmd) return analyze_operators(common, aopts, out, progress);
    if (*test_cmd) return analyze_regime_test(common, aopts, out);
    if (*validate_cmd) return cmd_validate(common, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::runtime_error& e) {
    // read_jsonl reports unreadable files this way.
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitFailure;
}

}  // namespace isingforage::cli
