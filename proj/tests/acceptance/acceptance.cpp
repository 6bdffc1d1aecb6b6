// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. `--only 1,7` restricts the run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "isingforage/analysis.hpp"
#include "isingforage/cli/app.hpp"
#include "isingforage/cli/io.hpp"
#include "isingforage/criticality.hpp"
#include "isingforage/evolution.hpp"
#include "isingforage/ising.hpp"
#include "isingforage/parallel.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace isingforage;

namespace {

const Architecture kArch{4, 4, 4};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> random_sensors(Rng& rng) {
  return {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double slope(std::span<const double> x, std::span<const double> y) {
  const double mx = mean_of(x), my = mean_of(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
  }
  return sxy / sxx;
}

const std::size_t kWorkers = resolve_workers(0);

// ---------------------------------------------------------------------------
// Shared evolution runs
// ---------------------------------------------------------------------------

struct EvolvedRun {
  std::vector<GenerationRecord> records;
  std::vector<Genome> final_genomes;
  std::vector<double> delta_generations;
  std::vector<double> mean_deltas;
};

EvolvedRun run_evolution(const WorldConfig& world, double beta_init, std::uint64_t seed, std::size_t generations,
                         std::size_t delta_stride) {
  EvolutionConfig ec;
  ec.generations = generations;
  ec.beta_init = beta_init;
  ec.seed = seed;
  EvolveOptions opts;
  opts.workers = kWorkers;
  opts.delta.stride = delta_stride;
  opts.delta.params.n_therm = 500;
  opts.delta.params.n_sample = 2000;
  EvolvedRun run;
  opts.on_generation = [&](const GenerationRecord& rec, std::span<const Organism> pop) {
    if (rec.mean_delta) {
      run.delta_generations.push_back(static_cast<double>(rec.generation));
      run.mean_deltas.push_back(*rec.mean_delta);
    }
    if (rec.generation == generations) {
      for (const Organism& o : pop) run.final_genomes.push_back(o.genome);
    }
  };
  run.records = evolve(world, ec, opts);
  return run;
}

std::vector<double> max_fitness(const EvolvedRun& run) {
  std::vector<double> out;
  for (const GenerationRecord& r : run.records) out.push_back(r.max_fitness);
  return out;
}

class Runs {
 public:
  const std::vector<EvolvedRun>& critical() {
    if (critical_.empty()) critical_ = make(1.0, 10, 25, 100);
    return critical_;
  }
  const std::vector<EvolvedRun>& subcritical() {
    if (subcritical_.empty()) subcritical_ = make(10.0, 5, 0, 200);
    return subcritical_;
  }

 private:
  static std::vector<EvolvedRun> make(double beta, std::size_t n, std::size_t stride, std::uint64_t base) {
    std::vector<EvolvedRun> out;
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t r = 0; r < n; ++r) {
      out.push_back(run_evolution(WorldConfig{}, beta, base + r, 300, stride));
      std::fprintf(stderr, "  evolved beta_init=%g replicate %zu/%zu (%.0f s)\n", beta, r + 1, n, seconds_since(t0));
    }
    return out;
  }
  std::vector<EvolvedRun> critical_;
  std::vector<EvolvedRun> subcritical_;
};

Runs runs;

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

struct OracleCase {
  Genome genome;
  std::vector<double> sensors;
};

// Twenty unevolved genomes with 8 free spins, shared by criteria 1 and 2.
const std::vector<OracleCase>& oracle_cases() {
  static const std::vector<OracleCase> cases = [] {
    Rng rng(101);
    std::vector<OracleCase> out;
    for (int k = 0; k < 20; ++k) {
      Genome g = Genome::random(kArch, 1.0, 0.5, rng);
      out.push_back({std::move(g), random_sensors(rng)});
    }
    return out;
  }();
  return cases;
}

double sampled_tv(const OracleCase& c, const oracle::Ensemble& exact, long sweeps, Rng& rng) {
  GlauberDynamics dyn(c.genome);
  SpinState s = SpinState::random(kArch, c.sensors, rng);
  for (int k = 0; k < 1000; ++k) dyn.sweep(s, 1.0, rng);
  std::vector<double> counts(exact.probability.size(), 0.0);
  for (long k = 0; k < sweeps; ++k) {
    dyn.sweep(s, 1.0, rng);
    counts[oracle::encode(c.genome, s.values())] += 1.0;
  }
  double tv = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    tv += std::abs(counts[k] / static_cast<double>(sweeps) - exact.probability[k]);
  }
  return 0.5 * tv;
}

Outcome boltzmann_tv() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(102);
  double worst = 0.0;
  std::vector<std::size_t> over;
  for (std::size_t k = 0; k < oracle_cases().size(); ++k) {
    const OracleCase& c = oracle_cases()[k];
    const double tv = sampled_tv(c, oracle::boltzmann(c.genome, c.sensors, c.genome.beta()), 100000, rng);
    worst = std::max(worst, tv);
    if (tv >= 0.02) over.push_back(k);
  }
  const double elapsed = seconds_since(t0);
  std::string detail = fmt("max TV %.4f, %zu/20 genomes at or above 0.02, %.1f s", worst, over.size(), elapsed);
  // Diagnostic only: slow mixing shows up as convergence with longer chains.
  for (std::size_t k : over) {
    const OracleCase& c = oracle_cases()[k];
    detail += fmt("; genome %zu TV %.4f after 1e7 sweeps", k,
                  sampled_tv(c, oracle::boltzmann(c.genome, c.sensors, c.genome.beta()), 10000000, rng));
  }
  return {over.empty() && elapsed < 120.0, detail};
}

Outcome heat_capacity_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(202);
  const auto grid = log_spaced_grid();
  // Four times the default sample count; the tails at 1% of the peak need it.
  SamplingParams params;
  params.n_sample = 40000;
  double worst = 0.0;
  int checked = 0;
  for (const OracleCase& c : oracle_cases()) {
    const auto exact = oracle::heat_capacity(c.genome, c.sensors, grid);
    const auto curve = heat_capacity_curve(c.genome, c.sensors, grid, params, rng);
    const double peak = *std::max_element(exact.begin(), exact.end());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (exact[k] > 0.01 * peak) {
        worst = std::max(worst, std::abs(curve.values[k] / exact[k] - 1.0));
        ++checked;
      }
    }
  }
  const double elapsed = seconds_since(t0);
  return {worst < 0.05 && elapsed < 600.0,
          fmt("max relative error %.4f over %d points of 20 curves at %d samples per replica, %.1f s", worst,
              checked, params.n_sample, elapsed)};
}

Outcome unevolved_delta() {
  std::string detail;
  bool pass = true;
  std::uint64_t seed = 303;
  for (double beta : {0.1, 1.0, 10.0}) {
    EvolutionConfig ec;
    ec.beta_init = beta;
    ec.seed = seed++;
    const auto genomes = initial_genomes(ec);
    const auto pop = evaluate_population(genomes, WorldConfig{}, seed++);
    const PopulationRegime r =
        population_delta(genomes, sensor_snapshots(pop), log_spaced_grid(), SamplingParams{}, seed++, kWorkers);
    const double target = -std::log10(beta);
    pass = pass && r.n_valid == genomes.size() && std::abs(r.mean - target) <= 0.2;
    detail += fmt("%sbeta %g: mean delta %+.3f (target %+.0f)", detail.empty() ? "" : "; ", beta, r.mean, target);
  }
  return {pass, detail};
}

Outcome evolution_smoke() {
  const auto& crit = runs.critical();
  std::size_t above = 0, correlated = 0;
  std::string rhos;
  for (const EvolvedRun& run : crit) {
    const auto maxes = max_fitness(run);
    std::vector<double> gens(maxes.size());
    std::iota(gens.begin(), gens.end(), 0.0);
    const double rho = oracle::spearman(gens, maxes);
    const double best = *std::max_element(maxes.begin(), maxes.end());
    above += best > 2.2;
    correlated += rho > 0.8;
    rhos += fmt("%s%.2f", rhos.empty() ? "" : " ", rho);
  }
  std::vector<double> finals;
  for (const EvolvedRun& run : crit) finals.push_back(run.records.back().max_fitness);
  std::sort(finals.begin(), finals.end());
  return {above == crit.size() && correlated >= 8,
          fmt("best > 2.2 in %zu/10, Spearman > 0.8 in %zu/10 [%s], median final max fitness %.2f", above,
              correlated, rhos.c_str(), 0.5 * (finals[4] + finals[5]))};
}

Outcome hard_task_stall() {
  WorldConfig world;
  world.hard_task = true;
  const double beta = std::pow(10.0, 1.5);
  double lo = INFINITY, hi = -INFINITY;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::uint64_t r = 0; r < 5; ++r) {
    const EvolvedRun run = run_evolution(world, beta, 500 + r, 200, 0);
    for (const GenerationRecord& rec : run.records) {
      lo = std::min(lo, rec.mean_fitness);
      hi = std::max(hi, rec.mean_fitness);
    }
    std::fprintf(stderr, "  hard task replicate %llu/5 (%.0f s)\n", static_cast<unsigned long long>(r + 1),
                 seconds_since(t0));
  }
  return {lo >= 1.9 && hi <= 2.1, fmt("population mean fitness in [%.3f, %.3f]", lo, hi)};
}

Outcome delta_drift() {
  const auto& crit = runs.critical();
  std::size_t decreasing = 0;
  double worst_late = -INFINITY;
  std::string slopes;
  for (const EvolvedRun& run : crit) {
    const double s = slope(run.delta_generations, run.mean_deltas);
    decreasing += s < 0.0;
    for (std::size_t k = 0; k < run.mean_deltas.size(); ++k) {
      if (run.delta_generations[k] > 50.0) worst_late = std::max(worst_late, run.mean_deltas[k]);
    }
    slopes += fmt("%s%+.2f->%+.2f", slopes.empty() ? "" : " ", run.mean_deltas.front(), run.mean_deltas.back());
  }
  return {decreasing >= 8 && worst_late <= 0.2,
          fmt("negative delta trend in %zu/10, max mean delta after gen 50 %+.3f, first->last [%s]", decreasing,
              worst_late, slopes.c_str())};
}

Outcome generalizability_calibration() {
  std::vector<double> linear(50000), crash(50000);
  for (std::size_t t = 1; t <= linear.size(); ++t) {
    const double x = static_cast<double>(t);
    linear[t - 1] = 0.004 * x;
    crash[t - 1] = t <= 2000 ? 2.0 + 10.0 * (x / 2000.0) * (x / 2000.0) : 12.0 * std::exp(-(x - 2000.0) / 1000.0);
  }
  const double g_lin = generalizability_from_trace(linear, 2000, 50000).gamma;
  const double g_crash = generalizability_from_trace(crash, 2000, 50000).gamma;
  return {std::abs(g_lin - 1.0) <= 1e-6 && g_crash < 0.2,
          fmt("linear gamma %.9f, accelerate-then-crash gamma %.2e", g_lin, g_crash)};
}

Outcome perturbation_ordering() {
  const auto& crit = runs.critical();
  const auto& sub = runs.subcritical();
  const std::vector<double> f_grid{0.0, 0.25, 0.5, 0.75, 1.0};
  std::size_t ordered = 0;
  std::string pairs;
  for (std::size_t r = 0; r < sub.size(); ++r) {
    Rng rc(700 + r), rs(700 + r);
    const PerturbationCurve a = perturbation_sweep(crit[r].final_genomes, WorldConfig{}, f_grid, 3, rc, kWorkers);
    const PerturbationCurve b = perturbation_sweep(sub[r].final_genomes, WorldConfig{}, f_grid, 3, rs, kWorkers);
    const bool ok = a.fit.ok && b.fit.ok && a.fit.alpha > b.fit.alpha;
    ordered += ok;
    pairs += fmt("%s(%.2f vs %.2f, F0 %.2f/%.2f)", pairs.empty() ? "" : " ", a.fit.alpha, b.fit.alpha, a.mean[0],
                 b.mean[0]);
  }

  Rng rng(808);
  std::vector<double> f, y;
  for (int k = 0; k <= 20; ++k) f.push_back(0.05 * k);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    y.clear();
    for (double x : f) y.push_back(4.0 * std::exp(-2.0 * x) + rng.normal(0.0, 0.01));
    worst = std::max(worst, std::abs(fit_exponential(f, y).alpha / -2.0 - 1.0));
  }
  return {ordered >= 4 && worst < 0.025,
          fmt("alpha_critical > alpha_subcritical in %zu/5 %s; planted exponent max error %.2f%%", ordered,
              pairs.c_str(), 100.0 * worst)};
}

Outcome ea_invariants() {
  Rng rng(909);
  EvolutionConfig c;
  std::vector<Genome> selected;
  for (std::size_t k = 0; k < c.n_selected; ++k) selected.push_back(Genome::random(kArch, 1.0, 0.5, rng));
  std::size_t applications = 0, violations = 0;
  auto valid = [](const Genome& g) {
    try {
      g.validate();
    } catch (const std::exception&) {
      return false;
    }
    for (const Edge& e : g.edges()) {
      if (!g.architecture().edge_allowed(e.i, e.j) || std::abs(e.weight) > kMaxWeight) return false;
    }
    return g.beta() > 0.0;
  };
  while (applications < 100000) {
    const auto next = next_generation(selected, c, rng);
    std::map<OperatorTag, std::size_t> counts;
    for (const auto& [g, t] : next) {
      ++counts[t];
      violations += !valid(g);
    }
    violations += next.size() != c.population_size;
    violations += counts[OperatorTag::kCopy] != c.n_copy || counts[OperatorTag::kMutate] != c.n_mutants ||
                  counts[OperatorTag::kMate] != c.n_mated;
    violations += !(next.front().first == selected.front());
    applications += c.n_mutants + c.n_mated;
    // Fitness-free selection keeps the pool drifting without collapsing.
    for (std::size_t k = 0; k < c.n_selected; ++k) selected[k] = next[rng.below(next.size())].first;
    std::sort(selected.begin(), selected.end(),
              [](const Genome& a, const Genome& b) { return a.edge_count() > b.edge_count(); });
    for (Genome& g : selected) {
      if (g.beta() < 1e-3 || g.beta() > 1e3) g.set_beta(1.0);
    }
  }
  const Genome unit(kArch, 1.0);
  const int n = 100000;
  double s = 0.0, ss = 0.0;
  for (int k = 0; k < n; ++k) {
    const double b = op_mutate(unit, c, rng).beta();
    s += b;
    ss += b * b;
  }
  const double mean = s / n;
  const double sd = std::sqrt((ss - n * mean * mean) / (n - 1));
  return {violations == 0 && std::abs(mean - 1.0) <= 0.001 && std::abs(sd - 0.02) <= 0.002,
          fmt("%zu violations over %zu operator applications; beta noise mean %.5f sd %.5f", violations,
              applications, mean, sd)};
}

Outcome cli_determinism() {
  const fs::path root = fs::temp_directory_path() / "isingforage_acceptance_cli";
  fs::remove_all(root);
  const std::string cfg = (root / "config.yaml").string();
  cli::write_file(cfg,
                  "world: {arena_side: 24, n_food: 12, n_organisms: 12, eat_radius: 0.3, lifetime: 150}\n"
                  "evolution: {generations: 6, population_size: 12, n_selected: 6, n_copy: 2, n_mutants: 5, "
                  "n_mated: 5}\n"
                  "criticality: {grid_points: 24, n_therm: 300, n_sample: 1500}\n"
                  "run: {n_replicates: 3, beta_init: [1.0, 10.0], seed: 99, delta_stride: 3, snapshot_stride: 2}\n");
  auto invoke = [&](std::vector<std::string> args, const std::string& workers, const std::string& out) {
    args.insert(args.end(), {"-c", cfg, "-q", "-j", workers, "-o", (root / out).string()});
    std::ostringstream o, e;
    return cli::run(args, o, e);
  };
  auto tree = [](const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
      if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = cli::read_file(e.path());
    }
    return files;
  };
  struct Command {
    std::string name;
    std::vector<std::string> args;
  };
  const std::string run1 = (root / "evolve_1").string();
  const std::string pop = run1 + "/cond01_rep002/genomes/gen000006.json";
  const std::vector<Command> commands{
      {"evolve", {"evolve"}},
      {"criticality", {"criticality", "--genomes", pop}},
      {"criticality-unevolved", {"criticality", "--unevolved", "12"}},
      {"generalize", {"analyze", "generalize", "--run-dir", run1, "--t-train", "50", "--t-extend", "300"}},
      {"perturb", {"analyze", "perturb", "--run-dir", run1, "--n-seeds", "2"}},
      {"operators", {"analyze", "operators", "--run-dir", run1, "--gen-lo", "2"}},
      {"regime-test",
       {"analyze", "regime-test", "--a", (root / "criticality_1/regime.csv").string(), "--b",
        (root / "criticality-unevolved_1/regime.csv").string()}},
  };
  std::size_t identical = 0;
  std::string failures;
  for (const Command& c : commands) {
    const int a = invoke(c.args, "1", c.name + "_1");
    const int b = invoke(c.args, "8", c.name + "_8");
    const int again = invoke(c.args, "1", c.name + "_1b");
    if (a == 0 && b == 0 && again == 0 && tree(root / (c.name + "_1")) == tree(root / (c.name + "_8")) &&
        tree(root / (c.name + "_1")) == tree(root / (c.name + "_1b"))) {
      ++identical;
    } else {
      failures += " " + c.name;
    }
  }
  fs::remove_all(root);
  return {identical == commands.size(),
          fmt("%zu/%zu commands byte-identical across reruns and 1 vs 8 workers%s%s", identical, commands.size(),
              failures.empty() ? "" : "; differing:", failures.c_str())};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> check;
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      std::stringstream list(argv[++i]);
      for (std::string item; std::getline(list, item, ',');) only.insert(std::stoi(item));
    } else {
      std::fprintf(stderr, "usage: %s [--only 1,2,...]\n", argv[0]);
      return 2;
    }
  }
  const std::vector<Criterion> criteria{
      {1, "Glauber sampling matches Boltzmann weights", boltzmann_tv},
      {2, "heat capacity matches exact enumeration", heat_capacity_oracle},
      {3, "unevolved delta tracks -log10 beta_init", unevolved_delta},
      {4, "evolution improves fitness on the simple task", evolution_smoke},
      {5, "deep subcritical populations stall on the hard task", hard_task_stall},
      {6, "critical populations drift subcritical", delta_drift},
      {7, "generalizability calibration", generalizability_calibration},
      {8, "perturbation decay ordering and exponent fit", perturbation_ordering},
      {9, "evolutionary operator invariants", ea_invariants},
      {10, "CLI outputs are deterministic", cli_determinism},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.contains(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %2d %s: %s (%s) [%.0f s]\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
