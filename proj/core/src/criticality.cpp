#include "isingforage/criticality.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "isingforage/ising.hpp"
#include "isingforage/parallel.hpp"

namespace isingforage {

std::string_view to_string(CurveEstimator e) noexcept {
  return e == CurveEstimator::kPointwise ? "pointwise" : "replica_exchange";
}

CurveEstimator curve_estimator_from_string(std::string_view name) {
  if (name == "pointwise") return CurveEstimator::kPointwise;
  if (name == "replica_exchange") return CurveEstimator::kReplicaExchange;
  throw std::invalid_argument("unknown curve estimator: " + std::string(name));
}

void SamplingParams::validate() const {
  if (n_therm < 0) throw std::invalid_argument("criticality.n_therm must be non-negative");
  if (n_sample < 2) throw std::invalid_argument("criticality.n_sample must be >= 2");
  if (stride < 1) throw std::invalid_argument("criticality.stride must be >= 1");
  if (n_sample / stride < 2) throw std::invalid_argument("criticality: fewer than 2 recorded samples");
}

std::vector<double> log_spaced_grid(double lo, double hi, std::size_t points) {
  if (!(lo > 0.0) || !(hi > lo) || points < 2) {
    throw std::invalid_argument("log_spaced_grid: need 0 < lo < hi and at least 2 points");
  }
  std::vector<double> grid(points);
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (std::size_t k = 0; k < points; ++k) {
    grid[k] = std::pow(10.0, a + (b - a) * static_cast<double>(k) / static_cast<double>(points - 1));
  }
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

namespace {

void check_grid(std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("heat_capacity_curve: empty grid");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!(grid[k] > 0.0)) throw std::invalid_argument("heat_capacity_curve: grid values must be positive");
    if (k > 0 && !(grid[k] > grid[k - 1])) {
      throw std::invalid_argument("heat_capacity_curve: grid must be strictly increasing");
    }
  }
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  for (double x : xs) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  return std::max(0.0, m2 / static_cast<double>(n - 1));
}

std::vector<double> pointwise_curve(const Genome& genome, std::span<const double> sensors,
                                    std::span<const double> grid, const SamplingParams& params,
                                    Rng& rng, std::size_t workers) {
  const std::uint64_t base = rng.next();
  const double beta = genome.beta();
  std::vector<double> values(grid.size());
  parallel_for(grid.size(), workers, [&](std::size_t k) {
    Rng local(derive_seed(base, {k}));
    const double var = estimate_energy_variance(genome, sensors, grid[k], params, local);
    values[k] = grid[k] * grid[k] * beta * beta * var;
  });
  return values;
}

// Self-consistent multiple-histogram equations over the pooled distinct
// energies. Works in linear space with energies shifted so the minimum is 0,
// which keeps every Boltzmann factor in (0, 1].
std::vector<double> reweighted_variances(const std::vector<std::vector<double>>& samples,
                                         std::span<const double> x) {
  const std::size_t n_temps = x.size();
  std::vector<double> pooled;
  for (const auto& s : samples) pooled.insert(pooled.end(), s.begin(), s.end());
  std::sort(pooled.begin(), pooled.end());

  std::vector<double> energy;
  std::vector<double> count;
  for (double e : pooled) {
    if (energy.empty() || e != energy.back()) {
      energy.push_back(e);
      count.push_back(1.0);
    } else {
      count.back() += 1.0;
    }
  }
  const double e_min = energy.front();
  for (double& e : energy) e -= e_min;
  const std::size_t n_levels = energy.size();

  std::vector<double> n_per_temp(n_temps);
  for (std::size_t k = 0; k < n_temps; ++k) n_per_temp[k] = static_cast<double>(samples[k].size());

  // boltzmann[u * n_temps + k] = exp(-x_k e_u)
  std::vector<double> boltzmann(n_levels * n_temps);
  for (std::size_t u = 0; u < n_levels; ++u) {
    for (std::size_t k = 0; k < n_temps; ++k) boltzmann[u * n_temps + k] = std::exp(-x[k] * energy[u]);
  }

  // Initial partition functions by integrating per-temperature mean energies.
  std::vector<double> log_z(n_temps, 0.0);
  std::vector<double> mean_e(n_temps, 0.0);
  for (std::size_t k = 0; k < n_temps; ++k) {
    double s = 0.0;
    for (double e : samples[k]) s += e - e_min;
    mean_e[k] = samples[k].empty() ? 0.0 : s / static_cast<double>(samples[k].size());
  }
  for (std::size_t k = 1; k < n_temps; ++k) {
    log_z[k] = log_z[k - 1] - (x[k] - x[k - 1]) * 0.5 * (mean_e[k] + mean_e[k - 1]);
  }
  std::vector<double> z(n_temps);
  for (std::size_t k = 0; k < n_temps; ++k) z[k] = std::exp(log_z[k] - log_z.back());

  std::vector<double> density(n_levels);
  std::vector<double> z_next(n_temps);
  constexpr int kMaxIterations = 200000;
  constexpr double kTolerance = 1e-11;
  for (int it = 0; it < kMaxIterations; ++it) {
    for (std::size_t u = 0; u < n_levels; ++u) {
      const double* row = &boltzmann[u * n_temps];
      double denom = 0.0;
      for (std::size_t k = 0; k < n_temps; ++k) denom += n_per_temp[k] * row[k] / z[k];
      density[u] = count[u] / denom;
    }
    std::fill(z_next.begin(), z_next.end(), 0.0);
    for (std::size_t u = 0; u < n_levels; ++u) {
      const double* row = &boltzmann[u * n_temps];
      for (std::size_t k = 0; k < n_temps; ++k) z_next[k] += density[u] * row[k];
    }
    // Fix the gauge at the coldest temperature, where Z is dominated by the
    // ground level and stays O(1).
    const double scale = z_next.back();
    double change = 0.0;
    for (std::size_t k = 0; k < n_temps; ++k) {
      z_next[k] /= scale;
      change = std::max(change, std::abs(std::log(z_next[k] / z[k])));
    }
    z.swap(z_next);
    if (change < kTolerance) break;
  }

  std::vector<double> variances(n_temps);
  for (std::size_t k = 0; k < n_temps; ++k) {
    double norm = 0.0;
    double m1 = 0.0;
    for (std::size_t u = 0; u < n_levels; ++u) {
      const double w = density[u] * boltzmann[u * n_temps + k];
      norm += w;
      m1 += w * energy[u];
    }
    m1 /= norm;
    double var = 0.0;
    for (std::size_t u = 0; u < n_levels; ++u) {
      const double d = energy[u] - m1;
      var += density[u] * boltzmann[u * n_temps + k] * d * d;
    }
    variances[k] = std::max(0.0, var / norm);
  }
  return variances;
}

std::vector<double> replica_exchange_curve(const Genome& genome, std::span<const double> sensors,
                                           std::span<const double> grid,
                                           const SamplingParams& params, Rng& rng) {
  const std::size_t n_temps = grid.size();
  const double beta = genome.beta();
  std::vector<double> x(n_temps);
  for (std::size_t k = 0; k < n_temps; ++k) x[k] = grid[k] * beta;

  const SpinState ground = min_energy_state(genome, sensors, rng);
  std::vector<SpinState> replicas(n_temps, ground);
  std::vector<double> energies(n_temps, network_energy(genome, ground));
  std::vector<std::vector<double>> samples(n_temps);
  for (auto& s : samples) s.reserve(static_cast<std::size_t>(params.n_sample / params.stride));

  GlauberDynamics dynamics(genome);
  const int rounds = params.n_therm + params.n_sample;
  for (int r = 0; r < rounds; ++r) {
    for (std::size_t k = 0; k < n_temps; ++k) {
      dynamics.sweep(replicas[k], grid[k], rng);
      energies[k] = network_energy(genome, replicas[k]);
    }
    for (std::size_t k = static_cast<std::size_t>(r % 2); k + 1 < n_temps; k += 2) {
      const double log_accept = (x[k] - x[k + 1]) * (energies[k] - energies[k + 1]);
      if (log_accept >= 0.0 || rng.uniform() < std::exp(log_accept)) {
        std::swap(replicas[k], replicas[k + 1]);
        std::swap(energies[k], energies[k + 1]);
      }
    }
    const int recorded = r - params.n_therm + 1;
    if (recorded > 0 && recorded % params.stride == 0) {
      for (std::size_t k = 0; k < n_temps; ++k) samples[k].push_back(energies[k]);
    }
  }

  if (n_temps == 1) {
    return {grid[0] * grid[0] * beta * beta * sample_variance(samples[0])};
  }
  std::vector<double> var = reweighted_variances(samples, x);
  std::vector<double> values(n_temps);
  for (std::size_t k = 0; k < n_temps; ++k) values[k] = x[k] * x[k] * var[k];
  return values;
}

}  // namespace

double estimate_energy_variance(const Genome& genome, std::span<const double> sensors,
                                double c_beta, const SamplingParams& params, Rng& rng) {
  params.validate();
  if (!(c_beta > 0.0)) throw std::invalid_argument("estimate_energy_variance: c_beta must be positive");
  SpinState state = min_energy_state(genome, sensors, rng);
  GlauberDynamics dynamics(genome);
  for (int k = 0; k < params.n_therm; ++k) dynamics.sweep(state, c_beta, rng);
  std::vector<double> energies;
  energies.reserve(static_cast<std::size_t>(params.n_sample / params.stride));
  for (int k = 1; k <= params.n_sample; ++k) {
    dynamics.sweep(state, c_beta, rng);
    if (k % params.stride == 0) energies.push_back(network_energy(genome, state));
  }
  return sample_variance(energies);
}

HeatCapacityCurve heat_capacity_curve(const Genome& genome, std::span<const double> sensors,
                                      std::span<const double> grid, const SamplingParams& params,
                                      Rng& rng, std::size_t workers) {
  params.validate();
  check_grid(grid);
  HeatCapacityCurve curve;
  curve.grid.assign(grid.begin(), grid.end());
  curve.params = params;
  curve.sensors.assign(sensors.begin(), sensors.end());
  if (genome.edge_count() == 0) {
    curve.values.assign(grid.size(), 0.0);
    return curve;
  }
  curve.values = params.estimator == CurveEstimator::kPointwise
                     ? pointwise_curve(genome, sensors, grid, params, rng, workers)
                     : replica_exchange_curve(genome, sensors, grid, params, rng);
  return curve;
}

RegimeEstimate find_c_crit(HeatCapacityCurve curve) {
  RegimeEstimate out;
  const std::vector<double>& g = curve.grid;
  const std::vector<double>& v = curve.values;
  if (g.empty() || g.size() != v.size()) throw std::invalid_argument("find_c_crit: empty or ragged curve");

  const std::size_t n = v.size();
  std::vector<double> smooth(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t lo = k == 0 ? 0 : k - 1;
    const std::size_t hi = std::min(n - 1, k + 1);
    double s = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) s += v[j];
    smooth[k] = s / static_cast<double>(hi - lo + 1);
  }
  const auto peak = std::max_element(smooth.begin(), smooth.end());
  if (!(*peak > 0.0)) {
    out.valid = false;
    out.c_beta_crit = std::numeric_limits<double>::quiet_NaN();
    out.delta = std::numeric_limits<double>::quiet_NaN();
    out.curve = std::move(curve);
    return out;
  }
  const std::size_t k = static_cast<std::size_t>(peak - smooth.begin());
  double log_c = std::log10(g[k]);
  if (k == 0 || k + 1 == n) {
    out.boundary_peak = true;
  } else {
    const double x0 = std::log10(g[k - 1]), x1 = log_c, x2 = std::log10(g[k + 1]);
    const double y0 = smooth[k - 1], y1 = smooth[k], y2 = smooth[k + 1];
    const double denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
    const double a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
    const double b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
    if (a < 0.0) log_c = std::clamp(-b / (2.0 * a), x0, x2);
  }
  out.valid = true;
  out.c_beta_crit = std::pow(10.0, log_c);
  out.delta = std::log10(out.c_beta_crit);
  out.curve = std::move(curve);
  return out;
}

std::uint64_t content_key(const Genome& genome, std::span<const double> sensors) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  const std::string text = genome_to_string(genome);
  feed(text.data(), text.size());
  for (double s : sensors) {
    std::uint64_t bits;
    std::memcpy(&bits, &s, sizeof bits);
    for (int b = 0; b < 8; ++b) {
      const unsigned char byte = static_cast<unsigned char>(bits >> (8 * b));
      feed(&byte, 1);
    }
  }
  return h;
}

PopulationRegime population_delta(std::span<const Genome> genomes,
                                  std::span<const std::vector<double>> snapshots,
                                  std::span<const double> grid, const SamplingParams& params,
                                  std::uint64_t seed, std::size_t workers) {
  if (snapshots.size() != genomes.size()) {
    throw std::invalid_argument("population_delta: every organism needs a sensor snapshot");
  }
  for (std::size_t i = 0; i < genomes.size(); ++i) {
    if (snapshots[i].size() != genomes[i].architecture().n_sensors) {
      throw std::invalid_argument("population_delta: missing sensor snapshot for organism " +
                                  std::to_string(i));
    }
  }
  PopulationRegime out;
  out.estimates.resize(genomes.size());
  parallel_for(genomes.size(), workers, [&](std::size_t i) {
    Rng rng(derive_seed(seed, StreamPurpose::kCriticality, {content_key(genomes[i], snapshots[i])}));
    out.estimates[i] = find_c_crit(heat_capacity_curve(genomes[i], snapshots[i], grid, params, rng));
  });

  std::vector<double> valid;
  out.deltas.reserve(genomes.size());
  for (const RegimeEstimate& e : out.estimates) {
    out.deltas.push_back(e.delta);
    if (e.valid) valid.push_back(e.delta);
  }
  out.n_valid = valid.size();
  if (valid.empty()) {
    out.mean = out.median = out.sd = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  // Sorted first so the summation order, and hence the mean, is independent
  // of organism order.
  std::sort(valid.begin(), valid.end());
  out.mean = std::accumulate(valid.begin(), valid.end(), 0.0) / static_cast<double>(valid.size());
  const std::size_t m = valid.size() / 2;
  out.median = valid.size() % 2 == 1 ? valid[m] : 0.5 * (valid[m - 1] + valid[m]);
  double ss = 0.0;
  for (double d : valid) ss += (d - out.mean) * (d - out.mean);
  out.sd = valid.size() > 1 ? std::sqrt(ss / static_cast<double>(valid.size() - 1)) : 0.0;
  return out;
}

}  // namespace isingforage
