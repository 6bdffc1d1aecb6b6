#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "isingforage/genome.hpp"
#include "isingforage/rng.hpp"

namespace isingforage {

/// How a heat-capacity curve is estimated from Glauber sampling.
enum class CurveEstimator {
  /// Independent chain per grid point; C_H from each chain's sample variance.
  kPointwise,
  /// One replica per grid point with neighbour swaps, energies from all
  /// replicas combined by multiple-histogram reweighting. Resolves
  /// low-temperature tails and multimodal landscapes that single chains miss.
  kReplicaExchange,
};

std::string_view to_string(CurveEstimator e) noexcept;
CurveEstimator curve_estimator_from_string(std::string_view name);

struct SamplingParams {
  int n_therm = 2000;   ///< Discarded sweeps per chain.
  int n_sample = 10000; ///< Recorded sweeps per chain.
  int stride = 1;       ///< Record every `stride`-th sweep.
  CurveEstimator estimator = CurveEstimator::kReplicaExchange;

  void validate() const;
};

/// `points` values log-spaced over [lo, hi]; defaults to 64 over [1e-2, 1e2].
std::vector<double> log_spaced_grid(double lo = 1e-2, double hi = 1e2, std::size_t points = 64);

/// Sample variance of the network energy at effective inverse temperature
/// c_beta * beta, with sensors clamped, starting from the minimum-energy state.
double estimate_energy_variance(const Genome& genome, std::span<const double> sensors,
                                double c_beta, const SamplingParams& params, Rng& rng);

struct HeatCapacityCurve {
  std::vector<double> grid;    ///< c_beta values, strictly increasing.
  std::vector<double> values;  ///< C_H = c_beta^2 beta^2 Var(E) per grid point.
  SamplingParams params;
  std::vector<double> sensors;
};

/// Heat capacity over `grid`. Grid points of the pointwise estimator are
/// evaluated on up to `workers` threads, each on a stream derived from `rng`.
HeatCapacityCurve heat_capacity_curve(const Genome& genome, std::span<const double> sensors,
                                      std::span<const double> grid, const SamplingParams& params,
                                      Rng& rng, std::size_t workers = 1);

struct RegimeEstimate {
  double c_beta_crit = 0.0;
  double delta = 0.0;  ///< log10(c_beta_crit); NaN when !valid.
  bool boundary_peak = false;
  bool valid = false;
  HeatCapacityCurve curve;
};

/// 3-point moving average, argmax, parabolic refinement in log10(c_beta)
/// against the two neighbours (skipped at the grid ends, which are flagged).
/// An all-zero curve yields valid == false.
RegimeEstimate find_c_crit(HeatCapacityCurve curve);

struct PopulationRegime {
  std::vector<RegimeEstimate> estimates;
  std::vector<double> deltas;  ///< NaN for invalid estimates.
  double mean = 0.0;
  double median = 0.0;
  double sd = 0.0;
  std::size_t n_valid = 0;
};

/// Regime of every organism, with sensors clamped to that organism's snapshot.
/// Each organism's stream is keyed by `seed` and the content of its genome and
/// snapshot, so the result does not depend on ordering or worker count.
PopulationRegime population_delta(std::span<const Genome> genomes,
                                  std::span<const std::vector<double>> snapshots,
                                  std::span<const double> grid, const SamplingParams& params,
                                  std::uint64_t seed, std::size_t workers = 1);

/// Stable 64-bit content hash of a genome and a sensor snapshot.
std::uint64_t content_key(const Genome& genome, std::span<const double> sensors);

}  // namespace isingforage
