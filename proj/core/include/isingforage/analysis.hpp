#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "isingforage/environment.hpp"
#include "isingforage/evolution.hpp"
#include "isingforage/genome.hpp"
#include "isingforage/rng.hpp"

namespace isingforage {

// ---------------------------------------------------------------------------
// Generalizability
// ---------------------------------------------------------------------------

struct GeneralizabilityResult {
  /// (<E(t_extend)> / t_extend) / (<E(t_train)> / t_train): 1 for linear
  /// energy growth, << 1 when growth stalls after the training lifetime.
  double gamma = 0.0;
  std::size_t t_train = 0;
  std::size_t t_extend = 0;
  double fitness_train = 0.0;   ///< Population-mean energy at t_train.
  double fitness_extend = 0.0;  ///< Population-mean energy at t_extend.
  bool flagged = false;         ///< Zero training rate; gamma is NaN.
  std::string cluster;          ///< "overfit" or "generalizing".
};

inline constexpr double kDefaultOverfitThreshold = 0.5;

/// `mean_energy[t - 1]` is the population-mean energy after step t.
GeneralizabilityResult generalizability_from_trace(std::span<const double> mean_energy,
                                                   std::size_t t_train, std::size_t t_extend,
                                                   double overfit_threshold = kDefaultOverfitThreshold);

/// Runs the population for t_extend steps in a fresh world and compares the
/// energy-accumulation rates at t_train and t_extend.
GeneralizabilityResult generalizability(std::span<const Genome> population, const WorldConfig& world,
                                        std::size_t t_train, std::size_t t_extend, Rng& rng,
                                        double overfit_threshold = kDefaultOverfitThreshold);

// ---------------------------------------------------------------------------
// Genetic perturbations
// ---------------------------------------------------------------------------

/// Every present weight moves by +f or -f (fair coin), clipped to [-2, 2].
Genome perturb_weights(const Genome& genome, double f_pert, Rng& rng);

struct ExponentialFit {
  bool ok = false;
  double alpha = 0.0;      ///< Exponent in F(f) = amplitude * exp(alpha * f).
  double amplitude = 0.0;
  std::size_t n_used = 0;
  std::size_t n_excluded = 0;  ///< Points with F <= 0.
};

/// Least squares on log F; refuses (ok == false) with fewer than 3 positive
/// points.
ExponentialFit fit_exponential(std::span<const double> f, std::span<const double> fitness);

struct PerturbationCurve {
  std::vector<double> f_grid;
  /// per_seed[g][s]: mean population fitness at grid point g, seed s.
  std::vector<std::vector<double>> per_seed;
  std::vector<double> mean;
  std::vector<double> sd;
  ExponentialFit fit;
};

/// For each grid point and seed, perturbs every genome independently and
/// evaluates the mean fitness over one lifetime. A seed's world stream is
/// shared across grid points.
PerturbationCurve perturbation_sweep(std::span<const Genome> population, const WorldConfig& world,
                                     std::span<const double> f_grid, std::size_t n_seeds, Rng& rng,
                                     std::size_t workers = 1);

// ---------------------------------------------------------------------------
// Operator-wise fitness histograms
// ---------------------------------------------------------------------------

struct OperatorHistograms {
  std::vector<double> edges;  ///< n_bins + 1 shared bin edges.
  std::map<OperatorTag, std::vector<std::size_t>> counts;
  std::map<OperatorTag, std::size_t> totals;
};

/// Fitness histograms per operator tag over organisms of generations in
/// [gen_lo, gen_hi). Throws when the window holds no organisms.
OperatorHistograms operator_fitness_histograms(std::span<const GenerationRecord> records,
                                               std::size_t gen_lo, std::size_t gen_hi,
                                               std::size_t n_bins = 20);

// ---------------------------------------------------------------------------
// Regime comparison
// ---------------------------------------------------------------------------

struct RankTestResult {
  double p_value = 1.0;
  double u_statistic = 0.0;  ///< Mann-Whitney U of sample a.
  double mean_a = 0.0;
  double mean_b = 0.0;
  bool exact = false;       ///< Exact permutation distribution was used.
  bool degenerate = false;  ///< Every value tied.
};

/// Two-sided Mann-Whitney U test. Uses the exact conditional distribution of
/// the mid-rank sum for combined sizes up to kExactRankTestLimit, the normal
/// approximation with tie and continuity corrections beyond.
RankTestResult regime_distribution_test(std::span<const double> a, std::span<const double> b);

inline constexpr std::size_t kExactRankTestLimit = 100;

}  // namespace isingforage
