#include "isingforage/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "isingforage/parallel.hpp"

namespace isingforage {

GeneralizabilityResult generalizability_from_trace(std::span<const double> mean_energy,
                                                   std::size_t t_train, std::size_t t_extend,
                                                   double overfit_threshold) {
  if (t_train == 0 || t_extend < t_train) {
    throw std::invalid_argument("generalizability: need 0 < t_train <= t_extend");
  }
  if (mean_energy.size() < t_extend) {
    throw std::invalid_argument("generalizability: trace shorter than t_extend");
  }
  GeneralizabilityResult r;
  r.t_train = t_train;
  r.t_extend = t_extend;
  r.fitness_train = mean_energy[t_train - 1];
  r.fitness_extend = mean_energy[t_extend - 1];
  const double train_rate = r.fitness_train / static_cast<double>(t_train);
  const double extend_rate = r.fitness_extend / static_cast<double>(t_extend);
  if (train_rate == 0.0 || !std::isfinite(train_rate)) {
    r.flagged = true;
    r.gamma = std::numeric_limits<double>::quiet_NaN();
    r.cluster = "undefined";
    return r;
  }
  r.gamma = t_extend == t_train ? 1.0 : extend_rate / train_rate;
  r.cluster = r.gamma < overfit_threshold ? "overfit" : "generalizing";
  return r;
}

GeneralizabilityResult generalizability(std::span<const Genome> population, const WorldConfig& world,
                                        std::size_t t_train, std::size_t t_extend, Rng& rng,
                                        double overfit_threshold) {
  if (population.empty()) throw std::invalid_argument("generalizability: empty population");
  if (t_train == 0 || t_extend < t_train) {
    throw std::invalid_argument("generalizability: need 0 < t_train <= t_extend");
  }
  std::vector<double> mean_energy;
  mean_energy.reserve(t_extend);
  LifetimeOptions options;
  options.steps = t_extend;
  options.on_step = [&](std::size_t, std::span<const Organism> pop) {
    double s = 0.0;
    for (const Organism& o : pop) s += o.energy;
    mean_energy.push_back(s / static_cast<double>(pop.size()));
  };
  evaluate_population(population, world, rng.next(), options);
  return generalizability_from_trace(mean_energy, t_train, t_extend, overfit_threshold);
}

Genome perturb_weights(const Genome& genome, double f_pert, Rng& rng) {
  if (!(f_pert >= 0.0)) throw std::invalid_argument("perturb_weights: f_pert must be non-negative");
  Genome out = genome;
  for (const Edge& e : genome.edges()) {
    const double shifted = rng.coin() ? e.weight + f_pert : e.weight - f_pert;
    out.set_edge(e.i, e.j, std::clamp(shifted, -kMaxWeight, kMaxWeight));
  }
  return out;
}

ExponentialFit fit_exponential(std::span<const double> f, std::span<const double> fitness) {
  if (f.size() != fitness.size()) throw std::invalid_argument("fit_exponential: size mismatch");
  ExponentialFit fit;
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (fitness[k] > 0.0 && std::isfinite(fitness[k])) {
      xs.push_back(f[k]);
      ys.push_back(std::log(fitness[k]));
    } else {
      ++fit.n_excluded;
    }
  }
  fit.n_used = xs.size();
  if (xs.size() < 3) return fit;
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxx += (xs[k] - mx) * (xs[k] - mx);
    sxy += (xs[k] - mx) * (ys[k] - my);
  }
  if (sxx == 0.0) return fit;
  fit.alpha = sxy / sxx;
  fit.amplitude = std::exp(my - fit.alpha * mx);
  fit.ok = true;
  return fit;
}

PerturbationCurve perturbation_sweep(std::span<const Genome> population, const WorldConfig& world,
                                     std::span<const double> f_grid, std::size_t n_seeds, Rng& rng,
                                     std::size_t workers) {
  if (population.empty()) throw std::invalid_argument("perturbation_sweep: empty population");
  if (f_grid.empty() || f_grid.front() != 0.0) {
    throw std::invalid_argument("perturbation_sweep: f_grid must start at 0");
  }
  for (std::size_t g = 1; g < f_grid.size(); ++g) {
    if (!(f_grid[g] > f_grid[g - 1])) throw std::invalid_argument("perturbation_sweep: f_grid must increase");
  }
  if (n_seeds == 0) throw std::invalid_argument("perturbation_sweep: need at least one seed");

  const std::uint64_t base = rng.next();
  PerturbationCurve curve;
  curve.f_grid.assign(f_grid.begin(), f_grid.end());
  curve.per_seed.assign(f_grid.size(), std::vector<double>(n_seeds, 0.0));

  parallel_for(f_grid.size() * n_seeds, workers, [&](std::size_t task) {
    const std::size_t g = task / n_seeds;
    const std::size_t s = task % n_seeds;
    Rng perturb_rng(derive_seed(base, StreamPurpose::kPerturbation, {g, s}));
    std::vector<Genome> perturbed;
    perturbed.reserve(population.size());
    for (const Genome& genome : population) perturbed.push_back(perturb_weights(genome, f_grid[g], perturb_rng));
    const auto evaluated =
        evaluate_population(perturbed, world, derive_seed(base, StreamPurpose::kLifetime, {s}));
    double sum = 0.0;
    for (const Organism& o : evaluated) sum += o.fitness();
    curve.per_seed[g][s] = sum / static_cast<double>(evaluated.size());
  });

  for (const auto& row : curve.per_seed) {
    const double m = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size());
    double ss = 0.0;
    for (double v : row) ss += (v - m) * (v - m);
    curve.mean.push_back(m);
    curve.sd.push_back(row.size() > 1 ? std::sqrt(ss / static_cast<double>(row.size() - 1)) : 0.0);
  }
  curve.fit = fit_exponential(curve.f_grid, curve.mean);
  return curve;
}

OperatorHistograms operator_fitness_histograms(std::span<const GenerationRecord> records,
                                               std::size_t gen_lo, std::size_t gen_hi,
                                               std::size_t n_bins) {
  if (gen_lo >= gen_hi) throw std::invalid_argument("operator_fitness_histograms: empty generation window");
  if (n_bins == 0) throw std::invalid_argument("operator_fitness_histograms: need at least one bin");

  double lo = INFINITY, hi = -INFINITY;
  std::size_t n = 0;
  for (const GenerationRecord& r : records) {
    if (r.generation < gen_lo || r.generation >= gen_hi) continue;
    for (double f : r.fitness) {
      lo = std::min(lo, f);
      hi = std::max(hi, f);
      ++n;
    }
  }
  if (n == 0) throw std::invalid_argument("operator_fitness_histograms: no organisms in the window");
  if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }

  OperatorHistograms h;
  h.edges.resize(n_bins + 1);
  for (std::size_t b = 0; b <= n_bins; ++b) {
    h.edges[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(n_bins);
  }
  h.edges.back() = hi;
  for (OperatorTag t : {OperatorTag::kInitial, OperatorTag::kCopy, OperatorTag::kMutate, OperatorTag::kMate}) {
    h.counts[t].assign(n_bins, 0);
    h.totals[t] = 0;
  }
  for (const GenerationRecord& r : records) {
    if (r.generation < gen_lo || r.generation >= gen_hi) continue;
    for (std::size_t k = 0; k < r.fitness.size(); ++k) {
      auto bin = static_cast<std::size_t>((r.fitness[k] - lo) / (hi - lo) * static_cast<double>(n_bins));
      bin = std::min(bin, n_bins - 1);
      ++h.counts[r.tags[k]][bin];
      ++h.totals[r.tags[k]];
    }
  }
  return h;
}

namespace {

struct Ranked {
  std::vector<long> doubled_ranks;  // 2 * mid-rank of each pooled value
  std::vector<bool> from_a;
  double tie_term = 0.0;            // sum over tie groups of t^3 - t
  bool all_tied = false;
};

Ranked rank_pooled(std::span<const double> a, std::span<const double> b) {
  std::vector<std::pair<double, bool>> pooled;
  for (double v : a) pooled.emplace_back(v, true);
  for (double v : b) pooled.emplace_back(v, false);
  std::stable_sort(pooled.begin(), pooled.end(),
                   [](const auto& x, const auto& y) { return x.first < y.first; });
  Ranked r;
  const std::size_t n = pooled.size();
  r.doubled_ranks.resize(n);
  r.from_a.resize(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && pooled[j + 1].first == pooled[i].first) ++j;
    const long doubled = static_cast<long>(i + 1 + j + 1);  // 2 * mean of ranks i+1..j+1
    for (std::size_t k = i; k <= j; ++k) {
      r.doubled_ranks[k] = doubled;
      r.from_a[k] = pooled[k].second;
    }
    const double t = static_cast<double>(j - i + 1);
    r.tie_term += t * t * t - t;
    if (i == 0 && j + 1 == n) r.all_tied = true;
    i = j + 1;
  }
  return r;
}

// Exact conditional distribution of the doubled rank sum of m draws from the
// pooled doubled ranks.
double exact_two_sided(const Ranked& r, std::size_t m, long observed) {
  const std::size_t n = r.doubled_ranks.size();
  const long max_sum = std::accumulate(r.doubled_ranks.begin(), r.doubled_ranks.end(), 0L);
  std::vector<std::vector<double>> ways(m + 1, std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
  ways[0][0] = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    const long rank = r.doubled_ranks[k];
    for (std::size_t j = std::min(m, k + 1); j >= 1; --j) {
      auto& dst = ways[j];
      const auto& src = ways[j - 1];
      for (long s = max_sum; s >= rank; --s) dst[static_cast<std::size_t>(s)] += src[static_cast<std::size_t>(s - rank)];
    }
  }
  double total = 0.0, lower = 0.0, upper = 0.0;
  for (long s = 0; s <= max_sum; ++s) {
    const double w = ways[m][static_cast<std::size_t>(s)];
    total += w;
    if (s <= observed) lower += w;
    if (s >= observed) upper += w;
  }
  return std::min(1.0, 2.0 * std::min(lower, upper) / total);
}

}  // namespace

RankTestResult regime_distribution_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 3 || b.size() < 3) throw std::invalid_argument("regime_distribution_test: need >= 3 values per sample");
  RankTestResult res;
  res.mean_a = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
  res.mean_b = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(b.size());

  const Ranked r = rank_pooled(a, b);
  const double m = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double n = m + nb;
  long doubled_sum_a = 0;
  for (std::size_t k = 0; k < r.doubled_ranks.size(); ++k) {
    if (r.from_a[k]) doubled_sum_a += r.doubled_ranks[k];
  }
  const double rank_sum_a = 0.5 * static_cast<double>(doubled_sum_a);
  res.u_statistic = rank_sum_a - m * (m + 1.0) / 2.0;

  if (r.all_tied) {
    res.degenerate = true;
    res.p_value = 1.0;
    return res;
  }
  if (a.size() + b.size() <= kExactRankTestLimit) {
    res.exact = true;
    res.p_value = exact_two_sided(r, a.size(), doubled_sum_a);
    return res;
  }
  const double mean_w = m * (n + 1.0) / 2.0;
  const double var_w = m * nb / 12.0 * ((n + 1.0) - r.tie_term / (n * (n - 1.0)));
  const double dev = std::max(0.0, std::abs(rank_sum_a - mean_w) - 0.5);
  res.p_value = std::min(1.0, std::erfc(dev / std::sqrt(var_w) / std::sqrt(2.0)));
  return res;
}

}  // namespace isingforage
