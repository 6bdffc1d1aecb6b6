// Independent reference computations used only by the tests. Nothing here
// calls into the library's energy, dynamics or statistics code.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "isingforage/genome.hpp"

namespace oracle {

using isingforage::Genome;

/// Energy from the explicit edge list: -sum_{i<j, A_ij} J_ij s_i s_j.
inline double edge_energy(const Genome& g, std::span<const double> s) {
  double e = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = i + 1; j < g.size(); ++j) {
      if (g.has_edge(i, j)) e -= g.weight(i, j) * s[i] * s[j];
    }
  }
  return e;
}

/// Spin vector for enumeration index `code`: bit k set means free spin k is +1.
inline std::vector<double> configuration(const Genome& g, std::span<const double> sensors, std::uint64_t code) {
  const std::size_t n_s = g.architecture().n_sensors;
  std::vector<double> s(g.size());
  std::copy(sensors.begin(), sensors.end(), s.begin());
  for (std::size_t k = 0; k + n_s < g.size(); ++k) s[n_s + k] = ((code >> k) & 1U) ? 1.0 : -1.0;
  return s;
}

inline std::uint64_t encode(const Genome& g, std::span<const double> s) {
  const std::size_t n_s = g.architecture().n_sensors;
  std::uint64_t code = 0;
  for (std::size_t k = 0; k + n_s < g.size(); ++k) {
    if (s[n_s + k] > 0) code |= std::uint64_t{1} << k;
  }
  return code;
}

struct Ensemble {
  std::vector<double> energy;
  std::vector<double> probability;
  double mean = 0.0;
  double variance = 0.0;
};

/// Exact Boltzmann ensemble exp(-beta_eff E)/Z over all free-spin states.
inline Ensemble boltzmann(const Genome& g, std::span<const double> sensors, double beta_eff) {
  const std::size_t n_free = g.size() - g.architecture().n_sensors;
  const std::uint64_t states = std::uint64_t{1} << n_free;
  Ensemble ens;
  ens.energy.resize(states);
  double e_min = std::numeric_limits<double>::infinity();
  for (std::uint64_t c = 0; c < states; ++c) {
    ens.energy[c] = edge_energy(g, configuration(g, sensors, c));
    e_min = std::min(e_min, ens.energy[c]);
  }
  ens.probability.resize(states);
  double z = 0.0;
  for (std::uint64_t c = 0; c < states; ++c) {
    ens.probability[c] = std::exp(-beta_eff * (ens.energy[c] - e_min));
    z += ens.probability[c];
  }
  for (double& p : ens.probability) p /= z;
  for (std::uint64_t c = 0; c < states; ++c) ens.mean += ens.probability[c] * ens.energy[c];
  for (std::uint64_t c = 0; c < states; ++c) {
    const double d = ens.energy[c] - ens.mean;
    ens.variance += ens.probability[c] * d * d;
  }
  return ens;
}

inline double min_energy(const Genome& g, std::span<const double> sensors) {
  const Ensemble e = boltzmann(g, sensors, 1.0);
  return *std::min_element(e.energy.begin(), e.energy.end());
}

/// Exact C_H(c) = c^2 beta^2 Var(E) at every grid point.
inline std::vector<double> heat_capacity(const Genome& g, std::span<const double> sensors,
                                         std::span<const double> grid) {
  std::vector<double> out;
  for (double c : grid) {
    const double b = c * g.beta();
    out.push_back(b * b * boltzmann(g, sensors, b).variance);
  }
  return out;
}

/// Shortest distance on a periodic square by checking all nine images.
inline double periodic_distance(double ax, double ay, double bx, double by, double side) {
  double best = std::numeric_limits<double>::infinity();
  for (int dx = -1; dx <= 1; ++dx) {
    for (int dy = -1; dy <= 1; ++dy) {
      const double x = bx + dx * side - ax;
      const double y = by + dy * side - ay;
      best = std::min(best, std::sqrt(x * x + y * y));
    }
  }
  return best;
}

/// Two-sided rank-sum p-value by enumerating every way of labelling |a| of the
/// pooled values as sample a: 2 * min(P(W <= w), P(W >= w)), capped at 1.
inline double rank_sum_p_value(std::span<const double> a, std::span<const double> b) {
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size();
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n; ++i) {
    double less = 0.0, equal = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (pooled[j] < pooled[i]) ++less;
      if (pooled[j] == pooled[i]) ++equal;
    }
    ranks[i] = less + (equal + 1.0) / 2.0;
  }
  double observed = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) observed += ranks[i];

  double total = 0.0, lower = 0.0, upper = 0.0;
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(a.size()), true);
  std::sort(pick.begin(), pick.end());
  do {
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (pick[i]) w += ranks[i];
    }
    ++total;
    if (w <= observed + 1e-9) ++lower;
    if (w >= observed - 1e-9) ++upper;
  } while (std::next_permutation(pick.begin(), pick.end()));
  return std::min(1.0, 2.0 * std::min(lower, upper) / total);
}

/// Spearman rank correlation (average ranks for ties).
inline double spearman(std::span<const double> x, std::span<const double> y) {
  const auto rank = [](std::span<const double> v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double less = 0.0, equal = 0.0;
      for (double w : v) {
        if (w < v[i]) ++less;
        if (w == v[i]) ++equal;
      }
      r[i] = less + (equal + 1.0) / 2.0;
    }
    return r;
  };
  const std::vector<double> rx = rank(x), ry = rank(y);
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace oracle
