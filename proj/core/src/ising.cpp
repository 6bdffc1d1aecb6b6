#include "isingforage/ising.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace isingforage {

SpinState::SpinState(std::size_t size, std::size_t n_clamped)
    : values_(size, 1.0), n_clamped_(n_clamped) {
  if (n_clamped > size) throw std::invalid_argument("SpinState: more clamped entries than neurons");
  std::fill_n(values_.begin(), n_clamped, 0.0);
}

SpinState SpinState::random(const Architecture& arch, std::span<const double> sensors, Rng& rng) {
  SpinState s(arch.size(), arch.n_sensors);
  s.set_sensors(sensors);
  for (std::size_t i = arch.n_sensors; i < arch.size(); ++i) s.values_[i] = rng.coin() ? 1.0 : -1.0;
  return s;
}

void SpinState::set_sensors(std::span<const double> sensors) {
  if (sensors.size() != n_clamped_) {
    throw std::invalid_argument("SpinState: expected " + std::to_string(n_clamped_) +
                                " sensor values, got " + std::to_string(sensors.size()));
  }
  for (std::size_t i = 0; i < n_clamped_; ++i) {
    if (!(sensors[i] >= -1.0 && sensors[i] <= 1.0)) {
      throw std::invalid_argument("SpinState: sensor value outside [-1, 1]");
    }
    values_[i] = sensors[i];
  }
}

void SpinState::set_spin(std::size_t i, int sign) {
  if (i >= values_.size() || is_clamped(i)) throw std::out_of_range("SpinState: not a free neuron");
  values_[i] = sign > 0 ? 1.0 : -1.0;
}

void SpinState::flip(std::size_t i) {
  if (i >= values_.size() || is_clamped(i)) throw std::out_of_range("SpinState: not a free neuron");
  values_[i] = -values_[i];
}

namespace {

void check_dimensions(const Genome& genome, const SpinState& state) {
  if (genome.size() != state.size()) {
    throw std::invalid_argument("state has " + std::to_string(state.size()) +
                                " neurons but genome has " + std::to_string(genome.size()));
  }
  if (genome.architecture().n_sensors != state.n_clamped()) {
    throw std::invalid_argument("state clamps a different number of sensors than the genome has");
  }
}

}  // namespace

double network_energy(const Genome& genome, const SpinState& state) {
  check_dimensions(genome, state);
  const std::size_t n = genome.size();
  double e = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = genome.coupling_row(i);
    double partial = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) partial += row[j] * state[j];
    e -= state[i] * partial;
  }
  return e;
}

double local_field(const Genome& genome, const SpinState& state, std::size_t i) {
  const double* row = genome.coupling_row(i);
  double h = 0.0;
  for (std::size_t j = 0; j < genome.size(); ++j) h += row[j] * state[j];
  return h;
}

double delta_energy(const Genome& genome, const SpinState& state, std::size_t i) {
  check_dimensions(genome, state);
  if (i >= state.size()) throw std::out_of_range("delta_energy: neuron index out of range");
  if (state.is_clamped(i)) throw std::invalid_argument("delta_energy: neuron is clamped");
  return 2.0 * state[i] * local_field(genome, state, i);
}

double flip_probability(double delta_e, double beta_effective) noexcept {
  const double x = beta_effective * delta_e;
  if (x > 745.0) return 0.0;
  if (x < -745.0) return 1.0;
  return std::clamp(1.0 / (1.0 + std::exp(x)), 0.0, 1.0);
}

GlauberDynamics::GlauberDynamics(const Genome& genome)
    : genome_(&genome), n_(genome.size()) {
  order_.reserve(genome.architecture().n_free());
}

void GlauberDynamics::reset_order(const SpinState& state) {
  check_dimensions(*genome_, state);
  order_.resize(n_ - state.n_clamped());
  std::iota(order_.begin(), order_.end(), state.n_clamped());
}

void GlauberDynamics::run(SpinState& state, int iterations, Rng& rng) {
  if (iterations < 1) throw std::invalid_argument("network_update: iterations must be >= 1");
  for (int k = 0; k < iterations; ++k) sweep(state, 1.0, rng);
}

void glauber_sweep(const Genome& genome, SpinState& state, double c_beta, Rng& rng) {
  if (!(c_beta > 0.0)) throw std::invalid_argument("glauber_sweep: c_beta must be positive");
  GlauberDynamics(genome).sweep(state, c_beta, rng);
}

void network_update(const Genome& genome, SpinState& state, int iterations, Rng& rng) {
  GlauberDynamics(genome).run(state, iterations, rng);
}

namespace {

SpinState enumerate_ground_state(const Genome& genome, SpinState state) {
  const std::size_t first = state.n_clamped();
  const std::size_t n_free = state.size() - first;
  for (std::size_t k = first; k < state.size(); ++k) state.set_spin(k, -1);
  SpinState best = state;
  double best_e = network_energy(genome, state);
  double e = best_e;
  // Gray-code walk: step m flips the free spin at the lowest set bit of m.
  const std::uint64_t count = std::uint64_t{1} << n_free;
  for (std::uint64_t m = 1; m < count; ++m) {
    const std::size_t k = first + static_cast<std::size_t>(__builtin_ctzll(m));
    e += 2.0 * state[k] * local_field(genome, state, k);
    state.flip(k);
    if (e < best_e - 1e-12) {
      best_e = e;
      best = state;
    }
  }
  return best;
}

SpinState descend(const Genome& genome, SpinState state, Rng& rng) {
  std::vector<std::size_t> order(state.size() - state.n_clamped());
  bool changed = true;
  while (changed) {
    changed = false;
    std::iota(order.begin(), order.end(), state.n_clamped());
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t k : order) {
      if (2.0 * state[k] * local_field(genome, state, k) < 0.0) {
        state.flip(k);
        changed = true;
      }
    }
  }
  return state;
}

}  // namespace

SpinState min_energy_state(const Genome& genome, std::span<const double> sensors, Rng& rng,
                           int restarts, GroundStateMethod method) {
  const Architecture& arch = genome.architecture();
  SpinState start = SpinState::random(arch, sensors, rng);
  const bool enumerate = method == GroundStateMethod::kEnumerate ||
                         (method == GroundStateMethod::kAuto &&
                          arch.n_free() <= kMaxEnumeratedFreeSpins);
  if (enumerate) {
    if (arch.n_free() > 30) throw std::invalid_argument("min_energy_state: too many free spins to enumerate");
    return enumerate_ground_state(genome, std::move(start));
  }
  if (restarts < 1) throw std::invalid_argument("min_energy_state: restarts must be >= 1");
  SpinState best = descend(genome, std::move(start), rng);
  double best_e = network_energy(genome, best);
  for (int r = 1; r < restarts; ++r) {
    SpinState candidate = descend(genome, SpinState::random(arch, sensors, rng), rng);
    const double e = network_energy(genome, candidate);
    if (e < best_e) {
      best_e = e;
      best = std::move(candidate);
    }
  }
  return best;
}

}  // namespace isingforage
