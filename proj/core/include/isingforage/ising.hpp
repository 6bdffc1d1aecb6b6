#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "isingforage/genome.hpp"
#include "isingforage/rng.hpp"

namespace isingforage {

/// Neuron states. The first n_clamped entries are sensors carrying continuous
/// values in [-1, 1]; every other entry is exactly +1 or -1.
class SpinState {
 public:
  SpinState(std::size_t size, std::size_t n_clamped);
  /// Sensors set to `sensors`, free spins drawn uniformly from {-1, +1}.
  static SpinState random(const Architecture& arch, std::span<const double> sensors, Rng& rng);

  std::size_t size() const noexcept { return values_.size(); }
  std::size_t n_clamped() const noexcept { return n_clamped_; }
  bool is_clamped(std::size_t i) const noexcept { return i < n_clamped_; }

  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> sensors() const noexcept { return {values_.data(), n_clamped_}; }

  /// Throws if the count differs from n_clamped or a value lies outside [-1, 1].
  void set_sensors(std::span<const double> sensors);
  /// Sets a free spin to +1 (sign > 0) or -1.
  void set_spin(std::size_t i, int sign);
  void flip(std::size_t i);

  bool operator==(const SpinState&) const = default;

 private:
  friend class GlauberDynamics;
  std::vector<double> values_;
  std::size_t n_clamped_;
};

/// E = -sum over present edges (each counted once) of J_ij s_i s_j.
double network_energy(const Genome& genome, const SpinState& state);

/// sum_j (A∘J)_ij s_j.
double local_field(const Genome& genome, const SpinState& state, std::size_t i);

/// Energy change caused by flipping free neuron i: E(..,-s_i,..) - E(..,s_i,..).
/// Positive when the flip is energetically unfavourable.
double delta_energy(const Genome& genome, const SpinState& state, std::size_t i);

/// Glauber acceptance 1 / (1 + exp(beta_effective * delta_e)), saturating to
/// [0, 1] for extreme arguments.
double flip_probability(double delta_e, double beta_effective) noexcept;

/// Sequential Glauber dynamics over the free neurons of one genome. Holds the
/// per-sweep visiting order so repeated sweeps do not allocate.
class GlauberDynamics {
 public:
  explicit GlauberDynamics(const Genome& genome);

  /// One sweep at inverse temperature c_beta * beta: every free neuron is
  /// visited once in a freshly shuffled order; flips take effect immediately.
  void sweep(SpinState& state, double c_beta, Rng& rng) {
    sweep(state, c_beta, rng, [](double, double, bool) {});
  }

  /// Sweep that reports each visit as (delta_e, p_flip, flipped) before moving
  /// on. delta_e is evaluated on the state at the time of the visit.
  template <typename OnVisit>
  void sweep(SpinState& state, double c_beta, Rng& rng, OnVisit&& on_visit) {
    const double beta_eff = c_beta * genome_->beta();
    reset_order(state);
    rng.shuffle(std::span<std::size_t>(order_));
    double* s = state.values_.data();
    for (std::size_t i : order_) {
      const double* row = genome_->coupling_row(i);
      double h = 0.0;
      for (std::size_t j = 0; j < n_; ++j) h += row[j] * s[j];
      const double de = 2.0 * s[i] * h;
      const double p = flip_probability(de, beta_eff);
      const bool flipped = rng.uniform() < p;
      on_visit(de, p, flipped);
      if (flipped) s[i] = -s[i];
    }
  }

  /// network_update: `iterations` sweeps at the genome's native beta.
  void run(SpinState& state, int iterations, Rng& rng);

 private:
  void reset_order(const SpinState& state);

  const Genome* genome_;
  std::size_t n_;
  std::vector<std::size_t> order_;
};

void glauber_sweep(const Genome& genome, SpinState& state, double c_beta, Rng& rng);

/// Applies `iterations` (>= 1) Glauber sweeps with c_beta = 1.
void network_update(const Genome& genome, SpinState& state, int iterations, Rng& rng);

inline constexpr int kDefaultNetworkIterations = 10;
inline constexpr std::size_t kMaxEnumeratedFreeSpins = 16;

enum class GroundStateMethod { kAuto, kEnumerate, kDescent };

/// Minimum-energy configuration of the free spins with sensors clamped to
/// `sensors`. kAuto enumerates all 2^free states when free <= 16 and otherwise
/// runs zero-temperature descent from `restarts` random starts.
SpinState min_energy_state(const Genome& genome, std::span<const double> sensors, Rng& rng,
                           int restarts = 10, GroundStateMethod method = GroundStateMethod::kAuto);

}  // namespace isingforage
