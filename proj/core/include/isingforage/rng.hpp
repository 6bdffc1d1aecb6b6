#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <utility>

namespace isingforage {

// Purpose keys for derived streams. Values are part of the on-disk
// reproducibility contract; append only.
enum class StreamPurpose : std::uint64_t {
  kReplicate = 1,
  kInitialPopulation = 2,
  kLifetime = 3,
  kReproduction = 4,
  kCriticality = 5,
  kPerturbation = 6,
  kGeneralization = 7,
  kSnapshot = 8,
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Keyed counter construction: folds each key into the master seed through
/// mix64, so (master, k1, k2, ...) maps to an independent 64-bit stream seed.
/// Adding keys for new replicates never disturbs existing ones.
std::uint64_t derive_seed(std::uint64_t master,
                          std::initializer_list<std::uint64_t> keys) noexcept;

inline std::uint64_t derive_seed(std::uint64_t master, StreamPurpose purpose,
                                 std::initializer_list<std::uint64_t> keys = {}) noexcept {
  std::uint64_t s = derive_seed(master, {static_cast<std::uint64_t>(purpose)});
  return keys.size() == 0 ? s : derive_seed(s, keys);
}

/// Random stream with platform-independent draws. Only the raw 64-bit engine
/// output is used; all distributions are implemented here because the
/// standard library distributions are implementation-defined.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n);

  bool coin() { return (engine_() >> 63) != 0; }

  /// Box-Muller; consumes exactly two uniforms per call.
  double normal(double mean, double sd);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

  /// Child stream keyed by `key`. Depends only on this stream's seed, not on
  /// how far it has advanced.
  Rng derive(std::uint64_t key) const { return Rng(derive_seed(seed_, {key})); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace isingforage
