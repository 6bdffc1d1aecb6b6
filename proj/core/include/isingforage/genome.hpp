#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace isingforage {

class Rng;

inline constexpr double kMaxWeight = 2.0;

enum class NeuronRole : std::uint8_t { kSensor, kHidden, kMotor };

/// Neuron layout: sensors occupy [0, n_sensors), hidden units follow, motors
/// come last.
struct Architecture {
  std::size_t n_sensors = 4;
  std::size_t n_hidden = 4;
  std::size_t n_motors = 4;

  std::size_t size() const noexcept { return n_sensors + n_hidden + n_motors; }
  std::size_t n_free() const noexcept { return n_hidden + n_motors; }
  std::size_t first_motor() const noexcept { return n_sensors + n_hidden; }
  NeuronRole role(std::size_t i) const noexcept;

  /// Topology mask: every pair except self-loops, sensor-sensor and
  /// sensor-motor.
  bool edge_allowed(std::size_t i, std::size_t j) const noexcept;

  bool operator==(const Architecture&) const = default;
};

struct Edge {
  std::size_t i;
  std::size_t j;
  double weight;
};

/// Evolvable genotype: symmetric couplings J over an adjacency mask A plus the
/// inverse temperature beta. Absent edges have zero effective coupling.
class Genome {
 public:
  Genome(Architecture arch, double beta);

  /// Each mask-allowed pair present with probability `density`, weights
  /// U(-2, 2).
  static Genome random(Architecture arch, double beta, double density, Rng& rng);

  const Architecture& architecture() const noexcept { return arch_; }
  std::size_t size() const noexcept { return n_; }

  double beta() const noexcept { return beta_; }
  void set_beta(double beta);

  bool has_edge(std::size_t i, std::size_t j) const { return adjacency_[i * n_ + j] != 0; }
  /// Stored weight of a present edge (0 when absent).
  double weight(std::size_t i, std::size_t j) const { return coupling_[i * n_ + j]; }
  /// Dense row-major A∘J, suitable for local-field evaluation.
  const std::vector<double>& couplings() const noexcept { return coupling_; }
  const double* coupling_row(std::size_t i) const noexcept { return coupling_.data() + i * n_; }

  /// Adds or overwrites an edge. Throws if the pair is not mask-allowed or the
  /// weight is outside [-2, 2].
  void set_edge(std::size_t i, std::size_t j, double weight);
  void remove_edge(std::size_t i, std::size_t j);

  /// Present edges with i < j, in row-major order.
  std::vector<Edge> edges() const;
  std::size_t edge_count() const noexcept { return n_edges_; }
  /// Mask-allowed pairs (i < j) that currently carry no edge.
  std::vector<std::pair<std::size_t, std::size_t>> absent_allowed_pairs() const;

  /// Throws std::logic_error when any invariant is broken.
  void validate() const;

  bool operator==(const Genome&) const = default;

 private:
  Architecture arch_;
  std::size_t n_;
  double beta_;
  std::size_t n_edges_ = 0;
  std::vector<std::uint8_t> adjacency_;
  std::vector<double> coupling_;
};

// JSON genome format:
//   {"n_sensors":4,"n_hidden":4,"n_motors":4,"beta":1.0,
//    "edges":[{"i":0,"j":4,"w":0.5}, ...]}
nlohmann::json genome_to_json(const Genome& genome);
/// Rejects edges violating the mask or weight bounds and non-positive beta.
Genome genome_from_json(const nlohmann::json& doc);

std::string genome_to_string(const Genome& genome);
Genome genome_from_string(std::string_view text);

}  // namespace isingforage
