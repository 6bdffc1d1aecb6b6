#include "isingforage/genome.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "isingforage/rng.hpp"

namespace isingforage {

NeuronRole Architecture::role(std::size_t i) const noexcept {
  if (i < n_sensors) return NeuronRole::kSensor;
  if (i < n_sensors + n_hidden) return NeuronRole::kHidden;
  return NeuronRole::kMotor;
}

bool Architecture::edge_allowed(std::size_t i, std::size_t j) const noexcept {
  if (i == j || i >= size() || j >= size()) return false;
  const NeuronRole a = role(i);
  const NeuronRole b = role(j);
  if (a == NeuronRole::kSensor && b == NeuronRole::kSensor) return false;
  if ((a == NeuronRole::kSensor && b == NeuronRole::kMotor) ||
      (a == NeuronRole::kMotor && b == NeuronRole::kSensor)) {
    return false;
  }
  return true;
}

Genome::Genome(Architecture arch, double beta)
    : arch_(arch), n_(arch.size()), beta_(beta), adjacency_(n_ * n_, 0), coupling_(n_ * n_, 0.0) {
  if (n_ == 0) throw std::invalid_argument("Genome: empty architecture");
  set_beta(beta);
}

Genome Genome::random(Architecture arch, double beta, double density, Rng& rng) {
  Genome g(arch, beta);
  for (std::size_t i = 0; i < g.n_; ++i) {
    for (std::size_t j = i + 1; j < g.n_; ++j) {
      if (!arch.edge_allowed(i, j)) continue;
      // Both draws are always consumed so the stream layout is independent of
      // the density.
      const bool present = rng.uniform() < density;
      const double w = rng.uniform(-kMaxWeight, kMaxWeight);
      if (present) g.set_edge(i, j, w);
    }
  }
  return g;
}

void Genome::set_beta(double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("Genome: beta must be positive and finite");
  }
  beta_ = beta;
}

void Genome::set_edge(std::size_t i, std::size_t j, double weight) {
  if (!arch_.edge_allowed(i, j)) {
    throw std::invalid_argument("Genome: edge (" + std::to_string(i) + "," + std::to_string(j) +
                                ") is not allowed by the topology mask");
  }
  if (!(std::abs(weight) <= kMaxWeight)) {
    throw std::invalid_argument("Genome: weight outside [-2, 2]");
  }
  if (!has_edge(i, j)) ++n_edges_;
  adjacency_[i * n_ + j] = adjacency_[j * n_ + i] = 1;
  coupling_[i * n_ + j] = coupling_[j * n_ + i] = weight;
}

void Genome::remove_edge(std::size_t i, std::size_t j) {
  if (i >= n_ || j >= n_ || !has_edge(i, j)) return;
  --n_edges_;
  adjacency_[i * n_ + j] = adjacency_[j * n_ + i] = 0;
  coupling_[i * n_ + j] = coupling_[j * n_ + i] = 0.0;
}

std::vector<Edge> Genome::edges() const {
  std::vector<Edge> out;
  out.reserve(n_edges_);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = i + 1; j < n_; ++j) {
      if (has_edge(i, j)) out.push_back({i, j, coupling_[i * n_ + j]});
    }
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> Genome::absent_allowed_pairs() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = i + 1; j < n_; ++j) {
      if (arch_.edge_allowed(i, j) && !has_edge(i, j)) out.emplace_back(i, j);
    }
  }
  return out;
}

void Genome::validate() const {
  if (!(beta_ > 0.0) || !std::isfinite(beta_)) throw std::logic_error("Genome: beta <= 0");
  std::size_t count = 0;
  for (std::size_t i = 0; i < n_; ++i) {
    if (adjacency_[i * n_ + i] != 0) throw std::logic_error("Genome: self-loop");
    for (std::size_t j = 0; j < n_; ++j) {
      const std::size_t ij = i * n_ + j;
      const std::size_t ji = j * n_ + i;
      if (adjacency_[ij] != adjacency_[ji] || coupling_[ij] != coupling_[ji]) {
        throw std::logic_error("Genome: asymmetric couplings");
      }
      if (adjacency_[ij] == 0 && coupling_[ij] != 0.0) {
        throw std::logic_error("Genome: coupling on an absent edge");
      }
      if (adjacency_[ij] != 0 && !arch_.edge_allowed(i, j)) {
        throw std::logic_error("Genome: edge violates the topology mask");
      }
      if (!(std::abs(coupling_[ij]) <= kMaxWeight)) {
        throw std::logic_error("Genome: weight outside [-2, 2]");
      }
      if (j > i && adjacency_[ij] != 0) ++count;
    }
  }
  if (count != n_edges_) throw std::logic_error("Genome: edge count out of sync");
}

nlohmann::json genome_to_json(const Genome& genome) {
  nlohmann::json edges = nlohmann::json::array();
  for (const Edge& e : genome.edges()) {
    edges.push_back({{"i", e.i}, {"j", e.j}, {"w", e.weight}});
  }
  const Architecture& a = genome.architecture();
  return {{"n_sensors", a.n_sensors},
          {"n_hidden", a.n_hidden},
          {"n_motors", a.n_motors},
          {"beta", genome.beta()},
          {"edges", std::move(edges)}};
}

Genome genome_from_json(const nlohmann::json& doc) {
  try {
    Architecture arch{doc.at("n_sensors").get<std::size_t>(), doc.at("n_hidden").get<std::size_t>(),
                      doc.at("n_motors").get<std::size_t>()};
    Genome g(arch, doc.at("beta").get<double>());
    for (const auto& e : doc.at("edges")) {
      const auto i = e.at("i").get<std::size_t>();
      const auto j = e.at("j").get<std::size_t>();
      if (i < g.size() && j < g.size() && g.has_edge(i, j)) {
        throw std::invalid_argument("Genome: duplicate edge");
      }
      g.set_edge(i, j, e.at("w").get<double>());
    }
    return g;
  } catch (const nlohmann::json::exception& ex) {
    throw std::invalid_argument(std::string("Genome: malformed JSON: ") + ex.what());
  }
}

std::string genome_to_string(const Genome& genome) { return genome_to_json(genome).dump(); }

Genome genome_from_string(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& ex) {
    throw std::invalid_argument(std::string("Genome: malformed JSON: ") + ex.what());
  }
  return genome_from_json(doc);
}

}  // namespace isingforage
