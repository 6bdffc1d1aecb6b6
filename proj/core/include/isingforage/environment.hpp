#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "isingforage/genome.hpp"
#include "isingforage/ising.hpp"
#include "isingforage/rng.hpp"

namespace isingforage {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2&) const = default;
};

Vec2 wrap_position(Vec2 p, double side) noexcept;

/// Physical constants of the foraging arena. Times are in steps, lengths in
/// arena units, energies in food units.
struct WorldConfig {
  double arena_side = 64.0;
  std::size_t n_food = 50;
  std::size_t n_organisms = 50;
  double dt = 1.0;
  double food_energy = 1.0;
  double move_cost = 0.0001;
  double max_speed = 0.5;
  double lin_accel_gain = 0.05;
  double rot_accel_gain = 0.2;
  double eat_radius = 0.1;
  bool hard_task = false;
  double v_threshold = 0.02;
  std::size_t lifetime = 2000;
  double initial_energy = 2.0;
  int network_iterations = kDefaultNetworkIterations;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

enum class OperatorTag : std::uint8_t { kInitial, kCopy, kMutate, kMate };

std::string_view to_string(OperatorTag tag) noexcept;
OperatorTag operator_tag_from_string(std::string_view name);

inline constexpr std::size_t kSensorCount = 4;
inline constexpr std::size_t kMotorCount = 4;
using SensorVector = std::array<double, kSensorCount>;

struct Organism {
  Organism(Genome g, OperatorTag t = OperatorTag::kInitial);

  Genome genome;
  SpinState state;
  Vec2 position;
  double heading = 0.0;
  double speed = 0.0;
  double energy = 0.0;
  OperatorTag tag = OperatorTag::kInitial;

  // Lifetime bookkeeping.
  double energy_sum = 0.0;
  std::size_t steps = 0;
  std::size_t eaten = 0;
  double energy_spent = 0.0;
  SensorVector last_sensors{};

  /// Mean energy over the steps lived so far (initial energy before any step).
  double fitness() const noexcept;
};

struct TraceRecord {
  std::size_t t;
  std::size_t organism;
  Vec2 position;
  double speed;
  double energy;
  std::size_t eaten;
};

struct LifetimeOptions {
  /// 0 uses WorldConfig::lifetime.
  std::size_t steps = 0;
  /// Called once per organism per step after feeding.
  std::function<void(const TraceRecord&)> trace;
  /// Called once per step after every organism has moved; t is 1-based.
  std::function<void(std::size_t t, std::span<const Organism>)> on_step;
};

/// Periodic square arena with a constant number of food particles.
class World {
 public:
  explicit World(WorldConfig config);

  const WorldConfig& config() const noexcept { return config_; }
  std::span<const Vec2> food() const noexcept { return food_; }
  void set_food(std::vector<Vec2> food);

  /// Fresh food, uniform organism positions and headings, zero speed, initial
  /// energy, cleared bookkeeping and uniformly random free spins.
  void reset(std::span<Organism> population, Rng& rng);

  /// Shifts food, organisms and the respawn frame by `shift` (mod arena).
  void translate(Vec2 shift, std::span<Organism> population);

  Vec2 wrap(Vec2 p) const noexcept;
  /// Shortest periodic displacement from `from` to `to`.
  Vec2 displacement(Vec2 from, Vec2 to) const noexcept;
  double distance(Vec2 a, Vec2 b) const noexcept;

  Vec2 random_position(Rng& rng) const;
  void respawn(std::size_t food_index, Rng& rng);

 private:
  WorldConfig config_;
  std::vector<Vec2> food_;
  Vec2 spawn_origin_;
};

/// [theta_enc, d_enc, v_enc, E_enc], each in [-1, 1]. Throws on an empty food
/// set.
SensorVector sense(const World& world, const Organism& organism);

struct MotorCommand {
  double a_lin;
  double a_rot;
};

/// Motor pair (m1, m2) drives linear, (m3, m4) rotational acceleration.
MotorCommand decode_motors(const SpinState& state, const WorldConfig& config);

void step_kinematics(Organism& organism, MotorCommand command, const WorldConfig& config);

/// Eats every particle within eat_radius (unless the hard task forbids it at
/// the current speed) and respawns it. Returns the number eaten.
std::size_t try_consume(World& world, Organism& organism, Rng& rng);

/// Runs one lifetime in a shared world and returns each organism's mean energy.
/// The world and population must have been reset beforehand.
std::vector<double> run_lifetime(std::span<Organism> population, World& world, Rng& rng,
                                 const LifetimeOptions& options = {});

std::vector<Organism> make_population(std::span<const Genome> genomes);

}  // namespace isingforage
