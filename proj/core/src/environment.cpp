#include "isingforage/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace isingforage {

namespace {

double wrap_coordinate(double v, double side) noexcept {
  v = std::fmod(v, side);
  if (v < 0.0) v += side;
  // fmod of a tiny negative number can round up to exactly `side`.
  if (v >= side) v = 0.0;
  return v;
}

// Same result as std::remainder(d, side); the subtraction is exact for
// |d| in (side/2, 3 side/2), which covers differences of wrapped coordinates.
double min_image(double d, double side) noexcept {
  const double half = 0.5 * side;
  if (d > half) {
    if (d < 1.5 * side) return d - side;
  } else if (d < -half) {
    if (d > -1.5 * side) return d + side;
  } else {
    return d;
  }
  return std::remainder(d, side);
}

double wrap_angle(double a) noexcept {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a;
}

void require_positive(double v, const char* field) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw std::invalid_argument(std::string("world.") + field + " must be positive");
  }
}

}  // namespace

Vec2 wrap_position(Vec2 p, double side) noexcept {
  return {wrap_coordinate(p.x, side), wrap_coordinate(p.y, side)};
}

void WorldConfig::validate() const {
  require_positive(arena_side, "arena_side");
  require_positive(dt, "dt");
  require_positive(food_energy, "food_energy");
  if (!(move_cost >= 0.0)) throw std::invalid_argument("world.move_cost must be non-negative");
  require_positive(max_speed, "max_speed");
  require_positive(lin_accel_gain, "lin_accel_gain");
  require_positive(rot_accel_gain, "rot_accel_gain");
  require_positive(eat_radius, "eat_radius");
  require_positive(v_threshold, "v_threshold");
  if (!(v_threshold < max_speed)) {
    throw std::invalid_argument("world.v_threshold must be below world.max_speed");
  }
  if (n_food == 0) throw std::invalid_argument("world.n_food must be positive");
  if (n_organisms == 0) throw std::invalid_argument("world.n_organisms must be positive");
  if (lifetime == 0) throw std::invalid_argument("world.lifetime must be positive");
  if (!std::isfinite(initial_energy)) throw std::invalid_argument("world.initial_energy must be finite");
  if (network_iterations < 1) throw std::invalid_argument("world.network_iterations must be >= 1");
}

std::string_view to_string(OperatorTag tag) noexcept {
  switch (tag) {
    case OperatorTag::kInitial: return "init";
    case OperatorTag::kCopy: return "copy";
    case OperatorTag::kMutate: return "mutate";
    case OperatorTag::kMate: return "mate";
  }
  return "init";
}

OperatorTag operator_tag_from_string(std::string_view name) {
  if (name == "init") return OperatorTag::kInitial;
  if (name == "copy") return OperatorTag::kCopy;
  if (name == "mutate") return OperatorTag::kMutate;
  if (name == "mate") return OperatorTag::kMate;
  throw std::invalid_argument("unknown operator tag: " + std::string(name));
}

Organism::Organism(Genome g, OperatorTag t)
    : genome(std::move(g)), state(genome.size(), genome.architecture().n_sensors), tag(t) {
  const Architecture& a = genome.architecture();
  if (a.n_sensors != kSensorCount || a.n_motors != kMotorCount) {
    throw std::invalid_argument("Organism: foraging agents need 4 sensors and 4 motors");
  }
}

double Organism::fitness() const noexcept {
  return steps == 0 ? energy : energy_sum / static_cast<double>(steps);
}

World::World(WorldConfig config) : config_(config) { config_.validate(); }

void World::set_food(std::vector<Vec2> food) {
  for (Vec2& p : food) p = wrap(p);
  food_ = std::move(food);
}

Vec2 World::wrap(Vec2 p) const noexcept { return wrap_position(p, config_.arena_side); }

Vec2 World::displacement(Vec2 from, Vec2 to) const noexcept {
  const double side = config_.arena_side;
  return {min_image(to.x - from.x, side), min_image(to.y - from.y, side)};
}

double World::distance(Vec2 a, Vec2 b) const noexcept {
  const Vec2 d = displacement(a, b);
  return std::hypot(d.x, d.y);
}

Vec2 World::random_position(Rng& rng) const {
  const double x = rng.uniform(0.0, config_.arena_side);
  const double y = rng.uniform(0.0, config_.arena_side);
  return wrap({spawn_origin_.x + x, spawn_origin_.y + y});
}

void World::respawn(std::size_t food_index, Rng& rng) { food_.at(food_index) = random_position(rng); }

void World::reset(std::span<Organism> population, Rng& rng) {
  food_.resize(config_.n_food);
  for (Vec2& p : food_) p = random_position(rng);
  for (Organism& o : population) {
    o.position = random_position(rng);
    o.heading = rng.uniform(-std::numbers::pi, std::numbers::pi);
    o.speed = 0.0;
    o.energy = config_.initial_energy;
    o.energy_sum = 0.0;
    o.steps = 0;
    o.eaten = 0;
    o.energy_spent = 0.0;
    o.last_sensors = {};
    o.state = SpinState::random(o.genome.architecture(), o.last_sensors, rng);
  }
}

void World::translate(Vec2 shift, std::span<Organism> population) {
  for (Vec2& p : food_) p = wrap({p.x + shift.x, p.y + shift.y});
  for (Organism& o : population) o.position = wrap({o.position.x + shift.x, o.position.y + shift.y});
  spawn_origin_ = wrap({spawn_origin_.x + shift.x, spawn_origin_.y + shift.y});
}

SensorVector sense(const World& world, const Organism& organism) {
  const auto food = world.food();
  if (food.empty()) throw std::invalid_argument("sense: world has no food");
  const WorldConfig& cfg = world.config();

  Vec2 nearest{};
  double best = INFINITY;
  for (const Vec2& f : food) {
    const Vec2 d = world.displacement(organism.position, f);
    const double dist2 = d.x * d.x + d.y * d.y;
    if (dist2 < best) {
      best = dist2;
      nearest = d;
    }
  }
  const double dist = std::sqrt(best);
  const double bearing = dist > 0.0 ? std::atan2(nearest.y, nearest.x) : organism.heading;
  const double rel = wrap_angle(bearing - organism.heading);
  const double d_scale = cfg.arena_side / 4.0;

  SensorVector out;
  out[0] = std::clamp(rel / std::numbers::pi, -1.0, 1.0);
  out[1] = std::clamp(2.0 * std::exp(-dist / d_scale) - 1.0, -1.0, 1.0);
  out[2] = std::clamp(organism.speed / cfg.max_speed, -1.0, 1.0);
  out[3] = std::tanh(organism.energy / 4.0);
  return out;
}

MotorCommand decode_motors(const SpinState& state, const WorldConfig& config) {
  if (state.size() < kMotorCount + state.n_clamped()) {
    throw std::invalid_argument("decode_motors: state has no motor neurons");
  }
  const std::size_t m = state.size() - kMotorCount;
  return {config.lin_accel_gain * (state[m] + state[m + 1]) / 2.0,
          config.rot_accel_gain * (state[m + 2] + state[m + 3]) / 2.0};
}

void step_kinematics(Organism& o, MotorCommand command, const WorldConfig& config) {
  o.heading = wrap_angle(o.heading + command.a_rot * config.dt);
  o.speed = std::clamp(o.speed + command.a_lin * config.dt, -config.max_speed, config.max_speed);
  const double step = o.speed * config.dt;
  if (step != 0.0) {
    o.position = wrap_position(
        {o.position.x + step * std::cos(o.heading), o.position.y + step * std::sin(o.heading)},
        config.arena_side);
  }
  const double cost = config.move_cost * std::abs(o.speed) * config.dt;
  o.energy -= cost;
  o.energy_spent += cost;
}

std::size_t try_consume(World& world, Organism& o, Rng& rng) {
  const WorldConfig& cfg = world.config();
  if (cfg.hard_task && std::abs(o.speed) > cfg.v_threshold) return 0;
  const double r2 = cfg.eat_radius * cfg.eat_radius;
  std::size_t eaten = 0;
  const std::size_t n = world.food().size();
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2 d = world.displacement(o.position, world.food()[k]);
    if (d.x * d.x + d.y * d.y <= r2) {
      ++eaten;
      world.respawn(k, rng);
    }
  }
  o.energy += cfg.food_energy * static_cast<double>(eaten);
  o.eaten += eaten;
  return eaten;
}

std::vector<double> run_lifetime(std::span<Organism> population, World& world, Rng& rng,
                                 const LifetimeOptions& options) {
  if (population.empty()) throw std::invalid_argument("run_lifetime: empty population");
  const WorldConfig& cfg = world.config();
  const std::size_t steps = options.steps == 0 ? cfg.lifetime : options.steps;

  std::vector<GlauberDynamics> networks;
  networks.reserve(population.size());
  for (const Organism& o : population) networks.emplace_back(o.genome);

  for (std::size_t t = 1; t <= steps; ++t) {
    for (std::size_t k = 0; k < population.size(); ++k) {
      Organism& o = population[k];
      o.last_sensors = sense(world, o);
      o.state.set_sensors(o.last_sensors);
      networks[k].run(o.state, cfg.network_iterations, rng);
      step_kinematics(o, decode_motors(o.state, cfg), cfg);
      const std::size_t eaten = try_consume(world, o, rng);
      o.energy_sum += o.energy;
      ++o.steps;
      if (options.trace) options.trace({t, k, o.position, o.speed, o.energy, eaten});
    }
    if (options.on_step) options.on_step(t, population);
  }

  std::vector<double> fitness(population.size());
  std::transform(population.begin(), population.end(), fitness.begin(),
                 [](const Organism& o) { return o.fitness(); });
  return fitness;
}

std::vector<Organism> make_population(std::span<const Genome> genomes) {
  std::vector<Organism> out;
  out.reserve(genomes.size());
  for (const Genome& g : genomes) out.emplace_back(g);
  return out;
}

}  // namespace isingforage
