#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "isingforage/criticality.hpp"
#include "isingforage/ising.hpp"
#include "oracles.hpp"

using namespace isingforage;

namespace {

const Architecture kArch{4, 4, 4};
const std::vector<double> kSensors{0.2, -0.4, 0.7, 1.0};

HeatCapacityCurve synthetic(std::vector<double> values) {
  HeatCapacityCurve c;
  c.grid = log_spaced_grid(1e-2, 1e2, values.size());
  c.values = std::move(values);
  return c;
}

double grid_step() { return 4.0 / 63.0; }

}  // namespace

TEST_SUITE("criticality") {
  TEST_CASE("grid") {
    const auto g = log_spaced_grid();
    REQUIRE(g.size() == 64);
    CHECK(g.front() == doctest::Approx(1e-2));
    CHECK(g.back() == doctest::Approx(1e2));
    CHECK(std::is_sorted(g.begin(), g.end()));
    CHECK(std::log10(g[1]) - std::log10(g[0]) == doctest::Approx(grid_step()));
  }

  TEST_CASE("edge-free genome has zero variance and a flat zero curve") {
    const Genome g(kArch, 1.0);
    Rng rng(1);
    SamplingParams p;
    p.n_therm = 100;
    p.n_sample = 500;
    CHECK(estimate_energy_variance(g, kSensors, 1.0, p, rng) == 0.0);
    for (CurveEstimator e : {CurveEstimator::kPointwise, CurveEstimator::kReplicaExchange}) {
      p.estimator = e;
      const auto curve = heat_capacity_curve(g, kSensors, log_spaced_grid(), p, rng);
      CHECK(std::all_of(curve.values.begin(), curve.values.end(), [](double v) { return v == 0.0; }));
      const RegimeEstimate r = find_c_crit(curve);
      CHECK_FALSE(r.valid);
      CHECK(std::isnan(r.delta));
    }
  }

  TEST_CASE("frustration-free genome freezes at low temperature") {
    Genome g(kArch, 1.0);
    for (std::size_t i = 4; i < 12; ++i)
      for (std::size_t j = i + 1; j < 12; ++j) g.set_edge(i, j, 1.5);
    Rng rng(2);
    SamplingParams p;
    p.n_therm = 200;
    p.n_sample = 2000;
    CHECK(estimate_energy_variance(g, kSensors, 1e4, p, rng) == 0.0);
  }

  TEST_CASE("energy variance matches exact enumeration") {
    Rng rng(3);
    SamplingParams p;
    p.estimator = CurveEstimator::kPointwise;
    for (int trial = 0; trial < 3; ++trial) {
      const Genome g = Genome::random(kArch, 1.0, 0.5, rng);
      for (double c : {0.3, 1.0}) {
        const double exact = oracle::boltzmann(g, kSensors, c * g.beta()).variance;
        const double mc = estimate_energy_variance(g, kSensors, c, p, rng);
        CHECK(mc == doctest::Approx(exact).epsilon(0.05));
      }
    }
  }

  TEST_CASE("heat capacity curve matches exact enumeration") {
    Rng rng(4);
    const SamplingParams p;
    const auto grid = log_spaced_grid();
    for (int trial = 0; trial < 3; ++trial) {
      const Genome g = Genome::random(kArch, 1.0, 0.5, rng);
      const auto exact = oracle::heat_capacity(g, kSensors, grid);
      const auto curve = heat_capacity_curve(g, kSensors, grid, p, rng);
      const double peak = *std::max_element(exact.begin(), exact.end());
      for (std::size_t k = 0; k < grid.size(); ++k) {
        REQUIRE(curve.values[k] >= 0.0);
        if (exact[k] > 0.01 * peak) CHECK(curve.values[k] == doctest::Approx(exact[k]).epsilon(0.05));
      }
    }
  }

  TEST_CASE("curve carries its metadata") {
    Rng rng(5);
    SamplingParams p;
    p.n_therm = 10;
    p.n_sample = 50;
    const Genome g = Genome::random(kArch, 1.0, 0.5, rng);
    const auto grid = log_spaced_grid(0.1, 10, 5);
    const auto c = heat_capacity_curve(g, kSensors, grid, p, rng);
    CHECK(c.grid == grid);
    CHECK(c.values.size() == 5);
    CHECK(c.sensors == kSensors);
    CHECK(c.params.n_sample == 50);
  }

  TEST_CASE("sampling parameter validation") {
    SamplingParams p;
    p.n_sample = 1;
    CHECK_THROWS(p.validate());
    p = SamplingParams{};
    p.stride = 0;
    CHECK_THROWS(p.validate());
    CHECK(curve_estimator_from_string(to_string(CurveEstimator::kPointwise)) == CurveEstimator::kPointwise);
    CHECK(curve_estimator_from_string(to_string(CurveEstimator::kReplicaExchange)) ==
          CurveEstimator::kReplicaExchange);
    CHECK_THROWS(curve_estimator_from_string("exact"));
  }

  TEST_CASE("interior quadratic peak") {
    const auto grid = log_spaced_grid();
    std::vector<double> v;
    for (double c : grid) v.push_back(std::max(0.0, 4.0 - std::pow(std::log10(c) - 0.5, 2)));
    const RegimeEstimate r = find_c_crit(synthetic(v));
    CHECK(r.valid);
    CHECK_FALSE(r.boundary_peak);
    CHECK(std::abs(r.delta - 0.5) < grid_step());
    CHECK(r.delta == std::log10(r.c_beta_crit));
  }

  TEST_CASE("refinement stays between the neighbours of the peak") {
    Rng rng(6);
    for (int k = 0; k < 200; ++k) {
      std::vector<double> v(64);
      for (double& x : v) x = rng.uniform();
      const auto curve = synthetic(v);
      const RegimeEstimate r = find_c_crit(curve);
      REQUIRE(r.valid);
      REQUIRE(r.delta == std::log10(r.c_beta_crit));
      REQUIRE(r.c_beta_crit >= curve.grid.front() * 0.999999);
      REQUIRE(r.c_beta_crit <= curve.grid.back() * 1.000001);
    }
  }

  TEST_CASE("monotone curves peak at a flagged boundary") {
    std::vector<double> up(64), down(64);
    for (std::size_t k = 0; k < 64; ++k) {
      up[k] = static_cast<double>(k + 1);
      down[k] = static_cast<double>(64 - k);
    }
    const RegimeEstimate a = find_c_crit(synthetic(up));
    CHECK(a.boundary_peak);
    CHECK(a.delta == doctest::Approx(2.0));
    const RegimeEstimate b = find_c_crit(synthetic(down));
    CHECK(b.boundary_peak);
    CHECK(b.delta == doctest::Approx(-2.0));
  }

  TEST_CASE("unevolved genomes follow minus log beta") {
    Rng rng(7);
    SamplingParams p;
    p.n_therm = 500;
    p.n_sample = 3000;
    const auto grid = log_spaced_grid();
    std::vector<double> x, y;
    for (double beta : {0.1, 1.0, 10.0}) {
      double sum = 0.0;
      const int n = 6;
      for (int k = 0; k < n; ++k) {
        const Genome g = Genome::random(kArch, beta, 0.5, rng);
        const RegimeEstimate r = find_c_crit(heat_capacity_curve(g, kSensors, grid, p, rng));
        REQUIRE(r.valid);
        sum += r.delta;
        x.push_back(-std::log10(beta));
        y.push_back(r.delta);
      }
      CHECK(std::abs(sum / n + std::log10(beta)) < 0.3);
    }
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      mx += x[k];
      my += y[k];
    }
    mx /= x.size();
    my /= y.size();
    double sxy = 0, sxx = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      sxy += (x[k] - mx) * (y[k] - my);
      sxx += (x[k] - mx) * (x[k] - mx);
    }
    CHECK(sxy / sxx == doctest::Approx(1.0).epsilon(0.1));
  }

  TEST_CASE("rescaling beta shifts the peak") {
    Rng rng(8);
    SamplingParams p;
    p.n_therm = 500;
    p.n_sample = 4000;
    const auto grid = log_spaced_grid();
    for (int trial = 0; trial < 3; ++trial) {
      Genome one = Genome::random(kArch, 1.0, 0.5, rng);
      Genome two = one;
      two.set_beta(2.0);
      const RegimeEstimate a = find_c_crit(heat_capacity_curve(one, kSensors, grid, p, rng));
      const RegimeEstimate b = find_c_crit(heat_capacity_curve(two, kSensors, grid, p, rng));
      CHECK(std::abs(std::log10(a.c_beta_crit * 1.0) - std::log10(b.c_beta_crit * 2.0)) <= grid_step());
    }
  }

  TEST_CASE("population regime") {
    Rng rng(9);
    SamplingParams p;
    p.n_therm = 200;
    p.n_sample = 1000;
    const auto grid = log_spaced_grid(0.1, 10.0, 16);
    const Genome g = Genome::random(kArch, 1.0, 0.5, rng);
    const std::vector<Genome> same(4, g);
    const std::vector<std::vector<double>> snaps(4, kSensors);
    const PopulationRegime r = population_delta(same, snaps, grid, p, 42, 2);
    REQUIRE(r.n_valid == 4);
    for (double d : r.deltas) CHECK(d == r.deltas[0]);
    CHECK(r.mean == r.deltas[0]);
    CHECK(r.median == r.deltas[0]);
    CHECK(r.sd == 0.0);

    std::vector<Genome> mixed;
    std::vector<std::vector<double>> mixed_snaps;
    for (int k = 0; k < 6; ++k) {
      mixed.push_back(Genome::random(kArch, 1.0, 0.5, rng));
      mixed_snaps.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    }
    const PopulationRegime forward = population_delta(mixed, mixed_snaps, grid, p, 43, 1);
    std::reverse(mixed.begin(), mixed.end());
    std::reverse(mixed_snaps.begin(), mixed_snaps.end());
    const PopulationRegime backward = population_delta(mixed, mixed_snaps, grid, p, 43, 3);
    CHECK(forward.mean == backward.mean);
    CHECK(forward.median == backward.median);
    for (std::size_t k = 0; k < 6; ++k) CHECK(forward.deltas[k] == backward.deltas[5 - k]);

    CHECK_THROWS(population_delta(same, std::span(snaps).first(3), grid, p, 1));
    std::vector<std::vector<double>> short_snap = snaps;
    short_snap[2].pop_back();
    CHECK_THROWS(population_delta(same, short_snap, grid, p, 1));
  }

  TEST_CASE("content key") {
    Rng rng(10);
    const Genome g = Genome::random(kArch, 1.0, 0.5, rng);
    Genome h = g;
    h.set_beta(1.0 + 1e-12);
    std::vector<double> s = kSensors;
    CHECK(content_key(g, s) == content_key(g, kSensors));
    CHECK(content_key(g, s) != content_key(h, s));
    s[0] = std::nextafter(s[0], 1.0);
    CHECK(content_key(g, s) != content_key(g, kSensors));
  }
}
