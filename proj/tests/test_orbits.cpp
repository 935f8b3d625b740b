#include "doctest.h"

#include "reeb/orbits.hpp"

using namespace reeb;

namespace {
Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}
}  // namespace

TEST_CASE("harmonic oscillator orbit is degenerate with period 2 pi") {
  const FlowModel m = make_harmonic_oscillator();
  Vec g(2);
  g << 0.0, 0.7;
  OrbitSearchOptions opts;
  opts.pin_guess_invariants = true;
  const PeriodicOrbit o = find_periodic_orbit(m, g, 6.0, opts);
  CHECK(o.period == doctest::Approx(kTwoPi).epsilon(1e-10));
  CHECK(o.degenerate);
  CHECK(std::abs(o.multipliers[0] - 1.0) < 1e-8);
  CHECK(std::abs(o.multipliers[1] - 1.0) < 1e-8);
}

TEST_CASE("local model central orbit is hyperbolic with closed-form multipliers") {
  LocalModelParams p;
  p.period = 1.5;
  p.u_series = {0.6, 0.2};
  const FlowModel m = make_local_model(p);
  const PeriodicOrbit o = find_periodic_orbit(m, vec3(0.1, 1e-3, -2e-3), 1.4);
  CHECK(o.period == doctest::Approx(1.5).epsilon(1e-10));
  CHECK(o.cls == OrbitClass::Hyperbolic);
  CHECK(o.multipliers[0].real() == doctest::Approx(std::exp(-0.6 * 1.5)).epsilon(1e-9));
  CHECK(o.multipliers[1].real() == doctest::Approx(std::exp(0.6 * 1.5)).epsilon(1e-9));
  CHECK(o.multiplier_product_defect < 1e-9);
}

TEST_CASE("henon-heiles lyapunov triple is Z3 symmetric and hyperbolic") {
  const FlowModel m = make_henon_heiles(1.0 / 6.0 + 1e-3);
  OrbitSearchOptions opts;
  opts.workers = 3;
  const auto tri = find_lyapunov_triple(m, opts);
  for (const auto& o : tri) {
    CHECK(o.cls == OrbitClass::Hyperbolic);
    CHECK(o.closure_residual < 1e-9);
    CHECK(o.multiplier_product_defect < 1e-6);
    CHECK(std::abs(henon_heiles_hamiltonian(o.state) - m.invariants[0].level) < 1e-12);
  }
  CHECK(std::abs(tri[0].period - tri[1].period) < 1e-9);
  CHECK(std::abs(tri[0].period - tri[2].period) < 1e-9);
  CHECK(std::abs(tri[0].action - tri[1].action) < 1e-9);
  CHECK(rotated_orbit_distance(m, tri[0], tri[1], kTwoPi / 3) < 1e-6);
  CHECK(rotated_orbit_distance(m, tri[1], tri[2], kTwoPi / 3) < 1e-6);
  CHECK(rotated_orbit_distance(m, tri[2], tri[0], kTwoPi / 3) < 1e-6);
}

TEST_CASE("perturbed guess converges to the same lyapunov orbit") {
  const double e = 1.0 / 6.0 + 1e-3;
  const FlowModel m = make_henon_heiles(e);
  auto [g, t] = lyapunov_guess(e, 0);
  const PeriodicOrbit a = find_periodic_orbit(m, g, t);
  Vec g2 = g;
  g2(0) *= 1.05;
  g2(2) += 1e-3;
  const PeriodicOrbit b = find_periodic_orbit(m, g2, t * 1.01);
  CHECK(std::abs(a.period - b.period) < 1e-8);
  CHECK(std::abs(a.amplitude(0) - b.amplitude(0)) < 1e-6);
}

TEST_CASE("lyapunov amplitude decreases as the energy approaches 1/6") {
  double prev = INFINITY;
  for (double excess : {4e-3, 2e-3, 1e-3, 5e-4}) {
    const FlowModel m = make_henon_heiles(1.0 / 6.0 + excess);
    auto [g, t] = lyapunov_guess(1.0 / 6.0 + excess, 0);
    const PeriodicOrbit o = find_periodic_orbit(m, g, t);
    const double amp = o.amplitude(0);
    CHECK(amp < prev);
    prev = amp;
  }
}

TEST_CASE("rotation map has bounded orbit counts") {
  const MapModel r = make_rotation_map(kTwoPi * (std::sqrt(5.0) - 1.0) / 2.0);
  const GrowthTable g = count_orbits_grid_search(r, Vec2(0, 0), Vec2(1, 1), 6, 8);
  for (const auto& row : g.rows) CHECK(row.fixed_points == 1);
  CHECK(std::abs(g.growth_rate) < 1e-12);
}
