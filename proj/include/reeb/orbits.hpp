#pragma once

#include "reeb/flow.hpp"

#include <complex>

namespace reeb {

enum class OrbitClass { Elliptic, Hyperbolic, Degenerate };
std::string to_string(OrbitClass c);

struct PeriodicOrbit {
  std::string model_ref;
  Vec state;
  double period = 0.0;
  double action = 0.0;
  std::array<std::complex<double>, 2> multipliers{};
  OrbitClass cls = OrbitClass::Degenerate;
  bool degenerate = false;
  double closure_residual = 0.0;
  double multiplier_product_defect = 0.0;
  Mat monodromy;              // full fundamental matrix over one period
  Mat2 transverse_monodromy;  // in the model frame, flow direction quotiented out
  std::string frame_id;
  std::vector<double> sample_times;
  std::vector<Vec> samples;  // uniform in time, first sample = state

  double amplitude(int coord) const;
};

struct OrbitSearchOptions {
  IntegrateOptions integrate;
  int max_iterations = 40;
  std::size_t n_samples = 256;
  int workers = 1;
  // Also pin every conserved quantity without a declared level to its value
  // at the guess (selects one member of a family of orbits).
  bool pin_guess_invariants = false;
};

PeriodicOrbit find_periodic_orbit(const FlowModel& model, const Vec& guess, double guess_period,
                                  const OrbitSearchOptions& opts = {});

/// Recomputes Floquet data, action and samples for a converged (state, T).
PeriodicOrbit analyse_orbit(const FlowModel& model, const Vec& state, double period,
                            const OrbitSearchOptions& opts = {});

/// Linear-order guess for the Lyapunov orbit in the neck at the saddle-center
/// obtained by rotating (0, 1) by 2 pi k / 3.
std::pair<Vec, double> lyapunov_guess(double energy, int sector);

std::array<PeriodicOrbit, 3> find_lyapunov_triple(const FlowModel& model,
                                                  const OrbitSearchOptions& opts = {});

/// Max pointwise distance between orbit b and the rotated orbit a after the
/// best time shift of b.
double rotated_orbit_distance(const FlowModel& model, const PeriodicOrbit& a,
                              const PeriodicOrbit& b, double angle);

struct GrowthRow {
  int n = 0;
  long long fixed_points = 0;     // Fix(P^n)
  long long primitive_orbits = 0; // orbits of minimal period n
  long long orbits_up_to = 0;     // orbits with period <= n
};

struct GrowthTable {
  std::vector<GrowthRow> rows;
  double growth_rate = 0.0;
  double growth_stderr = 0.0;
  bool stable_fit = false;
  std::string note;
};

/// Periodic point of the word (symbols 1-based) or nothing when the solver
/// cannot realize it.
using WordSolver = std::function<std::optional<Vec2>(const std::vector<int>&)>;

/// Orbit counts of a symbolic system: every word of length n is solved, the
/// point is verified as a fixed point of P^n and deduplicated.
GrowthTable count_orbits_up_to_period(const MapModel& map, const WordSolver& solver,
                                      int n_symbols, int n_max, double tol_closure = 1e-9,
                                      int workers = 1);

/// Orbit counts of a map without a certificate: Newton from a seed grid on
/// the square [lo, hi]^2.
GrowthTable count_orbits_grid_search(const MapModel& map, const Vec2& lo, const Vec2& hi,
                                     int n_max, int grid = 24, double tol_closure = 1e-9);

Json to_json(const PeriodicOrbit& o, bool with_samples = true);
PeriodicOrbit orbit_from_json(const Json& j);
Json to_json(const GrowthTable& g);

}  // namespace reeb
