#pragma once

#include "reeb/common.hpp"

#include "json.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace reeb {

using Json = nlohmann::json;

/// Numerical thresholds carried by every model and recorded with its output.
struct Tolerances {
  double energy = 1e-9;       // drift of conserved quantities along trajectories
  double transverse = 1e-6;   // |<field, normal>| at section crossings
  double closure = 1e-9;      // |phi_T(x) - x| for periodic orbits
  double floquet = 1e-6;      // |mu - 1| degeneracy band
  double spectrum = 1e-6;     // eigenvalue change under grid refinement
  double symplectic = 1e-8;   // ||Phi^T J Phi - J||
};

struct ConservedQuantity {
  std::string name;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  // When set, orbit searches pin this quantity to `level`.
  bool level_constraint = false;
  double level = 0.0;
};

/// Global frame of the transverse plane field, used as the trivialization for
/// rotation numbers and push-offs.
struct Frame {
  std::string id;
  std::function<std::array<Vec, 2>(const Vec&)> vectors;
  // Directional derivative D e_i(z)[v]; finite differences when empty.
  std::function<std::array<Vec, 2>(const Vec& z, const Vec& v)> derivative;
};

struct FlowModel {
  std::string name;
  std::string kind;
  Json params = Json::object();
  int dim = 0;
  std::function<Vec(const Vec&)> field;
  std::function<Mat(const Vec&)> jacobian;
  std::vector<ConservedQuantity> invariants;
  std::optional<Frame> frame;
  // Integrand of the action one-form evaluated on (z, zdot); empty means the
  // action is reported as the period.
  std::function<double(const Vec&, const Vec&)> action_density;
  // Coordinate that lives on a circle of length angle_period (-1: none).
  int angle_index = -1;
  double angle_period = 0.0;
  Tolerances tol;

  /// Difference b - a with the circle coordinate reduced to (-P/2, P/2].
  Vec wrapped_difference(const Vec& a, const Vec& b) const;
  std::array<Vec, 2> frame_at(const Vec& z) const;
  std::array<Vec, 2> frame_derivative(const Vec& z, const Vec& v) const;
  const ConservedQuantity* level_quantity() const;
};

struct MapModel {
  std::string name;
  std::string kind;
  Json params = Json::object();
  std::function<Vec2(const Vec2&)> map;
  std::function<Vec2(const Vec2&)> inverse;  // optional
  std::function<Mat2(const Vec2&)> jacobian;
  std::function<double(const Vec2&)> area_density;  // default 1

  bool has_inverse() const { return static_cast<bool>(inverse); }
  Mat2 inverse_jacobian(const Vec2& z) const;
};

/// Convergent series u(w) = ln(eta) + eta_1 w + eta_2 w^2 + ... truncated at
/// a finite order, with a declared tail bound on |w| <= radius^2.
struct LocalModelParams {
  double period = 1.0;
  std::vector<double> u_series{1.0};
  double radius = 0.5;
  double tol_series = 1e-12;

  double u(double w) const;
  double du(double w) const;
  void validate() const;
};

/// Standard symplectic structure on (q1, q2, p1, p2) together with the two
/// anticommuting complex structures that complete it to a quaternionic
/// triple. They induce the global frame (Jq grad H, Kq grad H).
Eigen::Matrix4d symplectic_j0();
Eigen::Matrix4d quaternion_j();
Eigen::Matrix4d quaternion_k();

/// Rotation by `angle` acting on (q1,q2) and (p1,p2) simultaneously.
Vec rotate_hh_state(const Vec& z, double angle);

inline constexpr double kHenonHeilesCritical = 1.0 / 6.0;

struct HenonHeilesOptions {
  double max_excess = 0.01;  // cap on energy - 1/6
};

double henon_heiles_hamiltonian(const Vec& z);
Vec henon_heiles_gradient(const Vec& z);
Eigen::Matrix4d henon_heiles_hessian(const Vec& z);
/// The three saddle-center equilibria (q, p=0), Z3-related.
std::array<Vec, 3> henon_heiles_saddles();

FlowModel make_henon_heiles(double energy, const HenonHeilesOptions& opts = {});
FlowModel make_local_model(const LocalModelParams& params);

enum class LinearKind { Elliptic, Hyperbolic };
struct LinearReebSpec {
  LinearKind kind = LinearKind::Elliptic;
  double theta = 0.0;      // rotation per period in turns (elliptic)
  int winding = 0;         // eigendirection turns per period (hyperbolic)
  double rate = 1.0;       // expansion rate a (hyperbolic)
};
FlowModel make_linear_reeb_model(const LinearReebSpec& spec, double period);
/// Closed-form transverse generator G(t) of the linear models (zdot = G z).
Mat2 linear_reeb_generator(const LinearReebSpec& spec, double period, double t);

FlowModel make_harmonic_oscillator();
/// H = (w1 |z1|^2 + w2 |z2|^2)/2 on R^4, frame as for Henon-Heiles.
FlowModel make_ellipsoid(double w1, double w2, double energy = 0.5);

/// Passage flow on (t, r, s): tdot = a + b cos(2 pi t) + kappa r,
/// rdot = gamma sin(2 pi t) r, sdot = 1. The r = 0 passage from s=0 to s=1
/// has the closed form returned by synthetic_passage_h.
struct SyntheticPassageSpec {
  double a = 1.0;
  double b = 0.3;
  double kappa = 0.5;
  double gamma = 0.4;
};
FlowModel make_synthetic_passage_flow(const SyntheticPassageSpec& spec);
double synthetic_passage_h(const SyntheticPassageSpec& spec, double t, double duration = 1.0);

struct AffineHorseshoeOptions {
  bool allow_overlap = false;  // build the map even when strips overlap
};
MapModel make_affine_horseshoe(double expansion, int n_branches,
                               const AffineHorseshoeOptions& opts = {});
/// Bottom edge of horizontal strip i (1-based, top to bottom) and left edge of
/// vertical strip i (1-based, right to left) of the affine horseshoe.
double affine_strip_offset(double expansion, int n_branches, int i);

MapModel make_rotation_map(double angle);

/// Rebuild a model from its serialized {name, kind, params, ...} document.
FlowModel flow_model_from_json(const Json& doc);
MapModel map_model_from_json(const Json& doc);
bool is_map_kind(const std::string& kind);
Json model_to_json(const FlowModel& m);
Json model_to_json(const MapModel& m);

}  // namespace reeb
