#pragma once

#include "reeb/orbits.hpp"

#include <map>
#include <memory>

namespace reeb {

// ---------------------------------------------------------------- normal form

/// Section through an orbit point with normal F(z0), parametrised on the
/// level set by (a, b) -> z0 + a v_s + b v_u + c grad H(z0).
struct OrbitSection {
  SectionSpec spec;
  Vec z0;
  Vec v_s, v_u;
  Vec level_dir;  // empty when the model has no level constraint
  Mat coord_map;  // 2 x dim, (a, b) = coord_map (z - z0) on the section

  Vec embed(const FlowModel& model, const Vec2& ab) const;
  Vec2 coords(const Vec& z) const;
  /// d(embed)/d(a,b) at ab (dim x 2).
  Mat embed_jacobian(const FlowModel& model, const Vec2& ab) const;
};

OrbitSection make_orbit_section(const FlowModel& model, const PeriodicOrbit& orbit);

struct NormalFormChart {
  std::string orbit_ref;
  double period = 0.0;
  double radius = 0.0;  // delta'
  int order = 0;
  double mu_u = 0.0;
  std::vector<double> u_series;  // per unit time: U(w) = period * u(w)
  std::vector<std::pair<int, int>> monomials;
  Mat coeffs;  // 2 x monomials, higher-order part of the conjugacy
  double fit_residual = 0.0;
  double validation_residual = 0.0;
  int iterations = 0;
  OrbitSection section;

  double u(double w) const;
  double U(double w) const { return period * u(w); }
  Vec2 normal_map(const Vec2& xy) const;  // time-T map of the normal form
  Vec2 phi(const Vec2& xy) const;         // chart -> section coords
  Mat2 dphi(const Vec2& xy) const;
  Vec2 phi_inverse(const Vec2& ab) const;
};

struct NormalFormOptions {
  int grid = 9;               // samples per axis on the fit region
  int max_iterations = 12;
  double tol_nf = 1e-6;
  double min_return_fraction = 0.5;  // crossings before this fraction of T are ignored
  IntegrateOptions integrate;
  int workers = 1;
};

NormalFormChart fit_normal_form(const FlowModel& model, const PeriodicOrbit& orbit, double radius,
                                int order, const NormalFormOptions& opts = {});

/// Section return map in chart coordinates (a, b); nullopt if no return.
std::optional<Vec2> section_return(const FlowModel& model, const NormalFormChart& chart,
                                   const Vec2& ab, const IntegrateOptions& io = {});

/// xy conservation along transits: seeds enter near the stable direction and
/// are followed by the true flow through successive section returns while
/// they stay in the chart. Reports the worst |xy_k - xy_0|.
struct DriftReport {
  std::size_t trajectories = 0;
  std::size_t returns = 0;
  double max_drift = 0.0;
};
DriftReport normal_form_drift(const FlowModel& model, const NormalFormChart& chart,
                              std::size_t n_trajectories, int workers = 1,
                              const IntegrateOptions& io = {});

// ---------------------------------------------------------------- lifts

enum class LiftKind { LocalExterior, LocalInterior, Global, Composed, Identity };
std::string to_string(LiftKind k);

struct TwistCertificate {
  double C = 0.0;
  double A = 1.0;
  double B = 1.0;
  double r0 = 0.0;
  bool valid = false;
  bool trivial = false;
  std::size_t samples = 0;
  std::string failure;
  Vec2 violating_sample = Vec2::Zero();
};

struct TransitionLift {
  LiftKind kind = LiftKind::Identity;
  std::string description;
  std::function<Vec2(const Vec2&)> eval;  // (t, r) -> (T, R)
  double r_max = 1.0;                     // domain (0, r_max]
  // local kinds: T = t + g(r) - h(r) ln r, R = r
  std::function<double(double)> g, h;
  double h0 = 0.0;
  double delta = 0.0;
  bool preserves_r = false;
  std::optional<TwistCertificate> certificate;
  std::size_t chain_length = 0;

  Vec2 operator()(double t, double r) const { return eval(Vec2(t, r)); }
  double twist(double r) const;  // g - h ln r, local kinds only
};

/// Exterior passage {x = delta/2} -> {y = delta/2} of the local model with
/// period normalised to 1.
TransitionLift local_exterior_lift(const LocalModelParams& params, double delta);
TransitionLift local_exterior_lift(const NormalFormChart& chart, double delta);
/// Lift with prescribed g and h (t ↦ t + g(r) - h(r) ln r).
TransitionLift log_twist_lift(std::function<double(double)> g, std::function<double(double)> h,
                              double r_max, const std::string& description);

/// A (t, r) chart on a hyperplane section.
struct SectionChart {
  SectionSpec section;
  std::function<Vec(const Vec2&)> embed;
  std::function<Vec2(const Vec&)> coords;
};

struct GlobalLiftFit {
  std::vector<double> t;
  std::vector<double> H;
  double min_dH = 0.0;
  double max_remainder = 0.0;  // max |T - H| / r
  double A = 0.0;              // min R / r
  double B = 0.0;              // max R / r
  double min_Ytilde = 0.0;
  bool h_monotone = false;
  bool y_positive = false;
};

struct GlobalLiftOptions {
  double max_time = 10.0;
  IntegrateOptions integrate;
  int workers = 1;
};

/// First-hit passage between two sections, 1-periodic in t. The grid gives
/// the fit samples; the returned lift evaluates by integration.
TransitionLift global_lift(const FlowModel& model, const SectionChart& from,
                           const SectionChart& to, const std::vector<double>& t_grid,
                           const std::vector<double>& r_grid, GlobalLiftFit* fit,
                           const GlobalLiftOptions& opts = {});

/// Numerical passage without any (g, h) form, for interior transitions.
TransitionLift numerical_lift(const FlowModel& model, const SectionChart& from,
                              const SectionChart& to, double r_max, LiftKind kind,
                              const GlobalLiftOptions& opts = {});

struct CertificateOptions {
  int t_samples = 100;
  int r_samples = 100;
  double r_min = 1e-6;
  double margin = 1.1;
  int workers = 1;
};

TwistCertificate certify_lift(const TransitionLift& lift, const CertificateOptions& opts = {});

/// Applies the chain in order (first element first) and certifies the result.
TransitionLift compose_lifts(const std::vector<TransitionLift>& chain,
                             const CertificateOptions& opts = {});

struct TwistFixedPoint {
  int k = 0;
  bool found = false;
  bool degenerate = false;
  std::string status;
  double t = 0.0;
  double r = 0.0;
  double residual = 0.0;
};

struct TwistSearchOptions {
  int t_samples = 48;
  double r_min = 1e-12;
  int workers = 1;
};

std::vector<TwistFixedPoint> find_twist_periodic_points(const TransitionLift& lift,
                                                        const std::vector<int>& ks,
                                                        const TwistSearchOptions& opts = {});

/// Spiral test: the image of (t(s), a s^n) under a local lift is
/// a graph r = eta(t) with eta decreasing and slope tending to 0.
struct SpiralReport {
  bool monotone = false;
  double initial_slope = 0.0;
  double final_slope = 0.0;
  double slope_ratio = 0.0;
};
SpiralReport check_monotone_spiral(const TransitionLift& lift,
                                   const std::function<double(double)>& t_of_s, double a, int n,
                                   double s_max = 0.5, int decades = 12);

// ---------------------------------------------------------------- foliation schema

enum class BranchClass { Coincident, ScenarioB, ScenarioC, Undetermined };
std::string to_string(BranchClass c);

struct Circle2 {
  Vec2 center = Vec2::Zero();
  double radius = 1.0;
};

struct ClassifyResult {
  BranchClass cls = BranchClass::Undetermined;
  double hausdorff = 0.0;
  double min_signed = 0.0;
  double max_signed = 0.0;
  int transverse_crossings = 0;
  int tangencies = 0;
  std::vector<Vec2> intersection_points;
};

/// Compares the image of the unstable circle with the stable circle.
ClassifyResult classify_branch(const Circle2& stable,
                               const std::function<Vec2(const Vec2&)>& psi,
                               const Circle2& unstable, double tol_circle = 1e-5,
                               int samples = 4096);

using FamilyId = std::pair<int, int>;

struct DiskFootprint {
  double lo = 0.0;
  double hi = 0.0;
};

/// Oracle for the forwarding step: whether the n-th forwarded disk starting
/// from (j, k) already meets the stable circle, and its footprint.
struct ForwardingOracle {
  std::function<bool(int j, int k, int n)> meets_stable;
  std::function<DiskFootprint(int j, int k, int n)> footprint;
};

struct FoliationSchema {
  std::map<int, int> k_tilde;         // j -> number of families k
  double disk_area = 1.0;
  double available_area = 1.0;
  bool equal_area = true;
  double tol_area = 1e-9;
  std::map<FamilyId, double> areas;   // optional per-family areas
  std::map<FamilyId, std::pair<Circle2, Circle2>> circles;  // (stable, unstable)
  std::map<FamilyId, BranchClass> classification;

  bool contains(FamilyId id) const;
};

/// Classifies family `id` with its recorded circles and stores the result.
ClassifyResult classify_family(FoliationSchema& schema, FamilyId id,
                               const std::function<Vec2(const Vec2&)>& psi,
                               double tol_circle = 1e-5);

struct ForwardingTrace {
  FamilyId start;
  FamilyId image;
  int steps = 0;
  int bound = 0;
  std::vector<FamilyId> sequence;
};

ForwardingTrace iterate_disk_forwarding(const FoliationSchema& schema, FamilyId start,
                                        const ForwardingOracle& oracle, int overlap_samples = 64);

FoliationSchema schema_from_json(const Json& j);
Json to_json(const FoliationSchema& s);
Json to_json(const ForwardingTrace& t);
Json to_json(const ClassifyResult& c);
Json to_json(const NormalFormChart& c);
Json to_json(const TwistCertificate& c);
Json to_json(const TwistFixedPoint& p);
Json to_json(const GlobalLiftFit& f);
Json lift_summary(const TransitionLift& l);

}  // namespace reeb
