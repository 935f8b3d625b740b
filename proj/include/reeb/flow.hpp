#pragma once

#include "reeb/models.hpp"

#include <limits>
#include <optional>

namespace reeb {

struct IntegrateOptions {
  double rtol = 1e-12;
  double atol = 1e-12;
  double h_init = 0.0;  // 0: automatic
  double h_max = std::numeric_limits<double>::infinity();
  double h_min = 1e-14;
  std::size_t max_steps = 20'000'000;
  double max_norm = 1e8;  // domain exit guard
  bool dense = true;      // keep per-step interpolation data
};

/// One accepted Dormand-Prince step with its quartic interpolation data.
struct DenseSegment {
  double t0 = 0.0;
  double h = 0.0;
  std::array<Vec, 5> c;
  Vec eval(double t) const;
};

struct Trajectory {
  std::string model_ref;
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<DenseSegment> segments;
  int interpolant_order = 4;
  double h_max_used = 0.0;
  // Maximum |C(z(t)) - C(z(0))| over knots, one entry per conserved quantity.
  std::vector<double> drift;

  double t_begin() const { return times.front(); }
  double t_end() const { return times.back(); }
  const Vec& final_state() const { return states.back(); }
  Vec eval(double t) const;
};

/// Hyperplane section {z : <normal, z - anchor> = 0}; direction +1 counts
/// crossings along +normal, -1 along -normal, 0 both.
struct SectionSpec {
  Vec anchor;
  Vec normal;
  int direction = 1;
  double value(const Vec& z) const { return normal.dot(z - anchor); }
};

struct Crossing {
  double time = 0.0;
  Vec state;
  double transversality = 0.0;  // <field, unit normal>
};

Trajectory integrate(const FlowModel& model, const Vec& z0, double t0, double t1,
                     const IntegrateOptions& opts = {});

/// Integrates until the first transverse crossing of `section` after time
/// t0 + min_time (or t1). Near-tangent crossings are returned too so the
/// caller can decide; `trajectory` receives the path when given.
std::optional<Crossing> integrate_to_section(const FlowModel& model, const Vec& z0, double t0,
                                             double t1, const SectionSpec& section,
                                             double min_time, const IntegrateOptions& opts,
                                             Trajectory* trajectory = nullptr);

struct VariationalResult {
  Trajectory trajectory;          // states of the base flow
  std::vector<double> times;      // knot times
  std::vector<Mat> monodromy;     // fundamental matrices at the knots
  Mat final_matrix() const { return monodromy.back(); }
};

VariationalResult integrate_variational(const FlowModel& model, const Vec& z0, double t0,
                                        double t1, const IntegrateOptions& opts = {});

/// Variational flow stopped at a section crossing: returns the crossing and
/// the fundamental matrix there.
struct VariationalCrossing {
  Crossing crossing;
  Mat phi;
};
std::optional<VariationalCrossing> integrate_variational_to_section(
    const FlowModel& model, const Vec& z0, const SectionSpec& section, double max_time,
    double min_time, const IntegrateOptions& opts = {});

enum class ReturnStatus { Ok, NoReturn, NonTransverse, Failed };
std::string to_string(ReturnStatus s);

struct ReturnRecord {
  Vec seed;
  ReturnStatus status = ReturnStatus::NoReturn;
  Vec exit;
  double transit_time = 0.0;
  double transversality = 0.0;
  std::string message;
};

struct ReturnMapOptions {
  IntegrateOptions integrate;
  double tol_transverse = 1e-6;
  double min_time = 1e-9;  // crossings earlier than this are ignored
  int workers = 1;
};

/// First crossings of `to` for every seed. Failures are recorded per seed.
std::vector<ReturnRecord> return_map(const FlowModel& model, const SectionSpec& to,
                                     const std::vector<Vec>& seeds, double max_time,
                                     const ReturnMapOptions& opts = {});

Json to_json(const ReturnRecord& r);
Json to_json(const SectionSpec& s);
SectionSpec section_from_json(const Json& j);

}  // namespace reeb
