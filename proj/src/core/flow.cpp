#include "reeb/flow.hpp"

#include "reeb/parallel.hpp"

#include <algorithm>

namespace reeb {

namespace {

using Rhs = std::function<Vec(const Vec&)>;

// Dormand-Prince 5(4) tableau with Hairer's dense-output weights.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

struct EventSpec {
  std::function<double(const Vec&)> value;
  std::function<double(const Vec&, const Vec&)> rate;  // dg/dt given (z, zdot)
  int direction = 0;
  double after = 0.0;  // absolute time before which crossings are ignored
};

struct EventHit {
  double time = 0.0;
  Vec state;
};

struct RunResult {
  Trajectory traj;
  std::optional<EventHit> hit;
};

double error_norm(const Vec& err, const Vec& y0, const Vec& y1, double atol, double rtol) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sc = atol + rtol * std::max(std::abs(y0(i)), std::abs(y1(i)));
    const double e = err(i) / sc;
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(err.size()));
}

double initial_step(const Rhs& f, const Vec& y0, const Vec& f0, double span,
                    const IntegrateOptions& o) {
  if (o.h_init > 0.0) return std::min(o.h_init, span);
  Vec sc = (o.atol + o.rtol * y0.array().abs()).matrix();
  const double dn0 = std::sqrt((y0.array() / sc.array()).square().mean());
  const double dn1 = std::sqrt((f0.array() / sc.array()).square().mean());
  double h0 = (dn0 < 1e-5 || dn1 < 1e-5) ? 1e-6 : 0.01 * dn0 / dn1;
  h0 = std::min(h0, span);
  const Vec y1 = y0 + h0 * f0;
  const Vec f1 = f(y1);
  const double dn2 = std::sqrt(((f1 - f0).array() / sc.array()).square().mean()) / h0;
  const double dmax = std::max(dn1, dn2);
  const double h1 = dmax <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dmax, 0.2);
  return std::min({100.0 * h0, h1, span, o.h_max});
}

// Locates the event inside one dense segment by bisection followed by Newton
// on the interpolant.
double locate_event(const DenseSegment& seg, const EventSpec& ev, const Rhs& f, double ga,
                    double gb) {
  double lo = seg.t0, hi = seg.t0 + seg.h;
  double glo = ga;
  (void)gb;
  for (int it = 0; it < 60 && hi - lo > 1e-9 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = ev.value(seg.eval(mid));
    if ((gm > 0.0) == (glo > 0.0) && gm != 0.0) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  double t = 0.5 * (lo + hi);
  for (int it = 0; it < 8; ++it) {
    const Vec z = seg.eval(t);
    const double g = ev.value(z);
    const double dg = ev.rate(z, f(z));
    if (dg == 0.0) break;
    const double tn = std::clamp(t - g / dg, lo, hi);
    const double step = std::abs(tn - t);
    t = tn;
    if (step < 1e-13 * std::max(1.0, std::abs(t))) break;
  }
  return t;
}

RunResult run_dopri(const Rhs& f, const Vec& y0, double t0, double t1, const IntegrateOptions& o,
                    const EventSpec* ev) {
  if (!(t1 >= t0)) fail_validation("integrate: span must satisfy t1 >= t0");
  if (!(o.rtol > 0.0 && o.atol > 0.0)) fail_validation("integrate: tolerances must be positive");
  RunResult out;
  Trajectory& tr = out.traj;
  tr.times.push_back(t0);
  tr.states.push_back(y0);
  if (t1 == t0) return out;

  Vec y = y0;
  Vec k1 = f(y);
  double t = t0;
  double h = initial_step(f, y, k1, t1 - t0, o);
  double g_prev = ev ? ev->value(y) : 0.0;
  const double span = t1 - t0;
  std::size_t steps = 0;
  bool last_rejected = false;

  while (t < t1) {
    if (++steps > o.max_steps) fail_numerical("integrate: step budget exhausted");
    if (t + h > t1 || t1 - (t + h) < 1e-14 * span) h = t1 - t;
    h = std::min(h, o.h_max);
    const Vec k2 = f(y + h * a21 * k1);
    const Vec k3 = f(y + h * (a31 * k1 + a32 * k2));
    const Vec k4 = f(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vec k5 = f(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vec k6 = f(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Vec y1 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    const Vec k7 = f(y1);
    const Vec err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double en = error_norm(err, y, y1, o.atol, o.rtol);
    if (!std::isfinite(en)) {
      h *= 0.1;
      if (h < o.h_min) fail_numerical("integrate: non-finite field evaluation");
      continue;
    }
    if (en > 1.0) {
      h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
      last_rejected = true;
      if (h < o.h_min) fail_numerical("integrate: step-size underflow (near-singular field)");
      continue;
    }
    DenseSegment seg;
    seg.t0 = t;
    seg.h = h;
    const Vec ydiff = y1 - y;
    const Vec bspl = h * k1 - ydiff;
    seg.c[0] = y;
    seg.c[1] = ydiff;
    seg.c[2] = bspl;
    seg.c[3] = ydiff - h * k7 - bspl;
    seg.c[4] = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
    const double t_new = (h == t1 - t) ? t1 : t + h;
    tr.h_max_used = std::max(tr.h_max_used, h);

    if (ev) {
      const double g_new = ev->value(y1);
      const bool up = g_prev < 0.0 && g_new >= 0.0;
      const bool down = g_prev > 0.0 && g_new <= 0.0;
      const bool wanted = (ev->direction >= 0 && up) || (ev->direction <= 0 && down);
      if (wanted && t_new > ev->after) {
        double te = locate_event(seg, *ev, f, g_prev, g_new);
        if (te > ev->after) {
          const Vec ze = seg.eval(te);
          if (o.dense) tr.segments.push_back(seg);
          tr.times.push_back(te);
          tr.states.push_back(ze);
          out.hit = EventHit{te, ze};
          return out;
        }
      }
      g_prev = g_new;
    }

    if (o.dense) tr.segments.push_back(seg);
    t = t_new;
    y = y1;
    k1 = k7;
    tr.times.push_back(t);
    tr.states.push_back(y);
    if (y.norm() > o.max_norm) fail_numerical("integrate: trajectory left the domain");
    double fac = 0.9 * std::pow(std::max(en, 1e-10), -0.2);
    fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 10.0);
    last_rejected = false;
    h *= fac;
  }
  return out;
}

void record_drift(const FlowModel& m, Trajectory& tr) {
  tr.drift.clear();
  for (const auto& c : m.invariants) {
    const double c0 = c.value(tr.states.front().head(m.dim));
    double worst = 0.0;
    for (const auto& z : tr.states) worst = std::max(worst, std::abs(c.value(z.head(m.dim)) - c0));
    tr.drift.push_back(worst);
  }
}

Rhs variational_rhs(const FlowModel& m) {
  const int n = m.dim;
  return [&m, n](const Vec& w) -> Vec {
    Vec out(n + n * n);
    const Vec z = w.head(n);
    out.head(n) = m.field(z);
    const Eigen::Map<const Mat> phi(w.data() + n, n, n);
    Eigen::Map<Mat>(out.data() + n, n, n) = m.jacobian(z) * phi;
    return out;
  };
}

Vec augmented_initial(const Vec& z0, int n) {
  Vec w(n + n * n);
  w.head(n) = z0;
  Eigen::Map<Mat>(w.data() + n, n, n) = Mat::Identity(n, n);
  return w;
}

Mat extract_phi(const Vec& w, int n) { return Eigen::Map<const Mat>(w.data() + n, n, n); }

EventSpec section_event(const FlowModel& m, const SectionSpec& s, double after) {
  const int n = m.dim;
  const Vec unit = s.normal / s.normal.norm();
  EventSpec ev;
  ev.value = [s, unit, n](const Vec& w) { return unit.dot(w.head(n) - s.anchor); };
  ev.rate = [unit, n](const Vec&, const Vec& wdot) { return unit.dot(wdot.head(n)); };
  ev.direction = s.direction;
  ev.after = after;
  return ev;
}

}  // namespace

Vec DenseSegment::eval(double t) const {
  const double s = h == 0.0 ? 0.0 : (t - t0) / h;
  const double s1 = 1.0 - s;
  return c[0] + s * (c[1] + s1 * (c[2] + s * (c[3] + s1 * c[4])));
}

Vec Trajectory::eval(double t) const {
  if (segments.empty()) {
    if (times.size() == 1) return states.front();
    fail_validation("trajectory: no dense output recorded");
  }
  if (t <= segments.front().t0) return segments.front().eval(t);
  auto it = std::upper_bound(segments.begin(), segments.end(), t,
                             [](double v, const DenseSegment& s) { return v < s.t0; });
  return std::prev(it)->eval(t);
}

Trajectory integrate(const FlowModel& model, const Vec& z0, double t0, double t1,
                     const IntegrateOptions& opts) {
  if (z0.size() != model.dim) fail_validation("integrate: state dimension mismatch");
  Rhs f = model.field;
  RunResult r = run_dopri(f, z0, t0, t1, opts, nullptr);
  r.traj.model_ref = model.name;
  record_drift(model, r.traj);
  return std::move(r.traj);
}

std::optional<Crossing> integrate_to_section(const FlowModel& model, const Vec& z0, double t0,
                                             double t1, const SectionSpec& section,
                                             double min_time, const IntegrateOptions& opts,
                                             Trajectory* trajectory) {
  if (z0.size() != model.dim) fail_validation("integrate: state dimension mismatch");
  if (section.anchor.size() != model.dim || section.normal.size() != model.dim)
    fail_validation("section: dimension mismatch with model");
  const EventSpec ev = section_event(model, section, t0 + min_time);
  IntegrateOptions o = opts;
  o.dense = trajectory != nullptr && opts.dense;
  RunResult r = run_dopri(model.field, z0, t0, t1, o, &ev);
  if (trajectory) {
    r.traj.model_ref = model.name;
    record_drift(model, r.traj);
    *trajectory = std::move(r.traj);
  }
  if (!r.hit) return std::nullopt;
  Crossing c;
  c.time = r.hit->time;
  c.state = r.hit->state;
  c.transversality = section.normal.normalized().dot(model.field(c.state));
  return c;
}

VariationalResult integrate_variational(const FlowModel& model, const Vec& z0, double t0,
                                        double t1, const IntegrateOptions& opts) {
  if (!model.jacobian) fail_validation("integrate_variational: model has no jacobian");
  if (z0.size() != model.dim) fail_validation("integrate: state dimension mismatch");
  const int n = model.dim;
  IntegrateOptions o = opts;
  o.dense = false;
  RunResult r = run_dopri(variational_rhs(model), augmented_initial(z0, n), t0, t1, o, nullptr);
  VariationalResult out;
  out.times = r.traj.times;
  out.trajectory.model_ref = model.name;
  out.trajectory.times = r.traj.times;
  out.trajectory.h_max_used = r.traj.h_max_used;
  for (const auto& w : r.traj.states) {
    out.trajectory.states.push_back(w.head(n));
    out.monodromy.push_back(extract_phi(w, n));
  }
  record_drift(model, out.trajectory);
  return out;
}

std::optional<VariationalCrossing> integrate_variational_to_section(
    const FlowModel& model, const Vec& z0, const SectionSpec& section, double max_time,
    double min_time, const IntegrateOptions& opts) {
  if (!model.jacobian) fail_validation("integrate_variational: model has no jacobian");
  const int n = model.dim;
  const EventSpec ev = section_event(model, section, min_time);
  IntegrateOptions o = opts;
  o.dense = false;
  RunResult r =
      run_dopri(variational_rhs(model), augmented_initial(z0, n), 0.0, max_time, o, &ev);
  if (!r.hit) return std::nullopt;
  VariationalCrossing vc;
  vc.crossing.time = r.hit->time;
  vc.crossing.state = r.hit->state.head(n);
  vc.crossing.transversality = section.normal.normalized().dot(model.field(vc.crossing.state));
  vc.phi = extract_phi(r.hit->state, n);
  return vc;
}

std::string to_string(ReturnStatus s) {
  switch (s) {
    case ReturnStatus::Ok: return "ok";
    case ReturnStatus::NoReturn: return "no-return";
    case ReturnStatus::NonTransverse: return "non-transverse";
    case ReturnStatus::Failed: return "failed";
  }
  return "failed";
}

std::vector<ReturnRecord> return_map(const FlowModel& model, const SectionSpec& to,
                                     const std::vector<Vec>& seeds, double max_time,
                                     const ReturnMapOptions& opts) {
  std::vector<ReturnRecord> out(seeds.size());
  parallel_for(seeds.size(), opts.workers, [&](std::size_t i) {
    ReturnRecord& rec = out[i];
    rec.seed = seeds[i];
    try {
      auto hit = integrate_to_section(model, seeds[i], 0.0, max_time, to, opts.min_time,
                                      opts.integrate);
      if (!hit) {
        rec.status = ReturnStatus::NoReturn;
        return;
      }
      rec.exit = hit->state;
      rec.transit_time = hit->time;
      rec.transversality = hit->transversality;
      rec.status = std::abs(hit->transversality) >= opts.tol_transverse
                       ? ReturnStatus::Ok
                       : ReturnStatus::NonTransverse;
    } catch (const Error& e) {
      rec.status = ReturnStatus::Failed;
      rec.message = e.what();
    }
  });
  return out;
}

namespace {
Json vec_json(const Vec& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }
}  // namespace

Json to_json(const ReturnRecord& r) {
  Json j{{"seed", vec_json(r.seed)}, {"status", to_string(r.status)}};
  if (r.status == ReturnStatus::Ok || r.status == ReturnStatus::NonTransverse) {
    j["exit"] = vec_json(r.exit);
    j["transit_time"] = r.transit_time;
    j["transversality"] = r.transversality;
  }
  if (!r.message.empty()) j["message"] = r.message;
  return j;
}

Json to_json(const SectionSpec& s) {
  return Json{{"anchor", vec_json(s.anchor)},
              {"normal", vec_json(s.normal)},
              {"direction", s.direction}};
}

SectionSpec section_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("anchor") || !j.contains("normal"))
    fail_validation("section document: need 'anchor' and 'normal' arrays");
  const auto a = j.at("anchor").get<std::vector<double>>();
  const auto n = j.at("normal").get<std::vector<double>>();
  if (a.size() != n.size() || a.empty()) fail_validation("section document: size mismatch");
  SectionSpec s;
  s.anchor = Eigen::Map<const Vec>(a.data(), static_cast<Eigen::Index>(a.size()));
  s.normal = Eigen::Map<const Vec>(n.data(), static_cast<Eigen::Index>(n.size()));
  if (s.normal.norm() == 0.0) fail_validation("section document: zero normal");
  s.direction = j.value("direction", 1);
  if (s.direction < -1 || s.direction > 1) fail_validation("section document: direction in {-1,0,1}");
  return s;
}

}  // namespace reeb
