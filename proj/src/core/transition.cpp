#include "reeb/transition.hpp"

#include "reeb/parallel.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <sstream>

namespace reeb {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

std::string pair_witness(double a, double b) {
  return "{\"t\": " + fmt(a) + ", \"r\": " + fmt(b) + "}";
}

// Shift of the section anchor that makes the first return land on the same
// hyperplane when the model has a circle coordinate.
Vec angle_shift(const FlowModel& model, const Vec& normal, double period) {
  Vec s = Vec::Zero(model.dim);
  if (model.angle_index >= 0 && model.angle_period > 0.0) {
    // Advance by the number of turns made over one period along the orbit.
    const double turns = std::round(period / model.angle_period);
    if (std::abs(normal(model.angle_index)) > 0.0) s(model.angle_index) = turns * model.angle_period;
  }
  return s;
}

Vec unshift(const FlowModel& model, const Vec& z, const Vec& shift) {
  if (model.angle_index < 0) return z;
  return z - shift;
}

double horner(const std::vector<double>& c, double w) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * w + *it;
  return acc;
}

}  // namespace

// ---------------------------------------------------------------- sections

Vec OrbitSection::embed(const FlowModel& model, const Vec2& ab) const {
  Vec z = z0 + ab(0) * v_s + ab(1) * v_u;
  if (level_dir.size() == 0) return z;
  const ConservedQuantity* q = model.level_quantity();
  for (int it = 0; it < 50; ++it) {
    const double defect = q->value(z) - q->level;
    if (std::abs(defect) < 1e-15) break;
    const double slope = q->gradient(z).dot(level_dir);
    if (std::abs(slope) < 1e-300) fail_numerical("section embedding: level direction degenerate");
    z -= (defect / slope) * level_dir;
  }
  return z;
}

Vec2 OrbitSection::coords(const Vec& z) const { return coord_map * (z - z0); }

Mat OrbitSection::embed_jacobian(const FlowModel& model, const Vec2& ab) const {
  Mat d(z0.size(), 2);
  d.col(0) = v_s;
  d.col(1) = v_u;
  if (level_dir.size() == 0) return d;
  const Vec g = model.level_quantity()->gradient(embed(model, ab));
  const double gl = g.dot(level_dir);
  d.col(0) -= (g.dot(v_s) / gl) * level_dir;
  d.col(1) -= (g.dot(v_u) / gl) * level_dir;
  return d;
}

OrbitSection make_orbit_section(const FlowModel& model, const PeriodicOrbit& orbit) {
  if (orbit.monodromy.rows() != model.dim)
    fail_validation("normal form: orbit carries no monodromy for this model");
  OrbitSection s;
  s.z0 = orbit.state;
  const Vec f0 = model.field(s.z0);
  const Vec n = f0.normalized();
  s.spec.anchor = s.z0;
  s.spec.normal = n;
  s.spec.direction = 1;

  Eigen::EigenSolver<Mat> es(orbit.monodromy);
  int iu = -1, is = -1;
  double best_u = 1.0, best_s = 1.0;
  for (int i = 0; i < model.dim; ++i) {
    const auto mu = es.eigenvalues()(i);
    if (std::abs(mu.imag()) > 1e-9 * std::abs(mu)) continue;
    const double m = std::abs(mu.real());
    if (m > best_u) best_u = m, iu = i;
    if (m < best_s) best_s = m, is = i;
  }
  if (iu < 0 || is < 0 || best_u < 1.0 + 1e-6)
    fail_validation("normal form: orbit is not hyperbolic");
  auto tangent = [&](int i) {
    Vec v = es.eigenvectors().col(i).real();
    v -= (n.dot(v) / n.dot(f0)) * f0;
    v.normalize();
    int k = 0;
    v.cwiseAbs().maxCoeff(&k);
    if (v(k) < 0.0) v = -v;
    return v;
  };
  s.v_s = tangent(is);
  s.v_u = tangent(iu);

  Mat basis;
  if (const ConservedQuantity* q = model.level_quantity()) {
    Vec g = q->gradient(s.z0);
    g -= n.dot(g) * n;
    s.level_dir = g.normalized();
    basis.resize(model.dim, 3);
    basis << s.v_s, s.v_u, s.level_dir;
  } else {
    basis.resize(model.dim, 2);
    basis << s.v_s, s.v_u;
  }
  if (basis.cols() != model.dim - 1)
    fail_validation("normal form: section is not two-dimensional for this model");
  const Mat pinv = (basis.transpose() * basis).inverse() * basis.transpose();
  s.coord_map = pinv.topRows(2);
  return s;
}

// ---------------------------------------------------------------- normal form chart

double NormalFormChart::u(double w) const { return horner(u_series, w); }

Vec2 NormalFormChart::normal_map(const Vec2& p) const {
  const double uu = U(p(0) * p(1));
  return Vec2(p(0) * std::exp(-uu), p(1) * std::exp(uu));
}

Vec2 NormalFormChart::phi(const Vec2& p) const {
  Vec2 out = p;
  for (std::size_t m = 0; m < monomials.size(); ++m) {
    const double mono = std::pow(p(0), monomials[m].first) * std::pow(p(1), monomials[m].second);
    out += coeffs.col(static_cast<Eigen::Index>(m)) * mono;
  }
  return out;
}

Mat2 NormalFormChart::dphi(const Vec2& p) const {
  Mat2 d = Mat2::Identity();
  for (std::size_t m = 0; m < monomials.size(); ++m) {
    const auto [i, j] = monomials[m];
    const double dx = i > 0 ? i * std::pow(p(0), i - 1) * std::pow(p(1), j) : 0.0;
    const double dy = j > 0 ? j * std::pow(p(0), i) * std::pow(p(1), j - 1) : 0.0;
    d.col(0) += coeffs.col(static_cast<Eigen::Index>(m)) * dx;
    d.col(1) += coeffs.col(static_cast<Eigen::Index>(m)) * dy;
  }
  return d;
}

Vec2 NormalFormChart::phi_inverse(const Vec2& ab) const {
  Vec2 p = ab;
  for (int it = 0; it < 60; ++it) {
    const Vec2 r = phi(p) - ab;
    if (r.lpNorm<Eigen::Infinity>() < 1e-16) break;
    const Vec2 step = dphi(p).inverse() * r;
    p -= step;
    if (step.lpNorm<Eigen::Infinity>() < 1e-17) break;
  }
  return p;
}

namespace {

struct ReturnSample {
  Vec2 value;
  Mat2 jacobian;
};

SectionSpec shifted_spec(const FlowModel& model, const OrbitSection& s, double period) {
  SectionSpec spec = s.spec;
  spec.anchor = s.spec.anchor + angle_shift(model, s.spec.normal, period);
  return spec;
}

std::optional<ReturnSample> return_with_jacobian(const FlowModel& model,
                                                 const NormalFormChart& chart, const Vec2& ab,
                                                 double min_fraction,
                                                 const IntegrateOptions& io) {
  const OrbitSection& s = chart.section;
  const Vec z = s.embed(model, ab);
  const SectionSpec spec = shifted_spec(model, s, chart.period);
  auto hit = integrate_variational_to_section(model, z, spec, 2.0 * chart.period,
                                              min_fraction * chart.period, io);
  if (!hit) return std::nullopt;
  const Vec zh = hit->crossing.state;
  const Vec fh = model.field(zh);
  const Vec& n = spec.normal;
  const Mat proj = Mat::Identity(model.dim, model.dim) - fh * n.transpose() / n.dot(fh);
  ReturnSample out;
  out.value = s.coords(unshift(model, zh, spec.anchor - s.spec.anchor));
  out.jacobian = s.coord_map * proj * hit->phi * s.embed_jacobian(model, ab);
  return out;
}

}  // namespace

std::optional<Vec2> section_return(const FlowModel& model, const NormalFormChart& chart,
                                   const Vec2& ab, const IntegrateOptions& io) {
  const OrbitSection& s = chart.section;
  const SectionSpec spec = shifted_spec(model, s, chart.period);
  auto hit = integrate_to_section(model, s.embed(model, ab), 0.0, 2.0 * chart.period, spec,
                                  0.5 * chart.period, io);
  if (!hit) return std::nullopt;
  return s.coords(unshift(model, hit->state, spec.anchor - s.spec.anchor));
}

NormalFormChart fit_normal_form(const FlowModel& model, const PeriodicOrbit& orbit, double radius,
                                int order, const NormalFormOptions& opts) {
  if (!(radius > 0.0)) fail_validation("fit_normal_form: radius must be positive");
  if (order < 1 || order > 12) fail_validation("fit_normal_form: order must lie in [1, 12]");
  if (opts.grid < 3) fail_validation("fit_normal_form: grid must be at least 3");

  NormalFormChart c;
  c.orbit_ref = orbit.model_ref;
  c.period = orbit.period;
  c.radius = radius;
  c.order = order;
  c.section = make_orbit_section(model, orbit);

  double mu_u = 0.0;
  for (const auto& m : orbit.multipliers) mu_u = std::max(mu_u, std::abs(m));
  if (orbit.cls != OrbitClass::Hyperbolic || mu_u <= 1.0)
    fail_validation("fit_normal_form: orbit is not hyperbolic");
  c.mu_u = mu_u;

  const int k_max = (order - 1) / 2;
  c.u_series.assign(static_cast<std::size_t>(k_max) + 1, 0.0);
  c.u_series[0] = std::log(mu_u) / c.period;
  for (int d = 2; d <= order; ++d)
    for (int i = d; i >= 0; --i) c.monomials.emplace_back(i, d - i);
  const int nm = static_cast<int>(c.monomials.size());
  c.coeffs = Mat::Zero(2, nm);

  // Free unknowns: conjugacy coefficients except the resonant x (xy)^k terms
  // of the first component (gauge), then eta_1..eta_kmax of U.
  std::vector<std::pair<int, int>> free;  // (component, monomial)
  for (int comp = 0; comp < 2; ++comp)
    for (int m = 0; m < nm; ++m) {
      const auto [i, j] = c.monomials[static_cast<std::size_t>(m)];
      if (comp == 0 && i - j == 1) continue;
      free.emplace_back(comp, m);
    }
  const int n_free = static_cast<int>(free.size());
  const int n_unknowns = n_free + k_max;

  std::vector<Vec2> samples;
  for (double x : linspace(-radius, radius, static_cast<std::size_t>(opts.grid)))
    for (double y : linspace(-radius / mu_u, radius / mu_u, static_cast<std::size_t>(opts.grid)))
      samples.emplace_back(x, y);
  const int ns = static_cast<int>(samples.size());
  if (2 * ns < n_unknowns)
    fail_validation("fit_normal_form: grid too coarse for the requested order");

  auto residuals = [&](const NormalFormChart& ch, bool with_jacobian, Vec* res, Mat* jac) {
    std::vector<std::optional<ReturnSample>> ret(static_cast<std::size_t>(ns));
    std::vector<std::optional<Vec2>> val(static_cast<std::size_t>(ns));
    parallel_for(static_cast<std::size_t>(ns), opts.workers, [&](std::size_t i) {
      const Vec2 ab = ch.phi(samples[i]);
      if (with_jacobian)
        ret[i] = return_with_jacobian(model, ch, ab, opts.min_return_fraction, opts.integrate);
      else
        val[i] = section_return(model, ch, ab, opts.integrate);
    });
    res->resize(2 * ns);
    if (with_jacobian) jac->setZero(2 * ns, n_unknowns);
    for (int s = 0; s < ns; ++s) {
      const Vec2& p = samples[static_cast<std::size_t>(s)];
      const std::optional<Vec2> pv =
          with_jacobian ? (ret[static_cast<std::size_t>(s)]
                               ? std::optional<Vec2>(ret[static_cast<std::size_t>(s)]->value)
                               : std::nullopt)
                        : val[static_cast<std::size_t>(s)];
      if (!pv)
        fail_numerical("fit_normal_form: sample does not return to the section; shrink the radius",
                       pair_witness(p(0), p(1)));
      const Vec2 np = ch.normal_map(p);
      res->segment(2 * s, 2) = *pv - ch.phi(np);
      if (!with_jacobian) continue;
      const Mat2& dp = ret[static_cast<std::size_t>(s)]->jacobian;
      for (int f = 0; f < n_free; ++f) {
        const auto [comp, m] = free[static_cast<std::size_t>(f)];
        const auto [i, j] = ch.monomials[static_cast<std::size_t>(m)];
        const double mp = std::pow(p(0), i) * std::pow(p(1), j);
        const double mn = std::pow(np(0), i) * std::pow(np(1), j);
        Vec2 col = dp.col(comp) * mp;
        col(comp) -= mn;
        jac->block(2 * s, f, 2, 1) = col;
      }
      const double w = p(0) * p(1);
      const double uu = ch.U(w);
      const Mat2 dphi_n = ch.dphi(np);
      for (int k = 1; k <= k_max; ++k) {
        const double wk = std::pow(w, k);
        const Vec2 dn(-p(0) * std::exp(-uu) * wk, p(1) * std::exp(uu) * wk);
        jac->block(2 * s, n_free + k - 1, 2, 1) = -dphi_n * dn;
      }
    }
  };

  auto apply = [&](NormalFormChart& ch, const Vec& delta) {
    for (int f = 0; f < n_free; ++f) {
      const auto [comp, m] = free[static_cast<std::size_t>(f)];
      ch.coeffs(comp, m) += delta(f);
    }
    for (int k = 1; k <= k_max; ++k)
      ch.u_series[static_cast<std::size_t>(k)] += delta(n_free + k - 1) / ch.period;
  };

  Vec res;
  Mat jac;
  double last = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opts.max_iterations; ++it) {
    residuals(c, true, &res, &jac);
    const double now = res.lpNorm<Eigen::Infinity>();
    c.fit_residual = now;
    c.iterations = it;
    if (now < 1e-15 || now > 0.999 * last) break;
    last = now;
    Vec scale = jac.colwise().norm().transpose();
    for (int i = 0; i < scale.size(); ++i)
      if (scale(i) == 0.0) scale(i) = 1.0;
    const Mat js = jac * scale.cwiseInverse().asDiagonal();
    Eigen::ColPivHouseholderQR<Mat> qr(js);
    if (qr.rank() < n_unknowns)
      fail_numerical("fit_normal_form: ill-conditioned conjugacy solve (resonance)",
                     "{\"rank\": " + std::to_string(qr.rank()) + "}");
    const Vec delta = (qr.solve(-res)).cwiseQuotient(scale);
    apply(c, delta);
    if (delta.lpNorm<Eigen::Infinity>() < 1e-15) {
      residuals(c, false, &res, nullptr);
      c.fit_residual = res.lpNorm<Eigen::Infinity>();
      c.iterations = it + 1;
      break;
    }
  }

  // Out-of-sample check on a staggered grid.
  const int ng = opts.grid - 1;
  std::vector<Vec2> check;
  for (int a = 0; a < ng; ++a)
    for (int b = 0; b < ng; ++b)
      check.emplace_back(-radius + (2 * a + 1) * radius / ng,
                         (-radius + (2 * b + 1) * radius / ng) / mu_u);
  std::vector<double> err(check.size(), 0.0);
  parallel_for(check.size(), opts.workers, [&](std::size_t i) {
    auto pv = section_return(model, c, c.phi(check[i]), opts.integrate);
    err[i] = pv ? (*pv - c.phi(c.normal_map(check[i]))).lpNorm<Eigen::Infinity>()
                : std::numeric_limits<double>::infinity();
  });
  c.validation_residual = *std::max_element(err.begin(), err.end());
  if (!(c.fit_residual < opts.tol_nf) || !(c.validation_residual < opts.tol_nf))
    fail_numerical("fit_normal_form: residual above tol_nf; shrink the radius",
                   "{\"fit_residual\": " + fmt(c.fit_residual) +
                       ", \"validation_residual\": " + fmt(c.validation_residual) + "}");
  return c;
}

DriftReport normal_form_drift(const FlowModel& model, const NormalFormChart& chart,
                              std::size_t n_trajectories, int workers,
                              const IntegrateOptions& io) {
  DriftReport rep;
  rep.trajectories = n_trajectories;
  const double d = chart.radius;
  std::vector<double> drift(n_trajectories, 0.0);
  std::vector<std::size_t> count(n_trajectories, 0);
  const SectionSpec spec = shifted_spec(model, chart.section, chart.period);
  const Vec shift = spec.anchor - chart.section.spec.anchor;
  parallel_for(n_trajectories, workers, [&](std::size_t i) {
    const double s = n_trajectories > 1 ? static_cast<double>(i) / (n_trajectories - 1) : 0.5;
    const double x0 = (i % 2 == 0 ? 1.0 : -1.0) * d * (0.3 + 0.65 * s);
    const double y0 = d * std::pow(chart.mu_u, -3.0) * (0.2 + 0.8 * std::fmod(7.0 * s, 1.0)) *
                      (i % 4 < 2 ? 1.0 : -1.0);
    const Vec2 p0(x0, y0);
    const double w0 = x0 * y0;
    Vec z = chart.section.embed(model, chart.phi(p0));
    for (int step = 0; step < 64; ++step) {
      auto hit = integrate_to_section(model, z, 0.0, 2.0 * chart.period, spec, 0.5 * chart.period,
                                      io);
      if (!hit) break;
      z = unshift(model, hit->state, shift);
      const Vec2 p = chart.phi_inverse(chart.section.coords(z));
      if (p.lpNorm<Eigen::Infinity>() > d) break;
      drift[i] = std::max(drift[i], std::abs(p(0) * p(1) - w0));
      ++count[i];
    }
  });
  for (std::size_t i = 0; i < n_trajectories; ++i) {
    rep.max_drift = std::max(rep.max_drift, drift[i]);
    rep.returns += count[i];
  }
  return rep;
}


// ---------------------------------------------------------------- lifts

std::string to_string(LiftKind k) {
  switch (k) {
    case LiftKind::LocalExterior: return "local_exterior";
    case LiftKind::LocalInterior: return "local_interior";
    case LiftKind::Global: return "global";
    case LiftKind::Composed: return "composed";
    case LiftKind::Identity: return "identity";
  }
  return "identity";
}

double TransitionLift::twist(double r) const {
  if (!g || !h) fail_validation("twist: lift has no (g, h) decomposition");
  return g(r) - h(r) * std::log(r);
}

TransitionLift log_twist_lift(std::function<double(double)> g, std::function<double(double)> h,
                              double r_max, const std::string& description) {
  if (!(r_max > 0.0)) fail_validation("log_twist_lift: r_max must be positive");
  TransitionLift l;
  l.kind = LiftKind::LocalExterior;
  l.description = description;
  l.g = std::move(g);
  l.h = std::move(h);
  l.h0 = l.h(0.0);
  l.r_max = r_max;
  l.preserves_r = true;
  l.chain_length = 1;
  auto gg = l.g;
  auto hh = l.h;
  l.eval = [gg, hh](const Vec2& tr) -> Vec2 {
    if (!(tr(1) > 0.0)) fail_validation("lift: r must be positive");
    return Vec2(tr(0) + gg(tr(1)) - hh(tr(1)) * std::log(tr(1)), tr(1));
  };
  return l;
}

TransitionLift local_exterior_lift(const LocalModelParams& params, double delta) {
  params.validate();
  if (!(delta > 0.0) || !(delta < params.radius))
    fail_validation("local_exterior_lift: delta must lie in (0, radius), got " + fmt(delta));
  const double w_max = delta * delta / 4.0;
  for (double w : linspace(0.0, w_max, 65))
    if (!(params.u(w) > 0.0))
      fail_validation("local_exterior_lift: u must stay positive on the chart");
  const double T = params.period;
  auto h = [params, delta, T](double r) { return 1.0 / (T * params.u(delta * r / 2.0)); };
  const double ld = std::log(delta / 2.0);
  auto g = [h, ld](double r) { return ld * h(r); };
  TransitionLift l = log_twist_lift(g, h, delta / 2.0, "local exterior passage");
  l.delta = delta;
  return l;
}

TransitionLift local_exterior_lift(const NormalFormChart& chart, double delta) {
  LocalModelParams p;
  p.period = chart.period;
  p.u_series = chart.u_series;
  p.radius = chart.radius;
  return local_exterior_lift(p, delta);
}

namespace {

std::function<Vec2(const Vec2&)> passage_eval(const FlowModel& model, const SectionChart& from,
                                              const SectionChart& to, const GlobalLiftOptions& o) {
  return [&model, from, to, o](const Vec2& tr) -> Vec2 {
    const double n = std::floor(tr(0));
    const Vec z = from.embed(Vec2(tr(0) - n, tr(1)));
    auto hit = integrate_to_section(model, z, 0.0, o.max_time, to.section, 1e-9, o.integrate);
    if (!hit)
      fail_numerical("lift: seed does not reach the target section", pair_witness(tr(0), tr(1)));
    if (std::abs(hit->transversality) < model.tol.transverse)
      fail_numerical("lift: non-transverse arrival", pair_witness(tr(0), tr(1)));
    Vec2 out = to.coords(hit->state);
    out(0) += n;
    return out;
  };
}

}  // namespace

TransitionLift numerical_lift(const FlowModel& model, const SectionChart& from,
                              const SectionChart& to, double r_max, LiftKind kind,
                              const GlobalLiftOptions& opts) {
  TransitionLift l;
  l.kind = kind;
  l.description = kind == LiftKind::LocalInterior ? "numerical interior passage"
                                                  : "numerical passage";
  l.r_max = r_max;
  l.chain_length = 1;
  l.eval = passage_eval(model, from, to, opts);
  return l;
}

TransitionLift global_lift(const FlowModel& model, const SectionChart& from,
                           const SectionChart& to, const std::vector<double>& t_grid,
                           const std::vector<double>& r_grid, GlobalLiftFit* fit,
                           const GlobalLiftOptions& opts) {
  if (t_grid.size() < 3 || r_grid.size() < 3)
    fail_validation("global_lift: grid needs at least 3 samples per axis");
  for (double r : r_grid)
    if (r < 0.0) fail_validation("global_lift: r samples must be non-negative");
  const double r_max = *std::max_element(r_grid.begin(), r_grid.end());
  TransitionLift l = numerical_lift(model, from, to, r_max, LiftKind::Global, opts);
  l.description = "global passage";

  const std::size_t nt = t_grid.size(), nr = r_grid.size();
  std::vector<Vec2> val(nt * nr);
  parallel_for(nt, opts.workers, [&](std::size_t i) {
    for (std::size_t j = 0; j < nr; ++j) val[i * nr + j] = l.eval(Vec2(t_grid[i], r_grid[j]));
  });

  GlobalLiftFit f;
  f.t = t_grid;
  f.H.resize(nt);
  f.A = std::numeric_limits<double>::infinity();
  f.B = 0.0;
  f.min_Ytilde = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nt; ++i) {
    // T(t_i, r) ~ H + c1 r + c2 r^2 by least squares in r.
    Mat a(static_cast<Eigen::Index>(nr), 3);
    Vec b(static_cast<Eigen::Index>(nr));
    for (std::size_t j = 0; j < nr; ++j) {
      const double r = r_grid[j];
      a.row(static_cast<Eigen::Index>(j)) << 1.0, r, r * r;
      b(static_cast<Eigen::Index>(j)) = val[i * nr + j](0);
    }
    f.H[i] = a.colPivHouseholderQr().solve(b)(0);
    for (std::size_t j = 0; j < nr; ++j) {
      const double r = r_grid[j];
      if (r <= 0.0) continue;
      const Vec2& v = val[i * nr + j];
      f.max_remainder = std::max(f.max_remainder, std::abs(v(0) - f.H[i]) / r);
      const double y = v(1) / r;
      f.A = std::min(f.A, y);
      f.B = std::max(f.B, y);
      f.min_Ytilde = std::min(f.min_Ytilde, y);
    }
  }
  f.min_dH = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(nt);
  for (std::size_t i = 0; i < nt; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return t_grid[a] < t_grid[b]; });
  for (std::size_t k = 0; k < nt; ++k) {
    const std::size_t a = order[k];
    const std::size_t b = order[(k + 1) % nt];
    const double dt = t_grid[b] - t_grid[a] + (k + 1 == nt ? 1.0 : 0.0);
    const double dh = f.H[b] - f.H[a] + (k + 1 == nt ? 1.0 : 0.0);
    if (dt > 0.0) f.min_dH = std::min(f.min_dH, dh / dt);
  }
  f.h_monotone = f.min_dH > 0.0;
  f.y_positive = f.min_Ytilde > 0.0;
  if (!f.y_positive)
    fail_numerical("global_lift: R/r changes sign; check the model and section configuration",
                   "{\"min_R_over_r\": " + fmt(f.min_Ytilde) + "}");
  if (fit) *fit = f;
  return l;
}

// ---------------------------------------------------------------- certificates

TwistCertificate certify_lift(const TransitionLift& lift, const CertificateOptions& opts) {
  if (opts.t_samples < 1 || opts.r_samples < 2)
    fail_validation("certify_lift: sample counts too small");
  if (!(opts.r_min > 0.0)) fail_validation("certify_lift: r_min must be positive");
  TwistCertificate cert;
  const std::size_t nt = static_cast<std::size_t>(opts.t_samples);
  const std::size_t nr = static_cast<std::size_t>(opts.r_samples);
  auto t_of = [nt](std::size_t i) { return static_cast<double>(i) / static_cast<double>(nt); };

  // C is half the twist rate seen at r_min; r0 is then the largest dyadic
  // radius below which every sample satisfies the inequalities with margin.
  std::vector<Vec2> deep(nt);
  parallel_for(nt, opts.workers, [&](std::size_t i) { deep[i] = lift.eval(Vec2(t_of(i), opts.r_min)); });
  double rate = std::numeric_limits<double>::infinity();
  bool identity = true;
  for (std::size_t i = 0; i < nt; ++i) {
    const double shift = deep[i](0) - t_of(i);
    rate = std::min(rate, shift / -std::log(opts.r_min));
    identity = identity && std::abs(shift) < 1e-14 && std::abs(deep[i](1) / opts.r_min - 1.0) < 1e-14;
  }
  if (identity) {
    cert.trivial = true;
    cert.valid = true;
    cert.A = cert.B = 1.0;
    cert.r0 = std::min(lift.r_max, 1.0);
    cert.samples = nt;
    return cert;
  }
  if (!(rate > 0.0)) {
    cert.failure = "no positive twist at r_min";
    cert.violating_sample = Vec2(0.0, opts.r_min);
    return cert;
  }
  cert.C = 0.5 * rate;

  const double top = std::min(lift.r_max, 0.5);
  int m = static_cast<int>(std::ceil(-std::log2(top) - 1e-12));
  for (;; ++m) {
    const double r0 = std::ldexp(1.0, -m);
    if (r0 <= 2.0 * opts.r_min) {
      if (cert.failure.empty()) cert.failure = "no dyadic radius above r_min satisfies the inequalities";
      return cert;
    }
    const auto rs = geomspace(opts.r_min, r0, nr);
    std::vector<double> shift(nt * nr), y(nt * nr);
    parallel_for(nt, opts.workers, [&](std::size_t i) {
      for (std::size_t j = 0; j < nr; ++j) {
        const Vec2 v = lift.eval(Vec2(t_of(i), rs[j]));
        shift[i * nr + j] = v(0) - t_of(i);
        y[i * nr + j] = v(1) / rs[j];
      }
    });
    std::size_t bad = nt * nr;
    for (std::size_t k = 0; k < nt * nr && bad == nt * nr; ++k) {
      const double need = opts.margin * cert.C * -std::log(rs[k % nr]);
      if (!(shift[k] >= need) || !(y[k] > 0.0) || !std::isfinite(y[k])) bad = k;
    }
    if (bad < nt * nr) {
      cert.failure = "twist inequality fails";
      cert.violating_sample = Vec2(t_of(bad / nr), rs[bad % nr]);
      continue;
    }
    cert.A = *std::min_element(y.begin(), y.end()) / opts.margin;
    cert.B = *std::max_element(y.begin(), y.end()) * opts.margin;
    cert.r0 = r0;
    cert.samples = nt * nr;
    cert.valid = true;
    cert.failure.clear();
    return cert;
  }
}

TransitionLift compose_lifts(const std::vector<TransitionLift>& chain,
                             const CertificateOptions& opts) {
  TransitionLift out;
  out.kind = chain.empty() ? LiftKind::Identity : LiftKind::Composed;
  if (chain.empty()) {
    out.description = "identity";
    out.eval = [](const Vec2& tr) -> Vec2 { return tr; };
    out.r_max = 1.0;
    out.preserves_r = true;
    TwistCertificate c;
    c.valid = true;
    c.trivial = true;
    c.A = c.B = 1.0;
    out.certificate = c;
    return out;
  }
  std::vector<std::function<Vec2(const Vec2&)>> fns;
  out.r_max = std::numeric_limits<double>::infinity();
  out.preserves_r = true;
  std::string desc;
  for (const auto& l : chain) {
    if (!l.eval) fail_validation("compose_lifts: lift without evaluator");
    fns.push_back(l.eval);
    out.r_max = std::min(out.r_max, l.r_max);
    out.preserves_r = out.preserves_r && l.preserves_r;
    out.h0 += l.h0;
    out.chain_length += std::max<std::size_t>(1, l.chain_length);
    desc += (desc.empty() ? "" : " then ") + l.description;
  }
  out.description = desc;
  out.eval = [fns](const Vec2& tr) -> Vec2 {
    Vec2 v = tr;
    for (const auto& f : fns) v = f(v);
    return v;
  };
  out.certificate = certify_lift(out, opts);
  return out;
}

// ---------------------------------------------------------------- twist fixed points

std::vector<TwistFixedPoint> find_twist_periodic_points(const TransitionLift& lift,
                                                        const std::vector<int>& ks,
                                                        const TwistSearchOptions& opts) {
  if (!lift.eval) fail_validation("find_twist_periodic_points: lift without evaluator");
  if (opts.t_samples < 4) fail_validation("find_twist_periodic_points: t_samples too small");
  const double r_top = lift.certificate && lift.certificate->valid && lift.certificate->r0 > 0.0
                           ? lift.certificate->r0
                           : lift.r_max;
  const double lr_lo = std::log(opts.r_min), lr_hi = std::log(r_top);
  std::vector<TwistFixedPoint> out(ks.size());

  parallel_for(ks.size(), opts.workers, [&](std::size_t idx) {
    const int k = ks[idx];
    TwistFixedPoint fp;
    fp.k = k;
    auto F = [&](double t, double lr) {
      const double r = std::exp(lr);
      const Vec2 v = lift.eval(Vec2(t, r));
      return Vec2(v(0) - t - k, v(1) / r - 1.0);
    };
    // Twist level curve r_k(t) by bisection in ln r.
    auto level = [&](double t) -> std::optional<double> {
      double a = lr_lo, b = lr_hi;
      double fa = F(t, a)(0), fb = F(t, b)(0);
      if (!(fa > 0.0 && fb < 0.0)) return std::nullopt;
      for (int it = 0; it < 80 && b - a > 1e-13; ++it) {
        const double c = 0.5 * (a + b);
        const double fc = F(t, c)(0);
        (fc > 0.0 ? a : b) = c;
      }
      return 0.5 * (a + b);
    };
    const int nt = opts.t_samples;
    std::vector<double> lr(static_cast<std::size_t>(nt)), f2(static_cast<std::size_t>(nt));
    for (int i = 0; i < nt; ++i) {
      const double t = static_cast<double>(i) / nt;
      auto l = level(t);
      if (!l) {
        fp.status = "not bracketed";
        out[idx] = fp;
        return;
      }
      lr[static_cast<std::size_t>(i)] = *l;
      f2[static_cast<std::size_t>(i)] = F(t, *l)(1);
    }
    const double spread = *std::max_element(f2.begin(), f2.end(), [](double a, double b) {
      return std::abs(a) < std::abs(b);
    });
    if (std::abs(spread) < 1e-12) {
      fp.found = true;
      fp.degenerate = true;
      fp.status = "degenerate: R = r on the whole level curve";
      fp.t = 0.0;
      fp.r = std::exp(lr[0]);
      const Vec2 res = F(0.0, lr[0]);
      fp.residual = res.lpNorm<Eigen::Infinity>();
      out[idx] = fp;
      return;
    }
    int seg = -1;
    for (int i = 0; i < nt && seg < 0; ++i) {
      const double a = f2[static_cast<std::size_t>(i)];
      const double b = f2[static_cast<std::size_t>((i + 1) % nt)];
      if ((a <= 0.0 && b > 0.0) || (a >= 0.0 && b < 0.0)) seg = i;
    }
    if (seg < 0) {
      fp.status = "no sign change of R/r - 1 along the level curve";
      out[idx] = fp;
      return;
    }
    // Refine along the level curve, then polish with 2-d Newton.
    double ta = static_cast<double>(seg) / nt, tb = ta + 1.0 / nt;
    double fa = f2[static_cast<std::size_t>(seg)];
    for (int it = 0; it < 40; ++it) {
      const double tm = 0.5 * (ta + tb);
      auto l = level(tm);
      if (!l) break;
      const double fm = F(tm, *l)(1);
      if ((fm > 0.0) == (fa > 0.0)) {
        ta = tm;
        fa = fm;
      } else {
        tb = tm;
      }
    }
    double t = 0.5 * (ta + tb);
    double l0 = level(t).value_or(lr[static_cast<std::size_t>(seg)]);
    Vec2 x(t, l0);
    Vec2 fx = F(x(0), x(1));
    for (int it = 0; it < 30 && fx.lpNorm<Eigen::Infinity>() > 1e-14; ++it) {
      Mat2 j;
      const double eps = 1e-7;
      j.col(0) = (F(x(0) + eps, x(1)) - F(x(0) - eps, x(1))) / (2 * eps);
      j.col(1) = (F(x(0), x(1) + eps) - F(x(0), x(1) - eps)) / (2 * eps);
      const Vec2 step = j.fullPivLu().solve(-fx);
      Vec2 xn = x + step;
      Vec2 fn = F(xn(0), xn(1));
      double lam = 1.0;
      while (fn.lpNorm<Eigen::Infinity>() > fx.lpNorm<Eigen::Infinity>() && lam > 1e-4) {
        lam *= 0.5;
        xn = x + lam * step;
        fn = F(xn(0), xn(1));
      }
      if (fn.lpNorm<Eigen::Infinity>() >= fx.lpNorm<Eigen::Infinity>()) break;
      x = xn;
      fx = fn;
    }
    fp.t = x(0) - std::floor(x(0));
    fp.r = std::exp(x(1));
    fp.residual = fx.lpNorm<Eigen::Infinity>();
    fp.found = fp.residual < 1e-8;
    fp.status = fp.found ? "converged" : "newton did not converge";
    out[idx] = fp;
  });
  return out;
}

// ---------------------------------------------------------------- spiral

SpiralReport check_monotone_spiral(const TransitionLift& lift,
                                   const std::function<double(double)>& t_of_s, double a, int n,
                                   double s_max, int decades) {
  if (!(a > 0.0) || n < 1 || decades < 2) fail_validation("check_monotone_spiral: bad curve");
  if (a * std::pow(s_max, n) > lift.r_max)
    fail_validation("check_monotone_spiral: curve leaves the lift domain");
  const int per = 50;
  const auto ss = geomspace(s_max, s_max * std::pow(10.0, -decades),
                            static_cast<std::size_t>(per * decades + 1));
  std::vector<double> tt(ss.size()), rr(ss.size());
  for (std::size_t i = 0; i < ss.size(); ++i) {
    const double r = a * std::pow(ss[i], n);
    const Vec2 v = lift.eval(Vec2(t_of_s(ss[i]), r));
    tt[i] = v(0);
    rr[i] = v(1);
  }
  SpiralReport rep;
  rep.monotone = true;
  for (std::size_t i = 1; i < ss.size(); ++i)
    rep.monotone = rep.monotone && tt[i] > tt[i - 1] && rr[i] < rr[i - 1];
  auto slope = [&](std::size_t i0, std::size_t i1) {
    return std::abs((rr[i1] - rr[i0]) / (tt[i1] - tt[i0]));
  };
  rep.initial_slope = slope(0, per);
  rep.final_slope = slope(ss.size() - 1 - per, ss.size() - 1);
  rep.slope_ratio = rep.final_slope / rep.initial_slope;
  return rep;
}


// ---------------------------------------------------------------- branches

std::string to_string(BranchClass c) {
  switch (c) {
    case BranchClass::Coincident: return "coincident";
    case BranchClass::ScenarioB: return "scenario-b";
    case BranchClass::ScenarioC: return "scenario-c";
    case BranchClass::Undetermined: return "undetermined";
  }
  return "undetermined";
}

namespace {

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double s = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - a - s * ab).norm();
}

}  // namespace

ClassifyResult classify_branch(const Circle2& stable,
                               const std::function<Vec2(const Vec2&)>& psi,
                               const Circle2& unstable, double tol_circle, int samples) {
  if (!(stable.radius > 0.0) || !(unstable.radius > 0.0))
    fail_validation("classify_branch: circle radii must be positive");
  if (!(tol_circle > 0.0)) fail_validation("classify_branch: tol_circle must be positive");
  if (samples < 16) fail_validation("classify_branch: too few samples");
  const std::size_t n = static_cast<std::size_t>(samples);
  std::vector<Vec2> img(n);
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = kTwoPi * static_cast<double>(i) / static_cast<double>(n);
    img[i] = psi(unstable.center + unstable.radius * Vec2(std::cos(a), std::sin(a)));
    d[i] = (img[i] - stable.center).norm() - stable.radius;
  }
  ClassifyResult res;
  res.min_signed = *std::min_element(d.begin(), d.end());
  res.max_signed = *std::max_element(d.begin(), d.end());
  double h1 = 0.0;
  for (double x : d) h1 = std::max(h1, std::abs(x));
  double h2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = kTwoPi * static_cast<double>(i) / static_cast<double>(n);
    const Vec2 p = stable.center + stable.radius * Vec2(std::cos(a), std::sin(a));
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) best = std::min(best, segment_distance(p, img[k], img[(k + 1) % n]));
    h2 = std::max(h2, best);
  }
  res.hausdorff = std::max(h1, h2);

  // Crossings: sign changes of the signed distance; tangencies: local minima
  // of |d| below tolerance without a sign change.
  for (std::size_t i = 0; i < n; ++i) {
    const double a = d[i], b = d[(i + 1) % n];
    if ((a < 0.0) != (b < 0.0)) {
      ++res.transverse_crossings;
      const double s = a / (a - b);
      res.intersection_points.push_back(img[i] + s * (img[(i + 1) % n] - img[i]));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double prev = std::abs(d[(i + n - 1) % n]), cur = std::abs(d[i]),
                 next = std::abs(d[(i + 1) % n]);
    const bool same_sign = (d[(i + n - 1) % n] < 0.0) == (d[(i + 1) % n] < 0.0);
    if (cur < tol_circle && cur <= prev && cur < next && same_sign) {
      ++res.tangencies;
      res.intersection_points.push_back(img[i]);
    }
  }

  if (res.hausdorff < tol_circle)
    res.cls = BranchClass::Coincident;
  else if (res.hausdorff <= 10.0 * tol_circle)
    res.cls = BranchClass::Undetermined;
  else if (res.min_signed < -tol_circle)
    res.cls = BranchClass::ScenarioC;
  else
    res.cls = BranchClass::ScenarioB;
  return res;
}

bool FoliationSchema::contains(FamilyId id) const {
  auto it = k_tilde.find(id.first);
  return it != k_tilde.end() && id.second >= 1 && id.second <= it->second;
}

ClassifyResult classify_family(FoliationSchema& schema, FamilyId id,
                               const std::function<Vec2(const Vec2&)>& psi, double tol_circle) {
  if (!schema.contains(id)) fail_validation("classify: unknown family");
  auto it = schema.circles.find(id);
  if (it == schema.circles.end()) fail_validation("classify: family has no circles recorded");
  ClassifyResult r = classify_branch(it->second.first, psi, it->second.second, tol_circle);
  schema.classification[id] = r.cls;
  return r;
}

ForwardingTrace iterate_disk_forwarding(const FoliationSchema& schema, FamilyId start,
                                        const ForwardingOracle& oracle, int overlap_samples) {
  if (!schema.contains(start)) fail_validation("forward: unknown start family");
  if (!oracle.meets_stable) fail_validation("forward: oracle has no intersection test");
  if (!(schema.disk_area > 0.0)) fail_validation("forward: disk area must be positive");
  if (schema.equal_area) {
    for (const auto& [id, a] : schema.areas)
      if (std::abs(a - schema.disk_area) > schema.tol_area)
        fail_validation("forward: equal-area hypothesis violated by family (" +
                        std::to_string(id.first) + ", " + std::to_string(id.second) + ")");
  }
  const auto [j, k] = start;
  const int kt = schema.k_tilde.at(j);
  ForwardingTrace tr;
  tr.start = start;
  tr.bound = static_cast<int>(std::floor(schema.available_area / schema.disk_area + 1e-12));
  std::vector<DiskFootprint> feet;
  for (int n = 0;; ++n) {
    const int kn = ((k - 1 + n) % kt) + 1;
    tr.sequence.emplace_back(j, kn);
    if (oracle.footprint) {
      const DiskFootprint fp = oracle.footprint(j, k, n);
      for (std::size_t m = 0; m < feet.size(); ++m) {
        // Sampled pairwise disjointness of forwarded disks.
        for (int s = 0; s <= overlap_samples; ++s) {
          const double x = fp.lo + (fp.hi - fp.lo) * (s + 0.5) / (overlap_samples + 1);
          if (x > feet[m].lo && x < feet[m].hi)
            throw Error(ErrorKind::Numerical, "forward: forwarded disks overlap",
                        "{\"step\": " + std::to_string(n) + ", \"earlier\": " +
                            std::to_string(m) + "}");
        }
      }
      feet.push_back(fp);
    }
    if (oracle.meets_stable(j, k, n)) {
      tr.steps = n;
      tr.image = FamilyId(j, kn);
      return tr;
    }
    if (n + 1 > tr.bound)
      throw Error(ErrorKind::Numerical, "forward: area bound exceeded",
                  "{\"steps\": " + std::to_string(n + 1) + ", \"bound\": " +
                      std::to_string(tr.bound) + "}");
  }
}

// ---------------------------------------------------------------- serialization

namespace {
Json vec_json(const Vec& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }
Json circle_json(const Circle2& c) {
  return Json{{"center", {c.center(0), c.center(1)}}, {"radius", c.radius}};
}
Circle2 circle_from(const Json& j) {
  Circle2 c;
  if (!j.contains("center") || !j.at("center").is_array() || j.at("center").size() != 2)
    fail_validation("schema: circle 'center' must be a 2-vector");
  c.center = Vec2(j.at("center")[0].get<double>(), j.at("center")[1].get<double>());
  c.radius = j.at("radius").get<double>();
  return c;
}
BranchClass branch_from(const std::string& s) {
  if (s == "coincident") return BranchClass::Coincident;
  if (s == "scenario-b") return BranchClass::ScenarioB;
  if (s == "scenario-c") return BranchClass::ScenarioC;
  if (s == "undetermined") return BranchClass::Undetermined;
  fail_validation("schema: unknown classification '" + s + "'");
}
}  // namespace

FoliationSchema schema_from_json(const Json& j) {
  if (!j.is_object()) fail_validation("schema: document must be an object");
  FoliationSchema s;
  if (!j.contains("families") || !j.at("families").is_array())
    fail_validation("schema: 'families' must be an array");
  s.disk_area = j.value("disk_area", 1.0);
  s.available_area = j.value("available_area", 1.0);
  s.equal_area = j.value("equal_area", true);
  s.tol_area = j.value("tol_area", 1e-9);
  for (const auto& f : j.at("families")) {
    const int jj = f.at("j").get<int>();
    const int kk = f.at("k").get<int>();
    if (kk < 1 || jj < 1) fail_validation("schema: family indices are 1-based");
    s.k_tilde[jj] = std::max(s.k_tilde[jj], kk);
    if (f.contains("area")) s.areas[{jj, kk}] = f.at("area").get<double>();
    if (f.contains("stable") && f.contains("unstable"))
      s.circles[{jj, kk}] = {circle_from(f.at("stable")), circle_from(f.at("unstable"))};
    if (f.contains("classification"))
      s.classification[{jj, kk}] = branch_from(f.at("classification").get<std::string>());
  }
  return s;
}

Json to_json(const FoliationSchema& s) {
  Json fam = Json::array();
  for (const auto& [j, kt] : s.k_tilde)
    for (int k = 1; k <= kt; ++k) {
      Json f{{"j", j}, {"k", k}};
      if (auto it = s.areas.find({j, k}); it != s.areas.end()) f["area"] = it->second;
      if (auto it = s.circles.find({j, k}); it != s.circles.end()) {
        f["stable"] = circle_json(it->second.first);
        f["unstable"] = circle_json(it->second.second);
      }
      if (auto it = s.classification.find({j, k}); it != s.classification.end())
        f["classification"] = to_string(it->second);
      fam.push_back(f);
    }
  return Json{{"families", fam},
              {"disk_area", s.disk_area},
              {"available_area", s.available_area},
              {"equal_area", s.equal_area},
              {"tol_area", s.tol_area}};
}

Json to_json(const ForwardingTrace& t) {
  Json seq = Json::array();
  for (const auto& [j, k] : t.sequence) seq.push_back({j, k});
  return Json{{"start", {t.start.first, t.start.second}},
              {"image", {t.image.first, t.image.second}},
              {"steps", t.steps},
              {"bound", t.bound},
              {"sequence", seq}};
}

Json to_json(const ClassifyResult& c) {
  Json pts = Json::array();
  for (const auto& p : c.intersection_points) pts.push_back({p(0), p(1)});
  return Json{{"classification", to_string(c.cls)},
              {"hausdorff", c.hausdorff},
              {"min_signed_distance", c.min_signed},
              {"max_signed_distance", c.max_signed},
              {"transverse_crossings", c.transverse_crossings},
              {"tangencies", c.tangencies},
              {"intersection_points", pts}};
}

Json to_json(const NormalFormChart& c) {
  Json mono = Json::array();
  for (std::size_t m = 0; m < c.monomials.size(); ++m)
    mono.push_back({{"x", c.monomials[m].first},
                    {"y", c.monomials[m].second},
                    {"a", c.coeffs(0, static_cast<Eigen::Index>(m))},
                    {"b", c.coeffs(1, static_cast<Eigen::Index>(m))}});
  return Json{{"orbit_ref", c.orbit_ref},
              {"period", c.period},
              {"radius", c.radius},
              {"order", c.order},
              {"unstable_multiplier", c.mu_u},
              {"u_series", c.u_series},
              {"conjugacy", mono},
              {"fit_residual", c.fit_residual},
              {"validation_residual", c.validation_residual},
              {"iterations", c.iterations},
              {"section",
               {{"z0", vec_json(c.section.z0)},
                {"normal", vec_json(c.section.spec.normal)},
                {"v_s", vec_json(c.section.v_s)},
                {"v_u", vec_json(c.section.v_u)}}}};
}

Json to_json(const TwistCertificate& c) {
  Json j{{"valid", c.valid}, {"trivial", c.trivial}, {"C", c.C},
         {"A", c.A},         {"B", c.B},             {"r0", c.r0},
         {"samples", c.samples}};
  if (!c.valid) {
    j["failure"] = c.failure;
    j["violating_sample"] = {{"t", c.violating_sample(0)}, {"r", c.violating_sample(1)}};
  }
  return j;
}

Json to_json(const TwistFixedPoint& p) {
  return Json{{"k", p.k},       {"found", p.found}, {"degenerate", p.degenerate},
              {"status", p.status}, {"t", p.t},     {"r", p.r},
              {"residual", p.residual}};
}

Json to_json(const GlobalLiftFit& f) {
  return Json{{"t", f.t},
              {"H", f.H},
              {"min_dH", f.min_dH},
              {"max_remainder_over_r", f.max_remainder},
              {"A", f.A},
              {"B", f.B},
              {"h_monotone", f.h_monotone},
              {"ytilde_positive", f.y_positive}};
}

Json lift_summary(const TransitionLift& l) {
  Json j{{"kind", to_string(l.kind)},
         {"description", l.description},
         {"r_max", l.r_max},
         {"preserves_r", l.preserves_r},
         {"chain_length", l.chain_length}};
  if (l.g && l.h) {
    j["h0"] = l.h0;
    j["delta"] = l.delta;
    Json table = Json::array();
    for (int m = 1; m <= 20; ++m) {
      const double r = l.r_max * std::ldexp(1.0, -m + 1);
      table.push_back({{"r", r}, {"g", l.g(r)}, {"h", l.h(r)}, {"dt", l.twist(r)}});
    }
    j["ladder"] = table;
  }
  if (l.certificate) j["certificate"] = to_json(*l.certificate);
  return j;
}

}  // namespace reeb
