#include "reeb/orbits.hpp"

#include "reeb/parallel.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace reeb {

namespace {

Json vec_json(const Vec& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Vec json_vec(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Mat2 transverse_matrix(const FlowModel& model, const Vec& z, const Mat& phi) {
  const auto e = model.frame_at(z);
  const int n = model.dim;
  Mat basis(n, 3);
  basis.col(0) = e[0];
  basis.col(1) = e[1];
  basis.col(2) = model.field(z);
  const auto qr = basis.colPivHouseholderQr();
  Mat2 m;
  for (int i = 0; i < 2; ++i) {
    const Vec c = qr.solve(Vec(phi * e[i]));
    m(0, i) = c(0);
    m(1, i) = c(1);
  }
  return m;
}

std::array<std::complex<double>, 2> sorted_pair(std::complex<double> a, std::complex<double> b) {
  if (std::abs(a) > std::abs(b) || (std::abs(a) == std::abs(b) && a.imag() > b.imag()))
    std::swap(a, b);
  return {a, b};
}

int mobius(int n) {
  int result = 1;
  for (int p = 2; p * p <= n; ++p) {
    if (n % p == 0) {
      n /= p;
      if (n % p == 0) return 0;
      result = -result;
    }
  }
  if (n > 1) result = -result;
  return result;
}

// Points closer than tol are merged; the representative is the
// lexicographically smallest.
std::vector<Vec2> dedupe(std::vector<Vec2> pts, double tol) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a(0) < b(0) || (a(0) == b(0) && a(1) < b(1));
  });
  std::vector<Vec2> out;
  for (const auto& p : pts) {
    bool dup = false;
    for (auto it = out.rbegin(); it != out.rend(); ++it) {
      if (p(0) - (*it)(0) > tol) break;
      if ((p - *it).norm() <= tol) {
        dup = true;
        break;
      }
    }
    if (!dup) out.push_back(p);
  }
  return out;
}

void finish_table(GrowthTable& g) {
  long long cumulative = 0;
  for (auto& row : g.rows) {
    long long acc = 0;
    for (int d = 1; d <= row.n; ++d)
      if (row.n % d == 0) acc += mobius(row.n / d) * g.rows[d - 1].fixed_points;
    row.primitive_orbits = acc / row.n;
    cumulative += row.primitive_orbits;
    row.orbits_up_to = cumulative;
  }
  const int n_max = static_cast<int>(g.rows.size());
  const int start = std::max(1, (n_max + 1) / 2);
  std::vector<double> xs, ys;
  for (int n = start; n <= n_max; ++n) {
    const auto f = g.rows[n - 1].fixed_points;
    if (f > 0) {
      xs.push_back(n);
      ys.push_back(std::log(static_cast<double>(f)));
    }
  }
  if (xs.size() < 3) {
    g.stable_fit = false;
    g.note = "insufficient range for a stable fit";
    if (xs.size() >= 2) g.growth_rate = (ys.back() - ys.front()) / (xs.back() - xs.front());
    return;
  }
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  g.growth_rate = sxy / sxx;
  double sse = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (my + g.growth_rate * (xs[i] - mx));
    sse += e * e;
  }
  g.growth_stderr = std::sqrt(sse / static_cast<double>(xs.size() - 2) / sxx);
  g.stable_fit = true;
}

}  // namespace

std::string to_string(OrbitClass c) {
  switch (c) {
    case OrbitClass::Elliptic: return "elliptic";
    case OrbitClass::Hyperbolic: return "hyperbolic";
    case OrbitClass::Degenerate: return "degenerate";
  }
  return "degenerate";
}

double PeriodicOrbit::amplitude(int coord) const {
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& s : samples) {
    lo = std::min(lo, s(coord));
    hi = std::max(hi, s(coord));
  }
  return 0.5 * (hi - lo);
}

PeriodicOrbit analyse_orbit(const FlowModel& model, const Vec& state, double period,
                            const OrbitSearchOptions& opts) {
  PeriodicOrbit o;
  o.model_ref = model.name;
  o.state = state;
  o.period = period;
  const auto var = integrate_variational(model, state, 0.0, period, opts.integrate);
  o.monodromy = var.final_matrix();
  o.closure_residual = model.wrapped_difference(state, var.trajectory.final_state()).norm();
  const double tol = model.tol.floquet;
  if (model.frame && model.dim >= 3) {
    o.frame_id = model.frame->id;
    o.transverse_monodromy = transverse_matrix(model, state, o.monodromy);
    Eigen::EigenSolver<Mat2> es(o.transverse_monodromy);
    o.multipliers = sorted_pair(es.eigenvalues()(0), es.eigenvalues()(1));
  } else {
    o.transverse_monodromy = Mat2::Identity();
    Eigen::EigenSolver<Mat> es(o.monodromy);
    std::vector<std::complex<double>> ev(es.eigenvalues().data(),
                                         es.eigenvalues().data() + es.eigenvalues().size());
    if (model.dim == 3) {
      // drop the flow-direction multiplier
      auto it = std::min_element(ev.begin(), ev.end(), [](auto a, auto b) {
        return std::abs(a - 1.0) < std::abs(b - 1.0);
      });
      ev.erase(it);
    }
    if (ev.size() != 2) fail_validation("analyse_orbit: cannot isolate two transverse multipliers");
    o.multipliers = sorted_pair(ev[0], ev[1]);
  }
  const auto m1 = o.multipliers[0], m2 = o.multipliers[1];
  o.multiplier_product_defect = std::abs(m1 * m2 - 1.0);
  o.degenerate = std::abs(m1 - 1.0) < tol || std::abs(m2 - 1.0) < tol;
  const bool real = std::abs(m1.imag()) <= tol && std::abs(m2.imag()) <= tol;
  if (o.degenerate)
    o.cls = OrbitClass::Degenerate;
  else if (real && std::abs(std::abs(m2) - 1.0) > tol)
    o.cls = OrbitClass::Hyperbolic;
  else if (!real)
    o.cls = OrbitClass::Elliptic;
  else
    o.cls = OrbitClass::Degenerate;

  const Trajectory tr = integrate(model, state, 0.0, period, opts.integrate);
  const std::size_t na = 2048;
  if (model.action_density) {
    double acc = 0.0;
    for (std::size_t i = 0; i < na; ++i) {
      const Vec z = tr.eval(period * static_cast<double>(i) / na);
      acc += model.action_density(z, model.field(z));
    }
    o.action = acc * period / na;
  } else {
    o.action = period;
  }
  const std::size_t ns = std::max<std::size_t>(opts.n_samples, 2);
  for (std::size_t i = 0; i < ns; ++i) {
    const double t = period * static_cast<double>(i) / ns;
    o.sample_times.push_back(t);
    o.samples.push_back(i == 0 ? state : tr.eval(t));
  }
  return o;
}

PeriodicOrbit find_periodic_orbit(const FlowModel& model, const Vec& guess, double guess_period,
                                  const OrbitSearchOptions& opts) {
  const int n = model.dim;
  if (guess.size() != n) fail_validation("find_periodic_orbit: guess dimension mismatch");
  if (!(guess_period > 0.0)) fail_validation("find_periodic_orbit: period must be positive");
  std::vector<std::pair<const ConservedQuantity*, double>> pins;
  for (const auto& c : model.invariants) {
    if (c.level_constraint)
      pins.emplace_back(&c, c.level);
    else if (opts.pin_guess_invariants && c.gradient)
      pins.emplace_back(&c, c.value(guess));
  }
  const int np = static_cast<int>(pins.size());
  const Vec zref = guess;
  const Vec fref = model.field(guess).normalized();
  Vec z = guess;
  double period = guess_period;
  const double tol = model.tol.closure;
  double res_norm = INFINITY;
  bool converged = false;
  for (int it = 0; it < opts.max_iterations; ++it) {
    if (model.field(z).norm() < 1e-8)
      fail_numerical("find_periodic_orbit: converged to an equilibrium");
    const auto var = integrate_variational(model, z, 0.0, period, opts.integrate);
    const Vec zt = var.trajectory.final_state();
    const Mat phi = var.final_matrix();
    const int rows = n + 1 + np;
    Mat jm = Mat::Zero(rows, n + 1);
    Vec res(rows);
    jm.topLeftCorner(n, n) = phi - Mat::Identity(n, n);
    jm.block(0, n, n, 1) = model.field(zt);
    res.head(n) = model.wrapped_difference(z, zt);
    jm.block(n, 0, 1, n) = fref.transpose();
    res(n) = fref.dot(model.wrapped_difference(zref, z));
    for (int k = 0; k < np; ++k) {
      jm.block(n + 1 + k, 0, 1, n) = pins[k].first->gradient(z).transpose();
      res(n + 1 + k) = pins[k].first->value(z) - pins[k].second;
    }
    res_norm = res.head(n).norm();
    const double aux = res.tail(rows - n).norm();
    if (res_norm < 0.1 * tol && aux < 0.1 * tol) {
      converged = true;
      break;
    }
    Vec delta = jm.completeOrthogonalDecomposition().solve(Vec(-res));
    const double cap = 0.2 * (1.0 + z.norm());
    if (delta.norm() > cap) delta *= cap / delta.norm();
    z += delta.head(n);
    period += delta(n);
    if (!(period > 0.0) || !z.allFinite())
      fail_numerical("find_periodic_orbit: Newton diverged");
    if (delta.norm() < 1e-15 * (1.0 + z.norm())) {
      converged = res_norm < tol;
      break;
    }
  }
  if (!converged && !(res_norm < tol)) {
    fail_numerical("find_periodic_orbit: Newton did not converge",
                   Json{{"closure_residual", res_norm}, {"period", period}}.dump());
  }
  PeriodicOrbit o = analyse_orbit(model, z, period, opts);
  if (o.closure_residual >= tol)
    fail_numerical("find_periodic_orbit: closure residual above tolerance",
                   Json{{"closure_residual", o.closure_residual}}.dump());
  return o;
}

std::pair<Vec, double> lyapunov_guess(double energy, int sector) {
  const double excess = std::max(energy - kHenonHeilesCritical, 0.0);
  const double amp = std::sqrt(2.0 * excess / 3.0);
  Vec z(4);
  z << amp, 1.0, 0.0, 0.0;
  return {rotate_hh_state(z, kTwoPi * sector / 3.0), kTwoPi / std::sqrt(3.0)};
}

std::array<PeriodicOrbit, 3> find_lyapunov_triple(const FlowModel& model,
                                                  const OrbitSearchOptions& opts) {
  if (model.kind != "henon-heiles")
    fail_validation("find_lyapunov_triple: model must come from make_henon_heiles");
  const double energy = model.level_quantity()->level;
  std::array<PeriodicOrbit, 3> out;
  std::array<std::string, 3> errors;
  OrbitSearchOptions inner = opts;
  inner.workers = 1;
  parallel_for(3, opts.workers, [&](std::size_t k) {
    try {
      const auto [guess, period] = lyapunov_guess(energy, static_cast<int>(k));
      out[k] = find_periodic_orbit(model, guess, period, inner);
      if (out[k].cls != OrbitClass::Hyperbolic) errors[k] = "orbit is not hyperbolic";
    } catch (const Error& e) {
      errors[k] = e.what();
    }
  });
  for (int k = 0; k < 3; ++k)
    if (!errors[k].empty())
      fail_numerical("find_lyapunov_triple: symmetry sector " + std::to_string(k) + " failed",
                     errors[k]);
  return out;
}

double rotated_orbit_distance(const FlowModel& model, const PeriodicOrbit& a,
                              const PeriodicOrbit& b, double angle) {
  IntegrateOptions io;
  const Trajectory tb = integrate(model, b.state, 0.0, 2.0 * b.period, io);
  const Vec ra0 = rotate_hh_state(a.state, angle);
  // coarse shift from samples, then Newton on (b(s) - ra0) . b'(s) = 0
  double s = 0.0, best = INFINITY;
  for (std::size_t i = 0; i < b.samples.size(); ++i) {
    const double d = (b.samples[i] - ra0).norm();
    if (d < best) {
      best = d;
      s = b.sample_times[i];
    }
  }
  for (int it = 0; it < 30; ++it) {
    const Vec zs = tb.eval(s);
    const Vec fs = model.field(zs);
    const double g = (zs - ra0).dot(fs);
    const double dg = fs.squaredNorm() + (zs - ra0).dot(model.jacobian(zs) * fs);
    if (dg == 0.0) break;
    const double step = g / dg;
    s = std::clamp(s - step, 0.0, b.period);
    if (std::abs(step) < 1e-15) break;
  }
  double worst = 0.0;
  const Trajectory ta = integrate(model, a.state, 0.0, a.period, io);
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const double t = a.sample_times[i];
    const Vec pa = rotate_hh_state(ta.eval(t), angle);
    worst = std::max(worst, (pa - tb.eval(s + t)).norm());
  }
  return worst;
}

GrowthTable count_orbits_up_to_period(const MapModel& map, const WordSolver& solver,
                                      int n_symbols, int n_max, double tol_closure,
                                      int workers) {
  if (n_symbols < 1 || n_max < 1) fail_validation("count_orbits: need n_symbols, n_max >= 1");
  const double words_total = std::pow(static_cast<double>(n_symbols), n_max);
  if (words_total > 5e6) fail_validation("count_orbits: word enumeration too large");
  GrowthTable g;
  for (int n = 1; n <= n_max; ++n) {
    std::size_t count = 1;
    for (int i = 0; i < n; ++i) count *= static_cast<std::size_t>(n_symbols);
    std::vector<std::optional<Vec2>> pts(count);
    parallel_for(count, workers, [&](std::size_t idx) {
      std::vector<int> word(n);
      std::size_t rem = idx;
      for (int i = n - 1; i >= 0; --i) {
        word[i] = static_cast<int>(rem % n_symbols) + 1;
        rem /= n_symbols;
      }
      auto p = solver(word);
      if (!p) return;
      Vec2 q = *p;
      for (int i = 0; i < n; ++i) q = map.map(q);
      if ((q - *p).norm() < tol_closure) pts[idx] = p;
    });
    std::vector<Vec2> found;
    for (const auto& p : pts)
      if (p) found.push_back(*p);
    GrowthRow row;
    row.n = n;
    row.fixed_points = static_cast<long long>(dedupe(found, 1e-10).size());
    g.rows.push_back(row);
  }
  finish_table(g);
  return g;
}

GrowthTable count_orbits_grid_search(const MapModel& map, const Vec2& lo, const Vec2& hi,
                                     int n_max, int grid, double tol_closure) {
  GrowthTable g;
  for (int n = 1; n <= n_max; ++n) {
    std::vector<Vec2> found;
    for (int i = 0; i < grid; ++i) {
      for (int j = 0; j < grid; ++j) {
        Vec2 x(lo(0) + (hi(0) - lo(0)) * (i + 0.5) / grid,
               lo(1) + (hi(1) - lo(1)) * (j + 0.5) / grid);
        bool ok = false;
        for (int it = 0; it < 30; ++it) {
          Vec2 y = x;
          Mat2 d = Mat2::Identity();
          for (int k = 0; k < n; ++k) {
            d = map.jacobian(y) * d;
            y = map.map(y);
          }
          const Vec2 r = y - x;
          if (r.norm() < tol_closure) {
            ok = true;
            break;
          }
          const Mat2 a = d - Mat2::Identity();
          if (std::abs(a.determinant()) < 1e-14) break;
          x -= a.inverse() * r;
          if (!x.allFinite()) break;
        }
        if (ok && (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all())
          found.push_back(x);
      }
    }
    GrowthRow row;
    row.n = n;
    row.fixed_points = static_cast<long long>(dedupe(found, 1e-8).size());
    g.rows.push_back(row);
  }
  finish_table(g);
  return g;
}

Json to_json(const PeriodicOrbit& o, bool with_samples) {
  Json mult = Json::array();
  for (const auto& m : o.multipliers) mult.push_back(Json{{"re", m.real()}, {"im", m.imag()}});
  Json mono = Json::array();
  for (Eigen::Index i = 0; i < o.monodromy.rows(); ++i) mono.push_back(vec_json(o.monodromy.row(i).transpose()));
  Json j{{"model_ref", o.model_ref},
         {"state", vec_json(o.state)},
         {"period", o.period},
         {"action", o.action},
         {"floquet_multipliers", mult},
         {"class", to_string(o.cls)},
         {"degenerate", o.degenerate},
         {"closure_residual", o.closure_residual},
         {"multiplier_product_defect", o.multiplier_product_defect},
         {"frame", o.frame_id},
         {"monodromy", mono}};
  if (with_samples) {
    Json s = Json::array();
    for (std::size_t i = 0; i < o.samples.size(); ++i) {
      Json row = vec_json(o.samples[i]);
      row.insert(row.begin(), o.sample_times[i]);
      s.push_back(row);
    }
    j["samples"] = s;
  }
  return j;
}

PeriodicOrbit orbit_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("state") || !j.contains("period"))
    fail_validation("orbit document: need 'state' and 'period'");
  PeriodicOrbit o;
  o.model_ref = j.value("model_ref", std::string());
  o.state = json_vec(j.at("state"));
  o.period = j.at("period").get<double>();
  o.action = j.value("action", 0.0);
  o.frame_id = j.value("frame", std::string());
  return o;
}

Json to_json(const GrowthTable& g) {
  Json rows = Json::array();
  for (const auto& r : g.rows)
    rows.push_back(Json{{"n", r.n},
                        {"fixed_points", r.fixed_points},
                        {"primitive_orbits", r.primitive_orbits},
                        {"orbits_up_to", r.orbits_up_to}});
  return Json{{"rows", rows},
              {"growth_rate", g.growth_rate},
              {"growth_stderr", g.growth_stderr},
              {"stable_fit", g.stable_fit},
              {"note", g.note}};
}

}  // namespace reeb
