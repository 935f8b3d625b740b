#include "reeb/indices.hpp"

#include <algorithm>
#include <memory>

namespace reeb {

namespace {

Mat fourier_differentiation(int n, double period) {
  Mat d = Mat::Zero(n, n);
  const double h = kTwoPi / n;
  const double scale = kTwoPi / period;
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      if (j == k) continue;
      const int m = j - k;
      const double sign = (m % 2 == 0) ? 1.0 : -1.0;
      d(j, k) = scale * 0.5 * sign / std::sin(0.5 * m * h);
    }
  }
  return d;
}

struct DenseSpectrum {
  Vec values;
  Mat vectors;
};

DenseSpectrum solve_operator(const std::vector<Mat2>& sym, double period, bool vectors) {
  const int n = static_cast<int>(sym.size());
  const Mat d = fourier_differentiation(n, period);
  const Mat2 j2 = rot90();
  Mat a = Mat::Zero(2 * n, 2 * n);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      if (d(j, k) == 0.0) continue;
      a.block<2, 2>(2 * j, 2 * k) = -d(j, k) * j2;
    }
    a.block<2, 2>(2 * j, 2 * j) -= sym[j];
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(
      a, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) fail_numerical("asymptotic operator: eigensolver failed");
  DenseSpectrum out;
  out.values = es.eigenvalues();
  if (vectors) out.vectors = es.eigenvectors();
  return out;
}

std::vector<Mat2> symmetric_parts(const std::function<Mat2(double)>& generator, double period,
                                  int n, const Mat2& conj, std::vector<Mat2>* gens) {
  const Mat2 j2 = rot90();
  const Mat2 conj_inv = conj.inverse();
  std::vector<Mat2> out(n);
  for (int j = 0; j < n; ++j) {
    Mat2 g = generator(period * j / n);
    g -= 0.5 * g.trace() * Mat2::Identity();
    g = conj_inv * g * conj;
    if (gens) gens->push_back(g);
    const Mat2 s = -j2 * g;
    out[j] = 0.5 * (s + s.transpose());
  }
  return out;
}

int odd_at_least(int n) { return n % 2 == 1 ? n : n + 1; }

std::vector<int> window_indices(const Vec& values, int window) {
  std::vector<int> idx(values.size());
  for (int i = 0; i < values.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return std::abs(values(a)) < std::abs(values(b)); });
  idx.resize(std::min<std::size_t>(idx.size(), static_cast<std::size_t>(window)));
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return values(a) < values(b); });
  return idx;
}

}  // namespace

AsymptoticSpectrum spectrum_from_generator(const std::function<Mat2(double)>& generator,
                                           double period, const SpectrumOptions& opts) {
  if (!(period > 0.0)) fail_validation("asymptotic_spectrum: period must be positive");
  if (opts.grid < 9) fail_validation("asymptotic_spectrum: grid too small");
  if (std::abs(opts.conjugation.determinant() - 1.0) > 1e-12)
    fail_validation("asymptotic_spectrum: frame change must be symplectic (det 1)");
  AsymptoticSpectrum out;
  out.period = period;
  out.grid = odd_at_least(opts.grid);
  const int n = out.grid;
  const auto sym = symmetric_parts(generator, period, n, opts.conjugation, &out.generator);
  const DenseSpectrum ds = solve_operator(sym, period, true);
  const auto idx = window_indices(ds.values, opts.window);
  for (int i : idx) {
    Eigenpair ep;
    ep.value = ds.values(i);
    double maxm = 0.0, minm = INFINITY, total = 0.0;
    ep.eigenfunction.resize(n);
    for (int j = 0; j < n; ++j) {
      ep.eigenfunction[j] = Vec2(ds.vectors(2 * j, i), ds.vectors(2 * j + 1, i));
      const double m = ep.eigenfunction[j].norm();
      maxm = std::max(maxm, m);
      minm = std::min(minm, m);
    }
    for (int j = 0; j < n; ++j) {
      const Vec2& p = ep.eigenfunction[j];
      const Vec2& q = ep.eigenfunction[(j + 1) % n];
      total += std::atan2(p(0) * q(1) - p(1) * q(0), p.dot(q));
    }
    ep.min_modulus_ratio = maxm > 0.0 ? minm / maxm : 0.0;
    ep.winding_valid = ep.min_modulus_ratio >= opts.min_modulus;
    ep.winding = static_cast<int>(std::lround(total / kTwoPi));
    out.eigenpairs.push_back(std::move(ep));
  }

  out.winding_monotone = true;
  for (std::size_t i = 1; i < out.eigenpairs.size(); ++i)
    if (out.eigenpairs[i].winding < out.eigenpairs[i - 1].winding) out.winding_monotone = false;
  // Each winding strictly inside the window must be attained exactly twice.
  out.winding_pairs = true;
  if (!out.eigenpairs.empty()) {
    const int wlo = out.eigenpairs.front().winding, whi = out.eigenpairs.back().winding;
    for (int w = wlo + 1; w < whi; ++w) {
      const auto c = std::count_if(out.eigenpairs.begin(), out.eigenpairs.end(),
                                   [w](const Eigenpair& e) { return e.winding == w; });
      if (c != 2) out.winding_pairs = false;
    }
  }

  if (opts.refine) {
    out.refined_grid = odd_at_least(2 * n + 1);
    const auto sym2 = symmetric_parts(generator, period, out.refined_grid, opts.conjugation, nullptr);
    const DenseSpectrum fine = solve_operator(sym2, period, false);
    const auto fidx = window_indices(fine.values, opts.window);
    for (int i : fidx) out.refined_values.push_back(fine.values(i));
    // compare the eigenvalues nearest 0 (a quarter of the window)
    std::vector<double> coarse_near;
    for (const auto& e : out.eigenpairs) coarse_near.push_back(e.value);
    std::sort(coarse_near.begin(), coarse_near.end(),
              [](double a, double b) { return std::abs(a) < std::abs(b); });
    coarse_near.resize(std::min<std::size_t>(coarse_near.size(),
                                             std::max<std::size_t>(4, opts.window / 4)));
    double worst = 0.0;
    for (double v : coarse_near) {
      double best = INFINITY;
      for (double w : out.refined_values) best = std::min(best, std::abs(v - w));
      worst = std::max(worst, best);
    }
    out.refinement_change = worst;
  }
  return out;
}

std::function<Mat2(double)> transverse_generator(const FlowModel& model,
                                                 const PeriodicOrbit& orbit,
                                                 const IntegrateOptions& io) {
  if (!model.frame) fail_validation("asymptotic_spectrum: model declares no frame");
  auto tr = std::make_shared<Trajectory>(
      integrate(model, orbit.state, 0.0, orbit.period * 1.0001, io));
  return [&model, tr](double t) -> Mat2 {
    const Vec z = tr->eval(t);
    const auto e = model.frame_at(z);
    const Vec f = model.field(z);
    const auto de = model.frame_derivative(z, f);
    const Mat jac = model.jacobian(z);
    Mat basis(model.dim, 3);
    basis.col(0) = e[0];
    basis.col(1) = e[1];
    basis.col(2) = f;
    Eigen::JacobiSVD<Mat> svd(basis);
    const Vec sv = svd.singularValues();
    if (sv(2) < 1e-10 * sv(0))
      fail_numerical("asymptotic_spectrum: frame degenerates along the orbit",
                     Json{{"t", t}, {"sigma_min", sv(2)}}.dump());
    const auto qr = basis.colPivHouseholderQr();
    Mat2 g;
    for (int i = 0; i < 2; ++i) {
      const Vec w = jac * e[i] - de[i];
      const Vec c = qr.solve(w);
      g(0, i) = c(0);
      g(1, i) = c(1);
    }
    return g;
  };
}

AsymptoticSpectrum asymptotic_spectrum(const PeriodicOrbit& orbit, const FlowModel& model,
                                       const SpectrumOptions& opts) {
  AsymptoticSpectrum s =
      spectrum_from_generator(transverse_generator(model, orbit, opts.integrate), orbit.period, opts);
  s.orbit_ref = orbit.model_ref;
  s.frame_id = model.frame ? model.frame->id : std::string();
  s.refinement_converged = s.refinement_change < model.tol.spectrum;
  return s;
}

CzResult cz_index(const AsymptoticSpectrum& spec, double tol_spec) {
  const Eigenpair* neg = nullptr;
  const Eigenpair* nonneg = nullptr;
  for (const auto& e : spec.eigenpairs) {
    if (e.value < 0.0) {
      if (!neg || e.value > neg->value) neg = &e;
    } else {
      if (!nonneg || e.value < nonneg->value) nonneg = &e;
    }
  }
  if (!neg || !nonneg) fail_numerical("cz_index: spectrum window does not straddle 0");
  if (!neg->winding_valid || !nonneg->winding_valid)
    fail_numerical("cz_index: eigenfunction nearly vanishes, winding unreliable");
  CzResult r;
  r.wind_negative = neg->winding;
  r.wind_nonnegative = nonneg->winding;
  r.largest_negative = neg->value;
  r.smallest_nonnegative = nonneg->value;
  r.index = r.wind_negative + r.wind_nonnegative;
  r.degenerate = std::abs(neg->value) < tol_spec || std::abs(nonneg->value) < tol_spec;
  return r;
}

namespace {

double safe_asin(double x) { return std::asin(std::clamp(x, -1.0, 1.0)); }

Eigen::Vector3d unit_or_zero(const Eigen::Vector3d& v) {
  const double n = v.norm();
  return n > 0.0 ? Eigen::Vector3d(v / n) : Eigen::Vector3d::Zero();
}

double segment_distance(const Eigen::Vector3d& p0, const Eigen::Vector3d& p1,
                        const Eigen::Vector3d& q0, const Eigen::Vector3d& q1) {
  const Eigen::Vector3d d1 = p1 - p0, d2 = q1 - q0, r = p0 - q0;
  const double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  double s = 0.0, t = 0.0;
  if (a <= 1e-300 && e <= 1e-300) return r.norm();
  if (a <= 1e-300) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= 1e-300) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2), den = a * e - b * b;
      s = den > 0.0 ? std::clamp((b * f - c * e) / den, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return (p0 + s * d1 - (q0 + t * d2)).norm();
}

Eigen::Matrix3d projection_rotation() {
  return (Eigen::AngleAxisd(0.3137, Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(0.7193, Eigen::Vector3d::UnitX()) *
          Eigen::AngleAxisd(0.1231, Eigen::Vector3d::UnitZ()))
      .toRotationMatrix();
}

}  // namespace

double gauss_linking(const Loop& a, const Loop& b) {
  double total = 0.0;
  const std::size_t na = a.size(), nb = b.size();
  for (std::size_t i = 0; i < na; ++i) {
    const Eigen::Vector3d& a0 = a[i];
    const Eigen::Vector3d& a1 = a[(i + 1) % na];
    for (std::size_t j = 0; j < nb; ++j) {
      const Eigen::Vector3d& b0 = b[j];
      const Eigen::Vector3d& b1 = b[(j + 1) % nb];
      const Eigen::Vector3d r13 = b0 - a0, r14 = b1 - a0, r23 = b0 - a1, r24 = b1 - a1;
      const Eigen::Vector3d n1 = unit_or_zero(r13.cross(r14));
      const Eigen::Vector3d n2 = unit_or_zero(r14.cross(r24));
      const Eigen::Vector3d n3 = unit_or_zero(r24.cross(r23));
      const Eigen::Vector3d n4 = unit_or_zero(r23.cross(r13));
      const double omega = safe_asin(n1.dot(n2)) + safe_asin(n2.dot(n3)) +
                           safe_asin(n3.dot(n4)) + safe_asin(n4.dot(n1));
      const double orient = (b1 - b0).cross(a1 - a0).dot(r13);
      if (orient == 0.0) continue;
      total += orient > 0.0 ? omega : -omega;
    }
  }
  return total / (4.0 * kPi);
}

int crossing_linking(const Loop& a, const Loop& b) {
  const Eigen::Matrix3d rot = projection_rotation();
  auto project = [&rot](const Loop& l) {
    Loop out;
    out.reserve(l.size());
    for (const auto& p : l) out.push_back(rot * p);
    return out;
  };
  const Loop pa = project(a), pb = project(b);
  int twice = 0;
  const std::size_t na = pa.size(), nb = pb.size();
  for (std::size_t i = 0; i < na; ++i) {
    const Eigen::Vector3d& a0 = pa[i];
    const Eigen::Vector3d da = pa[(i + 1) % na] - a0;
    for (std::size_t j = 0; j < nb; ++j) {
      const Eigen::Vector3d& b0 = pb[j];
      const Eigen::Vector3d db = pb[(j + 1) % nb] - b0;
      const double den = da(0) * db(1) - da(1) * db(0);
      if (den == 0.0) continue;
      const double rx = b0(0) - a0(0), ry = b0(1) - a0(1);
      const double s = (rx * db(1) - ry * db(0)) / den;
      const double u = (rx * da(1) - ry * da(0)) / den;
      if (s < 0.0 || s >= 1.0 || u < 0.0 || u >= 1.0) continue;
      const double za = a0(2) + s * da(2), zb = b0(2) + u * db(2);
      const int cross_sign = den > 0.0 ? 1 : -1;
      twice += za > zb ? cross_sign : -cross_sign;
    }
  }
  if (twice % 2 != 0) fail_numerical("crossing count: odd signed crossing total");
  return twice / 2;
}

double loop_distance(const Loop& a, const Loop& b) {
  double best = INFINITY;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      best = std::min(best, segment_distance(a[i], a[(i + 1) % a.size()], b[j],
                                             b[(j + 1) % b.size()]));
  return best;
}

LinkRecord linking_number(const Loop& a, const Loop& b, double tol_sep) {
  if (a.size() < 3 || b.size() < 3) fail_validation("linking_number: loops need >= 3 points");
  LinkRecord r;
  r.min_distance = loop_distance(a, b);
  if (r.min_distance <= tol_sep)
    fail_numerical("linking_number: loops too close",
                   Json{{"min_distance", r.min_distance}}.dump());
  r.gauss_value = gauss_linking(a, b);
  r.linking = static_cast<int>(std::lround(r.gauss_value));
  r.rounding_error = std::abs(r.gauss_value - r.linking);
  if (r.rounding_error > 0.25)
    fail_numerical("linking_number: Gauss sum not near an integer",
                   Json{{"gauss", r.gauss_value}}.dump());
  r.crossings_value = crossing_linking(a, b);
  r.methods_agree = r.crossings_value == r.linking;
  return r;
}

LoopChart stereographic_chart() {
  LoopChart c;
  c.id = "stereographic(z/|z|) from (0,0,0,1)";
  c.map = [](const Vec& z) -> Eigen::Vector3d {
    const Vec u = z / z.norm();
    return Eigen::Vector3d(u(0), u(1), u(2)) / (1.0 - u(3));
  };
  // Orientation: two fibres of the standard Reeb flow must link +1.
  auto fibre = [&c](double c1, double c2) {
    Loop l;
    for (int i = 0; i < 400; ++i) {
      const double t = kTwoPi * i / 400;
      Vec z(4);
      z << c1 * std::cos(t), c2 * std::cos(t), -c1 * std::sin(t), -c2 * std::sin(t);
      l.push_back(c.map(z));
    }
    return l;
  };
  const double lk = gauss_linking(fibre(0.8, 0.6), fibre(0.6, -0.8));
  c.orientation = lk > 0.0 ? 1 : -1;
  return c;
}

LoopChart henon_heiles_neck_chart(double kappa) {
  LoopChart c;
  c.id = "neck shell exp(kappa (q2-1)) v/|v|, v=(sqrt3 q1, p1, p2), kappa=" + std::to_string(kappa);
  c.map = [kappa](const Vec& z) -> Eigen::Vector3d {
    const Eigen::Vector3d v(std::sqrt(3.0) * z(0), z(2), z(3));
    return Eigen::Vector3d(std::exp(kappa * (z(1) - 1.0)) * v / v.norm());
  };
  c.orientation = 1;
  return c;
}

SelfLinkResult self_linking(const FlowModel& model, const std::vector<Vec>& loop,
                            const LoopChart& chart, double offset) {
  if (loop.size() < 3) fail_validation("self_linking: loop needs >= 3 points");
  SelfLinkResult out;
  out.chart_id = chart.id;
  out.min_transversality = INFINITY;
  for (const auto& z : loop) {
    const auto e = model.frame_at(z);
    Mat basis(model.dim, 3);
    basis.col(0) = e[0].normalized();
    basis.col(1) = e[1].normalized();
    basis.col(2) = model.field(z).normalized();
    Eigen::JacobiSVD<Mat> svd(basis);
    out.min_transversality = std::min(out.min_transversality, svd.singularValues()(2));
  }
  if (out.min_transversality < 1e-6)
    fail_numerical("self_linking: loop is not transverse to the plane field",
                   Json{{"min_transversality", out.min_transversality}}.dump());
  Loop base;
  for (const auto& z : loop) base.push_back(chart.map(z));
  bool have_previous = false;
  int previous = 0;
  double eps = offset;
  for (int attempt = 0; attempt < 12; ++attempt, eps *= 0.5) {
    Loop push;
    for (const auto& z : loop) push.push_back(chart.map(Vec(z + eps * model.frame_at(z)[0].normalized())));
    try {
      const LinkRecord lr = linking_number(base, push, 1e-12);
      if (have_previous && previous == lr.linking && lr.methods_agree) {
        out.link = lr;
        out.offset = eps;
        out.self_linking = chart.orientation * lr.linking;
        return out;
      }
      previous = lr.linking;
      have_previous = true;
    } catch (const Error&) {
      have_previous = false;
    }
  }
  fail_numerical("self_linking: push-off did not stabilise under offset shrinking");
}

Json to_json(const AsymptoticSpectrum& s) {
  Json pairs = Json::array();
  for (const auto& e : s.eigenpairs)
    pairs.push_back(Json{{"eigenvalue", e.value},
                         {"winding", e.winding},
                         {"winding_valid", e.winding_valid},
                         {"min_modulus_ratio", e.min_modulus_ratio}});
  return Json{{"orbit_ref", s.orbit_ref},
              {"frame", s.frame_id},
              {"period", s.period},
              {"grid", s.grid},
              {"refined_grid", s.refined_grid},
              {"refinement_change", s.refinement_change},
              {"refinement_converged", s.refinement_converged},
              {"winding_monotone", s.winding_monotone},
              {"winding_pairs", s.winding_pairs},
              {"eigenpairs", pairs}};
}

Json to_json(const CzResult& c) {
  return Json{{"cz", c.index},
              {"wind_negative", c.wind_negative},
              {"wind_nonnegative", c.wind_nonnegative},
              {"largest_negative", c.largest_negative},
              {"smallest_nonnegative", c.smallest_nonnegative},
              {"degenerate", c.degenerate}};
}

Json to_json(const LinkRecord& l) {
  return Json{{"linking", l.linking},
              {"gauss_value", l.gauss_value},
              {"crossings_value", l.crossings_value},
              {"methods_agree", l.methods_agree},
              {"min_distance", l.min_distance}};
}

}  // namespace reeb
