#include "doctest.h"

#include "reeb/transition.hpp"

using namespace reeb;

namespace {

Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

struct SyntheticSetup {
  SyntheticPassageSpec spec;
  FlowModel model = make_synthetic_passage_flow(spec);
  SectionChart from, to;
  SyntheticSetup() {
    from.section.anchor = Vec::Zero(3);
    from.section.normal = Vec::Unit(3, 2);
    from.embed = [](const Vec2& tr) -> Vec { return vec3(tr(0), tr(1), 0.0); };
    from.coords = [](const Vec& z) -> Vec2 { return Vec2(z(0), z(1)); };
    to = from;
    to.section.anchor = Vec::Unit(3, 2);
    to.embed = [](const Vec2& tr) -> Vec { return vec3(tr(0), tr(1), 1.0); };
  }
};

LocalModelParams unit_twist() {
  LocalModelParams p;
  p.period = 1.0;
  p.u_series = {1.0};
  p.radius = 1.0;
  return p;
}

}  // namespace

TEST_CASE("normal form of the exact local model recovers its series") {
  LocalModelParams p;
  p.period = 1.0;
  p.u_series = {0.5, 0.3, -0.2};
  p.radius = 0.8;
  const FlowModel m = make_local_model(p);
  const PeriodicOrbit o = analyse_orbit(m, Vec::Zero(3), 1.0);
  const NormalFormChart c = fit_normal_form(m, o, 0.4, 6);
  REQUIRE(c.u_series.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(c.u_series[i] - p.u_series[i]) < 1e-8);
  CHECK(c.fit_residual < 1e-10);
  CHECK(normal_form_drift(m, c, 12).max_drift < 1e-10);
}

TEST_CASE("normal form near the henon-heiles neck conserves xy") {
  const FlowModel m = make_henon_heiles(kHenonHeilesCritical + 1e-3);
  OrbitSearchOptions oo;
  oo.workers = 4;
  const auto tri = find_lyapunov_triple(m, oo);
  NormalFormOptions no;
  no.workers = 4;
  const NormalFormChart c = fit_normal_form(m, tri[0], 0.01, 4, no);
  double mu = 0.0;
  for (const auto& x : tri[0].multipliers) mu = std::max(mu, std::abs(x));
  CHECK(std::abs(c.u_series[0] - std::log(mu) / tri[0].period) < 1e-8);
  const DriftReport d = normal_form_drift(m, c, 100, 4);
  CHECK(d.returns > 100);
  CHECK(d.max_drift < 1e-6);
}

TEST_CASE("normal form rejects non-hyperbolic orbits") {
  LocalModelParams p;
  const FlowModel m = make_local_model(p);
  PeriodicOrbit o = analyse_orbit(m, Vec::Zero(3), 1.0);
  o.cls = OrbitClass::Elliptic;
  CHECK_THROWS_AS(fit_normal_form(m, o, 0.1, 4), Error);
  CHECK_THROWS_AS(fit_normal_form(m, analyse_orbit(m, Vec::Zero(3), 1.0), -0.1, 4), Error);
}

TEST_CASE("exterior lift follows the logarithmic twist") {
  const TransitionLift l = local_exterior_lift(unit_twist(), 0.5);
  CHECK(l.twist(0.125) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(std::abs(l.twist(0.25)) < 1e-15);
  CHECK(l.h0 == doctest::Approx(1.0));
  double prev = -1.0;
  for (int m = 1; m <= 20; ++m) {
    const double dt = l.twist(0.5 / std::ldexp(1.0, m));
    CHECK(dt > prev);
    prev = dt;
  }
  CHECK(prev > 12.0);
  const Vec2 a = l(0.3, 0.01), b = l(2.3, 0.01);
  CHECK(b(0) - a(0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(a(1) == 0.01);
  CHECK_THROWS_AS(local_exterior_lift(unit_twist(), 1.5), Error);
  CHECK_THROWS_AS(local_exterior_lift(unit_twist(), 0.0), Error);
}

TEST_CASE("exterior lift matches integrated transit times") {
  LocalModelParams p;
  p.period = 1.7;
  p.u_series = {0.8, 0.3, -0.2};
  p.radius = 0.6;
  const double delta = 0.4;
  const FlowModel m = make_local_model(p);
  const TransitionLift l = local_exterior_lift(p, delta);
  SectionSpec exit;
  exit.anchor = vec3(0.0, 0.0, delta / 2.0);
  exit.normal = vec3(0.0, 0.0, 1.0);
  for (int k = 2; k <= 15; ++k) {
    const double r = delta / std::ldexp(1.0, k);
    auto hit = integrate_to_section(m, vec3(0.0, delta / 2.0, r), 0.0, 1e3, exit, 1e-9, {});
    REQUIRE(hit);
    CHECK(std::abs(hit->time / p.period - l.twist(r)) < 1e-6);
    CHECK(std::abs(hit->state(1) - r) < 1e-10);
  }
}

TEST_CASE("local lift images of analytic curves are monotone spirals") {
  const TransitionLift l = local_exterior_lift(unit_twist(), 0.5);
  for (int n : {1, 2, 3})
    for (double a : {0.5, 1.0, 2.0}) {
      const double s_max = std::min(0.5, 0.9 * std::pow(l.r_max / a, 1.0 / n));
      const SpiralReport rep =
          check_monotone_spiral(l, [](double s) { return 0.3 + s; }, a, n, s_max, 8);
      CHECK(rep.monotone);
      CHECK(rep.slope_ratio < 1e-3);
    }
}

TEST_CASE("global lift of the synthetic passage recovers the closed form") {
  SyntheticSetup s;
  GlobalLiftFit fit;
  global_lift(s.model, s.from, s.to, linspace(0.0, 0.95, 20), {0.0, 1e-3, 2e-3, 4e-3, 8e-3},
              &fit);
  for (std::size_t i = 0; i < fit.t.size(); ++i)
    CHECK(std::abs(fit.H[i] - synthetic_passage_h(s.spec, fit.t[i])) < 1e-6);
  CHECK(fit.h_monotone);
  CHECK(fit.A > 0.0);
  CHECK(fit.A <= fit.B);
  CHECK(std::isfinite(fit.B));
}

TEST_CASE("fixed-time push of the local model is a pure shift") {
  LocalModelParams p;
  p.period = 1.0;
  p.u_series = {0.7};
  const double delta = 0.4, tau = 0.3, x1 = delta / 2.0 * std::exp(-0.7 * tau);
  const FlowModel m = make_local_model(p);
  SectionChart from, to;
  from.section.anchor = vec3(0.0, delta / 2.0, 0.0);
  from.section.normal = vec3(0.0, -1.0, 0.0);
  from.embed = [delta](const Vec2& tr) -> Vec { return vec3(tr(0), delta / 2.0, tr(1)); };
  from.coords = [](const Vec& z) -> Vec2 { return Vec2(z(0), z(2)); };
  to.section.anchor = vec3(0.0, x1, 0.0);
  to.section.normal = vec3(0.0, -1.0, 0.0);
  to.embed = from.embed;
  to.coords = [tau](const Vec& z) -> Vec2 { return Vec2(z(0), z(2) * std::exp(-0.7 * tau)); };
  GlobalLiftFit fit;
  global_lift(m, from, to, linspace(0.0, 0.9, 10), {0.0, 0.01, 0.02, 0.05}, &fit);
  for (std::size_t i = 0; i < fit.t.size(); ++i)
    CHECK(std::abs(fit.H[i] - fit.t[i] - tau) < 1e-9);
  CHECK(fit.max_remainder < 1e-7);
  CHECK(std::abs(fit.A - 1.0) < 1e-9);
}

TEST_CASE("twist certificates") {
  const TransitionLift l = local_exterior_lift(unit_twist(), 0.5);
  const TwistCertificate c = certify_lift(l);
  CHECK(c.valid);
  CHECK(c.C > 0.0);
  CHECK(c.C < l.h0);
  CHECK(c.A == doctest::Approx(1.0 / 1.1));

  const TransitionLift id = compose_lifts({});
  CHECK(id.kind == LiftKind::Identity);
  CHECK(id.certificate->trivial);
  CHECK(id.certificate->A == 1.0);
  CHECK(id.certificate->B == 1.0);

  SyntheticSetup s;
  TransitionLift g = numerical_lift(s.model, s.from, s.to, 0.25, LiftKind::Global);
  CertificateOptions co;
  co.t_samples = co.r_samples = 16;
  co.workers = 4;
  const TransitionLift comp = compose_lifts({l, g}, co);
  REQUIRE(comp.certificate->valid);
  co.t_samples = co.r_samples = 32;
  const TwistCertificate fine = certify_lift(comp, co);
  CHECK(fine.valid);
  CHECK(std::abs(fine.C / comp.certificate->C - 1.0) < 0.05);
  CHECK(std::abs(fine.A / comp.certificate->A - 1.0) < 0.05);
  CHECK(std::abs(fine.B / comp.certificate->B - 1.0) < 0.05);
  CHECK(comp.certificate->C > c.C);

  const TransitionLift flat = log_twist_lift([](double) { return 0.0; }, [](double) { return -1.0; },
                                             0.5, "negative twist");
  CHECK_FALSE(certify_lift(flat).valid);
}

TEST_CASE("twist fixed points") {
  const TransitionLift pure = log_twist_lift([](double) { return 0.0; }, [](double) { return 1.0; },
                                             0.5, "pure twist");
  const auto pts = find_twist_periodic_points(pure, {2, 5, 9});
  for (const auto& p : pts) {
    CHECK(p.found);
    CHECK(p.degenerate);
    CHECK(p.r == doctest::Approx(std::exp(-p.k)).epsilon(1e-10));
  }

  SyntheticSetup s;
  const TransitionLift l = local_exterior_lift(unit_twist(), 0.5);
  TransitionLift g = numerical_lift(s.model, s.from, s.to, 0.25, LiftKind::Global);
  CertificateOptions co;
  co.t_samples = co.r_samples = 12;
  co.workers = 4;
  const TransitionLift comp = compose_lifts({l, g}, co);
  TwistSearchOptions so;
  so.t_samples = 16;
  so.workers = 4;
  const auto fps = find_twist_periodic_points(comp, {1, 5, 6, 7}, so);
  CHECK_FALSE(fps[0].found);
  CHECK(fps[0].status == "not bracketed");
  double prev_r = 1.0;
  for (std::size_t i = 1; i < fps.size(); ++i) {
    CHECK(fps[i].found);
    CHECK(fps[i].residual < 1e-8);
    CHECK(fps[i].r < prev_r);
    prev_r = fps[i].r;
  }
}

TEST_CASE("branch classification") {
  const Circle2 cs{Vec2(0.2, -0.1), 0.5};
  auto id = [](const Vec2& z) { return z; };
  CHECK(classify_branch(cs, id, cs).cls == BranchClass::Coincident);

  auto push = [&](double eps) {
    return [&cs, eps](const Vec2& z) -> Vec2 {
      const Vec2 d = z - cs.center;
      return z + eps * d.normalized();
    };
  };
  const ClassifyResult b = classify_branch(cs, push(1e-3), cs);
  CHECK(b.cls == BranchClass::ScenarioB);
  CHECK(b.transverse_crossings == 0);
  CHECK(classify_branch(cs, push(5e-5), cs).cls == BranchClass::Undetermined);

  auto shear = [&cs](const Vec2& z) -> Vec2 {
    const Vec2 d = z - cs.center;
    return cs.center + Vec2(d(0) + 0.3 * d(1), d(1));
  };
  const ClassifyResult c = classify_branch(cs, shear, cs);
  CHECK(c.cls == BranchClass::ScenarioC);
  CHECK(c.transverse_crossings == 4);
  CHECK(c.transverse_crossings % 2 == 0);

  // Same configuration rotated rigidly about the origin.
  const Mat2 rot = rotation(0.7);
  const Circle2 rs{rot * cs.center, cs.radius};
  auto shear_rot = [&](const Vec2& z) -> Vec2 { return rot * shear(rot.transpose() * z); };
  const ClassifyResult cr = classify_branch(rs, shear_rot, rs);
  CHECK(cr.cls == c.cls);
  CHECK(cr.transverse_crossings == c.transverse_crossings);
  CHECK(cr.hausdorff == doctest::Approx(c.hausdorff).epsilon(1e-3));
}

TEST_CASE("disk forwarding") {
  FoliationSchema s;
  s.k_tilde = {{1, 4}, {2, 3}};
  s.disk_area = 1.0;
  s.available_area = 3.5;

  ForwardingOracle now;
  now.meets_stable = [](int, int, int) { return true; };
  const ForwardingTrace t0 = iterate_disk_forwarding(s, {2, 3}, now);
  CHECK(t0.steps == 0);
  CHECK(t0.image == FamilyId(2, 3));
  CHECK(t0.bound == 3);

  ForwardingOracle late;
  late.meets_stable = [](int, int, int n) { return n >= 3; };
  CHECK(iterate_disk_forwarding(s, {1, 1}, late).steps == 3);
  ForwardingOracle never;
  never.meets_stable = [](int, int, int n) { return n >= 4; };
  CHECK_THROWS_AS(iterate_disk_forwarding(s, {1, 1}, never), Error);

  ForwardingOracle cyclic;
  cyclic.meets_stable = [](int, int, int n) { return n == 2; };
  cyclic.footprint = [](int, int, int n) { return DiskFootprint{1.0 * n, n + 0.9}; };
  for (int k = 1; k <= 4; ++k) {
    const ForwardingTrace t = iterate_disk_forwarding(s, {1, k}, cyclic);
    CHECK(t.steps == 2);
    CHECK(t.image == FamilyId(1, (k + 1) % 4 + 1));
  }
  ForwardingOracle overlap = cyclic;
  overlap.footprint = [](int, int, int n) { return DiskFootprint{0.5 * n, 0.5 * n + 0.9}; };
  CHECK_THROWS_AS(iterate_disk_forwarding(s, {1, 1}, overlap), Error);

  s.areas[{1, 2}] = 1.5;
  CHECK_THROWS_AS(iterate_disk_forwarding(s, {1, 1}, now), Error);

  FoliationSchema back = schema_from_json(to_json(s));
  CHECK(back.k_tilde == s.k_tilde);
  CHECK(back.available_area == 3.5);
}
