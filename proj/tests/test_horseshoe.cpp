#include "doctest.h"

#include "reeb/horseshoe.hpp"
#include "reeb/models.hpp"
#include "reeb/orbits.hpp"
#include "reeb/transition.hpp"

#include <cmath>

using namespace reeb;

namespace {

// Left edge of V_i (and bottom edge of H_i) of the affine N-branch map: equal
// gaps g between the N strips of width 1/lam and the sides of the square.
double affine_edge(double lam, int n, int i) {
  const double g = (1.0 - n / lam) / (n + 1);
  return 1.0 - i * (g + 1.0 / lam);
}

// Centre of the homoclinic strip with twist level n at column u, by plain
// bisection on the level equation in ln v.
double strip_level_oracle(const HomoclinicSquareSpec& s, double u, int n) {
  const double h = 1.0 / (s.period * s.u), g = std::log(s.delta / 2.0) * h, r0 = -s.C * s.t0;
  auto f = [&](double lv) {
    const double r = r0 * std::exp(lv);
    const double t = s.t0 * u + (s.A / s.C) * r;
    const double mid = ((r0 - s.D * r) / s.C - s.D * r / s.C) / 2.0;
    return t + g - h * std::log(r) - n - mid;
  };
  double a = -60.0, b = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double m = 0.5 * (a + b);
    (f(m) > 0.0 ? a : b) = m;
  }
  return std::exp(0.5 * (a + b));
}

StripOptions fast_strips() {
  StripOptions o;
  o.lines = 129;
  o.uniform = 1001;
  o.geometric = 300;
  return o;
}

}  // namespace

TEST_CASE("affine horseshoes: strips sit at the closed-form offsets") {
  for (auto [lam, n] : {std::pair{3.0, 2}, std::pair{4.0, 3}, std::pair{6.0, 5}}) {
    CAPTURE(n);
    const MapModel m = make_affine_horseshoe(lam, n);
    const StripSystem sys = detect_strips(m, StripBox{}, 10, fast_strips());
    REQUIRE(sys.size() == static_cast<std::size_t>(n));
    CHECK(sys.ordered);
    for (int i = 1; i <= n; ++i) {
      const auto& v = sys.vertical[static_cast<std::size_t>(i - 1)];
      const auto& h = sys.horizontal[static_cast<std::size_t>(i - 1)];
      for (double x : {0.1, 0.5, 0.9}) {
        CHECK(v.lo_at(x) == doctest::Approx(affine_edge(lam, n, i)).epsilon(1e-10));
        CHECK(v.hi_at(x) == doctest::Approx(affine_edge(lam, n, i) + 1.0 / lam).epsilon(1e-10));
        CHECK(h.lo_at(x) == doctest::Approx(affine_edge(lam, n, i)).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("affine horseshoes pass Moser, cones at mu = 0.4 and realize every short word") {
  for (auto [lam, n] : {std::pair{3.0, 2}, std::pair{4.0, 3}, std::pair{6.0, 5}}) {
    CAPTURE(n);
    const MapModel m = make_affine_horseshoe(lam, n);
    const StripSystem sys = detect_strips(m, StripBox{}, 10, fast_strips());
    const MoserReport mo = verify_moser_conditions(m, sys);
    CHECK(mo.n1);
    CHECK(mo.n2);
    CHECK(mo.n2_contraction == doctest::Approx(1.0 / lam).epsilon(1e-9));
    const ConeReport cone = cone_certificate(m, sys, 0.4);
    CHECK(cone.pass);
    CHECK(cone.min_unstable_expansion == doctest::Approx(lam));
    CHECK(cone.max_unstable_slope == doctest::Approx(0.4 / (lam * lam)));
    const auto rep = semiconjugacy_check(m, sys, all_words(n, 5), false, 2);
    CHECK(rep.pass());
    CHECK(rep.realized == rep.words);
  }
}

TEST_CASE("affine period-2 orbit matches the closed-form fixed point of the branch pair") {
  const double lam = 3.0;
  const MapModel m = make_affine_horseshoe(lam, 2);
  const StripSystem sys = detect_strips(m, StripBox{}, 4, fast_strips());
  const double o1 = affine_edge(lam, 2, 1), o2 = affine_edge(lam, 2, 2);
  // x in V_1 and H_2, P(x) in V_2 and H_1.
  const double u = (o1 + o2 / lam) / (1.0 - 1.0 / (lam * lam));
  const double v = (lam * lam * o2 + lam * o1) / (lam * lam - 1.0);
  const auto x = periodic_point(m, sys, {1, 2});
  REQUIRE(x);
  CHECK((*x)(0) == doctest::Approx(u).epsilon(1e-12));
  CHECK((*x)(1) == doctest::Approx(v).epsilon(1e-12));
  CHECK(itinerary(m, sys, *x, 4) == std::vector<int>{1, 2, 1, 2});
}

TEST_CASE("affine periodic-orbit counts grow like ln N") {
  const MapModel m = make_affine_horseshoe(4.0, 3);
  const StripSystem sys = detect_strips(m, StripBox{}, 4, fast_strips());
  const GrowthTable g = count_orbits_up_to_period(m, make_word_solver(m, sys), 3, 6, 1e-9, 2);
  for (const auto& row : g.rows) CHECK(row.fixed_points == static_cast<long long>(std::pow(3, row.n)));
  CHECK(g.growth_rate == doctest::Approx(std::log(3.0)).epsilon(0.01));
}

TEST_CASE("separated-set entropy: affine horseshoes give ln N, a rotation gives zero") {
  for (auto [lam, n] : {std::pair{3.0, 2}, std::pair{4.0, 3}}) {
    CAPTURE(n);
    const MapModel m = make_affine_horseshoe(lam, n);
    const double gap = (1.0 - n / lam) / (n + 1);
    const auto e = entropy_separated_sets(m, StripBox{}, {1, 2, 3, 4, 5},
                                          {gap / 2, gap / 4, gap / 8}, EntropyOptions{});
    CHECK(e.monotone_in_eps);
    CHECK(e.estimate >= 0.9 * std::log(n));
    CHECK(e.estimate <= 1.1 * std::log(n));
    // Below the strip gap N(n, eps) counts n-cylinders times a fixed factor.
    CHECK(e.counts[0][4] == n * e.counts[0][3]);
  }
  const MapModel rot = make_rotation_map(2.0 * M_PI * (std::sqrt(5.0) - 1.0) / 2.0);
  const auto e = entropy_separated_sets(rot, StripBox{-0.5, 0.5, -0.5, 0.5}, {2, 4, 8, 16},
                                        {0.05, 0.025}, EntropyOptions{});
  CHECK(e.estimate < 0.05);
}

TEST_CASE("overlapping or transposed boxes are rejected with witnesses") {
  AffineHorseshoeOptions ov;
  ov.allow_overlap = true;
  const MapModel m = make_affine_horseshoe(2.0 - 1e-3, 2, ov);
  const StripSystem sys = detect_strips(m, StripBox{}, 4, fast_strips());
  CHECK(sys.size() < 2);
  const MoserReport mo = verify_moser_conditions(m, sys);
  CHECK_FALSE(mo.n1);
  CHECK(mo.witness.find("overlapping") != std::string::npos);

  StripBox t;
  t.transposed = true;
  try {
    detect_strips(make_affine_horseshoe(3.0, 2), t, 4, fast_strips());
    FAIL("transposed box accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Validation);
    CHECK(std::string(e.what()).find("orientation") != std::string::npos);
  }
}

TEST_CASE("a rotation crosses the box once and fails the cone test") {
  const MapModel rot = make_rotation_map(0.3);
  const StripSystem sys = detect_strips(rot, StripBox{-0.5, 0.5, -0.5, 0.5}, 4, fast_strips());
  CHECK(sys.size() == 1);
  const ConeReport cone = cone_certificate(rot, sys, 0.4);
  CHECK_FALSE(cone.pass);
  CHECK(cone.min_unstable_expansion < 1.0);
  CHECK_FALSE(verify_moser_conditions(rot, sys).n1);
}

TEST_CASE("homoclinic square: six ordered accumulating strips on the twist levels") {
  const HomoclinicSquareSpec spec;
  const MapModel m = make_homoclinic_square_map(spec);
  const StripSystem sys = detect_strips(m, StripBox{}, 6, StripOptions{});
  REQUIRE(sys.size() == 6);
  CHECK(sys.ordered);
  CHECK(sys.accumulating);
  for (int i = 1; i <= 6; ++i) {
    const auto& h = sys.horizontal[static_cast<std::size_t>(i - 1)];
    for (double u : {0.2, 0.5, 0.8}) {
      const double c = strip_level_oracle(spec, u, i);
      CHECK(h.lo_at(u) < c);
      CHECK(h.hi_at(u) > c);
      CHECK(homoclinic_strip_level(spec, u, i) == doctest::Approx(c).epsilon(1e-12));
    }
  }
  for (double r : sys.h_ratios) CHECK(r == doctest::Approx(std::exp(-1.0)).epsilon(0.1));
}

TEST_CASE("homoclinic square: Moser, cones and random words of length 6") {
  const HomoclinicSquareSpec spec;
  const MapModel m = make_homoclinic_square_map(spec);
  const StripSystem sys = detect_strips(m, StripBox{}, 6, StripOptions{});
  const MoserReport mo = verify_moser_conditions(m, sys);
  CHECK(mo.n1);
  CHECK(mo.n2);
  const ConeReport cone = cone_certificate(m, sys, 0.4);
  CHECK(cone.pass);
  const auto rep = semiconjugacy_check(m, sys, random_words(6, 6, 50, 11), false, 2);
  CHECK(rep.pass());
  const auto per = semiconjugacy_check(m, sys, random_words(6, 3, 20, 5), true, 2);
  CHECK(per.pass());
  CHECK(per.max_periodic_residual < 1e-12);

  // Jacobian against central differences; the trace grows like |C| h / r.
  const Vec2 z(0.4, 0.35);
  const Mat2 j = m.jacobian(z);
  for (int c = 0; c < 2; ++c) {
    Vec2 a = z, b = z;
    a(c) += 1e-7;
    b(c) -= 1e-7;
    const Vec2 d = (m.map(a) - m.map(b)) / 2e-7;
    CHECK(d(0) == doctest::Approx(j(0, c)).epsilon(1e-6));
    CHECK(d(1) == doctest::Approx(j(1, c)).epsilon(1e-6));
  }
  CHECK(j.determinant() == doctest::Approx(1.0));
  const double r = -spec.C * spec.t0 * z(1);
  CHECK(homoclinic_trace(spec, z) == doctest::Approx(spec.A + spec.D - spec.C / r));
}

TEST_CASE("strip-restricted entropy cuts a countable family at its detected depth") {
  HomoclinicSquareSpec spec;
  spec.u = 1.0003843464;
  spec.period = 3.62718044445;
  const MapModel m = make_homoclinic_square_map(spec);
  const StripSystem sys = detect_strips(m, StripBox{}, 3, StripOptions{});
  REQUIRE(sys.size() == 3);
  double gap = 1.0;
  for (std::size_t k = 0; k + 1 < sys.size(); ++k)
    gap = std::min(gap, sys.horizontal[k].lo[128] - sys.horizontal[k + 1].hi[128]);
  const auto e = entropy_separated_sets(m, sys, {1, 2, 3}, {gap / 2, gap / 4, gap / 8}, {});
  CHECK(e.estimate == doctest::Approx(std::log(3.0)).epsilon(0.05));
  CHECK(e.counts[0][2] >= 27);

  const StripSystem six = detect_strips(m, StripBox{}, 6, StripOptions{});
  REQUIRE(six.size() == 6);
  const MapModel sq = make_homoclinic_square_map(HomoclinicSquareSpec{});
  const StripSystem s6 = detect_strips(sq, StripBox{}, 6, StripOptions{});
  double g6 = 1.0;
  for (std::size_t k = 0; k + 1 < s6.size(); ++k)
    g6 = std::min(g6, s6.horizontal[k].lo[128] - s6.horizontal[k + 1].hi[128]);
  EntropyOptions eo;
  eo.tail = 3;
  const auto e6 = entropy_separated_sets(sq, s6, {1, 2, 3}, {g6 / 2, g6 / 4, g6 / 8}, eo);
  CHECK(e6.estimate == doctest::Approx(std::log(6.0)).epsilon(0.05));
  CHECK(e6.monotone_in_eps);
}

TEST_CASE("spiral homoclinics of a horizontal arc with a vertical one form the geometric ladder") {
  LocalModelParams p;
  p.radius = 1.0;
  const double delta = 0.5, t0 = 0.3;
  const TransitionLift lift = local_exterior_lift(p, delta);
  const auto pts = detect_transverse_homoclinic(lift, t0, [](double) { return 0.0; }, {});
  REQUIRE(pts.size() == 10);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const int m = static_cast<int>(i) + 1;
    const double r = (delta / 2.0) * std::exp(-(m - t0));
    CHECK(std::abs(pts[i].r - r) < 1e-8 * r);
    CHECK(pts[i].margin > 0.0);
    CHECK(pts[i].c1_slack > 0.0);
    CHECK(pts[i].c2_slack > 0.0);
  }

  // A tangent arc t = r^2 still crosses transversally near the circle.
  const auto tan = detect_transverse_homoclinic(lift, t0, [](double r) { return r * r; }, {});
  REQUIRE(tan.size() == 10);
  for (const auto& q : tan) CHECK(q.margin > 0.0);

  HomoclinicOptions none;
  none.reaches_zero = false;
  CHECK(detect_transverse_homoclinic(lift, t0, [](double) { return 0.0; }, none).empty());
}

TEST_CASE("coarse samples that miss a thin strip are reported, not relabelled") {
  const MapModel m = make_homoclinic_square_map(HomoclinicSquareSpec{});
  try {
    detect_strips(m, StripBox{}, 6, fast_strips());
    FAIL("coarse detection accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Numerical);
    CHECK(std::string(e.what()).find("lost track") != std::string::npos);
  }
}

TEST_CASE("horseshoe reports serialize") {
  const MapModel m = make_affine_horseshoe(3.0, 2);
  const StripSystem sys = detect_strips(m, StripBox{}, 4, fast_strips());
  const Json j = to_json(sys);
  CHECK(j.at("count") == 2);
  CHECK(j.at("vertical").size() == 2);
  CHECK(box_from_json(j.at("box")).u1 == 1.0);
  CHECK(to_json(verify_moser_conditions(m, sys)).at("N1") == true);
  CHECK_THROWS_AS(box_from_json(Json{{"u0", 1.0}, {"u1", 0.0}}), Error);
}
