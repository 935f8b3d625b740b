#include "doctest.h"

#include "reeb/flow.hpp"
#include "reeb/models.hpp"

using namespace reeb;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// Newton on grad V = 0 from a nearby guess; independent of the closed form.
Vec newton_equilibrium(Vec q) {
  for (int it = 0; it < 50; ++it) {
    Eigen::Vector2d g(q(0) + 2 * q(0) * q(1), q(1) + q(0) * q(0) - q(1) * q(1));
    Eigen::Matrix2d h;
    h << 1 + 2 * q(1), 2 * q(0), 2 * q(0), 1 - 2 * q(1);
    q -= h.inverse() * g;
  }
  return q;
}

}  // namespace

TEST_CASE("henon-heiles rejects critical and subcritical energies") {
  CHECK_THROWS_WITH(make_henon_heiles(1.0 / 6.0), doctest::Contains("at critical value"));
  CHECK_THROWS(make_henon_heiles(0.1));
  CHECK_THROWS(make_henon_heiles(1.0 / 6.0 + 0.5));
  CHECK_NOTHROW(make_henon_heiles(1.0 / 6.0 + 1e-3));
}

TEST_CASE("henon-heiles saddle-centers sit at energy 1/6") {
  for (auto guess : {Vec(vec({0.05, 0.9})), Vec(vec({-0.8, -0.45})),
                     Vec(vec({0.8, -0.45}))}) {
    const Vec q = newton_equilibrium(guess);
    const Vec z = vec({q(0), q(1), 0.0, 0.0});
    CHECK(henon_heiles_hamiltonian(z) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  }
  for (const auto& z : henon_heiles_saddles()) {
    CHECK(henon_heiles_gradient(z).norm() < 1e-14);
    CHECK(std::abs(henon_heiles_hamiltonian(z) - 1.0 / 6.0) < 1e-15);
  }
}

TEST_CASE("quaternionic triple anticommutes and the frame spans the level") {
  const Eigen::Matrix4d i = symplectic_j0(), j = quaternion_j(), k = quaternion_k();
  const Eigen::Matrix4d id = Eigen::Matrix4d::Identity();
  CHECK((i * i + id).norm() < 1e-15);
  CHECK((j * j + id).norm() < 1e-15);
  CHECK((k * k + id).norm() < 1e-15);
  CHECK((i * j + j * i).norm() < 1e-15);
  CHECK((i * k + k * i).norm() < 1e-15);
  CHECK((j * k + k * j).norm() < 1e-15);
  CHECK(((i * j) - k).norm() < 1e-15);

  const FlowModel m = make_henon_heiles(1.0 / 6.0 + 1e-3);
  const Vec z = vec({0.1, 0.95, 0.02, -0.03});
  const auto e = m.frame_at(z);
  const Vec g = henon_heiles_gradient(z);
  Eigen::Matrix4d basis;
  basis << m.field(z), e[0], e[1], g;
  CHECK(std::abs(basis.determinant()) > 1e-6);
  CHECK(std::abs(e[0].dot(g)) < 1e-15);
  CHECK(std::abs(e[1].dot(g)) < 1e-15);
  // omega(e1, e2) = <J0 e1, e2> > 0
  CHECK((i * e[0]).dot(e[1]) > 0.0);
}

TEST_CASE("henon-heiles energy drift over T=100 stays below 1e-9") {
  const FlowModel m = make_henon_heiles(1.0 / 6.0 + 1e-3);
  Vec z = vec({0.0, 0.0, 0.0, 0.0});
  z(2) = 0.3;
  z(3) = std::sqrt(2.0 * m.invariants[0].level - 0.09);
  const Trajectory tr = integrate(m, z, 0.0, 100.0);
  REQUIRE(tr.drift.size() == 1);
  CHECK(tr.drift[0] < 1e-9);
  // step-halving oracle: tighter tolerance agrees with the endpoint
  IntegrateOptions fine;
  fine.rtol = fine.atol = 1e-13;
  const Trajectory tr2 = integrate(m, z, 0.0, 20.0, fine);
  const Trajectory tr1 = integrate(m, z, 0.0, 20.0);
  CHECK((tr2.final_state() - tr1.final_state()).norm() < 1e-8);
}

TEST_CASE("henon-heiles flow is Z3 equivariant") {
  const FlowModel m = make_henon_heiles(1.0 / 6.0 + 1e-3);
  const Vec z = vec({0.1, 0.2, 0.3, -0.1});
  const Vec a = rotate_hh_state(integrate(m, z, 0.0, 10.0).final_state(), kTwoPi / 3);
  const Vec b = integrate(m, rotate_hh_state(z, kTwoPi / 3), 0.0, 10.0).final_state();
  CHECK((a - b).norm() < 1e-9);
}

TEST_CASE("local model with constant u matches the closed form") {
  LocalModelParams p;
  p.u_series = {std::log(2.0)};
  p.period = 1.0;
  const FlowModel m = make_local_model(p);
  const Vec z0 = vec({0.0, 0.3, 0.01});
  const Trajectory tr = integrate(m, z0, 0.0, 5.0);
  for (double s : {0.5, 1.7, 3.3, 5.0}) {
    const Vec z = tr.eval(s);
    CHECK(std::abs(z(1) - 0.3 * std::pow(2.0, -s)) < 1e-8);
    CHECK(std::abs(z(2) - 0.01 * std::pow(2.0, s)) < 1e-8);
  }
  CHECK(tr.drift[0] < 1e-9);
  const Trajectory orbit = integrate(m, vec({0.0, 0.0, 0.0}), 0.0, 1.0);
  CHECK(orbit.final_state()(0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(orbit.final_state().tail<2>().norm() == 0.0);
}

TEST_CASE("local model with nonconstant u preserves xy") {
  LocalModelParams p;
  p.u_series = {0.7, 0.4, -0.3};
  const FlowModel m = make_local_model(p);
  const Trajectory tr = integrate(m, vec({0.0, 0.4, 0.05}), 0.0, 3.0);
  CHECK(tr.drift[0] < 1e-9);
}

TEST_CASE("local model parameter validation") {
  LocalModelParams p;
  p.u_series = {-0.1};
  CHECK_THROWS_AS(make_local_model(p), Error);
  p.u_series = {0.5};
  p.period = 0.0;
  CHECK_THROWS_AS(make_local_model(p), Error);
}

TEST_CASE("harmonic oscillator returns after 2 pi") {
  const FlowModel m = make_harmonic_oscillator();
  const Vec z0 = vec({0.0, 1.0});
  const Trajectory tr = integrate(m, z0, 0.0, kTwoPi);
  CHECK((tr.final_state() - z0).norm() < 1e-9);

  SectionSpec sec{vec({0.0, 0.0}), vec({1.0, 0.0}), 1};
  const auto rec = return_map(m, sec, {z0, vec({0.0, 0.5})}, 10.0);
  for (const auto& r : rec) {
    REQUIRE(r.status == ReturnStatus::Ok);
    CHECK(std::abs(r.transit_time - kTwoPi) < 1e-9);
    CHECK((r.exit - r.seed).norm() < 1e-9);
  }
}

TEST_CASE("dense output agrees with re-integration") {
  const FlowModel m = make_henon_heiles(1.0 / 6.0 + 1e-3);
  const Vec z0 = vec({0.05, 0.1, 0.3, 0.2});
  IntegrateOptions o;
  o.rtol = o.atol = 1e-10;
  const Trajectory tr = integrate(m, z0, 0.0, 20.0, o);
  for (double t : {0.37, 3.14, 11.1, 19.9}) {
    IntegrateOptions fine;
    fine.rtol = fine.atol = 1e-13;
    const Vec ref = integrate(m, z0, 0.0, t, fine).final_state();
    CHECK((tr.eval(t) - ref).norm() < 10 * 1e-10 * 20);
  }
}

TEST_CASE("variational flow: identity at zero span, closed form for local model") {
  LocalModelParams p;
  p.u_series = {std::log(3.0)};
  p.period = 1.0;
  const FlowModel m = make_local_model(p);
  const auto v0 = integrate_variational(m, vec({0.0, 0.0, 0.0}), 0.0, 0.0);
  CHECK((v0.final_matrix() - Mat::Identity(3, 3)).norm() == 0.0);
  const auto v = integrate_variational(m, vec({0.0, 0.0, 0.0}), 0.0, 1.0);
  const Mat phi = v.final_matrix();
  CHECK(phi(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
  CHECK(phi(2, 2) == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(std::abs(phi(1, 2)) < 1e-12);
}

TEST_CASE("henon-heiles variational flow is symplectic") {
  const FlowModel m = make_henon_heiles(1.0 / 6.0 + 1e-3);
  const auto v = integrate_variational(m, vec({0.05, 0.9, 0.02, 0.05}), 0.0, 5.0);
  const Mat phi = v.final_matrix();
  const Mat j = symplectic_j0();
  CHECK((phi.transpose() * j * phi - j).norm() < 1e-8);
  CHECK(std::abs(phi.determinant() - 1.0) < 1e-8);
}

TEST_CASE("return map flags the stable manifold as non-returning") {
  LocalModelParams p;
  p.u_series = {1.0};
  const FlowModel m = make_local_model(p);
  SectionSpec to{vec({0.0, 0.0, 0.25}), vec({0.0, 0.0, 1.0}), 1};
  const auto rec = return_map(m, to, {vec({0.0, 0.25, 0.0}), vec({0.0, 0.25, 0.01})}, 30.0);
  CHECK(rec[0].status == ReturnStatus::NoReturn);
  CHECK(rec[1].status == ReturnStatus::Ok);
  CHECK(rec[1].transit_time == doctest::Approx(std::log(0.25 / 0.01)).epsilon(1e-10));
}

TEST_CASE("affine horseshoe geometry") {
  const MapModel m = make_affine_horseshoe(3.0, 2);
  CHECK(affine_strip_offset(3.0, 2, 1) == doctest::Approx(1.0 - 1.0 / 9 - 1.0 / 3));
  CHECK(affine_strip_offset(3.0, 2, 2) == doctest::Approx(1.0 / 9));
  CHECK_THROWS(make_affine_horseshoe(2.0, 2));
  const Vec2 z(0.3, 0.2);
  CHECK((m.inverse(m.map(z)) - z).norm() < 1e-14);
  CHECK(m.jacobian(z).determinant() == doctest::Approx(1.0));
}

TEST_CASE("model json round trip") {
  const FlowModel m = make_henon_heiles(1.0 / 6.0 + 1e-3);
  const Json j = model_to_json(m);
  const FlowModel back = flow_model_from_json(j);
  CHECK(back.invariants[0].level == m.invariants[0].level);
  CHECK(model_to_json(back) == j);
  CHECK_THROWS_AS(flow_model_from_json(Json{{"kind", "nope"}}), Error);
}

TEST_CASE("synthetic passage closed form matches integration at r = 0") {
  SyntheticPassageSpec s;
  const FlowModel m = make_synthetic_passage_flow(s);
  for (double t0 : {-0.4, 0.0, 0.13, 0.5, 0.77, 1.2}) {
    const Vec z = integrate(m, vec({t0, 0.0, 0.0}), 0.0, 1.0).final_state();
    CHECK(std::abs(z(0) - synthetic_passage_h(s, t0)) < 1e-10);
  }
}
