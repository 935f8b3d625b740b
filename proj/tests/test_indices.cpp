#include "doctest.h"

#include "oracles.hpp"
#include "reeb/indices.hpp"

using namespace reeb;

namespace {

PeriodicOrbit central_orbit(const FlowModel& m, double period) {
  Vec g = Vec::Zero(3);
  return find_periodic_orbit(m, g, period);
}

Loop circle(const Eigen::Vector3d& c, const Eigen::Vector3d& u, const Eigen::Vector3d& v,
            double r, int n = 200) {
  Loop l;
  for (int i = 0; i < n; ++i) {
    const double t = kTwoPi * i / n;
    l.push_back(c + r * (std::cos(t) * u + std::sin(t) * v));
  }
  return l;
}

}  // namespace

TEST_CASE("elliptic spectrum matches 2 pi (k - theta) / T") {
  const double T = 2.0, theta = 0.3;
  LinearReebSpec s;
  s.theta = theta;
  const FlowModel m = make_linear_reeb_model(s, T);
  const PeriodicOrbit o = central_orbit(m, T);
  CHECK(o.cls == OrbitClass::Elliptic);
  CHECK(o.transverse_monodromy.trace() == doctest::Approx(2 * std::cos(0.6 * kPi)).epsilon(1e-9));
  const AsymptoticSpectrum sp = asymptotic_spectrum(o, m);
  for (const auto& e : sp.eigenpairs) {
    const double k = e.value * T / kTwoPi + theta;
    CHECK(std::abs(k - std::round(k)) < 1e-8);
    CHECK(e.winding == static_cast<int>(std::lround(k)));
  }
  CHECK(sp.winding_monotone);
  CHECK(sp.winding_pairs);
  CHECK(sp.refinement_converged);
  const CzResult cz = cz_index(sp);
  CHECK(cz.wind_negative == 0);
  CHECK(cz.wind_nonnegative == 1);
  CHECK(cz.index == 1);
}

TEST_CASE("cz index of linear models equals the closed forms and the Galerkin oracle") {
  for (double theta : {0.1, 0.7, 1.3, 1.9}) {
    LinearReebSpec s;
    s.theta = theta;
    const FlowModel m = make_linear_reeb_model(s, 1.0);
    const CzResult cz = cz_index(asymptotic_spectrum(central_orbit(m, 1.0), m));
    const int expected = 2 * static_cast<int>(std::floor(theta)) + 1;
    CHECK(cz.index == expected);
    auto sfun = [&](double t) { return oracle::linear_s(true, theta, 0, 0, 1.0, t); };
    CHECK(oracle::cz_from(oracle::galerkin_spectrum(sfun, 1.0, 32, 40)) == expected);
  }
  for (int k : {0, 1, 2}) {
    LinearReebSpec s;
    s.kind = LinearKind::Hyperbolic;
    s.winding = k;
    s.rate = 0.8;
    const FlowModel m = make_linear_reeb_model(s, 1.0);
    const PeriodicOrbit o = central_orbit(m, 1.0);
    CHECK(o.cls == OrbitClass::Hyperbolic);
    CHECK(o.multipliers[1].real() == doctest::Approx(std::exp(0.8)).epsilon(1e-8));
    const AsymptoticSpectrum sp = asymptotic_spectrum(o, m);
    const CzResult cz = cz_index(sp);
    CHECK(cz.index == 2 * k);
    CHECK(cz.wind_negative == k);
    CHECK(cz.wind_nonnegative == k);
    auto sfun = [&](double t) { return oracle::linear_s(false, 0, k, 0.8, 1.0, t); };
    CHECK(oracle::cz_from(oracle::galerkin_spectrum(sfun, 1.0, 32, 40)) == 2 * k);
  }
}

TEST_CASE("cz index is independent of the compatible complex structure") {
  LinearReebSpec s;
  s.kind = LinearKind::Hyperbolic;
  s.winding = 1;
  const FlowModel m = make_linear_reeb_model(s, 1.0);
  const PeriodicOrbit o = central_orbit(m, 1.0);
  SpectrumOptions opts;
  opts.conjugation << 2.0, 0.7, 0.0, 0.5;
  CHECK(cz_index(asymptotic_spectrum(o, m, opts)).index == cz_index(asymptotic_spectrum(o, m)).index);
}

TEST_CASE("local model has both extremal windings zero") {
  LocalModelParams p;
  p.u_series = {0.9, 0.3};
  const FlowModel m = make_local_model(p);
  const CzResult cz = cz_index(asymptotic_spectrum(central_orbit(m, 1.0), m));
  CHECK(cz.wind_negative == 0);
  CHECK(cz.wind_nonnegative == 0);
  CHECK(cz.index == 0);
}

TEST_CASE("ellipsoid orbits fix the orientation convention") {
  const FlowModel m = make_ellipsoid(1.3, 1.0, 0.5);
  Vec g1(4), g2(4);
  g1 << std::sqrt(2 * 0.5 / 1.3), 0, 0, 0;
  g2 << 0, 1, 0, 0;
  const PeriodicOrbit s = find_periodic_orbit(m, g1, kTwoPi / 1.3);
  const PeriodicOrbit l = find_periodic_orbit(m, g2, kTwoPi);
  CHECK(cz_index(asymptotic_spectrum(s, m)).index == 3);
  CHECK(cz_index(asymptotic_spectrum(l, m)).index == 5);
}

TEST_CASE("cz index of a reparametrised start point is unchanged") {
  const FlowModel m = make_ellipsoid(1.3, 1.0, 0.5);
  Vec g(4);
  g << 0, std::sqrt(0.5), 0, -std::sqrt(0.5);
  const PeriodicOrbit l = find_periodic_orbit(m, g, kTwoPi);
  CHECK(cz_index(asymptotic_spectrum(l, m)).index == 5);
}

TEST_CASE("henon-heiles lyapunov orbits have cz index 2") {
  const FlowModel m = make_henon_heiles(1.0 / 6.0 + 1e-3);
  const auto tri = find_lyapunov_triple(m);
  for (const auto& o : tri) {
    const AsymptoticSpectrum sp = asymptotic_spectrum(o, m);
    CHECK(sp.refinement_converged);
    CHECK(cz_index(sp).index == 2);
  }
}

TEST_CASE("linking numbers of simple configurations") {
  const Eigen::Vector3d ex(1, 0, 0), ey(0, 1, 0), ez(0, 0, 1);
  const Loop a = circle({0, 0, 0}, ex, ey, 1.0);
  const Loop b = circle({1, 0, 0}, ex, ez, 1.0);
  const LinkRecord hopf = linking_number(a, b);
  CHECK(std::abs(hopf.linking) == 1);
  CHECK(hopf.methods_agree);
  CHECK(hopf.linking == static_cast<int>(std::lround(oracle::gauss_integral(a, b))));
  const Loop far = circle({5, 0, 0}, ex, ey, 1.0);
  CHECK(linking_number(a, far).linking == 0);
  CHECK(linking_number(a, far).methods_agree);
  Loop ar(a.rbegin(), a.rend()), br(b.rbegin(), b.rend());
  CHECK(linking_number(b, a).linking == hopf.linking);
  CHECK(linking_number(ar, br).linking == hopf.linking);
  CHECK(linking_number(ar, b).linking == -hopf.linking);
  CHECK(crossing_linking(ar, b) == -hopf.linking);
  CHECK_THROWS_AS(linking_number(a, a), Error);
}

TEST_CASE("hopf fibres link +1 and have self-linking -1") {
  const LoopChart chart = stereographic_chart();
  const FlowModel m = make_ellipsoid(1.0, 1.0, 0.5);
  auto fibre = [](double c1, double c2) {
    std::vector<Vec> l;
    for (int i = 0; i < 300; ++i) {
      const double t = kTwoPi * i / 300;
      Vec z(4);
      z << c1 * std::cos(t), c2 * std::cos(t), -c1 * std::sin(t), -c2 * std::sin(t);
      l.push_back(z);
    }
    return l;
  };
  auto to_chart = [&](const std::vector<Vec>& l) {
    Loop out;
    for (const auto& z : l) out.push_back(chart.map(z));
    return out;
  };
  const auto f1 = fibre(0.8, 0.6), f2 = fibre(0.6, -0.8);
  const LinkRecord lr = linking_number(to_chart(f1), to_chart(f2));
  CHECK(chart.orientation * lr.linking == 1);
  CHECK(lr.crossings_value == lr.linking);
  const SelfLinkResult sl = self_linking(m, f1, chart);
  CHECK(sl.self_linking == -1);
  CHECK(sl.link.methods_agree);
}

TEST_CASE("planar unknot with constant vertical framing has self-linking 0") {
  const Eigen::Vector3d ex(1, 0, 0), ey(0, 1, 0);
  const Loop a = circle({0, 0, 0}, ex, ey, 1.0);
  Loop b = a;
  for (auto& p : b) p.z() += 1e-2;
  CHECK(linking_number(a, b).linking == 0);
}
