#include "reeb/models.hpp"

#include "reeb/horseshoe.hpp"

#include <algorithm>
#include <sstream>

namespace reeb {

namespace {

Vec finite_difference_direction(const std::function<Vec(const Vec&)>& f, const Vec& z,
                                const Vec& v) {
  const double scale = std::max(1.0, z.norm());
  const double h = 1e-6 * scale / std::max(v.norm(), 1e-300);
  return (f(z + h * v) - f(z - h * v)) / (2.0 * h);
}

Eigen::Matrix4d hh_hamiltonian_hessian(double w1, double w2) {
  Eigen::Matrix4d h = Eigen::Matrix4d::Zero();
  h(0, 0) = w1;
  h(1, 1) = w2;
  h(2, 2) = w1;
  h(3, 3) = w2;
  return h;
}

// Field, frame and frame derivative of H on R^4 with the quaternionic triple.
void install_quaternionic_frame(FlowModel& m, std::function<Vec(const Vec&)> grad,
                                std::function<Eigen::Matrix4d(const Vec&)> hess) {
  const Eigen::Matrix4d j0 = symplectic_j0();
  const Eigen::Matrix4d jq = quaternion_j();
  const Eigen::Matrix4d kq = quaternion_k();
  m.field = [j0, grad](const Vec& z) -> Vec { return j0 * grad(z); };
  m.jacobian = [j0, hess](const Vec& z) -> Mat { return j0 * hess(z); };
  Frame fr;
  fr.id = "quaternionic(Jq gradH, Kq gradH)";
  fr.vectors = [jq, kq, grad](const Vec& z) {
    const Vec g = grad(z);
    return std::array<Vec, 2>{Vec(jq * g), Vec(kq * g)};
  };
  fr.derivative = [jq, kq, hess](const Vec& z, const Vec& v) {
    const Vec hv = hess(z) * v;
    return std::array<Vec, 2>{Vec(jq * hv), Vec(kq * hv)};
  };
  m.frame = fr;
  // p . dq integrand on (z, zdot)
  m.action_density = [](const Vec& z, const Vec& zdot) {
    return z(2) * zdot(0) + z(3) * zdot(1);
  };
}

double get_number(const Json& params, const char* key) {
  if (!params.contains(key) || !params.at(key).is_number())
    fail_validation(std::string("model params: missing numeric field '") + key + "'");
  return params.at(key).get<double>();
}

double get_number_or(const Json& params, const char* key, double fallback) {
  if (!params.contains(key)) return fallback;
  if (!params.at(key).is_number())
    fail_validation(std::string("model params: field '") + key + "' must be numeric");
  return params.at(key).get<double>();
}

Json tolerances_to_json(const Tolerances& t) {
  return Json{{"energy", t.energy},         {"transverse", t.transverse},
              {"closure", t.closure},       {"floquet", t.floquet},
              {"spectrum", t.spectrum},     {"symplectic", t.symplectic}};
}

void apply_tolerances(const Json& doc, Tolerances& t) {
  if (!doc.contains("tolerances")) return;
  const Json& j = doc.at("tolerances");
  t.energy = get_number_or(j, "energy", t.energy);
  t.transverse = get_number_or(j, "transverse", t.transverse);
  t.closure = get_number_or(j, "closure", t.closure);
  t.floquet = get_number_or(j, "floquet", t.floquet);
  t.spectrum = get_number_or(j, "spectrum", t.spectrum);
  t.symplectic = get_number_or(j, "symplectic", t.symplectic);
}

}  // namespace

Vec FlowModel::wrapped_difference(const Vec& a, const Vec& b) const {
  Vec d = b - a;
  if (angle_index >= 0 && angle_period > 0.0) {
    double& x = d(angle_index);
    x -= angle_period * std::round(x / angle_period);
  }
  return d;
}

std::array<Vec, 2> FlowModel::frame_at(const Vec& z) const {
  if (!frame) fail_validation("model '" + name + "' declares no transverse frame");
  return frame->vectors(z);
}

std::array<Vec, 2> FlowModel::frame_derivative(const Vec& z, const Vec& v) const {
  if (!frame) fail_validation("model '" + name + "' declares no transverse frame");
  if (frame->derivative) return frame->derivative(z, v);
  auto e1 = [this](const Vec& p) { return Vec(frame->vectors(p)[0]); };
  auto e2 = [this](const Vec& p) { return Vec(frame->vectors(p)[1]); };
  return {finite_difference_direction(e1, z, v), finite_difference_direction(e2, z, v)};
}

const ConservedQuantity* FlowModel::level_quantity() const {
  for (const auto& c : invariants)
    if (c.level_constraint) return &c;
  return nullptr;
}

Mat2 MapModel::inverse_jacobian(const Vec2& z) const {
  if (!inverse) fail_validation("map '" + name + "' has no inverse");
  return jacobian(inverse(z)).inverse();
}

double LocalModelParams::u(double w) const {
  double acc = 0.0;
  for (auto it = u_series.rbegin(); it != u_series.rend(); ++it) acc = acc * w + *it;
  return acc;
}

double LocalModelParams::du(double w) const {
  double acc = 0.0;
  for (std::size_t k = u_series.size(); k-- > 1;)
    acc = acc * w + static_cast<double>(k) * u_series[k];
  return acc;
}

void LocalModelParams::validate() const {
  if (!(period > 0.0)) fail_validation("local model: period must be positive");
  if (u_series.empty()) fail_validation("local model: u_series is empty");
  if (!(u_series[0] > 0.0))
    fail_validation("local model: u_series[0] = ln(eta) must be positive (eta > 1)");
  if (!(radius > 0.0)) fail_validation("local model: radius must be positive");
  if (!(tol_series >= 0.0)) fail_validation("local model: tol_series must be non-negative");
  // The stored polynomial is the model, so the truncation tail is zero; a
  // positive u on the whole disk is still required for a hyperbolic orbit.
  const double wmax = radius * radius;
  for (double w : linspace(-wmax, wmax, 65))
    if (!(u(w) > 0.0)) fail_validation("local model: u(w) must stay positive on |w| <= radius^2");
}

Eigen::Matrix4d symplectic_j0() {
  Eigen::Matrix4d j = Eigen::Matrix4d::Zero();
  j(0, 2) = 1.0;
  j(1, 3) = 1.0;
  j(2, 0) = -1.0;
  j(3, 1) = -1.0;
  return j;
}

Eigen::Matrix4d quaternion_j() {
  Eigen::Matrix4d j = Eigen::Matrix4d::Zero();
  j(0, 1) = 1.0;
  j(1, 0) = -1.0;
  j(2, 3) = -1.0;
  j(3, 2) = 1.0;
  return j;
}

Eigen::Matrix4d quaternion_k() {
  Eigen::Matrix4d k = Eigen::Matrix4d::Zero();
  k(0, 3) = -1.0;
  k(1, 2) = 1.0;
  k(2, 1) = -1.0;
  k(3, 0) = 1.0;
  return k;
}

Vec rotate_hh_state(const Vec& z, double angle) {
  const Mat2 r = rotation(angle);
  Vec out(4);
  out.head<2>() = r * z.head<2>();
  out.tail<2>() = r * z.tail<2>();
  return out;
}

double henon_heiles_hamiltonian(const Vec& z) {
  const double q1 = z(0), q2 = z(1), p1 = z(2), p2 = z(3);
  return 0.5 * (p1 * p1 + p2 * p2) + 0.5 * (q1 * q1 + q2 * q2) + q1 * q1 * q2 -
         q2 * q2 * q2 / 3.0;
}

Vec henon_heiles_gradient(const Vec& z) {
  const double q1 = z(0), q2 = z(1);
  Vec g(4);
  g << q1 + 2.0 * q1 * q2, q2 + q1 * q1 - q2 * q2, z(2), z(3);
  return g;
}

Eigen::Matrix4d henon_heiles_hessian(const Vec& z) {
  const double q1 = z(0), q2 = z(1);
  Eigen::Matrix4d h = Eigen::Matrix4d::Identity();
  h(0, 0) = 1.0 + 2.0 * q2;
  h(0, 1) = 2.0 * q1;
  h(1, 0) = 2.0 * q1;
  h(1, 1) = 1.0 - 2.0 * q2;
  return h;
}

std::array<Vec, 3> henon_heiles_saddles() {
  std::array<Vec, 3> out;
  Vec base(4);
  base << 0.0, 1.0, 0.0, 0.0;
  for (int k = 0; k < 3; ++k) out[k] = rotate_hh_state(base, kTwoPi * k / 3.0);
  return out;
}

FlowModel make_henon_heiles(double energy, const HenonHeilesOptions& opts) {
  if (!std::isfinite(energy)) fail_validation("henon-heiles: energy must be finite");
  const double excess = energy - kHenonHeilesCritical;
  if (std::abs(excess) <= 1e-15)
    fail_validation("henon-heiles: energy is at critical value 1/6");
  if (excess < 0.0) fail_validation("henon-heiles: energy is below critical value 1/6");
  if (excess > opts.max_excess) {
    std::ostringstream os;
    os << "henon-heiles: energy - 1/6 = " << excess << " exceeds the configured cap "
       << opts.max_excess;
    fail_validation(os.str());
  }
  FlowModel m;
  m.name = "henon-heiles";
  m.kind = "henon-heiles";
  m.params = Json{{"energy", energy}, {"max_excess", opts.max_excess}};
  m.dim = 4;
  install_quaternionic_frame(
      m, [](const Vec& z) { return henon_heiles_gradient(z); },
      [](const Vec& z) { return henon_heiles_hessian(z); });
  ConservedQuantity h;
  h.name = "energy";
  h.value = [](const Vec& z) { return henon_heiles_hamiltonian(z); };
  h.gradient = [](const Vec& z) { return henon_heiles_gradient(z); };
  h.level_constraint = true;
  h.level = energy;
  m.invariants.push_back(h);
  return m;
}

FlowModel make_local_model(const LocalModelParams& params) {
  params.validate();
  FlowModel m;
  m.name = "local-model";
  m.kind = "local-model";
  m.params = Json{{"period", params.period},
                  {"u_series", params.u_series},
                  {"radius", params.radius},
                  {"tol_series", params.tol_series}};
  m.dim = 3;
  m.field = [params](const Vec& z) -> Vec {
    const double w = z(1) * z(2);
    const double u = params.u(w);
    Vec f(3);
    f << 1.0, -u * z(1), u * z(2);
    return f;
  };
  m.jacobian = [params](const Vec& z) -> Mat {
    const double x = z(1), y = z(2), w = x * y;
    const double u = params.u(w), du = params.du(w);
    Mat j = Mat::Zero(3, 3);
    j(1, 1) = -u - du * w;
    j(1, 2) = -du * x * x;
    j(2, 1) = du * y * y;
    j(2, 2) = u + du * w;
    return j;
  };
  ConservedQuantity xy;
  xy.name = "xy";
  xy.value = [](const Vec& z) { return z(1) * z(2); };
  xy.gradient = [](const Vec& z) {
    Vec g(3);
    g << 0.0, z(2), z(1);
    return g;
  };
  m.invariants.push_back(xy);
  Frame fr;
  fr.id = "coordinate(dx, dy)";
  fr.vectors = [](const Vec&) {
    Vec e1(3), e2(3);
    e1 << 0.0, 1.0, 0.0;
    e2 << 0.0, 0.0, 1.0;
    return std::array<Vec, 2>{e1, e2};
  };
  fr.derivative = [](const Vec&, const Vec&) {
    return std::array<Vec, 2>{Vec::Zero(3), Vec::Zero(3)};
  };
  m.frame = fr;
  m.angle_index = 0;
  m.angle_period = params.period;
  return m;
}

Mat2 linear_reeb_generator(const LinearReebSpec& spec, double period, double t) {
  if (spec.kind == LinearKind::Elliptic) return (kTwoPi * spec.theta / period) * rot90();
  const double w = kTwoPi * spec.winding / period;
  const Mat2 r = rotation(w * t);
  Mat2 d = Mat2::Zero();
  d(0, 0) = -spec.rate;
  d(1, 1) = spec.rate;
  return w * rot90() + r * d * r.transpose();
}

FlowModel make_linear_reeb_model(const LinearReebSpec& spec, double period) {
  if (!(period > 0.0)) fail_validation("linear model: period must be positive");
  if (spec.kind == LinearKind::Hyperbolic) {
    if (spec.winding < 0) fail_validation("linear model: winding k must be >= 0");
    if (!(spec.rate > 0.0)) fail_validation("linear model: expansion rate must be positive");
  }
  FlowModel m;
  m.kind = "linear-reeb";
  if (spec.kind == LinearKind::Elliptic) {
    m.name = "linear-elliptic";
    m.params = Json{{"type", "elliptic"}, {"theta", spec.theta}, {"period", period}};
  } else {
    m.name = "linear-hyperbolic";
    m.params = Json{{"type", "hyperbolic"},
                    {"k", spec.winding},
                    {"rate", spec.rate},
                    {"period", period}};
  }
  m.dim = 3;
  m.field = [spec, period](const Vec& z) -> Vec {
    const Vec2 xy = linear_reeb_generator(spec, period, z(0)) * z.tail<2>();
    Vec f(3);
    f << 1.0, xy(0), xy(1);
    return f;
  };
  m.jacobian = [spec, period](const Vec& z) -> Mat {
    const double h = 1e-6;
    const Mat2 g = linear_reeb_generator(spec, period, z(0));
    const Mat2 dg = (linear_reeb_generator(spec, period, z(0) + h) -
                     linear_reeb_generator(spec, period, z(0) - h)) /
                    (2.0 * h);
    Mat j = Mat::Zero(3, 3);
    j.block<2, 1>(1, 0) = dg * z.tail<2>();
    j.block<2, 2>(1, 1) = g;
    return j;
  };
  Frame fr;
  fr.id = "coordinate(dx, dy)";
  fr.vectors = [](const Vec&) {
    Vec e1(3), e2(3);
    e1 << 0.0, 1.0, 0.0;
    e2 << 0.0, 0.0, 1.0;
    return std::array<Vec, 2>{e1, e2};
  };
  fr.derivative = [](const Vec&, const Vec&) {
    return std::array<Vec, 2>{Vec::Zero(3), Vec::Zero(3)};
  };
  m.frame = fr;
  m.angle_index = 0;
  m.angle_period = period;
  return m;
}

FlowModel make_harmonic_oscillator() {
  FlowModel m;
  m.name = "harmonic-oscillator";
  m.kind = "harmonic-oscillator";
  m.dim = 2;
  m.field = [](const Vec& z) -> Vec {
    Vec f(2);
    f << z(1), -z(0);
    return f;
  };
  m.jacobian = [](const Vec&) -> Mat {
    Mat j(2, 2);
    j << 0.0, 1.0, -1.0, 0.0;
    return j;
  };
  ConservedQuantity h;
  h.name = "energy";
  h.value = [](const Vec& z) { return 0.5 * z.squaredNorm(); };
  h.gradient = [](const Vec& z) { return z; };
  m.invariants.push_back(h);
  m.action_density = [](const Vec& z, const Vec& zdot) { return z(1) * zdot(0); };
  return m;
}

FlowModel make_ellipsoid(double w1, double w2, double energy) {
  if (!(w1 > 0.0 && w2 > 0.0)) fail_validation("ellipsoid: frequencies must be positive");
  if (!(energy > 0.0)) fail_validation("ellipsoid: energy must be positive");
  FlowModel m;
  m.name = "ellipsoid";
  m.kind = "ellipsoid";
  m.params = Json{{"w1", w1}, {"w2", w2}, {"energy", energy}};
  m.dim = 4;
  const Eigen::Matrix4d hess = hh_hamiltonian_hessian(w1, w2);
  install_quaternionic_frame(
      m, [hess](const Vec& z) -> Vec { return hess * z; },
      [hess](const Vec&) { return hess; });
  ConservedQuantity h;
  h.name = "energy";
  h.value = [hess](const Vec& z) { return 0.5 * z.dot(hess * z); };
  h.gradient = [hess](const Vec& z) -> Vec { return hess * z; };
  h.level_constraint = true;
  h.level = energy;
  m.invariants.push_back(h);
  return m;
}

FlowModel make_synthetic_passage_flow(const SyntheticPassageSpec& spec) {
  if (!(spec.a > std::abs(spec.b)))
    fail_validation("synthetic passage: need a > |b| so that tdot > 0 at r = 0");
  if (!(spec.kappa >= 0.0)) fail_validation("synthetic passage: kappa must be >= 0");
  FlowModel m;
  m.name = "synthetic-passage";
  m.kind = "synthetic-passage";
  m.params = Json{{"a", spec.a}, {"b", spec.b}, {"kappa", spec.kappa}, {"gamma", spec.gamma}};
  m.dim = 3;
  m.field = [spec](const Vec& z) -> Vec {
    const double t = z(0), r = z(1);
    Vec f(3);
    f << spec.a + spec.b * std::cos(kTwoPi * t) + spec.kappa * r,
        spec.gamma * std::sin(kTwoPi * t) * r, 1.0;
    return f;
  };
  m.jacobian = [spec](const Vec& z) -> Mat {
    const double t = z(0), r = z(1);
    Mat j = Mat::Zero(3, 3);
    j(0, 0) = -kTwoPi * spec.b * std::sin(kTwoPi * t);
    j(0, 1) = spec.kappa;
    j(1, 0) = kTwoPi * spec.gamma * std::cos(kTwoPi * t) * r;
    j(1, 1) = spec.gamma * std::sin(kTwoPi * t);
    return j;
  };
  return m;
}

double synthetic_passage_h(const SyntheticPassageSpec& spec, double t, double duration) {
  // With w = tan(pi t) the r = 0 equation becomes a Riccati equation with
  // constant coefficients; psi below is its lifted angle variable.
  const double ap = spec.a + spec.b, am = spec.a - spec.b;
  const double ratio = std::sqrt(am / ap);
  const double k = std::sqrt(ap * am);
  const double n = std::floor(t + 0.5);
  const double tau = t - n;
  const double psi = std::atan(ratio * std::tan(kPi * tau)) + n * kPi;
  const double target = psi + kPi * k * duration;
  const double m = std::floor(target / kPi + 0.5);
  const double rem = target - m * kPi;
  return std::atan(std::tan(rem) / ratio) / kPi + m;
}

double affine_strip_offset(double expansion, int n_branches, int i) {
  const double gap = (1.0 - n_branches / expansion) / (n_branches + 1);
  return 1.0 - i * (gap + 1.0 / expansion);
}

MapModel make_affine_horseshoe(double expansion, int n_branches,
                               const AffineHorseshoeOptions& opts) {
  if (n_branches < 2) fail_validation("affine horseshoe: need at least 2 branches");
  if (!(expansion > 0.0)) fail_validation("affine horseshoe: expansion must be positive");
  if (!opts.allow_overlap && !(expansion > n_branches))
    fail_validation("affine horseshoe: strips not disjoint (expansion must exceed n_branches)");
  const double lam = expansion;
  const int n = n_branches;
  std::vector<double> off(n);
  for (int i = 0; i < n; ++i) off[i] = affine_strip_offset(lam, n, i + 1);
  // Branch whose strip [off_i, off_i + 1/lam] is nearest to s.
  auto branch_of = [off, lam](double s) {
    int best = 0;
    double best_d = INFINITY;
    for (std::size_t i = 0; i < off.size(); ++i) {
      const double lo = off[i], hi = off[i] + 1.0 / lam;
      const double d = s < lo ? lo - s : (s > hi ? s - hi : 0.0);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(i);
      }
    }
    return best;
  };
  MapModel m;
  m.name = "affine-horseshoe";
  m.kind = "affine-horseshoe";
  m.params = Json{{"expansion", expansion},
                  {"n_branches", n_branches},
                  {"allow_overlap", opts.allow_overlap}};
  m.map = [off, lam, branch_of](const Vec2& z) {
    const int i = branch_of(z(1));
    return Vec2(off[i] + z(0) / lam, lam * (z(1) - off[i]));
  };
  m.inverse = [off, lam, branch_of](const Vec2& z) {
    const int i = branch_of(z(0));
    return Vec2(lam * (z(0) - off[i]), off[i] + z(1) / lam);
  };
  m.jacobian = [lam](const Vec2&) {
    Mat2 j;
    j << 1.0 / lam, 0.0, 0.0, lam;
    return j;
  };
  m.area_density = [](const Vec2&) { return 1.0; };
  return m;
}

MapModel make_rotation_map(double angle) {
  MapModel m;
  m.name = "rotation";
  m.kind = "rotation";
  m.params = Json{{"angle", angle}};
  const Vec2 c(0.5, 0.5);
  m.map = [c, angle](const Vec2& z) { return Vec2(c + rotation(angle) * (z - c)); };
  m.inverse = [c, angle](const Vec2& z) { return Vec2(c + rotation(-angle) * (z - c)); };
  m.jacobian = [angle](const Vec2&) { return rotation(angle); };
  m.area_density = [](const Vec2&) { return 1.0; };
  return m;
}

bool is_map_kind(const std::string& kind) {
  return kind == "affine-horseshoe" || kind == "rotation" || kind == "homoclinic-square";
}

FlowModel flow_model_from_json(const Json& doc) {
  if (!doc.is_object() || !doc.contains("kind") || !doc.at("kind").is_string())
    fail_validation("model document: missing string field 'kind'");
  const std::string kind = doc.at("kind").get<std::string>();
  const Json params = doc.value("params", Json::object());
  FlowModel m;
  if (kind == "henon-heiles") {
    HenonHeilesOptions opts;
    opts.max_excess = get_number_or(params, "max_excess", opts.max_excess);
    m = make_henon_heiles(get_number(params, "energy"), opts);
  } else if (kind == "local-model") {
    LocalModelParams p;
    p.period = get_number_or(params, "period", p.period);
    p.radius = get_number_or(params, "radius", p.radius);
    p.tol_series = get_number_or(params, "tol_series", p.tol_series);
    if (params.contains("u_series")) {
      if (!params.at("u_series").is_array())
        fail_validation("model params: 'u_series' must be an array");
      p.u_series = params.at("u_series").get<std::vector<double>>();
    }
    m = make_local_model(p);
  } else if (kind == "linear-reeb") {
    LinearReebSpec s;
    const std::string type = params.value("type", std::string("elliptic"));
    if (type == "elliptic") {
      s.kind = LinearKind::Elliptic;
      s.theta = get_number(params, "theta");
    } else if (type == "hyperbolic") {
      s.kind = LinearKind::Hyperbolic;
      s.winding = static_cast<int>(get_number(params, "k"));
      s.rate = get_number_or(params, "rate", 1.0);
    } else {
      fail_validation("model params: 'type' must be elliptic or hyperbolic");
    }
    m = make_linear_reeb_model(s, get_number_or(params, "period", 1.0));
  } else if (kind == "harmonic-oscillator") {
    m = make_harmonic_oscillator();
  } else if (kind == "ellipsoid") {
    m = make_ellipsoid(get_number(params, "w1"), get_number(params, "w2"),
                       get_number_or(params, "energy", 0.5));
  } else if (kind == "synthetic-passage") {
    SyntheticPassageSpec s;
    s.a = get_number_or(params, "a", s.a);
    s.b = get_number_or(params, "b", s.b);
    s.kappa = get_number_or(params, "kappa", s.kappa);
    s.gamma = get_number_or(params, "gamma", s.gamma);
    m = make_synthetic_passage_flow(s);
  } else {
    fail_validation("model document: unknown flow kind '" + kind + "'");
  }
  if (doc.contains("name") && doc.at("name").is_string()) m.name = doc.at("name").get<std::string>();
  apply_tolerances(doc, m.tol);
  return m;
}

MapModel map_model_from_json(const Json& doc) {
  if (!doc.is_object() || !doc.contains("kind") || !doc.at("kind").is_string())
    fail_validation("model document: missing string field 'kind'");
  const std::string kind = doc.at("kind").get<std::string>();
  const Json params = doc.value("params", Json::object());
  MapModel m;
  if (kind == "affine-horseshoe") {
    AffineHorseshoeOptions opts;
    opts.allow_overlap = params.value("allow_overlap", false);
    m = make_affine_horseshoe(get_number(params, "expansion"),
                              static_cast<int>(get_number(params, "n_branches")), opts);
  } else if (kind == "rotation") {
    m = make_rotation_map(get_number(params, "angle"));
  } else if (kind == "homoclinic-square") {
    HomoclinicSquareSpec hs;
    hs.A = params.value("A", hs.A);
    hs.B = params.value("B", hs.B);
    hs.C = params.value("C", hs.C);
    hs.D = params.value("D", hs.D);
    hs.t0 = params.value("t0", hs.t0);
    hs.delta = params.value("delta", hs.delta);
    hs.u = params.value("u", hs.u);
    hs.period = params.value("period", hs.period);
    m = make_homoclinic_square_map(hs);
  } else {
    fail_validation("model document: unknown map kind '" + kind + "'");
  }
  if (doc.contains("name") && doc.at("name").is_string()) m.name = doc.at("name").get<std::string>();
  return m;
}

Json model_to_json(const FlowModel& m) {
  Json frame = nullptr;
  if (m.frame) frame = Json{{"id", m.frame->id}};
  return Json{{"name", m.name},
              {"kind", m.kind},
              {"dimension", m.dim},
              {"params", m.params},
              {"frame_spec", frame},
              {"tolerances", tolerances_to_json(m.tol)}};
}

Json model_to_json(const MapModel& m) {
  return Json{{"name", m.name},
              {"kind", m.kind},
              {"dimension", 2},
              {"params", m.params},
              {"frame_spec", nullptr},
              {"tolerances", Json{{"area", 1e-10}}}};
}

}  // namespace reeb
