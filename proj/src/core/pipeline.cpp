#include "reeb/pipeline.hpp"

#include "reeb/horseshoe.hpp"
#include "reeb/indices.hpp"
#include "reeb/io.hpp"
#include "reeb/parallel.hpp"
#include "reeb/transition.hpp"

#include <algorithm>
#include <filesystem>
#include <optional>
#include <set>
#include <sstream>

namespace reeb {

namespace fs = std::filesystem;

const std::vector<std::string>& pipeline_stage_names() {
  static const std::vector<std::string> names{"orbits",      "indices",   "normal_form",
                                              "transitions", "horseshoe", "entropy"};
  return names;
}

namespace {

// ---------------------------------------------------------------- stage options

struct OrbitsStage {
  std::string family = "lyapunov";
  std::vector<std::pair<Vec, double>> guesses;
  int samples = 256;
  int max_iterations = 40;
};

struct IndicesStage {
  int grid = 255;
  int window = 40;
  double tol_spec = 1e-6;
};

struct NormalFormStage {
  int orbit = 0;
  double radius = 0.01;
  int order = 4;
  int grid = 9;
  double tol_nf = 1e-6;
  int drift_trajectories = 20;
  int section_seeds = 6;
  int section_returns = 8;
};

struct TransitionsStage {
  double delta_fraction = 0.5;  // delta = fraction * chart radius
  CertificateOptions certificate;
  int spiral_power = 2;
  int spiral_decades = 12;
  double homoclinic_t0 = 0.3;
  double beta_slope = 0.0;  // exit arc t = beta_slope * r
  HomoclinicOptions homoclinic;
};

struct HorseshoeStage {
  std::string map = "from-normal-form";  // from-normal-form | model | inline
  Json map_model;
  HomoclinicSquareSpec square;
  StripBox box;
  int n_max = 3;
  double mu = 0.4;
  int word_count = 50;
  int word_length = 3;
  bool periodic_words = true;
};

struct EntropyStage {
  std::vector<int> n_values{1, 2, 3};
  std::vector<double> eps_fractions{0.5, 0.25, 0.125, 0.0625};
  int tail = 4;
  int columns = 1;
  int min_seeds = 256;
};

void require(bool ok, const Fields& f, const std::string& key, const std::string& what) {
  if (!ok) fail_validation("field '" + f.path(key) + "' " + what);
}

OrbitsStage parse_orbits(const Json& j) {
  const Fields f(j, "stages.orbits");
  OrbitsStage s;
  s.family = f.text("family", s.family);
  require(s.family == "lyapunov" || s.family == "guesses", f, "family",
          "must be 'lyapunov' or 'guesses'");
  if (const Json* g = f.raw("guesses")) {
    if (!g->is_array()) fail_validation("field '" + f.path("guesses") + "' must be an array");
    for (std::size_t i = 0; i < g->size(); ++i) {
      const Fields e((*g)[i], f.path("guesses") + "[" + std::to_string(i) + "]");
      const auto st = e.numbers("state", {});
      require(!st.empty(), e, "state", "must be a non-empty array");
      const double t = e.number("period");
      require(t > 0.0, e, "period", "must be positive");
      e.finish();
      s.guesses.emplace_back(Eigen::Map<const Vec>(st.data(), static_cast<Eigen::Index>(st.size())), t);
    }
  }
  require(s.family != "guesses" || !s.guesses.empty(), f, "guesses", "must list at least one guess");
  s.samples = f.integer("samples", s.samples);
  require(s.samples >= 8, f, "samples", "must be at least 8");
  s.max_iterations = f.integer("max_iterations", s.max_iterations);
  require(s.max_iterations >= 1, f, "max_iterations", "must be positive");
  f.finish();
  return s;
}

IndicesStage parse_indices(const Json& j) {
  const Fields f(j, "stages.indices");
  IndicesStage s;
  s.grid = f.integer("grid", s.grid);
  require(s.grid >= 15 && s.grid % 2 == 1, f, "grid", "must be an odd integer >= 15");
  s.window = f.integer("window", s.window);
  require(s.window >= 4, f, "window", "must be at least 4");
  s.tol_spec = f.number("tol_spec", s.tol_spec);
  require(s.tol_spec > 0.0, f, "tol_spec", "must be positive");
  f.finish();
  return s;
}

NormalFormStage parse_normal_form(const Json& j) {
  const Fields f(j, "stages.normal_form");
  NormalFormStage s;
  s.orbit = f.integer("orbit", s.orbit);
  require(s.orbit >= 0, f, "orbit", "must be a non-negative index");
  s.radius = f.number("radius", s.radius);
  require(s.radius > 0.0, f, "radius", "must be positive");
  s.order = f.integer("order", s.order);
  require(s.order >= 1 && s.order <= 12, f, "order", "must lie in [1, 12]");
  s.grid = f.integer("grid", s.grid);
  require(s.grid >= 3, f, "grid", "must be at least 3");
  s.tol_nf = f.number("tol_nf", s.tol_nf);
  require(s.tol_nf > 0.0, f, "tol_nf", "must be positive");
  s.drift_trajectories = f.integer("drift_trajectories", s.drift_trajectories);
  require(s.drift_trajectories >= 0, f, "drift_trajectories", "must be non-negative");
  s.section_seeds = f.integer("section_seeds", s.section_seeds);
  require(s.section_seeds >= 0, f, "section_seeds", "must be non-negative");
  s.section_returns = f.integer("section_returns", s.section_returns);
  require(s.section_returns >= 1, f, "section_returns", "must be positive");
  f.finish();
  return s;
}

TransitionsStage parse_transitions(const Json& j) {
  const Fields f(j, "stages.transitions");
  TransitionsStage s;
  s.delta_fraction = f.number("delta_fraction", s.delta_fraction);
  require(s.delta_fraction > 0.0 && s.delta_fraction < 1.0, f, "delta_fraction",
          "must lie in (0, 1)");
  if (const Json* c = f.raw("certificate")) {
    const Fields cf(*c, f.path("certificate"));
    s.certificate.t_samples = cf.integer("t_samples", s.certificate.t_samples);
    require(s.certificate.t_samples >= 2, cf, "t_samples", "must be at least 2");
    s.certificate.r_samples = cf.integer("r_samples", s.certificate.r_samples);
    require(s.certificate.r_samples >= 2, cf, "r_samples", "must be at least 2");
    s.certificate.r_min = cf.number("r_min", s.certificate.r_min);
    require(s.certificate.r_min > 0.0, cf, "r_min", "must be positive");
    s.certificate.margin = cf.number("margin", s.certificate.margin);
    require(s.certificate.margin > 1.0, cf, "margin", "must exceed 1");
    cf.finish();
  }
  if (const Json* c = f.raw("spiral")) {
    const Fields sf(*c, f.path("spiral"));
    s.spiral_power = sf.integer("power", s.spiral_power);
    require(s.spiral_power >= 1, sf, "power", "must be positive");
    s.spiral_decades = sf.integer("decades", s.spiral_decades);
    require(s.spiral_decades >= 2, sf, "decades", "must be at least 2");
    sf.finish();
  }
  if (const Json* c = f.raw("homoclinic")) {
    const Fields hf(*c, f.path("homoclinic"));
    s.homoclinic_t0 = hf.number("t0", s.homoclinic_t0);
    require(s.homoclinic_t0 > 0.0 && s.homoclinic_t0 < 1.0, hf, "t0", "must lie in (0, 1)");
    s.beta_slope = hf.number("beta_slope", s.beta_slope);
    s.homoclinic.turns = hf.integer("turns", s.homoclinic.turns);
    require(s.homoclinic.turns >= 1, hf, "turns", "must be positive");
    s.homoclinic.r_lo = hf.number("r_lo", s.homoclinic.r_lo);
    require(s.homoclinic.r_lo > 0.0, hf, "r_lo", "must be positive");
    s.homoclinic.lambda = hf.number("lambda", s.homoclinic.lambda);
    require(s.homoclinic.lambda > 0.0 && s.homoclinic.lambda < 1.0, hf, "lambda",
            "must lie in (0, 1)");
    hf.finish();
  }
  f.finish();
  return s;
}

HorseshoeStage parse_horseshoe(const Json& j) {
  const Fields f(j, "stages.horseshoe");
  HorseshoeStage s;
  if (const Json* m = f.raw("map")) {
    if (m->is_string()) {
      s.map = m->get<std::string>();
      require(s.map == "from-normal-form" || s.map == "model", f, "map",
              "must be 'from-normal-form', 'model' or a map model document");
    } else if (m->is_object()) {
      s.map = "inline";
      s.map_model = *m;
      map_model_from_json(s.map_model);
    } else {
      fail_validation("field '" + f.path("map") + "' must be a string or an object");
    }
  }
  if (const Json* q = f.raw("square")) {
    const Fields qf(*q, f.path("square"));
    s.square.A = qf.number("A", s.square.A);
    s.square.B = qf.number("B", s.square.B);
    s.square.C = qf.number("C", s.square.C);
    s.square.D = qf.number("D", s.square.D);
    s.square.t0 = qf.number("t0", s.square.t0);
    s.square.delta = qf.number("delta", s.square.delta);
    qf.finish();
  }
  if (const Json* b = f.raw("box")) {
    const Fields bf(*b, f.path("box"));
    for (const char* k : {"u0", "u1", "v0", "v1"}) bf.number(k, 0.0);
    bf.boolean("transposed", false);
    bf.finish();
    s.box = box_from_json(*b);
  }
  s.n_max = f.integer("n_max", s.n_max);
  require(s.n_max >= 2, f, "n_max", "must be at least 2");
  s.mu = f.number("mu", s.mu);
  require(s.mu > 0.0 && s.mu < 1.0, f, "mu", "must lie in (0, 1)");
  if (const Json* w = f.raw("words")) {
    const Fields wf(*w, f.path("words"));
    s.word_count = wf.integer("count", s.word_count);
    require(s.word_count >= 1, wf, "count", "must be positive");
    s.word_length = wf.integer("length", s.word_length);
    require(s.word_length >= 1, wf, "length", "must be positive");
    s.periodic_words = wf.boolean("periodic", s.periodic_words);
    wf.finish();
  }
  f.finish();
  return s;
}

EntropyStage parse_entropy(const Json& j) {
  const Fields f(j, "stages.entropy");
  EntropyStage s;
  s.n_values = f.integers("n_values", s.n_values);
  require(s.n_values.size() >= 2, f, "n_values", "must list at least two orbit lengths");
  for (int n : s.n_values) require(n >= 1, f, "n_values", "must be positive");
  s.eps_fractions = f.numbers("eps_fractions", s.eps_fractions);
  require(!s.eps_fractions.empty(), f, "eps_fractions", "must not be empty");
  for (double e : s.eps_fractions)
    require(e > 0.0 && e <= 1.0, f, "eps_fractions", "must lie in (0, 1]");
  s.tail = f.integer("tail", s.tail);
  require(s.tail >= 0, f, "tail", "must be non-negative");
  s.columns = f.integer("columns", s.columns);
  require(s.columns >= 1, f, "columns", "must be positive");
  s.min_seeds = f.integer("min_seeds", s.min_seeds);
  require(s.min_seeds >= 1, f, "min_seeds", "must be positive");
  f.finish();
  return s;
}

void validate_stage(const std::string& name, const Json& j) {
  if (name == "orbits") parse_orbits(j);
  if (name == "indices") parse_indices(j);
  if (name == "normal_form") parse_normal_form(j);
  if (name == "transitions") parse_transitions(j);
  if (name == "horseshoe") parse_horseshoe(j);
  if (name == "entropy") parse_entropy(j);
}

// Stages a stage needs, given its options.
std::vector<std::string> stage_dependencies(const std::string& name, const Json& opts) {
  if (name == "indices" || name == "normal_form") return {"orbits"};
  if (name == "transitions") return {"normal_form"};
  if (name == "horseshoe" && parse_horseshoe(opts).map == "from-normal-form") return {"normal_form"};
  if (name == "entropy") return {"horseshoe"};
  return {};
}

const char* topic_of(const std::string& stage) {
  if (stage == "orbits") return "periodic orbits and Floquet data";
  if (stage == "indices") return "Conley-Zehnder index from the asymptotic operator";
  if (stage == "normal_form") return "normal form near a hyperbolic orbit";
  if (stage == "transitions") return "logarithmic twist of the local passage";
  if (stage == "horseshoe") return "strips, Moser conditions and symbolic coding";
  return "topological entropy from separated sets";
}

const char* artifact_file(const std::string& stage) {
  if (stage == "orbits") return "orbits.json";
  if (stage == "indices") return "cz.json";
  if (stage == "normal_form") return "nf.json";
  if (stage == "transitions") return "transitions.json";
  if (stage == "horseshoe") return "horseshoe.json";
  return "entropy.json";
}

const char* artifact_kind(const std::string& stage) {
  if (stage == "orbits") return "orbits";
  if (stage == "indices") return "cz";
  if (stage == "normal_form") return "nf";
  if (stage == "transitions") return "transitions";
  if (stage == "horseshoe") return "horseshoe";
  return "entropy";
}

// ---------------------------------------------------------------- stages

struct Context {
  const RunConfig& cfg;
  std::optional<FlowModel> flow;
  std::optional<MapModel> map;
  std::vector<PeriodicOrbit> orbits;
  std::optional<NormalFormChart> chart;
  std::optional<MapModel> hs_map;
  std::optional<StripSystem> strips;
  double strip_gap = 0.0;
};

const FlowModel& need_flow(const Context& c, const std::string& stage) {
  if (!c.flow) fail_validation("stage '" + stage + "' needs a flow model, got a map model");
  return *c.flow;
}

Json run_orbits(Context& c) {
  const OrbitsStage s = parse_orbits(c.cfg.stages.at("orbits"));
  const FlowModel& m = need_flow(c, "orbits");
  OrbitSearchOptions oo;
  oo.workers = c.cfg.workers;
  oo.n_samples = static_cast<std::size_t>(s.samples);
  oo.max_iterations = s.max_iterations;
  Json body;
  if (s.family == "lyapunov") {
    const auto tri = find_lyapunov_triple(m, oo);
    c.orbits.assign(tri.begin(), tri.end());
    double dist = 0.0, spread = 0.0;
    for (int k = 0; k < 3; ++k) {
      dist = std::max(dist, rotated_orbit_distance(m, tri[k], tri[(k + 1) % 3], kTwoPi / 3));
      spread = std::max(spread, std::abs(tri[k].period - tri[(k + 1) % 3].period));
    }
    body["symmetry"] = {{"max_rotated_distance", dist}, {"period_spread", spread}};
  } else {
    std::vector<std::optional<PeriodicOrbit>> found(s.guesses.size());
    std::vector<std::string> errors(s.guesses.size());
    OrbitSearchOptions inner = oo;
    inner.workers = 1;
    parallel_for(s.guesses.size(), c.cfg.workers, [&](std::size_t i) {
      try {
        found[i] = find_periodic_orbit(m, s.guesses[i].first, s.guesses[i].second, inner);
      } catch (const Error& e) {
        errors[i] = e.what();
      }
    });
    for (std::size_t i = 0; i < found.size(); ++i) {
      if (!found[i])
        fail_numerical("orbit search from guess " + std::to_string(i) + " failed", errors[i]);
      c.orbits.push_back(*found[i]);
    }
  }
  body["model"] = model_to_json(m);
  Json list = Json::array();
  for (const auto& o : c.orbits) list.push_back(to_json(o, true));
  body["orbits"] = list;
  body["count"] = c.orbits.size();
  return body;
}

Json run_indices(Context& c) {
  const IndicesStage s = parse_indices(c.cfg.stages.at("indices"));
  const FlowModel& m = need_flow(c, "indices");
  SpectrumOptions so;
  so.grid = s.grid;
  so.window = s.window;
  std::vector<Json> rows(c.orbits.size());
  parallel_for(c.orbits.size(), c.cfg.workers, [&](std::size_t i) {
    const AsymptoticSpectrum sp = asymptotic_spectrum(c.orbits[i], m, so);
    const CzResult cz = cz_index(sp, s.tol_spec);
    rows[i] = Json{{"orbit", i}, {"cz", cz.index}, {"index", to_json(cz)}, {"spectrum", to_json(sp)}};
  });
  Json list = Json::array();
  std::vector<int> values;
  for (auto& r : rows) {
    values.push_back(r.at("cz").get<int>());
    list.push_back(std::move(r));
  }
  return Json{{"indices", list}, {"values", values}, {"tol_spec", s.tol_spec}};
}

Json run_normal_form(Context& c) {
  const NormalFormStage s = parse_normal_form(c.cfg.stages.at("normal_form"));
  const FlowModel& m = need_flow(c, "normal_form");
  if (s.orbit >= static_cast<int>(c.orbits.size()))
    fail_validation("field 'stages.normal_form.orbit' is out of range (" +
                    std::to_string(c.orbits.size()) + " orbits)");
  NormalFormOptions no;
  no.grid = s.grid;
  no.tol_nf = s.tol_nf;
  no.workers = c.cfg.workers;
  c.chart = fit_normal_form(m, c.orbits[static_cast<std::size_t>(s.orbit)], s.radius, s.order, no);
  Json body = to_json(*c.chart);
  body["orbit_index"] = s.orbit;
  if (s.drift_trajectories > 0) {
    const DriftReport d =
        normal_form_drift(m, *c.chart, static_cast<std::size_t>(s.drift_trajectories), c.cfg.workers);
    body["drift"] = {{"trajectories", d.trajectories}, {"returns", d.returns}, {"max_drift", d.max_drift}};
  }
  // Section returns of seeds just off the stable direction trace the
  // hyperbolic picture of the return map.
  std::vector<Json> traces(static_cast<std::size_t>(s.section_seeds));
  parallel_for(traces.size(), c.cfg.workers, [&](std::size_t i) {
    Json pts = Json::array();
    Vec2 ab(0.8 * s.radius, 0.8 * s.radius * std::pow(10.0, -static_cast<double>(i + 2)));
    for (int k = 0; k <= s.section_returns; ++k) {
      pts.push_back({{"seed", i}, {"k", k}, {"a", ab(0)}, {"b", ab(1)}});
      if (k == s.section_returns || ab.norm() > 2.0 * s.radius) break;
      const auto next = section_return(m, *c.chart, ab);
      if (!next) break;
      ab = *next;
    }
    traces[i] = pts;
  });
  Json points = Json::array();
  for (const auto& t : traces)
    for (const auto& p : t) points.push_back(p);
  body["section_points"] = points;
  return body;
}

Json run_transitions(Context& c) {
  const TransitionsStage s = parse_transitions(c.cfg.stages.at("transitions"));
  const NormalFormChart& chart = *c.chart;
  const double delta = s.delta_fraction * chart.radius;
  TransitionLift lift = local_exterior_lift(chart, delta);
  CertificateOptions co = s.certificate;
  co.workers = c.cfg.workers;
  lift.certificate = certify_lift(lift, co);
  Json body{{"lift", lift_summary(lift)}};

  const double r_max = lift.r_max;
  const SpiralReport sp = check_monotone_spiral(
      lift, [](double x) { return x; }, r_max / std::pow(0.5, s.spiral_power), s.spiral_power, 0.5,
      s.spiral_decades);
  body["spiral_check"] = {{"monotone", sp.monotone},
                          {"initial_slope", sp.initial_slope},
                          {"final_slope", sp.final_slope},
                          {"slope_ratio", sp.slope_ratio}};

  const double slope = s.beta_slope;
  auto t_beta = [slope](double r) { return slope * r; };
  const auto pts = detect_transverse_homoclinic(lift, s.homoclinic_t0, t_beta, s.homoclinic);
  Json hp = Json::array();
  for (const auto& p : pts) hp.push_back(to_json(p));
  body["homoclinic_points"] = hp;
  body["homoclinic_t0"] = s.homoclinic_t0;

  // Image of the entry arc t = t0 and the exit arc, in (t, r) with t taken
  // modulo nothing so the spiral unrolls.
  Json gamma = Json::array(), beta = Json::array();
  const double r_end = pts.empty() ? r_max * 1e-6 : 0.5 * pts.back().r;
  for (double r : geomspace(r_max, r_end, 400)) {
    const Vec2 im = lift(s.homoclinic_t0, r);
    gamma.push_back({im(0), im(1)});
    beta.push_back({t_beta(r), r});
  }
  body["spiral"] = {{"gamma", gamma}, {"beta", beta}};
  return body;
}

Json run_horseshoe(Context& c) {
  const HorseshoeStage s = parse_horseshoe(c.cfg.stages.at("horseshoe"));
  Json map_doc;
  if (s.map == "from-normal-form") {
    HomoclinicSquareSpec q = s.square;
    q.u = c.chart->u_series.at(0);
    q.period = c.chart->period;
    c.hs_map = make_homoclinic_square_map(q);
  } else if (s.map == "model") {
    if (!c.map) fail_validation("field 'stages.horseshoe.map' is 'model' but the model is not a map");
    c.hs_map = *c.map;
  } else {
    c.hs_map = map_model_from_json(s.map_model);
  }
  const MapModel& m = *c.hs_map;
  StripOptions so;
  so.workers = c.cfg.workers;
  c.strips = detect_strips(m, s.box, s.n_max, so);
  const StripSystem& sys = *c.strips;
  const MoserReport mo = verify_moser_conditions(m, sys);
  const ConeReport cone = cone_certificate(m, sys, s.mu);
  const int n = static_cast<int>(sys.size());
  const auto words = random_words(n, s.word_length, s.word_count, c.cfg.seed);
  const SemiconjugacyReport sc = semiconjugacy_check(m, sys, words, s.periodic_words, c.cfg.workers);

  // Closest pair of consecutive horizontal strips along the middle line.
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < sys.horizontal.size(); ++k) {
    const auto& a = sys.horizontal[k];
    const auto& b = sys.horizontal[k + 1];
    const std::size_t mid = a.s.size() / 2;
    gap = std::min(gap, std::abs(a.lo[mid] - b.hi[mid]));
  }
  c.strip_gap = gap;

  const bool certified = sys.size() == static_cast<std::size_t>(s.n_max) && mo.n1 && mo.n2 && cone.pass;
  Json body{{"map", model_to_json(m)},
            {"n_max", s.n_max},
            {"strips", to_json(sys)},
            {"moser", to_json(mo)},
            {"cones", to_json(cone)},
            {"words", to_json(sc)},
            {"word_length", s.word_length},
            {"periodic_words", s.periodic_words},
            {"strip_gap", gap},
            {"certified", certified},
            {"entropy_lower_bound", certified ? std::log(static_cast<double>(n)) : 0.0}};
  if (!certified) {
    std::string why = mo.witness.empty() ? cone.witness : mo.witness;
    if (sys.size() != static_cast<std::size_t>(s.n_max))
      why = std::to_string(sys.size()) + " strips found, " + std::to_string(s.n_max) + " requested";
    throw Error(ErrorKind::Numerical, "horseshoe certificate failed", dump_json(body.at("moser")) + why);
  }
  if (!sc.pass()) throw Error(ErrorKind::Numerical, "word realization failed", dump_json(body.at("words")));
  return body;
}

Json run_entropy(Context& c) {
  const EntropyStage s = parse_entropy(c.cfg.stages.at("entropy"));
  std::vector<double> eps;
  for (double f : s.eps_fractions) eps.push_back(f * c.strip_gap);
  EntropyOptions eo;
  eo.tail = s.tail;
  eo.columns = s.columns;
  eo.min_seeds = s.min_seeds;
  eo.workers = c.cfg.workers;
  const EntropyEstimate e = entropy_separated_sets(*c.hs_map, *c.strips, s.n_values, eps, eo);
  const double ln_n = std::log(static_cast<double>(c.strips->size()));
  return Json{{"estimate", to_json(e)},
              {"symbols", c.strips->size()},
              {"ln_symbols", ln_n},
              {"ratio", e.estimate / ln_n},
              {"eps_fractions", s.eps_fractions}};
}

Json run_stage(const std::string& name, Context& c) {
  if (name == "orbits") return run_orbits(c);
  if (name == "indices") return run_indices(c);
  if (name == "normal_form") return run_normal_form(c);
  if (name == "transitions") return run_transitions(c);
  if (name == "horseshoe") return run_horseshoe(c);
  return run_entropy(c);
}

}  // namespace

RunConfig parse_run_config(const Json& doc, const std::string& base_dir) {
  const Fields f(doc, "");
  RunConfig cfg;
  cfg.source = doc;
  const Json* model = f.raw("model");
  const std::string model_path = f.text("model_path", "");
  if ((model != nullptr) == !model_path.empty())
    fail_validation("config needs exactly one of 'model' and 'model_path'");
  if (model) {
    cfg.model = *model;
  } else {
    fs::path p(model_path);
    if (p.is_relative()) p = fs::path(base_dir) / p;
    cfg.model = read_json_file(p.string());
  }
  if (!cfg.model.is_object() || !cfg.model.contains("kind"))
    fail_validation("field 'model' must be a model document with a 'kind'");
  if (is_map_kind(cfg.model.at("kind").get<std::string>()))
    map_model_from_json(cfg.model);
  else
    flow_model_from_json(cfg.model);

  if (const Json* seed = f.raw("seed")) {
    if (!seed->is_number_unsigned()) fail_validation("field 'seed' must be a non-negative integer");
    cfg.seed = seed->get<std::uint64_t>();
  }
  cfg.output_dir = f.text("output_dir", cfg.output_dir);
  cfg.workers = f.integer("workers", cfg.workers);
  if (cfg.workers < 1) fail_validation("field 'workers' must be positive");

  const Json* stages = f.raw("stages");
  if (!stages) fail_validation("missing field 'stages'");
  const Fields sf(*stages, "stages");
  for (const auto& name : pipeline_stage_names())
    if (const Json* opts = sf.raw(name)) {
      validate_stage(name, *opts);
      cfg.stages[name] = *opts;
    }
  sf.finish();
  f.finish();
  if (cfg.stages.empty()) fail_validation("field 'stages' must request at least one stage");
  for (const auto& [name, opts] : cfg.stages)
    for (const auto& dep : stage_dependencies(name, opts))
      if (!cfg.stages.count(dep))
        fail_validation("field 'stages." + name + "' requires stage '" + dep + "'");
  return cfg;
}

RunResult run_pipeline(const RunConfig& cfg) {
  RunResult res;
  res.output_dir = cfg.output_dir;
  Context ctx{cfg, {}, {}, {}, {}, {}, {}, 0.0};
  const std::string kind = cfg.model.at("kind").get<std::string>();
  if (is_map_kind(kind))
    ctx.map = map_model_from_json(cfg.model);
  else
    ctx.flow = flow_model_from_json(cfg.model);

  Json artifacts = Json::array();
  std::set<std::string> topics;
  std::map<std::string, std::string> status;
  for (const auto& name : pipeline_stage_names()) {
    if (!cfg.stages.count(name)) continue;
    StageOutcome out;
    out.name = name;
    std::string blocked;
    for (const auto& dep : stage_dependencies(name, cfg.stages.at(name)))
      if (status[dep] != "ok") blocked = dep;
    if (!blocked.empty()) {
      out.status = "skipped";
      out.reason = "stage '" + blocked + "' did not complete";
    } else {
      try {
        Json body = run_stage(name, ctx);
        body["artifact"] = artifact_kind(name);
        body["topic"] = topic_of(name);
        const std::string text = dump_json(body);
        const std::string file = artifact_file(name);
        write_file_atomic((fs::path(cfg.output_dir) / file).string(), text);
        artifacts.push_back(
            {{"stage", name}, {"file", file}, {"sha256", sha256_hex(text)}, {"topic", topic_of(name)}});
        topics.insert(topic_of(name));
        out.status = "ok";
        out.artifacts.push_back(file);
      } catch (const Error& e) {
        out.status = "failed";
        out.code = static_cast<int>(e.kind());
        out.reason = e.what();
        out.witness = e.witness();
      } catch (const std::exception& e) {
        out.status = "failed";
        out.code = static_cast<int>(ErrorKind::Internal);
        out.reason = e.what();
      }
    }
    if (out.status == "failed" && res.exit_code == 0) res.exit_code = out.code;
    status[name] = out.status;
    res.stages.push_back(out);
  }

  Json stages = Json::array();
  for (const auto& s : res.stages) {
    Json j{{"name", s.name}, {"status", s.status}, {"artifacts", s.artifacts}};
    if (s.status != "ok") j["reason"] = s.reason;
    if (!s.witness.empty()) j["witness"] = s.witness;
    if (s.code) j["code"] = s.code;
    stages.push_back(j);
  }
  // The digest covers the scientific content of the config only.
  Json canonical = cfg.source;
  canonical.erase("output_dir");
  canonical.erase("workers");
  canonical["model"] = cfg.model;
  canonical.erase("model_path");
  res.manifest = Json{{"artifact", "manifest"},
                      {"seed", cfg.seed},
                      {"config_sha256", sha256_hex(dump_json(canonical))},
                      {"model", {{"kind", kind}, {"name", cfg.model.value("name", std::string())}}},
                      {"stages", stages},
                      {"artifacts", artifacts},
                      {"topics", std::vector<std::string>(topics.begin(), topics.end())},
                      {"exit_code", res.exit_code}};
  write_file_atomic((fs::path(cfg.output_dir) / "manifest.json").string(), dump_json(res.manifest));
  return res;
}

// ---------------------------------------------------------------- plot data

namespace {

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void need_artifact(const Json& a, const std::string& kind, const std::string& plot) {
  const std::string have = a.is_object() ? a.value("artifact", std::string("unknown")) : "unknown";
  if (have != kind)
    fail_validation("plot kind '" + plot + "' needs a " + kind + " artifact, got " + have);
}

}  // namespace

std::map<std::string, std::string> plot_data(const Json& artifact, const std::string& kind) {
  std::map<std::string, std::string> out;
  std::ostringstream os;
  if (kind == "section-scatter") {
    need_artifact(artifact, "nf", kind);
    os << "seed,k,a,b\n";
    for (const auto& p : artifact.at("section_points"))
      os << p.at("seed").get<int>() << ',' << p.at("k").get<int>() << ','
         << num(p.at("a").get<double>()) << ',' << num(p.at("b").get<double>()) << '\n';
    out["section-scatter.csv"] = os.str();
  } else if (kind == "spiral") {
    need_artifact(artifact, "transitions", kind);
    os << "curve,t,r\n";
    for (const char* curve : {"gamma", "beta"})
      for (const auto& p : artifact.at("spiral").at(curve))
        os << curve << ',' << num(p[0].get<double>()) << ',' << num(p[1].get<double>()) << '\n';
    out["spiral.csv"] = os.str();
  } else if (kind == "strips") {
    need_artifact(artifact, "horseshoe", kind);
    os << "family,index,s,lo,hi\n";
    for (const char* fam : {"horizontal", "vertical"})
      for (const auto& st : artifact.at("strips").at(fam))
        for (const auto& p : st.at("samples"))
          os << fam << ',' << st.at("index").get<int>() << ',' << num(p[0].get<double>()) << ','
             << num(p[1].get<double>()) << ',' << num(p[2].get<double>()) << '\n';
    out["strips.csv"] = os.str();
  } else if (kind == "entropy-curve") {
    const Json* e = nullptr;
    if (artifact.is_object() && artifact.value("artifact", std::string()) == "entropy")
      e = &artifact.at("estimate");
    else if (artifact.is_object() && artifact.contains("counts") && artifact.contains("eps"))
      e = &artifact;
    if (!e) need_artifact(artifact, "entropy", kind);
    os << "eps,n,count,log_count\n";
    const auto& eps = e->at("eps");
    const auto& ns = e->at("n_values");
    for (std::size_t i = 0; i < eps.size(); ++i)
      for (std::size_t k = 0; k < ns.size(); ++k) {
        const long long cnt = e->at("counts")[i][k].get<long long>();
        os << num(eps[i].get<double>()) << ',' << ns[k].get<int>() << ',' << cnt << ','
           << num(std::log(static_cast<double>(std::max(1LL, cnt)))) << '\n';
      }
    out["entropy-curve.csv"] = os.str();
  } else {
    fail_validation("unknown plot kind '" + kind +
                    "' (expected section-scatter, spiral, strips or entropy-curve)");
  }
  return out;
}

}  // namespace reeb
