#include "reeb/service.hpp"

#include "reeb/horseshoe.hpp"
#include "reeb/indices.hpp"
#include "reeb/io.hpp"
#include "reeb/pipeline.hpp"
#include "reeb/transition.hpp"

#include <map>
#include <memory>

namespace reeb {

namespace {

Vec to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

const Json& need(const Fields& f, const std::string& key) {
  const Json* j = f.raw(key);
  if (!j) fail_validation("missing field '" + f.path(key) + "'");
  return *j;
}

FlowModel flow_of(const Fields& f) { return flow_model_from_json(need(f, "model")); }

MapModel map_of(const Fields& f) {
  const Json& doc = need(f, "map");
  if (!doc.is_object() || !is_map_kind(doc.value("kind", std::string())))
    fail_validation("field '" + f.path("map") + "' must be a map model document");
  return map_model_from_json(doc);
}

// Orbit files store (state, period); Floquet data is recomputed in the given model.
PeriodicOrbit orbit_of(const Fields& f, const FlowModel& m) {
  const PeriodicOrbit o = orbit_from_json(need(f, "orbit"));
  if (o.state.size() != m.dim) fail_validation("field 'orbit.state' must have the model dimension");
  return analyse_orbit(m, o.state, o.period);
}

// ---------------------------------------------------------------- model, flow, orbits

ServiceReply model_new(const Json& req) {
  const Fields f(req, "");
  const std::string kind = f.text("kind", "");
  if (kind.empty()) fail_validation("missing field 'kind'");
  Json doc{{"kind", kind}, {"params", f.raw("params") ? *f.raw("params") : Json::object()}};
  if (f.has("name")) doc["name"] = f.text("name", "");
  if (const Json* t = f.raw("tolerances")) doc["tolerances"] = *t;
  f.finish();
  if (is_map_kind(kind)) return {model_to_json(map_model_from_json(doc)), 0};
  return {model_to_json(flow_model_from_json(doc)), 0};
}

ServiceReply flow_integrate(const Json& req) {
  const Fields f(req, "");
  const FlowModel m = flow_of(f);
  const Vec z0 = to_vec(f.numbers("state", {}));
  if (z0.size() != m.dim) fail_validation("field 'state' must have the model dimension");
  const double t1 = f.number("t_end");
  const int samples = f.integer("samples", 201);
  if (samples < 2) fail_validation("field 'samples' must be at least 2");
  f.finish();
  const Trajectory tr = integrate(m, z0, 0.0, t1);
  Json times = Json::array(), states = Json::array();
  for (double t : linspace(0.0, tr.t_end(), static_cast<std::size_t>(samples))) {
    times.push_back(t);
    states.push_back(vec_json(tr.eval(t)));
  }
  return {Json{{"model", model_to_json(m)}, {"times", times}, {"states", states}, {"drift", tr.drift}}, 0};
}

ServiceReply flow_section(const Json& req, int workers) {
  const Fields f(req, "");
  const FlowModel m = flow_of(f);
  const SectionSpec sec = section_from_json(need(f, "section"));
  const Json& seeds_json = need(f, "seeds");
  if (!seeds_json.is_array()) fail_validation("field 'seeds' must be an array of states");
  std::vector<Vec> seeds;
  for (const auto& s : seeds_json) {
    if (!s.is_array()) fail_validation("field 'seeds' must be an array of states");
    seeds.push_back(to_vec(s.get<std::vector<double>>()));
    if (seeds.back().size() != m.dim) fail_validation("seed state has the wrong dimension");
  }
  const double max_time = f.number("max_time", 20.0);
  f.finish();
  ReturnMapOptions ro;
  ro.workers = workers;
  ro.tol_transverse = m.tol.transverse;
  const auto recs = return_map(m, sec, seeds, max_time, ro);
  Json out = Json::array();
  for (const auto& r : recs) out.push_back(to_json(r));
  return {Json{{"section", to_json(sec)}, {"records", out}}, 0};
}

ServiceReply orbits_lyapunov(const Json& req, int workers) {
  const Fields f(req, "");
  const FlowModel m = flow_of(f);
  OrbitSearchOptions oo;
  oo.workers = workers;
  oo.n_samples = static_cast<std::size_t>(f.integer("samples", 256));
  f.finish();
  const auto tri = find_lyapunov_triple(m, oo);
  Json list = Json::array();
  double dist = 0.0;
  for (int k = 0; k < 3; ++k) {
    list.push_back(to_json(tri[k], true));
    dist = std::max(dist, rotated_orbit_distance(m, tri[k], tri[(k + 1) % 3], kTwoPi / 3));
  }
  return {Json{{"model", model_to_json(m)}, {"orbits", list}, {"max_rotated_distance", dist}}, 0};
}

ServiceReply orbits_find(const Json& req, int workers) {
  const Fields f(req, "");
  const FlowModel m = flow_of(f);
  const Vec guess = to_vec(f.numbers("guess", {}));
  if (guess.size() != m.dim) fail_validation("field 'guess' must have the model dimension");
  const double period = f.number("period");
  OrbitSearchOptions oo;
  oo.workers = workers;
  oo.pin_guess_invariants = f.boolean("pin_invariants", false);
  f.finish();
  const PeriodicOrbit o = find_periodic_orbit(m, guess, period, oo);
  return {Json{{"model", model_to_json(m)}, {"orbits", Json::array({to_json(o, true)})}}, 0};
}

// ---------------------------------------------------------------- indices

ServiceReply index_cz(const Json& req) {
  const Fields f(req, "");
  const FlowModel m = flow_of(f);
  const PeriodicOrbit o = orbit_of(f, m);
  SpectrumOptions so;
  so.grid = f.integer("grid", so.grid);
  if (so.grid < 15 || so.grid % 2 == 0) fail_validation("field 'grid' must be an odd integer >= 15");
  const double tol = f.number("tol_spec", 1e-6);
  f.finish();
  const AsymptoticSpectrum sp = asymptotic_spectrum(o, m, so);
  const CzResult cz = cz_index(sp, tol);
  if (cz.degenerate)
    throw Error(ErrorKind::Undetermined, "index: degenerate spectrum near zero", dump_json(to_json(cz)));
  return {Json{{"cz", cz.index}, {"index", to_json(cz)}, {"spectrum", to_json(sp)}}, 0};
}

// ---------------------------------------------------------------- transitions

struct LiftBuilder {
  std::vector<std::shared_ptr<FlowModel>> models;  // kept alive for numerical lifts
  int workers = 1;

  TransitionLift build(const Json& spec, const std::string& path) {
    const Fields f(spec, path);
    const std::string type = f.text("type", "");
    TransitionLift l;
    if (type == "local") {
      LocalModelParams p;
      if (const Json* chart = f.raw("chart")) {
        p.period = chart->at("period").get<double>();
        p.u_series = chart->at("u_series").get<std::vector<double>>();
        p.radius = chart->at("radius").get<double>();
      } else {
        p.period = f.number("period", p.period);
        p.u_series = f.numbers("u_series", p.u_series);
        p.radius = f.number("radius", p.radius);
      }
      l = local_exterior_lift(p, f.number("delta"));
    } else if (type == "log-twist") {
      const double g = f.number("g", 0.0), h = f.number("h", 1.0);
      l = log_twist_lift([g](double) { return g; }, [h](double) { return h; }, f.number("r_max", 0.5),
                         "constant log twist");
    } else if (type == "synthetic-global") {
      SyntheticPassageSpec sp;
      if (const Json* ps = f.raw("passage")) {
        const Fields pf(*ps, f.path("passage"));
        sp.a = pf.number("a", sp.a);
        sp.b = pf.number("b", sp.b);
        sp.kappa = pf.number("kappa", sp.kappa);
        sp.gamma = pf.number("gamma", sp.gamma);
        pf.finish();
      }
      auto model = std::make_shared<FlowModel>(make_synthetic_passage_flow(sp));
      models.push_back(model);
      SectionChart from, to;
      from.section.anchor = Vec::Zero(3);
      from.section.normal = Vec::Unit(3, 2);
      from.embed = [](const Vec2& tr) -> Vec { return Eigen::Vector3d(tr(0), tr(1), 0.0); };
      from.coords = [](const Vec& z) -> Vec2 { return Vec2(z(0), z(1)); };
      to = from;
      to.section.anchor = Vec::Unit(3, 2);
      to.embed = [](const Vec2& tr) -> Vec { return Eigen::Vector3d(tr(0), tr(1), 1.0); };
      GlobalLiftOptions go;
      go.workers = workers;
      l = numerical_lift(*model, from, to, f.number("r_max", 0.25), LiftKind::Global, go);
    } else {
      fail_validation("field '" + f.path("type") + "' must be local, log-twist or synthetic-global");
    }
    f.finish();
    return l;
  }
};

CertificateOptions certificate_options(const Fields& f, int workers) {
  CertificateOptions co;
  co.workers = workers;
  if (const Json* c = f.raw("certificate")) {
    const Fields cf(*c, f.path("certificate"));
    co.t_samples = cf.integer("t_samples", co.t_samples);
    co.r_samples = cf.integer("r_samples", co.r_samples);
    co.r_min = cf.number("r_min", co.r_min);
    co.margin = cf.number("margin", co.margin);
    cf.finish();
  }
  return co;
}

ServiceReply transition_fit_nf(const Json& req, int workers) {
  const Fields f(req, "");
  const FlowModel m = flow_of(f);
  const PeriodicOrbit o = orbit_of(f, m);
  NormalFormOptions no;
  no.workers = workers;
  no.grid = f.integer("grid", no.grid);
  no.tol_nf = f.number("tol_nf", no.tol_nf);
  const double radius = f.number("radius", 0.01);
  const int order = f.integer("order", 4);
  const int drift = f.integer("drift_trajectories", 0);
  f.finish();
  const NormalFormChart c = fit_normal_form(m, o, radius, order, no);
  Json body = to_json(c);
  if (drift > 0) {
    const DriftReport d = normal_form_drift(m, c, static_cast<std::size_t>(drift), workers);
    body["drift"] = {{"trajectories", d.trajectories}, {"returns", d.returns}, {"max_drift", d.max_drift}};
  }
  return {body, 0};
}

ServiceReply transition_lift(const Json& req, int workers) {
  const Fields f(req, "");
  LiftBuilder b{{}, workers};
  TransitionLift l = b.build(need(f, "lift"), "lift");
  const CertificateOptions co = certificate_options(f, workers);
  f.finish();
  l.certificate = certify_lift(l, co);
  return {lift_summary(l), 0};
}

ServiceReply transition_compose(const Json& req, int workers) {
  const Fields f(req, "");
  LiftBuilder b{{}, workers};
  const Json& chain_json = need(f, "chain");
  if (!chain_json.is_array()) fail_validation("field 'chain' must be an array of lift specs");
  std::vector<TransitionLift> chain;
  for (std::size_t i = 0; i < chain_json.size(); ++i)
    chain.push_back(b.build(chain_json[i], "chain[" + std::to_string(i) + "]"));
  const CertificateOptions co = certificate_options(f, workers);
  const std::vector<int> ks = f.integers("twist_k", {});
  TwistSearchOptions so;
  so.workers = workers;
  so.t_samples = f.integer("twist_t_samples", so.t_samples);
  f.finish();
  const TransitionLift comp = compose_lifts(chain, co);
  Json body = lift_summary(comp);
  if (!ks.empty()) {
    Json fps = Json::array();
    for (const auto& p : find_twist_periodic_points(comp, ks, so)) fps.push_back(to_json(p));
    body["twist_fixed_points"] = fps;
  }
  return {body, 0};
}

ServiceReply transition_classify(const Json& req) {
  const Fields f(req, "");
  FoliationSchema schema = schema_from_json(need(f, "schema"));
  const auto fam = f.integers("family", {});
  if (fam.size() != 2) fail_validation("field 'family' must be [j, k]");
  Mat2 a = Mat2::Identity();
  Vec2 off = Vec2::Zero();
  if (const Json* psi = f.raw("psi")) {
    const Fields pf(*psi, "psi");
    const auto mat = pf.numbers("matrix", {1, 0, 0, 1});
    const auto o = pf.numbers("offset", {0, 0});
    if (mat.size() != 4 || o.size() != 2)
      fail_validation("field 'psi' needs a 4-entry row-major 'matrix' and a 2-entry 'offset'");
    a << mat[0], mat[1], mat[2], mat[3];
    off << o[0], o[1];
    pf.finish();
  }
  const double tol = f.number("tol_circle", 1e-5);
  f.finish();
  const ClassifyResult r =
      classify_family(schema, {fam[0], fam[1]}, [a, off](const Vec2& z) -> Vec2 { return a * z + off; }, tol);
  Json body{{"result", to_json(r)}, {"schema", to_json(schema)}};
  if (r.cls == BranchClass::Undetermined)
    throw Error(ErrorKind::Undetermined, "classification undetermined within tol_circle", dump_json(body));
  return {body, 0};
}

ServiceReply transition_forward(const Json& req) {
  const Fields f(req, "");
  const FoliationSchema schema = schema_from_json(need(f, "schema"));
  const auto start = f.integers("start", {});
  if (start.size() != 2) fail_validation("field 'start' must be [j, k]");
  const Fields of(need(f, "oracle"), "oracle");
  const int after = of.integer("meets_after", 0);
  ForwardingOracle oracle;
  oracle.meets_stable = [after](int, int, int n) { return n >= after; };
  if (const Json* fp = of.raw("footprint")) {
    const Fields ff(*fp, "oracle.footprint");
    const double o = ff.number("offset", 0.0), st = ff.number("step", 1.0), w = ff.number("width", 0.9);
    ff.finish();
    oracle.footprint = [o, st, w](int, int, int n) { return DiskFootprint{o + st * n, o + st * n + w}; };
  }
  of.finish();
  f.finish();
  return {to_json(iterate_disk_forwarding(schema, {start[0], start[1]}, oracle)), 0};
}

// ---------------------------------------------------------------- horseshoe and entropy

struct HorseshoeSetup {
  MapModel map;
  StripSystem sys;
};

HorseshoeSetup detect(const Fields& f, int workers) {
  HorseshoeSetup h{map_of(f), {}};
  StripBox box;
  if (const Json* b = f.raw("box")) box = box_from_json(*b);
  const int n_max = f.integer("n_max", 2);
  if (n_max < 1) fail_validation("field 'n_max' must be positive");
  StripOptions so;
  so.workers = workers;
  so.lines = f.integer("lines", so.lines);
  h.sys = detect_strips(h.map, box, n_max, so);
  return h;
}

double strip_gap(const StripSystem& sys) {
  double gap = 1.0;
  for (std::size_t k = 0; k + 1 < sys.horizontal.size(); ++k) {
    const std::size_t mid = sys.horizontal[k].s.size() / 2;
    gap = std::min(gap, std::abs(sys.horizontal[k].lo[mid] - sys.horizontal[k + 1].hi[mid]));
  }
  return gap;
}

ServiceReply horseshoe(const std::string& sub, const Json& req, int workers) {
  const Fields f(req, "");
  const HorseshoeSetup h = detect(f, workers);
  Json body{{"map", model_to_json(h.map)}, {"strips", to_json(h.sys)}};
  int code = 0;
  if (sub == "detect") {
    f.finish();
  } else if (sub == "verify") {
    const double tol = f.number("tol", 1e-8);
    f.finish();
    const MoserReport r = verify_moser_conditions(h.map, h.sys, tol);
    body["moser"] = to_json(r);
    if (!(r.n1 && r.n2)) code = static_cast<int>(ErrorKind::Numerical);
  } else if (sub == "cones") {
    const double mu = f.number("mu", 0.4);
    f.finish();
    const ConeReport r = cone_certificate(h.map, h.sys, mu);
    body["cones"] = to_json(r);
    if (!r.pass) code = static_cast<int>(ErrorKind::Numerical);
  } else if (sub == "words") {
    std::vector<std::vector<int>> words;
    if (const Json* w = f.raw("words")) {
      words = w->get<std::vector<std::vector<int>>>();
    } else if (f.has("all_length")) {
      words = all_words(static_cast<int>(h.sys.size()), f.integer("all_length", 1));
    } else {
      words = random_words(static_cast<int>(h.sys.size()), f.integer("length", 6), f.integer("count", 50),
                           static_cast<std::uint64_t>(f.integer("seed", 0)));
    }
    const bool periodic = f.boolean("periodic", false);
    f.finish();
    const SemiconjugacyReport r = semiconjugacy_check(h.map, h.sys, words, periodic, workers);
    body["words"] = to_json(r);
    Json itin = Json::array();
    for (std::size_t i = 0; i < std::min<std::size_t>(words.size(), 64); ++i)
      if (const auto z = periodic ? periodic_point(h.map, h.sys, words[i]) : realize_word(h.map, h.sys, words[i]))
        itin.push_back({{"word", words[i]}, {"point", {(*z)(0), (*z)(1)}},
                        {"itinerary", itinerary(h.map, h.sys, *z, static_cast<int>(words[i].size()))}});
    body["itineraries"] = itin;
    if (!r.pass()) code = static_cast<int>(ErrorKind::Numerical);
  } else if (sub == "entropy") {
    const auto ns = f.integers("n_values", {1, 2, 3});
    auto fr = f.numbers("eps_fractions", {0.5, 0.25, 0.125, 0.0625});
    EntropyOptions eo;
    eo.workers = workers;
    eo.tail = f.integer("tail", eo.tail);
    f.finish();
    std::vector<double> eps;
    for (double x : fr) eps.push_back(x * strip_gap(h.sys));
    const EntropyEstimate e = entropy_separated_sets(h.map, h.sys, ns, eps, eo);
    body["entropy"] = to_json(e);
    body["ln_symbols"] = std::log(static_cast<double>(std::max<std::size_t>(1, h.sys.size())));
  }
  return {body, code};
}

ServiceReply entropy(const Json& req, int workers) {
  const Fields f(req, "");
  const MapModel m = map_of(f);
  StripBox region;
  if (const Json* b = f.raw("region")) region = box_from_json(*b);
  const auto ns = f.integers("n_values", {1, 2, 3, 4});
  const auto eps = f.numbers("eps", {});
  if (eps.empty()) fail_validation("missing field 'eps'");
  EntropyOptions eo;
  eo.workers = workers;
  eo.tail = f.integer("tail", eo.tail);
  eo.columns = f.integer("columns", eo.columns);
  const int growth = f.integer("growth_n_max", 0);
  const int symbols = f.integer("symbols", 2);
  f.finish();
  Json body{{"map", model_to_json(m)}, {"entropy", to_json(entropy_separated_sets(m, region, ns, eps, eo))}};
  if (growth > 0) {
    StripOptions so;
    so.workers = workers;
    const StripSystem sys = detect_strips(m, region, symbols, so);
    body["growth"] = to_json(count_orbits_up_to_period(m, make_word_solver(m, sys),
                                                       static_cast<int>(sys.size()), growth, 1e-9, workers));
  }
  return {body, 0};
}

// ---------------------------------------------------------------- run and plot data

ServiceReply run(const Json& req, int workers) {
  const Fields f(req, "");
  const Json& config = need(f, "config");
  const std::string base = f.text("base_dir", ".");
  const std::string out = f.text("output_dir", "");
  f.finish();
  RunConfig cfg = parse_run_config(config, base);
  if (!out.empty()) cfg.output_dir = out;
  if (workers > 0) cfg.workers = workers;
  const RunResult r = run_pipeline(cfg);
  return {Json{{"manifest", r.manifest}, {"output_dir", r.output_dir}}, r.exit_code};
}

ServiceReply plot(const Json& req) {
  const Fields f(req, "");
  const Json& artifact = need(f, "artifact");
  const std::string kind = f.text("kind", "");
  f.finish();
  Json files = Json::object();
  for (const auto& [name, csv] : plot_data(artifact, kind)) files[name] = csv;
  return {Json{{"files", files}}, 0};
}

}  // namespace

const std::vector<std::string>& service_commands() {
  static const std::vector<std::string> names{
      "model.new",         "flow.integrate",     "flow.section",        "orbits.lyapunov",
      "orbits.find",       "index.cz",           "transition.fit-nf",   "transition.lift",
      "transition.compose", "transition.classify", "transition.forward", "horseshoe.detect",
      "horseshoe.verify",  "horseshoe.cones",    "horseshoe.words",     "horseshoe.entropy",
      "entropy",           "run",                "plot-data"};
  return names;
}

ServiceReply dispatch(const std::string& command, const Json& request, int workers) {
  const int w = std::max(1, workers);
  if (command == "model.new") return model_new(request);
  if (command == "flow.integrate") return flow_integrate(request);
  if (command == "flow.section") return flow_section(request, w);
  if (command == "orbits.lyapunov") return orbits_lyapunov(request, w);
  if (command == "orbits.find") return orbits_find(request, w);
  if (command == "index.cz") return index_cz(request);
  if (command == "transition.fit-nf") return transition_fit_nf(request, w);
  if (command == "transition.lift") return transition_lift(request, w);
  if (command == "transition.compose") return transition_compose(request, w);
  if (command == "transition.classify") return transition_classify(request);
  if (command == "transition.forward") return transition_forward(request);
  if (command.rfind("horseshoe.", 0) == 0) {
    const std::string sub = command.substr(10);
    if (sub == "detect" || sub == "verify" || sub == "cones" || sub == "words" || sub == "entropy")
      return horseshoe(sub, request, w);
  }
  if (command == "entropy") return entropy(request, w);
  if (command == "run") return run(request, workers);
  if (command == "plot-data") return plot(request);
  fail_validation("unknown command '" + command + "'");
}

}  // namespace reeb
