// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "oracles.hpp"
#include "reeb/horseshoe.hpp"
#include "reeb/indices.hpp"
#include "reeb/io.hpp"
#include "reeb/orbits.hpp"
#include "reeb/pipeline.hpp"
#include "reeb/transition.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace reeb;
namespace fs = std::filesystem;

namespace {

const int kWorkers = std::max(1, static_cast<int>(std::thread::hardware_concurrency()));

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", x);
  return buf;
}

std::string fixed(double x, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

// Lyapunov triple and normal-form chart near the neck, shared by 1 and 3.
struct NeckContext {
  FlowModel model = make_henon_heiles(kHenonHeilesCritical + 1e-3);
  std::array<PeriodicOrbit, 3> triple;
};

NeckContext& neck() {
  static std::optional<NeckContext> ctx;
  if (!ctx) {
    ctx.emplace();
    OrbitSearchOptions oo;
    oo.workers = kWorkers;
    ctx->triple = find_lyapunov_triple(ctx->model, oo);
  }
  return *ctx;
}

void lyapunov_triple(Outcome& out) {
  NeckContext& c = neck();
  const auto& tri = c.triple;
  double z3 = 0.0, spread = 0.0;
  for (int i = 0; i < 3; ++i) {
    z3 = std::max(z3, rotated_orbit_distance(c.model, tri[i], tri[(i + 1) % 3], kTwoPi / 3));
    spread = std::max(spread, std::abs(tri[i].period - tri[(i + 1) % 3].period));
    out.require(tri[i].cls == OrbitClass::Hyperbolic, "orbit " + std::to_string(i) + " hyperbolic");
  }
  out.require(z3 < 1e-6, "Z3 distance < 1e-6");
  out.require(spread < 1e-9, "period spread < 1e-9");
  std::string cz_list;
  for (const auto& o : tri) {
    const CzResult cz = cz_index(asymptotic_spectrum(o, c.model));
    cz_list += (cz_list.empty() ? "" : ",") + std::to_string(cz.index);
    out.require(!cz.degenerate && cz.index == 2, "cz index 2");
  }
  out.detail << "E=1/6+1e-3 T=" << fixed(tri[0].period, 9) << " Z3 distance " << sci(z3) << ", period spread "
             << sci(spread) << ", cz [" << cz_list << "]";
}

void cz_oracle(Outcome& out) {
  int orbits = 0, mismatches = 0;
  auto check = [&](const FlowModel& m, double period, int expected, const std::function<Eigen::Matrix2d(double)>& s,
                   const std::string& label) {
    ++orbits;
    const PeriodicOrbit o = find_periodic_orbit(m, Vec::Zero(3), period);
    const CzResult cz = cz_index(asymptotic_spectrum(o, m));
    const int coarse = oracle::cz_from(oracle::galerkin_spectrum(s, period, 24, 40));
    const int fine = oracle::cz_from(oracle::galerkin_spectrum(s, period, 48, 40));
    if (cz.degenerate || cz.index != expected || coarse != expected || fine != expected) {
      ++mismatches;
      out.detail << label << ": library " << cz.index << " oracle " << coarse << "/" << fine << " expected "
                 << expected << "; ";
    }
  };
  // theta = 1 is degenerate (identity monodromy) and has no index.
  for (int i = 1; i <= 19; ++i) {
    if (i == 10) continue;
    const double theta = 0.1 * i;
    LinearReebSpec s;
    s.theta = theta;
    const int expected = 2 * static_cast<int>(std::floor(theta)) + 1;
    check(make_linear_reeb_model(s, 1.0), 1.0, expected,
          [theta](double t) { return oracle::linear_s(true, theta, 0, 0, 1.0, t); }, "theta=" + fixed(theta, 1));
  }
  for (int k : {0, 1, 2}) {
    LinearReebSpec s;
    s.kind = LinearKind::Hyperbolic;
    s.winding = k;
    s.rate = 0.8;
    check(make_linear_reeb_model(s, 1.0), 1.0, 2 * k,
          [k](double t) { return oracle::linear_s(false, 0, k, 0.8, 1.0, t); }, "k=" + std::to_string(k));
  }
  out.require(mismatches == 0, "zero mismatches");
  out.detail << orbits << " linear orbits (theta 0.1..1.9 without 1.0, k 0..2), " << mismatches
             << " mismatches against closed form and Galerkin oracle at K=24,48";
}

void normal_form(Outcome& out) {
  NeckContext& c = neck();
  NormalFormOptions no;
  no.workers = kWorkers;
  const NormalFormChart chart = fit_normal_form(c.model, c.triple[0], 0.01, 4, no);
  const DriftReport d = normal_form_drift(c.model, chart, 100, kWorkers);
  out.require(d.trajectories == 100, "100 trajectories");
  out.require(d.max_drift < 1e-6, "xy drift < 1e-6");

  LocalModelParams p;
  p.period = 1.0;
  p.u_series = {0.5, 0.3, -0.2};
  p.radius = 0.8;
  const FlowModel local = make_local_model(p);
  const NormalFormChart exact = fit_normal_form(local, analyse_orbit(local, Vec::Zero(3), 1.0), 0.4, 6);
  double err = exact.u_series.size() >= p.u_series.size() ? 0.0 : 1.0;
  for (std::size_t i = 0; i < p.u_series.size() && i < exact.u_series.size(); ++i)
    err = std::max(err, std::abs(exact.u_series[i] - p.u_series[i]));
  out.require(err < 1e-8, "round-trip u error < 1e-8");
  out.detail << "HH chart: " << d.trajectories << " trajectories, " << d.returns << " returns, max xy drift "
             << sci(d.max_drift) << "; local-model round trip max u error " << sci(err);
}

void log_twist(Outcome& out) {
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
  // m = 1 starts on the exit section, where the closed form must vanish.
  double worst = std::abs(l.twist(delta / 2.0));
  for (int k = 2; k <= 15; ++k) {
    const double r = delta / std::ldexp(1.0, k);
    const auto hit = integrate_to_section(m, vec3(0.0, delta / 2.0, r), 0.0, 1e3, exit, 1e-9, {});
    if (!hit) {
      out.require(false, "section hit at m=" + std::to_string(k));
      continue;
    }
    worst = std::max(worst, std::abs(hit->time / p.period - l.twist(r)));
  }
  out.require(worst < 1e-6, "closed-form transit time within 1e-6");

  LocalModelParams unit;
  unit.period = 1.0;
  unit.u_series = {1.0};
  unit.radius = 1.0;
  double worst_ratio = 0.0;
  int curves = 0;
  for (const TransitionLift& lift : {local_exterior_lift(unit, 0.5), l}) {
    for (int n : {1, 2, 3})
      for (double a : {0.5, 1.0, 2.0}) {
        const double s_max = std::min(0.5, 0.9 * std::pow(lift.r_max / a, 1.0 / n));
        const SpiralReport rep = check_monotone_spiral(lift, [](double s) { return 0.3 + s; }, a, n, s_max, 12);
        ++curves;
        out.require(rep.monotone, "monotone spiral");
        worst_ratio = std::max(worst_ratio, rep.slope_ratio);
      }
  }
  out.require(worst_ratio < 1e-3, "final-decade slope ratio < 1e-3");
  out.detail << "max |dt - closed form| " << sci(worst) << " over m=1..15; " << curves
             << " analytic curves monotone, max slope ratio " << sci(worst_ratio);
}

void composed_certificate(Outcome& out) {
  SyntheticPassageSpec spec;
  const FlowModel model = make_synthetic_passage_flow(spec);
  SectionChart from, to;
  from.section.anchor = Vec::Zero(3);
  from.section.normal = Vec::Unit(3, 2);
  from.embed = [](const Vec2& tr) -> Vec { return vec3(tr(0), tr(1), 0.0); };
  from.coords = [](const Vec& z) -> Vec2 { return Vec2(z(0), z(1)); };
  to = from;
  to.section.anchor = Vec::Unit(3, 2);
  to.embed = [](const Vec2& tr) -> Vec { return vec3(tr(0), tr(1), 1.0); };

  LocalModelParams unit;
  unit.period = 1.0;
  unit.u_series = {1.0};
  unit.radius = 1.0;
  const TransitionLift local = local_exterior_lift(unit, 0.5);
  const TransitionLift global = numerical_lift(model, from, to, 0.25, LiftKind::Global);
  CertificateOptions co;
  co.workers = kWorkers;
  const TransitionLift comp = compose_lifts({local, global}, co);
  const TwistCertificate& base = *comp.certificate;
  co.t_samples = co.r_samples = 200;
  const TwistCertificate fine = certify_lift(comp, co);
  out.require(base.valid && base.samples == 10000, "certificate valid on 10^4 grid");
  out.require(fine.valid, "certificate valid on doubled grid");
  const double change = std::max({std::abs(fine.C / base.C - 1.0), std::abs(fine.A / base.A - 1.0),
                                  std::abs(fine.B / base.B - 1.0), std::abs(fine.r0 / base.r0 - 1.0)});
  out.require(change < 0.05, "constants stable within 5%");

  std::vector<int> ks;
  for (int k = 1; k <= 14; ++k) ks.push_back(k);
  TwistSearchOptions so;
  so.workers = kWorkers;
  const auto fps = find_twist_periodic_points(comp, ks, so);
  int run = 0, best = 0, best_end = 0;
  double worst = 0.0;
  for (const auto& f : fps) {
    if (f.found && f.residual < 1e-8) {
      worst = std::max(worst, f.residual);
      if (++run > best) {
        best = run;
        best_end = f.k;
      }
    } else {
      run = 0;
    }
  }
  out.require(best >= 6, "at least 6 consecutive twist fixed points");
  out.detail << "C=" << fixed(base.C) << " A=" << fixed(base.A) << " B=" << fixed(base.B) << " r0=" << sci(base.r0)
             << " on " << base.samples << " points; max change at 200x200 " << sci(change) << "; k="
             << best_end - best + 1 << ".." << best_end << " (" << best << " consecutive), max residual " << sci(worst);
}

void affine_horseshoes(Outcome& out) {
  for (auto [lam, n] : {std::pair{3.0, 2}, std::pair{4.0, 3}, std::pair{6.0, 5}}) {
    const std::string tag = "N=" + std::to_string(n);
    const MapModel m = make_affine_horseshoe(lam, n);
    const StripSystem sys = detect_strips(m, StripBox{}, n, StripOptions{});
    out.require(sys.size() == static_cast<std::size_t>(n), tag + " strips");
    const MoserReport mo = verify_moser_conditions(m, sys);
    out.require(mo.n1 && mo.n2, tag + " N1/N2");
    out.require(cone_certificate(m, sys, 0.4).pass, tag + " cones");
    std::size_t words = 0, realized = 0;
    for (int len = 1; len <= 8; ++len) {
      const auto rep = semiconjugacy_check(m, sys, all_words(n, len), false, kWorkers);
      words += rep.words;
      realized += rep.realized;
      out.require(rep.pass(), tag + " words of length " + std::to_string(len));
    }
    const double gap = (1.0 - n / lam) / (n + 1);
    const auto e = entropy_separated_sets(m, StripBox{}, {1, 2, 3, 4, 5}, {gap / 2, gap / 4, gap / 8},
                                          EntropyOptions{});
    const double ratio = e.estimate / std::log(n);
    out.require(ratio >= 0.9 && ratio <= 1.1, tag + " entropy in [0.9, 1.1] ln N");
    const GrowthTable g = count_orbits_up_to_period(m, make_word_solver(m, sys), n, 6, 1e-9, kWorkers);
    const double growth = g.growth_rate / std::log(n);
    out.require(std::abs(growth - 1.0) < 0.1, tag + " orbit growth within 10%");
    out.detail << tag << ": " << realized << "/" << words << " words, h/lnN " << fixed(ratio)
               << ", growth/lnN " << fixed(growth) << "; ";
  }
}

void spiral_ladder(Outcome& out) {
  LocalModelParams p;
  p.radius = 1.0;
  const double delta = 0.5, t0 = 0.3;
  const TransitionLift lift = local_exterior_lift(p, delta);
  const auto pts = detect_transverse_homoclinic(lift, t0, [](double) { return 0.0; }, {});
  out.require(pts.size() >= 10, "10 turns detected");
  double worst = 0.0, min_margin = INFINITY, min_c1 = INFINITY, min_c2 = INFINITY;
  for (std::size_t i = 0; i < std::min<std::size_t>(pts.size(), 10); ++i) {
    const int m = static_cast<int>(i) + 1;
    const double r = (delta / 2.0) * std::exp(-(m - t0));
    worst = std::max(worst, std::abs(pts[i].r - r) / r);
    min_margin = std::min(min_margin, pts[i].margin);
    min_c1 = std::min(min_c1, pts[i].c1_slack);
    min_c2 = std::min(min_c2, pts[i].c2_slack);
  }
  out.require(worst < 1e-8, "relative ladder error < 1e-8");
  out.require(min_margin > 0.0 && min_c1 > 0.0 && min_c2 > 0.0, "positive margins and slope slacks");
  out.detail << pts.size() << " turns, max relative error " << sci(worst) << ", min margin " << sci(min_margin)
             << ", min c1/c2 slack " << sci(min_c1) << "/" << sci(min_c2);
}

void countable_strips(Outcome& out) {
  const MapModel m = make_homoclinic_square_map(HomoclinicSquareSpec{});
  const StripSystem sys = detect_strips(m, StripBox{}, 6, StripOptions{});
  out.require(sys.horizontal.size() == 6 && sys.vertical.size() == 6, "six H and six V strips");
  out.require(sys.ordered, "strictly ordered");
  out.require(sys.accumulating, "accumulating");
  const MoserReport mo = verify_moser_conditions(m, sys);
  out.require(mo.n1 && mo.n2, "Moser N1/N2");
  const bool cones = cone_certificate(m, sys, 0.4).pass;
  out.require(cones, "cones");
  const bool certified = sys.size() == 6 && mo.n1 && mo.n2 && cones;
  const double bound = certified ? std::log(6.0) : 0.0;
  out.require(bound >= std::log(6.0), "entropy lower bound >= ln 6");

  double gap = 1.0;
  const std::size_t mid = sys.horizontal.empty() ? 0 : sys.horizontal[0].lo.size() / 2;
  for (std::size_t k = 0; k + 1 < sys.size(); ++k)
    gap = std::min(gap, sys.horizontal[k].lo[mid] - sys.horizontal[k + 1].hi[mid]);
  EntropyOptions eo;
  eo.tail = 3;
  const auto e = entropy_separated_sets(m, sys, {1, 2, 3}, {gap / 2, gap / 4, gap / 8}, eo);

  const auto rep = semiconjugacy_check(m, sys, random_words(6, 6, 50, 20240611), false, kWorkers);
  out.require(rep.words == 50 && rep.pass(), "50 random words of length 6");
  out.detail << "ratios h " << fixed(sys.h_ratios.empty() ? 0.0 : sys.h_ratios.back(), 3) << ", certified bound "
             << fixed(bound) << " (ln 6 = " << fixed(std::log(6.0)) << "), separated-set estimate "
             << fixed(e.estimate) << ", words " << rep.realized << "/" << rep.words;
}

void determinism(Outcome& out) {
  const fs::path cfg_path = fs::path(REEB_SOURCE_DIR) / "configs" / "henon-heiles-demo.json";
  const Json doc = read_json_file(cfg_path.string());
  auto run = [&](const std::string& dir, int workers) {
    RunConfig cfg = parse_run_config(doc, cfg_path.parent_path().string());
    cfg.output_dir = (fs::path("acceptance-runs") / dir).string();
    cfg.workers = workers;
    fs::remove_all(cfg.output_dir);
    return run_pipeline(cfg);
  };
  const RunResult a = run("first", 1), b = run("second", 1), c = run("eight-workers", 8);
  out.require(a.exit_code == 0, "demo pipeline exit 0");
  const std::string ma = dump_json(a.manifest);
  out.require(ma == dump_json(b.manifest), "identical manifests across runs");
  out.require(ma == dump_json(c.manifest), "identical manifests for 1 and 8 workers");

  std::size_t files = 0;
  for (const auto& art : a.manifest.at("artifacts")) {
    const std::string file = art.at("file").get<std::string>();
    const std::string digest = art.at("sha256").get<std::string>();
    for (const RunResult* r : {&a, &b, &c}) {
      const fs::path p = fs::path(r->output_dir) / file;
      out.require(fs::exists(p) && sha256_hex(read_file(p.string())) == digest, "digest of " + p.string());
    }
    ++files;
  }
  const Json orbits = read_json_file((fs::path(a.output_dir) / "orbits.json").string());
  const Json cz = read_json_file((fs::path(a.output_dir) / "cz.json").string());
  out.require(orbits.at("orbits").size() == 3, "three orbits");
  for (const auto& v : cz.at("values")) out.require(v.get<int>() == 2, "cz values 2");
  out.detail << files << " artifacts with identical digests over 2 runs and 1 vs 8 workers, manifest sha256 "
             << sha256_hex(ma).substr(0, 16);
}

struct Criterion {
  int id;
  const char* title;
  double limit_seconds;
  std::function<void(Outcome&)> body;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "Henon-Heiles Lyapunov triple", 120.0, lyapunov_triple},
      {2, "CZ oracle equivalence", 60.0, cz_oracle},
      {3, "normal-form conservation", 0.0, normal_form},
      {4, "logarithmic twist", 0.0, log_twist},
      {5, "composed-lift certificate", 0.0, composed_certificate},
      {6, "affine horseshoe ground truth", 180.0, affine_horseshoes},
      {7, "spiral homoclinic ladder", 0.0, spiral_ladder},
      {8, "countable strips near the homoclinic", 0.0, countable_strips},
      {9, "determinism", 0.0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.body(out);
    } catch (const std::exception& e) {
      out.require(false, std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_seconds > 0.0) out.require(seconds < c.limit_seconds, "runtime < " + fixed(c.limit_seconds, 0) + " s");
    if (!out.pass) ++failed;
    std::printf("criterion %d %s: %s | %s| %.1f s\n", c.id, out.pass ? "PASS" : "FAIL", c.title,
                out.detail.str().c_str(), seconds);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
