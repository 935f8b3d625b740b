#include "reeblab/reeblab.h"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

using Json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Failure {
  int code;
  std::string message;
};

struct Session {
  std::unique_ptr<reeb_context, decltype(&reeb_context_free)> ctx{reeb_context_new(), reeb_context_free};
  int workers = 0;
};

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Failure{REEB_ERR_VALIDATION, "cannot read '" + path + "'"};
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

Json read_json(const std::string& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const Json::parse_error& e) {
    throw Failure{REEB_ERR_VALIDATION, "'" + path + "' is not valid JSON: " + e.what()};
  }
}

// FILE#i selects entry i of the "orbits" array of FILE (default 0).
Json read_orbit(const std::string& ref, Json* model) {
  std::string path = ref;
  std::size_t index = 0;
  if (const auto hash = ref.rfind('#'); hash != std::string::npos) {
    path = ref.substr(0, hash);
    try {
      index = std::stoul(ref.substr(hash + 1));
    } catch (const std::exception&) {
      throw Failure{REEB_ERR_VALIDATION, "orbit reference '" + ref + "' needs FILE#INDEX"};
    }
  }
  const Json doc = read_json(path);
  if (model && doc.contains("model")) *model = doc.at("model");
  if (doc.contains("orbits")) {
    if (index >= doc.at("orbits").size())
      throw Failure{REEB_ERR_VALIDATION, "orbit index " + std::to_string(index) + " out of range in '" + path + "'"};
    return doc.at("orbits")[index];
  }
  return doc;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw Failure{REEB_ERR_VALIDATION, "'" + text + "' is not a comma-separated list of numbers"};
    }
  }
  return out;
}

std::vector<int> parse_ints(const std::string& text) {
  std::vector<int> out;
  for (double x : parse_list(text)) out.push_back(static_cast<int>(x));
  return out;
}

Json call(Session& s, const std::string& command, const Json& request, int* status = nullptr) {
  char* raw = nullptr;
  const reeb_status st = reeb_call(s.ctx.get(), command.c_str(), request.dump().c_str(), &raw);
  Json out;
  if (raw) {
    out = Json::parse(raw);
    reeb_string_free(raw);
  }
  if (st != REEB_OK && !status) {
    std::string msg = reeb_last_error(s.ctx.get());
    const std::string witness = reeb_last_witness(s.ctx.get());
    if (!witness.empty()) msg += "\nwitness: " + witness;
    if (!out.is_null()) std::cout << out.dump(2) << "\n";
    throw Failure{static_cast<int>(st), msg};
  }
  if (status) *status = static_cast<int>(st);
  return out;
}

void write_out(Session& s, const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  if (reeb_write_file(s.ctx.get(), path.c_str(), text.c_str()) != REEB_OK)
    throw Failure{REEB_ERR_VALIDATION, reeb_last_error(s.ctx.get())};
}

// Responses are already formatted by the library at 17 significant digits.
void emit(Session& s, const std::string& path, const std::string& command, const Json& request) {
  char* raw = nullptr;
  const reeb_status st = reeb_call(s.ctx.get(), command.c_str(), request.dump().c_str(), &raw);
  std::string text = raw ? raw : "";
  reeb_string_free(raw);
  if (!text.empty()) write_out(s, path, text);
  if (st != REEB_OK) {
    std::string msg = reeb_last_error(s.ctx.get());
    const std::string witness = reeb_last_witness(s.ctx.get());
    if (!witness.empty()) msg += "\nwitness: " + witness;
    throw Failure{static_cast<int>(st), msg};
  }
}

std::string csv_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<std::vector<double>> read_csv_rows(const std::string& path) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(read_text(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.find_first_not_of("0123456789+-.,eE \t\r") != std::string::npos) continue;  // header
    rows.push_back(parse_list(line));
  }
  return rows;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reeb-lab: periodic orbits, indices, transition maps and horseshoes of Reeb-type flows"};
  app.require_subcommand(1);
  Session session;
  app.add_option("--workers", session.workers, "Worker threads (results do not depend on it)")
      ->check(CLI::NonNegativeNumber);
  std::string out;
  auto add_out = [&out](CLI::App* c) { c->add_option("-o,--output", out, "Output file (default stdout)"); };

  // model
  auto* model = app.add_subcommand("model", "Model documents")->require_subcommand(1);
  auto* model_new = model->add_subcommand("new", "Write a model document");
  std::string kind, name;
  double energy = 0.0;
  std::vector<std::string> params;
  model_new->add_option("--kind", kind, "Model kind")->required();
  model_new->add_option("--energy", energy, "Energy level (henon-heiles)");
  model_new->add_option("--param", params, "Extra parameter key=value (repeatable)");
  model_new->add_option("--name", name, "Model name");
  add_out(model_new);

  // flow
  auto* flow = app.add_subcommand("flow", "Trajectories and section returns")->require_subcommand(1);
  std::string model_path, state, section_path, seeds_path;
  double t_end = 1.0, max_time = 20.0;
  int samples = 201;
  auto* flow_int = flow->add_subcommand("integrate", "Integrate one trajectory (CSV or JSON by extension)");
  flow_int->add_option("--model", model_path)->required();
  flow_int->add_option("--state", state, "Initial state a,b,...")->required();
  flow_int->add_option("--t-end", t_end)->required();
  flow_int->add_option("--samples", samples);
  add_out(flow_int);
  auto* flow_sec = flow->add_subcommand("section", "First returns of seeds to a section");
  flow_sec->add_option("--model", model_path)->required();
  flow_sec->add_option("--section", section_path)->required();
  flow_sec->add_option("--seeds", seeds_path, "CSV of seed states")->required();
  flow_sec->add_option("--max-time", max_time);
  add_out(flow_sec);

  // orbits
  auto* orbits = app.add_subcommand("orbits", "Periodic orbits")->require_subcommand(1);
  auto* orb_lyap = orbits->add_subcommand("lyapunov", "Three Lyapunov orbits of the Henon-Heiles neck");
  orb_lyap->add_option("--model", model_path)->required();
  add_out(orb_lyap);
  std::string guess;
  double period = 0.0;
  auto* orb_find = orbits->add_subcommand("find", "Newton search from a guess");
  orb_find->add_option("--model", model_path)->required();
  orb_find->add_option("--guess", guess, "State a,b,...")->required();
  orb_find->add_option("--period", period)->required();
  add_out(orb_find);
  std::string orbit_ref;
  auto* orb_csv = orbits->add_subcommand("samples", "Export orbit samples as CSV");
  orb_csv->add_option("--orbit", orbit_ref, "FILE#INDEX")->required();
  add_out(orb_csv);

  // index
  auto* index = app.add_subcommand("index", "Indices of periodic orbits")->require_subcommand(1);
  int grid = 255;
  auto* idx_cz = index->add_subcommand("cz", "Conley-Zehnder index");
  idx_cz->add_option("--orbit", orbit_ref, "FILE#INDEX")->required();
  idx_cz->add_option("--model", model_path, "Model (default: the one stored with the orbits)");
  idx_cz->add_option("--grid", grid);
  add_out(idx_cz);

  // transition
  auto* tr = app.add_subcommand("transition", "Normal forms and transition maps")->require_subcommand(1);
  double radius = 0.01, delta = 0.0;
  int order = 4, drift = 0, t_samples = 100, r_samples = 100;
  auto* fit = tr->add_subcommand("fit-nf", "Fit the normal form near a hyperbolic orbit");
  fit->add_option("--orbit", orbit_ref, "FILE#INDEX")->required();
  fit->add_option("--model", model_path);
  fit->add_option("--radius", radius);
  fit->add_option("--order", order);
  fit->add_option("--drift", drift, "Also measure xy drift on this many trajectories");
  add_out(fit);
  std::string nf_path, spec_path;
  auto* lift = tr->add_subcommand("lift", "Local lift from a normal form, with its twist certificate");
  lift->add_option("--nf", nf_path, "Normal-form chart JSON");
  lift->add_option("--spec", spec_path, "Lift spec JSON instead of --nf");
  lift->add_option("--delta", delta, "Passage box size (with --nf)");
  lift->add_option("--t-samples", t_samples);
  lift->add_option("--r-samples", r_samples);
  add_out(lift);
  std::string chain_path, twist_k;
  auto* comp = tr->add_subcommand("compose", "Compose lifts and certify the result");
  comp->add_option("--chain", chain_path, "JSON array of lift specs, first applied first")->required();
  comp->add_option("--twist-k", twist_k, "Comma list of k for twist fixed points");
  comp->add_option("--t-samples", t_samples);
  comp->add_option("--r-samples", r_samples);
  add_out(comp);
  std::string schema_path, family, psi_path, footprint;
  int meets_after = 0;
  double tol_circle = 1e-5;
  auto* cls = tr->add_subcommand("classify", "Classify a family's unstable circle against its stable one");
  cls->add_option("--schema", schema_path)->required();
  cls->add_option("--family", family, "j,k")->required();
  cls->add_option("--psi", psi_path, "Affine map JSON {matrix, offset}");
  cls->add_option("--tol-circle", tol_circle);
  add_out(cls);
  auto* fwd = tr->add_subcommand("forward", "Iterate disk forwarding from a family");
  fwd->add_option("--schema", schema_path)->required();
  fwd->add_option("--start", family, "j,k")->required();
  fwd->add_option("--meets-after", meets_after, "Step at which the forwarded disk meets the stable circle");
  fwd->add_option("--footprint", footprint, "offset,step,width of the forwarded footprints");
  add_out(fwd);

  // horseshoe
  auto* hs = app.add_subcommand("horseshoe", "Strips, Moser conditions, cones, words, entropy")->require_subcommand(1);
  std::string map_path, box_path, words_csv, n_list = "1,2,3", eps_list;
  int n_max = 2, length = 6, count = 50, all_length = 0, tail = 4;
  unsigned seed = 0;
  double mu = 0.4;
  bool periodic = false;
  auto hs_common = [&](CLI::App* c) {
    c->add_option("--map", map_path, "Map model JSON")->required();
    c->add_option("--box", box_path, "Box JSON {u0,u1,v0,v1,transposed}");
    c->add_option("--n-max", n_max, "Strips to detect");
    add_out(c);
  };
  auto* hs_det = hs->add_subcommand("detect", "Detect horizontal and vertical strips");
  hs_common(hs_det);
  auto* hs_ver = hs->add_subcommand("verify", "Moser conditions (N1)/(N2)");
  hs_common(hs_ver);
  auto* hs_cone = hs->add_subcommand("cones", "Cone-field certificate");
  hs_common(hs_cone);
  hs_cone->add_option("--mu", mu);
  auto* hs_words = hs->add_subcommand("words", "Realize symbol words");
  hs_common(hs_words);
  hs_words->add_option("--length", length);
  hs_words->add_option("--count", count);
  hs_words->add_option("--seed", seed);
  hs_words->add_option("--all-length", all_length, "Check every word of this length instead");
  hs_words->add_flag("--periodic", periodic, "Realize periodic points");
  hs_words->add_option("--csv", words_csv, "Also write itineraries as symbol CSV");
  auto* hs_ent = hs->add_subcommand("entropy", "Separated-set entropy on the detected strips");
  hs_common(hs_ent);
  hs_ent->add_option("--n", n_list, "Orbit lengths");
  hs_ent->add_option("--tail", tail);

  // entropy
  auto* ent = app.add_subcommand("entropy", "Separated-set entropy of a map on a region");
  int growth = 0, symbols = 2;
  ent->add_option("--map", map_path)->required();
  ent->add_option("--region", box_path, "Box JSON");
  ent->add_option("--eps", eps_list, "Comma list of epsilons")->required();
  ent->add_option("--n", n_list, "Orbit lengths");
  ent->add_option("--tail", tail);
  ent->add_option("--growth", growth, "Also count periodic orbits up to this period");
  ent->add_option("--symbols", symbols, "Strips used for the orbit count");
  add_out(ent);

  // run
  auto* run = app.add_subcommand("run", "Run a pipeline config");
  std::string config_path, output_dir;
  run->add_option("config", config_path, "Config JSON")->required();
  run->add_option("--output-dir", output_dir, "Override the config's output directory");

  // plot-data
  auto* plot = app.add_subcommand("plot-data", "CSV tables from an artifact");
  std::string artifact_path, plot_kind, plot_dir = ".";
  plot->add_option("--artifact", artifact_path)->required();
  plot->add_option("--kind", plot_kind, "section-scatter | spiral | strips | entropy-curve")->required();
  plot->add_option("--out-dir", plot_dir);

  CLI11_PARSE(app, argc, argv);
  if (!session.ctx) {
    std::cerr << "error: cannot create context\n";
    return REEB_ERR_INTERNAL;
  }
  reeb_set_workers(session.ctx.get(), session.workers);

  try {
    if (model_new->parsed()) {
      Json p = Json::object();
      if (model_new->count("--energy")) p["energy"] = energy;
      for (const auto& kv : params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw Failure{REEB_ERR_VALIDATION, "--param expects key=value, got '" + kv + "'"};
        const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
        try {
          p[key] = Json::parse(val);
        } catch (const Json::parse_error&) {
          p[key] = val;
        }
      }
      Json req{{"kind", kind}, {"params", p}};
      if (!name.empty()) req["name"] = name;
      emit(session, out, "model.new", req);
    } else if (flow_int->parsed()) {
      const Json r = call(session, "flow.integrate",
                          {{"model", read_json(model_path)}, {"state", parse_list(state)}, {"t_end", t_end}, {"samples", samples}});
      if (fs::path(out).extension() == ".csv") {
        std::ostringstream os;
        os << "t";
        for (std::size_t i = 0; i < r.at("states")[0].size(); ++i) os << ",z" << i;
        os << "\n";
        for (std::size_t k = 0; k < r.at("times").size(); ++k) {
          os << csv_number(r.at("times")[k].get<double>());
          for (const auto& x : r.at("states")[k]) os << ',' << csv_number(x.get<double>());
          os << "\n";
        }
        write_out(session, out, os.str());
      } else {
        emit(session, out, "flow.integrate",
             {{"model", read_json(model_path)}, {"state", parse_list(state)}, {"t_end", t_end}, {"samples", samples}});
      }
    } else if (flow_sec->parsed()) {
      emit(session, out, "flow.section",
           {{"model", read_json(model_path)}, {"section", read_json(section_path)},
            {"seeds", read_csv_rows(seeds_path)}, {"max_time", max_time}});
    } else if (orb_lyap->parsed()) {
      emit(session, out, "orbits.lyapunov", {{"model", read_json(model_path)}});
    } else if (orb_find->parsed()) {
      emit(session, out, "orbits.find", {{"model", read_json(model_path)}, {"guess", parse_list(guess)}, {"period", period}});
    } else if (orb_csv->parsed()) {
      const Json o = read_orbit(orbit_ref, nullptr);
      if (!o.contains("samples")) throw Failure{REEB_ERR_VALIDATION, "orbit record has no samples"};
      std::ostringstream os;
      os << "t";
      for (std::size_t i = 1; i < o.at("samples")[0].size(); ++i) os << ",z" << i - 1;
      os << "\n";
      for (const auto& row : o.at("samples")) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_number(row[i].get<double>());
        os << "\n";
      }
      write_out(session, out, os.str());
    } else if (idx_cz->parsed() || fit->parsed()) {
      Json stored;
      const Json orbit = read_orbit(orbit_ref, &stored);
      const Json m = model_path.empty() ? stored : read_json(model_path);
      if (m.is_null()) throw Failure{REEB_ERR_VALIDATION, "no model stored with the orbit; pass --model"};
      if (idx_cz->parsed())
        emit(session, out, "index.cz", {{"model", m}, {"orbit", orbit}, {"grid", grid}});
      else
        emit(session, out, "transition.fit-nf",
             {{"model", m}, {"orbit", orbit}, {"radius", radius}, {"order", order}, {"drift_trajectories", drift}});
    } else if (lift->parsed()) {
      Json spec;
      if (!spec_path.empty()) {
        spec = read_json(spec_path);
      } else if (!nf_path.empty()) {
        const Json nf = read_json(nf_path);
        const double r = nf.at("radius").get<double>();
        spec = {{"type", "local"}, {"chart", nf}, {"delta", delta > 0.0 ? delta : 0.5 * r}};
      } else {
        throw Failure{REEB_ERR_VALIDATION, "transition lift needs --nf or --spec"};
      }
      emit(session, out, "transition.lift",
           {{"lift", spec}, {"certificate", {{"t_samples", t_samples}, {"r_samples", r_samples}}}});
    } else if (comp->parsed()) {
      Json req{{"chain", read_json(chain_path)}, {"certificate", {{"t_samples", t_samples}, {"r_samples", r_samples}}}};
      if (!twist_k.empty()) req["twist_k"] = parse_ints(twist_k);
      emit(session, out, "transition.compose", req);
    } else if (cls->parsed()) {
      Json req{{"schema", read_json(schema_path)}, {"family", parse_ints(family)}, {"tol_circle", tol_circle}};
      if (!psi_path.empty()) req["psi"] = read_json(psi_path);
      emit(session, out, "transition.classify", req);
    } else if (fwd->parsed()) {
      Json oracle{{"meets_after", meets_after}};
      if (!footprint.empty()) {
        const auto f = parse_list(footprint);
        if (f.size() != 3) throw Failure{REEB_ERR_VALIDATION, "--footprint expects offset,step,width"};
        oracle["footprint"] = {{"offset", f[0]}, {"step", f[1]}, {"width", f[2]}};
      }
      emit(session, out, "transition.forward",
           {{"schema", read_json(schema_path)}, {"start", parse_ints(family)}, {"oracle", oracle}});
    } else if (hs->parsed()) {
      Json req{{"map", read_json(map_path)}, {"n_max", n_max}};
      if (!box_path.empty()) req["box"] = read_json(box_path);
      std::string cmd;
      if (hs_det->parsed()) cmd = "horseshoe.detect";
      if (hs_ver->parsed()) cmd = "horseshoe.verify";
      if (hs_cone->parsed()) {
        cmd = "horseshoe.cones";
        req["mu"] = mu;
      }
      if (hs_ent->parsed()) {
        cmd = "horseshoe.entropy";
        req["n_values"] = parse_ints(n_list);
        req["tail"] = tail;
      }
      if (hs_words->parsed()) {
        cmd = "horseshoe.words";
        if (all_length > 0) {
          req["all_length"] = all_length;
        } else {
          req["length"] = length;
          req["count"] = count;
          req["seed"] = seed;
        }
        req["periodic"] = periodic;
      }
      if (hs_words->parsed() && !words_csv.empty()) {
        int st = 0;
        const Json r = call(session, cmd, req, &st);
        if (r.is_object() && r.contains("itineraries")) {
          std::ostringstream os;
          os << "word,itinerary,u,v\n";
          for (const auto& it : r.at("itineraries")) {
            std::string w, s;
            for (const auto& x : it.at("word")) w += std::to_string(x.get<int>());
            for (const auto& x : it.at("itinerary")) s += std::to_string(x.get<int>());
            os << w << ',' << s << ',' << csv_number(it.at("point")[0].get<double>()) << ','
               << csv_number(it.at("point")[1].get<double>()) << "\n";
          }
          write_out(session, words_csv, os.str());
        }
      }
      emit(session, out, cmd, req);
    } else if (ent->parsed()) {
      Json req{{"map", read_json(map_path)}, {"eps", parse_list(eps_list)}, {"n_values", parse_ints(n_list)}, {"tail", tail}};
      if (!box_path.empty()) req["region"] = read_json(box_path);
      if (growth > 0) {
        req["growth_n_max"] = growth;
        req["symbols"] = symbols;
      }
      emit(session, out, "entropy", req);
    } else if (run->parsed()) {
      std::string dir = output_dir;
      if (dir.empty())
        if (const char* env = std::getenv("REEB_LAB_OUTPUT_DIR")) dir = env;
      const fs::path cfg_path(config_path);
      Json req{{"config", read_json(config_path)},
               {"base_dir", cfg_path.has_parent_path() ? cfg_path.parent_path().string() : std::string(".")}};
      if (!dir.empty()) req["output_dir"] = dir;
      int st = 0;
      const Json r = call(session, "run", req, &st);
      if (r.is_null()) {
        std::string msg = reeb_last_error(session.ctx.get());
        throw Failure{st, msg};
      }
      for (const auto& s : r.at("manifest").at("stages")) {
        std::cout << s.at("name").get<std::string>() << ": " << s.at("status").get<std::string>();
        if (s.contains("reason")) std::cout << " (" << s.at("reason").get<std::string>() << ")";
        std::cout << "\n";
      }
      std::cout << "manifest: " << (fs::path(r.at("output_dir").get<std::string>()) / "manifest.json").string() << "\n";
      return st;
    } else if (plot->parsed()) {
      const Json r = call(session, "plot-data", {{"artifact", read_json(artifact_path)}, {"kind", plot_kind}});
      for (const auto& [file, csv] : r.at("files").items()) {
        const std::string path = (fs::path(plot_dir) / file).string();
        write_out(session, path, csv.get<std::string>());
        std::cout << path << "\n";
      }
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return f.code;
  }
  return 0;
}
