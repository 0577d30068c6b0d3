#include "run_config.hpp"

#include <fstream>
#include <set>

namespace pcaet::cli {

using nlohmann::json;

namespace {

// Reads one JSON object, remembering which keys were consumed so leftovers can be
// reported as unknown.
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be a JSON object");
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <class T>
  void get(const std::string& key, T& out) {
    if (const json* v = find(key)) {
      try {
        out = v->get<T>();
      } catch (const json::exception&) {
        throw ConfigError("bad value for " + path(key) + ": " + v->dump());
      }
    }
  }

  Section child(const std::string& key) {
    static const json empty = json::object();
    const json* v = find(key);
    return Section(v ? *v : empty, path(key));
  }

  std::string path(const std::string& key) const {
    return where_.empty() ? key : where_ + "." + key;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ConfigError("unknown config key: " + path(key));
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

LatticeKind parse_lattice(const std::string& s) {
  if (s == "simple-cubic") return LatticeKind::SimpleCubic;
  if (s == "diamond") return LatticeKind::Diamond;
  throw ConfigError("unknown lattice: " + s);
}

std::string lattice_name(LatticeKind k) {
  return k == LatticeKind::Diamond ? "diamond" : "simple-cubic";
}

ClipShape parse_shape(const std::string& s) {
  if (s == "box") return ClipShape::Box;
  if (s == "sphere") return ClipShape::Sphere;
  if (s == "cylinder") return ClipShape::Cylinder;
  throw ConfigError("unknown clip shape: " + s);
}

std::string shape_name(ClipShape s) {
  switch (s) {
    case ClipShape::Box: return "box";
    case ClipShape::Sphere: return "sphere";
    case ClipShape::Cylinder: return "cylinder";
  }
  return "box";
}

MatchMode parse_match(const std::string& s) {
  if (s == "greedy") return MatchMode::Greedy;
  if (s == "optimal") return MatchMode::Optimal;
  throw ConfigError("unknown match mode: " + s);
}

void read_phantom(Section s, PhantomConfig& p) {
  std::string lattice = lattice_name(p.crystal.lattice), shape = shape_name(p.crystal.shape);
  s.get("lattice", lattice);
  s.get("shape", shape);
  p.crystal.lattice = parse_lattice(lattice);
  p.crystal.shape = parse_shape(shape);
  s.get("lattice_const", p.crystal.lattice_const);
  s.get("radius", p.crystal.radius);
  s.get("alternate_species", p.crystal.alternate_species);
  s.get("origin_jitter", p.crystal.origin_jitter);
  s.get("heavy_amplitude", p.crystal.species.heavy_amplitude);
  s.get("light_amplitude", p.crystal.species.light_amplitude);
  s.get("width", p.crystal.species.width);
  s.get("min_distance", p.crystal.min_distance);
  s.get("vacancy_fraction", p.vacancy_fraction);
  if (const json* shell = s.find("shell"); shell && !shell->is_null()) {
    Section sh(*shell, s.path("shell"));
    ShellSpec spec;
    spec.min_distance = p.crystal.min_distance;
    sh.get("thickness", spec.thickness);
    sh.get("bond_length", spec.bond_length);
    sh.get("heavy_fraction", spec.heavy_fraction);
    sh.get("min_distance", spec.min_distance);
    sh.finish();
    p.shell = spec;
  }
  s.finish();
  if (!(p.vacancy_fraction >= 0.0 && p.vacancy_fraction < 1.0))
    throw ConfigError("vacancy_fraction must lie in [0, 1)");
}

void read_acquisition(Section s, AcquisitionConfig& a) {
  s.get("n_tilts", a.n_tilts);
  s.get("tilt_span_deg", a.tilt_span_deg);
  s.get("defoci", a.defoci);
  if (const json* d = s.find("total_dose")) {
    if (d->is_string() && d->get<std::string>() == "infinite")
      a.total_dose.reset();
    else if (d->is_number())
      a.total_dose = d->get<double>();
    else
      throw ConfigError("total_dose must be a number or \"infinite\"");
  }
  s.get("accel_voltage_kv", a.accel_voltage_kv);
  s.get("n_b", a.n_b);
  s.get("anti_alias", a.anti_alias);
  if (const json* q = s.find("aperture_qmax")) {
    if (q->is_null())
      a.aperture_qmax.reset();
    else if (q->is_number())
      a.aperture_qmax = q->get<double>();
    else
      throw ConfigError("aperture_qmax must be a number or null");
  }
  s.finish();
}

void read_solver(Section s, SolverConfig& c, std::vector<double>& weights) {
  std::string kind = to_string(c.reg_kind);
  s.get("reg_kind", kind);
  c.reg_kind = parse_reg_kind(kind);
  s.get("step_size", c.step_size);
  s.get("reg_weight", c.reg_weight);
  s.get("reg_weights", weights);
  s.get("max_iter", c.max_iter);
  s.get("tv_inner_iters", c.tv_inner_iters);
  s.get("divergence_factor", c.divergence_factor);
  s.get("nz", c.nz);
  s.get("tilt_order", c.tilt_order);
  s.finish();
  for (double w : weights)
    if (!(w >= 0.0)) throw ConfigError("reg_weights must be non-negative");
}

void read_tracing(Section s, TraceParams& t) {
  s.get("dog_sigma_small", t.dog_sigma_small);
  s.get("dog_sigma_large", t.dog_sigma_large);
  s.get("border", t.border);
  s.get("window", t.window);
  s.get("max_fit_steps", t.max_fit_steps);
  s.get("intensity_floor_volts", t.intensity_floor_volts);
  s.get("width_floor", t.width_floor);
  s.get("max_center_shift", t.max_center_shift);
  s.get("max_width", t.max_width);
  s.get("merge_distance", t.merge_distance);
  s.get("max_iterations", t.max_iterations);
  s.get("stop_removed_below", t.stop_removed_below);
  s.get("stop_rms_move", t.stop_rms_move);
  s.finish();
}

}  // namespace

RunConfig parse_config(const json& raw) {
  if (raw.is_object() && raw.contains("command") && raw.contains("config"))
    return parse_config(raw.at("config"));
  RunConfig c;
  Section top(raw, "");
  top.get("seed", c.seed);
  top.get("threads", c.threads);
  {
    Section g = top.child("grid");
    auto& grid = c.desk.phantom.grid;
    g.get("nx", grid.nx);
    g.get("ny", grid.ny);
    g.get("nz", grid.nz);
    g.get("pitch", grid.pitch);
    g.finish();
    if (grid.nx < 8 || grid.ny < 8 || grid.nz < 8 || !(grid.pitch > 0.0))
      throw ConfigError("grid needs at least 8 voxels per axis and a positive pitch");
  }
  read_phantom(top.child("phantom"), c.desk.phantom);
  read_acquisition(top.child("acquisition"), c.desk.acquisition);
  read_solver(top.child("solver"), c.desk.solver, c.reg_weights);
  read_tracing(top.child("tracing"), c.desk.tracing);
  {
    Section e = top.child("evaluate");
    std::string mode = c.desk.match_mode == MatchMode::Optimal ? "optimal" : "greedy";
    e.get("match_radius", c.desk.match_radius);
    e.get("match_mode", mode);
    c.desk.match_mode = parse_match(mode);
    e.finish();
  }
  {
    Section in = top.child("inputs");
    in.get("phantom", c.inputs.phantom);
    in.get("series", c.inputs.series);
    in.get("volume", c.inputs.volume);
    in.get("traced", c.inputs.traced);
    in.get("truth", c.inputs.truth);
    in.finish();
  }
  top.finish();
  if (c.threads < 0) throw ConfigError("threads must be non-negative");
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json to_json(const RunConfig& c) {
  const auto& p = c.desk.phantom;
  const auto& a = c.desk.acquisition;
  const auto& s = c.desk.solver;
  const auto& t = c.desk.tracing;
  json shell = nullptr;
  if (p.shell)
    shell = {{"thickness", p.shell->thickness},
             {"bond_length", p.shell->bond_length},
             {"heavy_fraction", p.shell->heavy_fraction},
             {"min_distance", p.shell->min_distance}};
  return {
      {"seed", c.seed},
      {"threads", c.threads},
      {"grid", {{"nx", p.grid.nx}, {"ny", p.grid.ny}, {"nz", p.grid.nz}, {"pitch", p.grid.pitch}}},
      {"phantom",
       {{"lattice", lattice_name(p.crystal.lattice)},
        {"shape", shape_name(p.crystal.shape)},
        {"lattice_const", p.crystal.lattice_const},
        {"radius", p.crystal.radius},
        {"alternate_species", p.crystal.alternate_species},
        {"origin_jitter", p.crystal.origin_jitter},
        {"heavy_amplitude", p.crystal.species.heavy_amplitude},
        {"light_amplitude", p.crystal.species.light_amplitude},
        {"width", p.crystal.species.width},
        {"min_distance", p.crystal.min_distance},
        {"vacancy_fraction", p.vacancy_fraction},
        {"shell", shell}}},
      {"acquisition",
       {{"n_tilts", a.n_tilts},
        {"tilt_span_deg", a.tilt_span_deg},
        {"defoci", a.defoci},
        {"total_dose", a.total_dose ? json(*a.total_dose) : json("infinite")},
        {"accel_voltage_kv", a.accel_voltage_kv},
        {"n_b", a.n_b},
        {"anti_alias", a.anti_alias},
        {"aperture_qmax", a.aperture_qmax ? json(*a.aperture_qmax) : json(nullptr)}}},
      {"solver",
       {{"reg_kind", to_string(s.reg_kind)},
        {"step_size", s.step_size},
        {"reg_weight", s.reg_weight},
        {"reg_weights", c.reg_weights},
        {"max_iter", s.max_iter},
        {"tv_inner_iters", s.tv_inner_iters},
        {"divergence_factor", s.divergence_factor},
        {"nz", s.nz},
        {"tilt_order", s.tilt_order}}},
      {"tracing",
       {{"dog_sigma_small", t.dog_sigma_small},
        {"dog_sigma_large", t.dog_sigma_large},
        {"border", t.border},
        {"window", t.window},
        {"max_fit_steps", t.max_fit_steps},
        {"intensity_floor_volts", t.intensity_floor_volts},
        {"width_floor", t.width_floor},
        {"max_center_shift", t.max_center_shift},
        {"max_width", t.max_width},
        {"merge_distance", t.merge_distance},
        {"max_iterations", t.max_iterations},
        {"stop_removed_below", t.stop_removed_below},
        {"stop_rms_move", t.stop_rms_move}}},
      {"evaluate",
       {{"match_radius", c.desk.match_radius},
        {"match_mode", c.desk.match_mode == MatchMode::Optimal ? "optimal" : "greedy"}}},
      {"inputs",
       {{"phantom", c.inputs.phantom},
        {"series", c.inputs.series},
        {"volume", c.inputs.volume},
        {"traced", c.inputs.traced},
        {"truth", c.inputs.truth}}},
  };
}

}  // namespace pcaet::cli
