// pcaet: phantom | simulate | reconstruct | trace | evaluate | sweep

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "pcaet/io.hpp"
#include "pcaet/kernels.hpp"
#include "pcaet/rng.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pcaet;
using cli::RunConfig;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out = "out";
  cli::InputPaths inputs;  // non-empty entries override the config's inputs section
};

RunConfig effective_config(const Options& o) {
  RunConfig c = o.config_path.empty() ? cli::parse_config(json::object())
                                      : cli::load_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.threads) c.threads = *o.threads;
  for (auto [from, to] : {std::pair{&o.inputs.phantom, &c.inputs.phantom},
                          {&o.inputs.series, &c.inputs.series},
                          {&o.inputs.volume, &c.inputs.volume},
                          {&o.inputs.traced, &c.inputs.traced},
                          {&o.inputs.truth, &c.inputs.truth}})
    if (!from->empty()) *to = *from;
  if (c.threads < 0) throw ConfigError("--threads must be non-negative");
  kernels::set_thread_count(c.threads);
  return c;
}

fs::path prepare_out(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw ConfigError("cannot create output directory " + out + ": " + ec.message());
  return fs::path(out);
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream f(p);
  if (!f) throw ConfigError("cannot write " + p.string());
  f << j.dump(2) << '\n';
}

void write_manifest(const fs::path& out, const std::string& command, const RunConfig& c,
                    const json& results, const std::vector<std::string>& outputs) {
  write_json(out / "manifest.json", {{"command", command},
                                     {"config", cli::to_json(c)},
                                     {"rng_algorithm", std::string(kRngAlgorithm)},
                                     {"acquisition_seed", acquisition_seed(c.seed)},
                                     {"results", results},
                                     {"outputs", outputs}});
}

std::string require(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("missing inputs.") + what + " in config");
  return path;
}

// Quarter, half and three-quarter depth slices.
std::vector<std::string> export_slices(const fs::path& dir, const PotentialVolume& v,
                                       const std::string& stem) {
  std::vector<std::string> out;
  for (int z : {v.nz / 4, v.nz / 2, 3 * v.nz / 4}) {
    char name[64];
    std::snprintf(name, sizeof name, "%s_z%03d.pgm", stem.c_str(), z);
    write_slice_pgm((dir / name).string(), v, z);
    out.push_back(name);
  }
  return out;
}

json report_json(const TraceReport& r) {
  return {{"position_error_mean_pm", r.position_error_mean_pm},
          {"position_error_rms_pm", r.position_error_rms_pm},
          {"sigma_x_pm", r.sigma_x_pm},
          {"sigma_y_pm", r.sigma_y_pm},
          {"sigma_z_pm", r.sigma_z_pm},
          {"atoms_found_percent", r.atoms_found},
          {"false_positives_percent", r.false_positives},
          {"correct_species_percent", r.correct_species},
          {"matched", r.matched},
          {"traced", r.traced},
          {"truth", r.truth}};
}

json classes_json(const Classification& c) {
  json j = {{"bimodal", c.bimodal},
            {"threshold", c.threshold},
            {"mean_low", c.mean_low},
            {"sigma_low", c.sigma_low},
            {"mean_high", c.mean_high},
            {"sigma_high", c.sigma_high}};
  if (!c.warning.empty()) j["warning"] = c.warning;
  return j;
}

void intensity_histogram(const fs::path& p, const TracedAtoms& t) {
  std::vector<double> values;
  double hi = 0.0;
  for (const auto& s : t.sites) {
    values.push_back(s.intensity / t.pitch);  // volts
    hi = std::max(hi, s.intensity / t.pitch);
  }
  const int bins = std::max(16, static_cast<int>(std::ceil(std::sqrt(values.size()))));
  write_histogram_csv(p.string(), values, bins, 0.0, hi > 0 ? hi * 1.05 : 1.0, "intensity_volts");
}

// --- commands -------------------------------------------------------------------

int cmd_phantom(const Options& o) {
  const RunConfig c = effective_config(o);
  const fs::path out = prepare_out(o.out);
  AtomList removed;
  const GroundTruth g = build_phantom(c.desk.phantom, c.seed, &removed);
  write_volume((out / "volume.raw").string(), g.volume);
  write_atoms_csv((out / "atoms.csv").string(), g.atoms);
  std::vector<std::string> outputs{"volume.raw", "volume.raw.json", "atoms.csv"};
  if (c.desk.phantom.vacancy_fraction > 0.0) {
    write_atoms_csv((out / "vacancies.csv").string(), removed);
    outputs.push_back("vacancies.csv");
  }
  for (auto& s : export_slices(out, g.volume, "slice")) outputs.push_back(s);
  json params = json::object();
  for (const auto& [k, v] : g.parameters) params[k] = v;
  write_manifest(out, "phantom", c,
                 {{"atoms", g.atoms.size()},
                  {"vacancies", removed.size()},
                  {"min_pair_distance_A", min_pair_distance(g.atoms)},
                  {"parameters", params}},
                 outputs);
  std::cout << "phantom: " << g.atoms.size() << " atoms -> " << out.string() << '\n';
  return 0;
}

int cmd_simulate(const Options& o) {
  const RunConfig c = effective_config(o);
  const fs::path out = prepare_out(o.out);
  std::vector<std::string> outputs;
  PotentialVolume v;
  if (!c.inputs.phantom.empty()) {
    v = read_volume((fs::path(c.inputs.phantom) / "volume.raw").string());
  } else if (!c.inputs.volume.empty()) {
    v = read_volume(c.inputs.volume);
  } else {
    const GroundTruth g = build_phantom(c.desk.phantom, c.seed);
    fs::create_directories(out / "phantom");
    write_volume((out / "phantom" / "volume.raw").string(), g.volume);
    write_atoms_csv((out / "phantom" / "atoms.csv").string(), g.atoms);
    outputs.insert(outputs.end(), {"phantom/volume.raw", "phantom/atoms.csv"});
    v = g.volume;
  }
  const TiltSeries s = simulate(v, c.desk.acquisition, c.seed);
  write_tilt_series((out / "series").string(), s, c.desk.acquisition.anti_alias);
  outputs.push_back("series/");
  write_manifest(out, "simulate", c,
                 {{"images", s.images.size()},
                  {"tilt_angles_deg", s.plan.tilt_angles},
                  {"lambda_angstrom", s.grid.lambda}},
                 outputs);
  std::cout << "simulate: " << s.images.size() << " images -> " << (out / "series").string()
            << '\n';
  return 0;
}

struct LoadedSeries {
  TiltSeries series;
  bool anti_alias = true;
};

LoadedSeries load_series(const RunConfig& c) {
  LoadedSeries l;
  l.series = read_tilt_series(require(c.inputs.series, "series"), &l.anti_alias);
  return l;
}

ReconstructionResult run_reconstruction(const RunConfig& c, const LoadedSeries& l, double weight,
                                        const fs::path& cost_csv) {
  SolverConfig s = c.desk.solver;
  s.reg_weight = weight;
  s.n_b = c.desk.acquisition.n_b;
  s.anti_alias = l.anti_alias;
  s.cost_log_path = cost_csv.string();
  const InteractionParams p = interaction_parameter(l.series.accel_voltage_kv);
  AcquisitionConfig a = c.desk.acquisition;
  a.anti_alias = l.anti_alias;
  return reconstruct(l.series, s, p, make_transfer(l.series.grid, a));
}

int cmd_reconstruct(const Options& o) {
  const RunConfig c = effective_config(o);
  const fs::path out = prepare_out(o.out);
  const LoadedSeries l = load_series(c);
  std::vector<std::string> outputs;
  json results = json::array();
  const bool sweep = !c.reg_weights.empty();
  const std::vector<double> weights = sweep ? c.reg_weights : std::vector<double>{c.desk.solver.reg_weight};
  for (std::size_t i = 0; i < weights.size(); ++i) {
    fs::path dir = out;
    std::string prefix;
    if (sweep) {
      char name[32];
      std::snprintf(name, sizeof name, "reg_%02zu", i);
      prefix = std::string(name) + "/";
      dir = out / name;
      fs::create_directories(dir);
    }
    const auto r = run_reconstruction(c, l, weights[i], dir / "cost.csv");
    write_volume((dir / "volume.raw").string(), r.volume);
    outputs.insert(outputs.end(), {prefix + "volume.raw", prefix + "cost.csv"});
    for (auto& s : export_slices(dir, r.volume, "slice")) outputs.push_back(prefix + s);
    results.push_back({{"reg_weight", weights[i]},
                       {"step_size", r.step_size},
                       {"cost_first", r.cost_history.front()},
                       {"cost_final", r.cost_history.back()},
                       {"iterations", r.cost_history.size()}});
    std::cout << "reconstruct: reg_weight " << weights[i] << " cost " << r.cost_history.front()
              << " -> " << r.cost_history.back() << '\n';
  }
  write_manifest(out, "reconstruct", c, results, outputs);
  return 0;
}

int cmd_trace(const Options& o) {
  const RunConfig c = effective_config(o);
  const fs::path out = prepare_out(o.out);
  const PotentialVolume v = read_volume(require(c.inputs.volume, "volume"));
  TracedAtoms t = trace_atoms(v, c.desk.tracing);
  const Classification cls = classify_species(t);
  if (!cls.warning.empty()) std::cerr << "warning: " << cls.warning << '\n';
  write_traced_csv((out / "traced.csv").string(), t);
  intensity_histogram(out / "intensity_histogram.csv", t);
  write_manifest(out, "trace", c,
                 {{"sites", t.sites.size()},
                  {"iterations", t.iterations},
                  {"classification", classes_json(cls)}},
                 {"traced.csv", "intensity_histogram.csv"});
  std::cout << "trace: " << t.sites.size() << " sites\n";
  return 0;
}

void write_evaluation(const fs::path& out, const TraceReport& r) {
  write_json(out / "report.json", report_json(r));
  double hi = 0.0;
  for (double e : r.errors_pm) hi = std::max(hi, e);
  write_histogram_csv((out / "position_error_histogram.csv").string(), r.errors_pm, 20, 0.0,
                      hi > 0 ? hi * 1.05 : 1.0, "position_error_pm");
}

int cmd_evaluate(const Options& o) {
  const RunConfig c = effective_config(o);
  const fs::path out = prepare_out(o.out);
  const AtomList traced = read_traced_csv(require(c.inputs.traced, "traced"));
  const AtomList truth = read_atoms_csv(require(c.inputs.truth, "truth"));
  const TraceReport r = score(traced, truth, c.desk.match_radius, c.desk.match_mode);
  write_evaluation(out, r);
  write_manifest(out, "evaluate", c, report_json(r),
                 {"report.json", "position_error_histogram.csv"});
  std::printf("position error %.2f pm | found %.2f%% | false positives %.2f%% | species %.2f%%\n",
              r.position_error_mean_pm, r.atoms_found, r.false_positives, r.correct_species);
  return 0;
}

// Whole pipeline on one simulated series, one row per regularization weight.
int cmd_sweep(const Options& o) {
  const RunConfig c = effective_config(o);
  const fs::path out = prepare_out(o.out);
  AtomList removed;
  const GroundTruth g = build_phantom(c.desk.phantom, c.seed, &removed);
  write_atoms_csv((out / "atoms.csv").string(), g.atoms);
  LoadedSeries l{simulate(g.volume, c.desk.acquisition, c.seed), c.desk.acquisition.anti_alias};
  const std::vector<double> weights =
      c.reg_weights.empty() ? std::vector<double>{c.desk.solver.reg_weight} : c.reg_weights;
  std::ofstream table(out / "sweep.csv");
  table << "reg_weight,cost_first,cost_final,position_error_pm,atoms_found,false_positives,"
           "correct_species\n";
  table.precision(10);
  std::vector<std::string> outputs{"atoms.csv", "sweep.csv"};
  json results = json::array();
  for (std::size_t i = 0; i < weights.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "reg_%02zu", i);
    const fs::path dir = out / name;
    fs::create_directories(dir);
    const auto r = run_reconstruction(c, l, weights[i], dir / "cost.csv");
    write_volume((dir / "volume.raw").string(), r.volume);
    TracedAtoms t = trace_atoms(r.volume, c.desk.tracing);
    const Classification cls = classify_species(t);
    write_traced_csv((dir / "traced.csv").string(), t);
    intensity_histogram(dir / "intensity_histogram.csv", t);
    const TraceReport rep = score(t.to_atoms(), g.atoms, c.desk.match_radius, c.desk.match_mode);
    write_evaluation(dir, rep);
    for (auto& s : export_slices(dir, r.volume, "slice")) outputs.push_back(std::string(name) + "/" + s);
    table << weights[i] << ',' << r.cost_history.front() << ',' << r.cost_history.back() << ','
          << rep.position_error_mean_pm << ',' << rep.atoms_found << ',' << rep.false_positives
          << ',' << rep.correct_species << '\n';
    json row = report_json(rep);
    row["reg_weight"] = weights[i];
    row["classification"] = classes_json(cls);
    results.push_back(row);
    std::printf("reg_weight %g: error %.2f pm, found %.1f%%, fp %.1f%%, species %.1f%%\n",
                weights[i], rep.position_error_mean_pm, rep.atoms_found, rep.false_positives,
                rep.correct_species);
  }
  write_manifest(out, "sweep", c, results, outputs);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multislice electron tomography: simulate, reconstruct and trace atoms"};
  app.require_subcommand(1);
  Options o;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON config; flags override its values");
    sub->add_option("--seed", o.seed, "Run seed");
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
    sub->add_option("--threads", o.threads, "OpenMP threads (0: runtime default)");
    sub->add_option("--phantom", o.inputs.phantom, "Phantom directory (inputs.phantom)");
    sub->add_option("--series", o.inputs.series, "Tilt-series directory (inputs.series)");
    sub->add_option("--volume", o.inputs.volume, "Raw volume (inputs.volume)");
    sub->add_option("--traced", o.inputs.traced, "Traced-atom CSV (inputs.traced)");
    sub->add_option("--truth", o.inputs.truth, "Ground-truth atom CSV (inputs.truth)");
  };
  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Options&);
  };
  const Command commands[] = {
      {"phantom", "Generate a ground-truth phantom", cmd_phantom},
      {"simulate", "Simulate a tilt series", cmd_simulate},
      {"reconstruct", "Reconstruct a volume from a tilt series", cmd_reconstruct},
      {"trace", "Trace atoms in a volume", cmd_trace},
      {"evaluate", "Score traced atoms against ground truth", cmd_evaluate},
      {"sweep", "Run the pipeline for each regularization weight", cmd_sweep},
  };
  int (*selected)(const Options&) = nullptr;
  for (const auto& cmd : commands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    add_common(sub);
    sub->callback([&selected, run = cmd.run] { selected = run; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    return selected(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
