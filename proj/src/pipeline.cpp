#include "pcaet/pipeline.hpp"

#include "pcaet/rng.hpp"

namespace pcaet {

std::uint64_t acquisition_seed(std::uint64_t seed) { return stream_seed(seed, 100); }

GroundTruth build_phantom(const PhantomConfig& cfg, std::uint64_t seed, AtomList* removed) {
  GroundTruth g = make_crystal(cfg.grid, cfg.crystal, seed);
  if (cfg.shell && cfg.shell->thickness > 0.0)
    g = add_amorphous_shell(g, cfg.grid, cfg.crystal, *cfg.shell, seed);
  if (cfg.vacancy_fraction > 0.0) g = inject_vacancies(g, cfg.grid, cfg.vacancy_fraction, seed, removed);
  return g;
}

AcquisitionPlan make_plan(const AcquisitionConfig& cfg, std::uint64_t seed) {
  if (cfg.n_tilts < 1) throw ConfigError("n_tilts must be at least 1");
  if (!(cfg.tilt_span_deg > 0.0 && cfg.tilt_span_deg <= 180.0))
    throw ConfigError("tilt_span_deg must lie in (0, 180]");
  AcquisitionPlan plan{AcquisitionPlan::uniform_tilts(cfg.n_tilts, cfg.tilt_span_deg), cfg.defoci,
                       cfg.total_dose, acquisition_seed(seed)};
  plan.validate();
  return plan;
}

TransferFunction make_transfer(const GridSpec& grid, const AcquisitionConfig& cfg) {
  if (cfg.aperture_qmax) return TransferFunction::aperture(grid, *cfg.aperture_qmax);
  return TransferFunction::standard(grid, cfg.anti_alias);
}

TiltSeries simulate(const PotentialVolume& v, const AcquisitionConfig& cfg, std::uint64_t seed) {
  const InteractionParams p = interaction_parameter(cfg.accel_voltage_kv);
  const GridSpec grid(v.nx, v.ny, v.pitch, p.lambda);
  return simulate_tilt_series(v, make_plan(cfg, seed), p, cfg.n_b, make_transfer(grid, cfg),
                              cfg.anti_alias);
}

SolverConfig solver_for(const DeskConfig& cfg) {
  SolverConfig s = cfg.solver;
  s.n_b = cfg.acquisition.n_b;
  s.anti_alias = cfg.acquisition.anti_alias;
  if (s.nz == 0) s.nz = cfg.phantom.grid.nz;
  return s;
}

DeskResult run_desk(const DeskConfig& cfg, std::uint64_t seed) {
  DeskResult r;
  r.truth = build_phantom(cfg.phantom, seed, &r.removed);
  r.series = simulate(r.truth.volume, cfg.acquisition, seed);
  const InteractionParams p = interaction_parameter(cfg.acquisition.accel_voltage_kv);
  r.recon = reconstruct(r.series, solver_for(cfg), p, make_transfer(r.series.grid, cfg.acquisition));
  r.traced = trace_atoms(r.recon.volume, cfg.tracing);
  r.classes = classify_species(r.traced);
  r.report = score(r.traced.to_atoms(), r.truth.atoms, cfg.match_radius, cfg.match_mode);
  return r;
}

}  // namespace pcaet
