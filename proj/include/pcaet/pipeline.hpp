#pragma once

// End-to-end desk experiment: phantom, tilt series, reconstruction, tracing, scoring.
// Shared by the command-line tool and the acceptance runner.

#include <cstdint>
#include <optional>
#include <vector>

#include "pcaet/forward_model.hpp"
#include "pcaet/phantom.hpp"
#include "pcaet/solver.hpp"
#include "pcaet/tracing.hpp"

namespace pcaet {

struct PhantomConfig {
  VolumeGrid grid{48, 48, 48, 0.5};
  CrystalSpec crystal = [] {
    CrystalSpec c;
    c.origin_jitter = 0.5;  // keeps sites off the voxel lattice
    return c;
  }();
  std::optional<ShellSpec> shell;  // no amorphous shell when empty
  double vacancy_fraction = 0.0;
};

struct AcquisitionConfig {
  int n_tilts = 30;
  double tilt_span_deg = 180.0;  // < 180 leaves a missing wedge
  std::vector<double> defoci{250.0, 1000.0};
  std::optional<double> total_dose = 5e4;  // e/Å²; empty means infinite
  double accel_voltage_kv = 300.0;
  int n_b = 4;  // binning used to simulate
  bool anti_alias = true;
  std::optional<double> aperture_qmax;  // Å⁻¹, hard objective aperture
};

struct DeskConfig {
  PhantomConfig phantom;
  AcquisitionConfig acquisition;
  SolverConfig solver = [] {
    SolverConfig s;
    s.reg_kind = RegKind::Tv;
    s.reg_weight = 1e-5;
    return s;
  }();
  TraceParams tracing;
  double match_radius = 1.0;  // Å
  MatchMode match_mode = MatchMode::Greedy;
};

/// Seed of the acquisition noise streams, kept apart from the phantom's streams.
std::uint64_t acquisition_seed(std::uint64_t seed);

GroundTruth build_phantom(const PhantomConfig& cfg, std::uint64_t seed,
                          AtomList* removed = nullptr);

AcquisitionPlan make_plan(const AcquisitionConfig& cfg, std::uint64_t seed);
TransferFunction make_transfer(const GridSpec& grid, const AcquisitionConfig& cfg);

TiltSeries simulate(const PotentialVolume& v, const AcquisitionConfig& cfg, std::uint64_t seed);

/// Solver settings aligned with the acquisition (same binning and band limit).
SolverConfig solver_for(const DeskConfig& cfg);

struct DeskResult {
  GroundTruth truth;
  AtomList removed;  // vacancy sites
  TiltSeries series;
  ReconstructionResult recon;
  TracedAtoms traced;
  Classification classes;
  TraceReport report;
};

DeskResult run_desk(const DeskConfig& cfg, std::uint64_t seed);

}  // namespace pcaet
