#pragma once

#include <string>
#include <vector>

#include "pcaet/phantom.hpp"
#include "pcaet/volume.hpp"

namespace pcaet {

/// Position in voxel units from the corner of voxel (0,0,0); voxel i is centred at i + 0.5.
struct TracedSite {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double intensity = 0.0;  // fitted peak height, V·Å
  double width = 0.0;      // fitted σ, voxels
  Species species = Species::Unclassified;
};

struct TracedAtoms {
  std::vector<TracedSite> sites;
  double pitch = 0.0;
  int iterations = 0;

  /// Sites in Å, amplitude = fitted intensity, width in Å.
  AtomList to_atoms() const;
};

/// v ⊛ (G_small/ΣG_small − G_large/ΣG_large) by periodic FFT convolution.
PotentialVolume dog_filter(const PotentialVolume& v, double sigma_small = 0.5,
                           double sigma_large = 1.0);

struct VoxelIndex {
  int x = 0;
  int y = 0;
  int z = 0;
};

/// Strict 26-neighbour local maxima at least `border` voxels from every face, with
/// equal neighbours resolved in favour of the lower (z, y, x) index. Sorted by index.
std::vector<VoxelIndex> find_candidates(const PotentialVolume& filtered, int border = 2,
                                        double min_response = 0.0);

struct GaussianFit {
  double x = 0.0, y = 0.0, z = 0.0;  // voxels
  double amplitude = 0.0;
  double width = 0.0;
  double background = 0.0;
  double residual = 0.0;  // RMS misfit over the window
  int steps = 0;
  bool converged = false;
};

/// Levenberg–Marquardt fit of A·exp(−‖x−μ‖²/2s²) + b over a cubic window (clipped to
/// the volume) centred on `site`, sampled at voxel centres.
GaussianFit fit_gaussian_3d(const PotentialVolume& v, VoxelIndex site, int window = 7,
                            int max_steps = 100);

struct TraceParams {
  double dog_sigma_small = 0.5;
  double dog_sigma_large = 1.0;
  int border = 2;
  int window = 7;
  int max_fit_steps = 100;
  double intensity_floor_volts = 30.0;  // compared against intensity / pitch
  double width_floor = 1.0;             // voxels
  // A fit that wants to leave this neighbourhood of its start, or grow wider than
  // max_width, is describing something other than the candidate and is rejected.
  double max_center_shift = 1.5;  // voxels
  double max_width = 3.0;         // voxels
  double merge_distance = 2.25;         // voxels
  int max_iterations = 12;
  int stop_removed_below = 2;
  double stop_rms_move = 0.005;  // voxels
};

/// Detect, fit, subtract and re-detect, then refine every site against the volume with
/// its neighbours' fitted Gaussians subtracted, pruning weak or narrow sites and merging
/// close pairs after each pass.
TracedAtoms trace_atoms(const PotentialVolume& v, const TraceParams& params = {});

struct Classification {
  bool bimodal = false;
  double threshold = 0.0;
  double mean_low = 0.0, sigma_low = 0.0;
  double mean_high = 0.0, sigma_high = 0.0;
  std::vector<double> bin_centres;
  std::vector<double> counts;
  std::string warning;
};

/// Two-Gaussian fit to the intensity histogram; sites below the intersection are
/// light, above heavy. A unimodal fit leaves every site unclassified.
Classification classify_species(TracedAtoms& t);

enum class MatchMode { Greedy, Optimal };

struct TraceReport {
  double position_error_mean_pm = 0.0;
  double position_error_rms_pm = 0.0;
  double sigma_x_pm = 0.0, sigma_y_pm = 0.0, sigma_z_pm = 0.0;
  double atoms_found = 0.0;       // %
  double false_positives = 0.0;   // % of truth count
  double correct_species = 0.0;   // % of matched pairs
  std::size_t matched = 0, traced = 0, truth = 0;
  std::vector<double> errors_pm;  // per matched pair
  std::vector<int> truth_match;   // traced index per truth atom, −1 if unmatched
};

/// Matches traced atoms to truth within `match_radius` Å and summarizes the errors.
TraceReport score(const AtomList& traced, const AtomList& truth, double match_radius = 1.0,
                  MatchMode mode = MatchMode::Greedy);

struct Tetrahedron {
  std::size_t centre;
  std::size_t corners[4];
};

/// Atoms with at least four neighbours at distance in [bond − tol, bond + tol]; the
/// four nearest in range form the corners.
std::vector<Tetrahedron> find_tetrahedra(const AtomList& atoms, double bond = 1.6,
                                         double tol = 0.375);

/// CSV with header x_A,y_A,z_A,species,intensity,width (widths in Å).
void write_traced_csv(const std::string& path, const TracedAtoms& t);
AtomList read_traced_csv(const std::string& path);

}  // namespace pcaet
