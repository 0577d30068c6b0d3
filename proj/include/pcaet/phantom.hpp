#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pcaet/volume.hpp"

namespace pcaet {

enum class Species { Light, Heavy, Unclassified };

std::string to_string(Species s);
Species parse_species(const std::string& s);

/// One atom; position in Å from the corner of voxel (0,0,0).
struct Atom {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  Species species = Species::Heavy;
  double amplitude = 0.0;  // peak potential, V·Å per slice
  double width = 0.0;      // Gaussian σ, Å
};

using AtomList = std::vector<Atom>;

struct SpeciesTable {
  double heavy_amplitude = 150.0;
  double light_amplitude = 75.0;
  double width = 0.75;
  double amplitude(Species s) const { return s == Species::Light ? light_amplitude : heavy_amplitude; }
};

/// Voxel grid the phantom lives on.
struct VolumeGrid {
  int nx = 0;
  int ny = 0;
  int nz = 0;
  double pitch = 0.5;

  double extent_x() const { return nx * pitch; }
  double extent_y() const { return ny * pitch; }
  double extent_z() const { return nz * pitch; }
};

struct GroundTruth {
  AtomList atoms;
  PotentialVolume volume;
  std::map<std::string, double> parameters;
  std::uint64_t seed = 0;
};

inline constexpr double kDefaultMinDistance = 1.2;  // Å
inline constexpr double kBoundaryVoxels = 2.0;

enum class LatticeKind { SimpleCubic, Diamond };
enum class ClipShape { Box, Sphere, Cylinder };  // cylinder axis is y

struct CrystalSpec {
  double lattice_const = 3.0;  // Å
  LatticeKind lattice = LatticeKind::SimpleCubic;
  ClipShape shape = ClipShape::Cylinder;
  double radius = 8.0;  // Å, ignored for Box
  /// Simple cubic: heavy/light on alternating sites (rock-salt parity).
  /// Diamond: heavy on the fcc sublattice, light on the offset one.
  bool alternate_species = true;
  /// Random lattice shift drawn uniformly from [−jitter, jitter]³ Å.
  double origin_jitter = 0.0;
  SpeciesTable species;
  double min_distance = kDefaultMinDistance;
};

/// Lattice sites of `spec` centred in the grid, kept if inside the clip shape and at
/// least two voxels from every face. Throws ConfigError if the lattice violates the
/// minimum distance.
GroundTruth make_crystal(const VolumeGrid& grid, const CrystalSpec& spec, std::uint64_t seed);

struct ShellSpec {
  double thickness = 0.0;    // Å beyond the crystal's outer radius
  double bond_length = 1.6;  // target mean nearest-neighbour distance, Å
  double heavy_fraction = 1.0 / 3.0;
  double min_distance = kDefaultMinDistance;
};

/// Random sequential adsorption into the shell around the crystal's clip shape. The
/// exclusion radius is raised above min_distance until the shell's mean
/// nearest-neighbour distance is close to bond_length.
GroundTruth add_amorphous_shell(const GroundTruth& g, const VolumeGrid& grid,
                                const CrystalSpec& core, const ShellSpec& shell,
                                std::uint64_t seed);

/// Voxel-averaged Gaussian blobs; amplitudes add linearly.
PotentialVolume render_potential(const AtomList& atoms, const VolumeGrid& grid);

/// Removes round-half-even(fraction·N) atoms chosen uniformly, re-renders the volume.
/// Removed atoms are returned through `removed` if given.
GroundTruth inject_vacancies(const GroundTruth& g, const VolumeGrid& grid, double fraction,
                             std::uint64_t seed, AtomList* removed = nullptr);

/// Smallest pairwise distance (∞ for fewer than two atoms).
double min_pair_distance(const AtomList& atoms);
/// Mean distance from each atom to its nearest neighbour in `pool`.
double mean_nearest_neighbour(const AtomList& atoms, const AtomList& pool);

/// CSV with header x_A,y_A,z_A,species,amplitude,width, 17 significant digits.
void write_atoms_csv(const std::string& path, const AtomList& atoms);
AtomList read_atoms_csv(const std::string& path);

}  // namespace pcaet
