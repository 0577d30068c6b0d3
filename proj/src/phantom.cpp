#include "pcaet/phantom.hpp"

#include <algorithm>
#include <array>
#include <cfenv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "pcaet/kernels.hpp"
#include "pcaet/rng.hpp"

namespace pcaet {

std::string to_string(Species s) {
  switch (s) {
    case Species::Light: return "light";
    case Species::Heavy: return "heavy";
    case Species::Unclassified: return "unclassified";
  }
  return "unclassified";
}

Species parse_species(const std::string& s) {
  if (s == "light") return Species::Light;
  if (s == "heavy") return Species::Heavy;
  if (s == "unclassified") return Species::Unclassified;
  throw ConfigError("unknown species: " + s);
}

namespace {

double dist2(const Atom& a, const Atom& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

// Uniform hash grid for fixed-radius neighbour queries.
class CellIndex {
 public:
  explicit CellIndex(double cell) : cell_(cell) {}

  void insert(const Atom& a, std::size_t id) { cells_[key(a.x, a.y, a.z)].push_back(id); }

  template <class F>
  void for_near(double x, double y, double z, F&& f) const {
    const auto cx = cell_of(x), cy = cell_of(y), cz = cell_of(z);
    for (std::int64_t i = cx - 1; i <= cx + 1; ++i)
      for (std::int64_t j = cy - 1; j <= cy + 1; ++j)
        for (std::int64_t k = cz - 1; k <= cz + 1; ++k) {
          auto it = cells_.find(pack(i, j, k));
          if (it == cells_.end()) continue;
          for (std::size_t id : it->second) f(id);
        }
  }

 private:
  std::int64_t cell_of(double v) const { return static_cast<std::int64_t>(std::floor(v / cell_)); }
  static std::uint64_t pack(std::int64_t i, std::int64_t j, std::int64_t k) {
    const auto u = [](std::int64_t v) { return static_cast<std::uint64_t>(v + (1 << 20)) & 0x1fffff; };
    return (u(i) << 42) | (u(j) << 21) | u(k);
  }
  std::uint64_t key(double x, double y, double z) const {
    return pack(cell_of(x), cell_of(y), cell_of(z));
  }

  double cell_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

bool inside_margin(const VolumeGrid& g, double x, double y, double z) {
  const double m = kBoundaryVoxels * g.pitch;
  return x >= m && x <= g.extent_x() - m && y >= m && y <= g.extent_y() - m && z >= m &&
         z <= g.extent_z() - m;
}

// Radial coordinate used by the clip shape (distance from the centre or the y axis).
double clip_radius(const VolumeGrid& g, ClipShape shape, double x, double y, double z) {
  const double dx = x - g.extent_x() / 2, dy = y - g.extent_y() / 2, dz = z - g.extent_z() / 2;
  switch (shape) {
    case ClipShape::Box: return 0.0;
    case ClipShape::Sphere: return std::sqrt(dx * dx + dy * dy + dz * dz);
    case ClipShape::Cylinder: return std::sqrt(dx * dx + dz * dz);
  }
  return 0.0;
}

void validate_grid(const VolumeGrid& g) {
  if (g.nx < 0 || g.ny < 0 || g.nz < 0) throw ConfigError("grid dimensions must be non-negative");
  if (!(g.pitch > 0.0)) throw ConfigError("pitch must be positive");
}

}  // namespace

double min_pair_distance(const AtomList& atoms) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < atoms.size(); ++i)
    for (std::size_t j = i + 1; j < atoms.size(); ++j) best = std::min(best, dist2(atoms[i], atoms[j]));
  return std::sqrt(best);
}

double mean_nearest_neighbour(const AtomList& atoms, const AtomList& pool) {
  if (atoms.empty()) return 0.0;
  double total = 0.0;
  for (const Atom& a : atoms) {
    double best = std::numeric_limits<double>::infinity();
    for (const Atom& b : pool) {
      const double d = dist2(a, b);
      if (d > 0.0) best = std::min(best, d);
    }
    total += std::sqrt(best);
  }
  return total / static_cast<double>(atoms.size());
}

PotentialVolume render_potential(const AtomList& atoms, const VolumeGrid& grid) {
  validate_grid(grid);
  PotentialVolume v(grid.nx, grid.ny, grid.nz, grid.pitch);
  std::vector<kernels::AtomBlob> blobs;
  blobs.reserve(atoms.size());
  for (const Atom& a : atoms) {
    if (!(a.width > 0.0)) throw ConfigError("atom width must be positive");
    blobs.push_back({a.x / grid.pitch, a.y / grid.pitch, a.z / grid.pitch, a.amplitude,
                     a.width / grid.pitch});
  }
  kernels::omp::render_blobs(blobs, v.values, {grid.nx, grid.ny, grid.nz});
  return v;
}

GroundTruth make_crystal(const VolumeGrid& grid, const CrystalSpec& spec, std::uint64_t seed) {
  validate_grid(grid);
  if (!(spec.lattice_const > 0.0)) throw ConfigError("lattice constant must be positive");
  if (spec.shape != ClipShape::Box && !(spec.radius >= 0.0)) throw ConfigError("radius must be >= 0");

  // Basis in units of the cubic cell; the second half of the diamond basis is the offset sublattice.
  std::vector<std::array<double, 3>> basis{{0, 0, 0}};
  if (spec.lattice == LatticeKind::Diamond)
    basis = {{0, 0, 0},          {0, 0.5, 0.5},       {0.5, 0, 0.5},       {0.5, 0.5, 0},
             {0.25, 0.25, 0.25}, {0.25, 0.75, 0.75}, {0.75, 0.25, 0.75}, {0.75, 0.75, 0.25}};

  Rng rng(stream_seed(seed, 1));
  double shift[3] = {0, 0, 0};
  for (double& s : shift) s = spec.origin_jitter * (2.0 * rng.uniform() - 1.0);

  const double a = spec.lattice_const;
  const double cx = grid.extent_x() / 2 + shift[0];
  const double cy = grid.extent_y() / 2 + shift[1];
  const double cz = grid.extent_z() / 2 + shift[2];
  const double half = std::max({grid.extent_x(), grid.extent_y(), grid.extent_z()}) / 2;
  const int reach = static_cast<int>(std::ceil(half / a)) + 1;

  GroundTruth g;
  g.seed = seed;
  for (int k = -reach; k <= reach; ++k)
    for (int j = -reach; j <= reach; ++j)
      for (int i = -reach; i <= reach; ++i)
        for (std::size_t b = 0; b < basis.size(); ++b) {
          Atom at;
          at.x = cx + a * (i + basis[b][0]);
          at.y = cy + a * (j + basis[b][1]);
          at.z = cz + a * (k + basis[b][2]);
          if (!inside_margin(grid, at.x, at.y, at.z)) continue;
          if (spec.shape != ClipShape::Box &&
              clip_radius(grid, spec.shape, at.x, at.y, at.z) > spec.radius)
            continue;
          bool light = false;
          if (spec.alternate_species)
            light = spec.lattice == LatticeKind::Diamond ? b >= 4 : ((i + j + k) & 1) != 0;
          at.species = light ? Species::Light : Species::Heavy;
          at.amplitude = spec.species.amplitude(at.species);
          at.width = spec.species.width;
          g.atoms.push_back(at);
        }
  if (g.atoms.size() > 1 && min_pair_distance(g.atoms) < spec.min_distance - 1e-12)
    throw ConfigError("lattice spacing violates the minimum atom distance");

  g.volume = render_potential(g.atoms, grid);
  g.parameters = {{"lattice_const_A", a},
                  {"radius_A", spec.radius},
                  {"origin_jitter_A", spec.origin_jitter},
                  {"heavy_amplitude_VA", spec.species.heavy_amplitude},
                  {"light_amplitude_VA", spec.species.light_amplitude},
                  {"width_A", spec.species.width}};
  return g;
}

namespace {

// One RSA fill of the shell with exclusion radius `r_ex`; returns the new atoms only.
AtomList adsorb(const AtomList& existing, const VolumeGrid& grid, const CrystalSpec& core,
                const ShellSpec& shell, double r_ex, std::uint64_t seed) {
  const double inner = core.shape == ClipShape::Box ? 0.0 : core.radius;
  const double outer = inner + shell.thickness;
  CellIndex index(r_ex);
  AtomList all = existing;
  for (std::size_t i = 0; i < all.size(); ++i) index.insert(all[i], i);

  const double m = kBoundaryVoxels * grid.pitch;
  const double span[3] = {grid.extent_x() - 2 * m, grid.extent_y() - 2 * m, grid.extent_z() - 2 * m};
  if (span[0] < 0 || span[1] < 0 || span[2] < 0) return {};

  Rng rng(seed);
  const double r2 = r_ex * r_ex;
  AtomList added;
  const int max_misses = 4000;
  int misses = 0;
  long outside = 0;
  while (misses < max_misses && outside < 1000000) {
    Atom c;
    c.x = m + span[0] * rng.uniform();
    c.y = m + span[1] * rng.uniform();
    c.z = m + span[2] * rng.uniform();
    const double heavy_draw = rng.uniform();
    const double r = clip_radius(grid, core.shape, c.x, c.y, c.z);
    if (core.shape == ClipShape::Box || r <= inner || r > outer) {
      // Outside the shell does not count as a packing miss.
      ++outside;
      continue;
    }
    outside = 0;
    bool ok = true;
    index.for_near(c.x, c.y, c.z, [&](std::size_t id) {
      if (ok && dist2(all[id], c) < r2) ok = false;
    });
    if (!ok) {
      ++misses;
      continue;
    }
    misses = 0;
    c.species = heavy_draw < shell.heavy_fraction ? Species::Heavy : Species::Light;
    c.amplitude = core.species.amplitude(c.species);
    c.width = core.species.width;
    index.insert(c, all.size());
    all.push_back(c);
    added.push_back(c);
  }
  return added;
}

}  // namespace

GroundTruth add_amorphous_shell(const GroundTruth& g, const VolumeGrid& grid,
                                const CrystalSpec& core, const ShellSpec& shell,
                                std::uint64_t seed) {
  validate_grid(grid);
  if (!(shell.thickness >= 0.0)) throw ConfigError("shell thickness must be >= 0");
  if (!(shell.bond_length >= shell.min_distance))
    throw ConfigError("bond length must be at least the minimum distance");
  if (shell.thickness == 0.0 || core.shape == ClipShape::Box) return g;

  // Jammed RSA packings have a mean nearest-neighbour distance a little above the
  // exclusion radius, so scan radii from min_distance up and keep the best match.
  AtomList best;
  double best_gap = std::numeric_limits<double>::infinity();
  int trial = 0;
  for (double r_ex = shell.min_distance; r_ex <= shell.bond_length + 1e-9; r_ex += 0.05, ++trial) {
    AtomList added = adsorb(g.atoms, grid, core, shell, r_ex, stream_seed(seed, 2, trial));
    if (added.empty()) continue;
    AtomList pool = g.atoms;
    pool.insert(pool.end(), added.begin(), added.end());
    const double gap = std::abs(mean_nearest_neighbour(added, pool) - shell.bond_length);
    if (gap < best_gap) {
      best_gap = gap;
      best = std::move(added);
    }
  }

  GroundTruth out = g;
  out.atoms.insert(out.atoms.end(), best.begin(), best.end());
  out.volume = render_potential(out.atoms, grid);
  out.parameters["shell_thickness_A"] = shell.thickness;
  out.parameters["bond_length_A"] = shell.bond_length;
  return out;
}

GroundTruth inject_vacancies(const GroundTruth& g, const VolumeGrid& grid, double fraction,
                             std::uint64_t seed, AtomList* removed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw ConfigError("vacancy fraction must be in [0, 1]");
  if (removed) removed->clear();
  if (fraction == 0.0) return g;

  const std::size_t n = g.atoms.size();
  const int saved = std::fegetround();
  std::fesetround(FE_TONEAREST);
  const auto count = static_cast<std::size_t>(std::nearbyint(fraction * static_cast<double>(n)));
  std::fesetround(saved);

  // Partial Fisher–Yates: the first `count` entries of the permutation are removed.
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(stream_seed(seed, 3));
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(perm[i], perm[j]);
  }
  std::vector<char> drop(n, 0);
  for (std::size_t i = 0; i < count; ++i) drop[perm[i]] = 1;

  GroundTruth out;
  out.seed = g.seed;
  out.parameters = g.parameters;
  out.parameters["vacancy_fraction"] = fraction;
  for (std::size_t i = 0; i < n; ++i) {
    if (drop[i]) {
      if (removed) removed->push_back(g.atoms[i]);
    } else {
      out.atoms.push_back(g.atoms[i]);
    }
  }
  out.volume = render_potential(out.atoms, grid);
  return out;
}

void write_atoms_csv(const std::string& path, const AtomList& atoms) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "x_A,y_A,z_A,species,amplitude,width\n";
  char buf[256];
  for (const Atom& a : atoms) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%s,%.17g,%.17g\n", a.x, a.y, a.z,
                  to_string(a.species).c_str(), a.amplitude, a.width);
    out << buf;
  }
}

AtomList read_atoms_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != "x_A,y_A,z_A,species,amplitude,width")
    throw ConfigError(path + ": unexpected atom CSV header");
  AtomList atoms;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f[6];
    for (auto& s : f)
      if (!std::getline(ss, s, ',')) throw ConfigError(path + ": short row: " + line);
    try {
      Atom a;
      a.x = std::stod(f[0]);
      a.y = std::stod(f[1]);
      a.z = std::stod(f[2]);
      a.species = parse_species(f[3]);
      a.amplitude = std::stod(f[4]);
      a.width = std::stod(f[5]);
      atoms.push_back(a);
    } catch (const std::logic_error&) {
      throw ConfigError(path + ": bad row: " + line);
    }
  }
  return atoms;
}

}  // namespace pcaet
