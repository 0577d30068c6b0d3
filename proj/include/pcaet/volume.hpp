#pragma once

#include <cstddef>
#include <vector>

#include "pcaet/types.hpp"

namespace pcaet {

/// Real 3D potential, x fastest then y then z. Each z slice holds the projected
/// potential of one voxel-thick layer in V·Å.
struct PotentialVolume {
  int nx = 0;
  int ny = 0;
  int nz = 0;
  double pitch = 0.0;  // Å, isotropic
  std::vector<double> values;

  PotentialVolume() = default;
  PotentialVolume(int nx_, int ny_, int nz_, double pitch_, double fill = 0.0);

  std::size_t size() const { return values.size(); }
  std::size_t slice_size() const { return static_cast<std::size_t>(nx) * ny; }
  std::size_t index(int x, int y, int z) const {
    return (static_cast<std::size_t>(z) * ny + y) * nx + x;
  }
  double& operator()(int x, int y, int z) { return values[index(x, y, z)]; }
  double operator()(int x, int y, int z) const { return values[index(x, y, z)]; }

  bool same_shape(const PotentialVolume& o) const {
    return nx == o.nx && ny == o.ny && nz == o.nz;
  }
  double sum() const;
};

/// Slabs of N_B consecutive slices summed along z.
struct BinnedVolume {
  int nx = 0;
  int ny = 0;
  int nz_b = 0;
  int n_b = 1;
  double pitch = 0.0;
  std::vector<double> values;

  BinnedVolume() = default;
  BinnedVolume(int nx_, int ny_, int nz_b_, int n_b_, double pitch_)
      : nx(nx_), ny(ny_), nz_b(nz_b_), n_b(n_b_), pitch(pitch_),
        values(static_cast<std::size_t>(nx_) * ny_ * nz_b_, 0.0) {}

  double slab_thickness() const { return n_b * pitch; }
  std::size_t slice_size() const { return static_cast<std::size_t>(nx) * ny; }
  const double* slab(int n) const { return values.data() + n * slice_size(); }
  double* slab(int n) { return values.data() + n * slice_size(); }
};

/// Rotation about the y axis by `theta_deg`, as three linear-interpolation shears
/// per x–z plane (x, z, x). A point at offset (dx, dz) from the volume centre moves to
/// (cosθ·dx + sinθ·dz, −sinθ·dx + cosθ·dz). Multiples of 90° (180° only, when
/// nx ≠ nz) are applied first as exact index permutations, leaving the shears a
/// residual of at most 45° (90°). θ = 0 is the identity bitwise.
PotentialVolume rotate(const PotentialVolume& v, double theta_deg);

/// Exact algebraic adjoint of `rotate` (transposed shears in reverse order).
PotentialVolume rotate_adjoint(const PotentialVolume& v, double theta_deg);

/// Sum N_B consecutive z slices. A non-multiple nz is zero-padded at the far end.
BinnedVolume bin_slices(const PotentialVolume& v, int n_b);

/// Adjoint of bin_slices: every slice receives its slab, padding discarded.
PotentialVolume bin_adjoint(const BinnedVolume& vb, int n_b, int nz);

/// Largest slab thickness that still supports the lateral resolution of the grid:
/// λ / (1 − √(1 − NA²)) with NA = λ / pitch.
double max_slice_thickness(double lambda, double pitch);

struct InteractionParams {
  double sigma = 0.0;          // rad / (V·Å)
  double lambda = 0.0;         // Å
  double accel_voltage = 0.0;  // kV
};

/// Relativistic wavelength and interaction constant σ = 2π·m·e·λ/h² for an
/// accelerating voltage in kV.
InteractionParams interaction_parameter(double accel_voltage_kv);

/// t = exp(iσW) for one slab of `n` pixels.
void transmittance(const double* slab, std::size_t n, double sigma, Complex* out);
WaveField transmittance(const Image& slab, const GridSpec& grid, const InteractionParams& p);

}  // namespace pcaet
