#pragma once

// Data-parallel inner loops. Every kernel exists as a serial reference and an OpenMP
// version compiled from the same source; the two agree bitwise for any thread count
// because no kernel reduces across iterations of its parallel loop. Library code
// calls the omp:: versions.

#include <cstddef>
#include <span>

#include "pcaet/types.hpp"

namespace pcaet::kernels {

struct VolumeShape {
  int nx;
  int ny;
  int nz;
  std::size_t size() const { return static_cast<std::size_t>(nx) * ny * nz; }
};

/// Shear offset coef·(i − centre) for row/column i.
struct Shear {
  double coef;
  double centre;
};

struct AtomBlob {
  double x, y, z;  // voxel units; voxel (0,0,0) spans [0,1)³
  double amplitude;
  double width;    // voxel units
};

namespace serial {

// out(x,y,z) = in(x − coef·(z − centre), y, z); linear interpolation, zero outside.
void shear_x(std::span<const double> in, std::span<double> out, VolumeShape s, Shear sh);
void shear_x_adjoint(std::span<const double> in, std::span<double> out, VolumeShape s, Shear sh);
// out(x,y,z) = in(x, y, z − coef·(x − centre)).
void shear_z(std::span<const double> in, std::span<double> out, VolumeShape s, Shear sh);
void shear_z_adjoint(std::span<const double> in, std::span<double> out, VolumeShape s, Shear sh);

// slab n = Σ slices n·nb … n·nb+nb−1; slices past nz count as zero. `s` is the input shape.
void bin_sum(std::span<const double> in, std::span<double> out, VolumeShape s, int nb);
// slice m = slab ⌊m/nb⌋. `s` is the output shape.
void bin_replicate(std::span<const double> in, std::span<double> out, VolumeShape s, int nb);

// out = exp(i·sign·σ·w)·psi
void transmit(std::span<const double> w, std::span<const Complex> psi, std::span<Complex> out,
              double sigma, double sign);

// Forward differences with Neumann boundary; grad holds x, y, z blocks of s.size() each.
void gradient3(std::span<const double> x, std::span<double> grad, VolumeShape s);
// Negative adjoint of gradient3.
void divergence3(std::span<const double> p, std::span<double> div, VolumeShape s);
// p_i ← p_i / max(1, ‖p_i‖) on the three-component dual field.
void project_unit_ball(std::span<double> p, VolumeShape s);

// Adds voxel-integrated Gaussian blobs to `out`, each voxel accumulating in list order.
void render_blobs(std::span<const AtomBlob> atoms, std::span<double> out, VolumeShape s);

}  // namespace serial

namespace omp {

void shear_x(std::span<const double> in, std::span<double> out, VolumeShape s, Shear sh);
void shear_x_adjoint(std::span<const double> in, std::span<double> out, VolumeShape s, Shear sh);
void shear_z(std::span<const double> in, std::span<double> out, VolumeShape s, Shear sh);
void shear_z_adjoint(std::span<const double> in, std::span<double> out, VolumeShape s, Shear sh);
void bin_sum(std::span<const double> in, std::span<double> out, VolumeShape s, int nb);
void bin_replicate(std::span<const double> in, std::span<double> out, VolumeShape s, int nb);
void transmit(std::span<const double> w, std::span<const Complex> psi, std::span<Complex> out,
              double sigma, double sign);
void gradient3(std::span<const double> x, std::span<double> grad, VolumeShape s);
void divergence3(std::span<const double> p, std::span<double> div, VolumeShape s);
void project_unit_ball(std::span<double> p, VolumeShape s);
void render_blobs(std::span<const AtomBlob> atoms, std::span<double> out, VolumeShape s);

}  // namespace omp

/// OpenMP threads used by the omp:: kernels (1 without OpenMP).
int thread_count();
void set_thread_count(int n);

}  // namespace pcaet::kernels
