#include "pcaet/volume.hpp"

#include <cmath>
#include <numbers>

#include "pcaet/kernels.hpp"

namespace pcaet {

PotentialVolume::PotentialVolume(int nx_, int ny_, int nz_, double pitch_, double fill)
    : nx(nx_), ny(ny_), nz(nz_), pitch(pitch_) {
  if (nx_ < 1 || ny_ < 1 || nz_ < 1) throw ConfigError("volume dimensions must be positive");
  if (!(pitch_ > 0.0)) throw ConfigError("voxel pitch must be positive");
  values.assign(static_cast<std::size_t>(nx_) * ny_ * nz_, fill);
}

double PotentialVolume::sum() const {
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc;
}

namespace {

struct RotationPlan {
  int quarter_turns = 0;  // exact lattice rotation by 90°·quarter_turns, applied first
  double residual_deg = 0.0;
};

// Square x–z planes take exact quarter turns so the shears only see |residual| ≤ 45°.
// Otherwise only the 180° flip is exact and the residual stays within ±90°.
RotationPlan plan_rotation(double theta_deg, bool square) {
  double t = std::fmod(theta_deg, 360.0);
  if (t > 180.0) t -= 360.0;
  if (t < -180.0) t += 360.0;
  RotationPlan p;
  if (square) {
    p.quarter_turns = static_cast<int>(std::lround(t / 90.0));
    if (p.quarter_turns == -2) p.quarter_turns = 2;
    t -= 90.0 * std::lround(t / 90.0);
  } else if (t > 90.0) {
    p.quarter_turns = 2;
    t -= 180.0;
  } else if (t < -90.0) {
    p.quarter_turns = 2;
    t += 180.0;
  }
  p.residual_deg = t;
  return p;
}

// Exact rotation about y by 90°·k (k ∈ {−1, 0, 1, 2}); k = ±1 needs nx == nz.
void quarter_turn(const PotentialVolume& in, PotentialVolume& out, int k) {
  const int nx = in.nx, nz = in.nz;
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < in.ny; ++y)
      for (int x = 0; x < nx; ++x) {
        switch (k) {
          case 1: out(x, y, z) = in(nz - 1 - z, y, x); break;
          case -1: out(x, y, z) = in(z, y, nx - 1 - x); break;
          case 2: out(x, y, z) = in(nx - 1 - x, y, nz - 1 - z); break;
          default: out(x, y, z) = in(x, y, z); break;
        }
      }
}

int inverse_turn(int k) { return k == 2 ? 2 : -k; }

kernels::VolumeShape shape_of(const PotentialVolume& v) { return {v.nx, v.ny, v.nz}; }

}  // namespace

PotentialVolume rotate(const PotentialVolume& v, double theta_deg) {
  const RotationPlan plan = plan_rotation(theta_deg, v.nx == v.nz);
  PotentialVolume cur = v;
  if (plan.quarter_turns != 0) quarter_turn(v, cur, plan.quarter_turns);
  if (plan.residual_deg == 0.0) return cur;

  const double th = plan.residual_deg * std::numbers::pi / 180.0;
  const kernels::Shear sx{std::tan(th / 2.0), (v.nz - 1) / 2.0};
  const kernels::Shear sz{-std::sin(th), (v.nx - 1) / 2.0};
  const auto s = shape_of(v);
  PotentialVolume tmp = cur;
  kernels::omp::shear_x(cur.values, tmp.values, s, sx);
  kernels::omp::shear_z(tmp.values, cur.values, s, sz);
  kernels::omp::shear_x(cur.values, tmp.values, s, sx);
  return tmp;
}

PotentialVolume rotate_adjoint(const PotentialVolume& v, double theta_deg) {
  const RotationPlan plan = plan_rotation(theta_deg, v.nx == v.nz);
  PotentialVolume cur = v;
  if (plan.residual_deg != 0.0) {
    const double th = plan.residual_deg * std::numbers::pi / 180.0;
    const kernels::Shear sx{std::tan(th / 2.0), (v.nz - 1) / 2.0};
    const kernels::Shear sz{-std::sin(th), (v.nx - 1) / 2.0};
    const auto s = shape_of(v);
    PotentialVolume tmp = cur;
    kernels::omp::shear_x_adjoint(v.values, tmp.values, s, sx);
    kernels::omp::shear_z_adjoint(tmp.values, cur.values, s, sz);
    kernels::omp::shear_x_adjoint(cur.values, tmp.values, s, sx);
    cur = std::move(tmp);
  }
  if (plan.quarter_turns == 0) return cur;
  PotentialVolume out = cur;
  quarter_turn(cur, out, inverse_turn(plan.quarter_turns));
  return out;
}

BinnedVolume bin_slices(const PotentialVolume& v, int n_b) {
  if (n_b <= 0) throw ConfigError("binning factor must be positive");
  const int nz_b = (v.nz + n_b - 1) / n_b;
  BinnedVolume out(v.nx, v.ny, nz_b, n_b, v.pitch);
  kernels::omp::bin_sum(v.values, out.values, shape_of(v), n_b);
  return out;
}

PotentialVolume bin_adjoint(const BinnedVolume& vb, int n_b, int nz) {
  if (n_b <= 0) throw ConfigError("binning factor must be positive");
  if (vb.n_b != n_b || vb.nz_b != (nz + n_b - 1) / n_b)
    throw ConfigError("binned volume does not match the requested slice count");
  PotentialVolume out(vb.nx, vb.ny, nz, vb.pitch);
  kernels::omp::bin_replicate(vb.values, out.values, shape_of(out), n_b);
  return out;
}

double max_slice_thickness(double lambda, double pitch) {
  if (!(lambda > 0.0) || !(pitch > 0.0)) throw ConfigError("wavelength and pitch must be positive");
  const double na = lambda / pitch;
  if (na >= 1.0) throw ConfigError("numerical aperture must be below 1");
  // 1 − √(1 − NA²) written as NA² / (1 + √(1 − NA²)) to avoid cancellation.
  return lambda * (1.0 + std::sqrt(1.0 - na * na)) / (na * na);
}

InteractionParams interaction_parameter(double accel_voltage_kv) {
  if (!(accel_voltage_kv > 0.0)) throw ConfigError("accelerating voltage must be positive");
  constexpr double h = 6.62607015e-34;      // J·s
  constexpr double m0 = 9.1093837015e-31;   // kg
  constexpr double e = 1.602176634e-19;     // C
  constexpr double c = 299792458.0;         // m/s
  const double volts = accel_voltage_kv * 1e3;
  const double ev = e * volts;
  const double lambda_m = h / std::sqrt(2.0 * m0 * ev * (1.0 + ev / (2.0 * m0 * c * c)));
  const double mass = m0 * (1.0 + ev / (m0 * c * c));
  InteractionParams p;
  p.lambda = lambda_m * 1e10;
  p.sigma = 2.0 * std::numbers::pi * mass * e * lambda_m / (h * h) * 1e-10;
  p.accel_voltage = accel_voltage_kv;
  return p;
}

void transmittance(const double* slab, std::size_t n, double sigma, Complex* out) {
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(slab[i])) throw NumericalError("non-finite slab");
  const std::vector<Complex> ones(n, Complex(1.0, 0.0));
  kernels::omp::transmit({slab, n}, ones, {out, n}, sigma, 1.0);
}

WaveField transmittance(const Image& slab, const GridSpec& grid, const InteractionParams& p) {
  if (slab.nx != grid.nx || slab.ny != grid.ny) throw ConfigError("slab does not match grid");
  WaveField t(grid);
  transmittance(slab.values.data(), slab.size(), p.sigma, t.values.data());
  return t;
}

}  // namespace pcaet
