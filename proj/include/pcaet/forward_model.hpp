#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pcaet/optics.hpp"
#include "pcaet/types.hpp"
#include "pcaet/volume.hpp"

namespace pcaet {

struct AcquisitionPlan {
  std::vector<double> tilt_angles;  // degrees, strictly increasing
  std::vector<double> defoci;       // Å, strictly positive
  std::optional<double> total_dose; // e/Å²; empty means infinite dose
  std::uint64_t seed = 0;

  void validate() const;
  bool infinite_dose() const { return !total_dose.has_value(); }
  /// total_dose / (N_θ·N_f), +∞ for infinite dose.
  double dose_per_image() const;
  std::size_t image_count() const { return tilt_angles.size() * defoci.size(); }

  /// `count` angles spaced span/count apart starting at −span/2.
  static std::vector<double> uniform_tilts(int count, double span_deg);
};

/// Measured images in electron counts per pixel, stored tilt-major:
/// image (i, j) lives at index i·N_f + j.
struct TiltSeries {
  AcquisitionPlan plan;
  GridSpec grid;
  double accel_voltage_kv = 300.0;
  std::vector<Image> images;

  const Image& image(std::size_t i, std::size_t j) const {
    return images[i * plan.defoci.size() + j];
  }
  /// Counts divided by dose_per_image·pitch², i.e. unit incident flux.
  Image normalized(std::size_t i, std::size_t j) const;
  void validate() const;
};

struct MultisliceResult {
  std::vector<WaveField> exits;             // one per defocus
  std::vector<std::vector<Complex>> waves;  // ψ_1 … ψ_{N+1}
};

/// Multislice propagator for one lateral grid and slab thickness. Holds the
/// precomputed Fourier kernels so that repeated forward/backward passes only pay
/// for FFTs and pointwise work.
class MultisliceModel {
 public:
  MultisliceModel(const GridSpec& grid, const InteractionParams& p, int n_b,
                  std::vector<double> defoci, TransferFunction h, bool anti_alias = true);

  const GridSpec& grid() const { return grid_; }
  const InteractionParams& params() const { return params_; }
  int n_b() const { return n_b_; }
  const std::vector<double>& defoci() const { return defoci_; }
  const TransferFunction& transfer() const { return h_; }

  /// Unit plane wave through every slab: t_m = exp(iσW_m), ψ_{m+1} = P_Δz(t_m·ψ_m),
  /// then ψ_exit,j = H{P_Δf_j(ψ_{N+1})}.
  MultisliceResult forward(const BinnedVolume& w) const;

  /// Adjoint pass: per-slab complex gradients g_m of ½·Σ_j ‖|ψ_exit,j| − √I_j‖²
  /// given residuals r_j (see backprop.hpp).
  std::vector<std::vector<Complex>> backward(std::span<const WaveField> residuals,
                                             const MultisliceResult& fwd,
                                             const BinnedVolume& w) const;

 private:
  void check_volume(const BinnedVolume& w) const;

  GridSpec grid_;
  InteractionParams params_;
  int n_b_;
  std::vector<double> defoci_;
  TransferFunction h_;
  Propagator slab_;
  std::vector<Propagator> defocus_;
};

MultisliceResult multislice_forward(const BinnedVolume& w, const InteractionParams& p,
                                    std::span<const double> defoci, const TransferFunction& h,
                                    bool anti_alias = true);

/// |ψ|² per pixel.
Image intensity(const WaveField& exit);

/// Poisson draw per pixel with mean ideal·dose_per_image·pitch². An infinite dose
/// returns `ideal` unchanged (unit background). Deterministic for a fixed seed.
Image apply_poisson(const Image& ideal, double dose_per_image, double pitch, std::uint64_t seed);

/// Rotate, bin, propagate, detect and add noise for every tilt; image (i, j) draws
/// from the RNG stream keyed by (plan.seed, i, j).
TiltSeries simulate_tilt_series(const PotentialVolume& v, const AcquisitionPlan& plan,
                                const InteractionParams& p, int n_b, const TransferFunction& h,
                                bool anti_alias = true);

}  // namespace pcaet
