#include "pcaet/forward_model.hpp"

#include <cmath>
#include <limits>

#include "pcaet/kernels.hpp"
#include "pcaet/rng.hpp"

namespace pcaet {

void AcquisitionPlan::validate() const {
  if (tilt_angles.empty()) throw ConfigError("acquisition plan has no tilt angles");
  if (defoci.empty()) throw ConfigError("acquisition plan has no defoci");
  for (std::size_t i = 1; i < tilt_angles.size(); ++i)
    if (!(tilt_angles[i] > tilt_angles[i - 1]))
      throw ConfigError("tilt angles must be strictly increasing");
  for (double df : defoci)
    if (!(df > 0.0)) throw ConfigError("defoci must be strictly positive");
  if (total_dose && !(*total_dose > 0.0)) throw ConfigError("total dose must be positive");
}

double AcquisitionPlan::dose_per_image() const {
  if (!total_dose) return std::numeric_limits<double>::infinity();
  return *total_dose / static_cast<double>(image_count());
}

std::vector<double> AcquisitionPlan::uniform_tilts(int count, double span_deg) {
  if (count < 1) throw ConfigError("tilt count must be positive");
  if (!(span_deg > 0.0) || span_deg > 180.0) throw ConfigError("tilt span must be in (0, 180]");
  std::vector<double> out(count);
  const double step = span_deg / count;
  for (int k = 0; k < count; ++k) out[k] = -span_deg / 2.0 + step * k;
  return out;
}

Image TiltSeries::normalized(std::size_t i, std::size_t j) const {
  Image out = image(i, j);
  if (plan.infinite_dose()) return out;
  const double scale = 1.0 / (plan.dose_per_image() * grid.pitch * grid.pitch);
  for (double& v : out.values) v *= scale;
  return out;
}

void TiltSeries::validate() const {
  plan.validate();
  grid.validate();
  if (images.size() != plan.image_count()) throw ConfigError("tilt series image count mismatch");
  for (const auto& im : images) {
    if (im.nx != grid.nx || im.ny != grid.ny) throw ConfigError("tilt series image size mismatch");
    for (double v : im.values)
      if (!(v >= 0.0)) throw NumericalError("tilt series contains negative or non-finite values");
  }
}

MultisliceModel::MultisliceModel(const GridSpec& grid, const InteractionParams& p, int n_b,
                                 std::vector<double> defoci, TransferFunction h, bool anti_alias)
    : grid_(grid),
      params_(p),
      n_b_(n_b),
      defoci_(std::move(defoci)),
      h_(std::move(h)),
      slab_(grid, n_b * grid.pitch, anti_alias) {
  if (n_b <= 0) throw ConfigError("binning factor must be positive");
  if (h_.grid.nx != grid.nx || h_.grid.ny != grid.ny || h_.grid.pitch != grid.pitch)
    throw ConfigError("transfer function grid does not match the volume");
  if (std::abs(grid.lambda - p.lambda) > 1e-12 * p.lambda ||
      (h_.grid.lambda > 0.0 && std::abs(h_.grid.lambda - p.lambda) > 1e-12 * p.lambda))
    throw ConfigError("wavelength mismatch between grid, transfer function and interaction");
  defocus_.reserve(defoci_.size());
  for (double df : defoci_) defocus_.emplace_back(grid, df, false);
}

void MultisliceModel::check_volume(const BinnedVolume& w) const {
  if (w.nx != grid_.nx || w.ny != grid_.ny || w.pitch != grid_.pitch)
    throw ConfigError("binned volume does not match the model grid");
  if (w.n_b != n_b_) throw ConfigError("binned volume slab thickness does not match the model");
}

MultisliceResult MultisliceModel::forward(const BinnedVolume& w) const {
  check_volume(w);
  const std::size_t n = grid_.size();
  for (double v : w.values)
    if (!std::isfinite(v)) throw NumericalError("non-finite slab");
  MultisliceResult res;
  res.waves.reserve(w.nz_b + 1);
  res.waves.emplace_back(n, Complex(1.0, 0.0));
  for (int m = 0; m < w.nz_b; ++m) {
    std::vector<Complex> next(n);
    kernels::omp::transmit({w.slab(m), n}, res.waves.back(), next, params_.sigma, 1.0);
    slab_.apply(next);
    res.waves.push_back(std::move(next));
  }
  res.exits.reserve(defocus_.size());
  for (const auto& prop : defocus_) {
    WaveField exit(grid_);
    exit.values = res.waves.back();
    prop.apply_with(exit.values, h_.values);
    res.exits.push_back(std::move(exit));
  }
  return res;
}

std::vector<std::vector<Complex>> MultisliceModel::backward(std::span<const WaveField> residuals,
                                                            const MultisliceResult& fwd,
                                                            const BinnedVolume& w) const {
  check_volume(w);
  if (residuals.size() != defocus_.size())
    throw ConfigError("residual count does not match defocus count");
  if (fwd.waves.size() != static_cast<std::size_t>(w.nz_b) + 1)
    throw ConfigError("slab count mismatch between volume and stored waves");
  const std::size_t n = grid_.size();

  // Refocus every residual to the plane after the last slab.
  std::vector<Complex> phi(n, Complex(0.0, 0.0));
  std::vector<Complex> tmp(n);
  for (std::size_t j = 0; j < defocus_.size(); ++j) {
    tmp = residuals[j].values;
    defocus_[j].apply_with(tmp, h_.values, true);
    for (std::size_t i = 0; i < n; ++i) phi[i] += tmp[i];
  }

  std::vector<std::vector<Complex>> grads(w.nz_b, std::vector<Complex>(n));
  const Complex minus_i_sigma(0.0, -params_.sigma);
  std::vector<Complex> tconj(n);
  const std::vector<Complex> ones(n, Complex(1.0, 0.0));
  for (int m = w.nz_b - 1; m >= 0; --m) {
    // φ is the adjoint field at ψ_{m+1}; step back through P_Δz to t_m·ψ_m.
    slab_.apply(phi, true);
    kernels::omp::transmit({w.slab(m), n}, ones, tconj, params_.sigma, -1.0);
    const auto& psi = fwd.waves[m];
    auto& g = grads[m];
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = minus_i_sigma * tconj[i] * std::conj(psi[i]) * phi[i];
      phi[i] *= tconj[i];
    }
  }
  return grads;
}

MultisliceResult multislice_forward(const BinnedVolume& w, const InteractionParams& p,
                                    std::span<const double> defoci, const TransferFunction& h,
                                    bool anti_alias) {
  const GridSpec grid(w.nx, w.ny, w.pitch, p.lambda);
  MultisliceModel model(grid, p, w.n_b, {defoci.begin(), defoci.end()}, h, anti_alias);
  return model.forward(w);
}

Image intensity(const WaveField& exit) {
  Image out(exit.grid.nx, exit.grid.ny);
  for (std::size_t i = 0; i < exit.size(); ++i) out.values[i] = std::norm(exit.values[i]);
  return out;
}

Image apply_poisson(const Image& ideal, double dose_per_image, double pitch, std::uint64_t seed) {
  for (double v : ideal.values)
    if (!(v >= 0.0)) throw NumericalError("negative or non-finite ideal intensity");
  if (std::isinf(dose_per_image)) return ideal;
  if (!(dose_per_image > 0.0)) throw ConfigError("dose per image must be positive");
  const double scale = dose_per_image * pitch * pitch;
  Rng rng(seed);
  Image out(ideal.nx, ideal.ny);
  for (std::size_t i = 0; i < ideal.size(); ++i)
    out.values[i] = static_cast<double>(rng.poisson(ideal.values[i] * scale));
  return out;
}

TiltSeries simulate_tilt_series(const PotentialVolume& v, const AcquisitionPlan& plan,
                                const InteractionParams& p, int n_b, const TransferFunction& h,
                                bool anti_alias) {
  plan.validate();
  TiltSeries series;
  series.plan = plan;
  series.grid = GridSpec(v.nx, v.ny, v.pitch, p.lambda);
  series.accel_voltage_kv = p.accel_voltage;
  MultisliceModel model(series.grid, p, n_b, plan.defoci, h, anti_alias);
  const double dose = plan.dose_per_image();
  series.images.reserve(plan.image_count());
  for (std::size_t i = 0; i < plan.tilt_angles.size(); ++i) {
    const BinnedVolume w = bin_slices(rotate(v, plan.tilt_angles[i]), n_b);
    const MultisliceResult fwd = model.forward(w);
    for (std::size_t j = 0; j < plan.defoci.size(); ++j)
      series.images.push_back(
          apply_poisson(intensity(fwd.exits[j]), dose, v.pitch, stream_seed(plan.seed, i, j)));
  }
  return series;
}

}  // namespace pcaet
