#include "pcaet/optics.hpp"

#include <cmath>
#include <numbers>

#include "pcaet/fft.hpp"

namespace pcaet {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_same_grid(const GridSpec& a, const GridSpec& b) {
  if (a.nx != b.nx || a.ny != b.ny || a.pitch != b.pitch)
    throw ConfigError("grid mismatch between field and transfer function");
}

WaveField filter_spectrum(const WaveField& f, const TransferFunction& h, bool conjugate) {
  check_same_grid(f.grid, h.grid);
  if (!f.all_finite()) throw NumericalError("non-finite field");
  WaveField out = f;
  fft2_inplace(out.values, f.grid.nx, f.grid.ny, FftDirection::Forward);
  const double scale = 1.0 / static_cast<double>(f.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out.values[i] *= (conjugate ? std::conj(h.values[i]) : h.values[i]) * scale;
  fft2_inplace(out.values, f.grid.nx, f.grid.ny, FftDirection::Inverse);
  return out;
}

}  // namespace

Complex propagation_phase(double dz, double lambda, double q2) {
  const double k = 1.0 / lambda;
  if (q2 > k * k) return Complex(0.0, 0.0);
  // kz − k = −q²/(k + kz), free of cancellation.
  const double kz_minus_k = -q2 / (k + std::sqrt(k * k - q2));
  const double carrier = dz * k;
  const double cycles = (carrier - std::round(carrier)) + dz * kz_minus_k;
  return std::polar(1.0, kTwoPi * cycles);
}

TransferFunction TransferFunction::identity(const GridSpec& g) {
  g.validate();
  TransferFunction h;
  h.grid = g;
  h.values.assign(g.size(), Complex(1.0, 0.0));
  return h;
}

TransferFunction TransferFunction::aperture(const GridSpec& g, double qmax) {
  if (!(qmax > 0.0)) throw ConfigError("aperture cutoff must be positive");
  TransferFunction h = identity(g);
  h.aperture_qmax = qmax;
  for (int ky = 0; ky < g.ny; ++ky)
    for (int kx = 0; kx < g.nx; ++kx)
      if (g.q2(kx, ky) > qmax * qmax) h.values[static_cast<std::size_t>(ky) * g.nx + kx] = 0.0;
  return h;
}

TransferFunction TransferFunction::standard(const GridSpec& g, bool anti_alias) {
  return anti_alias ? aperture(g, g.anti_alias_qmax()) : identity(g);
}

TransferFunction TransferFunction::from_values(const GridSpec& g, std::vector<Complex> values,
                                               std::optional<double> aperture_qmax) {
  g.validate();
  if (values.size() != g.size()) throw ConfigError("transfer function size mismatch");
  TransferFunction h;
  h.grid = g;
  h.aperture_qmax = aperture_qmax;
  for (int ky = 0; ky < g.ny; ++ky) {
    for (int kx = 0; kx < g.nx; ++kx) {
      const Complex v = values[static_cast<std::size_t>(ky) * g.nx + kx];
      if (std::abs(v) > 1.0 + 1e-12) throw ConfigError("transfer function exceeds unit modulus");
      if (aperture_qmax && g.q2(kx, ky) > *aperture_qmax * *aperture_qmax && v != Complex(0.0))
        throw ConfigError("transfer function nonzero beyond its aperture");
    }
  }
  h.values = std::move(values);
  return h;
}

Propagator::Propagator(const GridSpec& g, double dz, bool band_limit)
    : grid_(g), dz_(dz), kernel_(g.size()) {
  if (!(g.lambda > 0.0)) throw ConfigError("propagation requires a positive wavelength");
  g.validate();
  const double qcut2 = band_limit ? g.anti_alias_qmax() * g.anti_alias_qmax() : INFINITY;
  const double scale = 1.0 / static_cast<double>(g.size());
  for (int ky = 0; ky < g.ny; ++ky) {
    for (int kx = 0; kx < g.nx; ++kx) {
      const double q2 = g.q2(kx, ky);
      const std::size_t i = static_cast<std::size_t>(ky) * g.nx + kx;
      kernel_[i] = q2 > qcut2 ? Complex(0.0, 0.0) : propagation_phase(dz, g.lambda, q2) * scale;
    }
  }
}

void Propagator::apply(std::vector<Complex>& field, bool adjoint) const {
  fft2_inplace(field, grid_.nx, grid_.ny, FftDirection::Forward);
  if (adjoint) {
    for (std::size_t i = 0; i < field.size(); ++i) field[i] *= std::conj(kernel_[i]);
  } else {
    for (std::size_t i = 0; i < field.size(); ++i) field[i] *= kernel_[i];
  }
  fft2_inplace(field, grid_.nx, grid_.ny, FftDirection::Inverse);
}

void Propagator::apply_with(std::vector<Complex>& field, const std::vector<Complex>& h,
                            bool adjoint) const {
  fft2_inplace(field, grid_.nx, grid_.ny, FftDirection::Forward);
  if (adjoint) {
    for (std::size_t i = 0; i < field.size(); ++i) field[i] *= std::conj(kernel_[i] * h[i]);
  } else {
    for (std::size_t i = 0; i < field.size(); ++i) field[i] *= kernel_[i] * h[i];
  }
  fft2_inplace(field, grid_.nx, grid_.ny, FftDirection::Inverse);
}

WaveField propagate(const WaveField& f, double dz) {
  if (!(f.grid.lambda > 0.0)) throw ConfigError("propagation requires a positive wavelength");
  if (!f.all_finite()) throw NumericalError("non-finite field");
  Propagator p(f.grid, dz, false);
  WaveField out = f;
  p.apply(out.values);
  return out;
}

WaveField apply_ctf(const WaveField& f, const TransferFunction& h) {
  return filter_spectrum(f, h, false);
}

WaveField apply_ctf_adjoint(const WaveField& f, const TransferFunction& h) {
  return filter_spectrum(f, h, true);
}

}  // namespace pcaet
