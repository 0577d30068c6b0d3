#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcaet {

using Complex = std::complex<double>;

/// Invalid user-supplied configuration or mismatched inputs (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure: non-finite data, divergence, failed fit (CLI exit code 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Lateral sampling grid of the electron wave.
///
/// Pixels are square with side `pitch` (Å). Frequencies follow the usual DFT
/// ordering: index k maps to k/(n·pitch) for k < n/2 and (k-n)/(n·pitch)
/// otherwise, so the largest component magnitude is 1/(2·pitch).
struct GridSpec {
  int nx = 0;
  int ny = 0;
  double pitch = 0.0;   // Å per pixel
  double lambda = 0.0;  // electron wavelength, Å

  GridSpec() = default;
  GridSpec(int nx_, int ny_, double pitch_, double lambda_);

  std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }

  /// Spatial frequency (Å⁻¹) of DFT index k on an axis of n samples.
  double freq(int k, int n) const;
  double qx(int kx) const { return freq(kx, nx); }
  double qy(int ky) const { return freq(ky, ny); }
  double q2(int kx, int ky) const {
    const double a = qx(kx), b = qy(ky);
    return a * a + b * b;
  }
  /// Circular cutoff at 2/3 of Nyquist.
  double anti_alias_qmax() const { return 1.0 / (3.0 * pitch); }

  bool same_shape(const GridSpec& o) const;
  void validate() const;
};

/// Complex 2D field sampled on a GridSpec, x fastest.
struct WaveField {
  GridSpec grid;
  std::vector<Complex> values;

  WaveField() = default;
  explicit WaveField(const GridSpec& g, Complex fill = Complex(0.0, 0.0))
      : grid(g), values(g.size(), fill) {}

  Complex& operator()(int x, int y) { return values[static_cast<std::size_t>(y) * grid.nx + x]; }
  const Complex& operator()(int x, int y) const {
    return values[static_cast<std::size_t>(y) * grid.nx + x];
  }
  std::size_t size() const { return values.size(); }
  bool all_finite() const;
};

/// Real 2D array, x fastest.
struct Image {
  int nx = 0;
  int ny = 0;
  std::vector<double> values;

  Image() = default;
  Image(int nx_, int ny_, double fill = 0.0)
      : nx(nx_), ny(ny_), values(static_cast<std::size_t>(nx_) * ny_, fill) {}

  double& operator()(int x, int y) { return values[static_cast<std::size_t>(y) * nx + x]; }
  double operator()(int x, int y) const { return values[static_cast<std::size_t>(y) * nx + x]; }
  std::size_t size() const { return values.size(); }
};

/// Inner product ⟨a,b⟩ = Σ conj(a)·b.
Complex inner(const std::vector<Complex>& a, const std::vector<Complex>& b);
double inner(const std::vector<double>& a, const std::vector<double>& b);
double l2norm(const std::vector<Complex>& a);
double l2norm(const std::vector<double>& a);

}  // namespace pcaet
