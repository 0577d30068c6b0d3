#include "pcaet/types.hpp"

#include <cmath>

namespace pcaet {

GridSpec::GridSpec(int nx_, int ny_, double pitch_, double lambda_)
    : nx(nx_), ny(ny_), pitch(pitch_), lambda(lambda_) {
  validate();
}

double GridSpec::freq(int k, int n) const {
  const int signed_k = k < (n + 1) / 2 ? k : k - n;
  return static_cast<double>(signed_k) / (n * pitch);
}

bool GridSpec::same_shape(const GridSpec& o) const {
  return nx == o.nx && ny == o.ny && pitch == o.pitch && lambda == o.lambda;
}

void GridSpec::validate() const {
  if (nx < 2 || ny < 2) throw ConfigError("grid dimensions must be at least 2");
  if (!(pitch > 0.0)) throw ConfigError("grid pitch must be positive");
  if (!(lambda > 0.0)) throw ConfigError("wavelength must be positive");
}

bool WaveField::all_finite() const {
  for (const auto& v : values)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

Complex inner(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  Complex acc(0.0, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
  return acc;
}

double inner(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double l2norm(const std::vector<Complex>& a) {
  double acc = 0.0;
  for (const auto& v : a) acc += std::norm(v);
  return std::sqrt(acc);
}

double l2norm(const std::vector<double>& a) {
  double acc = 0.0;
  for (double v : a) acc += v * v;
  return std::sqrt(acc);
}

}  // namespace pcaet
