#include "pcaet/backprop.hpp"

#include <cmath>

namespace pcaet {

double amplitude_cost(std::span<const Image> measured, std::span<const Image> predicted) {
  if (measured.size() != predicted.size()) throw ConfigError("image count mismatch");
  double cost = 0.0;
  for (std::size_t k = 0; k < measured.size(); ++k) {
    const auto& a = measured[k];
    const auto& b = predicted[k];
    if (a.nx != b.nx || a.ny != b.ny) throw ConfigError("image size mismatch");
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a.values[i] < 0.0 || b.values[i] < 0.0)
        throw NumericalError("negative intensity in amplitude cost");
      const double d = std::sqrt(a.values[i]) - std::sqrt(b.values[i]);
      cost += d * d;
    }
  }
  return cost;
}

double amplitude_cost(const TiltSeries& measured, std::span<const Image> predicted) {
  std::vector<Image> norm;
  norm.reserve(measured.images.size());
  for (std::size_t i = 0; i < measured.plan.tilt_angles.size(); ++i)
    for (std::size_t j = 0; j < measured.plan.defoci.size(); ++j)
      norm.push_back(measured.normalized(i, j));
  return amplitude_cost(norm, predicted);
}

WaveField residual(const WaveField& exit, const Image& measured_amplitude) {
  if (measured_amplitude.nx != exit.grid.nx || measured_amplitude.ny != exit.grid.ny)
    throw ConfigError("measured image does not match exit wave grid");
  WaveField r(exit.grid);
  for (std::size_t i = 0; i < exit.size(); ++i) {
    const Complex psi = exit.values[i];
    const double mag = std::abs(psi);
    const Complex unit = mag < kResidualEpsilon ? Complex(1.0, 0.0) : psi / mag;
    r.values[i] = psi - measured_amplitude.values[i] * unit;
  }
  return r;
}

double exit_cost(const WaveField& exit, const Image& measured_amplitude) {
  double cost = 0.0;
  for (std::size_t i = 0; i < exit.size(); ++i) {
    const double d = std::abs(exit.values[i]) - measured_amplitude.values[i];
    cost += d * d;
  }
  return cost;
}

GradientSlabs backpropagate(std::span<const WaveField> residuals, const MultisliceResult& fwd,
                            const BinnedVolume& w, const InteractionParams& p,
                            std::span<const double> defoci, const TransferFunction& h,
                            bool anti_alias) {
  const GridSpec grid(w.nx, w.ny, w.pitch, p.lambda);
  MultisliceModel model(grid, p, w.n_b, {defoci.begin(), defoci.end()}, h, anti_alias);
  return model.backward(residuals, fwd, w);
}

}  // namespace pcaet
